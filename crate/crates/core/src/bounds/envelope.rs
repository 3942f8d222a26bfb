use crate::domain::GammaSchedule;
use crate::error::{Error, Result};
use crate::twist::TWIST_CAP;

/// Which Gaussian denominator the envelope carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnvelopeVariant {
    /// t^{1/(2m−1)}.
    #[default]
    Statement,
    /// ((1+s)^{2m} t)^{1/(2m−1)}.
    Proof,
}

impl EnvelopeVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Statement => "statement",
            Self::Proof => "proof",
        }
    }
}

/// c1 ε^{−1} t^{−(N+2γ)/(2m)} d_x^γ d_y^γ exp(−c2 |x−y|^{2m/(2m−1)} / τ^{1/(2m−1)} − s t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEnvelope {
    schedule: GammaSchedule,
    s: f64,
    c1: f64,
    c2: f64,
    variant: EnvelopeVariant,
}

impl BoundEnvelope {
    pub fn new(schedule: GammaSchedule, s: f64, c1: f64, c2: f64) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Parameter(format!("spectral gap must be non-negative, got {s}")));
        }
        if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(Error::Parameter(format!("constants must be positive, got c1={c1}, c2={c2}")));
        }
        if !(schedule.epsilon() > 0.0) {
            return Err(Error::Parameter("schedule has ε ≤ 0".into()));
        }
        Ok(Self { schedule, s, c1, c2, variant: EnvelopeVariant::Statement })
    }

    pub fn with_variant(mut self, variant: EnvelopeVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_c1(mut self, c1: f64) -> Self {
        self.c1 = c1;
        self
    }

    pub fn schedule(&self) -> &GammaSchedule {
        &self.schedule
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn c1(&self) -> f64 {
        self.c1
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }
    pub fn variant(&self) -> EnvelopeVariant {
        self.variant
    }

    /// Natural log of the envelope; −∞ when a boundary factor vanishes.
    pub fn ln_eval(&self, t: f64, x: f64, y: f64, dx: f64, dy: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("envelope time must be positive, got {t}")));
        }
        if !(dx >= 0.0 && dy >= 0.0) {
            return Err(Error::Domain(format!("boundary distances must be non-negative, got {dx}, {dy}")));
        }
        let sch = &self.schedule;
        let m = sch.m() as f64;
        let g = sch.gamma();
        let boundary = if g == 0.0 { 0.0 } else { g * (dx.ln() + dy.ln()) };
        let tau = match self.variant {
            EnvelopeVariant::Statement => t,
            EnvelopeVariant::Proof => (1.0 + self.s).powf(2.0 * m) * t,
        };
        let r = (x - y).abs();
        let gauss = if r == 0.0 { 0.0 } else { self.c2 * r.powf(2.0 * m / (2.0 * m - 1.0)) / tau.powf(1.0 / (2.0 * m - 1.0)) };
        Ok(self.c1.ln() - sch.epsilon().ln() - sch.time_exponent() * t.ln() + boundary - gauss - self.s * t)
    }

    pub fn eval(&self, t: f64, x: f64, y: f64, dx: f64, dy: f64) -> Result<f64> {
        Ok(self.ln_eval(t, x, y, dx, dy)?.exp())
    }
}

pub fn envelope_eval(env: &BoundEnvelope, t: f64, x: f64, y: f64, dx: f64, dy: f64) -> Result<f64> {
    env.eval(t, x, y, dx, dy)
}

/// Twist strength minimizing the exponent c2(1+s)^{2m}λ^{2m}t − λr.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaChoice {
    pub lambda: f64,
    pub saturated: bool,
}

pub fn optimal_lambda(m: usize, c2: f64, s: f64, r: f64, t: f64, length: f64) -> Result<LambdaChoice> {
    if !(r >= 0.0 && t > 0.0 && c2 > 0.0 && length > 0.0) {
        return Err(Error::Parameter(format!("optimal λ needs r ≥ 0, t > 0, c2 > 0, got r={r}, t={t}, c2={c2}")));
    }
    let mf = m as f64;
    let lam = (r / (2.0 * mf * c2 * (1.0 + s).powf(2.0 * mf) * t)).powf(1.0 / (2.0 * mf - 1.0));
    let cap = TWIST_CAP / length;
    Ok(if lam > cap { LambdaChoice { lambda: cap, saturated: true } } else { LambdaChoice { lambda: lam, saturated: false } })
}

/// c2' = (2m−1)(2m)^{−2m/(2m−1)} c2^{−1/(2m−1)}.
pub fn optimized_gaussian_constant(m: usize, c2: f64) -> f64 {
    let mf = m as f64;
    (2.0 * mf - 1.0) * (2.0 * mf).powf(-2.0 * mf / (2.0 * mf - 1.0)) * c2.powf(-1.0 / (2.0 * mf - 1.0))
}

/// Value of c2(1+s)^{2m}λ^{2m}t − λr − st at the optimal λ.
pub fn optimized_exponent(m: usize, c2: f64, s: f64, r: f64, t: f64) -> f64 {
    let mf = m as f64;
    let tau = (1.0 + s).powf(2.0 * mf) * t;
    -optimized_gaussian_constant(m, c2) * r.powf(2.0 * mf / (2.0 * mf - 1.0)) / tau.powf(1.0 / (2.0 * mf - 1.0)) - s * t
}

/// Short-time envelope c ε^{−1} t^{−(N+2γ)/(2m)} d_x^γ d_y^γ.
pub fn short_time_envelope(schedule: &GammaSchedule, c: f64, t: f64, dx: f64, dy: f64) -> f64 {
    c / schedule.epsilon() * t.powf(-schedule.time_exponent()) * (dx * dy).powf(schedule.gamma())
}

/// Long-time envelope c ε^{−1} e^{−st} d_x^γ d_y^γ.
pub fn long_time_envelope(schedule: &GammaSchedule, c: f64, s: f64, t: f64, dx: f64, dy: f64) -> f64 {
    c / schedule.epsilon() * (-s * t).exp() * (dx * dy).powf(schedule.gamma())
}

/// Twisted-kernel envelope c/(ε t^{1−ε}) d_x^γ d_y^γ e^{[c2(1+s)^{2m}λ^{2m} − s]t}.
#[allow(clippy::too_many_arguments)]
pub fn twisted_envelope(schedule: &GammaSchedule, c: f64, c2: f64, s: f64, lambda: f64, t: f64, dx: f64, dy: f64) -> f64 {
    let e = schedule.epsilon();
    let k = crate::twist::twist_scale(s, schedule.m(), lambda);
    c / (e * t.powf(1.0 - e)) * (dx * dy).powf(schedule.gamma()) * ((c2 * k - s) * t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sched(m: usize, g: f64) -> GammaSchedule {
        GammaSchedule::from_gamma(m, 1, g).unwrap()
    }

    #[test]
    fn reference_values() {
        let env = BoundEnvelope::new(sched(1, 0.0), 0.0, 1.0, 0.25).unwrap();
        let v = env.eval(1.0, 0.0, 1.0, 0.3, 0.7).unwrap();
        assert!((v - 2.0 * (-0.25f64).exp()).abs() < 1e-14);
        assert!((v - 1.5576).abs() < 1e-4);
        let t = 1e-3;
        let flat = env.eval(t, 0.5, 0.5, 0.5, 0.5).unwrap();
        assert!((flat - 2.0 * t.powf(-0.5)).abs() < 1e-12 * flat);
        let g = BoundEnvelope::new(sched(1, 0.4), 1.0, 1.0, 0.25).unwrap();
        assert_eq!(g.eval(0.1, 0.0, 0.5, 0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn lambda_reference() {
        let l = optimal_lambda(1, 0.25, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert!((l.lambda - 2.0).abs() < 1e-14 && !l.saturated);
        assert_eq!(optimal_lambda(2, 0.1, 1.0, 0.0, 1.0, 1.0).unwrap().lambda, 0.0);
        let a = optimal_lambda(2, 0.1, 1.0, 0.5, 1.0, 1.0).unwrap().lambda;
        let b = optimal_lambda(2, 0.1, 1.0, 0.5, 2.0, 1.0).unwrap().lambda;
        assert!((b / a - 2f64.powf(-1.0 / 3.0)).abs() < 1e-14);
        assert!(optimal_lambda(1, 1e-6, 0.0, 1.0, 1e-6, 1.0).unwrap().saturated);
    }

    #[test]
    fn optimized_exponent_matches_plug_in() {
        for (m, c2, s, r, t) in [(1usize, 0.25f64, 1.0f64, 0.7f64, 0.3f64), (2, 0.05, 3.0, 0.2, 0.01), (3, 0.5, 0.0, 1.0, 2.0)] {
            let mf = m as f64;
            let lam = (r / (2.0 * mf * c2 * (1.0 + s).powf(2.0 * mf) * t)).powf(1.0 / (2.0 * mf - 1.0));
            let direct = c2 * (1.0 + s).powf(2.0 * mf) * lam.powf(2.0 * mf) * t - lam * r - s * t;
            let closed = optimized_exponent(m, c2, s, r, t);
            assert!((direct - closed).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn short_and_long_meet_at_two_over_s() {
        let sc = sched(2, 0.75);
        let s = 500.0;
        let t = 2.0 / s;
        let ratio = short_time_envelope(&sc, 1.0, t, 0.1, 0.2) / long_time_envelope(&sc, 1.0, s, t, 0.1, 0.2);
        assert!((ratio - t.powf(-sc.time_exponent()) * 2f64.exp()).abs() < 1e-9 * ratio);
        let tw = twisted_envelope(&sc, 1.0, 0.1, s, 0.0, t, 0.1, 0.2);
        assert!((tw - long_time_envelope(&sc, 1.0, s, t, 0.1, 0.2) * t.powf(-sc.time_exponent())).abs() < 1e-9 * tw);
    }

    proptest! {
        #[test]
        fn envelope_linear_in_c1(c1 in 0.01f64..100.0, t in 1e-4f64..10.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let sc = sched(2, 0.75);
            let a = BoundEnvelope::new(sc, 2.0, 1.0, 0.3).unwrap();
            let b = a.with_c1(c1);
            let (dx, dy) = (x.min(1.0 - x), y.min(1.0 - y));
            let ea = a.eval(t, x, y, dx, dy).unwrap();
            let eb = b.eval(t, x, y, dx, dy).unwrap();
            prop_assert!((eb - c1 * ea).abs() <= 1e-12 * eb.abs().max(1e-300));
        }

        #[test]
        fn proof_variant_is_weaker_gaussian(t in 1e-4f64..1.0, r in 0.0f64..1.0, s in 0.0f64..10.0) {
            let sc = sched(1, 0.2);
            let a = BoundEnvelope::new(sc, s, 1.0, 0.25).unwrap();
            let b = a.with_variant(EnvelopeVariant::Proof);
            prop_assert!(b.ln_eval(t, 0.0, r, 0.5, 0.5).unwrap() >= a.ln_eval(t, 0.0, r, 0.5, 0.5).unwrap() - 1e-12);
        }
    }
}
