use std::process::ExitCode;

use clap::Parser;
use heatgauss_cli::{run, Args};

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(summary) => {
            for row in summary.report.failures() {
                eprintln!("{row}");
            }
            let total = summary.report.rows.len();
            let failed = summary.report.failures().count();
            println!("{} checks, {} failed; wrote {} files", total, failed, summary.written.len());
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
