use std::process::ExitCode;

use fdrelay::experiment::{format_float, parse_config, run_sweep};
use fdrelay::Error;

fn main() -> ExitCode {
    let config = match parse_config(std::env::args_os()) {
        Ok(c) => c,
        Err(Error::Usage(e)) => e.exit(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let rows = match run_sweep(&config) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!(
        "{:>12} {:>11} {:>12} {:>14} {:>9}",
        config.sweep_variable.name(),
        "mode",
        "mean_R_sec",
        "mean_power",
        "feasible"
    );
    for r in &rows {
        println!(
            "{:>12} {:>11} {:>12} {:>14} {:>9}",
            format_float(r.sweep_value),
            r.mode.name(),
            format_float(r.mean_r_sec),
            format_float(r.mean_total_power),
            format!("{}/{}", r.trials_used, config.trials)
        );
    }
    println!("wrote {}", config.output_path.display());
    ExitCode::SUCCESS
}
