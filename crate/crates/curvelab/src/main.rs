use anyhow::Result;
use clap::Parser;
use curvelab::config::ExperimentConfig;
use curvelab::{output, run, thread_pool, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let result = thread_pool(cli.threads)?.install(|| run(cli.command, &cfg))?;
    let written = output::write_all(&dir, &result.outcome.artifacts)?;
    print!("{}", result.outcome.report);
    if !result.outcome.report.ends_with('\n') {
        println!();
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(result.exit_ok)
}
