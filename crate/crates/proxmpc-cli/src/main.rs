use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use proxmpc_cli::{
    compare_methods, render_comparison_csv, render_trace_csv, run_experiment, selfcheck,
    switch_off_time, ExperimentConfig, Method, RunError, OFF_THRESHOLD,
};

/// Closed-loop benchmark driver for the continuation controller.
///
/// Exit codes: 0 success, 1 configuration error, 2 initialization failure,
/// 3 runtime solver failure.
#[derive(Parser)]
#[command(name = "proxmpc-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Proposed,
    Conventional,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop experiment and write its trace CSV.
    Run {
        /// TOML experiment configuration.
        #[arg(long)]
        config: PathBuf,
        /// Override the configured method.
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Output directory (overrides `out_dir` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the proposed and conventional methods on a shared plant and write
    /// the residual comparison.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the property/oracle suite and print pass/fail per check.
    Check,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}

fn dispatch(cli: Cli) -> Result<(), u8> {
    match cli.command {
        Command::Run {
            config,
            method,
            out,
        } => run_command(&config, method, out),
        Command::Compare { config, out } => compare_command(&config, &out),
        Command::Check => {
            if selfcheck::run_all() {
                Ok(())
            } else {
                Err(3)
            }
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, u8> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("cannot read config {}: {e}", path.display());
        1u8
    })?;
    ExperimentConfig::from_toml(&text).map_err(|e| {
        eprintln!("{e}");
        1u8
    })
}

fn report_run_error(err: &RunError) -> u8 {
    eprintln!("{err}");
    err.exit_code() as u8
}

fn run_command(config: &Path, method: Option<MethodArg>, out: Option<PathBuf>) -> Result<(), u8> {
    let mut cfg = load_config(config)?;
    if let Some(method) = method {
        cfg.method = match method {
            MethodArg::Proposed => Method::Proposed,
            MethodArg::Conventional => Method::Conventional,
        };
    }
    if let Some(out) = out {
        cfg.out_dir = Some(out);
    }
    cfg.validate().map_err(|e| {
        eprintln!("{e}");
        1u8
    })?;

    let trace = run_experiment(&cfg).map_err(|e| report_run_error(&e))?;

    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir).map_err(|e| {
        eprintln!("cannot create {}: {e}", out_dir.display());
        3u8
    })?;
    let trace_path = out_dir.join("trace.csv");
    fs::write(&trace_path, render_trace_csv(&trace)).map_err(|e| {
        eprintln!("cannot write {}: {e}", trace_path.display());
        3u8
    })?;

    let failed_steps = trace.records.iter().filter(|r| r.step_failed).count();
    let final_norm = trace.final_state.amax();
    let last_residual = trace.records.last().map(|r| r.residual_inf).unwrap_or(f64::NAN);
    println!(
        "completed {} steps (dt = {} s); final state inf-norm {final_norm:.6e}; final residual {last_residual:.3e}; {failed_steps} failed steps",
        trace.records.len(),
        cfg.dt
    );
    println!("sparsity report (off threshold |u_i| <= {OFF_THRESHOLD:e}):");
    let channels = trace.records.first().map(|r| r.input.len()).unwrap_or(0);
    for i in 0..channels {
        match switch_off_time(&trace, i) {
            Some(t) => println!("  u{}: off from t = {t:.2} s", i + 1),
            None => println!("  u{}: active through the end of the run", i + 1),
        }
    }
    println!("trace written to {}", trace_path.display());
    Ok(())
}

fn compare_command(config: &Path, out: &Path) -> Result<(), u8> {
    let base = load_config(config)?;
    let proposed = ExperimentConfig {
        method: Method::Proposed,
        epsilon: None,
        ..base.clone()
    };
    let conventional = ExperimentConfig {
        method: Method::Conventional,
        epsilon: Some(base.epsilon.unwrap_or(1e-2)),
        ..base.clone()
    };
    let comparison =
        compare_methods(&proposed, &conventional).map_err(|e| report_run_error(&e))?;

    fs::create_dir_all(out).map_err(|e| {
        eprintln!("cannot create {}: {e}", out.display());
        3u8
    })?;
    let write = |name: &str, contents: String| -> Result<(), u8> {
        let path = out.join(name);
        fs::write(&path, contents).map_err(|e| {
            eprintln!("cannot write {}: {e}", path.display());
            3u8
        })
    };
    write("compare.csv", render_comparison_csv(&comparison))?;
    write("trace_proposed.csv", render_trace_csv(&comparison.first))?;
    write(
        "trace_conventional.csv",
        render_trace_csv(&comparison.second),
    )?;

    println!(
        "median residual ratio (proposed / conventional) over the final half: {:.6e}",
        comparison.median_ratio_final_half
    );
    println!("comparison written to {}", out.display());
    Ok(())
}
