use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ringshear::io::{parse_config, run_config, ConfigOverrides};

/// Space-time flow solver for periodic translation through a virtual ring mesh.
#[derive(Parser, Debug)]
#[command(version)]
struct Args {
    /// Key-value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// couette, packaging or custom.
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// Resolution factor of the packaging case.
    #[arg(long)]
    scale: Option<f64>,
    /// Output directory for the mesh, snapshots and error series.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Snapshot cadence in steps.
    #[arg(long)]
    write_every: Option<usize>,
    /// Abort when the ring invariants break.
    #[arg(long)]
    check_invariants: bool,
    /// Sequential assembly and factorization (true/false).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    deterministic: Option<bool>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let a = Args::parse();
    let overrides = ConfigOverrides {
        case: a.case,
        steps: a.steps,
        dt: a.dt,
        scale: a.scale,
        out: a.out,
        write_every: a.write_every,
        check_invariants: a.check_invariants,
        deterministic: a.deterministic,
    };
    let cfg = match parse_config(a.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let run = run_config(&cfg, |_, r| {
        let err = r.max_rel_error.map_or(String::from("-"), |e| format!("{e:.3e}"));
        println!(
            "step {:4}  t={:<10.5} update={:<5} newton={:2} |R|={:.3e} active={} rel_err={err}",
            r.step,
            r.time,
            r.did_connectivity_update,
            r.newton_iters,
            r.residual_history.last().copied().unwrap_or(0.0),
            r.n_active_elems,
        );
    });
    match run {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
