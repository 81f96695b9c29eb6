use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use redist_core::driver::{configure_threads, run_convergence, run_single, RunConfig};
use redist_core::error::Error;

/// Reinitialize a level-set field to a signed distance function on a triangle mesh.
#[derive(Parser, Debug)]
#[command(name = "redist", version)]
struct Args {
    /// Test case: circle, ellipse, xcircles, square or multi.
    #[arg(long)]
    case: Option<String>,
    /// Polynomial order N (1..=7).
    #[arg(long)]
    order: Option<usize>,
    /// Number of refinement levels; more than one runs a convergence sweep.
    #[arg(long)]
    levels: Option<usize>,
    /// First refinement level.
    #[arg(long)]
    start_level: Option<usize>,
    #[arg(long)]
    cfl: Option<f64>,
    /// Band half-width, or `inf` for a global run.
    #[arg(long)]
    band: Option<String>,
    /// Final time, or `auto`.
    #[arg(long)]
    final_time: Option<String>,
    /// Troubled-element detection: auto, on or off.
    #[arg(long)]
    limiter: Option<String>,
    /// Decay exponent below which an element is troubled.
    #[arg(long)]
    threshold: Option<f64>,
    /// Subcell trace order: 1 or 2.
    #[arg(long)]
    fv_order: Option<u32>,
    /// Gmsh or native mesh file instead of the generated square mesh.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Output directory for tables and field files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value configuration file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write the reference operators.
    #[arg(long)]
    dump_operators: bool,
}

fn build_config(args: &Args) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &args.config {
        cfg.apply_file(p)?;
    }
    let flags: [(&str, Option<String>); 12] = [
        ("case", args.case.clone()),
        ("order", args.order.map(|v| v.to_string())),
        ("levels", args.levels.map(|v| v.to_string())),
        ("start-level", args.start_level.map(|v| v.to_string())),
        ("cfl", args.cfl.map(|v| v.to_string())),
        ("band", args.band.clone()),
        ("final-time", args.final_time.clone()),
        ("limiter", args.limiter.clone()),
        ("threshold", args.threshold.map(|v| v.to_string())),
        ("fv-order", args.fv_order.map(|v| v.to_string())),
        ("mesh", args.mesh.as_ref().map(|p| p.display().to_string())),
        ("out", args.out.as_ref().map(|p| p.display().to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    if args.dump_operators {
        cfg.dump_operators = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cfg: &RunConfig) -> Result<(), Error> {
    if cfg.levels > 1 {
        let conv = run_convergence(cfg)?;
        println!("level,h,K,l2,linf,l1,order_l2,order_linf,order_l1");
        for (i, r) in conv.runs.iter().enumerate() {
            let o = |v: &[Option<f64>]| {
                i.checked_sub(1)
                    .and_then(|j| v[j])
                    .map(|x| format!("{x:.3}"))
                    .unwrap_or_default()
            };
            println!(
                "{},{},{},{:.6e},{:.6e},{:.6e},{},{},{}",
                r.level,
                r.h,
                r.k,
                r.report.l2,
                r.report.linf,
                r.report.l1_interface,
                o(&conv.order_l2),
                o(&conv.order_linf),
                o(&conv.order_l1)
            );
        }
    } else {
        let r = run_single(cfg)?;
        println!("level,h,K,l2,linf,l1,steps,troubled,runtime_s");
        println!(
            "{},{},{},{:.6e},{:.6e},{:.6e},{},{},{:.3}",
            r.level,
            r.h,
            r.k,
            r.report.l2,
            r.report.linf,
            r.report.l1_interface,
            r.steps,
            r.troubled.iter().filter(|&&t| t).count(),
            r.runtime_s
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let cfg = match configure_threads().and_then(|_| build_config(&args)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
