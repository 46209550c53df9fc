use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wgspec::acceptance::{self, Ctx};
use wgspec::commands::{self, RunOptions};
use wgspec::scenario::Scenario;
use wgspec::{Error, Result};
use waveguide_spectral::Execution;

#[derive(Parser)]
#[command(name = "wgspec", version, about = "Forward and inverse spectral experiments on a periodic waveguide")]
struct Cli {
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the scenario's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cache directory for boundary spectral data (default `<out>/cache`).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for the randomized acceptance checks.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Band functions over a uniform theta grid for both potentials.
    Bands,
    /// Compute (or reuse) boundary spectral data for both potentials.
    Forward,
    /// Fourier-difference reconstruction over the frequency grid.
    Reconstruct,
    /// Stability constants against delta0(N).
    Stability,
    /// Run the acceptance suite.
    Selftest {
        /// Print criterion ids and exit.
        #[arg(long)]
        list: bool,
        /// Restrict to these criteria, e.g. `--only A4,A11`.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        /// Override a criterion tolerance, e.g. `--tol A4=1e-20`.
        #[arg(long, value_parser = parse_override)]
        tol: Vec<(String, f64)>,
    },
}

fn parse_override(s: &str) -> std::result::Result<(String, f64), String> {
    let (id, v) = s.split_once('=').ok_or("expected ID=VALUE")?;
    let v: f64 = v.parse().map_err(|e| format!("{v}: {e}"))?;
    Ok((id.to_string(), v))
}

fn execution(jobs: Option<usize>) -> Result<Execution> {
    match jobs {
        Some(0) => Err(Error::Config("--jobs must be >= 1".into())),
        Some(1) => Ok(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(Execution::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Execution::Sequential),
        None => Ok(Execution::default()),
    }
}

fn scenario(cli: &Cli) -> Result<Scenario> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    Scenario::load(path)
}

fn show(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let exec = execution(cli.jobs)?;
    if let Command::Selftest { list, only, tol } = &cli.command {
        if *list {
            for c in acceptance::criteria() {
                println!("{:<4} {}", c.id, c.title);
            }
            return Ok(true);
        }
        let verdicts = acceptance::run(&Ctx { seed: cli.seed, exec }, only, tol)?;
        let mut ok = true;
        for v in &verdicts {
            println!("{}", v.line());
            ok &= v.pass;
        }
        let failed: Vec<&str> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
        if failed.is_empty() {
            println!("selftest: {} criteria passed", verdicts.len());
        } else {
            println!("selftest: failed {}", failed.join(", "));
        }
        return Ok(ok);
    }
    let sc = scenario(cli)?;
    let opts = RunOptions::resolve(&sc, cli.out.clone(), cli.cache.clone(), exec);
    println!("scenario {} ({})", sc.name, sc.hash());
    match cli.command {
        Command::Bands => {
            let (bands, files) = commands::run_bands(&sc, &opts)?;
            for (b, name) in bands.iter().zip(["v1", "v2"]) {
                let r: Vec<String> = b.ranges.iter().map(|(lo, hi)| format!("[{lo:.4}, {hi:.4}]")).collect();
                println!("{name} band ranges: {}", r.join(" "));
            }
            show(&files);
        }
        Command::Forward => {
            let f = commands::run_forward(&sc, &opts)?;
            for (i, name) in ["v1", "v2"].iter().enumerate() {
                println!("{name}: {:?} {} ({} modes)", f.status[i], f.keys[i], [&f.bsd1, &f.bsd2][i].k_keep());
            }
        }
        Command::Reconstruct => {
            let out = commands::run_reconstruct(&sc, &opts)?;
            for o in &out.outcomes {
                match (&o.result, &o.error) {
                    (Some(r), _) => println!(
                        "xi'=({}, {}) j={}: vhat = {:.6e}{:+.6e}i, slope {:.3}",
                        o.xi[0], o.xi[1], o.j, r.vhat.re, r.vhat.im, r.slope
                    ),
                    (None, Some(e)) => println!("xi'=({}, {}) j={}: error: {e}", o.xi[0], o.xi[1], o.j),
                    _ => {}
                }
            }
            show(&out.files);
        }
        Command::Stability => {
            let (out, files) = commands::run_stability(&sc, &opts)?;
            println!("delta1 = {:.6e}, max |vhat| = {:.6e}", out.metrics.delta1, out.report.max_vhat);
            for r in &out.report.rows {
                println!("N={:<3} delta0 = {:.6e}  c = {:?}  pass = {}", r.n, r.delta0, r.c_observed, r.pass);
            }
            show(&files);
            return Ok(out.report.pass);
        }
        Command::Selftest { .. } => unreachable!(),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
