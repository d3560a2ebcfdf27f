//! Experiment CLI: evaluate recovery bounds, run configured experiments, and
//! emit CSV results.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use seqsparse::bounds;
use seqsparse::config::{self, ParsedExperiment};
use seqsparse::distributions::DistributionPair;
use seqsparse::harness;
use seqsparse::report::{emit_report, fmt_sig6, ReportRow};

#[derive(Parser)]
#[command(
    name = "seqsparse",
    about = "Sequential procedures for exact sparse support recovery",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the samples-per-dimension bounds for a problem instance
    Bounds {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        s: u64,
        /// Distribution family: gaussian or bernoulli
        #[arg(long, default_value = "gaussian")]
        family: String,
        /// Mean shift of the Gaussian alternative
        #[arg(long)]
        theta: Option<f64>,
        /// Null success probability (bernoulli)
        #[arg(long)]
        p0: Option<f64>,
        /// Alternative success probability (bernoulli)
        #[arg(long)]
        p1: Option<f64>,
        /// Target family-wise error rate for the finite-sample rows
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        /// SPRT threshold margin
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Thresholding discard fraction
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
    },
    /// Run the experiments in a config file and write results
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override every experiment's base seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override every experiment's trial count
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Run every experiment in a config file (grids expanded), no overrides
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bounds {
            n,
            s,
            family,
            theta,
            p0,
            p1,
            delta,
            epsilon,
            rho,
        } => cmd_bounds(n, s, &family, theta, p0, p1, delta, epsilon, rho),
        Command::Run {
            config,
            out,
            seed,
            trials,
        } => cmd_run(&config, &out, seed, trials),
        Command::Sweep { config, out } => cmd_run(&config, &out, None, None),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

/// `SEQSPARSE_THREADS` caps the worker count; results are identical for any
/// value, so this is purely a resource control.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("SEQSPARSE_THREADS") {
        match v.parse::<usize>() {
            Ok(k) if k >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => eprintln!("warning: ignoring invalid SEQSPARSE_THREADS value '{v}'"),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_bounds(
    n: u64,
    s: u64,
    family: &str,
    theta: Option<f64>,
    p0: Option<f64>,
    p1: Option<f64>,
    delta: f64,
    epsilon: f64,
    rho: f64,
) -> Result<(), String> {
    if s == 0 || 2 * s > n {
        return Err(format!("need 1 <= s <= n/2, got n = {n}, s = {s}"));
    }
    let pair = match family {
        "gaussian" | "gaussian_shift" => {
            let theta = theta.ok_or("gaussian family requires --theta")?;
            DistributionPair::gaussian_shift(theta).map_err(|e| e.to_string())?
        }
        "bernoulli" | "bernoulli_pair" => {
            let p0 = p0.ok_or("bernoulli family requires --p0")?;
            let p1 = p1.ok_or("bernoulli family requires --p1")?;
            DistributionPair::bernoulli_pair(p0, p1).map_err(|e| e.to_string())?
        }
        other => return Err(format!("unknown family '{other}'")),
    };
    let stats = pair.llr_stats().map_err(|e| e.to_string())?;
    let (nf, sf) = (n as f64, s as f64);

    println!("bounds for n = {n}, s = {s}, {pair:?}");
    println!(
        "  divergences: d01 = {}, d10 = {}, var01 = {} (nats)",
        fmt_sig6(stats.d01),
        fmt_sig6(stats.d10),
        fmt_sig6(stats.var01)
    );

    // necessary, sequential
    if s == 1 {
        println!("  sequential necessary rate:      0 (degenerate: a single support component needs no scaling)");
    } else {
        let rate = bounds::seq_rate(sf, &stats).map_err(|e| e.to_string())?;
        println!(
            "  sequential necessary rate:      m >= {} per dimension (ln s / d01)",
            fmt_sig6(rate)
        );
    }
    let finite = bounds::seq_lower_bound(sf, delta, &stats).map_err(|e| e.to_string())?;
    println!(
        "    finite-sample: m <= {} forces fwer >= {} (delta = {})",
        fmt_sig6(finite.m_required),
        fmt_sig6(finite.pe_floor),
        fmt_sig6(delta)
    );

    // necessary, non-sequential
    let nrate = bounds::nonseq_rate(nf, &stats).map_err(|e| e.to_string())?;
    println!(
        "  non-sequential necessary rate:  m >= {} per dimension (ln n / d10)",
        fmt_sig6(nrate)
    );

    // sufficient, SPRT
    let th = bounds::sprt_thresholds(nf, sf, epsilon).map_err(|e| e.to_string())?;
    let sprt_rate = if s == 1 {
        0.0
    } else {
        (1.0 + epsilon) * sf.ln() / stats.d01
    };
    println!(
        "  sprt sufficient rate:           m > {} per dimension (epsilon = {}, log thresholds {} / {})",
        fmt_sig6(sprt_rate),
        fmt_sig6(epsilon),
        fmt_sig6(th.log_gamma_l),
        fmt_sig6(th.log_gamma_u)
    );

    // sufficient, sequential thresholding
    if pair.theta().is_some() {
        let budget = bounds::simple_st_budget(nf, sf, delta, pair.theta().unwrap())
            .map_err(|e| e.to_string())?;
        println!(
            "  simple thresholding budget:     m > {} (next even: {})",
            fmt_sig6(budget),
            bounds::round_up_to_even(budget)
        );
    }
    let k_steps = bounds::ceil_log(1.0 / (1.0 - rho), 2.0 * (nf - sf) / delta);
    match bounds::st_cn(nf, sf, 0.0, delta, rho, k_steps, &stats) {
        Ok(st) => println!(
            "  general thresholding budget:    m >= {} (c_n = {}, rho = {}, K = {})",
            fmt_sig6(st.sufficient_m),
            fmt_sig6(st.c_n),
            fmt_sig6(rho),
            k_steps
        ),
        Err(e) => println!(
            "  general thresholding budget:    not available at rho = {}, K = {k_steps}: {e}",
            fmt_sig6(rho)
        ),
    }
    Ok(())
}

fn cmd_run(
    config_path: &PathBuf,
    out_dir: &PathBuf,
    seed: Option<u64>,
    trials: Option<u64>,
) -> Result<(), String> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| format!("cannot read {}: {e}", config_path.display()))?;
    let mut experiments = config::parse_config(&text).map_err(|e| e.to_string())?;
    for ParsedExperiment { spec, .. } in experiments.iter_mut() {
        if let Some(seed) = seed {
            spec.base_seed = seed;
        }
        if let Some(trials) = trials {
            spec.trials = trials;
        }
        spec.validate().map_err(|e| e.to_string())?;
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for exp in &experiments {
        print!("running {} ({} trials) ... ", exp.name, exp.spec.trials);
        use std::io::Write as _;
        std::io::stdout().flush().ok();
        match harness::run_experiment(&exp.spec) {
            Ok(report) => {
                println!(
                    "fwer {} +- {}",
                    fmt_sig6(report.fwer_hat),
                    fmt_sig6(report.fwer_halfwidth)
                );
                rows.push(ReportRow::new(&exp.name, &exp.spec, &report));
            }
            Err(e) => {
                println!("failed");
                failures.push(format!("{}: {e}", exp.name));
            }
        }
    }
    let (csv, summary) = emit_report(&rows, out_dir).map_err(|e| e.to_string())?;
    println!("wrote {} and {}", csv.display(), summary.display());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(format!(
            "{} of {} experiment(s) failed:\n  {}",
            failures.len(),
            experiments.len(),
            failures.join("\n  ")
        ))
    }
}
