mod fixtures;
mod model;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Result, anyhow, bail};
use clap::{Parser, Subcommand};
use domcheck_core::core::StochasticMatrix;
use domcheck_core::orders::{OrdersError, channel_capacity, full_report};
use domcheck_core::pomdp::{PomdpError, value_iterate, verify_lower_bound};
use domcheck_core::verify::{VerifyError, mse_monte_carlo, psi_exact};

use report::RunReport;

#[derive(Parser)]
#[command(
    name = "domcheck",
    version,
    about = "Sensor dominance checking, filter verification, and 2-state \
             sensing-control bound certification"
)]
struct Cli {
    /// Seed for all randomized computation (Monte-Carlo trials).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker-thread cap; never changes numeric results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Convergence tolerance for iterative solves.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Path for the machine-readable artifact (JSON or CSV depending on the
    /// subcommand); printed to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full dominance-assumption battery on a pair of sensors.
    Check {
        model: PathBuf,
        /// Two sensor names: noisier first.
        #[arg(long, value_delimiter = ',')]
        sensors: Vec<String>,
        /// Largest observation-sequence length for the aggregated
        /// single-crossing check.
        #[arg(long, default_value_t = 3)]
        kmax: usize,
        /// Sequence length for the joint-likelihood filter conditions
        /// (needs a transition matrix in the model).
        #[arg(long, default_value_t = 2)]
        global_k: usize,
    },
    /// Tabulate the hinge-gap curve ψ(λ) by exact enumeration.
    Psi {
        model: PathBuf,
        #[arg(long, value_delimiter = ',')]
        sensors: Vec<String>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 101)]
        lambda_points: usize,
    },
    /// Monte-Carlo mean-squared-error comparison of the two filters.
    Mse {
        model: PathBuf,
        #[arg(long, value_delimiter = ',')]
        sensors: Vec<String>,
        #[arg(long, default_value_t = 5)]
        kmax: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Solve the 2-state sensing-control model and certify the myopic
    /// lower bound.
    Pomdp {
        model: PathBuf,
        #[arg(long, default_value_t = 1001)]
        grid: usize,
    },
    /// Shannon capacity of each sensor channel, in bits.
    Capacity {
        model: PathBuf,
        /// Restrict to one sensor by name.
        #[arg(long)]
        sensor: Option<String>,
    },
    /// Run a built-in reference pair against its expected-verdict table.
    Paper {
        /// Fixture id, or "all".
        example: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // ignore failure: the global pool may already exist under tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// 2 = usage/model error, 3 = resource cap.
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(OrdersError::EnumerationCapExceeded(_)) = cause.downcast_ref() {
            return 3;
        }
        if let Some(VerifyError::EnumerationCapExceeded(_)) = cause.downcast_ref() {
            return 3;
        }
    }
    2
}

fn pair<'m>(
    m: &'m model::Model,
    sensors: &[String],
) -> Result<(&'m StochasticMatrix, &'m StochasticMatrix)> {
    let [a, b] = sensors else {
        bail!("--sensors needs exactly two comma-separated names");
    };
    Ok((m.sensor(a)?, m.sensor(b)?))
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.cmd {
        Cmd::Check { model, sensors, kmax, global_k } => {
            let (m, bytes) = model::load_model(model)?;
            let (b1, b2) = pair(&m, sensors)?;
            let rep = full_report(b1, b2, m.transition.as_ref(), *kmax, *global_k)?;
            let pass = rep.all_applicable_hold();
            println!("dominance check: {} vs {}", sensors[0], sensors[1]);
            println!("  a1 (total positivity, sensor 1) : {}", rep.a1_tp2_sensor1.label());
            println!("  a1 (total positivity, sensor 2) : {}", rep.a1_tp2_sensor2.label());
            println!("  a2 (cdf single crossing)        : {}", rep.a2_single_crossing.label());
            println!("  a3 (boundary products)          : {}", rep.a3_boundary.label());
            println!(
                "  a4 (signed-ratio, {} excluded)   : {}",
                rep.a4_excluded_quadruples,
                rep.a4_signed_ratio.label()
            );
            for (k, v) in &rep.aggregated_sc {
                println!("  aggregated single crossing k={k}  : {}", v.label());
            }
            println!(
                "  blackwell right factorization   : {}",
                if rep.blackwell_right.feasible { "feasible" } else { "infeasible" }
            );
            if let Some(left) = &rep.blackwell_left {
                println!(
                    "  blackwell left factorization    : {}",
                    if left.feasible { "feasible" } else { "infeasible" }
                );
            }
            println!("  capacity sensor 1               : {:.9} bits", rep.capacity1_bits);
            println!("  capacity sensor 2               : {:.9} bits", rep.capacity2_bits);
            println!("  a5 (joint-likelihood rows)      : {}", rep.a5.label());
            println!("  a6 (joint-likelihood minors)    : {}", rep.a6.label());
            println!("verdict: {}", if pass { "pass" } else { "FAIL" });
            let report = RunReport::new("check", cli, &bytes, rep);
            report.emit(cli.out.as_deref())?;
            Ok(if pass { 0 } else { 1 })
        }
        Cmd::Psi { model, sensors, k, lambda_points } => {
            let (m, bytes) = model::load_model(model)?;
            let (b1, b2) = pair(&m, sensors)?;
            let p = m.transition_or_identity();
            let curve = psi_exact(b1, b2, &p, &m.prior, &m.levels, *k, *lambda_points)?;
            let holds = curve.dominance_holds();
            println!(
                "psi sweep k={k}: {} breakpoints, min psi = {:.6e} at lambda = {:.6}",
                curve.lambdas.len(),
                curve.min_value,
                curve.min_lambda
            );
            println!("verdict: {}", if holds { "pass" } else { "FAIL" });
            let csv = report::psi_csv(&curve);
            report::emit_text(cli.out.as_deref(), &csv)?;
            let _ = bytes;
            Ok(if holds { 0 } else { 1 })
        }
        Cmd::Mse { model, sensors, kmax, trials } => {
            let (m, bytes) = model::load_model(model)?;
            let (b1, b2) = pair(&m, sensors)?;
            let p = m.transition_or_identity();
            let mut rows = Vec::new();
            println!("{:>3} {:>14} {:>14} {:>12} {:>12} {:>8}", "k", "mse1", "mse2", "se1", "se2", "z");
            let mut all_ordered = true;
            for k in 1..=*kmax {
                let est = mse_monte_carlo(b1, b2, &p, &m.prior, &m.levels, k, *trials, cli.seed);
                println!(
                    "{:>3} {:>14.8} {:>14.8} {:>12.3e} {:>12.3e} {:>8.2}",
                    k,
                    est.sensor1.value,
                    est.sensor2.value,
                    est.sensor1.standard_error,
                    est.sensor2.standard_error,
                    est.z
                );
                all_ordered &= est.z >= 3.0;
                rows.push((k, est));
            }
            println!(
                "verdict: {} (statistical, one-sided 3-sigma)",
                if all_ordered { "pass" } else { "FAIL" }
            );
            let report = RunReport::new("mse", cli, &bytes, rows);
            report.emit(cli.out.as_deref())?;
            Ok(if all_ordered { 0 } else { 1 })
        }
        Cmd::Pomdp { model, grid } => {
            let (m, bytes) = model::load_model(model)?;
            let pm = m.build_pomdp(None).map_err(usage)?;
            let vg = value_iterate(&pm, *grid, cli.tol).map_err(|e| usage(e.into()))?;
            let bound = verify_lower_bound(&vg);
            println!(
                "value iteration: {} sweeps, final delta {:.3e}, min 2nd diff {:.3e}",
                vg.iterations,
                vg.deltas.last().copied().unwrap_or(0.0),
                vg.min_second_difference()
            );
            for fp in &bound.flagged {
                println!(
                    "  flagged: grid point {} action {} slack {:.3e} (within interpolation tolerance)",
                    fp.grid_index, fp.action, fp.slack
                );
            }
            let pass = bound.verdict.holds() && vg.convexity().holds();
            println!("myopic lower bound: {}", bound.verdict.label());
            println!("value convexity   : {}", vg.convexity().label());
            println!("verdict: {}", if pass { "pass" } else { "FAIL" });
            let csv = report::pomdp_csv(&vg);
            report::emit_text(cli.out.as_deref(), &csv)?;
            let _ = bytes;
            Ok(if pass { 0 } else { 1 })
        }
        Cmd::Capacity { model, sensor } => {
            let (m, bytes) = model::load_model(model)?;
            let targets: Vec<(String, f64)> = match sensor {
                Some(name) => vec![(name.clone(), channel_capacity(m.sensor(name)?))],
                None => m
                    .sensors
                    .iter()
                    .map(|(n, b)| (n.clone(), channel_capacity(b)))
                    .collect(),
            };
            for (name, c) in &targets {
                println!("{name}: {c:.12} bits");
            }
            let report = RunReport::new("capacity", cli, &bytes, targets);
            report.emit(cli.out.as_deref())?;
            Ok(0)
        }
        Cmd::Paper { example } => {
            let list: Vec<fixtures::Fixture> = if example == "all" {
                fixtures::registry()
            } else {
                vec![fixtures::find(example)?]
            };
            let mut all_match = true;
            let mut payload = Vec::new();
            for f in &list {
                let rows = fixtures::run_fixture(f)?;
                println!("{} — {}", f.id, f.title);
                for r in &rows {
                    println!(
                        "  {:<22} expected {:<12} got {:<12} {}",
                        r.check,
                        r.expected,
                        r.actual,
                        if r.matched { "ok" } else { "MISMATCH" }
                    );
                    all_match &= r.matched;
                }
                payload.push((f.id.to_string(), rows));
            }
            println!("verdict: {}", if all_match { "pass" } else { "FAIL" });
            let report = RunReport::new("paper", cli, example.as_bytes(), payload);
            report.emit(cli.out.as_deref())?;
            Ok(if all_match { 0 } else { 1 })
        }
    }
}

/// Wraps model-shape errors so they exit with the usage code.
fn usage(e: anyhow::Error) -> anyhow::Error {
    if e.downcast_ref::<PomdpError>().is_some() {
        anyhow!("invalid model for this command: {e:#}")
    } else {
        e
    }
}
