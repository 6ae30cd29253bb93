mod args;
mod input;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use mmmd::harness::{
    alt_variance_check, power_curve, runtime_bench, simulate_null, ExperimentConfig, ExperimentReport, MethodSpec,
};
use mmmd::{GeneratorVariant, KernelFamily, PairedDataset, ResolvedKernel, TestOutcome};
use serde_json::{json, Value};

use args::{CheckCommand, Cli, Command, ExperimentArgs, ExperimentKind, TestArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Lib(#[from] mmmd::Error),
}

/// What a successful run asks the process to exit with.
enum Status {
    Ok,
    CheckFailed,
    Degenerate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::CheckFailed) => ExitCode::from(1),
        Ok(Status::Degenerate) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<Status, CliError> {
    // Validate the subcommand before spinning up any workers.
    match &cli.command {
        Command::Test(a) => a.validate()?,
        Command::SimulateNull(a) | Command::Power(a) | Command::Bench(a) => {
            check_output_dir(a)?;
        }
        Command::Check(_) => {}
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Test(a) => run_test(&a),
        Command::SimulateNull(a) => run_experiment(&a, ExperimentKind::Null),
        Command::Power(a) => run_experiment(&a, ExperimentKind::Power),
        Command::Bench(a) => run_experiment(&a, ExperimentKind::Bench),
        Command::Check(c) => run_check(c),
    }
}

fn check_output_dir(a: &ExperimentArgs) -> Result<(), CliError> {
    let Some(out) = &a.out else { return Ok(()) };
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(CliError::Usage(format!("output directory {} does not exist", parent.display())));
    }
    Ok(())
}

/// JSON has no infinity; an unreachable threshold is written as null.
fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn load_pair(a: &TestArgs) -> Result<PairedDataset, CliError> {
    let x = input::read_matrix(&a.x)?;
    let y = input::read_matrix(&a.y)?;
    if x.ncols() != y.ncols() {
        return Err(CliError::Input(format!(
            "x has {} columns but y has {}",
            x.ncols(),
            y.ncols()
        )));
    }
    let data = if a.method.is_paired() {
        if x.nrows() != y.nrows() {
            return Err(CliError::Input(format!(
                "paired method needs equal sample sizes, got {} and {} rows",
                x.nrows(),
                y.nrows()
            )));
        }
        PairedDataset::new(x, y)?
    } else {
        if x.nrows() != y.nrows() {
            eprintln!(
                "warning: truncating to the common sample size {}",
                x.nrows().min(y.nrows())
            );
        }
        PairedDataset::truncate_to_common(x, y)?
    };
    Ok(match a.shuffle_seed {
        Some(s) => data.shuffle_pairs(s),
        None => data,
    })
}

pub fn outcome_json(out: &TestOutcome, spec: &MethodSpec, data: &PairedDataset, seed: u64, runtime_ns: u128) -> Value {
    let mut obj = json!({
        "method": out.method.name(),
        "n": data.len(),
        "d": data.dim(),
        "statistic": out.statistic,
        "threshold": finite(out.threshold),
        "p_value": out.p_value,
        "reject": out.reject,
        "degenerate": out.degenerate,
        "alpha": out.alpha,
        "seed": seed,
        "runtime_ns": runtime_ns,
    });
    let map = obj.as_object_mut().expect("object literal");
    if let MethodSpec::Mmmmd { kernels } = spec {
        let bws: Vec<Value> = (0..kernels.len())
            .map(|i| out.diagnostics.get(&format!("bandwidth.{i}")).map_or(Value::Null, |&b| json!(b)))
            .collect();
        map.insert("r".into(), json!(kernels.len()));
        map.insert("bandwidths".into(), Value::Array(bws));
    } else {
        map.insert(
            "bandwidth".into(),
            out.diagnostics.get("bandwidth").map_or(Value::Null, |&b| json!(b)),
        );
    }
    obj
}

fn run_test(a: &TestArgs) -> Result<Status, CliError> {
    let data = load_pair(a)?;
    let spec = a.method_spec(Some((data.len(), data.dim())))?;
    let start = Instant::now();
    let out = spec.run(&data, a.alpha, a.seed)?;
    let elapsed = start.elapsed().as_nanos();
    let doc = outcome_json(&out, &spec, &data, a.seed, elapsed);
    println!("{}", serde_json::to_string_pretty(&doc).expect("json values serialize"));
    Ok(if out.degenerate { Status::Degenerate } else { Status::Ok })
}

fn print_records(report: &ExperimentReport) {
    for r in &report.records {
        let mut line = format!(
            "{} n={} reps={} rejection_rate={:.4} mean_statistic={:.4}",
            r.method, r.n, r.reps, r.rejection_rate, r.mean_statistic
        );
        if r.degenerate_rate > 0.0 {
            line += &format!(" degenerate_rate={:.4}", r.degenerate_rate);
        }
        if let Some(ks) = r.ks_distance {
            line += &format!(" ks={ks:.4}");
        }
        if let Some(t) = r.median_runtime_ns {
            line += &format!(" median_ms={:.3}", t / 1e6);
        }
        println!("{line}");
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn run_experiment(a: &ExperimentArgs, kind: ExperimentKind) -> Result<Status, CliError> {
    let cfg: ExperimentConfig = a.to_config(kind)?;
    let report = match kind {
        ExperimentKind::Null => simulate_null(&cfg)?.report,
        ExperimentKind::Power => power_curve(&cfg)?,
        ExperimentKind::Bench => runtime_bench(&cfg)?,
    };
    print_records(&report);
    if let Some(p) = &cfg.output_path {
        eprintln!("wrote {} and {}", p.display(), p.with_extension("json").display());
    }
    Ok(Status::Ok)
}

fn run_check(c: CheckCommand) -> Result<Status, CliError> {
    match c {
        CheckCommand::SnLimit { n, tol } => {
            let s = mmmd::harness::sn_limit_check(n).map_err(|e| CliError::Usage(e.to_string()))?;
            let pass = (s - 5.0).abs() <= tol;
            let doc = json!({ "n": n, "s_n": s, "limit": 5.0, "tol": tol, "pass": pass });
            println!("{}", serde_json::to_string_pretty(&doc).expect("json values serialize"));
            Ok(if pass { Status::Ok } else { Status::CheckFailed })
        }
        CheckCommand::AltVariance {
            d,
            j,
            eps,
            kernel,
            bandwidth,
            n,
            reps,
            aux_m,
            seed,
            tol,
        } => {
            let k = match args::parse_family(&kernel)? {
                KernelFamily::Linear => ResolvedKernel::linear(),
                family => ResolvedKernel::with_bandwidth(family, bandwidth)
                    .map_err(|e| CliError::Usage(e.to_string()))?,
            };
            let variant = GeneratorVariant::GaussianMeanShift { d, j, eps };
            variant.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let rep = alt_variance_check(variant, &k, n, reps, aux_m, seed)?;
            let pass = (rep.ratio - 1.0).abs() <= tol && rep.reliable;
            let mut doc = serde_json::to_value(&rep).expect("report serializes");
            doc["pass"] = json!(pass);
            println!("{}", serde_json::to_string_pretty(&doc).expect("json values serialize"));
            if let Some(w) = &rep.warning {
                eprintln!("warning: {w}");
            }
            Ok(if pass { Status::Ok } else { Status::CheckFailed })
        }
    }
}
