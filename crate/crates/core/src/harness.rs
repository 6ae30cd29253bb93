//! Experiment drivers: null simulations, power curves, runtime benchmarks and
//! the two numeric checks on the asymptotic variance.
//!
//! Replication `r` of n-grid cell `c` draws its data from
//! `split_seed(seed, c · reps + r)`, and method `m` on that data uses
//! `split_seed(data_seed, m + 1)`. All methods in a cell see the same datasets.
//! Replications run on the rayon pool and are collected in index order, so
//! reports do not depend on the thread count.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    block_mmd_test, cross_mmd_test, default_block_size, linear_mmd_test, permutation_mmd_test, PermutationPlan,
};
use crate::data::{compensated_sum, CompensatedSum};
use crate::datagen::{generate, split_seed, GeneratorSpec, GeneratorVariant};
use crate::distfn::{chi2_cdf, ks_distance, sample_variance, std_normal_cdf, EmpiricalSample};
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, ResolvedKernel};
use crate::multikernel::mmmmd_test;
use crate::outcome::{check_alpha, Method, TestOutcome};
use crate::statcore::{compute_mmd_breakdown, estimate_h_moments, gamma_test, mmd_test};
use crate::PairedDataset;

fn default_num_perms() -> usize {
    200
}

/// A test and its parameters, as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum MethodSpec {
    Mmmd {
        kernel: KernelSpec,
    },
    Gamma {
        kernel: KernelSpec,
        gamma: f64,
    },
    Mmmmd {
        kernels: Vec<KernelSpec>,
    },
    MmdPerm {
        kernel: KernelSpec,
        #[serde(default = "default_num_perms")]
        num_perms: usize,
    },
    Block {
        kernel: KernelSpec,
        /// `⌊√n⌋` when absent.
        #[serde(default)]
        block_size: Option<usize>,
    },
    Linear {
        kernel: KernelSpec,
    },
    Cross {
        kernel: KernelSpec,
    },
}

impl MethodSpec {
    pub fn method(&self) -> Method {
        match self {
            MethodSpec::Mmmd { .. } => Method::Mmmd,
            MethodSpec::Gamma { .. } => Method::Gamma,
            MethodSpec::Mmmmd { .. } => Method::Mmmmd,
            MethodSpec::MmdPerm { .. } => Method::MmdPerm,
            MethodSpec::Block { .. } => Method::Block,
            MethodSpec::Linear { .. } => Method::Linear,
            MethodSpec::Cross { .. } => Method::Cross,
        }
    }

    /// Short identifier used in the `method` column of reports.
    pub fn label(&self) -> String {
        let fam = |k: &KernelSpec| k.family.name();
        match self {
            MethodSpec::Mmmd { kernel } | MethodSpec::Linear { kernel } | MethodSpec::Cross { kernel } => {
                format!("{}:{}", self.method(), fam(kernel))
            }
            MethodSpec::Gamma { kernel, gamma } => format!("gamma:{}:{gamma}", fam(kernel)),
            MethodSpec::Mmmmd { kernels } => {
                let names: Vec<&str> = kernels.iter().map(fam).collect();
                format!("mmmmd:{}", names.join("+"))
            }
            MethodSpec::MmdPerm { kernel, num_perms } => format!("mmd-perm:{}:{num_perms}", fam(kernel)),
            MethodSpec::Block { kernel, block_size } => match block_size {
                Some(b) => format!("block:{}:{b}", fam(kernel)),
                None => format!("block:{}", fam(kernel)),
            },
        }
    }

    /// Runs the test; `seed` drives any internal randomness.
    pub fn run(&self, data: &PairedDataset, alpha: f64, seed: u64) -> Result<TestOutcome> {
        match self {
            MethodSpec::Mmmd { kernel } => mmd_test(data, kernel, alpha),
            MethodSpec::Gamma { kernel, gamma } => gamma_test(data, kernel, *gamma, alpha),
            MethodSpec::Mmmmd { kernels } => mmmmd_test(data, kernels, alpha),
            MethodSpec::MmdPerm { kernel, num_perms } => {
                permutation_mmd_test(data, kernel, &PermutationPlan::new(*num_perms, seed)?, alpha)
            }
            MethodSpec::Block { kernel, block_size } => {
                let b = block_size.unwrap_or_else(|| default_block_size(data.len()));
                block_mmd_test(data, kernel, b, alpha)
            }
            MethodSpec::Linear { kernel } => linear_mmd_test(data, kernel, alpha),
            MethodSpec::Cross { kernel } => cross_mmd_test(data, kernel, alpha),
        }
    }

    /// Null CDF of the statistic, where the test has a closed-form one.
    fn null_cdf(&self) -> Option<Box<dyn Fn(f64) -> f64>> {
        match self {
            MethodSpec::MmdPerm { .. } => None,
            MethodSpec::Mmmmd { kernels } => {
                let r = kernels.len() as u32;
                Some(Box::new(move |x| chi2_cdf(r, x).unwrap_or(f64::NAN)))
            }
            _ => Some(Box::new(std_normal_cdf)),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            MethodSpec::Mmmmd { kernels } if kernels.is_empty() => {
                Err(Error::InvalidParameter("mmmmd needs at least one kernel".into()))
            }
            MethodSpec::MmdPerm { num_perms: 0, .. } => Err(Error::InvalidParameter("num_perms must be >= 1".into())),
            MethodSpec::Gamma { gamma, .. } if !(0.0..=1.0).contains(gamma) => Err(Error::InvalidGamma(*gamma)),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator: GeneratorVariant,
    pub n_grid: Vec<usize>,
    pub methods: Vec<MethodSpec>,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    /// CSV destination; the JSON summary goes next to it with a `.json` extension.
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    /// Adds wall-clock columns. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_timings: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        check_alpha(self.alpha)?;
        if self.reps == 0 {
            return Err(Error::InvalidParameter("reps must be >= 1".into()));
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidParameter("n_grid must be nonempty".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("n_grid must be strictly ascending".into()));
        }
        if self.n_grid[0] < 2 {
            return Err(Error::TooFewRows { needed: 2, found: self.n_grid[0] });
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("at least one method is required".into()));
        }
        self.methods.iter().try_for_each(MethodSpec::validate)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Seed of replication `rep` in n-grid cell `cell`.
    pub fn data_seed(&self, cell: usize, rep: usize) -> u64 {
        split_seed(self.seed, (cell * self.reps + rep) as u64)
    }
}

/// One (method, n) cell of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub method: String,
    pub n: usize,
    pub d: usize,
    pub reps: usize,
    pub rejection_rate: f64,
    pub mean_statistic: f64,
    pub degenerate_rate: f64,
    pub ks_distance: Option<f64>,
    pub mean_runtime_ns: Option<f64>,
    pub median_runtime_ns: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub generator: String,
    pub alpha: f64,
    pub seed: u64,
    pub records: Vec<CellRecord>,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn record(&self, label: &str, n: usize) -> Option<&CellRecord> {
        self.records.iter().find(|r| r.method == label && r.n == n)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Writes the CSV to `path` and the JSON summary to `path` with a `.json`
    /// extension. Returns the JSON path.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        File::create(path)?.write_all(self.to_csv_string()?.as_bytes())?;
        let json = path.with_extension("json");
        File::create(&json)?.write_all(self.to_json_string()?.as_bytes())?;
        Ok(json)
    }
}

#[derive(Debug, Clone, Copy)]
struct RepResult {
    statistic: f64,
    reject: bool,
    degenerate: bool,
    runtime_ns: f64,
}

fn run_rep(config: &ExperimentConfig, cell: usize, n: usize, rep: usize) -> Result<Vec<RepResult>> {
    let seed = config.data_seed(cell, rep);
    let data = generate(&GeneratorSpec::new(config.generator, n, seed))?;
    config
        .methods
        .iter()
        .enumerate()
        .map(|(m, spec)| {
            let start = Instant::now();
            let out = spec.run(&data, config.alpha, split_seed(seed, m as u64 + 1))?;
            Ok(RepResult {
                statistic: out.statistic,
                reject: out.reject,
                degenerate: out.degenerate,
                runtime_ns: start.elapsed().as_nanos() as f64,
            })
        })
        .collect()
}

/// `reps` results per method, indexed `[method][rep]`.
fn run_cell(config: &ExperimentConfig, cell: usize, n: usize, parallel: bool) -> Result<Vec<Vec<RepResult>>> {
    let by_rep: Vec<Vec<RepResult>> = if parallel {
        (0..config.reps)
            .into_par_iter()
            .map(|r| run_rep(config, cell, n, r))
            .collect::<Result<_>>()?
    } else {
        (0..config.reps).map(|r| run_rep(config, cell, n, r)).collect::<Result<_>>()?
    };
    Ok((0..config.methods.len())
        .map(|m| by_rep.iter().map(|reps| reps[m]).collect())
        .collect())
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn summarize(
    spec: &MethodSpec,
    n: usize,
    d: usize,
    reps: &[RepResult],
    timings: bool,
    ks: Option<f64>,
) -> CellRecord {
    let count = reps.len() as f64;
    let runtimes: Vec<f64> = reps.iter().map(|r| r.runtime_ns).collect();
    CellRecord {
        method: spec.label(),
        n,
        d,
        reps: reps.len(),
        rejection_rate: reps.iter().filter(|r| r.reject).count() as f64 / count,
        mean_statistic: compensated_sum(reps.iter().map(|r| r.statistic)) / count,
        degenerate_rate: reps.iter().filter(|r| r.degenerate).count() as f64 / count,
        ks_distance: ks,
        mean_runtime_ns: timings.then(|| compensated_sum(runtimes.iter().copied()) / count),
        median_runtime_ns: timings.then(|| median(&runtimes)),
    }
}

fn report(kind: &str, config: &ExperimentConfig, records: Vec<CellRecord>) -> ExperimentReport {
    ExperimentReport {
        kind: kind.into(),
        generator: config.generator.label(),
        alpha: config.alpha,
        seed: config.seed,
        records,
        warnings: Vec::new(),
    }
}

/// Null report plus the raw statistics behind each record.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSimulation {
    pub report: ExperimentReport,
    /// Statistic samples aligned with `report.records`.
    pub samples: Vec<Vec<f64>>,
}

impl NullSimulation {
    /// One line per (method, n, rep) statistic.
    pub fn samples_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "n", "rep", "statistic"])?;
        for (rec, values) in self.report.records.iter().zip(&self.samples) {
            for (r, v) in values.iter().enumerate() {
                w.serialize((&rec.method, rec.n, r, v))?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes the report and, next to it, `<stem>.samples.csv`.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        let json = self.report.write(path)?;
        File::create(path.with_extension("samples.csv"))?.write_all(self.samples_csv_string()?.as_bytes())?;
        Ok(json)
    }
}

/// Runs every method under `P = Q` and records level and KS distance to the
/// statistic's null law.
pub fn simulate_null(config: &ExperimentConfig) -> Result<NullSimulation> {
    config.validate()?;
    if !config.generator.is_null() {
        return Err(Error::NotANullGenerator(config.generator.label()));
    }
    let d = config.generator.dim();
    let mut records = Vec::new();
    let mut samples = Vec::new();
    for (cell, &n) in config.n_grid.iter().enumerate() {
        for (spec, reps) in config.methods.iter().zip(run_cell(config, cell, n, true)?) {
            let stats: Vec<f64> = reps.iter().map(|r| r.statistic).collect();
            let ks = match spec.null_cdf() {
                Some(cdf) => Some(ks_distance(&EmpiricalSample::new(stats.clone())?, cdf)?),
                None => None,
            };
            records.push(summarize(spec, n, d, &reps, config.record_timings, ks));
            samples.push(stats);
        }
    }
    let sim = NullSimulation {
        report: report("simulate-null", config, records),
        samples,
    };
    if let Some(path) = &config.output_path {
        sim.write(path)?;
    }
    Ok(sim)
}

/// Rejection rate of every method at every n.
pub fn power_curve(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let d = config.generator.dim();
    let mut records = Vec::new();
    for (cell, &n) in config.n_grid.iter().enumerate() {
        for (spec, reps) in config.methods.iter().zip(run_cell(config, cell, n, true)?) {
            records.push(summarize(spec, n, d, &reps, config.record_timings, None));
        }
    }
    let rep = report("power", config, records);
    if let Some(path) = &config.output_path {
        rep.write(path)?;
    }
    Ok(rep)
}

/// Wall-clock per method and n, measured on the calling thread only.
pub fn runtime_bench(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let d = config.generator.dim();
    let mut records = Vec::new();
    for (cell, &n) in config.n_grid.iter().enumerate() {
        for (spec, reps) in config.methods.iter().zip(run_cell(config, cell, n, false)?) {
            records.push(summarize(spec, n, d, &reps, true, None));
        }
    }
    let mut rep = report("bench", config, records);
    for spec in &config.methods {
        let label = spec.label();
        let times: Vec<f64> = rep
            .records
            .iter()
            .filter(|r| r.method == label)
            .filter_map(|r| r.median_runtime_ns)
            .collect();
        if times.windows(2).any(|w| w[1] < w[0]) {
            rep.warnings.push(format!("{label}: median runtime is not monotone in n"));
        }
    }
    if let Some(path) = &config.output_path {
        rep.write(path)?;
    }
    Ok(rep)
}

/// Replication count below which the variance ratio is flagged unreliable.
pub const MIN_RELIABLE_REPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltVarianceReport {
    /// `Var_reps(√n (T_n - mmd_sq_hat)) / (5 var_h_hat)`.
    pub ratio: f64,
    pub empirical_variance: f64,
    pub mmd_sq_hat: f64,
    pub var_h_hat: f64,
    pub n: usize,
    pub reps: usize,
    pub aux_m: usize,
    pub reliable: bool,
    pub warning: Option<String>,
}

/// Compares the spread of `T_n` under an alternative with `5 Var(h)`.
///
/// Replication `r` uses `split_seed(seed, r + 1)`; the auxiliary sample uses
/// `split_seed(seed, 0)`.
pub fn alt_variance_check(
    variant: GeneratorVariant,
    k: &ResolvedKernel,
    n: usize,
    reps: usize,
    aux_m: usize,
    seed: u64,
) -> Result<AltVarianceReport> {
    variant.validate()?;
    if variant.is_null() {
        return Err(Error::InvalidParameter(format!(
            "alternative check needs P != Q, got {}",
            variant.label()
        )));
    }
    if reps < 2 {
        return Err(Error::InvalidParameter("alternative check needs reps >= 2".into()));
    }
    let aux = generate(&GeneratorSpec::new(variant, aux_m, split_seed(seed, 0)))?;
    let moments = estimate_h_moments(&aux, k)?;
    if !(moments.var_h_hat > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    let root_n = (n as f64).sqrt();
    let centered: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let data = generate(&GeneratorSpec::new(variant, n, split_seed(seed, r as u64 + 1)))?;
            Ok(root_n * (compute_mmd_breakdown(&data, k).t_n - moments.mmd_sq_hat))
        })
        .collect::<Result<_>>()?;
    let empirical_variance = sample_variance(&centered);
    let reliable = reps >= MIN_RELIABLE_REPS;
    Ok(AltVarianceReport {
        ratio: empirical_variance / (5.0 * moments.var_h_hat),
        empirical_variance,
        mmd_sq_hat: moments.mmd_sq_hat,
        var_h_hat: moments.var_h_hat,
        n,
        reps,
        aux_m,
        reliable,
        warning: (!reliable).then(|| format!("only {reps} replications; ratio is unreliable")),
    })
}

/// `S_n = (1/n)[Σ_i a_i² + 2 Σ_i a_i b_i + Σ_i b_i²]` with `a_i = (i-1)/i` and
/// `b_i = Σ_{j>i} 1/j`, for `i = 1..n`. Tends to 5.
pub fn sn_limit_check(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, found: n });
    }
    let mut tail = CompensatedSum::default();
    let mut total = CompensatedSum::default();
    // Walk i = n..1 so b_i is the running tail sum.
    for i in (1..=n).rev() {
        let fi = i as f64;
        let a = (fi - 1.0) / fi;
        let b = tail.value();
        total.add(a * a + 2.0 * a * b + b * b);
        tail.add(1.0 / fi);
    }
    Ok(total.value() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(generator: GeneratorVariant, methods: Vec<MethodSpec>) -> ExperimentConfig {
        ExperimentConfig {
            generator,
            n_grid: vec![20, 30],
            methods,
            reps: 8,
            alpha: 0.05,
            seed: 42,
            output_path: None,
            record_timings: false,
        }
    }

    fn sn_brute(n: usize) -> f64 {
        let mut s = 0.0;
        for i in 1..=n {
            let a = (i as f64 - 1.0) / i as f64;
            let b: f64 = (i + 1..=n).map(|j| 1.0 / j as f64).sum();
            s += (a + b) * (a + b);
        }
        s / n as f64
    }

    #[test]
    fn sn_small_values() {
        assert!((sn_limit_check(2).unwrap() - 0.25).abs() < 1e-15);
        for n in [3, 10, 57, 300] {
            assert!((sn_limit_check(n).unwrap() - sn_brute(n)).abs() < 1e-12);
        }
        assert!(sn_limit_check(1).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = small_config(GeneratorVariant::StdGaussian { d: 2 }, vec![MethodSpec::Mmmd {
            kernel: KernelSpec::gaussian_median(),
        }]);
        assert!(c.validate().is_ok());
        c.n_grid = vec![30, 20];
        assert!(c.validate().is_err());
        c.n_grid = vec![];
        assert!(c.validate().is_err());
        c.n_grid = vec![20];
        c.reps = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn null_simulation_shape_and_determinism() {
        let c = small_config(GeneratorVariant::StdGaussian { d: 2 }, vec![
            MethodSpec::Mmmd { kernel: KernelSpec::gaussian_median() },
            MethodSpec::MmdPerm { kernel: KernelSpec::gaussian_median(), num_perms: 19 },
        ]);
        let a = simulate_null(&c).unwrap();
        assert_eq!(a.report.records.len(), 4);
        assert_eq!(a.samples.iter().map(Vec::len).collect::<Vec<_>>(), vec![8; 4]);
        assert!(a.report.records[0].ks_distance.is_some());
        assert!(a.report.records[1].ks_distance.is_none());
        let b = simulate_null(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.report.to_csv_string().unwrap(), b.report.to_csv_string().unwrap());
    }

    #[test]
    fn null_simulation_rejects_alternatives() {
        let c = small_config(GeneratorVariant::GaussianMeanShift { d: 2, j: 1, eps: 0.5 }, vec![
            MethodSpec::Mmmd { kernel: KernelSpec::gaussian_median() },
        ]);
        assert!(matches!(simulate_null(&c), Err(Error::NotANullGenerator(_))));
    }

    #[test]
    fn single_rep_ks_is_the_one_point_distance() {
        let mut c = small_config(GeneratorVariant::StdGaussian { d: 2 }, vec![MethodSpec::Mmmd {
            kernel: KernelSpec::gaussian_median(),
        }]);
        c.reps = 1;
        c.n_grid = vec![20];
        let sim = simulate_null(&c).unwrap();
        let f = std_normal_cdf(sim.samples[0][0]);
        assert_eq!(sim.report.records[0].ks_distance, Some(f.max(1.0 - f)));
    }

    #[test]
    fn cells_rerun_in_isolation() {
        let c = small_config(GeneratorVariant::GaussianMeanShift { d: 2, j: 1, eps: 0.5 }, vec![
            MethodSpec::Mmmd { kernel: KernelSpec::gaussian_median() },
        ]);
        let full = run_cell(&c, 1, 30, true).unwrap();
        let seq = run_cell(&c, 1, 30, false).unwrap();
        for r in 0..c.reps {
            let data = generate(&GeneratorSpec::new(c.generator, 30, c.data_seed(1, r))).unwrap();
            let direct = mmd_test(&data, &KernelSpec::gaussian_median(), 0.05).unwrap();
            assert_eq!(full[0][r].statistic, direct.statistic);
            assert_eq!(seq[0][r].statistic, direct.statistic);
        }
    }

    #[test]
    fn timings_only_when_requested() {
        let mut c = small_config(GeneratorVariant::StdGaussian { d: 2 }, vec![MethodSpec::Linear {
            kernel: KernelSpec::gaussian_median(),
        }]);
        let r = power_curve(&c).unwrap();
        assert!(r.records.iter().all(|x| x.mean_runtime_ns.is_none()));
        c.record_timings = true;
        let r = power_curve(&c).unwrap();
        assert!(r.records.iter().all(|x| x.mean_runtime_ns.unwrap() > 0.0));
        let b = runtime_bench(&c).unwrap();
        assert!(b.records.iter().all(|x| x.median_runtime_ns.unwrap() > 0.0));
    }

    #[test]
    fn alt_variance_small_reps_flagged() {
        let v = GeneratorVariant::GaussianMeanShift { d: 1, j: 1, eps: 0.5 };
        let rep = alt_variance_check(v, &ResolvedKernel::linear(), 50, 2, 100, 3).unwrap();
        assert!(rep.ratio.is_finite() && !rep.reliable);
        assert!(rep.warning.is_some());
        assert!(alt_variance_check(GeneratorVariant::StdGaussian { d: 1 }, &ResolvedKernel::linear(), 50, 10, 100, 3)
            .is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let c = small_config(GeneratorVariant::ArCovScale { d: 10, rho: 0.5, scale: 1.3 }, vec![
            MethodSpec::Gamma { kernel: KernelSpec::gaussian_median(), gamma: 0.5 },
            MethodSpec::Block { kernel: KernelSpec::laplace_median(), block_size: None },
        ]);
        let s = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
        let perm: MethodSpec = serde_json::from_str(
            r#"{"method":"mmd-perm","kernel":{"family":"gaussian","bandwidth":"median-heuristic"}}"#,
        )
        .unwrap();
        assert_eq!(perm, MethodSpec::MmdPerm { kernel: KernelSpec::gaussian_median(), num_perms: 200 });
    }
}
