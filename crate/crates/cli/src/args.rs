use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use mmmd::harness::{ExperimentConfig, MethodSpec};
use mmmd::{BandwidthRule, GeneratorVariant, KernelFamily, KernelSpec};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "mmmd", version, about = "Martingale MMD two-sample tests and simulations")]
pub struct Cli {
    /// Worker threads for replications; results do not depend on it.
    #[arg(long, global = true, env = "MMD_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one test on two CSV samples and print the outcome as JSON.
    Test(TestArgs),
    /// Simulate the null distribution of each method's statistic.
    SimulateNull(ExperimentArgs),
    /// Estimate rejection rates over a grid of sample sizes.
    Power(ExperimentArgs),
    /// Time each method over a grid of sample sizes on one thread.
    Bench(ExperimentArgs),
    /// Numeric checks on the asymptotic variance.
    #[command(subcommand)]
    Check(CheckCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Mmmd,
    Gamma,
    Mmmmd,
    MmdPerm,
    Block,
    Linear,
    Cross,
}

impl MethodArg {
    /// Methods whose statistic needs `x[i]` matched with `y[i]`.
    pub fn is_paired(self) -> bool {
        matches!(self, MethodArg::Mmmd | MethodArg::Gamma | MethodArg::Mmmmd)
    }
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// gaussian, laplace or linear.
    #[arg(long, default_value = "gaussian")]
    pub kernel: String,
    /// `median`, a positive number, or `minimax` (Gaussian only, needs --beta).
    #[arg(long, default_value = "median")]
    pub bandwidth: String,
    /// Smoothness for the minimax Gaussian rate.
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Kernel ensemble for mmmmd, e.g. `gaussian:1,gaussian:2,gaussian:4`;
    /// each number multiplies --bandwidth-base.
    #[arg(long)]
    pub kernels: Option<String>,
    /// `median` or a positive number.
    #[arg(long, default_value = "median", requires = "kernels")]
    pub bandwidth_base: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub num_perms: Option<usize>,
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Seed for the permutation test.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shuffle the pairs with this seed before testing.
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataArg {
    StdGaussian,
    T,
    MeanShift,
    ArCov,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("flags").multiple(true)))]
pub struct ExperimentArgs {
    /// JSON experiment config; excludes the flags that describe an experiment.
    #[arg(long, conflicts_with = "flags")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, group = "flags")]
    pub data: Option<DataArg>,
    #[arg(long, group = "flags")]
    pub d: Option<usize>,
    /// Number of shifted coordinates for mean-shift data.
    #[arg(long, group = "flags")]
    pub j: Option<usize>,
    #[arg(long, group = "flags")]
    pub eps: Option<f64>,
    #[arg(long, group = "flags")]
    pub df: Option<f64>,
    #[arg(long, group = "flags")]
    pub rho: Option<f64>,
    #[arg(long, group = "flags")]
    pub scale: Option<f64>,
    /// Sample sizes, comma-separated and ascending.
    #[arg(long, value_delimiter = ',', group = "flags")]
    pub n: Vec<usize>,
    /// Comma-separated: mmmd, gamma:<γ>, mmmmd, mmd-perm, block, linear, cross.
    #[arg(long, value_delimiter = ',', group = "flags")]
    pub methods: Vec<String>,
    #[arg(long, group = "flags")]
    pub kernel: Option<String>,
    /// `median` or a positive number.
    #[arg(long, group = "flags")]
    pub bandwidth: Option<String>,
    #[arg(long, group = "flags")]
    pub kernels: Option<String>,
    #[arg(long, group = "flags")]
    pub num_perms: Option<usize>,
    #[arg(long, group = "flags")]
    pub reps: Option<usize>,
    #[arg(long, group = "flags")]
    pub alpha: Option<f64>,
    #[arg(long, group = "flags")]
    pub seed: Option<u64>,
    /// CSV output; a JSON summary is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall-clock columns.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum CheckCommand {
    /// Evaluate the deterministic variance constant S_n, which tends to 5.
    SnLimit {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
    },
    /// Compare the spread of T_n under a mean shift with 5 Var(h).
    AltVariance {
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 1)]
        j: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// gaussian or linear; the Gaussian kernel uses a fixed bandwidth.
        #[arg(long, default_value = "gaussian")]
        kernel: String,
        #[arg(long, default_value_t = 1.0)]
        bandwidth: f64,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 5000)]
        aux_m: usize,
        #[arg(long, default_value_t = 5000)]
        seed: u64,
        #[arg(long, default_value_t = 0.3)]
        tol: f64,
    },
}

pub fn parse_family(s: &str) -> Result<KernelFamily, CliError> {
    s.parse().map_err(|e: mmmd::Error| CliError::Usage(e.to_string()))
}

fn parse_positive(what: &str, s: &str) -> Result<f64, CliError> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(CliError::Usage(format!("{what} must be `median` or a positive number, got '{s}'"))),
    }
}

/// Bandwidth rule for a single kernel; `minimax` needs the data shape.
pub fn bandwidth_rule(
    family: KernelFamily,
    bandwidth: &str,
    beta: Option<f64>,
    shape: Option<(usize, usize)>,
) -> Result<BandwidthRule, CliError> {
    match bandwidth {
        "median" => Ok(BandwidthRule::MedianHeuristic),
        "minimax" => {
            if family != KernelFamily::Gaussian {
                return Err(CliError::Usage("--bandwidth minimax requires --kernel gaussian".into()));
            }
            let beta = beta.ok_or_else(|| CliError::Usage("--bandwidth minimax requires --beta".into()))?;
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(CliError::Usage(format!("--beta must be positive, got {beta}")));
            }
            let (n, d) = shape.ok_or_else(|| CliError::Usage("--bandwidth minimax is only available for `test`".into()))?;
            Ok(BandwidthRule::MinimaxGaussian { beta, n, d })
        }
        other => parse_positive("--bandwidth", other).map(BandwidthRule::Fixed),
    }
}

/// Parses `family:multiple,...` against a base bandwidth.
pub fn kernel_ensemble(list: &str, base: &str) -> Result<Vec<KernelSpec>, CliError> {
    let base = match base {
        "median" => None,
        other => Some(parse_positive("--bandwidth-base", other)?),
    };
    let specs: Vec<KernelSpec> = list
        .split(',')
        .map(|item| {
            let item = item.trim();
            let (fam, mult) = item.split_once(':').unwrap_or((item, "1"));
            let family = parse_family(fam)?;
            if family == KernelFamily::Linear {
                return Ok(KernelSpec::linear());
            }
            let mult = parse_positive("kernel multiple", mult)?;
            let rule = match base {
                None => BandwidthRule::MedianMultiple(mult),
                Some(b) => BandwidthRule::Fixed(mult * b),
            };
            Ok(KernelSpec::new(family, rule))
        })
        .collect::<Result<_, CliError>>()?;
    if specs.is_empty() {
        return Err(CliError::Usage("--kernels is empty".into()));
    }
    Ok(specs)
}

impl TestArgs {
    /// Checks flag combinations that do not depend on the data.
    pub fn validate(&self) -> Result<(), CliError> {
        let m = self.method;
        let only = |set: bool, flag: &str, method: MethodArg| {
            if set && m != method {
                Err(CliError::Usage(format!("{flag} only applies to --method {:?}", method).to_lowercase()))
            } else {
                Ok(())
            }
        };
        only(self.kernels.is_some(), "--kernels", MethodArg::Mmmmd)?;
        only(self.gamma.is_some(), "--gamma", MethodArg::Gamma)?;
        only(self.num_perms.is_some(), "--num-perms", MethodArg::MmdPerm)?;
        only(self.block_size.is_some(), "--block-size", MethodArg::Block)?;
        if m == MethodArg::Gamma && self.gamma.is_none() {
            return Err(CliError::Usage("--method gamma requires --gamma".into()));
        }
        if m == MethodArg::Mmmmd && self.kernels.is_none() {
            return Err(CliError::Usage("--method mmmmd requires --kernels".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Usage(format!("--alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if let Some(g) = self.gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(CliError::Usage(format!("--gamma must lie in [0, 1], got {g}")));
            }
        }
        if self.num_perms == Some(0) || self.block_size == Some(0) {
            return Err(CliError::Usage("--num-perms and --block-size must be >= 1".into()));
        }
        // Resolve everything that can fail without the data.
        self.method_spec(None)?;
        Ok(())
    }

    /// `shape` is `(n, d)` of the data, needed only by the minimax bandwidth.
    pub fn method_spec(&self, shape: Option<(usize, usize)>) -> Result<MethodSpec, CliError> {
        if let Some(list) = &self.kernels {
            return Ok(MethodSpec::Mmmmd {
                kernels: kernel_ensemble(list, &self.bandwidth_base)?,
            });
        }
        let family = parse_family(&self.kernel.kernel)?;
        let kernel = if family == KernelFamily::Linear {
            KernelSpec::linear()
        } else {
            // Before the data is read, validate minimax with a placeholder shape.
            let shape = shape.or(Some((2, 1)));
            KernelSpec::new(family, bandwidth_rule(family, &self.kernel.bandwidth, self.kernel.beta, shape)?)
        };
        Ok(match self.method {
            MethodArg::Mmmd => MethodSpec::Mmmd { kernel },
            MethodArg::Gamma => MethodSpec::Gamma {
                kernel,
                gamma: self.gamma.unwrap_or(0.5),
            },
            MethodArg::Mmmmd => unreachable!("mmmmd is built from --kernels"),
            MethodArg::MmdPerm => MethodSpec::MmdPerm {
                kernel,
                num_perms: self.num_perms.unwrap_or(200),
            },
            MethodArg::Block => MethodSpec::Block {
                kernel,
                block_size: self.block_size,
            },
            MethodArg::Linear => MethodSpec::Linear { kernel },
            MethodArg::Cross => MethodSpec::Cross { kernel },
        })
    }
}

/// Which experiment the flags describe; sets the default data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Null,
    Power,
    Bench,
}

impl ExperimentArgs {
    /// Loads `--config` or assembles a config from flags, then applies
    /// `--out` and `--timings`.
    pub fn to_config(&self, kind: ExperimentKind) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
            None => self.config_from_flags(kind)?,
        };
        if self.out.is_some() {
            cfg.output_path = self.out.clone();
        }
        cfg.record_timings |= self.timings;
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if kind == ExperimentKind::Null && !cfg.generator.is_null() {
            return Err(CliError::Usage(format!(
                "simulate-null needs identical distributions, got {}",
                cfg.generator.label()
            )));
        }
        Ok(cfg)
    }

    fn config_from_flags(&self, kind: ExperimentKind) -> Result<ExperimentConfig, CliError> {
        let data = self.data.unwrap_or(match kind {
            ExperimentKind::Null => DataArg::StdGaussian,
            ExperimentKind::Power | ExperimentKind::Bench => DataArg::MeanShift,
        });
        let d = self.d.unwrap_or(10);
        let generator = match data {
            DataArg::StdGaussian => GeneratorVariant::StdGaussian { d },
            DataArg::T => GeneratorVariant::MultivariateT {
                d,
                df: self.df.unwrap_or(10.0),
            },
            DataArg::MeanShift => GeneratorVariant::GaussianMeanShift {
                d,
                j: self.j.unwrap_or(d.min(5)),
                eps: self.eps.unwrap_or(0.3),
            },
            DataArg::ArCov => GeneratorVariant::ArCovScale {
                d,
                rho: self.rho.unwrap_or(0.5),
                scale: self.scale.unwrap_or(1.3),
            },
        };
        let n_grid = if self.n.is_empty() {
            match kind {
                ExperimentKind::Null => vec![200],
                ExperimentKind::Power => vec![100, 200, 300, 400, 500],
                ExperimentKind::Bench => vec![250, 500, 1000, 2000],
            }
        } else {
            self.n.clone()
        };
        let family = parse_family(self.kernel.as_deref().unwrap_or("gaussian"))?;
        let kernel = if family == KernelFamily::Linear {
            KernelSpec::linear()
        } else {
            KernelSpec::new(family, bandwidth_rule(family, self.bandwidth.as_deref().unwrap_or("median"), None, None)?)
        };
        let default_methods = match kind {
            ExperimentKind::Null => vec!["mmmd".to_owned()],
            ExperimentKind::Power | ExperimentKind::Bench => {
                ["mmmd", "mmd-perm", "block", "linear", "cross"].map(String::from).to_vec()
            }
        };
        let names = if self.methods.is_empty() {
            &default_methods
        } else {
            &self.methods
        };
        let methods = names
            .iter()
            .map(|name| self.method_from_name(name.trim(), kernel))
            .collect::<Result<_, _>>()?;
        Ok(ExperimentConfig {
            generator,
            n_grid,
            methods,
            reps: self.reps.unwrap_or(match kind {
                ExperimentKind::Bench => 5,
                _ => 200,
            }),
            alpha: self.alpha.unwrap_or(0.05),
            seed: self.seed.unwrap_or(0),
            output_path: None,
            record_timings: false,
        })
    }

    fn method_from_name(&self, name: &str, kernel: KernelSpec) -> Result<MethodSpec, CliError> {
        let (head, param) = match name.split_once(':') {
            Some((h, p)) => (h, Some(p)),
            None => (name, None),
        };
        let spec = match head {
            "mmmd" => MethodSpec::Mmmd { kernel },
            "gamma" => {
                let g = param
                    .ok_or_else(|| CliError::Usage("gamma needs a value, e.g. gamma:0.5".into()))?
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("bad gamma in '{name}'")))?;
                MethodSpec::Gamma { kernel, gamma: g }
            }
            "mmmmd" => MethodSpec::Mmmmd {
                kernels: kernel_ensemble(self.kernels.as_deref().unwrap_or("gaussian:1,gaussian:2,gaussian:4"), "median")?,
            },
            "mmd-perm" => MethodSpec::MmdPerm {
                kernel,
                num_perms: self.num_perms.unwrap_or(200),
            },
            "block" => MethodSpec::Block { kernel, block_size: None },
            "linear" => MethodSpec::Linear { kernel },
            "cross" => MethodSpec::Cross { kernel },
            other => return Err(CliError::Usage(format!("unknown method '{other}'"))),
        };
        if param.is_some() && head != "gamma" {
            return Err(CliError::Usage(format!("method '{head}' takes no parameter")));
        }
        Ok(spec)
    }
}
