//! Run configuration. Every setting can come from a command-line flag or
//! from a sectioned key-value file (`[simulate]`, `[fit]`, `[lasso]`); a
//! flag wins over the file, the file over the built-in default.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use pds_core::lasso::{LassoConfig, LassoTuning};
use pds_core::montecarlo::{Design, DgpConfig};
use pds_core::selection::Estimator;
use serde::Serialize;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse config file {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid configuration ({} problems):\n  - {}", .0.len(), .0.join("\n  - "))]
    Invalid(Vec<String>),
}

/// Penalty tuning flags shared by both commands.
#[derive(Debug, Clone, Default, Args)]
pub struct LassoArgs {
    /// Slack constant c > 1 of the penalty level [default: 1.1]
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Tail probability of the penalty level [default: 0.1 / ln(max(K*L, n))]
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Rounds of penalty loadings, 1 = initial loadings only [default: 15]
    #[arg(long)]
    pub n_loadings: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    /// Configuration file with [simulate] and [lasso] sections
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Design: low, high or unconfounded
    #[arg(long)]
    pub design: Option<String>,
    /// Sample size
    #[arg(long)]
    pub n: Option<usize>,
    /// Scale of the first-stage noise v [default: 1]
    #[arg(long, allow_negative_numbers = true)]
    pub sigma_v: Option<f64>,
    /// Scale of the outcome noise [default: 1]
    #[arg(long, allow_negative_numbers = true)]
    pub sigma_eps: Option<f64>,
    /// Monte Carlo replications [default: 100]
    #[arg(long)]
    pub reps: Option<usize>,
    /// Base seed [default: 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV; the table and the resolved configuration go to <out>.txt
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated estimators (ids or labels) [default: all]
    #[arg(long)]
    pub estimators: Option<String>,
    /// Treatment degree of the fixed-K estimators [default: floor(n^(1/3))]
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of controls [default: 4, or 2n in the high design]
    #[arg(long)]
    pub dim_z: Option<usize>,
    /// Toeplitz correlation of the controls [default: 0.5]
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    /// Also write the sample of replication 0 as CSV (y, x, z1..zd)
    #[arg(long)]
    pub dump_sample: Option<PathBuf>,
    #[command(flatten)]
    pub lasso: LassoArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct FitArgs {
    /// Configuration file with [fit] and [lasso] sections
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input CSV with a header row
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Outcome column
    #[arg(long)]
    pub y: Option<String>,
    /// Treatment column
    #[arg(long)]
    pub x: Option<String>,
    /// Control columns: comma-separated names or glob patterns such as 'z*'
    #[arg(long)]
    pub z: Option<String>,
    /// Treatment degree: auto13, auto14, bic or an integer [default: auto13]
    #[arg(long)]
    pub k: Option<String>,
    /// Use the extended first-stage dictionary of pairwise sums and differences
    #[arg(long)]
    pub extended_fs: bool,
    /// Conditioning dictionary: raw (the controls) or tensor (Hermite products) [default: raw]
    #[arg(long)]
    pub q_kind: Option<String>,
    /// Total degree of the tensor conditioning dictionary [default: K]
    #[arg(long)]
    pub q_degree: Option<usize>,
    /// Comma-separated estimators [default: post_double, or post_double_set with --k bic]
    #[arg(long)]
    pub estimators: Option<String>,
    /// Seed for estimators with random control subsets [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output report (TOML)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub lasso: LassoArgs,
}

/// How the treatment degree is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KMode {
    Fixed(usize),
    /// `floor(n^{1/3})`.
    AutoN13,
    /// `floor(n^{1/4})`.
    AutoN14,
    /// BIC over the candidate grid, then one degree up.
    Bic,
}

impl fmt::Display for KMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KMode::Fixed(k) => write!(f, "{k}"),
            KMode::AutoN13 => f.write_str("auto13"),
            KMode::AutoN14 => f.write_str("auto14"),
            KMode::Bic => f.write_str("bic"),
        }
    }
}

impl FromStr for KMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto13" => Ok(KMode::AutoN13),
            "auto14" => Ok(KMode::AutoN14),
            "bic" => Ok(KMode::Bic),
            other => match other.parse::<usize>() {
                Ok(k) if k > 0 => Ok(KMode::Fixed(k)),
                _ => Err(format!("k must be auto13, auto14, bic or a positive integer (got '{s}')")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QKind {
    Raw,
    Tensor,
}

impl fmt::Display for QKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QKind::Raw => "raw",
            QKind::Tensor => "tensor",
        })
    }
}

impl FromStr for QKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Ok(QKind::Raw),
            "tensor" => Ok(QKind::Tensor),
            _ => Err(format!("q_kind must be raw or tensor (got '{s}')")),
        }
    }
}

/// A parsed configuration file. A `[resolved]` section, as written in
/// configuration echoes, is informational and ignored.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    table: Table,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
        Ok(Self { table })
    }

    fn check_sections(&self, allowed: &[&str], problems: &mut Vec<String>) {
        for (key, value) in &self.table {
            if key == "resolved" {
                continue;
            }
            if !allowed.contains(&key.as_str()) {
                problems.push(format!("config file: unexpected section or key '{key}'"));
            } else if !value.is_table() {
                problems.push(format!("config file: '{key}' must be a [section]"));
            }
        }
    }

    fn section(&self, name: &'static str) -> Section<'_> {
        Section {
            name,
            table: self.table.get(name).and_then(Value::as_table),
        }
    }
}

struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
}

impl Section<'_> {
    fn check_keys(&self, allowed: &[&str], problems: &mut Vec<String>) {
        for key in self.table.into_iter().flat_map(|t| t.keys()) {
            if !allowed.contains(&key.as_str()) {
                problems.push(format!("config file: unknown key '{key}' in [{}]", self.name));
            }
        }
    }

    fn typed<T>(
        &self,
        key: &str,
        expected: &str,
        problems: &mut Vec<String>,
        conv: impl Fn(&Value) -> Option<T>,
    ) -> Option<T> {
        let value = self.table?.get(key)?;
        let out = conv(value);
        if out.is_none() {
            problems.push(format!("config file: [{}] {key} must be {expected} (got {value})", self.name));
        }
        out
    }

    fn usize(&self, key: &str, problems: &mut Vec<String>) -> Option<usize> {
        self.typed(key, "a nonnegative integer", problems, |v| {
            v.as_integer().and_then(|i| usize::try_from(i).ok())
        })
    }

    fn u64(&self, key: &str, problems: &mut Vec<String>) -> Option<u64> {
        self.typed(key, "a nonnegative integer", problems, |v| {
            v.as_integer().and_then(|i| u64::try_from(i).ok())
        })
    }

    fn f64(&self, key: &str, problems: &mut Vec<String>) -> Option<f64> {
        self.typed(key, "a number", problems, |v| {
            v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
        })
    }

    fn bool(&self, key: &str, problems: &mut Vec<String>) -> Option<bool> {
        self.typed(key, "true or false", problems, Value::as_bool)
    }

    fn string(&self, key: &str, problems: &mut Vec<String>) -> Option<String> {
        self.typed(key, "a string", problems, |v| v.as_str().map(str::to_string))
    }

    /// A string, or an integer rendered as one.
    fn text(&self, key: &str, problems: &mut Vec<String>) -> Option<String> {
        self.typed(key, "a string or an integer", problems, |v| match v {
            Value::String(s) => Some(s.clone()),
            Value::Integer(i) => Some(i.to_string()),
            _ => None,
        })
    }

    /// A comma-separated string or an array of strings, joined by commas.
    fn list(&self, key: &str, problems: &mut Vec<String>) -> Option<String> {
        self.typed(key, "a string or an array of strings", problems, |v| match v {
            Value::String(s) => Some(s.clone()),
            Value::Array(items) => items
                .iter()
                .map(|i| i.as_str().map(str::to_string))
                .collect::<Option<Vec<_>>>()
                .map(|parts| parts.join(",")),
            _ => None,
        })
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(str::to_string).collect()
}

fn parse_estimators(s: &str, problems: &mut Vec<String>) -> Vec<Estimator> {
    let mut out = Vec::new();
    for name in split_list(s) {
        match name.parse::<Estimator>() {
            Ok(e) if !out.contains(&e) => out.push(e),
            Ok(_) => {}
            Err(e) => problems.push(e.to_string()),
        }
    }
    if out.is_empty() {
        problems.push("estimators: the list is empty".to_string());
    }
    out
}

fn resolve_lasso(flags: &LassoArgs, section: &Section<'_>, problems: &mut Vec<String>) -> LassoTuning {
    section.check_keys(&["c", "gamma", "n_loadings"], problems);
    let c = flags.c.or_else(|| section.f64("c", problems));
    let gamma = match flags.gamma {
        Some(g) => Some(g),
        None => match section.table.and_then(|t| t.get("gamma")) {
            Some(Value::String(s)) if s == "auto" => None,
            _ => section.f64("gamma", problems),
        },
    };
    let n_loadings = flags.n_loadings.or_else(|| section.usize("n_loadings", problems));
    if let Some(c) = c {
        if !(c > 1.0 && c.is_finite()) {
            problems.push(format!("c must exceed 1 (got {c})"));
        }
    }
    if let Some(g) = gamma {
        if !(g > 0.0 && g < 1.0) {
            problems.push(format!("gamma must lie in (0, 1) (got {g})"));
        }
    }
    if n_loadings == Some(0) {
        problems.push("n_loadings must be at least 1".to_string());
    }
    LassoTuning { c, gamma, n_loadings }
}

fn load_file(path: Option<&PathBuf>) -> Result<ConfigFile, ConfigError> {
    path.map(|p| ConfigFile::load(p)).transpose().map(Option::unwrap_or_default)
}

fn finish<T>(value: T, problems: Vec<String>) -> Result<T, ConfigError> {
    if problems.is_empty() {
        Ok(value)
    } else {
        Err(ConfigError::Invalid(problems))
    }
}

/// Maximum worker threads from `PDS_THREADS`; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>, ConfigError> {
    match std::env::var("PDS_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(ConfigError::Invalid(vec![format!(
                "PDS_THREADS must be a positive integer (got '{s}')"
            )])),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub dgp: DgpConfig,
    pub reps: usize,
    /// `None` only when `reps` is 0 and only a sample dump was requested.
    pub out: Option<PathBuf>,
    pub estimators: Vec<Estimator>,
    pub k: Option<usize>,
    pub lasso: LassoTuning,
    pub dump_sample: Option<PathBuf>,
}

const SIMULATE_KEYS: [&str; 13] = [
    "design",
    "n",
    "sigma_v",
    "sigma_eps",
    "reps",
    "seed",
    "out",
    "estimators",
    "k",
    "dim_z",
    "rho",
    "dump_sample",
    "threads",
];

impl SimulateConfig {
    pub const DEFAULT_REPS: usize = 100;
    pub const DEFAULT_SEED: u64 = 1;

    pub fn resolve(args: &SimulateArgs) -> Result<Self, ConfigError> {
        let file = load_file(args.config.as_ref())?;
        let mut problems = Vec::new();
        file.check_sections(&["simulate", "lasso"], &mut problems);
        let sec = file.section("simulate");
        sec.check_keys(&SIMULATE_KEYS, &mut problems);

        let design = match args.design.clone().or_else(|| sec.string("design", &mut problems)) {
            Some(s) => match s.parse::<Design>() {
                Ok(d) => Some(d),
                Err(e) => {
                    problems.push(e.to_string());
                    None
                }
            },
            None => {
                problems.push("design is required (low, high or unconfounded)".to_string());
                None
            }
        };
        let n = args.n.or_else(|| sec.usize("n", &mut problems));
        if n.is_none() {
            problems.push("n is required".to_string());
        }
        let sigma_v = args.sigma_v.or_else(|| sec.f64("sigma_v", &mut problems)).unwrap_or(1.0);
        let sigma_eps = args.sigma_eps.or_else(|| sec.f64("sigma_eps", &mut problems)).unwrap_or(1.0);
        let reps = args.reps.or_else(|| sec.usize("reps", &mut problems)).unwrap_or(Self::DEFAULT_REPS);
        let seed = args.seed.or_else(|| sec.u64("seed", &mut problems)).unwrap_or(Self::DEFAULT_SEED);
        let out = args.out.clone().or_else(|| sec.string("out", &mut problems).map(PathBuf::from));
        let dump_sample = args
            .dump_sample
            .clone()
            .or_else(|| sec.string("dump_sample", &mut problems).map(PathBuf::from));
        let estimators = match args.estimators.clone().or_else(|| sec.list("estimators", &mut problems)) {
            Some(s) => parse_estimators(&s, &mut problems),
            None => Estimator::ALL.to_vec(),
        };
        let k = args.k.or_else(|| sec.usize("k", &mut problems));
        if k == Some(0) {
            problems.push("k must be positive".to_string());
        }
        let dim_z = args.dim_z.or_else(|| sec.usize("dim_z", &mut problems));
        let rho = args.rho.or_else(|| sec.f64("rho", &mut problems));
        // Accepted so that configuration echoes load back; PDS_THREADS decides.
        let _ = sec.usize("threads", &mut problems);
        let lasso = resolve_lasso(&args.lasso, &file.section("lasso"), &mut problems);

        if reps == 0 && dump_sample.is_none() {
            problems.push("reps must be positive unless only --dump-sample is wanted".to_string());
        }
        if reps > 0 && out.is_none() {
            problems.push("out is required".to_string());
        }

        let mut dgp = DgpConfig::new(design.unwrap_or(Design::LowDim), n.unwrap_or(0), sigma_v, sigma_eps, seed);
        if let Some(d) = dim_z {
            dgp.dim_z = d;
        }
        if let Some(r) = rho {
            dgp.rho = r;
        }
        if design.is_some() && n.is_some() {
            if let Err(e) = dgp.validate() {
                let msg = e.to_string();
                let msg = msg.strip_prefix("invalid argument: ").unwrap_or(&msg);
                problems.extend(msg.split("; ").map(str::to_string));
            }
        }
        finish(
            Self {
                dgp,
                reps,
                out,
                estimators,
                k,
                lasso,
                dump_sample,
            },
            problems,
        )
    }

    /// The configuration with every default materialized, in the file
    /// format, followed by derived quantities.
    pub fn echo(&self, k: usize, l: usize) -> String {
        let echo = SimulateEcho {
            simulate: SimulateSectionEcho {
                design: self.dgp.design.to_string(),
                n: self.dgp.n,
                sigma_v: self.dgp.sigma_v,
                sigma_eps: self.dgp.sigma_eps,
                dim_z: self.dgp.dim_z,
                rho: self.dgp.rho,
                reps: self.reps,
                seed: self.dgp.seed,
                out: self.out.as_ref().map(|p| p.display().to_string()),
                estimators: self.estimators.iter().map(|e| e.id().to_string()).collect(),
                k,
                dump_sample: self.dump_sample.as_ref().map(|p| p.display().to_string()),
            },
            lasso: LassoEcho::new(&self.lasso),
            resolved: ResolvedEcho::new(&self.lasso, k, l, self.dgp.n),
        };
        toml::to_string(&echo).expect("configuration echo serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub input: PathBuf,
    pub y: String,
    pub x: String,
    /// Names or glob patterns, resolved against the CSV header.
    pub z: Vec<String>,
    pub k_mode: KMode,
    pub extended_fs: bool,
    pub q_kind: QKind,
    pub q_degree: Option<usize>,
    /// `None` selects the default estimator of `k_mode` and `extended_fs`.
    pub estimators: Option<Vec<Estimator>>,
    pub seed: u64,
    pub out: PathBuf,
    pub lasso: LassoTuning,
}

const FIT_KEYS: [&str; 11] = [
    "input",
    "y",
    "x",
    "z",
    "k",
    "extended_fs",
    "q_kind",
    "q_degree",
    "estimators",
    "seed",
    "out",
];

impl FitConfig {
    pub fn resolve(args: &FitArgs) -> Result<Self, ConfigError> {
        let file = load_file(args.config.as_ref())?;
        let mut problems = Vec::new();
        file.check_sections(&["fit", "lasso"], &mut problems);
        let sec = file.section("fit");
        sec.check_keys(&FIT_KEYS, &mut problems);

        let required = |flag: Option<String>, key: &str, problems: &mut Vec<String>| {
            let v = flag.or_else(|| sec.string(key, problems));
            if v.is_none() {
                problems.push(format!("{key} is required"));
            }
            v.unwrap_or_default()
        };
        let input = required(args.input.as_ref().map(|p| p.display().to_string()), "input", &mut problems);
        let y = required(args.y.clone(), "y", &mut problems);
        let x = required(args.x.clone(), "x", &mut problems);
        let out = required(args.out.as_ref().map(|p| p.display().to_string()), "out", &mut problems);
        let z = match args.z.clone().or_else(|| sec.list("z", &mut problems)) {
            Some(s) => {
                let z = split_list(&s);
                if z.is_empty() {
                    problems.push("z: the list is empty".to_string());
                }
                z
            }
            None => {
                problems.push("z is required".to_string());
                Vec::new()
            }
        };
        let k_mode = match args.k.clone().or_else(|| sec.text("k", &mut problems)) {
            Some(s) => s.parse::<KMode>().unwrap_or_else(|e| {
                problems.push(e);
                KMode::AutoN13
            }),
            None => KMode::AutoN13,
        };
        let extended_fs = args.extended_fs || sec.bool("extended_fs", &mut problems).unwrap_or(false);
        let q_kind = match args.q_kind.clone().or_else(|| sec.string("q_kind", &mut problems)) {
            Some(s) => s.parse::<QKind>().unwrap_or_else(|e| {
                problems.push(e);
                QKind::Raw
            }),
            None => QKind::Raw,
        };
        let q_degree = args.q_degree.or_else(|| sec.usize("q_degree", &mut problems));
        if q_degree == Some(0) {
            problems.push("q_degree must be positive".to_string());
        }
        if q_degree.is_some() && q_kind == QKind::Raw {
            problems.push("q_degree only applies to q_kind = tensor".to_string());
        }
        let estimators = args
            .estimators
            .clone()
            .or_else(|| sec.list("estimators", &mut problems))
            .map(|s| parse_estimators(&s, &mut problems));
        if let Some(list) = &estimators {
            for e in list.iter().filter(|e| e.needs_h()) {
                problems.push(format!("{} needs the true control function and cannot run on data", e.label()));
            }
        }
        let seed = args.seed.or_else(|| sec.u64("seed", &mut problems)).unwrap_or(0);
        let lasso = resolve_lasso(&args.lasso, &file.section("lasso"), &mut problems);
        for (name, column) in [("x", &x), ("y", &y)] {
            if z.iter().any(|p| p == column) && !column.is_empty() {
                problems.push(format!("z lists the {name} column '{column}'"));
            }
        }
        if !x.is_empty() && x == y {
            problems.push(format!("x and y name the same column '{x}'"));
        }

        finish(
            Self {
                input: PathBuf::from(input),
                y,
                x,
                z,
                k_mode,
                extended_fs,
                q_kind,
                q_degree,
                estimators,
                seed,
                out: PathBuf::from(out),
                lasso,
            },
            problems,
        )
    }

    /// Estimators to run: the explicit list, or Post-Double (Set when the
    /// degree is chosen by BIC), with the extended first stage if requested.
    pub fn estimator_list(&self) -> Vec<Estimator> {
        if let Some(list) = &self.estimators {
            return list.clone();
        }
        vec![match (self.k_mode, self.extended_fs) {
            (KMode::Bic, false) => Estimator::PostDoubleSet,
            (KMode::Bic, true) => Estimator::PostDoubleSetExt,
            (_, false) => Estimator::PostDouble,
            (_, true) => Estimator::PostDoubleExt,
        }]
    }
}

#[derive(Debug, Serialize)]
struct SimulateEcho {
    simulate: SimulateSectionEcho,
    lasso: LassoEcho,
    resolved: ResolvedEcho,
}

#[derive(Debug, Serialize)]
struct SimulateSectionEcho {
    design: String,
    n: usize,
    sigma_v: f64,
    sigma_eps: f64,
    dim_z: usize,
    rho: f64,
    reps: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<String>,
    estimators: Vec<String>,
    k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    dump_sample: Option<String>,
}

/// Fit settings as echoed in reports.
#[derive(Debug, Clone, Serialize)]
pub struct FitSectionEcho {
    pub input: String,
    pub y: String,
    pub x: String,
    pub z: Vec<String>,
    pub k: String,
    pub extended_fs: bool,
    pub q_kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_degree: Option<usize>,
    pub estimators: Vec<String>,
    pub seed: u64,
    pub out: String,
}

impl FitSectionEcho {
    /// `z` holds the resolved column names; `q_degree` the degree in use.
    pub fn new(cfg: &FitConfig, z: &[String], q_degree: Option<usize>) -> Self {
        Self {
            input: cfg.input.display().to_string(),
            y: cfg.y.clone(),
            x: cfg.x.clone(),
            z: z.to_vec(),
            k: cfg.k_mode.to_string(),
            extended_fs: cfg.extended_fs,
            q_kind: cfg.q_kind.to_string(),
            q_degree,
            estimators: cfg.estimator_list().iter().map(|e| e.id().to_string()).collect(),
            seed: cfg.seed,
            out: cfg.out.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum GammaEcho {
    Fixed(f64),
    /// The literal `"auto"`: the problem-dependent default.
    Auto(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct LassoEcho {
    pub c: f64,
    pub gamma: GammaEcho,
    pub n_loadings: usize,
}

impl LassoEcho {
    pub fn new(t: &LassoTuning) -> Self {
        Self {
            c: t.c.unwrap_or(LassoConfig::DEFAULT_C),
            gamma: t.gamma.map_or_else(|| GammaEcho::Auto("auto".into()), GammaEcho::Fixed),
            n_loadings: t.n_loadings.unwrap_or(LassoConfig::DEFAULT_N_LOADINGS),
        }
    }
}

/// Derived values at the reported degree; informational only.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedEcho {
    pub k: usize,
    pub l: usize,
    pub n: usize,
    pub gamma: f64,
    pub cd_tol: f64,
    pub cd_max_iter: usize,
    pub kkt_tol: f64,
    pub threads: usize,
}

impl ResolvedEcho {
    pub fn new(t: &LassoTuning, k: usize, l: usize, n: usize) -> Self {
        let cfg = t.resolve(k, l, n);
        Self {
            k,
            l,
            n,
            gamma: cfg.gamma,
            cd_tol: cfg.cd_tol,
            cd_max_iter: cfg.cd_max_iter,
            kkt_tol: cfg.kkt_tol,
            threads: rayon::current_num_threads(),
        }
    }
}
