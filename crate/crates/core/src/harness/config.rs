use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command as ClapCommand};

use crate::bandit::{BanditConfig, SweepAxis, SweepSpec};
use crate::error::{BanditError, HarnessError};
use crate::parallel::default_workers;
use crate::tabular_rl::{AgentConfig, Algorithm, EpsilonMode};

type Result<T> = std::result::Result<T, HarnessError>;

const COMMON_KEYS: &[&str] = &["seed", "trials", "workers", "out"];
const BANDIT_KEYS: &[&str] = &[
    "visitors",
    "ads",
    "rate-low",
    "rate-high",
    "candidate-fraction",
    "sweep",
    "values",
];
const AGENT_KEYS: &[&str] = &[
    "grid-n",
    "gamma",
    "steps",
    "k",
    "algo",
    "update-mode",
    "epsilon",
    "lr-exponent",
    "probe-interval",
];
const SELFTEST_KEYS: &[&str] = &["seed", "trials"];

#[derive(Debug, Clone, PartialEq)]
pub struct GridworldParams {
    pub side: usize,
    pub trials: usize,
    pub probe_interval: usize,
    pub agents: Vec<AgentConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceParams {
    /// Side of the grid world used next to the three-state MDP.
    pub grid_side: usize,
    pub trials: usize,
    pub agents: Vec<AgentConfig>,
    /// Value-iteration stopping tolerance for the reference `Q*`.
    pub oracle_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentKind {
    Bandit {
        config: BanditConfig,
        sweep: Option<SweepSpec>,
    },
    Gridworld(GridworldParams),
    Convergence(ConvergenceParams),
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Bandit { .. } => "bandit",
            ExperimentKind::Gridworld(_) => "gridworld",
            ExperimentKind::Convergence(_) => "convergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub workers: usize,
    pub output_path: Option<PathBuf>,
    /// Print per-setting progress on standard error.
    pub progress: bool,
    pub kind: ExperimentKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestParams {
    pub seed: u64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Experiment(ExperimentConfig),
    Selftest(SelftestParams),
    /// `--help` or `--version` output.
    Help(String),
}

fn allowed_keys(kind: &str) -> Result<Vec<&'static str>> {
    let extra: &[&str] = match kind {
        "bandit" => BANDIT_KEYS,
        "gridworld" | "convergence" => AGENT_KEYS,
        "selftest" => return Ok(SELFTEST_KEYS.to_vec()),
        other => {
            return Err(HarnessError::Usage(format!(
                "unknown experiment kind `{other}`"
            )))
        }
    };
    Ok(COMMON_KEYS.iter().chain(extra).copied().collect())
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Parses `key=value` lines; `#` starts a comment.
pub(crate) fn parse_config_text(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::ConfigSyntax {
                path: path.to_path_buf(),
                line: i + 1,
                reason: format!("expected key=value, got {line:?}"),
            })?;
        out.push((normalize_key(key), value.trim().to_string()));
    }
    Ok(out)
}

/// Builds a config for `kind` from file entries overridden by flag entries.
/// Keys use the long flag names (`rate-low`, `grid-n`, ...); underscores are
/// accepted in place of hyphens.
pub fn parse_config(
    kind: &str,
    file_entries: &[(String, String)],
    flag_entries: &[(String, String)],
) -> Result<Command> {
    let allowed = allowed_keys(kind)?;
    let mut values: BTreeMap<String, String> = BTreeMap::new();
    for (key, value) in file_entries.iter().chain(flag_entries) {
        let key = normalize_key(key);
        if !allowed.contains(&key.as_str()) {
            return Err(HarnessError::UnknownKey(key));
        }
        values.insert(key, value.clone());
    }
    let v = Values(values);
    if kind == "selftest" {
        return Ok(Command::Selftest(SelftestParams {
            seed: v.get("seed", 0u64)?,
            trials: v.positive("trials", 10_000)?,
        }));
    }
    let master_seed = v.get("seed", 0u64)?;
    let workers = v.positive("workers", default_workers())?;
    let output_path = v.0.get("out").map(PathBuf::from);
    let kind = match kind {
        "bandit" => bandit_kind(&v, master_seed)?,
        "gridworld" => ExperimentKind::Gridworld(gridworld_params(&v)?),
        _ => ExperimentKind::Convergence(convergence_params(&v)?),
    };
    Ok(Command::Experiment(ExperimentConfig {
        master_seed,
        workers,
        output_path,
        progress: false,
        kind,
    }))
}

struct Values(BTreeMap<String, String>);

impl Values {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .trim()
                .parse()
                .map_err(|e: T::Err| HarnessError::MalformedValue {
                    key: key.to_string(),
                    value: raw.clone(),
                    reason: e.to_string(),
                }),
        }
    }

    fn positive(&self, key: &str, default: usize) -> Result<usize> {
        let n = self.get(key, default)?;
        if n == 0 {
            return Err(invalid(key, "must be positive"));
        }
        Ok(n)
    }

    fn list<T: FromStr>(&self, key: &str, default: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.0.get(key).map(String::as_str).unwrap_or(default);
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|e: T::Err| HarnessError::MalformedValue {
                    key: key.to_string(),
                    value: raw.to_string(),
                    reason: e.to_string(),
                })
            })
            .collect()
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::InvalidValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn bandit_kind(v: &Values, master_seed: u64) -> Result<ExperimentKind> {
    let defaults = BanditConfig::default();
    let config = BanditConfig {
        num_visitors: v.get("visitors", defaults.num_visitors)?,
        num_ads: v.get("ads", defaults.num_ads)?,
        rate_low: v.get("rate-low", defaults.rate_low)?,
        rate_high: v.get("rate-high", defaults.rate_high)?,
        candidate_fraction: v.get("candidate-fraction", defaults.candidate_fraction)?,
        num_trials: v.get("trials", defaults.num_trials)?,
        master_seed,
    };
    config.validate().map_err(|e| {
        let key = match e {
            BanditError::TooFewAds(_) => "ads",
            BanditError::TooFewVisitors { .. } => "visitors",
            BanditError::InvalidRates { .. } => "rate-low/rate-high",
            BanditError::InvalidCandidateFraction(_) => "candidate-fraction",
            BanditError::NoTrials => "trials",
            _ => "bandit",
        };
        invalid(key, e.to_string())
    })?;
    let sweep = match (v.raw("sweep"), v.raw("values")) {
        (None, None) => None,
        (None, Some(_)) => return Err(HarnessError::MissingField("sweep".into())),
        (Some(axis), _) => {
            let axis =
                SweepAxis::parse(axis.trim()).ok_or_else(|| HarnessError::MalformedValue {
                    key: "sweep".into(),
                    value: axis.to_string(),
                    reason: "expected visitors, ads or rate_upper".into(),
                })?;
            let values = match v.raw("values") {
                Some(_) => v.list::<f64>("values", "")?,
                None => axis.default_values(),
            };
            if values.is_empty() {
                return Err(invalid("values", "empty sweep"));
            }
            let spec = SweepSpec { axis, values };
            for &value in &spec.values {
                spec.apply(&config, value)
                    .map_err(|e| invalid("values", e.to_string()))?;
            }
            Some(spec)
        }
    };
    Ok(ExperimentKind::Bandit { config, sweep })
}

#[derive(Clone, Copy, PartialEq)]
enum UpdateMode {
    Random,
    Simultaneous,
    Both,
}

fn agents(v: &Values, defaults: AgentDefaults, num_actions: usize) -> Result<Vec<AgentConfig>> {
    let gamma: f64 = v.get("gamma", defaults.gamma)?;
    let total_steps: usize = v.get("steps", defaults.steps)?;
    let lr_exponent: f64 = v.get("lr-exponent", 0.8)?;
    if lr_exponent.is_nan() || lr_exponent <= 0.0 {
        return Err(invalid("lr-exponent", "must be positive"));
    }
    let epsilon = match v.raw("epsilon").unwrap_or(defaults.epsilon).trim() {
        "count" | "count-based" | "count_based" => EpsilonMode::CountBased,
        other => EpsilonMode::Fixed(other.parse().map_err(|e: std::num::ParseFloatError| {
            HarnessError::MalformedValue {
                key: "epsilon".into(),
                value: other.to_string(),
                reason: e.to_string(),
            }
        })?),
    };
    let ks: Vec<usize> = v.list("k", defaults.k)?;
    let mode = match v.raw("update-mode").unwrap_or(defaults.update_mode).trim() {
        "random" => UpdateMode::Random,
        "simultaneous" => UpdateMode::Simultaneous,
        "both" => UpdateMode::Both,
        other => {
            return Err(HarnessError::MalformedValue {
                key: "update-mode".into(),
                value: other.to_string(),
                reason: "expected random, simultaneous or both".into(),
            })
        }
    };
    let names: Vec<String> = v.list("algo", defaults.algo)?;
    let mut out = Vec::new();
    for name in &names {
        let base = |algorithm| AgentConfig {
            algorithm,
            k: 1,
            gamma,
            lr_exponent,
            epsilon,
            total_steps,
        };
        match name.as_str() {
            "q" | "q_learning" | "q-learning" => out.push(base(Algorithm::QLearning)),
            "dq" | "double_q" | "double-q" => out.push(base(Algorithm::DoubleQ)),
            "cdq" | "clipped_double_q" | "clipped-double-q" => {
                out.push(base(Algorithm::ClippedDoubleQ))
            }
            "ac_cdq" | "ac-cdq" | "accdq" => {
                if ks.is_empty() {
                    return Err(HarnessError::MissingField("k".into()));
                }
                let modes: &[Algorithm] = match mode {
                    UpdateMode::Random => &[Algorithm::AcCdqRandom],
                    UpdateMode::Simultaneous => &[Algorithm::AcCdqSimultaneous],
                    UpdateMode::Both => &[Algorithm::AcCdqRandom, Algorithm::AcCdqSimultaneous],
                };
                for &algorithm in modes {
                    for &k in &ks {
                        out.push(base(algorithm).with_k(k));
                    }
                }
            }
            other => {
                return Err(HarnessError::MalformedValue {
                    key: "algo".into(),
                    value: other.to_string(),
                    reason: "expected q, dq, cdq or ac_cdq".into(),
                })
            }
        }
    }
    if out.is_empty() {
        return Err(HarnessError::MissingField("algo".into()));
    }
    for a in &out {
        a.validate(num_actions).map_err(|e| {
            let key = match e {
                crate::RlError::InvalidGamma(_) => "gamma",
                crate::RlError::InvalidEpsilon(_) => "epsilon",
                _ => "k",
            };
            invalid(key, e.to_string())
        })?;
    }
    Ok(out)
}

#[derive(Clone, Copy)]
struct AgentDefaults {
    gamma: f64,
    steps: usize,
    epsilon: &'static str,
    k: &'static str,
    algo: &'static str,
    update_mode: &'static str,
}

fn gridworld_params(v: &Values) -> Result<GridworldParams> {
    let side: usize = v.get("grid-n", 5)?;
    if side < 2 {
        return Err(invalid("grid-n", "grid side must be at least 2"));
    }
    let agents = agents(
        v,
        AgentDefaults {
            gamma: 0.95,
            steps: 10_000,
            epsilon: "count",
            k: "2,3",
            algo: "q,dq,cdq,ac_cdq",
            update_mode: "random",
        },
        4,
    )?;
    Ok(GridworldParams {
        side,
        trials: v.positive("trials", 200)?,
        probe_interval: v.positive("probe-interval", 100)?,
        agents,
    })
}

fn convergence_params(v: &Values) -> Result<ConvergenceParams> {
    let grid_side: usize = v.get("grid-n", 3)?;
    if grid_side < 2 {
        return Err(invalid("grid-n", "grid side must be at least 2"));
    }
    if v.raw("probe-interval").is_some() {
        return Err(invalid(
            "probe-interval",
            "convergence reports final errors only",
        ));
    }
    // the three-state MDP has two actions, which bounds K
    let agents = agents(
        v,
        AgentDefaults {
            gamma: 0.7,
            steps: 500_000,
            epsilon: "0.5",
            k: "1,2",
            algo: "ac_cdq",
            update_mode: "both",
        },
        2,
    )?;
    Ok(ConvergenceParams {
        grid_side,
        trials: v.positive("trials", 5)?,
        agents,
        oracle_tolerance: 1e-10,
    })
}

fn with_keys(cmd: ClapCommand, keys: &[&'static str]) -> ClapCommand {
    keys.iter().fold(cmd, |cmd, &key| {
        cmd.arg(
            Arg::new(key)
                .long(key)
                .value_name("VALUE")
                .action(ArgAction::Set),
        )
    })
}

fn cli() -> ClapCommand {
    let config_arg = Arg::new("config")
        .long("config")
        .value_name("FILE")
        .help("key=value file; flags override its entries");
    let quiet = Arg::new("quiet")
        .long("quiet")
        .action(ArgAction::SetTrue)
        .help("suppress progress on standard error");
    let experiment = |name: &'static str, about: &'static str, keys: &[&'static str]| {
        let cmd = ClapCommand::new(name)
            .about(about)
            .arg(config_arg.clone())
            .arg(quiet.clone());
        with_keys(with_keys(cmd, COMMON_KEYS), keys)
    };
    ClapCommand::new("acdq")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Clipped double estimator and Q-learning bias experiments")
        .subcommand_required(true)
        .subcommand(experiment(
            "bandit",
            "Internet-ads bandit bias study (optionally swept)",
            BANDIT_KEYS,
        ))
        .subcommand(experiment(
            "gridworld",
            "Grid-world learning curves for the TD variants",
            AGENT_KEYS,
        ))
        .subcommand(experiment(
            "convergence",
            "Final sup-norm error to Q* on the fixture MDPs",
            AGENT_KEYS,
        ))
        .subcommand(with_keys(
            ClapCommand::new("selftest").about("Run the estimator and learner invariant checks"),
            SELFTEST_KEYS,
        ))
}

fn flag_entries(m: &ArgMatches) -> Vec<(String, String)> {
    m.ids()
        .filter(|id| !matches!(id.as_str(), "config" | "quiet"))
        .filter(|id| m.value_source(id.as_str()) == Some(ValueSource::CommandLine))
        .filter_map(|id| {
            m.get_one::<String>(id.as_str())
                .map(|v| (id.as_str().to_string(), v.clone()))
        })
        .collect()
}

/// Parses a full argument vector (including the program name).
pub fn parse_args<I, T>(args: I) -> Result<Command>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    Ok(Command::Help(e.render().to_string()))
                }
                _ => Err(HarnessError::Usage(e.render().to_string())),
            };
        }
    };
    let (kind, sub) = matches.subcommand().expect("subcommand required");
    let file_entries = match sub.try_get_one::<String>("config").ok().flatten() {
        Some(path) => {
            let path = PathBuf::from(path);
            let text = std::fs::read_to_string(&path).map_err(|source| HarnessError::Io {
                path: path.clone(),
                source,
            })?;
            parse_config_text(&text, &path)?
        }
        None => Vec::new(),
    };
    let mut command = parse_config(kind, &file_entries, &flag_entries(sub))?;
    if let Command::Experiment(cfg) = &mut command {
        cfg.progress = !sub.get_flag("quiet");
    }
    Ok(command)
}
