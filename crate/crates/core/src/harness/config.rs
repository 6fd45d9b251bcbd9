//! Line-oriented experiment configuration.
//!
//! ```text
//! # comments start with '#' or ';'
//! [experiment]
//! name = quad
//! seeds = 0, 1, 2
//! eval_interval = 50
//! output_dir = out/quad
//!
//! [problem]
//! kind = quadratic
//! dim = 512
//!
//! [defaults]
//! steps = 500
//! batch_size = 50
//! epsilon = 4
//!
//! [arm dpsgd]
//! method = dpsgd
//!
//! [arm fftkf]
//! method = fftkf
//! rho = 0.5
//! ```
//!
//! `[defaults]` keys apply to every arm that accepts them; mask keys are
//! dropped for non-fftkf arms and Kalman keys for dpsgd arms. The same key
//! set explicitly in an `[arm]` that does not accept it is an error.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::optimizer::{BaseKind, KalmanParams, MaskParams, Method, MethodConfig, NoiseSpec, Sampling};
use crate::problems::{LogisticKind, QuadraticSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub section: String,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.key.is_empty()) {
            (0, true) => write!(f, "[{}]: {}", self.section, self.message),
            (0, false) => write!(f, "[{}] {}: {}", self.section, self.key, self.message),
            (l, true) => write!(f, "line {l}, [{}]: {}", self.section, self.message),
            (l, false) => write!(f, "line {l}, [{}] {}: {}", self.section, self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// IDX files from `data_dir`, else from the dataset-root environment variable.
    Mnist {
        data_dir: Option<PathBuf>,
        subset_n: Option<usize>,
        test_n: Option<usize>,
    },
    /// Seeded Gaussian blobs; the last `test_examples` rows are held out.
    Synthetic {
        examples: usize,
        features: usize,
        classes: usize,
        spread: f64,
        test_examples: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Quadratic(QuadraticSpec),
    Logistic {
        kind: LogisticKind,
        data: DataSource,
    },
    Mlp {
        hidden: usize,
        init_seed: u64,
        data: DataSource,
    },
}

/// Training length, resolved against the dataset size when given in epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Duration {
    Steps(u64),
    /// `T = ⌈E · N / B⌉`.
    Epochs(f64),
}

impl Duration {
    pub fn steps(self, num_examples: usize, batch_size: usize) -> u64 {
        match self {
            Duration::Steps(t) => t,
            Duration::Epochs(e) => (e * num_examples as f64 / batch_size as f64).ceil() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmConfig {
    pub name: String,
    /// `steps` and `seed` are placeholders filled in per cell.
    pub method: MethodConfig,
    pub duration: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub arm: String,
    pub rho: Vec<f64>,
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub problem: ProblemSpec,
    pub arms: Vec<ArmConfig>,
    pub seeds: Vec<u64>,
    pub eval_interval: u64,
    pub output_dir: PathBuf,
    pub emit_plot_data: bool,
    /// Calibrate one noise multiplier for a single release per step and give
    /// it to every arm, so all arms run at the same `σ_w`.
    pub match_noise: bool,
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
struct Section {
    title: String,
    arm: Option<String>,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

fn err(line: usize, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        section: section.to_string(),
        key: key.to_string(),
        message: message.into(),
    }
}

fn strip_comment(line: &str) -> &str {
    let cut = line.find(['#', ';']).unwrap_or(line.len());
    line[..cut].trim()
}

fn lex(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('[') {
            let h = h
                .strip_suffix(']')
                .ok_or_else(|| err(n, "", "", "unterminated section header"))?
                .trim();
            let mut parts = h.split_whitespace();
            let kind = parts.next().unwrap_or("").to_ascii_lowercase();
            let arm = parts.next().map(str::to_string);
            if parts.next().is_some() {
                return Err(err(n, h, "", "section header has too many words"));
            }
            match (kind.as_str(), &arm) {
                ("experiment" | "problem" | "defaults" | "sweep", None) => {}
                ("arm", Some(name)) => {
                    if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                        return Err(err(n, h, "", "arm names may use only letters, digits, '_' and '-'"));
                    }
                }
                ("arm", None) => return Err(err(n, h, "", "arm sections need a name: [arm NAME]")),
                _ => return Err(err(n, h, "", "unknown section")),
            }
            let title = match &arm {
                Some(a) => format!("arm {a}"),
                None => kind.clone(),
            };
            if sections.iter().any(|s| s.title == title) {
                return Err(err(n, &title, "", "duplicate section"));
            }
            sections.push(Section {
                title,
                arm,
                line: n,
                entries: BTreeMap::new(),
            });
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(n, "", "", format!("expected 'key = value', found '{line}'")))?;
        let key = k.trim().to_ascii_lowercase();
        let section = sections
            .last_mut()
            .ok_or_else(|| err(n, "", &key, "key outside any section"))?;
        if key.is_empty() {
            return Err(err(n, &section.title, "", "empty key"));
        }
        let entry = Entry {
            value: v.trim().to_string(),
            line: n,
        };
        if section.entries.insert(key.clone(), entry).is_some() {
            return Err(err(n, &section.title, &key, "duplicate key"));
        }
    }
    Ok(sections)
}

/// Typed access to one section that tracks which keys were read.
struct Reader<'a> {
    title: &'a str,
    line: usize,
    entries: &'a BTreeMap<String, Entry>,
    used: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn new(s: &'a Section) -> Self {
        Self {
            title: &s.title,
            line: s.line,
            entries: &s.entries,
            used: BTreeSet::new(),
        }
    }

    fn raw(&mut self, key: &str) -> Option<&'a Entry> {
        let e = self.entries.get(key)?;
        self.used.insert(key.to_string());
        Some(e)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let title = self.title;
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|x| err(e.line, title, key, format!("cannot parse '{}': {x}", e.value))),
        }
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let title = self.title;
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<T>()
                        .map_err(|x| err(e.line, title, key, format!("cannot parse '{}': {x}", s.trim())))
                })
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(self.line, |e| e.line)
    }

    fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        err(self.line_of(key), self.title, key, message)
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.iter().find(|(k, _)| !self.used.contains(*k)) {
            Some((k, e)) => Err(err(e.line, self.title, k, "unknown key")),
            None => Ok(()),
        }
    }
}

fn parse_bool(r: &mut Reader, key: &str) -> Result<Option<bool>, ConfigError> {
    let title = r.title;
    match r.raw(key) {
        None => Ok(None),
        Some(e) => match e.value.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" => Ok(Some(true)),
            "false" | "no" | "0" => Ok(Some(false)),
            _ => Err(err(
                e.line,
                title,
                key,
                format!("expected true or false, found '{}'", e.value),
            )),
        },
    }
}

const MASK_KEYS: [&str; 3] = ["lambda", "rho", "alpha"];
const KALMAN_KEYS: [&str; 2] = ["kappa", "gamma"];

fn data_source(r: &mut Reader) -> Result<DataSource, ConfigError> {
    let source: String = r.parse("source")?.unwrap_or_else(|| "mnist".into());
    match source.as_str() {
        "mnist" => Ok(DataSource::Mnist {
            data_dir: r.parse::<String>("data_dir")?.map(PathBuf::from),
            subset_n: r.parse("subset_n")?,
            test_n: r.parse("test_n")?,
        }),
        "synthetic" => Ok(DataSource::Synthetic {
            examples: r.parse("examples")?.unwrap_or(2000),
            features: r.parse("features")?.unwrap_or(20),
            classes: r.parse("classes")?.unwrap_or(10),
            spread: r.parse("spread")?.unwrap_or(1.0),
            test_examples: r.parse("test_examples")?.unwrap_or(500),
            seed: r.parse("seed")?.unwrap_or(0),
        }),
        other => Err(r.error("source", format!("unknown data source '{other}' (mnist or synthetic)"))),
    }
}

fn problem(s: &Section) -> Result<ProblemSpec, ConfigError> {
    let mut r = Reader::new(s);
    let kind: String = r
        .parse("kind")?
        .ok_or_else(|| err(s.line, &s.title, "kind", "missing (quadratic, logistic or mlp)"))?;
    let spec = match kind.as_str() {
        "quadratic" => {
            let d = QuadraticSpec::default();
            ProblemSpec::Quadratic(QuadraticSpec {
                dim: r.parse("dim")?.unwrap_or(d.dim),
                mu: r.parse("mu")?.unwrap_or(d.mu),
                smoothness: r.parse("smoothness")?.unwrap_or(d.smoothness),
                tau: r.parse("tau")?.unwrap_or(d.tau),
                examples: r.parse("examples")?.unwrap_or(d.examples),
                optimum_scale: r.parse("optimum_scale")?.unwrap_or(d.optimum_scale),
                optimum_bandwidth: r.parse("optimum_bandwidth")?.unwrap_or(d.optimum_bandwidth),
                seed: r.parse("seed")?.unwrap_or(d.seed),
            })
        }
        "logistic" => {
            let kind = match r.parse::<String>("model")?.as_deref().unwrap_or("multinomial") {
                "multinomial" | "softmax" => LogisticKind::Multinomial,
                "binary" | "sigmoid" => LogisticKind::Binary,
                other => return Err(r.error("model", format!("unknown model '{other}' (multinomial or binary)"))),
            };
            ProblemSpec::Logistic {
                kind,
                data: data_source(&mut r)?,
            }
        }
        "mlp" => ProblemSpec::Mlp {
            hidden: r.parse("hidden")?.unwrap_or(64),
            init_seed: r.parse("init_seed")?.unwrap_or(0),
            data: data_source(&mut r)?,
        },
        other => return Err(r.error("kind", format!("unknown problem kind '{other}'"))),
    };
    r.finish()?;
    Ok(spec)
}

/// An arm's keys merged over `[defaults]`, remembering where each came from.
struct Merged<'a> {
    entries: BTreeMap<String, Entry>,
    from_arm: BTreeSet<String>,
    section: &'a Section,
}

fn arm(defaults: Option<&Section>, s: &Section) -> Result<ArmConfig, ConfigError> {
    let name = s.arm.clone().unwrap_or_default();
    let mut merged = Merged {
        entries: defaults.map(|d| d.entries.clone()).unwrap_or_default(),
        from_arm: s.entries.keys().cloned().collect(),
        section: s,
    };
    for (k, e) in &s.entries {
        merged.entries.insert(k.clone(), e.clone());
    }
    let method: Method = match merged.entries.get("method") {
        None => return Err(err(s.line, &s.title, "method", "missing (dpsgd, disk or fftkf)")),
        Some(e) => e.value.parse().map_err(|m| err(e.line, &s.title, "method", m))?,
    };
    let forbidden: Vec<&str> = match method {
        Method::DpSgd => MASK_KEYS.iter().chain(&KALMAN_KEYS).copied().collect(),
        Method::Disk => MASK_KEYS.to_vec(),
        Method::Fftkf => Vec::new(),
    };
    for key in &forbidden {
        if merged.from_arm.contains(*key) {
            let line = s.entries[*key].line;
            return Err(err(line, &s.title, key, format!("not accepted by method {method}")));
        }
        merged.entries.remove(*key);
    }
    let section = Section {
        title: merged.section.title.clone(),
        arm: None,
        line: merged.section.line,
        entries: merged.entries,
    };
    let mut r = Reader::new(&section);
    r.raw("method");

    let duration = match (r.parse::<u64>("steps")?, r.parse::<f64>("epochs")?) {
        (Some(_), Some(_)) => return Err(r.error("epochs", "give either steps or epochs, not both")),
        (Some(t), None) => Duration::Steps(t),
        (None, Some(e)) if e >= 0.0 => Duration::Epochs(e),
        (None, Some(e)) => return Err(r.error("epochs", format!("{e} must be non-negative"))),
        (None, None) => return Err(r.error("steps", "missing (steps or epochs)")),
    };
    let batch_size = r.parse("batch_size")?.ok_or_else(|| r.error("batch_size", "missing"))?;
    let mut cfg = MethodConfig::new(method, 0, batch_size, 0);
    cfg.filter = None;
    cfg.kalman = None;

    if let Some(c) = r.parse::<String>("clip")? {
        cfg.clip = match c.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "none" => f64::INFINITY,
            _ => c
                .parse()
                .map_err(|x| r.error("clip", format!("cannot parse '{c}': {x}")))?,
        };
    }
    cfg.noise = match (r.parse::<f64>("epsilon")?, r.parse::<f64>("noise_multiplier")?) {
        (Some(_), Some(_)) => {
            return Err(r.error("noise_multiplier", "give either epsilon or noise_multiplier, not both"))
        }
        (Some(e), None) => NoiseSpec::TargetEpsilon(e),
        (None, Some(z)) => NoiseSpec::Multiplier(z),
        (None, None) => return Err(r.error("epsilon", "missing (epsilon or noise_multiplier)")),
    };
    if let Some(d) = r.parse("delta")? {
        cfg.delta = d;
    }
    cfg.fd_multiplier = r.parse("fd_noise_multiplier")?;
    cfg.releases_per_step = r.parse("releases_per_step")?;
    if let Some(lr) = r.parse("lr")? {
        cfg.learning_rate = lr;
    }
    let base: String = r.parse("base")?.unwrap_or_else(|| "sgd".into());
    cfg.base = match base.as_str() {
        "sgd" => BaseKind::Sgd,
        "momentum" => BaseKind::Momentum {
            beta: r.parse("momentum")?.unwrap_or(0.9),
        },
        "adam" => {
            let BaseKind::Adam { beta1, beta2, epsilon } = BaseKind::adam() else {
                unreachable!()
            };
            BaseKind::Adam {
                beta1: r.parse("beta1")?.unwrap_or(beta1),
                beta2: r.parse("beta2")?.unwrap_or(beta2),
                epsilon: r.parse("adam_epsilon")?.unwrap_or(epsilon),
            }
        }
        other => {
            return Err(r.error(
                "base",
                format!("unknown base optimizer '{other}' (sgd, momentum or adam)"),
            ))
        }
    };
    if let Some(s) = r.parse::<String>("sampling")? {
        cfg.sampling = match s.as_str() {
            "poisson" => Sampling::Poisson,
            "fixed" => Sampling::Fixed,
            other => return Err(r.error("sampling", format!("unknown sampling '{other}' (poisson or fixed)"))),
        };
    }
    if let Some(w) = parse_bool(&mut r, "record_wall_time")? {
        cfg.record_wall_time = w;
    }
    if method == Method::Fftkf {
        let d = MaskParams::default();
        cfg.filter = Some(MaskParams {
            lambda: r.parse("lambda")?.unwrap_or(d.lambda),
            rho: r.parse("rho")?.unwrap_or(d.rho),
            alpha: r.parse("alpha")?.unwrap_or(d.alpha),
        });
    }
    if method != Method::DpSgd {
        let d = KalmanParams::default();
        cfg.kalman = Some(KalmanParams {
            kappa: r.parse("kappa")?.unwrap_or(d.kappa),
            gamma: r.parse("gamma")?.unwrap_or(d.gamma),
        });
    }
    for key in ["momentum", "beta1", "beta2", "adam_epsilon"] {
        if r.entries.contains_key(key) && !r.used.contains(key) {
            if merged.from_arm.contains(key) {
                return Err(r.error(key, format!("not used by base optimizer {base}")));
            }
            r.used.insert(key.to_string());
        }
    }
    r.finish()?;
    // Range checks that do not need the dataset size.
    cfg.validate(usize::MAX)
        .map_err(|e| err(s.line, &s.title, "", e.to_string()))?;
    Ok(ArmConfig {
        name,
        method: cfg,
        duration,
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let sections = lex(text)?;
        let find = |t: &str| sections.iter().find(|s| s.title == t);

        let exp = find("experiment").ok_or_else(|| err(0, "experiment", "", "missing section"))?;
        let mut r = Reader::new(exp);
        let name: String = r.parse("name")?.unwrap_or_else(|| "experiment".into());
        let seeds: Vec<u64> = r.list("seeds")?.unwrap_or_else(|| vec![0]);
        if seeds.is_empty() {
            return Err(r.error("seeds", "at least one seed is required"));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(r.error("seeds", format!("duplicate seed {dup}")));
        }
        let eval_interval = r.parse("eval_interval")?.unwrap_or(0);
        let output_dir = PathBuf::from(
            r.parse::<String>("output_dir")?
                .unwrap_or_else(|| format!("out/{name}")),
        );
        let emit_plot_data = parse_bool(&mut r, "emit_plot_data")?.unwrap_or(false);
        let match_noise = parse_bool(&mut r, "match_noise")?.unwrap_or(false);
        r.finish()?;

        let problem = problem(find("problem").ok_or_else(|| err(0, "problem", "", "missing section"))?)?;
        let defaults = find("defaults");
        let arms: Vec<ArmConfig> = sections
            .iter()
            .filter(|s| s.arm.is_some())
            .map(|s| arm(defaults, s))
            .collect::<Result<_, _>>()?;
        if arms.is_empty() {
            return Err(err(0, "arm", "", "at least one [arm NAME] section is required"));
        }

        let sweep = match find("sweep") {
            None => None,
            Some(s) => {
                let mut r = Reader::new(s);
                let arm_name: String = match r.parse("arm")? {
                    Some(a) => a,
                    None if arms.len() == 1 => arms[0].name.clone(),
                    None => return Err(r.error("arm", "missing (several arms are defined)")),
                };
                let template = arms
                    .iter()
                    .find(|a| a.name == arm_name)
                    .ok_or_else(|| r.error("arm", format!("no arm named '{arm_name}'")))?;
                if template.method.method != Method::Fftkf {
                    return Err(r.error("arm", "the swept arm must use method fftkf"));
                }
                let rho: Vec<f64> = r.list("rho")?.ok_or_else(|| r.error("rho", "missing"))?;
                let epsilon: Vec<f64> = r.list("epsilon")?.ok_or_else(|| r.error("epsilon", "missing"))?;
                if let Some(bad) = rho.iter().find(|v| !(**v >= 0.0 && **v < 1.0)) {
                    return Err(r.error("rho", format!("{bad} must lie in [0, 1)")));
                }
                if let Some(bad) = epsilon.iter().find(|v| !(**v > 0.0)) {
                    return Err(r.error("epsilon", format!("{bad} must be positive")));
                }
                r.finish()?;
                Some(SweepSpec {
                    arm: arm_name,
                    rho,
                    epsilon,
                })
            }
        };

        Ok(Self {
            name,
            problem,
            arms,
            seeds,
            eval_interval,
            output_dir,
            emit_plot_data,
            match_noise,
            sweep,
        })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, crate::Error> {
        let text = std::fs::read_to_string(path).map_err(|source| crate::Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| crate::Error::Config(format!("{}: {e}", path.display())))
    }

    /// The arms a sweep runs: one copy of the template per `(ρ, ε)` pair,
    /// named `rho<ρ>_eps<ε>`, in row-major `ρ`-then-`ε` order.
    pub fn sweep_arms(&self) -> Option<Vec<(f64, f64, ArmConfig)>> {
        let sweep = self.sweep.as_ref()?;
        let template = self.arms.iter().find(|a| a.name == sweep.arm)?;
        let mut out = Vec::new();
        for &rho in &sweep.rho {
            for &eps in &sweep.epsilon {
                let mut a = template.clone();
                a.name = format!("rho{rho}_eps{eps}");
                if let Some(m) = a.method.filter.as_mut() {
                    m.rho = rho;
                }
                a.method.noise = NoiseSpec::TargetEpsilon(eps);
                out.push((rho, eps, a));
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[experiment]
seeds = 3
[problem]
kind = quadratic   # small
dim = 16
[defaults]
steps = 10
batch_size = 8
noise_multiplier = 1.0
kappa = 0.7
[arm base]
method = dpsgd
";

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.seeds, vec![3]);
        assert_eq!(c.arms.len(), 1);
        assert_eq!(c.arms[0].duration, Duration::Steps(10));
        assert!(c.arms[0].method.kalman.is_none());
        match c.problem {
            ProblemSpec::Quadratic(q) => assert_eq!(q.dim, 16),
            _ => panic!(),
        }
    }

    #[test]
    fn defaults_flow_into_accepting_arms() {
        let text = format!("{MINIMAL}[arm kf]\nmethod = disk\ngamma = 3\n");
        let c = ExperimentConfig::parse(&text).unwrap();
        let k = c.arms[1].method.kalman.unwrap();
        assert_eq!((k.kappa, k.gamma), (0.7, 3.0));
    }

    #[test]
    fn field_level_errors() {
        let e = ExperimentConfig::parse(&MINIMAL.replace("seeds = 3", "seeds = 1, 2, 1")).unwrap_err();
        assert_eq!(e.key, "seeds");
        assert!(e.message.contains("duplicate"), "{e}");

        let e = ExperimentConfig::parse(&format!("{MINIMAL}rho = 0.5\n")).unwrap_err();
        assert_eq!((e.key.as_str(), e.line), ("rho", 14));

        let e = ExperimentConfig::parse(&MINIMAL.replace("dim = 16", "dim = sixteen")).unwrap_err();
        assert_eq!(e.key, "dim");
        assert!(e.to_string().starts_with("line 6, [problem] dim"), "{e}");

        let e = ExperimentConfig::parse(&MINIMAL.replace("dim = 16", "dimension = 16")).unwrap_err();
        assert_eq!(e.message, "unknown key");
    }

    #[test]
    fn sweep_expands_grid() {
        let text = "
[experiment]
[problem]
kind = quadratic
[arm f]
method = fftkf
steps = 5
batch_size = 10
epsilon = 1
[sweep]
rho = 0.1, 0.6
epsilon = 1, 2, 4
";
        let c = ExperimentConfig::parse(text).unwrap();
        let arms = c.sweep_arms().unwrap();
        assert_eq!(arms.len(), 6);
        assert_eq!(arms[3].2.name, "rho0.6_eps1");
        assert_eq!(arms[3].2.method.filter.unwrap().rho, 0.6);
    }

    #[test]
    fn epochs_translate_to_steps() {
        assert_eq!(Duration::Epochs(2.0).steps(1000, 64), 32);
        assert_eq!(Duration::Steps(7).steps(1000, 64), 7);
    }
}
