//! `key = value` experiment configuration with `[section]` headers.
//!
//! Every key is known in advance; unknown sections or keys, malformed values
//! and violated constraints are rejected with the offending line.  The
//! resolved configuration (all defaults filled) has a canonical text form
//! whose SHA-256 identifies the run.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use viana_core::maps::{
    make_f1, make_f2_default, DEFAULT_ALPHA_F1, DEFAULT_ALPHA_F2, DEFAULT_BETA, DEFAULT_K, DEFAULT_MISIUREWICZ_A,
};
use viana_core::stats::TailKind;
use viana_core::{MapKind, SkewProductSpec};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    General(String),
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError::Line {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UlamMode {
    Base,
    Product,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapConfig {
    pub kind: MapKind,
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub b: f64,
    pub k: u32,
    pub coupling: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub ensemble_size: usize,
    pub burn_in: u64,
    pub horizon: u64,
    pub n_list: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsConfig {
    pub kappa: f64,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub c: Option<f64>,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateConfig {
    pub theta: f64,
    pub x: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcipConfig {
    pub samples: usize,
    pub bins_theta: usize,
    pub bins_x: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UlamConfig {
    pub mode: UlamMode,
    pub cells: usize,
    pub cells_theta: usize,
    pub cells_x: usize,
    pub samples_per_side: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationConfig {
    pub phi: String,
    pub psi: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdConfig {
    pub observable: String,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltConfig {
    pub observable: String,
    pub n_trunc: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitivityConfig {
    pub resolution: usize,
    pub samples: usize,
    /// `None`: the diameter of `M`.
    pub eps: Option<f64>,
    pub n_max: u64,
    pub draws: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// `None`: `tails.csv` in the output directory.
    pub input: Option<PathBuf>,
    pub kind: TailKind,
    pub window: Option<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub map: MapConfig,
    pub run: RunConfig,
    pub stats: StatsConfig,
    pub output: OutputConfig,
    pub iterate: IterateConfig,
    pub acip: AcipConfig,
    pub ulam: UlamConfig,
    pub correlation: CorrelationConfig,
    pub ld: LdConfig,
    pub clt: CltConfig,
    pub transitivity: TransitivityConfig,
    pub fit: FitConfig,
}

pub const OBSERVABLES: &str = "cos_theta, x, generic, coboundary_x, phi, const:<c>";

fn known_observable(name: &str) -> bool {
    matches!(name, "cos_theta" | "x" | "generic" | "coboundary_x" | "phi")
        || name.strip_prefix("const:").is_some_and(|c| c.parse::<f64>().is_ok())
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("map", &["kind", "a", "alpha", "beta", "b", "k", "coupling"]),
    ("run", &["seed", "ensemble_size", "burn_in", "horizon", "n_list"]),
    ("stats", &["kappa", "epsilon", "delta", "c", "gamma"]),
    ("output", &["directory", "formats"]),
    ("iterate", &["theta", "x", "steps"]),
    ("acip", &["samples", "bins_theta", "bins_x"]),
    ("ulam", &["mode", "cells", "cells_theta", "cells_x", "samples_per_side"]),
    ("correlation", &["phi", "psi"]),
    ("ld", &["observable", "epsilon"]),
    ("clt", &["observable", "n_trunc"]),
    ("transitivity", &["resolution", "samples", "eps", "n_max", "draws", "threshold"]),
    ("fit", &["input", "kind", "window"]),
];

struct Raw {
    entries: BTreeMap<(String, String), (String, usize)>,
}

impl Raw {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::at(line, format!("malformed section header '{content}'")))?
                    .trim();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(ConfigError::at(line, format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line, format!("expected key=value, got '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section
                .as_deref()
                .ok_or_else(|| ConfigError::at(line, format!("key '{key}' outside any section")))?;
            let keys = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !keys.contains(&key) {
                return Err(ConfigError::at(line, format!("unknown key '{key}' in [{sec}]")));
            }
            if entries
                .insert((sec.to_string(), key.to_string()), (value.to_string(), line))
                .is_some()
            {
                return Err(ConfigError::at(line, format!("duplicate key '{key}' in [{sec}]")));
            }
        }
        Ok(Self { entries })
    }

    fn line(&self, section: &str, key: &str) -> usize {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map_or(0, |e| e.1)
    }

    fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, ConfigError> {
        match self.entries.get(&(section.to_string(), key.to_string())) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|_| {
                ConfigError::at(
                    *line,
                    format!("[{section}] {key}: cannot parse '{v}' as {}", short_type::<T>()),
                )
            }),
        }
    }

    fn or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    fn string(&self, section: &str, key: &str, default: &str) -> String {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map_or_else(|| default.to_string(), |e| e.0.clone())
    }

    /// Error at the line of `key`, or a general error if it was defaulted.
    fn violation(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        let message = format!("[{section}] {key}: {}", message.into());
        match self.line(section, key) {
            0 => ConfigError::General(format!("{message} (default value)")),
            line => ConfigError::at(line, message),
        }
    }
}

fn short_type<T>() -> &'static str {
    let name = std::any::type_name::<T>();
    name.rsplit("::").next().unwrap_or(name)
}

/// `"1,2,5"` or `"start:stop:step"` (inclusive).
pub fn parse_n_list(text: &str) -> Option<Vec<u64>> {
    let text = text.trim();
    if let Some((start, rest)) = text.split_once(':') {
        let (stop, step) = rest.split_once(':').unwrap_or((rest, "1"));
        let (start, stop, step): (u64, u64, u64) = (start.trim().parse().ok()?, stop.trim().parse().ok()?, step.trim().parse().ok()?);
        if step == 0 || stop < start {
            return None;
        }
        return Some((start..=stop).step_by(step as usize).collect());
    }
    let list: Option<Vec<u64>> = text.split(',').map(|s| s.trim().parse().ok()).collect();
    list.filter(|l| !l.is_empty())
}

fn parse_window(text: &str) -> Option<(u64, u64)> {
    let (a, b) = text.split_once(':')?;
    let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (a < b).then_some((a, b))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw = Raw::parse(text)?;

        let kind = match raw.string("map", "kind", "").as_str() {
            "f1" | "F1" => MapKind::F1,
            "f2" | "F2" => MapKind::F2,
            "" => return Err(ConfigError::General("[map] kind is required (f1 or f2)".into())),
            other => return Err(raw.violation("map", "kind", format!("'{other}' is not f1 or f2"))),
        };
        let default_alpha = match kind {
            MapKind::F1 => DEFAULT_ALPHA_F1,
            MapKind::F2 => DEFAULT_ALPHA_F2,
        };
        let map = MapConfig {
            kind,
            a: raw.or("map", "a", DEFAULT_MISIUREWICZ_A)?,
            alpha: raw.or("map", "alpha", default_alpha)?,
            beta: raw.or("map", "beta", DEFAULT_BETA)?,
            b: raw.or("map", "b", DEFAULT_MISIUREWICZ_A)?,
            k: raw.or("map", "k", DEFAULT_K)?,
            coupling: raw.string("map", "coupling", "arcsin"),
        };
        if kind == MapKind::F1 && !(map.beta > 1.0) {
            return Err(raw.violation("map", "beta", format!("beta = {} violates beta > 1", map.beta)));
        }
        if kind == MapKind::F2 && map.k < 1 {
            return Err(raw.violation("map", "k", "k must be >= 1"));
        }
        if !(map.alpha > 0.0) {
            return Err(raw.violation("map", "alpha", format!("alpha = {} must be > 0", map.alpha)));
        }
        if map.coupling != "arcsin" {
            return Err(raw.violation("map", "coupling", format!("unknown coupling '{}' (only arcsin)", map.coupling)));
        }

        let horizon: u64 = raw.or("run", "horizon", 400)?;
        let n_list = match raw.entries.get(&("run".into(), "n_list".into())) {
            Some((v, line)) => parse_n_list(v)
                .ok_or_else(|| ConfigError::at(*line, format!("[run] n_list: cannot parse '{v}' (a,b,c or start:stop:step)")))?,
            None => (0..=horizon).step_by(5).collect(),
        };
        let run = RunConfig {
            seed: raw.get("run", "seed")?.ok_or_else(|| ConfigError::General("[run] seed is required".into()))?,
            ensemble_size: raw.or("run", "ensemble_size", 10_000)?,
            burn_in: raw.or("run", "burn_in", viana_core::ensemble::DEFAULT_BURN_IN)?,
            horizon,
            n_list,
        };
        if run.ensemble_size == 0 {
            return Err(raw.violation("run", "ensemble_size", "must be positive"));
        }
        if horizon == 0 {
            return Err(raw.violation("run", "horizon", "must be positive"));
        }
        if run.n_list.iter().any(|&n| n > horizon) {
            return Err(raw.violation("run", "n_list", format!("entries must not exceed horizon = {horizon}")));
        }

        let stats = StatsConfig {
            kappa: raw.or("stats", "kappa", 0.1)?,
            epsilon: raw.get("stats", "epsilon")?,
            delta: raw.get("stats", "delta")?,
            c: raw.get("stats", "c")?,
            gamma: raw.or("stats", "gamma", 1.0)?,
        };
        if !(stats.kappa > 0.0 && stats.kappa < 0.25) {
            return Err(raw.violation("stats", "kappa", format!("kappa = {} violates 0 < kappa < 1/4", stats.kappa)));
        }
        if stats.epsilon.is_some_and(|e| !(e > 0.0)) {
            return Err(raw.violation("stats", "epsilon", "must be > 0"));
        }
        if stats.delta.is_some_and(|d| !(d > 0.0 && d < 0.5)) {
            return Err(raw.violation("stats", "delta", "must lie in (0, 1/2)"));
        }
        if stats.c.is_some_and(|c| !(c > 0.0)) {
            return Err(raw.violation("stats", "c", "must be > 0"));
        }
        if !(stats.gamma > 0.0 && stats.gamma <= 1.0) {
            return Err(raw.violation("stats", "gamma", "must lie in (0, 1]"));
        }

        let formats = raw.string("output", "formats", "csv,svg");
        let mut svg = false;
        for f in formats.split(',').map(str::trim) {
            match f {
                "csv" => {}
                "svg" => svg = true,
                other => return Err(raw.violation("output", "formats", format!("unknown format '{other}'"))),
            }
        }
        let output = OutputConfig {
            directory: PathBuf::from(raw.string("output", "directory", "out")),
            svg,
        };

        let iterate = IterateConfig {
            theta: raw.or("iterate", "theta", 0.1)?,
            x: raw.or("iterate", "x", 0.3)?,
            steps: raw.or("iterate", "steps", 1000)?,
        };
        let acip = AcipConfig {
            samples: raw.or("acip", "samples", 100_000)?,
            bins_theta: raw.or("acip", "bins_theta", 64)?,
            bins_x: raw.or("acip", "bins_x", 64)?,
        };
        if acip.bins_theta == 0 || acip.bins_x == 0 {
            return Err(raw.violation("acip", "bins_theta", "bins must be positive"));
        }
        let ulam = UlamConfig {
            mode: match raw.string("ulam", "mode", "base").as_str() {
                "base" => UlamMode::Base,
                "product" | "2d" => UlamMode::Product,
                other => return Err(raw.violation("ulam", "mode", format!("'{other}' is not base or product"))),
            },
            cells: raw.or("ulam", "cells", 4096)?,
            cells_theta: raw.or("ulam", "cells_theta", 64)?,
            cells_x: raw.or("ulam", "cells_x", 64)?,
            samples_per_side: raw.or("ulam", "samples_per_side", 8)?,
        };
        if ulam.cells < 2 {
            return Err(raw.violation("ulam", "cells", "need at least 2 cells"));
        }
        if ulam.samples_per_side < 8 {
            return Err(raw.violation("ulam", "samples_per_side", "must be >= 8"));
        }
        let correlation = CorrelationConfig {
            phi: raw.string("correlation", "phi", "cos_theta"),
            psi: raw.string("correlation", "psi", "cos_theta"),
        };
        let ld = LdConfig {
            observable: raw.string("ld", "observable", "generic"),
            epsilon: raw.or("ld", "epsilon", 0.1)?,
        };
        if !(ld.epsilon > 0.0) {
            return Err(raw.violation("ld", "epsilon", "must be > 0"));
        }
        let clt = CltConfig {
            observable: raw.string("clt", "observable", "generic"),
            n_trunc: raw.or("clt", "n_trunc", 1000)?,
        };
        if clt.n_trunc < 4 {
            return Err(raw.violation("clt", "n_trunc", "must be >= 4"));
        }
        for (sec, key, name) in [
            ("correlation", "phi", &correlation.phi),
            ("correlation", "psi", &correlation.psi),
            ("ld", "observable", &ld.observable),
            ("clt", "observable", &clt.observable),
        ] {
            if !known_observable(name) {
                return Err(raw.violation(sec, key, format!("unknown observable '{name}' (one of {OBSERVABLES})")));
            }
        }
        let transitivity = TransitivityConfig {
            resolution: raw.or("transitivity", "resolution", 64)?,
            samples: raw.or("transitivity", "samples", 400_000)?,
            eps: raw.get("transitivity", "eps")?,
            n_max: raw.or("transitivity", "n_max", 200)?,
            draws: raw.or("transitivity", "draws", 20_000)?,
            threshold: raw.or("transitivity", "threshold", viana_core::attractor::COVERAGE_THRESHOLD)?,
        };
        if transitivity.samples < 10 * transitivity.resolution * transitivity.resolution {
            return Err(raw.violation("transitivity", "samples", "must be at least 10 x resolution^2"));
        }
        if !(transitivity.threshold > 0.0 && transitivity.threshold <= 1.0) {
            return Err(raw.violation("transitivity", "threshold", "must lie in (0, 1]"));
        }
        let fit = FitConfig {
            input: raw.entries.get(&("fit".into(), "input".into())).map(|e| PathBuf::from(&e.0)),
            kind: {
                let k = raw.string("fit", "kind", "joint");
                TailKind::parse(&k).ok_or_else(|| raw.violation("fit", "kind", format!("unknown tail kind '{k}'")))?
            },
            window: match raw.entries.get(&("fit".into(), "window".into())) {
                Some((v, line)) => Some(
                    parse_window(v).ok_or_else(|| ConfigError::at(*line, format!("[fit] window: expected lo:hi, got '{v}'")))?,
                ),
                None => None,
            },
        };

        let config = Self {
            map,
            run,
            stats,
            output,
            iterate,
            acip,
            ulam,
            correlation,
            ld,
            clt,
            transitivity,
            fit,
        };
        config.spec().map_err(|e| {
            let key = match e {
                viana_core::Error::InvalidParameter { name, .. } if raw.line("map", name) > 0 => name,
                _ => "kind",
            };
            raw.violation("map", key, e.to_string())
        })?;
        Ok(config)
    }

    pub fn spec(&self) -> viana_core::Result<SkewProductSpec> {
        let m = &self.map;
        match m.kind {
            MapKind::F1 => make_f1(m.a, m.alpha, m.beta),
            MapKind::F2 => make_f2_default(m.b, m.k, m.a, m.alpha),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.run.seed = seed;
        self
    }

    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output.directory = dir.into();
        self
    }

    /// Canonical text of the resolved configuration.  The output directory
    /// is omitted: it does not influence any result.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let m = &self.map;
        let _ = writeln!(s, "[map]\nkind={}\na={}\nalpha={}", m.kind.as_str().to_lowercase(), m.a, m.alpha);
        match m.kind {
            MapKind::F1 => {
                let _ = writeln!(s, "beta={}", m.beta);
            }
            MapKind::F2 => {
                let _ = writeln!(s, "b={}\nk={}\ncoupling={}", m.b, m.k, m.coupling);
            }
        }
        let r = &self.run;
        let ns: Vec<String> = r.n_list.iter().map(u64::to_string).collect();
        let _ = writeln!(
            s,
            "[run]\nseed={}\nensemble_size={}\nburn_in={}\nhorizon={}\nn_list={}",
            r.seed,
            r.ensemble_size,
            r.burn_in,
            r.horizon,
            ns.join(",")
        );
        let st = &self.stats;
        // unset optional keys stay as comments so the text reparses
        let opt = |key: &str, v: Option<f64>| v.map_or_else(|| format!("# {key}=auto"), |v| format!("{key}={v}"));
        let _ = writeln!(
            s,
            "[stats]\nkappa={}\n{}\n{}\n{}\ngamma={}",
            st.kappa,
            opt("epsilon", st.epsilon),
            opt("delta", st.delta),
            opt("c", st.c),
            st.gamma
        );
        let _ = writeln!(s, "[output]\nformats={}", if self.output.svg { "csv,svg" } else { "csv" });
        let i = &self.iterate;
        let _ = writeln!(s, "[iterate]\ntheta={}\nx={}\nsteps={}", i.theta, i.x, i.steps);
        let a = &self.acip;
        let _ = writeln!(s, "[acip]\nsamples={}\nbins_theta={}\nbins_x={}", a.samples, a.bins_theta, a.bins_x);
        let u = &self.ulam;
        let _ = writeln!(
            s,
            "[ulam]\nmode={}\ncells={}\ncells_theta={}\ncells_x={}\nsamples_per_side={}",
            match u.mode {
                UlamMode::Base => "base",
                UlamMode::Product => "product",
            },
            u.cells,
            u.cells_theta,
            u.cells_x,
            u.samples_per_side
        );
        let _ = writeln!(s, "[correlation]\nphi={}\npsi={}", self.correlation.phi, self.correlation.psi);
        let _ = writeln!(s, "[ld]\nobservable={}\nepsilon={}", self.ld.observable, self.ld.epsilon);
        let _ = writeln!(s, "[clt]\nobservable={}\nn_trunc={}", self.clt.observable, self.clt.n_trunc);
        let t = &self.transitivity;
        let _ = writeln!(
            s,
            "[transitivity]\nresolution={}\nsamples={}\n{}\nn_max={}\ndraws={}\nthreshold={}",
            t.resolution,
            t.samples,
            opt("eps", t.eps),
            t.n_max,
            t.draws,
            t.threshold
        );
        let f = &self.fit;
        let _ = writeln!(
            s,
            "[fit]\n{}\nkind={}\n{}",
            f.input
                .as_ref()
                .map_or_else(|| "# input=tails.csv".into(), |p| format!("input={}", p.display())),
            f.kind.as_str(),
            f.window.map_or_else(|| "# window=all".into(), |(a, b)| format!("window={a}:{b}"))
        );
        s
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}
