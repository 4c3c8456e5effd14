use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use viana_core::attractor::{attractor_grid, default_center, phase_space_diameter, transitivity_check};
use viana_core::ensemble::{derive_seed, member_rng, EnsembleConfig};
use viana_core::orbit::{calibrate_delta, calibrate_expansion_constant, Orbit};
use viana_core::stats::{
    clt_diagnostic, correlation_series, empirical_acip, fit_stretched_exp, fit_stretched_exp_points, ld_series,
    sigma_squared, tail_curves, Observable, StretchedExpFit, TailKind,
};
use viana_core::ulam::{
    build_ulam_2d, build_ulam_base, parry_density, spectral_gap, stationary_density, BaseSelector,
};
use viana_core::{Error, PhasePoint, SkewProductSpec};

use crate::config::{ConfigError, ExperimentConfig, UlamMode};
use crate::report::{
    parse_series3, parse_tails_csv, write_rows, write_series3, write_summary, write_tails_csv, CsvError, Envelopes,
    LogPlot, PlotSeries, Series3, TailSeries, CORRELATION_HEADER, LD_HEADER,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Iterate,
    Tails,
    Acip,
    Ulam,
    Correlation,
    Ld,
    Clt,
    Transitivity,
    Fit,
    Report,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Iterate => "iterate",
            Command::Tails => "tails",
            Command::Acip => "acip",
            Command::Ulam => "ulam",
            Command::Correlation => "correlation",
            Command::Ld => "ld",
            Command::Clt => "clt",
            Command::Transitivity => "transitivity",
            Command::Fit => "fit",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numeric(#[from] Error),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: CsvError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no results to report in {0}")]
    NoResults(PathBuf),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Numeric(e) => match e {
                Error::InvalidParameter { .. }
                | Error::CouplingRange(_)
                | Error::FullQuadratic(_)
                | Error::PeriodicCriticalOrbit(_)
                | Error::Renormalizable(..)
                | Error::TrappingFailed(_)
                | Error::NoSignChange { .. }
                | Error::OnSingularity => EXIT_CONFIG,
                _ => EXIT_NONCONVERGENCE,
            },
            RunError::Csv { .. } | RunError::Io { .. } | RunError::NoResults(_) => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub command: Command,
    pub directory: PathBuf,
    /// File names written, relative to the output directory.
    pub outputs: Vec<String>,
    pub summary: Vec<(String, String)>,
    /// Reason when a result was written but did not converge.
    pub nonconvergence: Option<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.nonconvergence.is_some() {
            EXIT_NONCONVERGENCE
        } else {
            EXIT_OK
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    dir: PathBuf,
    hash: String,
    outputs: Vec<String>,
    /// `(file, header)` of every CSV written.
    schemas: Vec<(String, String)>,
    summary: Vec<(String, String)>,
    nonconvergence: Option<String>,
}

impl Ctx<'_> {
    fn write(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|source| RunError::Io { path, source })?;
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
            if name.ends_with(".csv") {
                let header = body.lines().find(|l| !l.starts_with('#')).unwrap_or("");
                self.schemas.push((name.to_string(), header.to_string()));
            }
        }
        Ok(())
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    fn flag(&mut self, reason: impl Into<String>) {
        let reason = reason.into();
        self.nonconvergence = Some(match self.nonconvergence.take() {
            Some(prev) => format!("{prev}; {reason}"),
            None => reason,
        });
    }

    fn read(&self, path: &Path) -> Result<String, RunError> {
        fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    fn ensemble(&self) -> EnsembleConfig {
        EnsembleConfig::new(self.config.run.seed, self.config.run.ensemble_size).with_burn_in(self.config.run.burn_in)
    }
}

/// Runs one command, writing its outputs and `manifest.txt` into the
/// configured output directory.  The manifest is written on failure too.
pub fn run_experiment(config: &ExperimentConfig, command: Command) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let dir = config.output.directory.clone();
    fs::create_dir_all(&dir).map_err(|source| RunError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut ctx = Ctx {
        config,
        dir: dir.clone(),
        hash: config.hash(),
        outputs: Vec::new(),
        schemas: Vec::new(),
        summary: Vec::new(),
        nonconvergence: None,
    };
    let result = execute(&mut ctx, command);
    if result.is_ok() && command != Command::Fit {
        let summary = write_summary(&ctx.summary, &ctx.hash);
        let name = format!("{}_summary.txt", command.as_str());
        ctx.write(&name, &summary)?;
    }
    let status = match (&result, &ctx.nonconvergence) {
        (Err(e), _) => format!("error\nerror={}", single_line(&e.to_string())),
        (Ok(()), Some(reason)) => format!("nonconvergence\nreason={}", single_line(reason)),
        (Ok(()), None) => "ok".to_string(),
    };
    write_manifest(&ctx, command, &status, start)?;
    result?;
    Ok(RunOutcome {
        command,
        directory: dir,
        outputs: ctx.outputs,
        summary: ctx.summary,
        nonconvergence: ctx.nonconvergence,
    })
}

/// [`run_experiment`] on a dedicated pool of `threads` workers.
pub fn run_with_threads(config: &ExperimentConfig, command: Command, threads: usize) -> Result<RunOutcome, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| run_experiment(config, command))
}

fn single_line(s: &str) -> String {
    s.replace('\n', " ")
}

fn write_manifest(ctx: &Ctx<'_>, command: Command, status: &str, start: Instant) -> Result<(), RunError> {
    let mut m = String::new();
    let _ = writeln!(m, "command={}", command.as_str());
    let _ = writeln!(m, "config_sha256={}", ctx.hash);
    let _ = writeln!(m, "seed={}", ctx.config.run.seed);
    let _ = writeln!(m, "viana_version={}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "schema_version={SCHEMA_VERSION}");
    let _ = writeln!(m, "threads={}", rayon::current_num_threads());
    let started = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
        .saturating_sub(start.elapsed().as_secs());
    let _ = writeln!(m, "started_unix={started}");
    let _ = writeln!(m, "wall_time_ms={}", start.elapsed().as_millis());
    let _ = writeln!(m, "status={status}");
    let _ = writeln!(m, "outputs={}", ctx.outputs.join(","));
    for (file, header) in &ctx.schemas {
        let _ = writeln!(m, "schema.{file}=v{SCHEMA_VERSION}:{header}");
    }
    let mut section = String::new();
    for line in ctx.config.canonical().lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            Some(name) => section = name.to_string(),
            None => {
                let _ = writeln!(m, "config.{section}.{}", line.replace(' ', ""));
            }
        }
    }
    let path = ctx.dir.join("manifest.txt");
    fs::write(&path, m).map_err(|source| RunError::Io { path, source })
}

fn execute(ctx: &mut Ctx<'_>, command: Command) -> Result<(), RunError> {
    let spec = ctx.config.spec()?;
    match command {
        Command::Iterate => iterate(ctx, &spec),
        Command::Tails => tails(ctx, &spec),
        Command::Acip => acip(ctx, &spec),
        Command::Ulam => ulam(ctx, &spec),
        Command::Correlation => correlation(ctx, &spec),
        Command::Ld => ld(ctx, &spec),
        Command::Clt => clt(ctx, &spec),
        Command::Transitivity => transitivity(ctx, &spec),
        Command::Fit => fit(ctx),
        Command::Report => report(ctx),
    }
}

pub fn observable(spec: &SkewProductSpec, name: &str, delta: f64) -> viana_core::Result<Observable> {
    Ok(match name {
        "cos_theta" => Observable::cos_theta(),
        "x" => Observable::fiber(),
        "generic" => Observable::generic(),
        "coboundary_x" => Observable::coboundary(spec, &Observable::fiber()),
        "phi" => Observable::phi(spec, delta, None)?,
        other => match other.strip_prefix("const:").and_then(|c| c.parse().ok()) {
            Some(c) => Observable::constant(c),
            None => return Err(viana_core::Error::InvalidParameter {
                name: "observable",
                reason: format!("unknown observable '{other}'"),
            }),
        },
    })
}

fn iterate(ctx: &mut Ctx<'_>, spec: &SkewProductSpec) -> Result<(), RunError> {
    let it = &ctx.config.iterate;
    let start = PhasePoint::new(it.theta, it.x);
    if !spec.contains(start) {
        return Err(Error::InvalidParameter {
            name: "iterate.start",
            reason: format!("({}, {}) outside base x J", it.theta, it.x),
        }
        .into());
    }
    let mut orbit = Orbit::from_point_refreshed(spec, start, member_rng(ctx.config.run.seed, 0));
    let mut rows = vec![format!("0,{},{}", start.theta, start.x)];
    let mut hit = None;
    for n in 1..=it.steps {
        match orbit.step() {
            Ok(p) => rows.push(format!("{n},{},{}", p.theta, p.x)),
            Err(Error::SingularHit { step }) => {
                hit = Some(step);
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let body = write_rows("n,theta,x", rows, &ctx.hash);
    ctx.write("trajectory.csv", &body)?;
    ctx.note("steps", orbit.steps());
    if let Some(step) = hit {
        ctx.note("singular_hit", step);
        ctx.flag(format!("orbit hit the critical line at step {step}"));
    }
    Ok(())
}

/// `(c, ε, δ)` from the config, calibrating the ones left unset.
fn time_constants(ctx: &mut Ctx<'_>, spec: &SkewProductSpec) -> Result<(f64, f64, f64), RunError> {
    let cfg = ctx.config;
    let seed = cfg.run.seed;
    let c = match cfg.stats.c {
        Some(c) => c,
        None => {
            let cal = calibrate_expansion_constant(
                spec,
                &EnsembleConfig::new(derive_seed(seed, 1), cfg.run.ensemble_size.min(2_000)),
                10_000,
            )?;
            ctx.note("c_mean", cal.mean);
            cal.c
        }
    };
    let epsilon = cfg.stats.epsilon.unwrap_or(c / 2.0);
    let delta = match cfg.stats.delta {
        Some(d) => d,
        None => {
            let cal = calibrate_delta(
                spec,
                epsilon,
                cfg.stats.kappa,
                &EnsembleConfig::new(derive_seed(seed, 2), 200).with_burn_in(1_000),
                10_000,
            )?;
            ctx.note("delta_halvings", cal.halvings);
            ctx.note("delta_mean_log_distance", cal.mean_log_distance);
            cal.delta
        }
    };
    ctx.note("c", c);
    ctx.note("epsilon", epsilon);
    ctx.note("delta", delta);
    Ok((c, epsilon, delta))
}

fn tails(ctx: &mut Ctx<'_>, spec: &SkewProductSpec) -> Result<(), RunError> {
    let (c, epsilon, delta) = time_constants(ctx, spec)?;
    let cfg = ctx.config;
    let curves = tail_curves(spec, c, epsilon, delta, &cfg.run.n_list, cfg.run.ensemble_size, cfg.run.seed)?;
    let series: Vec<TailSeries> = curves.iter().map(TailSeries::from).collect();
    ctx.write("tails.csv", &write_tails_csv(&series, &ctx.hash))?;
    ctx.note("ensemble_size", curves[0].ensemble_size);
    ctx.note("excluded", curves[0].excluded);
    let joint = curves.iter().find(|c| c.kind == TailKind::Joint).expect("all kinds present");
    match fit_stretched_exp(joint, cfg.fit.window) {
        Ok(f) => note_fit(ctx, "joint_", &f),
        Err(e) => ctx.note("joint_fit", single_line(&e.to_string())),
    }
    if cfg.output.svg {
        tails_plot(ctx, &series)?;
    }
    Ok(())
}

fn note_fit(ctx: &mut Ctx<'_>, prefix: &str, f: &StretchedExpFit) {
    ctx.note(&format!("{prefix}c_hat"), f.c_hat);
    ctx.note(&format!("{prefix}tau_hat"), f.tau_hat);
    ctx.note(&format!("{prefix}zeta_hat"), f.zeta_hat);
    ctx.note(&format!("{prefix}r2"), f.r2);
    ctx.note(&format!("{prefix}r2_log"), f.r2_log);
    ctx.note(&format!("{prefix}window"), format!("{}:{}", f.window.0, f.window.1));
    if let Some((lo, hi)) = f.zeta_ci {
        ctx.note(&format!("{prefix}zeta_ci"), format!("{lo}:{hi}"));
    }
}

fn tails_plot(ctx: &mut Ctx<'_>, series: &[TailSeries]) -> Result<(), RunError> {
    let mut plotted: Vec<PlotSeries> = series
        .iter()
        .enumerate()
        .map(|(k, t)| PlotSeries {
            name: t.kind.as_str().to_string(),
            points: t.n_f64().into_iter().zip(t.p.iter().copied()).collect(),
            color: crate::report::color(k),
            dashed: false,
        })
        .collect();
    let plot = LogPlot::fitting("Tail curves p_n", "n", "p_n", &plotted);
    if let Some(t) = series.iter().find(|t| t.kind == ctx.config.fit.kind) {
        let ns = t.n_f64();
        let fit = fit_stretched_exp_points(&ns, &t.p, window_f64(ctx.config.fit.window), ctx.config.run.seed).ok();
        let env = Envelopes::compute(&ns, &t.p, fit);
        note_envelopes(ctx, "tails", &env);
        plotted.extend(env.series(&ns, plotted.len()));
        ctx.write("tails_envelopes.csv", &env.csv(&ns, &ctx.hash))?;
    }
    ctx.write("tails.svg", &plot.render(&plotted, &ctx.hash))
}

fn note_envelopes(ctx: &mut Ctx<'_>, stem: &str, env: &Envelopes) {
    for (tag, e) in [("1_3", env.third), ("1_7", env.seventh)] {
        if let Some(e) = e {
            ctx.note(&format!("{stem}_envelope_{tag}_c"), e.c);
            ctx.note(&format!("{stem}_envelope_{tag}_tau"), e.tau);
        }
    }
}

fn window_f64(w: Option<(u64, u64)>) -> Option<(f64, f64)> {
    w.map(|(a, b)| (a as f64, b as f64))
}

fn acip(ctx: &mut Ctx<'_>, spec: &SkewProductSpec) -> Result<(), RunError> {
    let cfg = ctx.config;
    let a = &cfg.acip;
    let density = empirical_acip(spec, a.samples, cfg.run.burn_in, (a.bins_theta, a.bins_x), cfg.run.seed)?;
    let rows = (0..density.theta.cells).flat_map(|i| {
        let d = &density;
        (0..d.x.cells).map(move |j| {
            format!(
                "{},{},{},{},{}",
                d.theta.left(i),
                d.theta.right(i),
                d.x.left(j),
                d.x.right(j),
                d.value(i, j)
            )
        })
    });
    let body = write_rows("theta_left,theta_right,x_left,x_right,value", rows.collect::<Vec<_>>(), &ctx.hash);
    ctx.write("acip2d.csv", &body)?;
    let marginal = density.theta_marginal();
    let rows = marginal
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{},{},{}", density.theta.left(i), density.theta.right(i), v));
    let body = write_rows(crate::report::DENSITY_HEADER, rows, &ctx.hash);
    ctx.write("density.csv", &body)?;
    ctx.note("samples", density.samples);
    ctx.note("dropped", density.dropped);
    ctx.note("total_mass", density.total_mass());
    Ok(())
}

fn ulam(ctx: &mut Ctx<'_>, spec: &SkewProductSpec) -> Result<(), RunError> {
    let cfg = ctx.config;
    let u = &cfg.ulam;
    let (op, selector) = match u.mode {
        UlamMode::Base => {
            let sel = BaseSelector::of(spec);
            (build_ulam_base(sel, u.cells)?, Some(sel))
        }
        UlamMode::Product => (
            build_ulam_2d(spec, u.cells_theta, u.cells_x, u.samples_per_side, cfg.run.seed)?,
            None,
        ),
    };
    let density = stationary_density(&op);
    let body = density.to_csv();
    ctx.write("density.csv", &format!("{}{body}", crate::report::hash_comment(&ctx.hash)))?;
    ctx.note("cells", op.len());
    ctx.note("iterations", density.iterations);
    ctx.note("l1_residual", density.l1_residual);
    if let Some(noise) = &op.row_stderr {
        ctx.note("max_row_stderr", noise.iter().copied().fold(0.0, f64::max));
    }
    if !density.converged {
        ctx.flag("power iteration did not converge");
    }
    if let Some(BaseSelector::Beta { beta }) = selector {
        let parry = parry_density(beta, u.cells)?;
        ctx.note("l1_to_parry", density.l1_distance(&parry));
    }
    if u.mode == UlamMode::Base {
        let gap = spectral_gap(&op);
        ctx.note("spectral_gap", gap.gap);
        ctx.note("lambda2", gap.lambda2);
        if !gap.converged {
            ctx.flag("spectral gap estimate did not converge");
        }
    }
    Ok(())
}

fn stats_delta(ctx: &Ctx<'_>, spec: &SkewProductSpec) -> f64 {
    ctx.config
        .stats
        .delta
        .unwrap_or_else(|| spec.alpha().powf(1.0 - 2.0 * ctx.config.stats.kappa).min(0.49))
}

fn positive_ns(ctx: &Ctx<'_>) -> Vec<u64> {
    ctx.config.run.n_list.iter().copied().filter(|&n| n > 0).collect()
}

fn correlation(ctx: &mut Ctx<'_>, spec: &SkewProductSpec) -> Result<(), RunError> {
    let delta = stats_delta(ctx, spec);
    let c = &ctx.config.correlation;
    let phi = observable(spec, &c.phi, delta)?;
    let psi = observable(spec, &c.psi, delta)?;
    let series = correlation_series(spec, &phi, &psi, &ctx.config.run.n_list, &ctx.ensemble())?;
    let table = Series3 {
        n: series.points.iter().map(|p| p.n).collect(),
        value: series.points.iter().map(|p| p.corr).collect(),
        stderr: series.points.iter().map(|p| p.stderr).collect(),
    };
    ctx.write("correlation.csv", &write_series3(&table, CORRELATION_HEADER, &ctx.hash))?;
    ctx.note("phi_norm", series.phi_norm);
    ctx.note("psi_sup", series.psi_sup);
    ctx.note("ensemble_size", series.ensemble_size);
    ctx.note("excluded", series.excluded);
    if let Some(rate) = series.decay_rate() {
        ctx.note("decay_rate", rate);
    }
    if ctx.config.output.svg {
        series3_plot(ctx, &table, "correlation", "Correlations Cor_n", "Cor_n")?;
    }
    Ok(())
}

fn ld(ctx: &mut Ctx<'_>, spec: &SkewProductSpec) -> Result<(), RunError> {
    let delta = stats_delta(ctx, spec);
    let phi = observable(spec, &ctx.config.ld.observable, delta)?;
    let series = ld_series(spec, &phi, &[ctx.config.ld.epsilon], &positive_ns(ctx), &ctx.ensemble())?;
    let table = Series3 {
        n: series.points.iter().map(|p| p.n).collect(),
        value: series.points.iter().map(|p| p.p).collect(),
        stderr: series.points.iter().map(|p| p.stderr).collect(),
    };
    ctx.write("ld.csv", &write_series3(&table, LD_HEADER, &ctx.hash))?;
    ctx.note("mean", series.mean);
    ctx.note("ensemble_size", series.ensemble_size);
    ctx.note("excluded", series.excluded);
    if ctx.config.output.svg {
        series3_plot(ctx, &table, "ld", "Large deviations LD_n", "LD_n")?;
    }
    Ok(())
}

fn series3_plot(ctx: &mut Ctx<'_>, table: &Series3, stem: &str, title: &str, label: &str) -> Result<(), RunError> {
    let ns: Vec<f64> = table.n.iter().map(|&n| n as f64).collect();
    let mut plotted = vec![PlotSeries {
        name: stem.to_string(),
        points: ns.iter().copied().zip(table.value.iter().copied()).collect(),
        color: crate::report::color(0),
        dashed: false,
    }];
    let plot = LogPlot::fitting(title, "n", label, &plotted);
    let env = Envelopes::compute(&ns, &table.value, None);
    note_envelopes(ctx, stem, &env);
    plotted.extend(env.series(&ns, 1));
    ctx.write(&format!("{stem}_envelopes.csv"), &env.csv(&ns, &ctx.hash))?;
    ctx.write(&format!("{stem}.svg"), &plot.render(&plotted, &ctx.hash))
}

fn clt(ctx: &mut Ctx<'_>, spec: &SkewProductSpec) -> Result<(), RunError> {
    let delta = stats_delta(ctx, spec);
    let phi = observable(spec, &ctx.config.clt.observable, delta)?;
    let ens = ctx.ensemble();
    let sigma = sigma_squared(spec, &phi, ctx.config.clt.n_trunc, &ens)?;
    let diag = clt_diagnostic(spec, &phi, &positive_ns(ctx), &ens)?;
    let rows = diag.points.iter().map(|p| format!("{},{},{}", p.n, p.sigma2, p.ks));
    ctx.write("clt.csv", &write_rows("n,sigma2,ks", rows, &ctx.hash))?;
    let levels = sigma.levels.iter().map(|(n, v)| format!("{n},{v}"));
    ctx.write("sigma2.csv", &write_rows("n,sigma2", levels, &ctx.hash))?;
    ctx.note("mean", sigma.mean);
    ctx.note("sigma2", sigma.sigma2);
    ctx.note("drift", sigma.drift);
    ctx.note("variance", diag.variance);
    ctx.note("degenerate", diag.degenerate);
    if let Some(s) = diag.be_slope {
        ctx.note("be_slope", s);
    }
    if sigma.flagged && !diag.degenerate {
        ctx.flag(format!("sigma^2 drift {} exceeds 10%", sigma.drift));
    }
    Ok(())
}

fn transitivity(ctx: &mut Ctx<'_>, spec: &SkewProductSpec) -> Result<(), RunError> {
    let t = &ctx.config.transitivity;
    let grid = attractor_grid(spec, (t.resolution, t.resolution), t.samples, ctx.config.run.seed)?;
    let eps = t.eps.unwrap_or_else(|| phase_space_diameter(spec));
    let result = transitivity_check(spec, &grid, default_center(spec), eps, t.n_max, t.draws, t.threshold)?;
    let rows = result.coverage.iter().enumerate().map(|(n, c)| format!("{n},{c}"));
    ctx.write("coverage.csv", &write_rows("n,coverage", rows, &ctx.hash))?;
    ctx.write(
        "attractor_mask.csv",
        &format!("{}{}", crate::report::hash_comment(&ctx.hash), grid.to_csv()),
    )?;
    if ctx.config.output.svg {
        let svg = grid.to_svg().replacen(
            "<rect",
            &format!("<!-- config_sha256={} -->\n<rect", ctx.hash),
            1,
        );
        ctx.write("attractor.svg", &svg)?;
    }
    ctx.note("occupied_cells", grid.occupied_count());
    ctx.note("eps", eps);
    ctx.note("ball_points", result.ball_points);
    ctx.note("n0", result.n0.map_or_else(|| "none".to_string(), |n| n.to_string()));
    ctx.note("final_coverage", result.coverage.last().copied().unwrap_or(0.0));
    Ok(())
}

fn fit(ctx: &mut Ctx<'_>) -> Result<(), RunError> {
    let cfg = ctx.config;
    let path = cfg.fit.input.clone().unwrap_or_else(|| ctx.dir.join("tails.csv"));
    let text = ctx.read(&path)?;
    let series = parse_tails_csv(&text).map_err(|source| RunError::Csv {
        path: path.clone(),
        source,
    })?;
    let t = series
        .iter()
        .find(|t| t.kind == cfg.fit.kind)
        .ok_or_else(|| RunError::Numeric(Error::Unfittable(format!("no '{}' rows", cfg.fit.kind.as_str()))))?;
    ctx.note("kind", t.kind.as_str());
    let fit = fit_stretched_exp_points(&t.n_f64(), &t.p, window_f64(cfg.fit.window), cfg.run.seed);
    match fit {
        Ok(f) => {
            note_fit(ctx, "", &f);
            let summary = write_summary(&ctx.summary, &ctx.hash);
            ctx.write("fit.txt", &summary)
        }
        Err(e) => {
            ctx.note("error", single_line(&e.to_string()));
            let summary = write_summary(&ctx.summary, &ctx.hash);
            ctx.write("fit.txt", &summary)?;
            Err(e.into())
        }
    }
}

fn report(ctx: &mut Ctx<'_>) -> Result<(), RunError> {
    let mut produced = 0;
    let tails_path = ctx.dir.join("tails.csv");
    if tails_path.exists() {
        let text = ctx.read(&tails_path)?;
        let series = parse_tails_csv(&text).map_err(|source| RunError::Csv {
            path: tails_path.clone(),
            source,
        })?;
        tails_plot(ctx, &series)?;
        produced += 1;
    }
    for (stem, header, title, label) in [
        ("correlation", CORRELATION_HEADER, "Correlations Cor_n", "Cor_n"),
        ("ld", LD_HEADER, "Large deviations LD_n", "LD_n"),
    ] {
        let path = ctx.dir.join(format!("{stem}.csv"));
        if path.exists() {
            let text = ctx.read(&path)?;
            let table = parse_series3(&text, header).map_err(|source| RunError::Csv {
                path: path.clone(),
                source,
            })?;
            series3_plot(ctx, &table, stem, title, label)?;
            produced += 1;
        }
    }
    if produced == 0 {
        return Err(RunError::NoResults(ctx.dir.clone()));
    }
    ctx.note("reports", produced);
    Ok(())
}
