//! Subcommand implementations. Each writes its files into the output
//! directory and returns a short summary for standard output.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use survival_core::analysis::{
    check_collapse_phase, collapse_series, nearest_crossing, regime_report, RegimeReport, Windows,
};
use survival_core::dynamics::{
    long_time_asymptote, short_time, survival_decomposed_with, survival_direct_with, Decomposition,
};
use survival_core::grid::{time_grid, Spacing};
use survival_core::oracle::{propagate, FiniteLattice};
use survival_core::resonance::find_pole;
use survival_core::substrate::substrate_ldos;
use survival_core::{AdatomSpec, Error, Resonance, SurvivalSeries};

use crate::config::RunConfig;
use crate::output::{comparison_csv, max_abs_diff, num, series_csv, write_file, Report};
use crate::svg::{Curve, Inset, LogLogPlot, Marker};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Add-atom LDoS N0 and bare substrate LDoS N1 across the band.
    Ldos,
    /// Resonance pole, residue and edge weight.
    Pole,
    /// Survival probability for every enabled method, with a comparison.
    Survival,
    /// Decay regimes, crossover time and collapse dips.
    Regimes,
    /// Finite-lattice Chebyshev reference compared against the direct method.
    Oracle,
    /// Log-log survival plot with the crossover marker and tail modulation.
    Figure2,
}

/// Resolved configuration plus the output directory.
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub quiet: bool,
}

impl Context {
    fn progress(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub fn run(command: Command, ctx: &Context) -> Result<String, CliError> {
    fs::create_dir_all(&ctx.out).map_err(|source| CliError::Io { path: ctx.out.clone(), source })?;
    match command {
        Command::Ldos => ldos(ctx),
        Command::Pole => pole(ctx),
        Command::Survival => survival(ctx),
        Command::Regimes => regimes(ctx),
        Command::Oracle => oracle(ctx),
        Command::Figure2 => figure2(ctx),
    }
}

/// Pole search with the configured residual acceptance.
pub fn resonance(cfg: &RunConfig, spec: &AdatomSpec) -> Result<Resonance, CliError> {
    let res = find_pole(spec)?;
    if !(res.residual <= cfg.tolerance.pole_residual) {
        return Err(Error::NoConvergence(format!(
            "pole residual {:e} exceeds tolerance.pole_residual = {:e}",
            res.residual, cfg.tolerance.pole_residual
        ))
        .into());
    }
    Ok(res)
}

fn ldos(ctx: &Context) -> Result<String, CliError> {
    let spec = ctx.config.adatom()?;
    let sub = spec.substrate;
    let (lo, hi) = sub.band_edges();
    let n = ctx.config.ldos.points;
    let singular = sub.singular_points();
    let mut csv = String::from("e, n0, n1\n");
    let mut rows = 0;
    for i in 0..n {
        let e = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
        if singular.contains(&e) {
            continue;
        }
        let n0 = spec.ldos0(e)?;
        let n1 = substrate_ldos(e, &sub)?;
        csv.push_str(&format!("{}, {}, {}\n", num(e), num(n0), num(n1)));
        rows += 1;
    }
    let path = ctx.path("ldos.csv");
    write_file(&path, &csv)?;
    Ok(format!("wrote {rows} energies to {}\n", path.display()))
}

fn pole_report(spec: &AdatomSpec, res: &Resonance) -> Report {
    let a = res.prefactor();
    let mut r = Report::default();
    r.float("epsilon0", spec.epsilon0)
        .float("v0", spec.v0)
        .float("epsilon_r", res.epsilon_r)
        .float("gamma0", res.gamma0)
        .float("delta0", res.delta0)
        .float("re_a_bar", a.re)
        .float("im_a_bar", a.im)
        .float("abs_a_bar_sq", a.norm_sqr())
        .float("phase_a", res.phase_a())
        .float("beta", res.beta)
        .float("band_lower", res.band_edges.0)
        .float("band_upper", res.band_edges.1)
        .text("half", format!("{:?}", res.half).to_lowercase())
        .float("residual", res.residual)
        .text("iterations", res.iterations);
    r
}

fn pole(ctx: &Context) -> Result<String, CliError> {
    let spec = ctx.config.adatom()?;
    let res = resonance(&ctx.config, &spec)?;
    let text = pole_report(&spec, &res).render();
    write_file(&ctx.path("pole.txt"), &text)?;
    Ok(text)
}

fn main_grid(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let g = &cfg.grid;
    Ok(time_grid(g.t_min, g.t_max, g.points, g.spacing.into())?)
}

fn survival(ctx: &Context) -> Result<String, CliError> {
    let cfg = &ctx.config;
    let spec = cfg.adatom()?;
    let times = main_grid(cfg)?;
    let m = &cfg.methods;
    if !(m.direct || m.decomposed || m.short_time || m.long_time) {
        return Err(CliError::Config("methods: no method enabled".into()));
    }
    let needs_pole = m.decomposed || m.long_time;
    let res = if needs_pole { Some(resonance(cfg, &spec)?) } else { None };
    let mut all: Vec<SurvivalSeries> = Vec::new();
    if m.direct {
        ctx.progress("direct transform");
        all.push(survival_direct_with(&spec, &times, cfg.tolerance.direct)?);
    }
    if let (true, Some(res)) = (m.decomposed, &res) {
        ctx.progress("contour decomposition");
        all.push(survival_decomposed_with(&spec, res, &times, cfg.line_tolerance())?);
    }
    if m.short_time {
        all.push(short_time(&spec, &times)?);
    }
    if let (true, Some(res)) = (m.long_time, &res) {
        all.push(long_time_asymptote(&spec, res, &times)?);
    }
    let refs: Vec<&SurvivalSeries> = all.iter().collect();
    write_file(&ctx.path("survival.csv"), &series_csv(&refs))?;
    let mut summary = Report::default();
    if all.len() > 1 {
        let reference = &all[0];
        let others: Vec<&SurvivalSeries> = all[1..].iter().collect();
        write_file(&ctx.path("survival_comparison.csv"), &comparison_csv(reference, &others))?;
        summary.text("reference", reference.method.label());
        for s in &others {
            summary.float(&format!("max_abs_diff_{}", s.method.label()), max_abs_diff(reference, s));
        }
    }
    let plot = LogLogPlot {
        title: "Survival probability".into(),
        x_label: "time t (hbar/V)".into(),
        y_label: "survival probability P00".into(),
        curves: all
            .iter()
            .map(|s| Curve {
                label: s.method.label().into(),
                points: s.times.iter().copied().zip(s.p00.iter().copied()).collect(),
            })
            .collect(),
        marker: None,
        inset: None,
    };
    write_file(&ctx.path("survival.svg"), &plot.render())?;
    Ok(summary.render())
}

/// Everything `regimes` and `figure2` compute.
pub struct RegimeRun {
    pub resonance: Resonance,
    /// Decomposed series refined over the crossing region.
    pub series: SurvivalSeries,
    /// Direct series on the uniform tail grid.
    pub tail: SurvivalSeries,
    pub report: RegimeReport,
    /// Crossing `|psi_s| = |psi_r|` nearest to the principal dip.
    pub dip_crossing: Option<f64>,
}

pub fn tail_grid(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let f = &cfg.fit;
    let points = ((f.tail_t_max - f.tail_t_min) / f.tail_step).round() as usize + 1;
    Ok(time_grid(f.tail_t_min, f.tail_t_max, points, Spacing::Linear)?)
}

pub fn regime_run(cfg: &RunConfig, quiet: bool) -> Result<RegimeRun, CliError> {
    let say = |m: &str| {
        if !quiet {
            eprintln!("{m}");
        }
    };
    let spec = cfg.adatom()?;
    let res = resonance(cfg, &spec)?;
    say("contour decomposition with refinement over the crossing region");
    let series = collapse_series(&spec, &res, &main_grid(cfg)?, cfg.fit.refine, cfg.line_tolerance())?;
    say("direct transform on the tail grid");
    let tail = survival_direct_with(&spec, &tail_grid(cfg)?, cfg.tolerance.direct)?;
    say("regime analysis");
    let windows =
        Windows { exponential: (cfg.fit.exp_t_min, cfg.fit.exp_t_max), tail: (cfg.fit.tail_t_min, cfg.fit.tail_t_max) };
    let report = regime_report(&spec, &res, &series, &tail, windows)?;
    let dip_crossing = match report.principal_dip() {
        Some(d) => Some(nearest_crossing(&Decomposition::new(&spec, &res)?, &series, d.t_dip)?),
        None => None,
    };
    Ok(RegimeRun { resonance: res, series, tail, report, dip_crossing })
}

fn regime_text(run: &RegimeRun) -> String {
    let rep = &run.report;
    let res = &run.resonance;
    let mut r = Report::default();
    r.float("t_s", rep.t_s)
        .float("t_s_closed_form", rep.t_s_closed_form)
        .float("t_r", rep.t_r)
        .float("fitted_rate", rep.fitted_rate)
        .float("expected_rate", 2.0 * res.gamma0)
        .float("fitted_prefactor", rep.fitted_prefactor)
        .float("expected_prefactor", res.prefactor().norm_sqr())
        .float("tail_exponent", rep.tail_exponent)
        .float("modulation_freq", rep.modulation_freq)
        .float("bandwidth", res.bandwidth())
        .text("dips", rep.dips.len());
    if let Some(d) = rep.principal_dip() {
        let phase = check_collapse_phase(res, d);
        r.float("dip_t", d.t_dip).float("dip_depth", d.depth).float("dip_phase_residual", d.phase_residual);
        if let Some(c) = run.dip_crossing {
            r.float("dip_crossing", c);
        }
        r.float("phase_condition_residual", phase.residual)
            .float("level_over_width", phase.level_over_width)
            .float("width_over_phase_rate", phase.width_over_phase_rate);
    }
    for (k, d) in rep.dips.iter().enumerate() {
        r.text(&format!("dip_{k}"), format!("{}, {}", num(d.t_dip), num(d.depth)));
    }
    r.render()
}

fn regimes(ctx: &Context) -> Result<String, CliError> {
    let run = regime_run(&ctx.config, ctx.quiet)?;
    let text = regime_text(&run);
    write_file(&ctx.path("regimes.txt"), &text)?;
    write_file(&ctx.path("regimes.csv"), &series_csv(&[&run.series]))?;
    Ok(text)
}

fn oracle(ctx: &Context) -> Result<String, CliError> {
    let cfg = &ctx.config;
    let o = &cfg.oracle;
    if !o.enabled {
        return Err(CliError::Config("oracle.enabled: oracle is disabled in the configuration".into()));
    }
    let spec = cfg.adatom()?;
    let times = time_grid(o.t_min, o.t_max, o.points, o.spacing.into())?;
    let lattice = FiniteLattice::new(o.size, spec)?;
    ctx.progress("chebyshev propagation");
    let reference = propagate(&lattice, &times)?;
    ctx.progress("direct transform");
    let direct = survival_direct_with(&spec, &times, cfg.tolerance.direct)?;
    write_file(&ctx.path("oracle.csv"), &series_csv(&[&reference, &direct]))?;
    write_file(&ctx.path("oracle_comparison.csv"), &comparison_csv(&reference, &[&direct]))?;
    let mut r = Report::default();
    r.text("size", o.size)
        .float("reflection_time", lattice.reflection_time())
        .float("max_abs_diff_direct", max_abs_diff(&reference, &direct));
    Ok(r.render())
}

fn figure2(ctx: &Context) -> Result<String, CliError> {
    let run = regime_run(&ctx.config, ctx.quiet)?;
    let text = regime_text(&run);
    write_file(&ctx.path("figure2.csv"), &series_csv(&[&run.series]))?;
    write_file(&ctx.path("figure2_report.txt"), &text)?;
    write_file(&ctx.path("figure2.svg"), &figure2_svg(&run))?;
    Ok(text)
}

pub fn figure2_svg(run: &RegimeRun) -> String {
    let s = &run.series;
    let curve = |label: &str, f: &dyn Fn(usize) -> f64| Curve {
        label: label.into(),
        points: (0..s.len()).map(|i| (s.times[i], f(i))).collect(),
    };
    let freq = run.report.modulation_freq;
    let (a, b) = (run.tail.times[0], run.tail.times[run.tail.len() - 1]);
    let t0 = (a * b).sqrt();
    let t1 = t0 + 6.0 * 2.0 * PI / freq;
    let inset = Inset {
        title: format!("modulation of t^2 P00, frequency {freq:.4}"),
        points: run
            .tail
            .times
            .iter()
            .zip(&run.tail.p00)
            .filter(|(t, _)| **t >= t0 && **t <= t1)
            .map(|(t, p)| (*t, t * t * p))
            .collect(),
    };
    LogLogPlot {
        title: "Survival of an add-atom excitation".into(),
        x_label: "time t (hbar/V)".into(),
        y_label: "survival probability P00".into(),
        curves: vec![
            curve("P00", &|i| s.p00[i]),
            curve("|psi_s|^2", &|i| s.psi_s[i].norm_sqr()),
            curve("|psi_r|^2", &|i| s.psi_r[i].norm_sqr()),
        ],
        marker: Some(Marker { x: run.report.t_r, label: format!("t_R = {:.2}", run.report.t_r) }),
        inset: Some(inset),
    }
    .render()
}

pub fn default_out(cfg: &RunConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.clone())
}
