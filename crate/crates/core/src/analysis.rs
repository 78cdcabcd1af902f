//! Regime extraction from survival series: spreading time, survival/return
//! crossover, exponential and power-law fits, tail modulation and survival
//! collapse dips.

use crate::dynamics::{survival_decomposed_with, Decomposition, SurvivalSeries};
use crate::error::{Error, Result};
use crate::grid::refine;
use crate::quadrature::Tolerance;
use crate::resonance::{central_moment, AdatomSpec, BoundStatePolicy, Resonance};
use crate::substrate::substrate_ldos;
use crate::C64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Minimum `envelope / P00` for a local minimum to count as a collapse.
pub const DIP_THRESHOLD: f64 = 10.0;
/// Points this far below the rolling median are masked out of fits.
pub const MASK_FACTOR: f64 = 10.0;
const MEDIAN_HALF_WINDOW: usize = 5;
const MIN_FIT_POINTS: usize = 10;

/// A survival-collapse dip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseDip {
    pub t_dip: f64,
    /// `max(|psi_s|², |psi_r|²) / P00` at the dip.
    pub depth: f64,
    /// `arg psi_r - arg psi_s - π` wrapped to `(-π, π]`: zero for perfect
    /// destructive interference.
    pub phase_residual: f64,
}

/// Summary of the decay regimes.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    /// Numerical spreading time (minimum of `|ā|²e^{-2Γt} - (1 - m₂t²)`).
    pub t_s: f64,
    /// Closed form `π N₁(ε₀)`.
    pub t_s_closed_form: f64,
    pub t_r: f64,
    pub fitted_rate: f64,
    pub fitted_prefactor: f64,
    pub tail_exponent: f64,
    /// Angular frequency of the tail modulation.
    pub modulation_freq: f64,
    pub dips: Vec<CollapseDip>,
}

impl RegimeReport {
    /// Deepest dip, if any.
    pub fn principal_dip(&self) -> Option<&CollapseDip> {
        principal_dip(&self.dips)
    }
}

pub fn principal_dip(dips: &[CollapseDip]) -> Option<&CollapseDip> {
    dips.iter().max_by(|a, b| a.depth.total_cmp(&b.depth))
}

/// Both spreading-time estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadingTime {
    pub closed_form: f64,
    pub numerical: f64,
}

impl SpreadingTime {
    /// Ratio of the larger to the smaller estimate.
    pub fn disagreement(&self) -> f64 {
        let (a, b) = (self.closed_form, self.numerical);
        a.max(b) / a.min(b)
    }
}

/// Spreading time: closed form `π N₁(ε₀)` from the bare substrate density,
/// and the time where the exponential `|ā|² e^{-2Γ₀t}` undercuts the
/// quadratic onset `1 - m₂ t²` the most.
pub fn estimate_ts(spec: &AdatomSpec, res: &Resonance) -> Result<SpreadingTime> {
    let closed_form = PI * substrate_ldos(spec.epsilon0, &spec.substrate)?;
    let m2 = central_moment(spec, 2, spec.epsilon0, BoundStatePolicy::Include)?;
    let a2 = res.prefactor().norm_sqr();
    let g = res.gamma0;
    if !(m2 > 0.0) {
        return Err(Error::Domain("second moment vanishes: no short-time decay".into()));
    }
    let gap = |t: f64| a2 * (-2.0 * g * t).exp() - (1.0 - m2 * t * t);
    let numerical = golden_min(gap, 0.0, 1.0 / m2.sqrt(), 1e-12);
    Ok(SpreadingTime { closed_form, numerical })
}

fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn require_amplitudes(series: &SurvivalSeries) -> Result<()> {
    let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
    if series.psi_s.iter().all(finite) && series.psi_r.iter().all(finite) {
        Ok(())
    } else {
        Err(Error::Domain(format!("series from method {} carries no amplitudes", series.method.label())))
    }
}

/// Every grid interval on which `ln|psi_s| - ln|psi_r|` changes sign.
///
/// Once `|psi_s|` has decayed to the size of the modulated return amplitude
/// the two magnitudes cross repeatedly, so there are usually several.
pub fn crossing_brackets(series: &SurvivalSeries) -> Result<Vec<(f64, f64)>> {
    require_amplitudes(series)?;
    let diff = |i: usize| series.psi_s[i].norm().ln() - series.psi_r[i].norm().ln();
    Ok((1..series.len())
        .filter(|&i| (diff(i - 1) > 0.0) != (diff(i) > 0.0))
        .map(|i| (series.times[i - 1], series.times[i]))
        .collect())
}

/// Grid interval containing the first crossing `|psi_s| = |psi_r|`
/// (pure survival falling below the return amplitude).
pub fn bracket_tr(series: &SurvivalSeries) -> Result<(f64, f64)> {
    require_amplitudes(series)?;
    let diff = |i: usize| series.psi_s[i].norm().ln() - series.psi_r[i].norm().ln();
    for i in 1..series.len() {
        if diff(i - 1) > 0.0 && diff(i) <= 0.0 {
            return Ok((series.times[i - 1], series.times[i]));
        }
    }
    Err(Error::Domain(format!(
        "no crossing of |psi_s| and |psi_r| on [{}, {}]; extend the time grid",
        series.times.first().copied().unwrap_or(0.0),
        series.times.last().copied().unwrap_or(0.0)
    )))
}

/// Root of `ln|psi_s| - ln|psi_r|` inside a sign-changing bracket.
pub fn bisect_crossing(dec: &Decomposition, bracket: (f64, f64)) -> Result<f64> {
    let (mut a, mut b) = bracket;
    let f = |t: f64| -> Result<f64> { Ok(dec.pure_survival(t).norm().ln() - dec.return_amplitude(t)?.norm().ln()) };
    let mut fa = f(a)?;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b || b - a <= 1e-13 * b {
            break;
        }
        let fm = f(m)?;
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Crossover time `t_R`: the first crossing from [`bracket_tr`] refined by
/// bisection with `dec`.
pub fn estimate_tr(dec: &Decomposition, series: &SurvivalSeries) -> Result<f64> {
    bisect_crossing(dec, bracket_tr(series)?)
}

/// The crossing `|psi_s| = |psi_r|` closest to `t`, refined by bisection.
pub fn nearest_crossing(dec: &Decomposition, series: &SurvivalSeries, t: f64) -> Result<f64> {
    let brackets = crossing_brackets(series)?;
    let best = brackets
        .iter()
        .min_by(|x, y| {
            let dx = (0.5 * (x.0 + x.1) - t).abs();
            let dy = (0.5 * (y.0 + y.1) - t).abs();
            dx.total_cmp(&dy)
        })
        .ok_or_else(|| Error::Domain("no crossing of |psi_s| and |psi_r| in the series".into()))?;
    bisect_crossing(dec, *best)
}

/// Fraction of the start time added on both sides of the crossing region.
pub const WINDOW_PAD: f64 = 0.1;

/// Span of the crossing region, from the first to the last crossing
/// bracket, padded by [`WINDOW_PAD`]: the only place where a collapse can
/// occur.
pub fn collapse_window(series: &SurvivalSeries) -> Result<(f64, f64)> {
    let brackets = crossing_brackets(series)?;
    match (brackets.first(), brackets.last()) {
        (Some(first), Some(last)) => {
            let pad = WINDOW_PAD * first.0;
            Ok(((first.0 - pad).max(0.0), last.1 + pad))
        }
        _ => Err(Error::Domain(format!(
            "no crossing of |psi_s| and |psi_r| on [{}, {}]; extend the time grid",
            series.times.first().copied().unwrap_or(0.0),
            series.times.last().copied().unwrap_or(0.0)
        ))),
    }
}

/// Decomposed series on `times`, refined `factor`-fold over the crossing
/// region found on the coarse grid.
pub fn collapse_series(
    spec: &AdatomSpec,
    res: &Resonance,
    times: &[f64],
    factor: usize,
    tolerance: Tolerance,
) -> Result<SurvivalSeries> {
    let coarse = survival_decomposed_with(spec, res, times, tolerance)?;
    let (lo, hi) = collapse_window(&coarse)?;
    let fine = refine(times, lo, hi, factor);
    survival_decomposed_with(spec, res, &fine, tolerance)
}

fn wrap(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

fn dip_at(t: f64, s: C64, r: C64) -> CollapseDip {
    let p = (s + r).norm_sqr().max(f64::MIN_POSITIVE);
    CollapseDip { t_dip: t, depth: s.norm_sqr().max(r.norm_sqr()) / p, phase_residual: wrap(r.arg() - s.arg() - PI) }
}

/// Local minima of `P00` at least [`DIP_THRESHOLD`] below the envelope
/// `max(|psi_s|², |psi_r|²)`.
///
/// With `refine`, which returns `(psi_s, psi_r)` at any time, each candidate
/// is relocated by golden-section search between its grid neighbours.
/// Candidates are screened with a looser threshold before relocation.
pub fn detect_collapse(
    series: &SurvivalSeries,
    refine: Option<&dyn Fn(f64) -> Result<(C64, C64)>>,
) -> Result<Vec<CollapseDip>> {
    require_amplitudes(series)?;
    let n = series.len();
    let mut dips = Vec::new();
    let p = &series.p00;
    for i in 1..n.saturating_sub(1) {
        if !(p[i] < p[i - 1] && p[i] <= p[i + 1]) {
            continue;
        }
        let coarse = dip_at(series.times[i], series.psi_s[i], series.psi_r[i]);
        let dip = match refine {
            None => coarse,
            Some(eval) => {
                if coarse.depth < 2.0 {
                    continue;
                }
                let mut failure = None;
                let t = golden_min(
                    |t| match eval(t) {
                        Ok((s, r)) => (s + r).norm_sqr(),
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::INFINITY
                        }
                    },
                    series.times[i - 1],
                    series.times[i + 1],
                    1e-12,
                );
                if let Some(e) = failure {
                    return Err(e);
                }
                let (s, r) = eval(t)?;
                let fine = dip_at(t, s, r);
                if fine.depth >= coarse.depth {
                    fine
                } else {
                    coarse
                }
            }
        };
        if dip.depth >= DIP_THRESHOLD {
            dips.push(dip);
        }
    }
    Ok(dips)
}

/// Phase condition for a full collapse and the accompanying scale ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCheck {
    /// `(ε_r - ε_L) t - φ(t) - (π - φ_a)` wrapped to `(-π, π]`, with
    /// `φ(t) = atan2(β sin Bt, 1 - β cos Bt)`.
    pub residual: f64,
    /// `(ε_r - ε_L) / Γ₀`, which must be large.
    pub level_over_width: f64,
    /// `Γ₀ t / 2π`, which must exceed 1.
    pub width_over_phase_rate: f64,
}

impl PhaseCheck {
    pub fn ordering_holds(&self) -> bool {
        self.level_over_width > 10.0 && self.width_over_phase_rate > 1.0
    }
}

/// Return phase in the long-time limit, `atan2(β sin Bt, 1 - β cos Bt)`.
pub fn return_phase(beta: f64, bandwidth: f64, t: f64) -> f64 {
    let (s, c) = (bandwidth * t).sin_cos();
    (beta * s).atan2(1.0 - beta * c)
}

pub fn check_collapse_phase(res: &Resonance, dip: &CollapseDip) -> PhaseCheck {
    let t = dip.t_dip;
    let (lo, _) = res.band_edges;
    let phi = return_phase(res.beta, res.bandwidth(), t);
    let residual = wrap((res.epsilon_r - lo) * t - phi - (PI - res.phase_a()));
    PhaseCheck {
        residual,
        level_over_width: (res.epsilon_r - lo) / res.gamma0,
        width_over_phase_rate: res.gamma0 * t / (2.0 * PI),
    }
}

/// Indices inside `window` that survive dip masking (points more than
/// [`MASK_FACTOR`] below the rolling median of the series).
pub fn fit_indices(series: &SurvivalSeries, window: (f64, f64)) -> Vec<usize> {
    let p = &series.p00;
    let n = p.len();
    (0..n)
        .filter(|&i| series.times[i] >= window.0 && series.times[i] <= window.1 && p[i] > 0.0)
        .filter(|&i| {
            let lo = i.saturating_sub(MEDIAN_HALF_WINDOW);
            let hi = (i + MEDIAN_HALF_WINDOW + 1).min(n);
            let mut w: Vec<f64> = p[lo..hi].to_vec();
            w.sort_by(|a, b| a.total_cmp(b));
            p[i] * MASK_FACTOR >= w[w.len() / 2]
        })
        .collect()
}

/// Least-squares line `y = c0 + c1 x`; returns `(c0, c1, rms residual)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let c1 = sxy / sxx;
    let c0 = my - c1 * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - c0 - c1 * a).powi(2)).sum::<f64>() / n).sqrt();
    (c0, c1, rms)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    pub rate: f64,
    pub prefactor: f64,
    /// RMS residual of `ln P00`.
    pub residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub residual: f64,
    pub points: usize,
}

fn windowed(series: &SurvivalSeries, window: (f64, f64)) -> Result<Vec<usize>> {
    let idx = fit_indices(series, window);
    if idx.len() < MIN_FIT_POINTS {
        return Err(Error::Domain(format!(
            "fit window [{}, {}] holds {} usable points, need at least {MIN_FIT_POINTS}",
            window.0,
            window.1,
            idx.len()
        )));
    }
    Ok(idx)
}

/// Fit `P00 = A e^{-rate t}` on `window`.
pub fn fit_exponential(series: &SurvivalSeries, window: (f64, f64)) -> Result<ExponentialFit> {
    let idx = windowed(series, window)?;
    let x: Vec<f64> = idx.iter().map(|&i| series.times[i]).collect();
    let y: Vec<f64> = idx.iter().map(|&i| series.p00[i].ln()).collect();
    let (c0, c1, residual) = linear_fit(&x, &y);
    Ok(ExponentialFit { rate: -c1, prefactor: c0.exp(), residual, points: idx.len() })
}

/// Fit `P00 = A t^{exponent}` on `window`.
pub fn fit_power_law(series: &SurvivalSeries, window: (f64, f64)) -> Result<PowerLawFit> {
    if window.0 <= 0.0 {
        return Err(Error::Domain("power-law window must start at t > 0".into()));
    }
    let idx = windowed(series, window)?;
    let x: Vec<f64> = idx.iter().map(|&i| series.times[i].ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&i| series.p00[i].ln()).collect();
    let (c0, c1, residual) = linear_fit(&x, &y);
    Ok(PowerLawFit { exponent: c1, prefactor: c0.exp(), residual, points: idx.len() })
}

/// Dominant angular frequency of the oscillation riding on the power-law
/// tail in `window`, from the periodogram of `P00 / (A t^p) - 1`, searched
/// up to `max_omega` (and the sampling limit of the grid).
pub fn modulation_frequency(series: &SurvivalSeries, window: (f64, f64), max_omega: f64) -> Result<f64> {
    let fit = fit_power_law(series, window)?;
    let idx = windowed(series, window)?;
    let t: Vec<f64> = idx.iter().map(|&i| series.times[i]).collect();
    let mut r: Vec<f64> =
        idx.iter().map(|&i| series.p00[i] / (fit.prefactor * series.times[i].powf(fit.exponent)) - 1.0).collect();
    let n = t.len();
    // Trapezoid weights for a possibly non-uniform grid.
    let w: Vec<f64> = (0..n)
        .map(|k| {
            let left = if k > 0 { t[k] - t[k - 1] } else { 0.0 };
            let right = if k + 1 < n { t[k + 1] - t[k] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect();
    let mean = w.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>();
    r.iter_mut().for_each(|v| *v -= mean);
    let power = |omega: f64| -> f64 {
        let s: C64 = (0..n).map(|k| C64::from_polar(w[k] * r[k], -omega * t[k])).sum();
        s.norm_sqr()
    };
    let span = t[n - 1] - t[0];
    let max_step = t.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
    let omega_min = 4.0 * PI / span;
    let omega_max = (0.9 * PI / max_step).min(max_omega);
    if omega_max <= omega_min {
        return Err(Error::Domain("tail window too short or too coarse to resolve a modulation".into()));
    }
    let step = 2.0 * PI / (4.0 * span);
    let count = ((omega_max - omega_min) / step).ceil() as usize + 1;
    let powers: Vec<f64> =
        (0..count).into_par_iter().map(|k| power((omega_min + step * k as f64).min(omega_max))).collect();
    let mut best = 0;
    for (k, &p) in powers.iter().enumerate() {
        if p > powers[best] {
            best = k;
        }
    }
    let center = omega_min + step * best as f64;
    let a = (center - step).max(omega_min);
    let b = (center + step).min(omega_max);
    Ok(golden_min(|om| -power(om), a, b, 1e-12))
}

/// Fit windows used by [`regime_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Windows {
    pub exponential: (f64, f64),
    pub tail: (f64, f64),
}

/// Assemble the regime report from a decomposed series that resolves the
/// collapse and a densely sampled tail series.
pub fn regime_report(
    spec: &AdatomSpec,
    res: &Resonance,
    series: &SurvivalSeries,
    tail: &SurvivalSeries,
    windows: Windows,
) -> Result<RegimeReport> {
    let dec = Decomposition::new(spec, res)?;
    let ts = estimate_ts(spec, res)?;
    let t_r = estimate_tr(&dec, series)?;
    let exp = fit_exponential(series, windows.exponential)?;
    let power = fit_power_law(tail, windows.tail)?;
    let freq = modulation_frequency(tail, windows.tail, 4.0 * spec.substrate.bandwidth())?;
    let eval = |t: f64| -> Result<(C64, C64)> { Ok((dec.pure_survival(t), dec.return_amplitude(t)?)) };
    let dips = detect_collapse(series, Some(&eval))?;
    Ok(RegimeReport {
        t_s: ts.numerical,
        t_s_closed_form: ts.closed_form,
        t_r,
        fitted_rate: exp.rate,
        fitted_prefactor: exp.prefactor,
        tail_exponent: power.exponent,
        modulation_freq: freq,
        dips,
    })
}
