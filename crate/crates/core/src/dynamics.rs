//! Survival amplitude `A(t) = <0|exp(-iHt)|0>` and probability `P00 = |A|²`
//! from the add-atom density of states.

use crate::error::{check_finite, Error, Result};
use crate::grid::is_strictly_increasing;
use crate::quadrature::{integrate, FilonTransform, Tolerance};
use crate::resonance::{central_moment, AdatomSpec, BoundStatePolicy, Resonance};
use crate::substrate::{BandHalf, SubstrateKind};
use crate::C64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// How a [`SurvivalSeries`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Direct,
    Decomposed,
    ShortTime,
    LongTime,
    Oracle,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Decomposed => "decomposed",
            Method::ShortTime => "short_time",
            Method::LongTime => "long_time",
            Method::Oracle => "oracle",
        }
    }
}

/// Survival probability on a time grid.
///
/// For [`Method::Decomposed`] the amplitude is split into the pure-survival
/// pole term `psi_s` and the return term `psi_r`. Methods that produce a
/// single amplitude store it in `psi_s` with `psi_r = 0`; closed-form
/// probability estimates carry `NaN` amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSeries {
    pub times: Vec<f64>,
    pub psi_s: Vec<C64>,
    pub psi_r: Vec<C64>,
    pub p00: Vec<f64>,
    pub method: Method,
}

impl SurvivalSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Total amplitude `psi_s + psi_r` at index `i`.
    pub fn amplitude(&self, i: usize) -> C64 {
        self.psi_s[i] + self.psi_r[i]
    }

    fn from_amplitudes(times: &[f64], parts: Vec<(C64, C64)>, method: Method) -> Self {
        let p00 = parts.iter().map(|(s, r)| (s + r).norm_sqr()).collect();
        let (psi_s, psi_r) = parts.into_iter().unzip();
        SurvivalSeries { times: times.to_vec(), psi_s, psi_r, p00, method }
    }

    fn from_probabilities(times: &[f64], p00: Vec<f64>, method: Method) -> Self {
        let nan = C64::new(f64::NAN, f64::NAN);
        SurvivalSeries {
            times: times.to_vec(),
            psi_s: vec![nan; times.len()],
            psi_r: vec![nan; times.len()],
            p00,
            method,
        }
    }

    /// Check the series invariants: increasing times, `0 <= P00 <= 1 + 1e-9`
    /// (except for the long-time asymptote) and, for decomposed series,
    /// `P00 = |psi_s + psi_r|²`.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if self.psi_s.len() != n || self.psi_r.len() != n || self.p00.len() != n {
            return Err(Error::Domain("series columns have different lengths".into()));
        }
        if !is_strictly_increasing(&self.times) {
            return Err(Error::Domain("series times are not strictly increasing".into()));
        }
        for (i, &p) in self.p00.iter().enumerate() {
            if !(p >= 0.0) || (self.method != Method::LongTime && p > 1.0 + 1e-9) {
                return Err(Error::Domain(format!("P00 = {p} out of range at t = {}", self.times[i])));
            }
            if self.method == Method::Decomposed && (self.amplitude(i).norm_sqr() - p).abs() > 1e-12 {
                return Err(Error::Domain(format!("P00 inconsistent with amplitudes at t = {}", self.times[i])));
            }
        }
        Ok(())
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    for &t in times {
        check_finite("time", t)?;
        if t < 0.0 {
            return Err(Error::Domain(format!("times must be >= 0, got {t}")));
        }
    }
    if !is_strictly_increasing(times) {
        return Err(Error::Domain("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Accuracy target of the real-axis transform (L1 error of the LDoS interpolant).
pub const DIRECT_TOLERANCE: f64 = 1e-10;

/// Fourier transform of the local density of states over the band.
///
/// The panel mesh is adapted to `N₀` once; each time point then costs one
/// pass over the panels with exact oscillatory weights.
#[derive(Debug, Clone)]
pub struct DirectTransform {
    filon: FilonTransform,
}

impl DirectTransform {
    pub fn new(spec: &AdatomSpec) -> Result<Self> {
        Self::with_tolerance(spec, DIRECT_TOLERANCE)
    }

    /// Transform whose LDoS interpolant has L1 error below `tol`.
    pub fn with_tolerance(spec: &AdatomSpec, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("direct tolerance must be > 0, got {tol}")));
        }
        spec.require_no_bound_state()?;
        if spec.v0 == 0.0 {
            return Err(Error::Domain("v0 = 0: the local density is a delta function; use the decoupled limit".into()));
        }
        let breaks = spec.band_breakpoints();
        let filon = FilonTransform::new(|e| spec.ldos0_inside(e), &breaks, tol)?;
        Ok(DirectTransform { filon })
    }

    /// `A(t) = ∫ N₀(ε) e^{-iεt} dε`.
    pub fn amplitude(&self, t: f64) -> C64 {
        self.filon.transform(t)
    }

    /// Bound on the amplitude error, valid for every `t`.
    pub fn error_bound(&self) -> f64 {
        self.filon.error_bound()
    }

    /// `∫ N₀`, which should be 1.
    pub fn norm(&self) -> f64 {
        self.filon.integral()
    }

    pub fn panel_count(&self) -> usize {
        self.filon.panel_count()
    }
}

/// Survival probability from the real-axis Fourier transform of `N₀`.
pub fn survival_direct(spec: &AdatomSpec, times: &[f64]) -> Result<SurvivalSeries> {
    survival_direct_with(spec, times, DIRECT_TOLERANCE)
}

/// [`survival_direct`] with an explicit interpolation tolerance.
pub fn survival_direct_with(spec: &AdatomSpec, times: &[f64], tol: f64) -> Result<SurvivalSeries> {
    check_times(times)?;
    if spec.v0 == 0.0 {
        let parts = times.iter().map(|&t| (C64::from_polar(1.0, -spec.epsilon0 * t), C64::new(0.0, 0.0))).collect();
        return Ok(SurvivalSeries::from_amplitudes(times, parts, Method::Direct));
    }
    let tr = DirectTransform::with_tolerance(spec, tol)?;
    let parts: Vec<(C64, C64)> = times.par_iter().map(|&t| (tr.amplitude(t), C64::new(0.0, 0.0))).collect();
    Ok(SurvivalSeries::from_amplitudes(times, parts, Method::Direct))
}

/// Line-integral tolerance of the contour decomposition.
pub fn line_tolerance() -> Tolerance {
    Tolerance { abs: 1e-12, rel: 1e-10, max_intervals: 4000 }
}

/// Return amplitude split by the vertical line it comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnParts {
    /// Line below the lower band edge.
    pub lower: C64,
    /// Line below the upper band edge.
    pub upper: C64,
    /// Pair of lines on either side of the band-center cut (zero for the chain).
    pub center: C64,
}

impl ReturnParts {
    pub fn total(&self) -> C64 {
        self.lower + self.upper + self.center
    }
}

/// Contour decomposition of the survival amplitude.
///
/// Closing the real-axis Fourier integral in the lower half-plane picks up
/// the resonance pole, `psi_s = ā e^{-i z* t}`, and vertical branch lines
/// hanging from every non-analytic point of the band:
///
/// `psi_r = -i e^{-iε_L t} I_L + i e^{-iε_U t} I_U + i e^{-iε_c t} (I_c⁻ - I_c⁺)`
///
/// with `I(t) = ∫₀^∞ N₀(c - iy) e^{-yt} dy` for the continuation of `N₀`
/// through the adjacent band half. On the square lattice the van Hove point
/// at the band center is a branch point of its own, so besides the two edge
/// lines a pair of lines runs down from the center.
#[derive(Debug, Clone, Copy)]
pub struct Decomposition<'a> {
    pub spec: &'a AdatomSpec,
    pub resonance: &'a Resonance,
    pub tolerance: Tolerance,
}

impl<'a> Decomposition<'a> {
    pub fn new(spec: &'a AdatomSpec, resonance: &'a Resonance) -> Result<Self> {
        spec.require_no_bound_state()?;
        Ok(Decomposition { spec, resonance, tolerance: line_tolerance() })
    }

    /// Pure-survival (pole) amplitude.
    pub fn pure_survival(&self, t: f64) -> C64 {
        let z = self.resonance.pole();
        self.resonance.prefactor() * (C64::new(0.0, -t) * z).exp()
    }

    /// `∫₀^{y_max} N₀(c - iy) e^{-yt} dy` with `y_max = max(40/t, 8V)`.
    ///
    /// Integrated in `u` with `y = y_max u⁴`, which flattens the logarithmic
    /// behavior of the continued density at the branch point.
    pub fn line_integral(&self, c: f64, half: BandHalf, t: f64) -> Result<C64> {
        let ymax = (40.0 / t).max(8.0 * self.spec.substrate.hopping);
        let q = integrate(
            |u| {
                let u3 = u * u * u;
                let y = ymax * u3 * u;
                Ok(self.spec.continued_density(C64::new(c, -y), half)? * ((-y * t).exp() * 4.0 * ymax * u3))
            },
            0.0,
            1.0,
            self.tolerance,
        )?;
        Ok(q.value)
    }

    /// Contribution of each family of vertical lines for `t > 0`.
    pub fn return_parts(&self, t: f64) -> Result<ReturnParts> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("return_parts needs t > 0, got {t}")));
        }
        let sub = &self.spec.substrate;
        let (lo, hi) = sub.band_edges();
        let i = C64::new(0.0, 1.0);
        let phase = |e: f64| C64::from_polar(1.0, -e * t);
        let lower = -i * phase(lo) * self.line_integral(lo, BandHalf::Lower, t)?;
        let upper = i * phase(hi) * self.line_integral(hi, BandHalf::Upper, t)?;
        let center = match sub.kind {
            SubstrateKind::SemiInfiniteChain => C64::new(0.0, 0.0),
            SubstrateKind::Square2D => {
                let c = sub.band_center();
                let left = self.line_integral(c, BandHalf::Lower, t)?;
                let right = self.line_integral(c, BandHalf::Upper, t)?;
                i * phase(c) * (left - right)
            }
        };
        Ok(ReturnParts { lower, upper, center })
    }

    /// Return amplitude; at `t = 0` it is fixed by completeness to `1 - ā`.
    pub fn return_amplitude(&self, t: f64) -> Result<C64> {
        if t == 0.0 {
            return Ok(1.0 - self.resonance.prefactor());
        }
        Ok(self.return_parts(t)?.total())
    }

    pub fn amplitude(&self, t: f64) -> Result<C64> {
        Ok(self.pure_survival(t) + self.return_amplitude(t)?)
    }

    /// `|psi_s + psi_r|` at a small positive time, which must approach 1.
    /// Its deviation from 1 measures how well the analytic constant
    /// `1/(2πi)` between the residue `a` and `ā` closes the contour.
    pub fn normalization_check(&self, t: f64) -> Result<f64> {
        Ok(self.amplitude(t)?.norm())
    }

    /// Upper bound `π r max|N₀|` on the contribution of a small arc of radius
    /// `r` around each branch point, sampled on the lower semicircle.
    pub fn arc_bound(&self, radius: f64) -> Result<f64> {
        let sub = &self.spec.substrate;
        let (lo, hi) = sub.band_edges();
        let mut centers = vec![(lo, BandHalf::Lower), (hi, BandHalf::Upper)];
        if sub.kind == SubstrateKind::Square2D {
            centers.push((sub.band_center(), BandHalf::Lower));
            centers.push((sub.band_center(), BandHalf::Upper));
        }
        let mut worst: f64 = 0.0;
        for (c, half) in centers {
            let (a0, a1) = match half {
                BandHalf::Lower => (-PI, -0.5 * PI),
                BandHalf::Upper => (-0.5 * PI, 0.0),
            };
            for k in 1..64 {
                let th = a0 + (a1 - a0) * k as f64 / 64.0;
                let z = C64::new(c, 0.0) + C64::from_polar(radius, th);
                worst = worst.max(self.spec.continued_density(z, half)?.norm());
            }
        }
        Ok(PI * radius * worst)
    }
}

/// Survival probability as `|psi_s + psi_r|²` from the contour decomposition.
pub fn survival_decomposed(spec: &AdatomSpec, res: &Resonance, times: &[f64]) -> Result<SurvivalSeries> {
    survival_decomposed_with(spec, res, times, line_tolerance())
}

/// [`survival_decomposed`] with an explicit line-integral tolerance.
pub fn survival_decomposed_with(
    spec: &AdatomSpec,
    res: &Resonance,
    times: &[f64],
    tolerance: Tolerance,
) -> Result<SurvivalSeries> {
    check_times(times)?;
    let mut dec = Decomposition::new(spec, res)?;
    dec.tolerance = tolerance;
    let parts =
        times.par_iter().map(|&t| Ok((dec.pure_survival(t), dec.return_amplitude(t)?))).collect::<Result<Vec<_>>>()?;
    Ok(SurvivalSeries::from_amplitudes(times, parts, Method::Decomposed))
}

/// Quadratic onset `P00 ≈ 1 - m₂ t²` with `m₂` the second moment of `N₀`
/// about `ε₀`, which equals `V₀²`.
pub fn short_time(spec: &AdatomSpec, times: &[f64]) -> Result<SurvivalSeries> {
    let m2 = central_moment(spec, 2, spec.epsilon0, BoundStatePolicy::Include)?;
    short_time_with_moment(m2, times)
}

/// Quadratic onset with an explicit second moment.
pub fn short_time_with_moment(m2: f64, times: &[f64]) -> Result<SurvivalSeries> {
    check_times(times)?;
    check_finite("second moment", m2)?;
    let p = times.iter().map(|&t| 1.0 - m2 * t * t).collect::<Vec<_>>();
    if let Some(i) = p.iter().position(|&x| x < 0.0) {
        return Err(Error::Domain(format!(
            "short-time expansion is negative at t = {}; it only holds for t < 1/sqrt(m2)",
            times[i]
        )));
    }
    Ok(SurvivalSeries::from_probabilities(times, p, Method::ShortTime))
}

/// Long-time estimate `[1 + β² - 2β cos(Bt)] |∫ e^{-yt} N₀(ε_L - iy) dy|²`.
pub fn long_time_asymptote(spec: &AdatomSpec, res: &Resonance, times: &[f64]) -> Result<SurvivalSeries> {
    check_times(times)?;
    let dec = Decomposition::new(spec, res)?;
    let (lo, _) = spec.substrate.band_edges();
    let b = spec.substrate.bandwidth();
    let beta = res.beta;
    let p = times
        .par_iter()
        .map(|&t| {
            if t == 0.0 {
                return Err(Error::Domain("long-time asymptote needs t > 0".into()));
            }
            let edge = dec.line_integral(lo, BandHalf::Lower, t)?;
            let modulation = 1.0 + beta * beta - 2.0 * beta * (b * t).cos();
            Ok(modulation * edge.norm_sqr())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SurvivalSeries::from_probabilities(times, p, Method::LongTime))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonance::find_pole;
    use crate::substrate::SubstrateSpec;

    #[test]
    fn direct_at_zero_is_normalized() {
        let spec = AdatomSpec::reference();
        let s = survival_direct(&spec, &[0.0, 1.0]).unwrap();
        assert!((s.p00[0] - 1.0).abs() < 1e-6);
        s.validate().unwrap();
        let tr = DirectTransform::new(&spec).unwrap();
        assert!(tr.error_bound() < 1e-9);
    }

    #[test]
    fn decoupled_atom_survives() {
        let spec = AdatomSpec::new(2.0, 0.0, SubstrateSpec::square(1.0)).unwrap();
        let s = survival_direct(&spec, &[0.0, 3.0, 50.0]).unwrap();
        assert!(s.p00.iter().all(|&p| (p - 1.0).abs() < 1e-15));
    }

    #[test]
    fn short_time_arithmetic() {
        let spec = AdatomSpec::reference();
        let s = short_time(&spec, &[0.0, 0.1]).unwrap();
        assert_eq!(s.p00[0], 1.0);
        assert!((s.p00[1] - 0.9984).abs() < 1e-7);
        assert!(short_time_with_moment(0.16, &[3.0]).is_err());
    }

    #[test]
    fn short_time_matches_direct() {
        let spec = AdatomSpec::reference();
        let d = survival_direct(&spec, &[0.05]).unwrap();
        let s = short_time(&spec, &[0.05]).unwrap();
        assert!((d.p00[0] - s.p00[0]).abs() < 1e-4);
    }

    #[test]
    fn decomposition_matches_direct_on_samples() {
        let spec = AdatomSpec::reference();
        let res = find_pole(&spec).unwrap();
        let ts = [0.1, 1.0, 7.0, 40.0, 130.0];
        let d = survival_direct(&spec, &ts).unwrap();
        let c = survival_decomposed(&spec, &res, &ts).unwrap();
        c.validate().unwrap();
        for i in 0..ts.len() {
            assert!((d.p00[i] - c.p00[i]).abs() < 1e-6, "t={}: {} vs {}", ts[i], d.p00[i], c.p00[i]);
        }
    }

    #[test]
    fn chain_decomposition_has_two_lines() {
        let spec = AdatomSpec::new(0.5, 0.3, SubstrateSpec::chain(1.0)).unwrap();
        let res = find_pole(&spec).unwrap();
        let dec = Decomposition::new(&spec, &res).unwrap();
        let parts = dec.return_parts(20.0).unwrap();
        assert_eq!(parts.center, C64::new(0.0, 0.0));
        let d = survival_direct(&spec, &[0.5, 20.0, 90.0]).unwrap();
        let c = survival_decomposed(&spec, &res, &[0.5, 20.0, 90.0]).unwrap();
        for i in 0..3 {
            assert!((d.p00[i] - c.p00[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn normalization_and_arcs() {
        let spec = AdatomSpec::reference();
        let res = find_pole(&spec).unwrap();
        let dec = Decomposition::new(&spec, &res).unwrap();
        assert!((dec.normalization_check(1e-3).unwrap() - 1.0).abs() < 1e-6);
        assert!(dec.arc_bound(1e-4).unwrap() < 1e-3);
        let at0 = survival_decomposed(&spec, &res, &[0.0]).unwrap();
        assert!((at0.p00[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn edge_lines_carry_complex_density() {
        // The continued density on the vertical edge lines is not real.
        let spec = AdatomSpec::reference();
        let n = spec.continued_density(C64::new(0.0, -0.5), BandHalf::Lower).unwrap();
        assert!(n.im.abs() > 1e-6 * n.norm());
    }

    #[test]
    fn long_time_modulation_period() {
        let spec = AdatomSpec::reference();
        let res = find_pole(&spec).unwrap();
        let period = 2.0 * PI / 8.0;
        let t0 = 150.0;
        let s = long_time_asymptote(&spec, &res, &[t0, t0 + period]).unwrap();
        // Envelope changes slowly over one period, modulation repeats.
        assert!((s.p00[0] / s.p00[1] - 1.0).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_times() {
        let spec = AdatomSpec::reference();
        assert!(survival_direct(&spec, &[1.0, 0.5]).is_err());
        assert!(survival_direct(&spec, &[-1.0]).is_err());
    }
}
