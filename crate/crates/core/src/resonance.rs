//! Add-atom Green function from the single-site Dyson closure, its local
//! density of states on and off the real axis, and the resonance pole on the
//! second sheet.

use crate::error::{check_finite, Error, Result};
use crate::quadrature::{integrate_pieces, Tolerance};
use crate::substrate::{BandHalf, Sheet, SubstrateKind, SubstrateSpec};
use crate::C64;
use std::f64::consts::PI;

/// `1/(2πi)`: relates the residue prefactor `a` to the amplitude of the pole
/// term in the survival amplitude, `ā = a / (2πi)`.
pub const RESIDUE_NORMALIZATION: C64 = C64::new(0.0, -1.0 / (2.0 * PI));

/// Add atom of energy `epsilon0` coupled with hopping `v0` to one site of a substrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdatomSpec {
    pub epsilon0: f64,
    pub v0: f64,
    pub substrate: SubstrateSpec,
}

/// A real pole of the add-atom Green function outside the band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundState {
    pub energy: f64,
    /// Spectral weight `1 / (1 - Σ'(E_b))`.
    pub weight: f64,
}

/// What to do with bound states when integrating over the local density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundStatePolicy {
    #[default]
    Fail,
    Include,
}

impl AdatomSpec {
    pub fn new(epsilon0: f64, v0: f64, substrate: SubstrateSpec) -> Result<Self> {
        check_finite("epsilon0", epsilon0)?;
        check_finite("v0", v0)?;
        if v0 < 0.0 {
            return Err(Error::Domain(format!("v0 must be >= 0, got {v0}")));
        }
        Ok(AdatomSpec { epsilon0, v0, substrate })
    }

    /// `ε₀ = 2V`, `V₀ = 0.4V` on the square lattice.
    pub fn reference() -> Self {
        AdatomSpec { epsilon0: 2.0, v0: 0.4, substrate: SubstrateSpec::square(1.0) }
    }

    pub fn is_weak_coupling(&self) -> bool {
        self.v0 < self.substrate.hopping
    }

    /// Self-energy `Σ(z) = V₀² G₁₁(z)` on the requested sheet.
    pub fn self_energy(&self, z: C64, sheet: Sheet) -> Result<C64> {
        if self.v0 == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        Ok(self.v0 * self.v0 * self.substrate.green(z, sheet)?)
    }

    /// Second-sheet self-energy continued through a given band half.
    pub fn self_energy_second(&self, z: C64, half: BandHalf) -> Result<C64> {
        if self.v0 == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        Ok(self.v0 * self.v0 * self.substrate.green_second(z, half)?)
    }

    /// `D(z) = z - ε₀ - Σ_II(z)`, whose zero is the resonance.
    pub fn pole_function(&self, z: C64, half: BandHalf) -> Result<C64> {
        Ok(z - self.epsilon0 - self.self_energy_second(z, half)?)
    }

    /// Add-atom Green function `1 / (z - ε₀ - Σ(z))`.
    pub fn g00(&self, z: C64, sheet: Sheet) -> Result<C64> {
        let d = z - self.epsilon0 - self.self_energy(z, sheet)?;
        invert(d, z)
    }

    /// Local density of states `N₀(ε) = -(1/π) Im G₀₀(ε + i0)`.
    ///
    /// Outside the band the continuum density vanishes; if a bound state is
    /// present there the call fails with [`Error::BoundState`].
    pub fn ldos0(&self, e: f64) -> Result<f64> {
        check_finite("energy", e)?;
        if !self.substrate.contains(e) {
            if let Some(b) = self.bound_states()?.first() {
                return Err(Error::BoundState { energy: b.energy, weight: b.weight });
            }
            if self.v0 == 0.0 && e == self.epsilon0 {
                return Err(Error::Singularity(format!("decoupled level at {e}")));
            }
            return Ok(0.0);
        }
        self.ldos0_inside(e)
    }

    /// Density inside the band without any bound-state bookkeeping.
    pub(crate) fn ldos0_inside(&self, e: f64) -> Result<f64> {
        if self.v0 == 0.0 {
            return if e == self.epsilon0 {
                Err(Error::Singularity(format!("decoupled level at {e}")))
            } else {
                Ok(0.0)
            };
        }
        let g = self.g00(C64::new(e, 0.0), Sheet::Physical)?;
        Ok((-g.im / PI).max(0.0))
    }

    /// Analytic continuation `N₀(z)` into the lower half-plane through the
    /// band half below `z`; on the real axis it is [`Self::ldos0`].
    pub fn ldos0_continued(&self, z: C64) -> Result<C64> {
        if z.im > 0.0 {
            return Err(Error::Domain(format!("ldos0_continued needs Im z <= 0, got {z}")));
        }
        if z.im == 0.0 {
            return Ok(C64::new(self.ldos0(z.re)?, 0.0));
        }
        self.continued_density(z, self.substrate.half_of(z))
    }

    /// `N₀(z) = (i/2π) [G₀₀_II(z) - G₀₀_I(z)]` with the second sheet reached
    /// through `half`.
    pub fn continued_density(&self, z: C64, half: BandHalf) -> Result<C64> {
        let g1 = self.g00(z, Sheet::Physical)?;
        let d2 = z - self.epsilon0 - self.self_energy_second(z, half)?;
        let g2 = invert(d2, z)?;
        Ok(C64::new(0.0, 0.5 / PI) * (g2 - g1))
    }

    /// Real poles of the physical-sheet Green function outside the band.
    ///
    /// The scan resolves poles down to `1e-10 V` from an edge. On the square
    /// lattice the logarithmic edge divergence always produces split-off
    /// states, but for weak coupling they sit exponentially close to the edges
    /// with exponentially small weight and are not reported.
    pub fn bound_states(&self) -> Result<Vec<BoundState>> {
        if self.v0 == 0.0 {
            return Ok(Vec::new());
        }
        let (lo, hi) = self.substrate.band_edges();
        let v = self.substrate.hopping;
        let w = self.substrate.half_bandwidth();
        let d_min = 1e-10 * v;
        let d_max = 2.0 * ((self.epsilon0 - self.substrate.onsite).abs() + 2.0 * w + self.v0 + v);
        let n = 400;
        let mut out = Vec::new();
        for side in [-1.0, 1.0] {
            let edge = if side < 0.0 { lo } else { hi };
            let at = |d: f64| edge + side * d;
            let dfun = |x: f64| -> Result<f64> {
                Ok(x - self.epsilon0 - self.v0 * self.v0 * self.substrate.green_physical(C64::new(x, 0.0))?.re)
            };
            let ratio = (d_max / d_min).ln() / (n - 1) as f64;
            let mut prev_d = d_min;
            let mut prev = dfun(at(d_min))?;
            for k in 1..n {
                let d = d_min * (ratio * k as f64).exp();
                let cur = dfun(at(d))?;
                if prev == 0.0 || prev.signum() != cur.signum() {
                    let (mut a, mut b, mut fa) = (prev_d, d, prev);
                    for _ in 0..200 {
                        let m = 0.5 * (a + b);
                        if m <= a || m >= b {
                            break;
                        }
                        let fm = dfun(at(m))?;
                        if fm.signum() == fa.signum() {
                            a = m;
                            fa = fm;
                        } else {
                            b = m;
                        }
                    }
                    let dist = 0.5 * (a + b);
                    let x = at(dist);
                    let h0 = (0.25 * dist).min(0.1 * v);
                    let (dg, _) = ridders(|s| self.substrate.green_physical(C64::new(x + s, 0.0)), h0)?;
                    let weight = 1.0 / (1.0 - self.v0 * self.v0 * dg.re);
                    out.push(BoundState { energy: x, weight });
                }
                prev = cur;
                prev_d = d;
            }
        }
        Ok(out)
    }

    pub(crate) fn require_no_bound_state(&self) -> Result<()> {
        match self.bound_states()?.first() {
            Some(b) => Err(Error::BoundState { energy: b.energy, weight: b.weight }),
            None => Ok(()),
        }
    }

    /// Breakpoints for real-axis integrals over the band: edges, the van Hove
    /// point when present and the bare level.
    pub(crate) fn band_breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.substrate.band_edges();
        let mut pts = self.substrate.singular_points();
        if let Ok((er, _)) = first_pole_approx(self) {
            if er > lo && er < hi {
                pts.push(er);
            }
        } else if self.epsilon0 > lo && self.epsilon0 < hi {
            pts.push(self.epsilon0);
        }
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        pts
    }
}

fn invert(d: C64, z: C64) -> Result<C64> {
    if d == C64::new(0.0, 0.0) {
        return Err(Error::Singularity(format!("pole of the add-atom Green function at z = {z}")));
    }
    Ok(1.0 / d)
}

/// Ridders' extrapolated central difference of a function of a real offset.
/// Returns the derivative and an error estimate.
pub(crate) fn ridders<F>(f: F, h0: f64) -> Result<(C64, f64)>
where
    F: Fn(f64) -> Result<C64>,
{
    const CON: f64 = 1.4;
    const NTAB: usize = 12;
    let con2 = CON * CON;
    let mut a = [[C64::new(0.0, 0.0); NTAB]; NTAB];
    let mut h = h0;
    a[0][0] = (f(h)? - f(-h)?) / (2.0 * h);
    let mut err = f64::INFINITY;
    let mut ans = a[0][0];
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = (f(h)? - f(-h)?) / (2.0 * h);
        let mut fac = con2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= con2;
            let errt = (a[j][i] - a[j - 1][i]).norm().max((a[j][i] - a[j - 1][i - 1]).norm());
            if errt <= err {
                err = errt;
                ans = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).norm() >= 2.0 * err {
            break;
        }
    }
    Ok((ans, err))
}

/// Resonance of the add atom: pole `ε_r - iΓ₀` of the second-sheet Green
/// function with its residue and the edge weight of the line shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub epsilon_r: f64,
    pub gamma0: f64,
    /// Level shift `ε_r - ε₀`.
    pub delta0: f64,
    /// Residue prefactor `a = 2πi / (1 - Σ'(z*))`.
    pub residue_a: C64,
    /// `[(ε_r-ε_L)² + Γ₀²] / [(ε_U-ε_r)² + Γ₀²]`.
    pub beta: f64,
    pub band_edges: (f64, f64),
    /// Band half through which the pole was reached.
    pub half: BandHalf,
    /// `|D(z*)|` at the returned pole.
    pub residual: f64,
    pub iterations: usize,
}

impl Resonance {
    pub fn pole(&self) -> C64 {
        C64::new(self.epsilon_r, -self.gamma0)
    }

    /// Amplitude of the pole term, `ā = a/(2πi) = 1/(1 - Σ'(z*))`.
    pub fn prefactor(&self) -> C64 {
        self.residue_a * RESIDUE_NORMALIZATION
    }

    /// Phase `φ_a` defined by `ā = |ā| e^{-iφ_a}`.
    pub fn phase_a(&self) -> f64 {
        -self.prefactor().arg()
    }

    pub fn bandwidth(&self) -> f64 {
        self.band_edges.1 - self.band_edges.0
    }

    pub fn edge_weight(epsilon_r: f64, gamma0: f64, band_edges: (f64, f64)) -> f64 {
        let (lo, hi) = band_edges;
        let g2 = gamma0 * gamma0;
        ((epsilon_r - lo).powi(2) + g2) / ((hi - epsilon_r).powi(2) + g2)
    }
}

/// First-pole (golden-rule) estimate: `Σ` evaluated at `ε₀ + i0`, giving
/// `(ε₀ + Re Σ, -Im Σ)`.
pub fn first_pole_approx(spec: &AdatomSpec) -> Result<(f64, f64)> {
    if spec.v0 == 0.0 {
        return Ok((spec.epsilon0, 0.0));
    }
    let s = spec.self_energy(C64::new(spec.epsilon0, 0.0), Sheet::Physical)?;
    Ok((spec.epsilon0 + s.re, -s.im))
}

const NEWTON_MAX_ITER: usize = 100;
const POLE_RESIDUAL: f64 = 1e-12;

/// Locate the resonance pole by Newton iteration on `D(z) = z - ε₀ - Σ_II(z)`,
/// seeded by the first-pole estimate, with an argument-principle search of
/// the lower strip as fallback.
pub fn find_pole(spec: &AdatomSpec) -> Result<Resonance> {
    let sub = &spec.substrate;
    let (lo, hi) = sub.band_edges();
    if !sub.contains(spec.epsilon0) {
        return Err(Error::Domain(format!("ε₀ = {} must lie strictly inside the band ({lo}, {hi})", spec.epsilon0)));
    }
    if !spec.is_weak_coupling() {
        return Err(Error::Domain(format!("v0 = {} is not below the substrate hopping {}", spec.v0, sub.hopping)));
    }
    if spec.v0 == 0.0 {
        return Ok(Resonance {
            epsilon_r: spec.epsilon0,
            gamma0: 0.0,
            delta0: 0.0,
            residue_a: C64::new(0.0, 2.0 * PI),
            beta: Resonance::edge_weight(spec.epsilon0, 0.0, (lo, hi)),
            band_edges: (lo, hi),
            half: sub.half_of(C64::new(spec.epsilon0, 0.0)),
            residual: 0.0,
            iterations: 0,
        });
    }
    let strip = 4.0 * sub.hopping;
    let mut last_err = None;
    if let Ok((er, g)) = first_pole_approx(spec) {
        let seed = C64::new(er, -g.max(1e-8 * sub.hopping));
        let primary = sub.half_of(C64::new(spec.epsilon0, 0.0));
        let other = match primary {
            BandHalf::Lower => BandHalf::Upper,
            BandHalf::Upper => BandHalf::Lower,
        };
        let halves: &[BandHalf] = match sub.kind {
            SubstrateKind::Square2D => &[primary, other],
            SubstrateKind::SemiInfiniteChain => &[primary],
        };
        for &half in halves {
            match newton(spec, seed, half, strip) {
                Ok((z, it, res)) if in_half(sub, z, half) => return finish(spec, z, half, it, res),
                Ok((z, ..)) => {
                    last_err = Some(Error::Domain(format!("pole {z} reached outside the crossed band half")))
                }
                Err(e) => last_err = Some(e),
            }
        }
    }
    // Fallback: argument-principle subdivision of each half strip.
    for half in halves_of(sub) {
        let rect = half_rectangle(sub, half, strip);
        let roots = locate_zeros(spec, half, rect, 0)?;
        if let Some(&(z, it, res)) = roots.first() {
            return finish(spec, z, half, it, res);
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Domain("no resonance pole in the lower strip".into())))
}

fn halves_of(sub: &SubstrateSpec) -> Vec<BandHalf> {
    match sub.kind {
        SubstrateKind::Square2D => vec![BandHalf::Lower, BandHalf::Upper],
        SubstrateKind::SemiInfiniteChain => vec![BandHalf::Lower],
    }
}

fn in_half(sub: &SubstrateSpec, z: C64, half: BandHalf) -> bool {
    let (lo, hi) = sub.band_edges();
    match sub.kind {
        SubstrateKind::SemiInfiniteChain => z.re > lo && z.re < hi,
        SubstrateKind::Square2D => match half {
            BandHalf::Lower => z.re > lo && z.re < sub.onsite,
            BandHalf::Upper => z.re > sub.onsite && z.re < hi,
        },
    }
}

fn newton(spec: &AdatomSpec, seed: C64, half: BandHalf, strip: f64) -> Result<(C64, usize, f64)> {
    let mut z = seed;
    let mut d = spec.pole_function(z, half)?;
    for it in 1..=NEWTON_MAX_ITER {
        let h = 1e-6 * z.im.abs().clamp(1e-6, 1.0);
        let dp = (spec.pole_function(z + h, half)? - spec.pole_function(z - h, half)?) / (2.0 * h);
        let step = d / dp;
        let mut next = z - step;
        // Damp steps that would leave the lower half-plane.
        let mut damp = 0;
        while next.im >= 0.0 && damp < 30 {
            next = z - step * 0.5f64.powi(damp + 1);
            damp += 1;
        }
        if next.im <= -strip || next.im >= 0.0 {
            return Err(Error::Domain(format!("pole iteration left the strip -{strip} < Im z < 0 at {next}")));
        }
        z = next;
        d = spec.pole_function(z, half)?;
        if d.norm() <= 0.01 * POLE_RESIDUAL || step.norm() <= 4.0 * f64::EPSILON * z.norm() {
            if d.norm() <= POLE_RESIDUAL {
                return Ok((z, it, d.norm()));
            }
            return Err(Error::NoConvergence(format!("Newton stalled at z = {z} with |D| = {:e}", d.norm())));
        }
    }
    Err(Error::NoConvergence(format!(
        "Newton did not converge in {NEWTON_MAX_ITER} iterations; last iterate {z}, |D| = {:e}",
        d.norm()
    )))
}

fn finish(spec: &AdatomSpec, z: C64, half: BandHalf, iterations: usize, residual: f64) -> Result<Resonance> {
    let sub = &spec.substrate;
    let h0 = (0.25 * z.im.abs()).clamp(1e-4, 0.05) * sub.hopping;
    let (ds, _) = ridders(|s| spec.self_energy_second(z + s, half), h0)?;
    let residue_a = C64::new(0.0, 2.0 * PI) / (1.0 - ds);
    let band_edges = sub.band_edges();
    Ok(Resonance {
        epsilon_r: z.re,
        gamma0: -z.im,
        delta0: z.re - spec.epsilon0,
        residue_a,
        beta: Resonance::edge_weight(z.re, -z.im, band_edges),
        band_edges,
        half,
        residual,
        iterations,
    })
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

/// The lower-half-plane region below one band half, kept a hair away from
/// the real axis and the branch points.
pub fn half_rectangle(sub: &SubstrateSpec, half: BandHalf, depth: f64) -> Rect {
    let (lo, hi) = sub.band_edges();
    let eps = 1e-9 * sub.hopping;
    let (x0, x1) = match (sub.kind, half) {
        (SubstrateKind::SemiInfiniteChain, _) => (lo + eps, hi - eps),
        (SubstrateKind::Square2D, BandHalf::Lower) => (lo + eps, sub.onsite - eps),
        (SubstrateKind::Square2D, BandHalf::Upper) => (sub.onsite + eps, hi - eps),
    };
    Rect { x0, x1, y0: -depth * (1.0 - 1e-6), y1: -eps }
}

/// Number of zeros of `D` inside `rect` (second sheet through `half`), from
/// the winding number of `D` along the boundary.
pub fn count_zeros(spec: &AdatomSpec, half: BandHalf, rect: Rect) -> Result<i64> {
    let corners = [
        C64::new(rect.x0, rect.y0),
        C64::new(rect.x1, rect.y0),
        C64::new(rect.x1, rect.y1),
        C64::new(rect.x0, rect.y1),
    ];
    let mut total = 0.0;
    for k in 0..4 {
        let a = corners[k];
        let b = corners[(k + 1) % 4];
        total += winding_segment(spec, half, a, b, 64)?;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

fn winding_segment(spec: &AdatomSpec, half: BandHalf, a: C64, b: C64, n: usize) -> Result<f64> {
    let mut total = 0.0;
    let mut prev_z = a;
    let mut prev = spec.pole_function(a, half)?;
    for k in 1..=n {
        let z = a + (b - a) * (k as f64 / n as f64);
        let cur = spec.pole_function(z, half)?;
        total += arg_increment(spec, half, prev_z, prev, z, cur, 0)?;
        prev_z = z;
        prev = cur;
    }
    Ok(total)
}

fn arg_increment(spec: &AdatomSpec, half: BandHalf, za: C64, fa: C64, zb: C64, fb: C64, depth: usize) -> Result<f64> {
    let d = (fb / fa).arg();
    if d.abs() < PI / 4.0 || depth > 40 {
        return Ok(d);
    }
    let zm = 0.5 * (za + zb);
    let fm = spec.pole_function(zm, half)?;
    Ok(arg_increment(spec, half, za, fa, zm, fm, depth + 1)? + arg_increment(spec, half, zm, fm, zb, fb, depth + 1)?)
}

/// All zeros of `D` inside `rect`, by quadtree subdivision on the winding
/// number followed by Newton polishing.
pub fn locate_zeros(spec: &AdatomSpec, half: BandHalf, rect: Rect, depth: usize) -> Result<Vec<(C64, usize, f64)>> {
    let count = count_zeros(spec, half, rect)?;
    if count <= 0 {
        return Ok(Vec::new());
    }
    let size = (rect.x1 - rect.x0).max(rect.y1 - rect.y0);
    if size < 1e-3 * spec.substrate.hopping || depth > 24 {
        let center = C64::new(0.5 * (rect.x0 + rect.x1), 0.5 * (rect.y0 + rect.y1));
        let strip = 4.0 * spec.substrate.hopping;
        return Ok(newton(spec, center, half, strip).map(|r| vec![r]).unwrap_or_default());
    }
    let xm = 0.5 * (rect.x0 + rect.x1);
    let ym = 0.5 * (rect.y0 + rect.y1);
    let quads = [
        Rect { x0: rect.x0, x1: xm, y0: rect.y0, y1: ym },
        Rect { x0: xm, x1: rect.x1, y0: rect.y0, y1: ym },
        Rect { x0: rect.x0, x1: xm, y0: ym, y1: rect.y1 },
        Rect { x0: xm, x1: rect.x1, y0: ym, y1: rect.y1 },
    ];
    let mut out = Vec::new();
    for q in quads {
        out.extend(locate_zeros(spec, half, q, depth + 1)?);
    }
    Ok(out)
}

/// `∫ N₀(ε) (ε - about)^n dε`, optionally adding bound-state weights.
pub fn central_moment(spec: &AdatomSpec, n: u32, about: f64, policy: BoundStatePolicy) -> Result<f64> {
    if n > 4 {
        return Err(Error::Domain(format!("moments are available up to n = 4, got {n}")));
    }
    check_finite("moment reference", about)?;
    if spec.v0 == 0.0 {
        return Ok((spec.epsilon0 - about).powi(n as i32));
    }
    let bound = spec.bound_states()?;
    if policy == BoundStatePolicy::Fail {
        if let Some(b) = bound.first() {
            return Err(Error::BoundState { energy: b.energy, weight: b.weight });
        }
    }
    let tol = Tolerance { abs: 1e-15, rel: 1e-13, max_intervals: 20_000 };
    let q = integrate_pieces(
        |e| Ok(C64::new(spec.ldos0_inside(e)? * (e - about).powi(n as i32), 0.0)),
        &spec.band_breakpoints(),
        tol,
    )?;
    let extra: f64 = bound.iter().map(|b| b.weight * (b.energy - about).powi(n as i32)).sum();
    Ok(q.value.re + extra)
}

/// Raw moment `∫ N₀(ε) ε^n dε`.
pub fn spectral_moments(spec: &AdatomSpec, n: u32) -> Result<f64> {
    central_moment(spec, n, 0.0, BoundStatePolicy::Fail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> AdatomSpec {
        AdatomSpec::reference()
    }

    #[test]
    fn decoupled_level_is_free_resolvent() {
        let spec = AdatomSpec::new(2.0, 0.0, SubstrateSpec::square(1.0)).unwrap();
        let z = C64::new(1.3, 0.2);
        assert_eq!(spec.g00(z, Sheet::Physical).unwrap(), 1.0 / (z - 2.0));
        let r = find_pole(&spec).unwrap();
        assert_eq!((r.epsilon_r, r.gamma0), (2.0, 0.0));
        assert!((r.prefactor().norm_sqr() - 1.0).abs() < 1e-15);
        assert_eq!(first_pole_approx(&spec).unwrap(), (2.0, 0.0));
    }

    #[test]
    fn negative_coupling_rejected() {
        assert!(matches!(AdatomSpec::new(2.0, -0.1, SubstrateSpec::square(1.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn g00_resolvent_tail() {
        let spec = defaults();
        for &(re, im) in &[(200.0, 0.0), (0.0, 200.0), (-141.0, 141.0)] {
            let z = C64::new(re, im);
            let g = spec.g00(z, Sheet::Physical).unwrap();
            assert!((g * (z - spec.epsilon0) - 1.0).norm() < 1e-3);
        }
    }

    #[test]
    fn first_pole_golden_rule() {
        let (_, g) = first_pole_approx(&defaults()).unwrap();
        // π · 0.16 · 0.10925
        assert!((g - 0.0549).abs() < 0.02 * 0.0549, "{g}");
        let chain = AdatomSpec::new(0.0, 0.3, SubstrateSpec::chain(1.0)).unwrap();
        let (er, g) = first_pole_approx(&chain).unwrap();
        assert!((g - 0.09).abs() < 1e-14);
        assert!(er.abs() < 1e-14);
        let vh = AdatomSpec::new(4.0, 0.4, SubstrateSpec::square(1.0)).unwrap();
        assert!(matches!(first_pole_approx(&vh), Err(Error::Singularity(_))));
    }

    #[test]
    fn pole_for_reference_parameters() {
        let spec = defaults();
        let r = find_pole(&spec).unwrap();
        let (_, seed) = first_pole_approx(&spec).unwrap();
        assert!(r.residual <= 1e-12);
        assert!((r.gamma0 - seed).abs() < 0.15 * seed);
        assert!((r.epsilon_r - (spec.epsilon0 + r.delta0)).abs() < 1e-15);
        assert!(r.prefactor().norm_sqr() >= 1.0 - 1e-9);
        assert_eq!(r.beta, Resonance::edge_weight(r.epsilon_r, r.gamma0, r.band_edges));
        let d = spec.pole_function(r.pole(), r.half).unwrap();
        assert!(d.norm() <= 1e-12);
    }

    #[test]
    fn pole_maximizes_g00_on_real_axis() {
        let spec = defaults();
        let r = find_pole(&spec).unwrap();
        let mag = |e: f64| spec.g00(C64::new(e, 1e-6), Sheet::Physical).unwrap().norm();
        let at = mag(r.epsilon_r);
        let mut best = (0.0, 0.0);
        for i in 1..4000 {
            let e = 8.0 * i as f64 / 4000.0;
            if (e - 4.0).abs() < 1e-9 {
                continue;
            }
            let m = mag(e);
            if m > best.1 {
                best = (e, m);
            }
        }
        assert!((best.0 - r.epsilon_r).abs() < 0.01, "{best:?} vs {}", r.epsilon_r);
        assert!(at > 10.0);
    }

    #[test]
    fn chain_center_pole_is_symmetric() {
        let spec = AdatomSpec::new(0.0, 0.3, SubstrateSpec::chain(1.0)).unwrap();
        let r = find_pole(&spec).unwrap();
        assert!(r.epsilon_r.abs() < 1e-13);
        assert!((r.beta - 1.0).abs() < 1e-12);
        // z = V0² (z + sqrt(z² - 4)) / 2 squares to z² = -V0⁴ / (1 - V0²).
        assert!((r.gamma0 - 0.09 / 0.91f64.sqrt()).abs() < 1e-12, "{}", r.gamma0);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn weak_coupling_limit() {
        let spec = AdatomSpec::new(2.0, 0.02, SubstrateSpec::square(1.0)).unwrap();
        let r = find_pole(&spec).unwrap();
        assert!(r.gamma0 < 2e-4);
        assert!((r.epsilon_r - 2.0).abs() < 1e-3);
        assert!((r.prefactor().norm_sqr() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn find_pole_domain_errors() {
        let outside = AdatomSpec::new(9.0, 0.4, SubstrateSpec::square(1.0)).unwrap();
        assert!(matches!(find_pole(&outside), Err(Error::Domain(_))));
        let strong = AdatomSpec::new(2.0, 1.5, SubstrateSpec::square(1.0)).unwrap();
        assert!(matches!(find_pole(&strong), Err(Error::Domain(_))));
    }

    #[test]
    fn argument_principle_finds_single_pole() {
        let spec = defaults();
        let r = find_pole(&spec).unwrap();
        let sub = spec.substrate;
        let rect = half_rectangle(&sub, BandHalf::Lower, 4.0);
        assert_eq!(count_zeros(&spec, BandHalf::Lower, rect).unwrap(), 1);
        let rect = half_rectangle(&sub, BandHalf::Upper, 4.0);
        assert_eq!(count_zeros(&spec, BandHalf::Upper, rect).unwrap(), 0);
        let roots = locate_zeros(&spec, BandHalf::Lower, half_rectangle(&sub, BandHalf::Lower, 4.0), 0).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].0 - r.pole()).norm() < 1e-10);
    }

    #[test]
    fn ldos_restriction_and_positivity() {
        let spec = defaults();
        for i in 1..1000 {
            let e = 8.0 * i as f64 / 1000.0 + 1e-7;
            let n = spec.ldos0(e).unwrap();
            assert!(n >= 0.0);
            let c = spec.ldos0_continued(C64::new(e, 0.0)).unwrap();
            assert!((c.re - n).abs() < 1e-10 && c.im == 0.0);
            let below = spec.ldos0_continued(C64::new(e, -1e-9)).unwrap();
            assert!((below.re - n).abs() < 1e-6 * (1.0 + n), "e={e}: {below} vs {n}");
        }
        assert_eq!(spec.ldos0(-1.0).unwrap(), 0.0);
    }

    #[test]
    fn continued_ldos_is_analytic() {
        let spec = defaults();
        let z = C64::new(0.0, -0.1);
        let h = 1e-4;
        let f = |z: C64| spec.continued_density(z, BandHalf::Lower).unwrap();
        let dx = (f(z + h) - f(z - h)) / (2.0 * h);
        let dy = (f(z + C64::new(0.0, h)) - f(z - C64::new(0.0, h))) / (2.0 * h);
        // Cauchy-Riemann: ∂f/∂y = i ∂f/∂x
        assert!((dy - C64::new(0.0, 1.0) * dx).norm() < 1e-6);
    }

    #[test]
    fn strong_coupling_reports_bound_state() {
        let spec = AdatomSpec::new(2.0, 3.0, SubstrateSpec::square(1.0)).unwrap();
        let b = spec.bound_states().unwrap();
        assert!(!b.is_empty());
        assert!(b.iter().all(|s| s.weight > 0.0 && s.weight < 1.0));
        assert!(matches!(spec.ldos0(-5.0), Err(Error::BoundState { .. })));
        assert!(matches!(spectral_moments(&spec, 0), Err(Error::BoundState { .. })));
        // Including the bound-state weight restores completeness.
        let m0 = central_moment(&spec, 0, 0.0, BoundStatePolicy::Include).unwrap();
        assert!((m0 - 1.0).abs() < 1e-6, "{m0}");
        assert!(defaults().bound_states().unwrap().is_empty());
    }

    #[test]
    fn chain_bound_state_threshold() {
        // Chain edge value G(ε_L) = -1/V: D(ε_L) = ε_L - ε₀ + V₀², bound iff V₀² > ε₀ + 2.
        let s = SubstrateSpec::chain(1.0);
        let none = AdatomSpec::new(-1.0, 0.9, s).unwrap();
        assert!(none.bound_states().unwrap().is_empty());
        let some = AdatomSpec::new(-1.8, 0.9, s).unwrap();
        assert_eq!(some.bound_states().unwrap().len(), 1);
    }

    #[test]
    fn moments_match_hamiltonian_identities() {
        let spec = defaults();
        let m0 = spectral_moments(&spec, 0).unwrap();
        let m1 = spectral_moments(&spec, 1).unwrap();
        let m2 = central_moment(&spec, 2, spec.epsilon0, BoundStatePolicy::Fail).unwrap();
        assert!((m0 - 1.0).abs() < 1e-6, "{m0}");
        assert!((m1 - 2.0).abs() < 1e-6, "{m1}");
        assert!((m2 - 0.16).abs() < 1e-4, "{m2}");
        assert!(spectral_moments(&spec, 5).is_err());
    }
}
