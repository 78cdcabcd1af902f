//! Ground-truth survival amplitudes from exact propagation on a finite
//! lattice. Nothing here touches the Green-function code: the Hamiltonian
//! is applied as an explicit stencil and `exp(-iHt)` is expanded in
//! Chebyshev polynomials.

use crate::dynamics::{Method, SurvivalSeries};
use crate::error::{check_finite, Error, Result};
use crate::grid::is_strictly_increasing;
use crate::resonance::AdatomSpec;
use crate::special::bessel_j;
use crate::substrate::SubstrateKind;
use crate::C64;
use rayon::prelude::*;

/// Default truncation of the Chebyshev series (sum of neglected coefficients).
pub const CHEBYSHEV_TAIL: f64 = 1e-14;
/// Largest lattice handled by dense diagonalization.
pub const DENSE_LIMIT: usize = 80;

/// Add atom on a finite substrate with open boundaries: an `L x L` square
/// patch, or an `L`-site chain attached at its first site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteLattice {
    pub size: usize,
    pub spec: AdatomSpec,
    /// Coordinates of the substrate site the add atom couples to
    /// (the second one is ignored for the chain).
    pub attach: (usize, usize),
}

impl FiniteLattice {
    /// Lattice with the add atom over the central site (square) or the end
    /// site (chain).
    pub fn new(size: usize, spec: AdatomSpec) -> Result<Self> {
        let attach = match spec.substrate.kind {
            SubstrateKind::Square2D => (size / 2, size / 2),
            SubstrateKind::SemiInfiniteChain => (0, 0),
        };
        Self::with_attach(size, spec, attach)
    }

    pub fn with_attach(size: usize, spec: AdatomSpec, attach: (usize, usize)) -> Result<Self> {
        if size < 32 {
            return Err(Error::Domain(format!("lattice size must be >= 32, got {size}")));
        }
        let inside = match spec.substrate.kind {
            SubstrateKind::Square2D => attach.0 < size && attach.1 < size,
            SubstrateKind::SemiInfiniteChain => attach == (0, 0),
        };
        if !inside {
            return Err(Error::Domain(format!("attach site {attach:?} is not a valid site for size {size}")));
        }
        Ok(FiniteLattice { size, spec, attach })
    }

    /// Number of basis states including the add atom.
    pub fn dimension(&self) -> usize {
        match self.spec.substrate.kind {
            SubstrateKind::Square2D => 1 + self.size * self.size,
            SubstrateKind::SemiInfiniteChain => 1 + self.size,
        }
    }

    fn attach_index(&self) -> usize {
        match self.spec.substrate.kind {
            SubstrateKind::Square2D => 1 + self.attach.0 * self.size + self.attach.1,
            SubstrateKind::SemiInfiniteChain => 1,
        }
    }

    /// Gershgorin bounds on the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let s = &self.spec.substrate;
        let v = s.hopping.abs();
        let coord = match s.kind {
            SubstrateKind::Square2D => 4.0,
            SubstrateKind::SemiInfiniteChain => 2.0,
        };
        let sub_radius = coord * v + self.spec.v0;
        let lo = (s.onsite - sub_radius).min(self.spec.epsilon0 - self.spec.v0);
        let hi = (s.onsite + sub_radius).max(self.spec.epsilon0 + self.spec.v0);
        (lo, hi)
    }

    /// `out = scale * (H - shift) * x`.
    fn apply(&self, x: &[f64], out: &mut [f64], shift: f64, scale: f64) {
        let s = &self.spec.substrate;
        let (e0, v0, onsite, v) = (self.spec.epsilon0, self.spec.v0, s.onsite, s.hopping);
        let a = self.attach_index();
        let n = self.size;
        let kind = s.kind;
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let mut acc;
            if i == 0 {
                acc = (e0 - shift) * x[0] + v0 * x[a];
            } else {
                acc = (onsite - shift) * x[i];
                match kind {
                    SubstrateKind::Square2D => {
                        let (r, c) = ((i - 1) / n, (i - 1) % n);
                        if r > 0 {
                            acc += v * x[i - n];
                        }
                        if r + 1 < n {
                            acc += v * x[i + n];
                        }
                        if c > 0 {
                            acc += v * x[i - 1];
                        }
                        if c + 1 < n {
                            acc += v * x[i + 1];
                        }
                    }
                    SubstrateKind::SemiInfiniteChain => {
                        if i > 1 {
                            acc += v * x[i - 1];
                        }
                        if i < n {
                            acc += v * x[i + 1];
                        }
                    }
                }
                if i == a {
                    acc += v0 * x[0];
                }
            }
            *o = scale * acc;
        });
    }

    /// Center and half-width of the rescaling window, Gershgorin bounds
    /// widened by 5%.
    fn window(&self) -> (f64, f64) {
        let (lo, hi) = self.spectral_bounds();
        let half = 0.5 * (hi - lo) * 1.05;
        (0.5 * (hi + lo), half.max(1e-12))
    }

    /// Chebyshev moments `μ_k = <0|T_k(H̃)|0>` for `k < count`, using the
    /// doubling relations `μ_{2k} = 2<φ_k|φ_k> - μ_0` and
    /// `μ_{2k+1} = 2<φ_{k+1}|φ_k> - μ_1`.
    pub fn chebyshev_moments(&self, count: usize) -> Vec<f64> {
        let dim = self.dimension();
        let (shift, half) = self.window();
        let scale = 1.0 / half;
        let mut prev = vec![0.0; dim];
        prev[0] = 1.0;
        let mut cur = vec![0.0; dim];
        self.apply(&prev, &mut cur, shift, scale);
        let mut mu = vec![0.0; count.max(2)];
        mu[0] = 1.0;
        mu[1] = cur[0];
        let mut next = vec![0.0; dim];
        // prev = φ_{k-1}, cur = φ_k
        let mut k = 1;
        loop {
            let two_k = 2 * k;
            if two_k - 1 < mu.len() {
                mu[two_k - 1] = 2.0 * dot(&cur, &prev) - mu[1];
            }
            if two_k < mu.len() {
                mu[two_k] = 2.0 * dot(&cur, &cur) - mu[0];
            }
            if two_k + 1 >= mu.len() {
                break;
            }
            self.apply(&cur, &mut next, shift, scale);
            next.par_iter_mut().zip(prev.par_iter()).for_each(|(n, p)| *n = 2.0 * *n - p);
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
            k += 1;
        }
        mu.truncate(count);
        mu
    }

    /// Time up to which no signal reflected at the boundary can return:
    /// `0.8 d / v_max` with `d` the distance to the nearest edge and `v_max`
    /// the group-velocity bound (`4V` square, `2V` chain).
    pub fn reflection_time(&self) -> f64 {
        let v = self.spec.substrate.hopping.abs();
        match self.spec.substrate.kind {
            SubstrateKind::Square2D => {
                let n = self.size;
                let (x, y) = self.attach;
                let d = (x + 1).min(n - x).min(y + 1).min(n - y);
                0.8 * d as f64 / (4.0 * v)
            }
            SubstrateKind::SemiInfiniteChain => 0.8 * self.size as f64 / (2.0 * v),
        }
    }

    /// Expansion order needed at time `t` for a coefficient tail below `tail`.
    pub fn chebyshev_order(&self, t: f64, tail: f64) -> usize {
        let (_, half) = self.window();
        let x = half * t;
        let n = (1.5 * x) as usize + 60;
        let j = bessel_j(n, x);
        let mut acc = 0.0;
        for k in (0..n).rev() {
            acc += 2.0 * j[k].abs();
            if acc >= tail {
                return k + 1;
            }
        }
        1
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Fixed chunking keeps the reduction order independent of the thread count.
    a.par_chunks(4096)
        .zip(b.par_chunks(4096))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// `<0|exp(-iHt)|0>` from precomputed moments.
fn amplitude_from_moments(mu: &[f64], shift: f64, half: f64, t: f64, order: usize) -> C64 {
    let j = bessel_j(order, half * t);
    let mut acc = C64::new(0.0, 0.0);
    let mut rot = C64::new(1.0, 0.0);
    let step = C64::new(0.0, -1.0);
    for k in 0..order {
        let c = if k == 0 { 1.0 } else { 2.0 };
        acc += rot * (c * j[k] * mu[k]);
        rot *= step;
    }
    acc * C64::from_polar(1.0, -shift * t)
}

/// Survival probability on the finite lattice by Chebyshev expansion of the
/// evolution operator.
pub fn propagate(lat: &FiniteLattice, times: &[f64]) -> Result<SurvivalSeries> {
    propagate_with_tail(lat, times, CHEBYSHEV_TAIL)
}

/// [`propagate`] with an explicit truncation for the Chebyshev tail.
pub fn propagate_with_tail(lat: &FiniteLattice, times: &[f64], tail: f64) -> Result<SurvivalSeries> {
    for &t in times {
        check_finite("time", t)?;
        if t < 0.0 {
            return Err(Error::Domain(format!("times must be >= 0, got {t}")));
        }
    }
    if !is_strictly_increasing(times) {
        return Err(Error::Domain("times must be strictly increasing".into()));
    }
    if !(tail > 0.0) {
        return Err(Error::Domain(format!("Chebyshev tail must be > 0, got {tail}")));
    }
    let t_max = times.last().copied().unwrap_or(0.0);
    let window = lat.reflection_time();
    if t_max > window {
        let v = lat.spec.substrate.hopping.abs();
        let needed = match lat.spec.substrate.kind {
            SubstrateKind::Square2D => 2.0 * (t_max * 4.0 * v / 0.8).ceil(),
            SubstrateKind::SemiInfiniteChain => (t_max * 2.0 * v / 0.8).ceil(),
        };
        return Err(Error::Domain(format!(
            "t = {t_max} exceeds the reflection time {window} of an L = {} lattice; use L >= {needed}",
            lat.size
        )));
    }
    let order = lat.chebyshev_order(t_max, tail);
    let mu = lat.chebyshev_moments(order);
    let (shift, half) = lat.window();
    let p00 = times
        .iter()
        .map(|&t| {
            let o = lat.chebyshev_order(t, tail).min(order);
            amplitude_from_moments(&mu, shift, half, t, o)
        })
        .collect::<Vec<_>>();
    let zero = C64::new(0.0, 0.0);
    let mut series = SurvivalSeries {
        times: times.to_vec(),
        p00: p00.iter().map(|a| a.norm_sqr()).collect(),
        psi_s: p00,
        psi_r: vec![zero; times.len()],
        method: Method::Oracle,
    };
    if let Some(first) = series.times.first() {
        if *first == 0.0 {
            series.p00[0] = 1.0;
            series.psi_s[0] = C64::new(1.0, 0.0);
        }
    }
    Ok(series)
}

/// Full state `exp(-iHt)|0>`, used to check norm conservation of the
/// expansion.
pub fn evolve_state(lat: &FiniteLattice, t: f64, tail: f64) -> Result<Vec<C64>> {
    check_finite("time", t)?;
    let dim = lat.dimension();
    let (shift, half) = lat.window();
    let order = lat.chebyshev_order(t, tail);
    let j = bessel_j(order, half * t);
    let scale = 1.0 / half;
    let mut prev = vec![0.0; dim];
    prev[0] = 1.0;
    let mut cur = vec![0.0; dim];
    lat.apply(&prev, &mut cur, shift, scale);
    let mut next = vec![0.0; dim];
    let mut psi = vec![C64::new(0.0, 0.0); dim];
    psi[0] += j[0];
    let mut rot = C64::new(0.0, -1.0);
    for k in 1..order {
        let c = rot * (2.0 * j[k]);
        psi.iter_mut().zip(&cur).for_each(|(p, x)| *p += c * x);
        lat.apply(&cur, &mut next, shift, scale);
        next.iter_mut().zip(&prev).for_each(|(n, p)| *n = 2.0 * *n - p);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        rot *= C64::new(0.0, -1.0);
    }
    let phase = C64::from_polar(1.0, -shift * t);
    psi.iter_mut().for_each(|p| *p *= phase);
    Ok(psi)
}

/// Histogram of the local density of states of the add atom on the finite
/// lattice, from dense diagonalization.
#[derive(Debug, Clone, PartialEq)]
pub struct LdosHistogram {
    /// `bins + 1` bin edges.
    pub edges: Vec<f64>,
    /// Spectral weight `Σ |<0|ψ_k>|²` per bin; sums to 1.
    pub weights: Vec<f64>,
}

impl LdosHistogram {
    /// Weight divided by bin width.
    pub fn density(&self) -> Vec<f64> {
        self.weights.iter().zip(self.edges.windows(2)).map(|(w, e)| w / (e[1] - e[0])).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }
}

pub fn eigen_histogram(lat: &FiniteLattice, bins: usize) -> Result<LdosHistogram> {
    if lat.size > DENSE_LIMIT {
        return Err(Error::Domain(format!("dense diagonalization is limited to L <= {DENSE_LIMIT}, got {}", lat.size)));
    }
    if bins == 0 {
        return Err(Error::Domain("bins must be >= 1".into()));
    }
    let dim = lat.dimension();
    let mut h = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    let mut col = vec![0.0; dim];
    let mut e = vec![0.0; dim];
    for j in 0..dim {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[j] = 1.0;
        lat.apply(&e, &mut col, 0.0, 1.0);
        for i in 0..dim {
            h[(i, j)] = col[i];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(h);
    let (lo, hi) = lat.spectral_bounds();
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|k| lo + width * k as f64).collect();
    let mut weights = vec![0.0; bins];
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        let w = eig.eigenvectors[(0, k)].powi(2);
        let b = (((ev - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        weights[b] += w;
    }
    Ok(LdosHistogram { edges, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::substrate::SubstrateSpec;

    fn lattice(l: usize) -> FiniteLattice {
        FiniteLattice::new(l, AdatomSpec::reference()).unwrap()
    }

    #[test]
    fn reflection_windows() {
        assert!((lattice(400).reflection_time() - 40.0).abs() < 1e-12);
        assert!((lattice(32).reflection_time() - 3.2).abs() < 1e-12);
        assert!((lattice(64).reflection_time() - 2.0 * lattice(32).reflection_time()).abs() < 1e-12);
    }

    #[test]
    fn small_lattice_rejected() {
        assert!(FiniteLattice::new(16, AdatomSpec::reference()).is_err());
    }

    #[test]
    fn trivial_cases() {
        let s = propagate(&lattice(64), &[0.0, 1.0]).unwrap();
        assert_eq!(s.p00[0], 1.0);
        let spec = AdatomSpec::new(2.0, 0.0, SubstrateSpec::square(1.0)).unwrap();
        let lat = FiniteLattice::new(40, spec).unwrap();
        let s = propagate(&lat, &[0.5, 2.0, 3.9]).unwrap();
        assert!(s.p00.iter().all(|&p| (p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn refuses_times_past_reflection() {
        let err = propagate(&lattice(32), &[1.0, 5.0]).unwrap_err();
        assert!(matches!(err, Error::Domain(ref m) if m.contains("L >=")));
    }

    #[test]
    fn moments_match_explicit_recurrence() {
        let lat = lattice(40);
        let mu = lat.chebyshev_moments(9);
        let (shift, half) = lat.window();
        let dim = lat.dimension();
        let mut prev = vec![0.0; dim];
        prev[0] = 1.0;
        let mut cur = vec![0.0; dim];
        lat.apply(&prev, &mut cur, shift, 1.0 / half);
        let mut direct = vec![1.0, cur[0]];
        for _ in 2..9 {
            let mut next = vec![0.0; dim];
            lat.apply(&cur, &mut next, shift, 1.0 / half);
            next.iter_mut().zip(&prev).for_each(|(n, p)| *n = 2.0 * *n - p);
            direct.push(next[0]);
            prev = cur;
            cur = next;
        }
        for k in 0..9 {
            assert!((mu[k] - direct[k]).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn norm_is_conserved() {
        let lat = lattice(48);
        for &t in &[0.7, 3.0, 4.5] {
            let psi = evolve_state(&lat, t, CHEBYSHEV_TAIL).unwrap();
            let norm: f64 = psi.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12, "t={t}: {norm}");
            let s = propagate(&lat, &[t]).unwrap();
            assert!((psi[0].norm_sqr() - s.p00[0]).abs() < 1e-13);
        }
    }

    #[test]
    fn tail_tolerance_independence() {
        let lat = lattice(64);
        let ts = [0.5, 2.0, 6.0];
        let a = propagate_with_tail(&lat, &ts, 1e-14).unwrap();
        let b = propagate_with_tail(&lat, &ts, 5e-15).unwrap();
        for i in 0..3 {
            assert!((a.p00[i] - b.p00[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn size_convergence_inside_window() {
        let ts = [1.0, 2.5, 3.2];
        let a = propagate(&lattice(32), &ts).unwrap();
        let b = propagate(&lattice(64), &ts).unwrap();
        for i in 0..3 {
            assert!((a.p00[i] - b.p00[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn histogram_completeness_and_peak() {
        let h = eigen_histogram(&lattice(32), 80).unwrap();
        let total: f64 = h.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let (k, _) = h.weights.iter().enumerate().fold((0, 0.0), |b, (i, &w)| if w > b.1 { (i, w) } else { b });
        assert!((h.centers()[k] - 1.956).abs() < 0.3);
        assert!(eigen_histogram(&lattice(100), 10).is_err());
    }

    #[test]
    fn decoupled_histogram_is_single_bin() {
        let spec = AdatomSpec::new(2.0, 0.0, SubstrateSpec::square(1.0)).unwrap();
        let h = eigen_histogram(&FiniteLattice::new(32, spec).unwrap(), 50).unwrap();
        assert_eq!(h.weights.iter().filter(|&&w| w > 1e-12).count(), 1);
    }

    #[test]
    fn chain_oracle() {
        let spec = AdatomSpec::new(0.0, 0.3, SubstrateSpec::chain(1.0)).unwrap();
        let lat = FiniteLattice::new(200, spec).unwrap();
        assert!((lat.reflection_time() - 80.0).abs() < 1e-12);
        let s = propagate(&lat, &[1.0, 10.0]).unwrap();
        assert!(s.p00.iter().all(|&p| p > 0.0 && p < 1.0));
    }
}
