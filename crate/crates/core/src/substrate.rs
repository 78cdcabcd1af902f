//! Retarded Green functions and local densities of states of the bare
//! substrates: the periodic square lattice (diagonal element) and the surface
//! site of a semi-infinite chain.
//!
//! Both functions are evaluated on the physical sheet (analytic off the band)
//! and on the second sheet reached by continuing from above the band through
//! the cut. The square lattice has a logarithmic branch point at the band
//! center, so its second sheet depends on which half of the band is crossed;
//! [`BandHalf`] selects it.

use crate::error::{check_finite, Error, Result};
use crate::special::elliptic_k_complement;
use crate::C64;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubstrateKind {
    Square2D,
    SemiInfiniteChain,
}

/// Which Riemann sheet of the Green function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sheet {
    Physical,
    /// Reached from the physical sheet through the band, from above.
    Second,
}

/// Half of the band through which a second-sheet continuation passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BandHalf {
    /// Between the lower edge and the band center.
    Lower,
    /// Between the band center and the upper edge.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubstrateSpec {
    pub kind: SubstrateKind,
    /// Nearest-neighbour hopping, positive.
    pub hopping: f64,
    /// Site energy; the band is centered on it.
    pub onsite: f64,
}

impl SubstrateSpec {
    pub fn new(kind: SubstrateKind, hopping: f64, onsite: f64) -> Result<Self> {
        check_finite("hopping", hopping)?;
        check_finite("onsite", onsite)?;
        if hopping <= 0.0 {
            return Err(Error::Domain(format!("hopping must be positive, got {hopping}")));
        }
        Ok(SubstrateSpec { kind, hopping, onsite })
    }

    /// Square lattice with site energy `4V`, band `[0, 8V]`.
    pub fn square(hopping: f64) -> Self {
        SubstrateSpec { kind: SubstrateKind::Square2D, hopping, onsite: 4.0 * hopping }
    }

    /// Semi-infinite chain with zero site energy, band `[-2V, 2V]`.
    pub fn chain(hopping: f64) -> Self {
        SubstrateSpec { kind: SubstrateKind::SemiInfiniteChain, hopping, onsite: 0.0 }
    }

    pub fn half_bandwidth(&self) -> f64 {
        match self.kind {
            SubstrateKind::Square2D => 4.0 * self.hopping,
            SubstrateKind::SemiInfiniteChain => 2.0 * self.hopping,
        }
    }

    /// Full bandwidth `B`.
    pub fn bandwidth(&self) -> f64 {
        2.0 * self.half_bandwidth()
    }

    /// `(ε_L, ε_U)`.
    pub fn band_edges(&self) -> (f64, f64) {
        let w = self.half_bandwidth();
        (self.onsite - w, self.onsite + w)
    }

    pub fn band_center(&self) -> f64 {
        self.onsite
    }

    /// Non-analytic points of the density on the real axis, sorted.
    pub fn singular_points(&self) -> Vec<f64> {
        let (lo, hi) = self.band_edges();
        match self.kind {
            SubstrateKind::Square2D => vec![lo, self.onsite, hi],
            SubstrateKind::SemiInfiniteChain => vec![lo, hi],
        }
    }

    /// Band half containing the real part of `z`.
    pub fn half_of(&self, z: C64) -> BandHalf {
        if z.re < self.onsite {
            BandHalf::Lower
        } else {
            BandHalf::Upper
        }
    }

    pub fn contains(&self, e: f64) -> bool {
        let (lo, hi) = self.band_edges();
        e > lo && e < hi
    }

    /// Diagonal Green function on the requested sheet. The second sheet
    /// crosses the band half below which `z` lies.
    pub fn green(&self, z: C64, sheet: Sheet) -> Result<C64> {
        match sheet {
            Sheet::Physical => self.green_physical(z),
            Sheet::Second => self.green_second(z, self.half_of(z)),
        }
    }

    /// Second-sheet Green function continued through the given band half.
    /// Requires `Im z <= 0`; on the real axis inside the band this is the
    /// retarded boundary value.
    pub fn green_second(&self, z: C64, half: BandHalf) -> Result<C64> {
        check_complex(z)?;
        if z.im > 0.0 {
            return Err(Error::Domain(format!("second sheet requires Im z <= 0, got {z}")));
        }
        if z.im == 0.0 && self.contains(z.re) {
            return self.green_physical(z);
        }
        let rho = self.continued_density(z, half)?;
        Ok(self.green_physical(z)? - C64::new(0.0, 2.0 * PI) * rho)
    }

    /// Physical-sheet Green function; on the real axis the retarded limit.
    pub fn green_physical(&self, z: C64) -> Result<C64> {
        check_complex(z)?;
        match self.kind {
            SubstrateKind::Square2D => square_physical(self, z),
            SubstrateKind::SemiInfiniteChain => chain_physical(self, z),
        }
    }

    /// Analytic continuation of the density off the real axis, defined so that
    /// `G_II = G_I - 2πi ρ_c` below the band.
    pub fn continued_density(&self, z: C64, half: BandHalf) -> Result<C64> {
        check_complex(z)?;
        let v = self.hopping;
        match self.kind {
            SubstrateKind::Square2D => {
                let zeta = z - self.onsite;
                // ρ = K(1 - ζ²/w²) / (2π² V) with the complementary root ±ζ/w
                // chosen to have positive real part on the crossed half.
                let w = self.half_bandwidth();
                let b = match half {
                    BandHalf::Lower => -zeta / w,
                    BandHalf::Upper => zeta / w,
                };
                if b.re <= 0.0 && b.im == 0.0 {
                    return Err(Error::Singularity(format!(
                        "continued square-lattice density at the band center, z = {z}"
                    )));
                }
                Ok(elliptic_k_complement(b) / (2.0 * PI * PI * v))
            }
            SubstrateKind::SemiInfiniteChain => {
                let (lo, hi) = self.band_edges();
                if z.im == 0.0 && self.contains(z.re) {
                    let r = ((z.re - lo) * (hi - z.re)).sqrt();
                    return Ok(C64::new(r / (2.0 * PI * v * v), 0.0));
                }
                // Analytic off [ε_L, ε_U]; just below the band the product
                // tends to -i sqrt((ε - ε_L)(ε_U - ε)).
                let r = (z - hi).sqrt() * (z - lo).sqrt();
                Ok(C64::new(0.0, 1.0) * r / (2.0 * PI * v * v))
            }
        }
    }
}

fn check_complex(z: C64) -> Result<()> {
    check_finite("Re z", z.re)?;
    check_finite("Im z", z.im)
}

fn square_physical(spec: &SubstrateSpec, z: C64) -> Result<C64> {
    let v = spec.hopping;
    let w = spec.half_bandwidth();
    let (lo, hi) = spec.band_edges();
    if z.im == 0.0 {
        let x = z.re;
        let zeta = x - spec.onsite;
        let dl = x - lo;
        let du = hi - x;
        if zeta == 0.0 {
            return Err(Error::Singularity("square-lattice Green function at the van Hove point".into()));
        }
        if dl == 0.0 || du == 0.0 {
            return Err(Error::Singularity(format!("square-lattice Green function at the band edge {x}")));
        }
        if dl > 0.0 && du > 0.0 {
            let re = zeta.signum() * elliptic_k_complement(C64::new((dl * du).sqrt() / w, 0.0)).re;
            let im = -elliptic_k_complement(C64::new(zeta.abs() / w, 0.0)).re;
            return Ok(C64::new(re, im) / (2.0 * PI * v));
        }
        // Outside the band: G = 2/(πζ) K(w²/ζ²), complement sqrt(-dl du)/|ζ|.
        let b = (-dl * du).sqrt() / zeta.abs();
        let k = elliptic_k_complement(C64::new(b, 0.0)).re;
        return Ok(C64::new(2.0 * k / (PI * zeta), 0.0));
    }
    let zeta = z - spec.onsite;
    let dl = z - lo;
    let du = C64::new(hi, 0.0) - z;
    let x = -(dl * du) / (zeta * zeta);
    let b = x.sqrt();
    Ok(2.0 * elliptic_k_complement(b) / (PI * zeta))
}

fn chain_physical(spec: &SubstrateSpec, z: C64) -> Result<C64> {
    let v = spec.hopping;
    let (lo, hi) = spec.band_edges();
    let zeta = z - spec.onsite;
    if z.im == 0.0 {
        let x = z.re;
        let zr = zeta.re;
        if x >= lo && x <= hi {
            let r = ((x - lo) * (hi - x)).sqrt();
            return Ok(C64::new(zr, -r) / (2.0 * v * v));
        }
        let s = ((x - lo) * (x - hi)).sqrt();
        let g = if zr > 0.0 { 2.0 / (zr + s) } else { 2.0 / (zr - s) };
        return Ok(C64::new(g, 0.0));
    }
    let r = (z - hi).sqrt() * (z - lo).sqrt();
    Ok(2.0 / (zeta + r))
}

/// Surface Green function of the semi-infinite chain.
pub fn chain_surface_green(z: C64, spec: &SubstrateSpec, sheet: Sheet) -> Result<C64> {
    if spec.kind != SubstrateKind::SemiInfiniteChain {
        return Err(Error::Domain("chain_surface_green needs a chain substrate".into()));
    }
    spec.green(z, sheet)
}

/// Diagonal Green function of the periodic square lattice.
pub fn square_lattice_green(z: C64, spec: &SubstrateSpec, sheet: Sheet) -> Result<C64> {
    if spec.kind != SubstrateKind::Square2D {
        return Err(Error::Domain("square_lattice_green needs a square-lattice substrate".into()));
    }
    spec.green(z, sheet)
}

/// Substrate local density of states `-(1/π) Im G(ε + i0)`.
pub fn substrate_ldos(e: f64, spec: &SubstrateSpec) -> Result<f64> {
    check_finite("energy", e)?;
    let (lo, hi) = spec.band_edges();
    if e < lo || e > hi {
        return Ok(0.0);
    }
    Ok(-spec.green_physical(C64::new(e, 0.0))?.im / PI)
}

/// Brute-force lattice sum for the diagonal Green function, used as an
/// independent check of the closed forms.
///
/// Square lattice: `(1/N²) Σ_k 1/(z - ε(k))` over an `N x N` periodic grid.
/// Chain: surface element of an open chain of `N` sites,
/// `(2/(N+1)) Σ_j sin²(k_j) / (z - ε(k_j))` with `k_j = πj/(N+1)`.
pub fn bz_oracle_green(z: C64, spec: &SubstrateSpec, grid: usize) -> Result<C64> {
    check_complex(z)?;
    if z.im == 0.0 {
        return Err(Error::Domain("bz_oracle_green needs Im z != 0".into()));
    }
    if grid < 64 {
        return Err(Error::Domain(format!("grid must be >= 64, got {grid}")));
    }
    let v = spec.hopping;
    match spec.kind {
        SubstrateKind::Square2D => {
            let cos: Vec<f64> = (0..grid).map(|i| (2.0 * PI * (i as f64 + 0.5) / grid as f64).cos()).collect();
            let rows: Vec<C64> = cos
                .par_iter()
                .map(|&cx| {
                    cos.iter()
                        .map(|&cy| 1.0 / (z - (spec.onsite - 2.0 * v * (cx + cy))))
                        .fold(C64::new(0.0, 0.0), |a, b| a + b)
                })
                .collect();
            let sum = rows.iter().fold(C64::new(0.0, 0.0), |a, b| a + b);
            Ok(sum / (grid * grid) as f64)
        }
        SubstrateKind::SemiInfiniteChain => {
            let n1 = (grid + 1) as f64;
            let sum = (1..=grid)
                .map(|j| {
                    let k = PI * j as f64 / n1;
                    let s = k.sin();
                    s * s / (z - (spec.onsite - 2.0 * v * k.cos()))
                })
                .fold(C64::new(0.0, 0.0), |a, b| a + b);
            Ok(sum * 2.0 / n1)
        }
    }
}
