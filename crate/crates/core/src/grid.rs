//! Time grids.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Geometric,
}

/// `points` times from `t_min` to `t_max` inclusive.
pub fn time_grid(t_min: f64, t_max: f64, points: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::Domain(format!("time grid needs at least 2 points, got {points}")));
    }
    if !(t_min.is_finite() && t_max.is_finite()) || t_min < 0.0 || t_max <= t_min {
        return Err(Error::Domain(format!("invalid time range [{t_min}, {t_max}]")));
    }
    let n = (points - 1) as f64;
    let mut out: Vec<f64> = match spacing {
        Spacing::Linear => (0..points).map(|i| t_min + (t_max - t_min) * i as f64 / n).collect(),
        Spacing::Geometric => {
            if t_min <= 0.0 {
                return Err(Error::Domain("geometric grid needs t_min > 0".into()));
            }
            let r = (t_max / t_min).ln();
            (0..points).map(|i| t_min * (r * i as f64 / n).exp()).collect()
        }
    };
    out[points - 1] = t_max;
    Ok(out)
}

/// Insert `factor - 1` equally spaced points into every grid interval that
/// overlaps `[lo, hi]`. The result stays strictly increasing.
pub fn refine(times: &[f64], lo: f64, hi: f64, factor: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len() + factor * 8);
    for w in times.windows(2) {
        out.push(w[0]);
        if factor > 1 && w[1] >= lo && w[0] <= hi {
            for k in 1..factor {
                out.push(w[0] + (w[1] - w[0]) * k as f64 / factor as f64);
            }
        }
    }
    if let Some(&last) = times.last() {
        out.push(last);
    }
    out
}

pub fn is_strictly_increasing(times: &[f64]) -> bool {
    times.windows(2).all(|w| w[1] > w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_grid_endpoints() {
        let g = time_grid(0.01, 40.0, 200, Spacing::Geometric).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[199], 40.0);
        assert!(is_strictly_increasing(&g));
        assert!(time_grid(0.0, 1.0, 10, Spacing::Geometric).is_err());
        assert!(time_grid(0.0, 1.0, 1, Spacing::Linear).is_err());
    }

    #[test]
    fn refinement_inserts_points() {
        let g = vec![0.0, 1.0, 2.0, 3.0];
        let r = refine(&g, 1.2, 1.8, 4);
        assert_eq!(r, vec![0.0, 1.0, 1.25, 1.5, 1.75, 2.0, 3.0]);
        assert!(is_strictly_increasing(&r));
    }
}
