//! Special functions: complete elliptic integral of the first kind on the
//! complex plane, spherical Bessel functions for Filon weights and integer
//! order Bessel functions for Chebyshev propagation.

use crate::error::{Error, Result};
use crate::C64;
use std::f64::consts::FRAC_PI_2;

const AGM_MAX_ITER: usize = 64;

/// Arithmetic-geometric mean of two complex numbers.
///
/// The geometric step takes the product of principal square roots, which
/// keeps every iterate in the right half-plane once the first one is there.
/// The result is analytic in `b` on `C \ (-inf, 0]` for `a = 1`.
pub fn agm(mut a: C64, mut b: C64) -> C64 {
    for _ in 0..AGM_MAX_ITER {
        let next_a = 0.5 * (a + b);
        let next_b = a.sqrt() * b.sqrt();
        a = next_a;
        b = next_b;
        if (a - b).norm() <= 4.0 * f64::EPSILON * a.norm() {
            break;
        }
    }
    0.5 * (a + b)
}

/// K expressed through `b = sqrt(1 - m)`: `K = pi / (2 agm(1, b))`.
///
/// Taking the complementary root as the argument lets callers pick the
/// branch explicitly, which is how second-sheet continuations are built.
pub fn elliptic_k_complement(b: C64) -> C64 {
    C64::new(FRAC_PI_2, 0.0) / agm(C64::new(1.0, 0.0), b)
}

/// Complete elliptic integral of the first kind in the parameter convention,
/// `K(m) = int_0^{pi/2} dθ / sqrt(1 - m sin²θ)`, with the branch cut on `[1, inf)`.
///
/// On the cut itself the value is the limit from above (`Im m -> 0+`).
pub fn elliptic_k(m: C64) -> Result<C64> {
    if !(m.re.is_finite() && m.im.is_finite()) {
        return Err(Error::Domain(format!("elliptic_k: non-finite parameter {m}")));
    }
    if m == C64::new(1.0, 0.0) {
        return Err(Error::Singularity("elliptic_k: logarithmic divergence at m = 1".into()));
    }
    let one_minus = C64::new(1.0, 0.0) - m;
    // Limit from Im m -> 0+ means Im(1 - m) -> 0-.
    let b = if one_minus.im == 0.0 && one_minus.re < 0.0 {
        C64::new(0.0, -(-one_minus.re).sqrt())
    } else {
        one_minus.sqrt()
    };
    Ok(elliptic_k_complement(b))
}

/// Spherical Bessel functions `j_0(x) .. j_{n-1}(x)` for `x >= 0`.
pub fn spherical_bessel_j(n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    let x = x.abs();
    if x < 1e-8 {
        // Leading series term x^k / (2k+1)!!; higher orders underflow fast.
        let mut term = 1.0;
        for (k, v) in out.iter_mut().enumerate() {
            *v = term;
            term *= x / (2 * k + 3) as f64;
        }
        return out;
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    if x > 2.0 * n as f64 {
        // Upward recurrence is stable while the order stays below x.
        out[0] = j0;
        if n > 1 {
            out[1] = j1;
        }
        for k in 2..n {
            out[k] = (2 * k - 1) as f64 / x * out[k - 1] - out[k - 2];
        }
        return out;
    }
    // Miller backward recurrence from well above both n and x.
    let start = n + 20 + (x as usize) + (10.0 * x.cbrt()) as usize;
    let mut next = 0.0;
    let mut cur = 1e-300;
    for k in (0..start).rev() {
        // cur holds j_{k+1} scaled, next holds j_{k+2} scaled.
        let prev = (2 * k + 3) as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if k < n {
            out[k] = cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    // Here cur = j_0 scaled and next = j_1 scaled.
    let scale = if j0.abs() >= j1.abs() { j0 / cur } else { j1 / next };
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// Bessel functions of the first kind `J_0(x) .. J_{n-1}(x)` for `x >= 0`,
/// via Miller recurrence normalized with `J_0 + 2 sum J_{2k} = 1`.
pub fn bessel_j(n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    let x = x.abs();
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let mut start = n.max(x as usize) + 40 + (12.0 * x.cbrt()) as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0;
    for k in (0..=start).rev() {
        if k < n {
            out[k] = cur;
        }
        if k == 0 {
            norm += cur;
        } else if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        if k > 0 {
            let prev = 2.0 * k as f64 / x * cur - next;
            next = cur;
            cur = prev;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}
