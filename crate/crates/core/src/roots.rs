//! Small polynomial helpers: companion-matrix roots with Newton polishing,
//! stable quadratic solves and winding-number root counts.

use crate::error::CoreError;
use crate::C64;
use ndarray::Array2;
use ndarray_linalg::Eig;

/// Evaluates `sum c[i] z^i` and its derivative.
pub fn poly_eval_with_deriv(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut v = C64::new(0.0, 0.0);
    let mut d = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

pub fn poly_eval(coeffs: &[C64], z: C64) -> C64 {
    poly_eval_with_deriv(coeffs, z).0
}

/// All roots of a complex-coefficient polynomial (ascending coefficients)
/// via companion-matrix eigenvalues, then a few Newton steps.
pub fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>, CoreError> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Err(CoreError::RootSelection("zero polynomial".into()));
    }
    let mut c: Vec<C64> = coeffs.to_vec();
    while let Some(last) = c.last() {
        if last.norm() <= 1e-14 * scale && c.len() > 1 {
            c.pop();
        } else {
            break;
        }
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    let mut m = Array2::<C64>::zeros((deg, deg));
    for i in 0..deg {
        m[[i, deg - 1]] = -c[i] / lead;
        if i + 1 < deg {
            m[[i + 1, i]] = C64::new(1.0, 0.0);
        }
    }
    let (eigs, _) = m
        .eig()
        .map_err(|e| CoreError::RootSelection(format!("companion eigenvalues: {e}")))?;
    let mut roots: Vec<C64> = eigs.iter().copied().collect();
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (v, d) = poly_eval_with_deriv(&c, *r);
            if d.norm() > 1e-300 {
                let step = v / d;
                if step.norm() < 1.0 {
                    *r -= step;
                }
            }
        }
    }
    // Deterministic ordering.
    roots.sort_by(|a, b| {
        (a.norm(), a.re, a.im)
            .partial_cmp(&(b.norm(), b.re, b.im))
            .unwrap()
    });
    Ok(roots)
}

/// Stable roots of `a z^2 + b z + c` (a != 0).
pub fn quadratic_roots(a: C64, b: C64, c: C64) -> (C64, C64) {
    let disc = (b * b - 4.0 * a * c).sqrt();
    // Pick the sign that avoids cancellation in -b -/+ disc.
    let q = if (b.conj() * disc).re >= 0.0 {
        -0.5 * (b + disc)
    } else {
        -0.5 * (b - disc)
    };
    if q.norm() == 0.0 {
        (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    } else {
        (q / a, c / q)
    }
}

/// Number of roots inside `|z| < radius` via the argument principle
/// (trapezoidal winding number of p'(z)/p(z)).
pub fn winding_root_count(coeffs: &[C64], radius: f64, nodes: usize) -> Result<usize, CoreError> {
    let mut integral = C64::new(0.0, 0.0);
    for j in 0..nodes {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
        let z = radius * C64::new(theta.cos(), theta.sin());
        let (v, d) = poly_eval_with_deriv(coeffs, z);
        if v.norm() < 1e-12 {
            return Err(CoreError::RootSelection(
                "root too close to the counting circle".into(),
            ));
        }
        // dz = i z dtheta
        integral += d / v * C64::new(0.0, 1.0) * z;
    }
    integral *= 2.0 * std::f64::consts::PI / nodes as f64;
    // integral == 2*pi*i * (number of roots inside)
    let count = integral.im / (2.0 * std::f64::consts::PI);
    let rounded = count.round();
    if (count - rounded).abs() > 1e-6 || rounded < 0.0 {
        return Err(CoreError::RootSelection(format!(
            "winding number {count} is not a non-negative integer"
        )));
    }
    Ok(rounded as usize)
}

/// Bisection for a sign change of `f` on `[lo, hi]`; `f(lo)` and `f(hi)` must
/// have opposite signs. Refines with ~100 iterations (below 1e-15 relative).
pub fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64, CoreError> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(CoreError::RootSelection(format!(
            "no sign change on [{lo}, {hi}] ({flo:.3e}, {fhi:.3e})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo) < 1e-16 * (1.0 + mid.abs()) {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cubic_roots_known() {
        // (z - 1)(z - 2)(z + 3) = z^3 - 7z + 6
        let coeffs = [
            C64::new(6.0, 0.0),
            C64::new(-7.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ];
        let roots = poly_roots(&coeffs).unwrap();
        let mut re: Vec<f64> = roots.iter().map(|r| r.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(re[0], -3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(re[1], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(re[2], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn quadratic_stable() {
        let (r1, r2) = quadratic_roots(
            C64::new(1.0, 0.0),
            C64::new(-1e8, 0.0),
            C64::new(1.0, 0.0),
        );
        let (small, large) = if r1.norm() < r2.norm() { (r1, r2) } else { (r2, r1) };
        assert_abs_diff_eq!(small.re, 1e-8, epsilon = 1e-16);
        assert_abs_diff_eq!(large.re, 1e8, epsilon = 1.0);
    }

    #[test]
    fn winding_counts_roots_in_disk() {
        // (z - 0.5)(z - 3) = z^2 - 3.5 z + 1.5
        let coeffs = [
            C64::new(1.5, 0.0),
            C64::new(-3.5, 0.0),
            C64::new(1.0, 0.0),
        ];
        assert_eq!(winding_root_count(&coeffs, 1.0, 256).unwrap(), 1);
        assert_eq!(winding_root_count(&coeffs, 4.0, 256).unwrap(), 2);
    }
}
