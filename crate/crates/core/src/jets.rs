//! Truncated bivariate Taylor series ("jets") at arbitrary complex centers.
//!
//! A jet stores coefficients `c[i][j]` of
//! `sum c[i][j] (x - x0)^i (y - y0)^j` on the rectangle `i <= kx`, `j <= ky`.
//! Ring operations between jets require identical centers and truncate to the
//! smaller order per axis; with that convention the retained coefficients of
//! sums, products and unit divisions are exact up to rounding.
//!
//! Beyond the ring, the module provides the cancelling divisions needed when
//! a numerator vanishes on a divisor's zero set (removable singularities):
//! division by `(x - x0)^k`, and division by `y - s(x)` for a curve through
//! the center. Both verify the cancellation numerically and fail loudly when
//! the singularity is not removable.

use crate::error::CoreError;
use crate::C64;

/// Relative threshold below which leading coefficients are treated as a
/// removable cancellation. Residuals of true cancellations sit at rounding
/// level; anything above this points at an algebra error upstream.
pub const EPS_CANCEL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorJet2 {
    x0: C64,
    y0: C64,
    kx: usize,
    ky: usize,
    /// Row-major: index `i * (ky + 1) + j`.
    c: Vec<C64>,
}

impl TaylorJet2 {
    pub fn zero(center: (C64, C64), kx: usize, ky: usize) -> Self {
        Self {
            x0: center.0,
            y0: center.1,
            kx,
            ky,
            c: vec![C64::new(0.0, 0.0); (kx + 1) * (ky + 1)],
        }
    }

    pub fn constant(value: C64, center: (C64, C64), kx: usize, ky: usize) -> Self {
        let mut jet = Self::zero(center, kx, ky);
        jet.c[0] = value;
        jet
    }

    /// The coordinate function `x` as a jet: `x0 + u`.
    pub fn var_x(center: (C64, C64), kx: usize, ky: usize) -> Self {
        let mut jet = Self::constant(center.0, center, kx, ky);
        if kx >= 1 {
            *jet.at_mut(1, 0) = C64::new(1.0, 0.0);
        }
        jet
    }

    /// The coordinate function `y` as a jet: `y0 + v`.
    pub fn var_y(center: (C64, C64), kx: usize, ky: usize) -> Self {
        let mut jet = Self::constant(center.1, center, kx, ky);
        if ky >= 1 {
            *jet.at_mut(0, 1) = C64::new(1.0, 0.0);
        }
        jet
    }

    pub fn from_coeffs(
        center: (C64, C64),
        kx: usize,
        ky: usize,
        coeffs: Vec<C64>,
    ) -> Result<Self, CoreError> {
        if coeffs.len() != (kx + 1) * (ky + 1) {
            return Err(CoreError::InvalidParams(format!(
                "coefficient count {} does not match orders ({kx}, {ky})",
                coeffs.len()
            )));
        }
        Ok(Self {
            x0: center.0,
            y0: center.1,
            kx,
            ky,
            c: coeffs,
        })
    }

    pub fn center(&self) -> (C64, C64) {
        (self.x0, self.y0)
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.kx, self.ky)
    }

    pub fn coeff(&self, i: usize, j: usize) -> C64 {
        self.c[i * (self.ky + 1) + j]
    }

    pub(crate) fn at_mut(&mut self, i: usize, j: usize) -> &mut C64 {
        &mut self.c[i * (self.ky + 1) + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn same_center(&self, other: &Self) -> bool {
        self.x0 == other.x0 && self.y0 == other.y0
    }

    fn center_err(&self, other: &Self) -> CoreError {
        CoreError::CenterMismatch((self.x0.re, self.y0.re), (other.x0.re, other.y0.re))
    }

    /// Copy truncated to orders `(kx, ky)`; both must not exceed the stored.
    pub fn truncated(&self, kx: usize, ky: usize) -> Result<Self, CoreError> {
        if kx > self.kx || ky > self.ky {
            return Err(CoreError::OrderOverflow(kx, ky, self.kx, self.ky));
        }
        let mut out = Self::zero((self.x0, self.y0), kx, ky);
        for i in 0..=kx {
            for j in 0..=ky {
                *out.at_mut(i, j) = self.coeff(i, j);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self, CoreError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, CoreError> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self, CoreError> {
        if !self.same_center(other) {
            return Err(self.center_err(other));
        }
        let kx = self.kx.min(other.kx);
        let ky = self.ky.min(other.ky);
        let mut out = Self::zero((self.x0, self.y0), kx, ky);
        for i in 0..=kx {
            for j in 0..=ky {
                *out.at_mut(i, j) = f(self.coeff(i, j), other.coeff(i, j));
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for z in out.c.iter_mut() {
            *z = -*z;
        }
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut out = self.clone();
        for z in out.c.iter_mut() {
            *z *= factor;
        }
        out
    }

    pub fn add_scalar(&self, value: C64) -> Self {
        let mut out = self.clone();
        out.c[0] += value;
        out
    }

    /// Cauchy product truncated to the shared rectangle.
    pub fn mul(&self, other: &Self) -> Result<Self, CoreError> {
        if !self.same_center(other) {
            return Err(self.center_err(other));
        }
        let kx = self.kx.min(other.kx);
        let ky = self.ky.min(other.ky);
        let mut out = Self::zero((self.x0, self.y0), kx, ky);
        for i1 in 0..=kx.min(self.kx) {
            for j1 in 0..=ky.min(self.ky) {
                let a = self.coeff(i1, j1);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for i2 in 0..=(kx - i1).min(other.kx) {
                    for j2 in 0..=(ky - j1).min(other.ky) {
                        let term = a * other.coeff(i2, j2);
                        *out.at_mut(i1 + i2, j1 + j2) += term;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Division by a jet with a nonzero constant term (graded back-solve).
    pub fn div(&self, den: &Self) -> Result<Self, CoreError> {
        if !self.same_center(den) {
            return Err(self.center_err(den));
        }
        let b00 = den.coeff(0, 0);
        if b00.norm() <= 1e-300 || b00.norm() <= 1e-12 * den.max_abs() {
            return Err(CoreError::ZeroConstantDivisor);
        }
        let kx = self.kx.min(den.kx);
        let ky = self.ky.min(den.ky);
        let mut out = Self::zero((self.x0, self.y0), kx, ky);
        for i in 0..=kx {
            for j in 0..=ky {
                let mut acc = self.coeff(i, j);
                for r in 0..=i {
                    for s in 0..=j {
                        if r == i && s == j {
                            continue;
                        }
                        acc -= out.coeff(r, s) * den.coeff(i - r, j - s);
                    }
                }
                *out.at_mut(i, j) = acc / b00;
            }
        }
        Ok(out)
    }

    /// Divides by `(x - x0)^k` (axis 0) or `(y - y0)^k` (axis 1): shifts the
    /// coefficient array down after checking that the leading slices vanish
    /// relatively to `EPS_CANCEL`. The order along the axis drops by `k`.
    pub fn cancel_div(&self, axis: usize, k: usize) -> Result<Self, CoreError> {
        self.cancel_div_eps(axis, k, EPS_CANCEL)
    }

    pub fn cancel_div_eps(&self, axis: usize, k: usize, eps: f64) -> Result<Self, CoreError> {
        if k == 0 {
            return Ok(self.clone());
        }
        let (kx, ky) = (self.kx, self.ky);
        let scale = self.max_abs();
        let slice_max = |i_or_j: usize| -> f64 {
            let mut m = 0.0f64;
            if axis == 0 {
                for j in 0..=ky {
                    m = m.max(self.coeff(i_or_j, j).norm());
                }
            } else {
                for i in 0..=kx {
                    m = m.max(self.coeff(i, i_or_j).norm());
                }
            }
            m
        };
        let along = if axis == 0 { kx } else { ky };
        if k > along {
            return Err(CoreError::OrderOverflow(k, 0, along, 0));
        }
        if scale > 0.0 {
            for lead in 0..k {
                let residual = slice_max(lead) / scale;
                if residual > eps {
                    return Err(CoreError::CancellationFailed { residual });
                }
            }
        }
        let (okx, oky) = if axis == 0 { (kx - k, ky) } else { (kx, ky - k) };
        let mut out = Self::zero((self.x0, self.y0), okx, oky);
        for i in 0..=okx {
            for j in 0..=oky {
                *out.at_mut(i, j) = if axis == 0 {
                    self.coeff(i + k, j)
                } else {
                    self.coeff(i, j + k)
                };
            }
        }
        Ok(out)
    }

    /// Divides by `y - s(x)` where `s` is a univariate jet in `x` (ky = 0)
    /// at the same center with `s(x0) = y0`, i.e. the center lies on the
    /// divisor's zero curve. Writing `S(u) = s(x0 + u) - y0` (no constant
    /// term), the quotient `W` of `N = W (v - S(u))` satisfies
    ///
    /// `W[a][b-1] = N[a][b] + sum_r S_r W[a-r][b]`,
    ///
    /// so a quotient exact at x-order `kx` loses `kx + 1` y-orders of the
    /// numerator. The unused `b = 0` row of `N` is the divisibility check:
    /// its back-substituted residual must vanish for a removable singularity.
    pub fn div_y_minus_s(&self, s: &Self) -> Result<Self, CoreError> {
        if s.ky != 0 {
            return Err(CoreError::InvalidParams(
                "curve jet must be univariate in x".into(),
            ));
        }
        if self.x0 != s.x0 {
            return Err(self.center_err(s));
        }
        let s0 = s.coeff(0, 0) - self.y0;
        let scale_s = s.max_abs().max(self.y0.norm()).max(1.0);
        if s0.norm() > 1e-9 * scale_s {
            return Err(CoreError::InvalidParams(format!(
                "center is off the divisor curve: |s(x0) - y0| = {:.3e}",
                s0.norm()
            )));
        }
        if self.ky < 1 + self.kx {
            return Err(CoreError::OrderBudget(format!(
                "y-order {} too small for a curve division at x-order {}",
                self.ky, self.kx
            )));
        }
        let out_ky = self.ky - self.kx - 1;
        let mut out = Self::zero((self.x0, self.y0), self.kx, self.ky - 1);
        // Valid height shrinks by one per x-order; fill what is exact.
        for a in 0..=self.kx {
            for b in (1..=self.ky - a).rev() {
                let mut acc = self.coeff(a, b);
                for r in 1..=a.min(s.kx) {
                    acc += s.coeff(r, 0) * out.coeff(a - r, b);
                }
                *out.at_mut(a, b - 1) = acc;
            }
        }
        // Divisibility check along b = 0.
        let scale = self.max_abs();
        if scale > 0.0 {
            let mut worst = 0.0f64;
            for a in 0..=self.kx {
                let mut acc = self.coeff(a, 0);
                for r in 1..=a.min(s.kx) {
                    acc += s.coeff(r, 0) * out.coeff(a - r, 0);
                }
                worst = worst.max(acc.norm());
            }
            let residual = worst / scale;
            if residual > EPS_CANCEL {
                return Err(CoreError::CancellationFailed { residual });
            }
        }
        out.truncated(self.kx, out_ky)
    }

    /// Substitutes `y = g(x)` where `g` is a univariate jet in `x` (ky = 0)
    /// at the same `x0` with `g(x0) = y0`; returns a univariate jet in `x`.
    pub fn compose_y(&self, g: &Self) -> Result<Self, CoreError> {
        if g.ky != 0 {
            return Err(CoreError::InvalidParams(
                "substitution jet must be univariate in x".into(),
            ));
        }
        if self.x0 != g.x0 {
            return Err(self.center_err(g));
        }
        let mismatch = (g.coeff(0, 0) - self.y0).norm();
        if mismatch > 1e-9 * (1.0 + self.y0.norm()) {
            return Err(CoreError::InvalidParams(format!(
                "substitution does not pass through the center: |g(x0) - y0| = {mismatch:.3e}"
            )));
        }
        // The output order is set by the substitution jet: even an
        // x-constant f picks up x-dependence through g. Exactness at that
        // order also needs ky >= g.kx when f has fewer x-orders than g.
        let out_kx = g.kx;
        let center = (self.x0, self.y0);
        // shifted = g - y0, valuation >= 1.
        let mut shifted = g.clone();
        shifted.c[0] = C64::new(0.0, 0.0);
        // Horner over the y-slices.
        let mut acc = TaylorJet2::zero(center, out_kx, 0);
        for j in (0..=self.ky).rev() {
            let mut slice = TaylorJet2::zero(center, out_kx, 0);
            for i in 0..=out_kx.min(self.kx) {
                *slice.at_mut(i, 0) = self.coeff(i, j);
            }
            acc = acc.mul(&shifted)?.add(&slice)?;
        }
        Ok(acc)
    }

    /// Extracts the restriction to `x = x0` as a jet with kx = 0.
    pub fn x_slice0(&self) -> Self {
        let mut out = Self::zero((self.x0, self.y0), 0, self.ky);
        for j in 0..=self.ky {
            *out.at_mut(0, j) = self.coeff(0, j);
        }
        out
    }

    /// Relabels the y-coordinate of the center. Only meaningful for jets
    /// with no y-dependence (ky = 0), where the y-center is arbitrary.
    pub fn with_center_y(&self, y0: C64) -> Result<Self, CoreError> {
        if self.ky != 0 {
            return Err(CoreError::InvalidParams(
                "cannot relabel the y-center of a y-dependent jet".into(),
            ));
        }
        let mut out = self.clone();
        out.y0 = y0;
        Ok(out)
    }

    /// Relabels the x-coordinate of the center (kx = 0 only).
    pub fn with_center_x(&self, x0: C64) -> Result<Self, CoreError> {
        if self.kx != 0 {
            return Err(CoreError::InvalidParams(
                "cannot relabel the x-center of an x-dependent jet".into(),
            ));
        }
        let mut out = self.clone();
        out.x0 = x0;
        Ok(out)
    }

    /// Re-embeds into a larger rectangle, zero-filling the new coefficients.
    /// Valid only when the function is constant along the padded axis
    /// (e.g. a univariate jet viewed as a bivariate one).
    pub fn broadcast(&self, kx: usize, ky: usize) -> Result<Self, CoreError> {
        if kx < self.kx || ky < self.ky {
            return Err(CoreError::OrderOverflow(kx, ky, self.kx, self.ky));
        }
        let mut out = Self::zero((self.x0, self.y0), kx, ky);
        for i in 0..=self.kx {
            for j in 0..=self.ky {
                *out.at_mut(i, j) = self.coeff(i, j);
            }
        }
        Ok(out)
    }

    /// Evaluates the jet at a point (offsets taken from the center).
    pub fn eval(&self, x: C64, y: C64) -> C64 {
        let u = x - self.x0;
        let v = y - self.y0;
        let mut acc = C64::new(0.0, 0.0);
        for i in (0..=self.kx).rev() {
            let mut row = C64::new(0.0, 0.0);
            for j in (0..=self.ky).rev() {
                row = row * v + self.coeff(i, j);
            }
            acc = acc * u + row;
        }
        acc
    }

    /// Mixed derivative `d^dx d^dy f (x0, y0) = dx! dy! c[dx][dy]`.
    pub fn deriv(&self, dx: usize, dy: usize) -> Result<C64, CoreError> {
        if dx > self.kx || dy > self.ky {
            return Err(CoreError::OrderOverflow(dx, dy, self.kx, self.ky));
        }
        let mut fact = 1.0f64;
        for m in 2..=dx {
            fact *= m as f64;
        }
        for m in 2..=dy {
            fact *= m as f64;
        }
        Ok(self.coeff(dx, dy) * fact)
    }

    /// Largest imaginary part relative to the largest coefficient; small for
    /// jets of real-analytic functions at real centers.
    pub fn relative_imag(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        self.c.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale
    }
}
