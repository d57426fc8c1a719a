//! Algebraic objects attached to the functional equations: the polynomial
//! families, kernel roots in each variable, branch points of the
//! discriminant, and the contour traced by the in-disk y-root on the slit.
//!
//! The kernel is `H(x, y) = D(x) R(x, y) - tau*gamma*x*y`, cubic in `x` and
//! quadratic in `y`. `G`, `G10`, `G00` are the p-free combinations driving
//! the power-series recursion; `G10` and `G00` carry a `1/x` term, so their
//! x-cleared polynomial forms `XG10`, `XG00` are provided for expansions
//! centered at `x = 0`.

use crate::error::CoreError;
use crate::jets::TaylorJet2;
use crate::model::{self, ModelParams};
use crate::roots;
use crate::C64;

/// Scalar-or-jet value for kernel evaluation.
#[derive(Debug, Clone)]
pub enum KVal {
    Scalar(C64),
    Jet(TaylorJet2),
}

impl KVal {
    pub fn scalar(self) -> Option<C64> {
        match self {
            KVal::Scalar(z) => Some(z),
            KVal::Jet(_) => None,
        }
    }

    pub fn jet(self) -> Option<TaylorJet2> {
        match self {
            KVal::Scalar(_) => None,
            KVal::Jet(j) => Some(j),
        }
    }
}

/// Ring interface shared by complex scalars and jets, so each kernel
/// polynomial is written exactly once.
trait Ring: Sized + Clone {
    fn radd(&self, o: &Self) -> Result<Self, CoreError>;
    fn rsub(&self, o: &Self) -> Result<Self, CoreError>;
    fn rmul(&self, o: &Self) -> Result<Self, CoreError>;
    fn rscale(&self, f: f64) -> Self;
    /// A constant with the same shape (center/orders) as `self`.
    fn rconst(&self, v: f64) -> Self;
}

impl Ring for C64 {
    fn radd(&self, o: &Self) -> Result<Self, CoreError> {
        Ok(self + o)
    }
    fn rsub(&self, o: &Self) -> Result<Self, CoreError> {
        Ok(self - o)
    }
    fn rmul(&self, o: &Self) -> Result<Self, CoreError> {
        Ok(self * o)
    }
    fn rscale(&self, f: f64) -> Self {
        self * f
    }
    fn rconst(&self, v: f64) -> Self {
        C64::new(v, 0.0)
    }
}

impl Ring for TaylorJet2 {
    fn radd(&self, o: &Self) -> Result<Self, CoreError> {
        self.add(o)
    }
    fn rsub(&self, o: &Self) -> Result<Self, CoreError> {
        self.sub(o)
    }
    fn rmul(&self, o: &Self) -> Result<Self, CoreError> {
        self.mul(o)
    }
    fn rscale(&self, f: f64) -> Self {
        self.scale(C64::new(f, 0.0))
    }
    fn rconst(&self, v: f64) -> Self {
        let (kx, ky) = self.orders();
        TaylorJet2::constant(C64::new(v, 0.0), self.center(), kx, ky)
    }
}

/// Named kernel polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFn {
    D,
    R,
    A,
    B,
    C,
    F,
    H,
    G,
    G10,
    G00,
    XG10,
    XG00,
}

/// Parameter-bound evaluator family, callable on scalars and jets.
#[derive(Debug, Clone)]
pub struct KernelFunctions {
    pub params: ModelParams,
}

impl KernelFunctions {
    pub fn new(params: ModelParams) -> Self {
        Self { params }
    }

    fn d_poly<T: Ring>(&self, x: &T) -> Result<T, CoreError> {
        // D(x) = lambda1 (1 - x) + tau
        let p = &self.params;
        x.rscale(-p.lambda1).radd(&x.rconst(p.lambda1 + p.tau))
    }

    fn r_poly<T: Ring>(&self, x: &T, y: &T) -> Result<T, CoreError> {
        // R = xy (lambda0 (1-x) + gamma) + nu1 p y (x - y) + nu2 (1-p) x (y - 1)
        let p = &self.params;
        let one = x.rconst(1.0);
        let xy = x.rmul(y)?;
        let t1 = xy.rmul(&one.rsub(x)?.rscale(p.lambda0).radd(&x.rconst(p.gamma))?)?;
        let t2 = y.rmul(&x.rsub(y)?)?.rscale(p.nu1 * p.p);
        let t3 = x.rmul(&y.rsub(&one)?)?.rscale(p.nu2 * (1.0 - p.p));
        t1.radd(&t2)?.radd(&t3)
    }

    fn f_common<T: Ring>(&self, x: &T, y: &T) -> Result<T, CoreError> {
        // F = nu2 x (y - 1) + nu1 y (y - x); A = (1-p) F, B = -p F
        let p = &self.params;
        let one = x.rconst(1.0);
        let t1 = x.rmul(&y.rsub(&one)?)?.rscale(p.nu2);
        let t2 = y.rmul(&y.rsub(x)?)?.rscale(p.nu1);
        t1.radd(&t2)
    }

    fn c_poly<T: Ring>(&self, x: &T, y: &T) -> Result<T, CoreError> {
        // C = nu1 (1-p) y (x - y) + nu2 p x (y - 1)
        let p = &self.params;
        let one = x.rconst(1.0);
        let t1 = y.rmul(&x.rsub(y)?)?.rscale(p.nu1 * (1.0 - p.p));
        let t2 = x.rmul(&y.rsub(&one)?)?.rscale(p.nu2 * p.p);
        t1.radd(&t2)
    }

    fn h_poly<T: Ring>(&self, x: &T, y: &T) -> Result<T, CoreError> {
        // H = D R - tau gamma x y
        let p = &self.params;
        let dr = self.d_poly(x)?.rmul(&self.r_poly(x, y)?)?;
        dr.rsub(&x.rmul(y)?.rscale(p.tau * p.gamma))
    }

    fn g_poly<T: Ring>(&self, x: &T, y: &T) -> Result<T, CoreError> {
        // G = D [lambda0 y (1-x) + nu2 (y-1)] + lambda1 gamma y (1-x)
        let p = &self.params;
        let one = x.rconst(1.0);
        let omx = one.rsub(x)?;
        let inner = y
            .rmul(&omx)?
            .rscale(p.lambda0)
            .radd(&y.rsub(&one)?.rscale(p.nu2))?;
        let t2 = y.rmul(&omx)?.rscale(p.lambda1 * p.gamma);
        self.d_poly(x)?.rmul(&inner)?.radd(&t2)
    }

    /// Coefficient of `y` in `G`: `G = g1(x) y - nu2 D(x)`.
    fn g1_poly<T: Ring>(&self, x: &T) -> Result<T, CoreError> {
        let p = &self.params;
        let one = x.rconst(1.0);
        let omx = one.rsub(x)?;
        let d = self.d_poly(x)?;
        d.rmul(&omx.rscale(p.lambda0).radd(&x.rconst(p.nu2))?)?
            .radd(&omx.rscale(p.lambda1 * p.gamma))
    }

    fn xg10_poly<T: Ring>(&self, x: &T, y: &T) -> Result<T, CoreError> {
        // x G10 = D [nu2 x (y-1) - nu1 y (x - y)]
        let p = &self.params;
        let one = x.rconst(1.0);
        let t1 = x.rmul(&y.rsub(&one)?)?.rscale(p.nu2);
        let t2 = y.rmul(&x.rsub(y)?)?.rscale(p.nu1);
        self.d_poly(x)?.rmul(&t1.rsub(&t2)?)
    }

    fn xg00_poly<T: Ring>(&self, x: &T, y: &T) -> Result<T, CoreError> {
        // x G00 = D nu1 y (x - y)
        let p = &self.params;
        Ok(self
            .d_poly(x)?
            .rmul(&y.rmul(&x.rsub(y)?)?)?
            .rscale(p.nu1))
    }

    fn eval_generic<T: Ring>(&self, f: KernelFn, x: &T, y: &T) -> Result<T, CoreError> {
        let p = &self.params;
        match f {
            KernelFn::D => self.d_poly(x),
            KernelFn::R => self.r_poly(x, y),
            KernelFn::A => Ok(self.f_common(x, y)?.rscale(1.0 - p.p)),
            KernelFn::B => Ok(self.f_common(x, y)?.rscale(-p.p)),
            KernelFn::C => self.c_poly(x, y),
            KernelFn::F => self.f_common(x, y),
            KernelFn::H => self.h_poly(x, y),
            KernelFn::G => self.g_poly(x, y),
            KernelFn::XG10 => self.xg10_poly(x, y),
            KernelFn::XG00 => self.xg00_poly(x, y),
            KernelFn::G10 | KernelFn::G00 => Err(CoreError::InvalidParams(
                "G10/G00 carry a 1/x term; evaluate scalars via eval_scalar or use XG10/XG00".into(),
            )),
        }
    }

    /// Scalar evaluation of any family member; `G10`/`G00` fail at `x = 0`.
    pub fn eval_scalar(&self, f: KernelFn, x: C64, y: C64) -> Result<C64, CoreError> {
        match f {
            KernelFn::G10 | KernelFn::G00 => {
                if x.norm() < 1e-13 {
                    return Err(CoreError::NearSingular(
                        "G10/G00 have a 1/x pole at x = 0; use XG10/XG00".into(),
                    ));
                }
                let cleared = if f == KernelFn::G10 {
                    self.xg10_poly(&x, &y)?
                } else {
                    self.xg00_poly(&x, &y)?
                };
                Ok(cleared / x)
            }
            _ => self.eval_generic(f, &x, &y),
        }
    }

    /// Jet evaluation; arguments must share a center.
    pub fn eval_jet(
        &self,
        f: KernelFn,
        x: &TaylorJet2,
        y: &TaylorJet2,
    ) -> Result<TaylorJet2, CoreError> {
        self.eval_generic(f, x, y)
    }

    /// Mixed-mode dispatch for the scalar-or-jet interface.
    pub fn eval(&self, f: KernelFn, x: &KVal, y: &KVal) -> Result<KVal, CoreError> {
        match (x, y) {
            (KVal::Scalar(a), KVal::Scalar(b)) => Ok(KVal::Scalar(self.eval_scalar(f, *a, *b)?)),
            (KVal::Jet(a), KVal::Jet(b)) => Ok(KVal::Jet(self.eval_jet(f, a, b)?)),
            _ => Err(CoreError::InvalidParams(
                "kernel evaluation needs two scalars or two jets".into(),
            )),
        }
    }

    /// The unique zero in `y` of `G(x, y)`: `nu2 D / g1`.
    pub fn y_tilde_scalar(&self, x: C64) -> Result<C64, CoreError> {
        let num = self.d_poly(&x)?.rscale(self.params.nu2);
        let den = self.g1_poly(&x)?;
        if den.norm() < 1e-13 * (1.0 + num.norm()) {
            return Err(CoreError::NearSingular(format!(
                "pole of the y-root map at x = {x}"
            )));
        }
        Ok(num / den)
    }

    /// Univariate jet of the y-root map at `center.0`, with order `kx`.
    pub fn y_tilde_jet(&self, center: (C64, C64), kx: usize) -> Result<TaylorJet2, CoreError> {
        let xj = TaylorJet2::var_x(center, kx, 0);
        let num = self.d_poly(&xj)?.rscale(self.params.nu2);
        let den = self.g1_poly(&xj)?;
        num.div(&den)
    }

    /// `g1(x)` as a jet (the y-coefficient of `G`).
    pub fn g1_jet(&self, center: (C64, C64), kx: usize, ky: usize) -> Result<TaylorJet2, CoreError> {
        let xj = TaylorJet2::var_x(center, kx, ky);
        self.g1_poly(&xj)
    }

    /// Scalar `g1(x)`.
    pub fn g1_scalar(&self, x: C64) -> Result<C64, CoreError> {
        self.g1_poly(&x)
    }
}

/// `y_tilde` on a scalar or jet argument.
pub fn y_tilde(kf: &KernelFunctions, x: &KVal) -> Result<KVal, CoreError> {
    match x {
        KVal::Scalar(z) => Ok(KVal::Scalar(kf.y_tilde_scalar(*z)?)),
        KVal::Jet(j) => {
            let num = kf.d_poly(j)?.rscale(kf.params.nu2);
            let den = kf.g1_poly(j)?;
            Ok(KVal::Jet(num.div(&den)?))
        }
    }
}

/// `x = s(y) = nu1 y^2 / (nu1 y + nu2 (1 - y))`, the joint zero of A and B
/// (the denominator is forced by solving `A(x, y) = 0` for `x`; it fixes
/// `s(1) = 1`).
pub fn s_of_y(y: C64, params: &ModelParams) -> Result<C64, CoreError> {
    let den = params.nu1 * y + params.nu2 * (C64::new(1.0, 0.0) - y);
    if den.norm() < 1e-13 {
        return Err(CoreError::NearSingular(format!("pole of s(y) at y = {y}")));
    }
    Ok(params.nu1 * y * y / den)
}

/// Cubic (in `x`) whose unique in-disk root drives the `p = 1` solution:
/// `D(x)(lambda0 x (1-x) + nu1 (x - y)) + lambda1 gamma x (1-x) = 0`.
pub fn p1_cubic_coeffs(y: C64, params: &ModelParams) -> Vec<C64> {
    let (l0, l1, n1, g, t) = (
        params.lambda0,
        params.lambda1,
        params.nu1,
        params.gamma,
        params.tau,
    );
    let d0 = l1 + t;
    // (d0 - l1 x)(l0 x - l0 x^2 + n1 x - n1 y) + l1 g (x - x^2)
    let c3 = C64::new(l1 * l0, 0.0);
    let c2 = C64::new(-d0 * l0 - l1 * (l0 + n1) - l1 * g, 0.0);
    let c1 = C64::new(d0 * (l0 + n1) + l1 * g, 0.0) + C64::new(l1 * n1, 0.0) * y;
    let c0 = -C64::new(d0 * n1, 0.0) * y;
    vec![c0, c1, c2, c3]
}

/// Unique root of the `p = 1` cubic inside the unit circle, for `|y| <= 1`.
/// Uniqueness is verified by counting in-disk roots; a winding-number count
/// over the polynomial cross-checks on demand.
pub fn u_of_y(y: C64, params: &ModelParams) -> Result<C64, CoreError> {
    let coeffs = p1_cubic_coeffs(y, params);
    let all = roots::poly_roots(&coeffs)?;
    let tol = 1e-9;
    let inside: Vec<C64> = all.iter().copied().filter(|r| r.norm() <= 1.0 + tol).collect();
    match inside.len() {
        1 => Ok(inside[0]),
        n => Err(CoreError::RootSelection(format!(
            "expected a unique in-disk root, found {n} (roots: {all:?})"
        ))),
    }
}

/// Kernel as a quadratic in `y`: coefficients `(a(x), b(x), c(x))` of
/// `a y^2 + b y + c = H(x, y)`.
pub fn y_quadratic_coeffs(x: C64, params: &ModelParams) -> (C64, C64, C64) {
    let p = params;
    let d = p.lambda1 * (C64::new(1.0, 0.0) - x) + p.tau;
    let e = p.lambda0 * (C64::new(1.0, 0.0) - x)
        + p.gamma
        + p.p * p.nu1
        + (1.0 - p.p) * p.nu2;
    let a = -p.nu1 * p.p * d;
    let b = x * (d * e - p.tau * p.gamma);
    let c = -p.nu2 * (1.0 - p.p) * x * d;
    (a, b, c)
}

/// Both y-roots of the kernel at `x`, ordered by modulus (the first is the
/// principal, in-disk branch; on the slit the conjugate pair is ordered with
/// the upper-edge root first).
pub fn y_roots(x: C64, params: &ModelParams) -> Result<(C64, C64), CoreError> {
    if params.p <= 0.0 || params.p >= 1.0 {
        return Err(CoreError::InvalidParams(
            "kernel y-roots need 0 < p < 1 (the quadratic degenerates otherwise)".into(),
        ));
    }
    let (a, b, c) = y_quadratic_coeffs(x, params);
    let (r1, r2) = roots::quadratic_roots(a, b, c);
    let modulus_gap = (r1.norm() - r2.norm()).abs();
    if modulus_gap <= 1e-9 * (1.0 + r1.norm()) {
        // Conjugate pair on the slit: upper edge first.
        if r1.im >= r2.im {
            Ok((r1, r2))
        } else {
            Ok((r2, r1))
        }
    } else if r1.norm() < r2.norm() {
        Ok((r1, r2))
    } else {
        Ok((r2, r1))
    }
}

/// In-disk y-root with the uniqueness check that holds on `|x| = 1`.
pub fn y0_root_checked(x: C64, params: &ModelParams) -> Result<C64, CoreError> {
    let (y0, y1) = y_roots(x, params)?;
    let tol = 1e-9;
    let inside = [y0, y1]
        .iter()
        .filter(|r| r.norm() <= 1.0 + tol)
        .count();
    if inside != 1 {
        return Err(CoreError::RootSelection(format!(
            "expected exactly one in-disk y-root at x = {x}, found {inside}"
        )));
    }
    Ok(if y0.norm() <= 1.0 + tol { y0 } else { y1 })
}

/// Kernel as a cubic in `x` for fixed `y`: ascending coefficients.
/// Degree drops below 3 when `lambda0 * lambda1 = 0`.
pub fn x_cubic_coeffs(y: C64, params: &ModelParams) -> Vec<C64> {
    let p = params;
    let (l0, l1, n1, n2, g, t) = (p.lambda0, p.lambda1, p.nu1, p.nu2, p.gamma, p.tau);
    let d0 = l1 + t;
    let r1 = y * (l0 + g + n1 * p.p) + n2 * (1.0 - p.p) * (y - 1.0);
    let c3 = C64::new(l1 * l0, 0.0) * y;
    let c2 = -d0 * l0 * y - l1 * r1;
    let c1 = d0 * r1 + l1 * n1 * p.p * y * y - t * g * y;
    let c0 = -d0 * n1 * p.p * y * y;
    vec![c0, c1, c2, c3]
}

/// All x-roots of the kernel at `y`, sorted by modulus.
pub fn x_roots(y: C64, params: &ModelParams) -> Result<Vec<C64>, CoreError> {
    roots::poly_roots(&x_cubic_coeffs(y, params))
}

/// In-disk x-root with the uniqueness check that holds on `|y| = 1`.
pub fn x0_root_checked(y: C64, params: &ModelParams) -> Result<C64, CoreError> {
    let all = x_roots(y, params)?;
    let tol = 1e-9;
    let inside: Vec<C64> = all.iter().copied().filter(|r| r.norm() <= 1.0 + tol).collect();
    if inside.len() != 1 {
        return Err(CoreError::RootSelection(format!(
            "expected exactly one in-disk x-root at y = {y}, found {}",
            inside.len()
        )));
    }
    Ok(inside[0])
}

// ---------------------------------------------------------------------------
// Branch points and the contour.
// ---------------------------------------------------------------------------

/// Real-coefficient polynomial helpers (ascending order).
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &ai) in a.iter().enumerate() {
        out[i] += ai;
    }
    for (i, &bi) in b.iter().enumerate() {
        out[i] += bi;
    }
    out
}

fn poly_scale(a: &[f64], f: f64) -> Vec<f64> {
    a.iter().map(|v| v * f).collect()
}

fn poly_eval_real(a: &[f64], x: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Discriminant data of the kernel viewed as a quadratic in `y`.
///
/// `delta(x) = b(x)^2 - 4 a(x) c(x) = x (f(x) + g(x))` with
/// `f = D^2 [x (lambda0(1-x) + p nu1 + (1-p) nu2)^2 - 4 p (1-p) nu1 nu2]` and
/// `g = x w (w + 2 D (lambda0(1-x) + p nu1 + (1-p) nu2))`, `w = lambda1 gamma (1-x)`.
/// The form of `f` is forced by consistency: at `x = 1` the y-roots are `1`
/// and `(1-p) nu2 / (p nu1)`, so `delta(1) = tau^2 (p nu1 - (1-p) nu2)^2`.
#[derive(Debug, Clone)]
pub struct BranchData {
    /// First in-disk branch point (always 0: `delta` carries an `x` factor).
    pub x1: f64,
    /// Second in-disk branch point, in (0, 1).
    pub x2: f64,
    /// Ascending coefficients of `delta(x)`, degree 6.
    pub delta_poly: Vec<f64>,
    /// Ascending coefficients of the `f` part.
    pub f_poly: Vec<f64>,
    /// Ascending coefficients of the `g` part.
    pub g_poly: Vec<f64>,
    /// Roots of the auxiliary quadratic factor of `g` (both above 1);
    /// absent when `lambda0 * lambda1 = 0` degenerates the factor.
    pub aux_roots: Option<(f64, f64)>,
}

impl BranchData {
    pub fn delta_at(&self, x: f64) -> f64 {
        poly_eval_real(&self.delta_poly, x)
    }
}

/// Locates the branch points `x1 = 0 < x2 < 1` of the two-valued y-root.
///
/// `x2` is pinned by sign-change bisection of `f + g` on (0, 1) -- the full
/// degree-6 polynomial has six roots, so a global solve alone is ambiguous --
/// and `delta < 0` is verified on an interior sample grid.
pub fn branch_points(params: &ModelParams) -> Result<BranchData, CoreError> {
    params.validate()?;
    if params.p <= 0.0 || params.p >= 1.0 {
        return Err(CoreError::InvalidParams(
            "branch points need 0 < p < 1".into(),
        ));
    }
    let (stable, _) = model::stability_check(params);
    if !stable {
        return Err(CoreError::Unstable {
            margin: model::load_profile(params).margin,
        });
    }
    let p = params;
    let s = p.p * p.nu1 + (1.0 - p.p) * p.nu2;
    let prod4 = 4.0 * p.p * (1.0 - p.p) * p.nu1 * p.nu2;

    // Building blocks as ascending-coefficient polynomials in x.
    let d = vec![p.lambda1 + p.tau, -p.lambda1]; // D
    let e_m_g = vec![p.lambda0 + s, -p.lambda0]; // lambda0 (1-x) + s
    let w = vec![p.lambda1 * p.gamma, -p.lambda1 * p.gamma]; // lambda1 gamma (1-x)
    let d2 = poly_mul(&d, &d);

    // f = D^2 [x (E - gamma)^2 - 4 p (1-p) nu1 nu2]
    let x_emg2 = {
        let sq = poly_mul(&e_m_g, &e_m_g);
        let mut shifted = vec![0.0];
        shifted.extend_from_slice(&sq);
        shifted
    };
    let f_poly = poly_mul(&d2, &poly_add(&x_emg2, &[-prod4]));

    // g = x w (w + 2 D (E - gamma))
    let inner = poly_add(&w, &poly_scale(&poly_mul(&d, &e_m_g), 2.0));
    let g_core = poly_mul(&w, &inner);
    let mut g_poly = vec![0.0];
    g_poly.extend_from_slice(&g_core);

    let fg = poly_add(&f_poly, &g_poly);
    let mut delta_poly = vec![0.0];
    delta_poly.extend_from_slice(&fg);

    // Sign-change scan for the unique root of f + g in (0, 1).
    let q = |x: f64| poly_eval_real(&fg, x);
    let grid = 4096;
    let mut bracket = None;
    let mut sign_changes = 0;
    let mut prev_x = 1e-9;
    let mut prev_q = q(prev_x);
    for i in 1..=grid {
        let x = 1e-9 + (1.0 - 2e-9) * i as f64 / grid as f64;
        let qx = q(x);
        if prev_q.signum() != qx.signum() {
            sign_changes += 1;
            if bracket.is_none() {
                bracket = Some((prev_x, x));
            }
        }
        prev_x = x;
        prev_q = qx;
    }
    if sign_changes != 1 {
        return Err(CoreError::ContourFailure(format!(
            "expected one root of f + g in (0, 1), found {sign_changes} sign changes; \
             coefficients: {fg:?}"
        )));
    }
    let (lo, hi) = bracket.unwrap();
    let x2 = roots::bisect(&q, lo, hi)?;

    // delta must be negative strictly inside (0, x2).
    for i in 1..64 {
        let x = x2 * i as f64 / 64.0;
        let v = poly_eval_real(&delta_poly, x);
        if v >= 0.0 {
            return Err(CoreError::ContourFailure(format!(
                "discriminant is non-negative ({v:.3e}) at interior x = {x}"
            )));
        }
    }

    // Auxiliary quadratic factor of g: 2 l0 l1 x^2 - [2 l0 (2 l1 + tau) +
    // l1 (gamma + 2 s)] x + 2 (tau + l1)(l0 + s) + l1 gamma.
    let aux_roots = if p.lambda0 * p.lambda1 > 0.0 {
        let a2 = 2.0 * p.lambda0 * p.lambda1;
        let a1 = -(2.0 * p.lambda0 * (2.0 * p.lambda1 + p.tau)
            + p.lambda1 * (p.gamma + 2.0 * s));
        let a0 = 2.0 * (p.tau + p.lambda1) * (p.lambda0 + s) + p.lambda1 * p.gamma;
        let disc = a1 * a1 - 4.0 * a2 * a0;
        if disc >= 0.0 {
            let r1 = (-a1 - disc.sqrt()) / (2.0 * a2);
            let r2 = (-a1 + disc.sqrt()) / (2.0 * a2);
            Some((r1.min(r2), r1.max(r2)))
        } else {
            None
        }
    } else {
        None
    };

    Ok(BranchData {
        x1: 0.0,
        x2,
        delta_poly,
        f_poly,
        g_poly,
        aux_roots,
    })
}

/// Closed contour traced by the in-disk y-root as `x` runs along the slit
/// `[0, x2]` (upper edge out, lower edge back).
#[derive(Debug, Clone)]
pub struct ContourL {
    /// Requested sample count; `points.len() == n + 1` with the closure point.
    pub n: usize,
    /// Closed traversal: upper edge from `y(0) = 0` to `y(x2)`, then back
    /// along the conjugates, ending at the start point.
    pub points: Vec<C64>,
    /// Slit pre-image of each sample.
    pub x_of_point: Vec<f64>,
    /// Uniform angles of the polar form about `center`.
    pub phis: Vec<f64>,
    /// Radii about `center` at `phis`.
    pub rho: Vec<f64>,
    /// Interior point used as the polar center (the curve passes through 0,
    /// so the polar form is taken about the midpoint of the real diameter).
    pub center: f64,
    /// `(1 - p) nu2 / (p nu1)`: `|y|^2 = k x` on the contour.
    pub k_ratio: f64,
    /// Rightmost (real) contour point `y(x2)`.
    pub y_max: f64,
}

/// Geometry shared by the contour and the conformal-map construction.
#[derive(Debug, Clone)]
pub struct ContourGeometry {
    pub params: ModelParams,
    pub branch: BranchData,
    pub k_ratio: f64,
    pub y2: f64,
    /// Polar center on the real axis (midpoint of the real diameter [0, y2]).
    pub d: f64,
}

impl ContourGeometry {
    pub fn new(params: &ModelParams) -> Result<Self, CoreError> {
        let branch = branch_points(params)?;
        let k_ratio = (1.0 - params.p) * params.nu2 / (params.p * params.nu1);
        // Double root of the quadratic at x2: y = -b / (2a), real.
        let (a, b, _) = y_quadratic_coeffs(C64::new(branch.x2, 0.0), params);
        let y2 = (-b / (2.0 * a)).re;
        let modulus_sq = k_ratio * branch.x2;
        if (y2 * y2 - modulus_sq).abs() > 1e-8 * (1.0 + modulus_sq) {
            return Err(CoreError::ContourFailure(format!(
                "double-root location {y2} violates the modulus relation {}",
                modulus_sq.sqrt()
            )));
        }
        // The real part of the conjugate pair must grow monotonically along
        // the slit for the radial parametrization to be single-valued.
        let geom = Self {
            params: *params,
            branch,
            k_ratio,
            y2,
            d: 0.5 * y2,
        };
        let mut prev = 0.0;
        for i in 1..=128 {
            let x = geom.branch.x2 * i as f64 / 128.0;
            let re = geom.re_part(x);
            if re <= prev {
                return Err(CoreError::ContourFailure(format!(
                    "contour real part is not monotone on the slit at x = {x}"
                )));
            }
            prev = re;
        }
        Ok(geom)
    }

    /// Real part of the conjugate y-root pair over the slit: `-b(x) / 2a(x)`.
    pub fn re_part(&self, x: f64) -> f64 {
        let (a, b, _) = y_quadratic_coeffs(C64::new(x, 0.0), &self.params);
        (-b / (2.0 * a)).re
    }

    /// Upper-edge contour point for slit coordinate `x`.
    pub fn upper_point(&self, x: f64) -> C64 {
        let re = self.re_part(x);
        let mod_sq = self.k_ratio * x;
        let im_sq = (mod_sq - re * re).max(0.0);
        C64::new(re, im_sq.sqrt())
    }

    /// `|y|^2` on the contour as a function of `Re(y)`, via slit inversion.
    pub fn m_of_re(&self, r: f64) -> Result<f64, CoreError> {
        if r < -1e-12 || r > self.y2 * (1.0 + 1e-12) {
            return Err(CoreError::ContourFailure(format!(
                "Re(y) = {r} outside the contour range [0, {}]",
                self.y2
            )));
        }
        let r = r.clamp(0.0, self.y2);
        let target = |x: f64| self.re_part(x) - r;
        let x = roots::bisect(&target, 0.0, self.branch.x2)?;
        Ok(self.k_ratio * x)
    }

    /// Radius about the polar center `d` at angle `phi`, solving
    /// `|d + rho e^{i phi}|^2 = m(Re(d + rho e^{i phi}))` on the ray.
    pub fn rho_at_angle(&self, phi: f64) -> Result<f64, CoreError> {
        let (cos_phi, sin_phi) = (phi.cos(), phi.sin());
        let d = self.d;
        let h = |rho: f64| -> f64 {
            let re = d + rho * cos_phi;
            let mod_sq = (re * re + rho * rho * sin_phi * sin_phi).max(0.0);
            match self.m_of_re(re) {
                Ok(m) => mod_sq - m,
                // Outside the horizontal extent of the egg: definitely outside.
                Err(_) => 1.0 + mod_sq,
            }
        };
        // The center is interior (h(0) < 0); the curve is crossed once
        // along each ray for a star-shaped contour.
        let rho_hi = 2.0 * self.y2;
        if h(0.0) >= 0.0 {
            return Err(CoreError::ContourFailure(
                "polar center is not interior to the contour".into(),
            ));
        }
        // Scan for the first sign change, then bisect; multiple crossings
        // mean the contour is not star-shaped about d.
        let scan = 64;
        let mut lo = 0.0;
        let mut hi = rho_hi;
        let mut found = false;
        let mut crossings = 0;
        let mut prev = h(0.0);
        for i in 1..=scan {
            let rho = rho_hi * i as f64 / scan as f64;
            let v = h(rho);
            if prev < 0.0 && v >= 0.0 {
                crossings += 1;
                if !found {
                    lo = rho_hi * (i - 1) as f64 / scan as f64;
                    hi = rho;
                    found = true;
                }
            }
            prev = v;
        }
        if !found {
            return Err(CoreError::ContourFailure(format!(
                "no contour crossing along the ray at phi = {phi}"
            )));
        }
        if crossings > 1 {
            return Err(CoreError::ContourFailure(format!(
                "contour is not star-shaped about its polar center (phi = {phi})"
            )));
        }
        roots::bisect(&|rho| h(rho), lo, hi)
    }
}

/// Builds the discretized contour: `n/2 + 1` Chebyshev-spaced slit samples
/// mapped through the upper edge, mirrored for the lower edge, closed at the
/// start, plus the polar form about the interior center.
pub fn contour_l(params: &ModelParams, n: usize) -> Result<ContourL, CoreError> {
    if n < 8 || n % 2 != 0 {
        return Err(CoreError::InvalidParams(
            "contour sample count must be even and at least 8".into(),
        ));
    }
    let geom = ContourGeometry::new(params)?;
    let half = n / 2;
    let mut points = Vec::with_capacity(n + 1);
    let mut x_of_point = Vec::with_capacity(n + 1);
    // Chebyshev-Lobatto spacing clusters near both slit ends.
    for j in 0..=half {
        let theta = std::f64::consts::PI * j as f64 / half as f64;
        let x = geom.branch.x2 * 0.5 * (1.0 - theta.cos());
        points.push(geom.upper_point(x));
        x_of_point.push(x);
    }
    for j in (1..half).rev() {
        let x = x_of_point[j];
        points.push(points[j].conj());
        x_of_point.push(x);
    }
    points.push(points[0]);
    x_of_point.push(x_of_point[0]);

    let mut phis = Vec::with_capacity(n);
    let mut rho = Vec::with_capacity(n);
    for k in 0..n {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        phis.push(phi);
        rho.push(geom.rho_at_angle(phi)?);
    }

    Ok(ContourL {
        n,
        points,
        x_of_point,
        phis,
        rho,
        center: geom.d,
        k_ratio: geom.k_ratio,
        y_max: geom.y2,
    })
}

impl ContourL {
    /// CSV dump: `phi, re_y, im_y, rho, x_preimage` per traversal sample,
    /// with `phi`/`rho` measured about the polar center.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phi,re_y,im_y,rho,x_preimage\n");
        for (point, x) in self.points.iter().zip(&self.x_of_point) {
            let shifted = point - C64::new(self.center, 0.0);
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                shifted.arg(),
                point.re,
                point.im,
                shifted.norm(),
                x
            ));
        }
        out
    }
}
