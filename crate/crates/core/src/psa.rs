//! Power-series expansion of the generating functions in the coupling
//! parameter `p`.
//!
//! The joint transforms expand as `Pi_j(x, y) = sum_m V_m^(j)(x, y) p^m`.
//! The order-m coefficient solves
//!
//! `V_m G = G10 [V_m(x, 0) + P_{m-1}] + G00 V_m(0, 0)`,
//!
//! where `P_{m-1}` collects the previous order's boundary combination.
//! Substituting the unique zero `y = Y~(x)` of `G` eliminates the left side
//! and yields `V_m(x, 0)`; back-substitution gives
//! `V_m = XG10 Q_{m-1} / (x G)` with
//! `Q_{m-1}(x,y) = V_{m-1}(x,y) - V_{m-1}(x,Y~(x)) - V_{m-1}(0,y) + V_{m-1}(0,Y~(x))`.
//!
//! All coefficient functions are evaluated as Taylor jets. The divisions by
//! `x` (for expansions centered at 0) and by the `y - Y~(x)` factor of `G`
//! (for centers on the zero curve) are removable-singularity divisions and
//! go through the verifying jet operations; every division failure is an
//! algebra error, not a numerical tolerance issue.
//!
//! Each curve division at x-order `kx` consumes `kx + 1` extra y-orders of
//! its numerator and the `x`-cancellation one x-order, so child jets are
//! requested with exactly that padding per level.

use crate::error::CoreError;
use crate::jets::TaylorJet2;
use crate::kernel::{KernelFn, KernelFunctions};
use crate::model::{self, ModelParams};
use crate::C64;
use std::cell::RefCell;
use std::collections::HashMap;

/// Hard ceiling on jet orders; recursion asking for more indicates a runaway
/// order budget.
const ORDER_CAP: usize = 160;

/// Default ceiling on the expansion order.
pub const M_MAX_DEFAULT: usize = 8;

/// Truncated means and the per-order derivative coefficients.
#[derive(Debug, Clone)]
pub struct PsaMetrics {
    pub m: usize,
    pub eq1: f64,
    pub eq2: f64,
    /// `d/dx V_m(x, 1) at x = 1`, orders 0..=m.
    pub vm1: Vec<f64>,
    /// `d/dy V_m(1, y) at y = 1`, orders 0..=m.
    pub vm2: Vec<f64>,
}

impl PsaMetrics {
    /// CSV row `p, M, EQ1, EQ2, v_m1_0..M, v_m2_0..M`.
    pub fn to_csv_row(&self, p: f64) -> String {
        let mut row = format!("{p},{},{:.12e},{:.12e}", self.m, self.eq1, self.eq2);
        for v in &self.vm1 {
            row.push_str(&format!(",{v:.12e}"));
        }
        for v in &self.vm2 {
            row.push_str(&format!(",{v:.12e}"));
        }
        row.push('\n');
        row
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("p,M,EQ1,EQ2");
        for m in 0..=self.m {
            h.push_str(&format!(",v_m1_{m}"));
        }
        for m in 0..=self.m {
            h.push_str(&format!(",v_m2_{m}"));
        }
        h.push('\n');
        h
    }
}

type MemoKey = (u32, [u64; 4]);

/// Evaluator for the expansion coefficients `V_m^(0)`, `V_m^(1)`.
///
/// Jets are memoized per `(order, center)`; the recursion revisits the
/// centers `(0, y0)` and `(x0, Y~(x0))` heavily, which turns the call tree
/// polynomial. Evaluation is deterministic; the cache is single-threaded
/// (`RefCell`), so share solvers across threads by constructing one each.
pub struct PsaSolver {
    pub params: ModelParams,
    kf: KernelFunctions,
    pi00: f64,
    pub m_max: usize,
    memo: RefCell<HashMap<MemoKey, Vec<TaylorJet2>>>,
}

fn center_key(center: (C64, C64)) -> [u64; 4] {
    [
        center.0.re.to_bits(),
        center.0.im.to_bits(),
        center.1.re.to_bits(),
        center.1.im.to_bits(),
    ]
}

impl PsaSolver {
    pub fn new(params: ModelParams) -> Result<Self, CoreError> {
        params.validate()?;
        let (stable, _) = model::stability_check(&params);
        if !stable {
            return Err(CoreError::Unstable {
                margin: model::load_profile(&params).margin,
            });
        }
        let pi00 = model::empty_probability(&params)?;
        Ok(Self {
            params,
            kf: KernelFunctions::new(params),
            pi00,
            m_max: M_MAX_DEFAULT,
            memo: RefCell::new(HashMap::new()),
        })
    }

    pub fn kernel(&self) -> &KernelFunctions {
        &self.kf
    }

    /// Jet of `V_0^(0)` at `center` with the requested orders.
    pub fn v0_jet(
        &self,
        center: (C64, C64),
        orders: (usize, usize),
    ) -> Result<TaylorJet2, CoreError> {
        self.vm_jet(0, center, orders)
    }

    /// Jet of `V_m^(0)` at `center` with the requested orders (memoized).
    pub fn vm_jet(
        &self,
        m: usize,
        center: (C64, C64),
        orders: (usize, usize),
    ) -> Result<TaylorJet2, CoreError> {
        if m > self.m_max {
            return Err(CoreError::OrderBudget(format!(
                "expansion order {m} above the configured ceiling {}",
                self.m_max
            )));
        }
        if orders.0 > ORDER_CAP || orders.1 > ORDER_CAP {
            return Err(CoreError::OrderBudget(format!(
                "jet orders {orders:?} exceed the cap {ORDER_CAP}; increase order budget"
            )));
        }
        let key = (m as u32, center_key(center));
        if let Some(found) = self.memo.borrow().get(&key).and_then(|jets| {
            jets.iter()
                .find(|j| j.orders().0 >= orders.0 && j.orders().1 >= orders.1)
                .cloned()
        }) {
            return found.truncated(orders.0, orders.1);
        }
        let jet = if m == 0 {
            self.build_v0(center, orders)?
        } else {
            self.build_vm(m, center, orders)?
        };
        let out = jet.truncated(orders.0, orders.1)?;
        self.memo.borrow_mut().entry(key).or_default().push(jet);
        Ok(out)
    }

    /// Jet of `V_m^(1) = gamma V_m^(0) / D(x)`.
    pub fn vm_state1_jet(
        &self,
        m: usize,
        center: (C64, C64),
        orders: (usize, usize),
    ) -> Result<TaylorJet2, CoreError> {
        let v = self.vm_jet(m, center, orders)?;
        let (kx, ky) = v.orders();
        let xj = TaylorJet2::var_x(center, kx, ky);
        let d = self.kf.eval_jet(KernelFn::D, &xj, &xj)?;
        v.scale(C64::new(self.params.gamma, 0.0)).div(&d)
    }

    fn tilde_scalar(&self, x0: C64) -> Result<C64, CoreError> {
        self.kf.y_tilde_scalar(x0)
    }

    fn is_zero_x(x0: C64) -> bool {
        x0.norm() < 1e-14
    }

    fn on_curve(&self, center: (C64, C64)) -> Result<bool, CoreError> {
        let yt = self.tilde_scalar(center.0)?;
        Ok((center.1 - yt).norm() <= 1e-11 * (1.0 + center.1.norm()))
    }

    /// Division padding for a requested rectangle at this center:
    /// one x-order when the center sits at `x = 0`, and `kx + 1` y-orders
    /// when it sits on the zero curve of `G`.
    fn padding(&self, center: (C64, C64), kx: usize) -> Result<(usize, usize), CoreError> {
        let a = usize::from(Self::is_zero_x(center.0));
        let b = if self.on_curve(center)? { kx + 1 } else { 0 };
        Ok((a, b))
    }

    /// Divides a numerator jet by `x G(x, y)`, resolving the removable
    /// factors: the explicit `x` when centered at 0 and the `y - Y~(x)`
    /// factor of `G` when centered on its zero curve. Away from the curve a
    /// center too close to it is refused as ill-conditioned.
    fn divide_by_xg(
        &self,
        numerator: TaylorJet2,
        orders: (usize, usize),
    ) -> Result<TaylorJet2, CoreError> {
        let center = numerator.center();
        let w1 = if Self::is_zero_x(center.0) {
            numerator.cancel_div(0, 1)?
        } else {
            let (nkx, nky) = numerator.orders();
            numerator.div(&TaylorJet2::var_x(center, nkx, nky))?
        };
        let (k1x, k1y) = w1.orders();
        if self.on_curve(center)? {
            let s = self.kf.y_tilde_jet(center, k1x)?;
            let w2 = w1.div_y_minus_s(&s)?;
            let (k2x, k2y) = w2.orders();
            let g1 = self.kf.g1_jet(center, k2x, k2y)?;
            w2.div(&g1)?.truncated(orders.0, orders.1)
        } else {
            let xj = TaylorJet2::var_x(center, k1x, k1y);
            let yj = TaylorJet2::var_y(center, k1x, k1y);
            let g = self.kf.eval_jet(KernelFn::G, &xj, &yj)?;
            let scale = g.max_abs();
            if g.coeff(0, 0).norm() < 1e-4 * scale {
                return Err(CoreError::NearSingular(format!(
                    "center {center:?} is too close to the zero curve of the y-root factor; \
                     expand on the curve or move the evaluation point"
                )));
            }
            w1.div(&g)?.truncated(orders.0, orders.1)
        }
    }

    /// Univariate jet (in x) of the boundary slice `V_0(x, 0)`:
    /// `-(x G00)(x, Y~(x)) / (x G10)(x, Y~(x)) * V_0(0, 0)`.
    /// Numerator and denominator share a simple zero at `x = 1`, removed by
    /// a joint cancellation when expanding there.
    fn v0_boundary_x(&self, center: (C64, C64), kx: usize) -> Result<TaylorJet2, CoreError> {
        let work = kx + 2;
        let yt = self.kf.y_tilde_jet(center, work)?;
        let xj = TaylorJet2::var_x(center, work, 0);
        let n0 = self.kf.eval_jet(KernelFn::XG00, &xj, &yt)?;
        let d0 = self.kf.eval_jet(KernelFn::XG10, &xj, &yt)?;
        let ratio = if d0.coeff(0, 0).norm() <= 1e-9 * d0.max_abs().max(1e-300) {
            let n0c = n0.cancel_div(0, 1)?;
            let d0c = d0.cancel_div(0, 1)?;
            n0c.div(&d0c)?
        } else {
            n0.div(&d0)?
        };
        ratio
            .scale(C64::new(-self.pi00, 0.0))
            .truncated(kx, 0)
    }

    fn build_v0(
        &self,
        center: (C64, C64),
        orders: (usize, usize),
    ) -> Result<TaylorJet2, CoreError> {
        let (kx, ky) = orders;
        let (a, b) = self.padding(center, kx)?;
        let (kxn, kyn) = (kx + a, ky + b);
        let boundary = self.v0_boundary_x(center, kxn)?.broadcast(kxn, kyn)?;
        let xj = TaylorJet2::var_x(center, kxn, kyn);
        let yj = TaylorJet2::var_y(center, kxn, kyn);
        let xg10 = self.kf.eval_jet(KernelFn::XG10, &xj, &yj)?;
        let xg00 = self.kf.eval_jet(KernelFn::XG00, &xj, &yj)?;
        let numerator = xg10
            .mul(&boundary)?
            .add(&xg00.scale(C64::new(self.pi00, 0.0)))?;
        self.divide_by_xg(numerator, orders)
    }

    /// `Q_{m}(x, y)` as a jet at `center` with the given orders.
    fn q_jet(
        &self,
        m: usize,
        center: (C64, C64),
        orders: (usize, usize),
    ) -> Result<TaylorJet2, CoreError> {
        let (kx, ky) = orders;
        let (x0, y0) = center;
        let ytx0 = self.tilde_scalar(x0)?;

        let full = self.vm_jet(m, center, (kx, ky))?;

        // V_m(x, Y~(x)) as a univariate x-jet.
        let curve_center = (x0, ytx0);
        let f_curve = self.vm_jet(m, curve_center, (kx, kx))?;
        let yt_jet = self.kf.y_tilde_jet(curve_center, kx)?;
        let along_curve = f_curve
            .compose_y(&yt_jet)?
            .with_center_y(y0)?
            .broadcast(kx, ky)?;

        // V_m(0, y) as a jet in y alone.
        let slice0 = if Self::is_zero_x(x0) {
            full.x_slice0()
        } else {
            self.vm_jet(m, (C64::new(0.0, 0.0), y0), (0, ky))?
                .with_center_x(x0)?
        };
        let at_zero_y = slice0.broadcast(kx, ky)?;

        // V_m(0, Y~(x)) as a univariate x-jet: the y-profile at x = 0
        // composed with the curve.
        let h = self
            .vm_jet(m, (C64::new(0.0, 0.0), ytx0), (0, kx))?
            .with_center_x(x0)?;
        let at_zero_curve = h
            .compose_y(&yt_jet)?
            .with_center_y(y0)?
            .broadcast(kx, ky)?;

        full.sub(&along_curve)?
            .sub(&at_zero_y)?
            .add(&at_zero_curve)
    }

    fn build_vm(
        &self,
        m: usize,
        center: (C64, C64),
        orders: (usize, usize),
    ) -> Result<TaylorJet2, CoreError> {
        let (kx, ky) = orders;
        let (a, b) = self.padding(center, kx)?;
        let (kxn, kyn) = (kx + a, ky + b);
        let q = self.q_jet(m - 1, center, (kxn, kyn))?;
        let xj = TaylorJet2::var_x(center, kxn, kyn);
        let yj = TaylorJet2::var_y(center, kxn, kyn);
        let xg10 = self.kf.eval_jet(KernelFn::XG10, &xj, &yj)?;
        let numerator = xg10.mul(&q)?;
        self.divide_by_xg(numerator, orders)
    }

    /// Partial sums of both transforms at a point:
    /// `(sum_m p^m V_m^(0), sum_m p^m V_m^(1))`.
    pub fn pgf(&self, x: C64, y: C64, m_top: usize) -> Result<(C64, C64), CoreError> {
        let mut acc = C64::new(0.0, 0.0);
        let mut p_pow = 1.0;
        for m in 0..=m_top {
            let v = self.vm_jet(m, (x, y), (0, 0))?;
            acc += v.coeff(0, 0) * p_pow;
            p_pow *= self.params.p;
        }
        let d = self.kf.eval_scalar(KernelFn::D, x, y)?;
        Ok((acc, acc * self.params.gamma / d))
    }

    /// Truncated mean queue lengths with the per-order coefficients.
    pub fn metrics(&self, m_top: usize) -> Result<PsaMetrics, CoreError> {
        let p = &self.params;
        let one = C64::new(1.0, 0.0);
        let mut vm1 = Vec::with_capacity(m_top + 1);
        let mut vm2 = Vec::with_capacity(m_top + 1);
        for m in 0..=m_top {
            let jet = self.vm_jet(m, (one, one), (2, 2))?;
            if jet.relative_imag() > 1e-10 {
                return Err(CoreError::SolverFailure(format!(
                    "coefficient jet at order {m} has imaginary residue {:.3e}",
                    jet.relative_imag()
                )));
            }
            vm1.push(jet.deriv(1, 0)?.re);
            vm2.push(jet.deriv(0, 1)?.re);
        }
        let mut sum1 = 0.0;
        let mut sum2 = 0.0;
        let mut p_pow = 1.0;
        for m in 0..=m_top {
            sum1 += p_pow * vm1[m];
            sum2 += p_pow * vm2[m];
            p_pow *= p.p;
        }
        let factor = 1.0 + p.gamma / p.tau;
        let eq1 = p.lambda1 * p.gamma / (p.tau * (p.tau + p.gamma)) + factor * sum1;
        let eq2 = factor * sum2;
        Ok(PsaMetrics {
            m: m_top,
            eq1,
            eq2,
            vm1,
            vm2,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference_params() -> ModelParams {
        ModelParams::new(1.0, 0.5, 4.0, 5.0, 2.0, 4.0, 0.5).unwrap()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn rejects_unstable_params() {
        let params = ModelParams::new(2.0, 2.0, 2.0, 2.0, 1.0, 1.0, 0.5).unwrap();
        assert!(PsaSolver::new(params).is_err());
    }

    #[test]
    fn v0_corner_values() {
        let solver = PsaSolver::new(reference_params()).unwrap();
        let at_11 = solver.v0_jet((c(1.0), c(1.0)), (0, 0)).unwrap();
        assert_abs_diff_eq!(at_11.coeff(0, 0).re, 2.0 / 3.0, epsilon = 1e-10);
        assert!(at_11.coeff(0, 0).im.abs() < 1e-12);
        let at_00 = solver.v0_jet((c(0.0), c(0.0)), (0, 0)).unwrap();
        assert_abs_diff_eq!(at_00.coeff(0, 0).re, 7.0 / 24.0, epsilon = 1e-12);
    }

    #[test]
    fn higher_orders_vanish_at_corners() {
        let solver = PsaSolver::new(reference_params()).unwrap();
        for m in 1..=4 {
            let at_00 = solver.vm_jet(m, (c(0.0), c(0.0)), (0, 0)).unwrap();
            assert!(
                at_00.coeff(0, 0).norm() <= 1e-9,
                "V_{m}(0,0) = {}",
                at_00.coeff(0, 0)
            );
            let at_11 = solver.vm_jet(m, (c(1.0), c(1.0)), (0, 0)).unwrap();
            assert!(
                at_11.coeff(0, 0).norm() <= 1e-9,
                "V_{m}(1,1) = {}",
                at_11.coeff(0, 0)
            );
        }
    }

    #[test]
    fn state1_values_at_one_one() {
        let solver = PsaSolver::new(reference_params()).unwrap();
        let m0 = solver.vm_state1_jet(0, (c(1.0), c(1.0)), (0, 0)).unwrap();
        assert_abs_diff_eq!(m0.coeff(0, 0).re, 1.0 / 3.0, epsilon = 1e-10);
        for m in 1..=3 {
            let v = solver.vm_state1_jet(m, (c(1.0), c(1.0)), (0, 0)).unwrap();
            assert!(v.coeff(0, 0).norm() <= 1e-9);
        }
    }

    #[test]
    fn normalization_telescopes() {
        let solver = PsaSolver::new(reference_params()).unwrap();
        let one = c(1.0);
        let mut total = C64::new(0.0, 0.0);
        for m in 0..=5 {
            let v0 = solver.vm_jet(m, (one, one), (0, 0)).unwrap().coeff(0, 0);
            let v1 = solver
                .vm_state1_jet(m, (one, one), (0, 0))
                .unwrap()
                .coeff(0, 0);
            total += v0 + v1;
        }
        assert!((total - c(1.0)).norm() <= 1e-9, "sum = {total}");
    }

    /// The defining relation of the order-m coefficients, checked as jets:
    /// `V_m G - G10 [V_m(x,0) + P_{m-1}] - G00 V_m(0,0) = 0`, in x-cleared
    /// form to keep everything polynomial.
    #[test]
    fn functional_equation_residual_per_order() {
        let solver = PsaSolver::new(reference_params()).unwrap();
        let center = (c(0.5), c(0.5));
        let (kx, ky) = (4, 4);
        let xj = TaylorJet2::var_x(center, kx, ky);
        let yj = TaylorJet2::var_y(center, kx, ky);
        let kf = solver.kernel();
        let g = kf.eval_jet(KernelFn::G, &xj, &yj).unwrap();
        let xg10 = kf.eval_jet(KernelFn::XG10, &xj, &yj).unwrap();
        let xg00 = kf.eval_jet(KernelFn::XG00, &xj, &yj).unwrap();

        // Boundary slices as jets constant in one variable.
        let v_x0 = |m: usize| -> TaylorJet2 {
            solver
                .vm_jet(m, (c(0.5), c(0.0)), (kx, 0))
                .unwrap()
                .with_center_y(c(0.5))
                .unwrap()
                .broadcast(kx, ky)
                .unwrap()
        };
        let v_0y = |m: usize| -> TaylorJet2 {
            solver
                .vm_jet(m, (c(0.0), c(0.5)), (0, ky))
                .unwrap()
                .with_center_x(c(0.5))
                .unwrap()
                .broadcast(kx, ky)
                .unwrap()
        };
        let v_00 = |m: usize| -> C64 {
            solver
                .vm_jet(m, (c(0.0), c(0.0)), (0, 0))
                .unwrap()
                .coeff(0, 0)
        };

        for m in 0..=3 {
            let vm = solver.vm_jet(m, center, (kx, ky)).unwrap();
            let vm_x0 = v_x0(m);
            let bracket = if m == 0 {
                vm_x0
            } else {
                // P_{m-1} = V_{m-1} - V_{m-1}(x,0) - V_{m-1}(0,y) + V_{m-1}(0,0)
                let prev = solver.vm_jet(m - 1, center, (kx, ky)).unwrap();
                let p_prev = prev
                    .sub(&v_x0(m - 1))
                    .unwrap()
                    .sub(&v_0y(m - 1))
                    .unwrap()
                    .add_scalar(v_00(m - 1));
                vm_x0.add(&p_prev).unwrap()
            };
            // x * [V_m G - G10 bracket - G00 V_m(0,0)] = x V_m G - XG10 bracket - XG00 V_m(0,0)
            let lhs = xj
                .mul(&vm.mul(&g).unwrap())
                .unwrap()
                .sub(&xg10.mul(&bracket).unwrap())
                .unwrap()
                .sub(&xg00.scale(v_00(m)))
                .unwrap();
            let scale = vm.max_abs().max(1.0);
            assert!(
                lhs.max_abs() <= 1e-8 * scale,
                "residual at order {m}: {:.3e}",
                lhs.max_abs()
            );
        }
    }

    #[test]
    fn metric_coefficients_deterministic() {
        let a = PsaSolver::new(reference_params()).unwrap();
        let b = PsaSolver::new(reference_params()).unwrap();
        let ma = a.metrics(4).unwrap();
        let mb = b.metrics(4).unwrap();
        assert_eq!(ma.eq1.to_bits(), mb.eq1.to_bits());
        assert_eq!(ma.eq2.to_bits(), mb.eq2.to_bits());
        for (x, y) in ma.vm1.iter().zip(&mb.vm1) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn metrics_csv_shape() {
        let solver = PsaSolver::new(reference_params()).unwrap();
        let m = solver.metrics(2).unwrap();
        let header = m.csv_header();
        let row = m.to_csv_row(0.5);
        assert_eq!(
            header.trim().split(',').count(),
            row.trim().split(',').count()
        );
        assert!(header.starts_with("p,M,EQ1,EQ2,v_m1_0"));
    }

    #[test]
    fn order_ceiling_enforced() {
        let solver = PsaSolver::new(reference_params()).unwrap();
        let err = solver.vm_jet(M_MAX_DEFAULT + 1, (c(0.5), c(0.5)), (0, 0));
        assert!(matches!(err, Err(CoreError::OrderBudget(_))));
    }
}
