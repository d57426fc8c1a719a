//! Ground truth: truncated-CTMC stationary solver and a discrete-event
//! simulator, both built directly from the transition rates of the network.

use crate::error::CoreError;
use crate::model::{self, ModelParams};
use crate::C64;
use ndarray::{Array1, Array2};
use ndarray_linalg::{Inverse, Solve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Finite-box restriction of the chain with blocking truncation: transitions
/// that would leave the box are disabled, keeping the generator conservative.
#[derive(Debug, Clone)]
pub struct TruncatedChain {
    pub params: ModelParams,
    /// Queue-length box: states (i, n, k) with 0 <= n, k <= N.
    pub n_box: usize,
}

/// Stationary probabilities over the truncated box.
#[derive(Debug, Clone)]
pub struct StationaryTable {
    pub n_box: usize,
    /// `probs` flattened as `mode * (N+1)^2 + n * (N+1) + k`.
    probs: Vec<f64>,
    /// Max-norm of `pi Q` after the solve, relative to the largest rate.
    pub residual: f64,
    /// Probability mass on the truncation boundary (n = N or k = N).
    pub boundary_mass: f64,
}

/// Point estimates with 95% batch-means confidence half-widths.
#[derive(Debug, Clone)]
pub struct SimEstimates {
    pub mean_q1: (f64, f64),
    pub mean_q2: (f64, f64),
    pub mode0_fraction: (f64, f64),
    pub empty_fraction: (f64, f64),
    pub horizon: f64,
    pub batches: usize,
    pub seed: u64,
}

/// Scalar summaries of a stationary table.
#[derive(Debug, Clone, Copy)]
pub struct OracleMetrics {
    pub eq1: f64,
    pub eq2: f64,
    pub pi0_00: f64,
    pub mode0: f64,
    pub mode1: f64,
}

const MODES: usize = 2;

impl TruncatedChain {
    pub fn new(params: ModelParams, n_box: usize) -> Result<Self, CoreError> {
        params.validate()?;
        if n_box < 2 {
            return Err(CoreError::InvalidParams(format!(
                "truncation box N = {n_box} too small (need N >= 2)"
            )));
        }
        Ok(Self { params, n_box })
    }

    pub fn state_count(&self) -> usize {
        MODES * (self.n_box + 1) * (self.n_box + 1)
    }

    /// Enumerates the outgoing transitions of `(mode, n, k)` inside the box.
    pub fn transitions(&self, mode: usize, n: usize, k: usize) -> Vec<(usize, usize, usize, f64)> {
        let p = &self.params;
        let nn = self.n_box;
        let mut out = Vec::with_capacity(4);
        if mode == 0 {
            if n < nn {
                out.push((0, n + 1, k, p.lambda0));
            }
            out.push((1, n, k, p.gamma));
            if n >= 1 && k >= 1 {
                if k < nn {
                    out.push((0, n - 1, k + 1, p.p * p.nu1));
                }
                out.push((0, n, k - 1, (1.0 - p.p) * p.nu2));
            } else if n >= 1 {
                // k == 0: station 1 holds the full capacity.
                out.push((0, n - 1, 1, p.nu1));
            } else if k >= 1 {
                // n == 0: station 2 holds the full capacity.
                out.push((0, 0, k - 1, p.nu2));
            }
        } else {
            if n < nn {
                out.push((1, n + 1, k, p.lambda1));
            }
            out.push((0, n, k, p.tau));
        }
        out.retain(|&(_, _, _, rate)| rate > 0.0);
        out
    }

    fn idx(&self, mode: usize, n: usize, k: usize) -> usize {
        let w = self.n_box + 1;
        mode * w * w + n * w + k
    }

    /// Applies `pi Q` for a residual check without materializing Q.
    fn apply_generator(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; pi.len()];
        for mode in 0..MODES {
            for n in 0..=self.n_box {
                for k in 0..=self.n_box {
                    let s = self.idx(mode, n, k);
                    let mut outflow = 0.0;
                    for (m2, n2, k2, rate) in self.transitions(mode, n, k) {
                        outflow += rate;
                        out[self.idx(m2, n2, k2)] += pi[s] * rate;
                    }
                    out[s] -= pi[s] * outflow;
                }
            }
        }
        out
    }

    fn max_rate(&self) -> f64 {
        let p = &self.params;
        p.lambda0 + p.lambda1 + p.nu1 + p.nu2 + p.gamma + p.tau
    }
}

/// Builds the truncated generator for `params`.
pub fn build_generator(params: &ModelParams, n_box: usize) -> Result<TruncatedChain, CoreError> {
    TruncatedChain::new(*params, n_box)
}

/// Solves `pi Q = 0`, `sum(pi) = 1` by block-tridiagonal elimination over the
/// station-1 level `n`. Level blocks have size `2 (N+1)` over (mode, station-2).
///
/// The normalization equation is carried as a bordered row through the
/// elimination and replaces one row of the final (singular) level system.
pub fn stationary_distribution(chain: &TruncatedChain) -> Result<StationaryTable, CoreError> {
    // OpenBLAS's threaded LU recurses with sizable frames on the calling
    // thread; run the elimination on a worker with a roomy stack so the
    // solve works from any caller (test harness threads default to 2 MiB).
    std::thread::scope(|scope| {
        std::thread::Builder::new()
            .stack_size(64 * 1024 * 1024)
            .spawn_scoped(scope, || stationary_distribution_inner(chain))
            .expect("spawn stationary solver thread")
            .join()
            .expect("stationary solver thread panicked")
    })
}

fn stationary_distribution_inner(chain: &TruncatedChain) -> Result<StationaryTable, CoreError> {
    let nn = chain.n_box;
    let nb = MODES * (nn + 1); // block size over (mode, k)
    let p = &chain.params;

    // Index inside a level block.
    let bidx = |mode: usize, k: usize| mode * (nn + 1) + k;

    // Up-coupling (arrivals, level n-1 -> n) is diagonal: lambda per mode.
    let lambda_of = |mode: usize| if mode == 0 { p.lambda0 } else { p.lambda1 };

    // Down-coupling (station-1 completions, level n+1 -> n):
    // (0, k) -> (0, k+1) at rate nu1 (k = 0) or p*nu1 (1 <= k <= N-1).
    let down_rate = |k: usize| -> f64 {
        if k == 0 {
            p.nu1
        } else if k < nn {
            p.p * p.nu1
        } else {
            0.0
        }
    };

    // Within-level block for level n (transposed: entry [to, from]).
    let same_level_block = |n: usize| -> Array2<f64> {
        let mut b = Array2::<f64>::zeros((nb, nb));
        for mode in 0..MODES {
            for k in 0..=nn {
                let from = bidx(mode, k);
                let mut outflow = 0.0;
                for (m2, n2, k2, rate) in chain.transitions(mode, n, k) {
                    outflow += rate;
                    if n2 == n {
                        b[[bidx(m2, k2), from]] += rate;
                    }
                }
                b[[from, from]] -= outflow;
            }
        }
        b
    };

    // Right-multiplication by the sparse down-coupling block: S1 sends the
    // source (0, k) of level n+1 to the target (0, k+1) of level n, so the
    // source column of M * S1 picks the target column of M.
    let apply_down = |m: &Array2<f64>| -> Array2<f64> {
        let mut out = Array2::<f64>::zeros((nb, nb));
        for k in 0..nn {
            let rate = down_rate(k);
            if rate > 0.0 {
                let src = m.column(bidx(0, k + 1)).to_owned();
                let mut dst = out.column_mut(bidx(0, k));
                dst.assign(&src);
                dst *= rate;
            }
        }
        out
    };

    // Forward elimination with the bordered normalization row.
    let mut g_blocks: Vec<Array2<f64>> = Vec::with_capacity(nn);
    let mut border = Array1::<f64>::ones(nb);
    let mut g_prev: Option<Array2<f64>> = None;

    for n in 0..=nn {
        let mut r = same_level_block(n);
        if let Some(g) = g_prev.take() {
            // r -= Lambda * G_{n-1}, row-scaled by lambda per mode.
            for mode in 0..MODES {
                let lam = lambda_of(mode);
                if lam == 0.0 {
                    continue;
                }
                for k in 0..=nn {
                    let row = bidx(mode, k);
                    for col in 0..nb {
                        r[[row, col]] -= lam * g[[row, col]];
                    }
                }
            }
        }
        if n < nn {
            let r_inv = r
                .inv()
                .map_err(|e| CoreError::SolverFailure(format!("level {n} inverse: {e}")))?;
            let g = apply_down(&r_inv); // G_n = R_n^{-1} S1
            // Fold the normalization border: e_{n+1} <- e_{n+1} - e_n G_n.
            let mut next_border = Array1::<f64>::ones(nb);
            for col in 0..nb {
                let mut acc = 0.0;
                for row in 0..nb {
                    acc += border[row] * g[[row, col]];
                }
                next_border[col] -= acc;
            }
            border = next_border;
            g_blocks.push(g.clone());
            g_prev = Some(g);
        } else {
            // Final level: the Schur complement is singular (rank nb-1);
            // replace its last row with the folded normalization.
            let mut a = r;
            let mut rhs = Array1::<f64>::zeros(nb);
            let last = nb - 1;
            for col in 0..nb {
                a[[last, col]] = border[col];
            }
            rhs[last] = 1.0;
            let x_last = a
                .solve(&rhs)
                .map_err(|e| CoreError::SolverFailure(format!("final level solve: {e}")))?;

            // Backward substitution: v_n = -G_n v_{n+1}.
            let mut levels: Vec<Array1<f64>> = vec![Array1::zeros(0); nn + 1];
            levels[nn] = x_last;
            for n in (0..nn).rev() {
                let g = &g_blocks[n];
                let next = &levels[n + 1];
                let mut v = Array1::<f64>::zeros(nb);
                for row in 0..nb {
                    let mut acc = 0.0;
                    for col in 0..nb {
                        acc += g[[row, col]] * next[col];
                    }
                    v[row] = -acc;
                }
                levels[n] = v;
            }

            // Assemble, clamp tiny negatives, renormalize.
            let w = nn + 1;
            let mut probs = vec![0.0; MODES * w * w];
            for n in 0..=nn {
                for mode in 0..MODES {
                    for k in 0..=nn {
                        probs[mode * w * w + n * w + k] = levels[n][bidx(mode, k)];
                    }
                }
            }
            let min = probs.iter().cloned().fold(f64::INFINITY, f64::min);
            if min < -1e-9 {
                return Err(CoreError::SolverFailure(format!(
                    "stationary solve produced negative mass {min:.3e}"
                )));
            }
            for v in probs.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let total: f64 = probs.iter().sum();
            for v in probs.iter_mut() {
                *v /= total;
            }

            let residual_vec = chain.apply_generator(&probs);
            let residual =
                residual_vec.iter().fold(0.0f64, |m, v| m.max(v.abs())) / chain.max_rate();

            let mut boundary_mass = 0.0;
            for mode in 0..MODES {
                for n in 0..=nn {
                    boundary_mass += probs[mode * w * w + n * w + nn];
                }
                for k in 0..nn {
                    boundary_mass += probs[mode * w * w + nn * w + k];
                }
            }

            return Ok(StationaryTable {
                n_box: nn,
                probs,
                residual,
                boundary_mass,
            });
        }
    }
    unreachable!("loop returns at n == nn")
}

/// Solves with automatic box escalation until the boundary mass is small
/// enough for metric reporting.
pub fn stationary_distribution_auto(
    params: &ModelParams,
    n_start: usize,
    boundary_tol: f64,
) -> Result<StationaryTable, CoreError> {
    const N_CAP: usize = 320;
    let mut n = n_start;
    loop {
        let chain = build_generator(params, n)?;
        let table = stationary_distribution(&chain)?;
        if table.boundary_mass <= boundary_tol {
            return Ok(table);
        }
        if n >= N_CAP {
            return Err(CoreError::SolverFailure(format!(
                "boundary mass {:.3e} > {boundary_tol:.1e} at N = {n}; increase the box or move away from instability",
                table.boundary_mass
            )));
        }
        n = ((n as f64 * 1.5).ceil() as usize).min(N_CAP);
    }
}

impl StationaryTable {
    pub fn prob(&self, mode: usize, n: usize, k: usize) -> f64 {
        let w = self.n_box + 1;
        self.probs[mode * w * w + n * w + k]
    }

    pub fn mode_marginal(&self) -> (f64, f64) {
        let w = self.n_box + 1;
        let m0: f64 = self.probs[..w * w].iter().sum();
        (m0, 1.0 - m0)
    }

    /// Joint transform `sum pi_mode(n, k) x^n y^k` for one mode.
    pub fn pgf(&self, x: C64, y: C64, mode: usize) -> C64 {
        let w = self.n_box + 1;
        let mut acc_n = C64::new(0.0, 0.0);
        for n in (0..w).rev() {
            let mut acc_k = C64::new(0.0, 0.0);
            for k in (0..w).rev() {
                acc_k = acc_k * y + self.prob(mode, n, k);
            }
            acc_n = acc_n * x + acc_k;
        }
        acc_n
    }

    pub fn metrics(&self) -> OracleMetrics {
        let w = self.n_box + 1;
        let mut eq1 = 0.0;
        let mut eq2 = 0.0;
        for mode in 0..MODES {
            for n in 0..w {
                for k in 0..w {
                    let pr = self.prob(mode, n, k);
                    eq1 += n as f64 * pr;
                    eq2 += k as f64 * pr;
                }
            }
        }
        let (m0, m1) = self.mode_marginal();
        OracleMetrics {
            eq1,
            eq2,
            pi0_00: self.prob(0, 0, 0),
            mode0: m0,
            mode1: m1,
        }
    }

    /// CSV rows `mode,n,k,prob`, skipping entries below 1e-14.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,n,k,prob\n");
        for mode in 0..MODES {
            for n in 0..=self.n_box {
                for k in 0..=self.n_box {
                    let pr = self.prob(mode, n, k);
                    if pr >= 1e-14 {
                        out.push_str(&format!("{mode},{n},{k},{pr:.16e}\n"));
                    }
                }
            }
        }
        out
    }
}

pub fn oracle_metrics(table: &StationaryTable) -> OracleMetrics {
    table.metrics()
}

pub fn pgf_from_table(table: &StationaryTable, x: C64, y: C64, mode: usize) -> C64 {
    table.pgf(x, y, mode)
}

/// Event-driven simulation of the untruncated network.
///
/// All clocks are exponential, so redrawing the race after every jump is an
/// exact simulation of the chain. A single seeded stream drives everything;
/// estimates use batch means over the post-warmup horizon (10% discarded).
pub fn simulate(
    params: &ModelParams,
    horizon: f64,
    seed: u64,
    batches: usize,
) -> Result<SimEstimates, CoreError> {
    params.validate()?;
    if !(horizon > 0.0) || batches < 2 {
        return Err(CoreError::InvalidParams(
            "horizon must be positive and batches >= 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let warmup = 0.1 * horizon;
    let batch_len = (horizon - warmup) / batches as f64;

    let mut mode = 0usize;
    let mut q1 = 0u64;
    let mut q2 = 0u64;
    let mut t = 0.0f64;

    // Per batch: time-integrals of q1, q2, mode-0 indicator, empty indicator.
    let mut acc = vec![[0.0f64; 4]; batches];

    while t < horizon {
        let p = params;
        let mut rates: [(f64, u8); 4] = [(0.0, 0); 4];
        let mut m = 0usize;
        if mode == 0 {
            rates[m] = (p.lambda0, 0);
            m += 1;
            rates[m] = (p.gamma, 1);
            m += 1;
            if q1 > 0 && q2 > 0 {
                rates[m] = (p.p * p.nu1, 2);
                m += 1;
                rates[m] = ((1.0 - p.p) * p.nu2, 3);
                m += 1;
            } else if q1 > 0 {
                rates[m] = (p.nu1, 2);
                m += 1;
            } else if q2 > 0 {
                rates[m] = (p.nu2, 3);
                m += 1;
            }
        } else {
            rates[m] = (p.lambda1, 0);
            m += 1;
            rates[m] = (p.tau, 4);
            m += 1;
        }
        let active = &rates[..m];
        let total: f64 = active.iter().map(|r| r.0).sum();
        let dt = -rng.gen::<f64>().ln() / total;
        let t_next = (t + dt).min(horizon);

        // Accumulate the sojourn over [t, t_next), split across batches.
        let mut seg = t.max(warmup);
        while seg < t_next {
            let b = (((seg - warmup) / batch_len) as usize).min(batches - 1);
            let b_end = warmup + (b + 1) as f64 * batch_len;
            let chunk = t_next.min(b_end) - seg;
            acc[b][0] += q1 as f64 * chunk;
            acc[b][1] += q2 as f64 * chunk;
            if mode == 0 {
                acc[b][2] += chunk;
                if q1 == 0 && q2 == 0 {
                    acc[b][3] += chunk;
                }
            }
            seg = t_next.min(b_end);
        }
        t += dt;
        if t >= horizon {
            break;
        }

        let u = rng.gen::<f64>() * total;
        let mut cum = 0.0;
        let mut which = active[m - 1].1;
        for r in active {
            cum += r.0;
            if u < cum {
                which = r.1;
                break;
            }
        }
        match which {
            0 => q1 += 1,
            1 => mode = 1,
            2 => {
                q1 -= 1;
                q2 += 1;
            }
            3 => q2 -= 1,
            _ => mode = 0,
        }
    }

    let ci = |vals: Vec<f64>| -> (f64, f64) {
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let t_quant = StudentsT::new(0.0, 1.0, n - 1.0)
            .expect("valid dof")
            .inverse_cdf(0.975);
        (mean, t_quant * (var / n).sqrt())
    };

    Ok(SimEstimates {
        mean_q1: ci(acc.iter().map(|a| a[0] / batch_len).collect()),
        mean_q2: ci(acc.iter().map(|a| a[1] / batch_len).collect()),
        mode0_fraction: ci(acc.iter().map(|a| a[2] / batch_len).collect()),
        empty_fraction: ci(acc.iter().map(|a| a[3] / batch_len).collect()),
        horizon,
        batches,
        seed,
    })
}

impl SimEstimates {
    pub fn to_csv_row(&self) -> String {
        format!(
            "sim,{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            self.seed,
            self.horizon,
            self.batches,
            self.mean_q1.0,
            self.mean_q1.1,
            self.mean_q2.0,
            self.mean_q2.1,
            self.mode0_fraction.0,
            self.mode0_fraction.1,
            self.empty_fraction.0,
            self.empty_fraction.1
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference_params() -> ModelParams {
        ModelParams::new(1.0, 0.5, 4.0, 5.0, 2.0, 4.0, 0.5).unwrap()
    }

    #[test]
    fn generator_rows_sum_to_zero() {
        let chain = build_generator(&reference_params(), 5).unwrap();
        let sc = chain.state_count();
        for s in 0..sc {
            let mut pi = vec![0.0; sc];
            pi[s] = 1.0;
            let out = chain.apply_generator(&pi);
            let sum: f64 = out.iter().sum();
            assert_abs_diff_eq!(sum, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn origin_state_has_two_transitions() {
        let chain = build_generator(&reference_params(), 5).unwrap();
        let trans = chain.transitions(0, 0, 0);
        assert_eq!(trans.len(), 2);
        let total: f64 = trans.iter().map(|t| t.3).sum();
        let p = reference_params();
        assert_abs_diff_eq!(total, p.lambda0 + p.gamma, epsilon = 1e-15);
    }

    #[test]
    fn interior_state_outflow() {
        let p = reference_params();
        let chain = build_generator(&p, 5).unwrap();
        let total: f64 = chain.transitions(0, 2, 2).iter().map(|t| t.3).sum();
        assert_abs_diff_eq!(
            total,
            p.lambda0 + p.gamma + p.p * p.nu1 + (1.0 - p.p) * p.nu2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn stationary_small_box_sanity() {
        let chain = build_generator(&reference_params(), 30).unwrap();
        let table = stationary_distribution(&chain).unwrap();
        let total: f64 = (0..2)
            .flat_map(|m| (0..=30).flat_map(move |n| (0..=30).map(move |k| (m, n, k))))
            .map(|(m, n, k)| table.prob(m, n, k))
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        assert!(table.residual < 1e-11, "residual {}", table.residual);
    }

    #[test]
    fn empty_probability_matches_closed_form_n200() {
        let params = reference_params();
        let chain = build_generator(&params, 200).unwrap();
        let table = stationary_distribution(&chain).unwrap();
        assert!(table.boundary_mass < 1e-8);
        assert!(table.residual < 1e-11, "residual {}", table.residual);
        let exact = model::empty_probability(&params).unwrap();
        assert_abs_diff_eq!(table.prob(0, 0, 0), exact, epsilon = 1e-8);
        let (m0, m1) = table.mode_marginal();
        assert_abs_diff_eq!(m0, 2.0 / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m1, 1.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn mode_marginal_independent_of_arrivals() {
        let mut params = reference_params();
        params.lambda1 = params.lambda0;
        let chain = build_generator(&params, 60).unwrap();
        let table = stationary_distribution(&chain).unwrap();
        let (m0, _) = table.mode_marginal();
        assert_abs_diff_eq!(m0, 2.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn pgf_normalization_and_corner() {
        let chain = build_generator(&reference_params(), 80).unwrap();
        let table = stationary_distribution(&chain).unwrap();
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let (m0, _) = table.mode_marginal();
        assert_abs_diff_eq!(table.pgf(one, one, 0).re, m0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            table.pgf(zero, zero, 0).re,
            table.prob(0, 0, 0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn metrics_converge_in_box_size() {
        let params = reference_params();
        let t150 = stationary_distribution(&build_generator(&params, 150).unwrap()).unwrap();
        let t200 = stationary_distribution(&build_generator(&params, 200).unwrap()).unwrap();
        let m150 = t150.metrics();
        let m200 = t200.metrics();
        assert!((m150.eq1 - m200.eq1).abs() <= 1e-7);
        assert!((m150.eq2 - m200.eq2).abs() <= 1e-7);
    }

    #[test]
    fn simulator_mode_fraction_and_empty() {
        let params = reference_params();
        let est = simulate(&params, 2.0e5, 17, 20).unwrap();
        let (m0, hw) = est.mode0_fraction;
        assert!(
            (m0 - 2.0 / 3.0).abs() <= hw.max(1e-3) * 1.5,
            "mode0 {m0} +- {hw}"
        );
        let (e0, ehw) = est.empty_fraction;
        assert!(
            (e0 - 7.0 / 24.0).abs() <= ehw.max(1e-3) * 1.5,
            "empty {e0} +- {ehw}"
        );
    }

    #[test]
    fn simulator_reproducible() {
        let params = reference_params();
        let a = simulate(&params, 5.0e3, 42, 10).unwrap();
        let b = simulate(&params, 5.0e3, 42, 10).unwrap();
        assert_eq!(a.to_csv_row(), b.to_csv_row());
        let c = simulate(&params, 5.0e3, 43, 10).unwrap();
        assert_ne!(a.to_csv_row(), c.to_csv_row());
    }

    #[test]
    fn simulator_vs_ctmc_means() {
        let params = reference_params();
        let table = stationary_distribution(&build_generator(&params, 120).unwrap()).unwrap();
        let m = table.metrics();
        let est = simulate(&params, 2.0e5, 7, 20).unwrap();
        assert!(
            (est.mean_q1.0 - m.eq1).abs() <= 3.0 * est.mean_q1.1.max(1e-3),
            "q1 sim {} vs ctmc {}",
            est.mean_q1.0,
            m.eq1
        );
        assert!(
            (est.mean_q2.0 - m.eq2).abs() <= 3.0 * est.mean_q2.1.max(1e-3),
            "q2 sim {} vs ctmc {}",
            est.mean_q2.0,
            m.eq2
        );
    }
}
