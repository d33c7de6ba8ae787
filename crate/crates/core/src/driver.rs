//! Outer loop of the split solver: detection update, missing-entry
//! imputation, projected-gradient factor blocks, exact half-thresholding of
//! the auxiliary blocks, residual-gated penalty growth with scaled dual
//! updates, convergence checks, and KKT diagnostics.

use ndarray::{Array1, Array2};

use crate::alpha::{cache_z_pinv, solve_alpha, AlphaProblem};
use crate::error::{Error, Result};
use crate::init::{init_alpha, init_aux, scale_aware_init};
use crate::linalg::frobenius_norm;
use crate::prox::half_threshold_matrix;
use crate::types::{
    block_matrix, AuxState, Block, CountData, DetectionState, FactorPair, FeatureMatrix,
    FitResult, KktResiduals, PenaltyEvent, PerBlock, SolverConfig, StopReason, Trace,
};
use crate::uv::{
    counted_pairs, eval_smooth_objective, grad_u, grad_v, projected_gradient_block,
    projected_residual, FactorBlockObjective, PgOptions,
};

/// State handed to a per-iteration observer; `iter == 0` is the
/// initialization point, before any update has run.
pub struct FitSnapshot<'a> {
    pub iter: usize,
    pub factors: &'a FactorPair,
    pub detection: &'a DetectionState,
}

/// Vanishing residual tolerance `eps0 * rho^{-beta}`.
pub fn eps_schedule(rho: f64, eps0: f64, beta: f64) -> f64 {
    debug_assert!(beta > 0.5 && beta < 2.0 / 3.0);
    eps0 * rho.powf(-beta)
}

#[derive(Clone, Debug)]
pub struct PenaltyUpdateOutcome {
    pub residual_norm: PerBlock<f64>,
    pub increased: Vec<Block>,
}

/// Residual-gated dual and penalty update. `aux.a` must already hold the
/// freshly thresholded blocks; `m_new` holds the structured matrices at the
/// freshly updated factors. The tolerance is evaluated at the pre-update
/// penalty. On an increase the scaled dual is rescaled by `1/gamma` so the
/// underlying unscaled dual stays `rho^k (W^k + r^{k+1})` on both branches.
pub fn penalty_dual_update(
    aux: &mut AuxState,
    m_new: &PerBlock<Array2<f64>>,
    eps_k: &PerBlock<f64>,
    gamma: f64,
) -> PenaltyUpdateOutcome {
    let mut residual_norm = PerBlock::uniform(0.0);
    let mut increased = Vec::new();
    for block in Block::ALL {
        let ab = aux.block_mut(block);
        let r = m_new.get(block) - &ab.a;
        let norm = frobenius_norm(&r);
        *residual_norm.get_mut(block) = norm;
        if !ab.is_active() {
            continue;
        }
        if norm <= *eps_k.get(block) {
            ab.w += &r;
        } else {
            ab.rho *= gamma;
            ab.w = (&ab.w + &r) / gamma;
            ab.increase_count += 1;
            increased.push(block);
        }
    }
    PenaltyUpdateOutcome {
        residual_norm,
        increased,
    }
}

/// Negative log-likelihood up to the additive count constants. Logarithm
/// arguments are floored so diagnostics stay finite at boundary iterates.
pub fn negative_log_likelihood(
    p_mat: &Array2<f64>,
    lambda: &Array2<f64>,
    y_sum: &Array2<f64>,
    m: usize,
    floor: f64,
) -> f64 {
    let m = m as f64;
    let mut total = 0.0;
    for (idx, &y) in y_sum.indexed_iter() {
        total += m * p_mat[idx] * lambda[idx];
        if y > 0.0 {
            total -= y * (p_mat[idx].max(floor).ln() + lambda[idx].max(floor).ln());
        }
    }
    total
}

/// Everything needed to evaluate the first-order system at an iterate.
pub struct KktState<'a> {
    pub factors: &'a FactorPair,
    pub aux: &'a AuxState,
    pub detection: &'a DetectionState,
    pub z: &'a FeatureMatrix,
    pub p_mat: &'a Array2<f64>,
    pub y_sum: &'a Array2<f64>,
    pub m: usize,
    pub alpha_rho: f64,
    pub delta_floor: f64,
}

pub fn kkt_residuals(state: &KktState) -> KktResiduals {
    let u = &state.factors.u;
    let v = &state.factors.v;
    let gu = grad_u(u, v, state.p_mat, state.y_sum, state.m, state.aux, state.delta_floor);
    let gv = grad_v(u, v, state.p_mat, state.y_sum, state.m, state.aux, state.delta_floor);
    let u_stationarity = projected_residual(u, &gu);
    let v_stationarity = projected_residual(v, &gv);

    let mut a_gap = PerBlock::uniform(0.0);
    let mut primal = PerBlock::uniform(0.0);
    for block in Block::ALL {
        let ab = state.aux.block(block);
        let m_x = block_matrix(block, u, v);
        *primal.get_mut(block) = frobenius_norm(&(&m_x - &ab.a));
        if !ab.is_active() {
            continue;
        }
        let tau = 1.5 * (ab.lambda / ab.rho).powf(2.0 / 3.0);
        let mut gap_sq = 0.0;
        for (idx, &a) in ab.a.indexed_iter() {
            let h = ab.rho * ab.w[idx];
            let gap = if a != 0.0 {
                // limiting subdifferential of lambda sqrt(|a|) at a != 0
                h - ab.lambda * a.signum() / (2.0 * a.abs().sqrt())
            } else {
                // a zero entry is consistent iff the dual sits inside the
                // half-threshold retention band
                (h.abs() - ab.rho * tau).max(0.0)
            };
            gap_sq += gap * gap;
        }
        *a_gap.get_mut(block) = gap_sq.sqrt();
    }

    let z_mat = state.z.matrix();
    let alpha_gradient = {
        let g = z_mat.t().dot(&state.detection.omega);
        g.iter().map(|x| x * x).sum::<f64>().sqrt()
    };
    let alpha_primal = {
        let gap = &state.detection.p - &z_mat.dot(&state.detection.alpha);
        gap.iter().map(|x| x * x).sum::<f64>().sqrt()
    };

    let m = state.m as f64;
    let y_flat: Vec<f64> = state.y_sum.iter().cloned().collect();
    let lambda = state.factors.lambda();
    let lambda_flat: Vec<f64> = lambda.iter().cloned().collect();
    let mut p_sq = 0.0;
    for r in 0..state.detection.p.len() {
        let p = state.detection.p[r];
        let mut d = m * lambda_flat[r] + state.alpha_rho * state.detection.omega[r];
        if y_flat[r] > 0.0 {
            d -= y_flat[r] / p.max(state.delta_floor);
        }
        let viol = if p <= 0.0 {
            (-d).max(0.0)
        } else if p >= 1.0 {
            d.max(0.0)
        } else {
            d.abs()
        };
        p_sq += viol * viol;
    }

    KktResiduals {
        u_stationarity,
        v_stationarity,
        a_gap,
        primal,
        alpha_gradient,
        p_stationarity: p_sq.sqrt(),
        alpha_primal,
    }
}

fn vec_norm(a: &Array1<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scaled augmented Lagrangian
/// `f + sum_X [ lambda_X ||A_X||_1/2 + (rho_X/2)(||M_X - A_X + W_X||^2 - ||W_X||^2) ]`.
fn augmented_lagrangian(
    factors: &FactorPair,
    p_mat: &Array2<f64>,
    y_sum: &Array2<f64>,
    m: usize,
    aux: &AuxState,
    delta_floor: f64,
) -> f64 {
    let mut total = eval_smooth_objective(&factors.u, &factors.v, p_mat, y_sum, m, aux, delta_floor);
    for block in Block::ALL {
        let ab = aux.block(block);
        if !ab.is_active() {
            continue;
        }
        total += ab.lambda * ab.a.iter().map(|a| a.abs().sqrt()).sum::<f64>();
        total -= 0.5 * ab.rho * ab.w.iter().map(|w| w * w).sum::<f64>();
    }
    total
}

/// Lift a degenerate start so every counted pair clears the intensity floor.
fn ensure_floor(factors: &mut FactorPair, y_sum: &Array2<f64>, delta_floor: f64) {
    let lambda = factors.lambda();
    let violated = y_sum
        .indexed_iter()
        .any(|(idx, &y)| y > 0.0 && lambda[idx] < delta_floor);
    if violated {
        let lift = delta_floor.sqrt();
        log::warn!("initial intensities below the floor at counted pairs; lifting factors by {lift}");
        factors.u.mapv_inplace(|x| x.max(lift));
        factors.v.mapv_inplace(|x| x.max(lift));
    }
}

fn check_finite(name: &str, iter: usize, values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{name} at outer iteration {iter}")));
    }
    Ok(())
}

/// Run the full solver. Identical inputs and seed produce identical results.
pub fn fit(data: &CountData, z: &FeatureMatrix, config: &SolverConfig) -> Result<FitResult> {
    fit_with(data, z, config, |_| {})
}

/// [`fit`] with a per-iteration observer, used by the benchmark harness to
/// record recovery curves.
pub fn fit_with(
    data_in: &CountData,
    z: &FeatureMatrix,
    config: &SolverConfig,
    mut observer: impl FnMut(&FitSnapshot),
) -> Result<FitResult> {
    config.validate()?;
    let (i_dim, j_dim, m_dim) = data_in.dims();
    if z.pair_dims() != (i_dim, j_dim) {
        return Err(Error::DimensionMismatch(format!(
            "feature matrix is for pairs {:?}, data has ({i_dim}, {j_dim})",
            z.pair_dims()
        )));
    }
    if config.rank > i_dim.min(j_dim) {
        return Err(Error::InvalidConfig(format!(
            "rank {} exceeds min(I, J) = {}",
            config.rank,
            i_dim.min(j_dim)
        )));
    }

    let mut data = data_in.clone();
    let n_pairs = i_dim * j_dim;

    let mut factors = scale_aware_init(data.y_sum(), m_dim, config.p0, config.rank)?;
    ensure_floor(&mut factors, data.y_sum(), config.delta_floor);

    let alpha0 = init_alpha(z, config.seed);
    let p0 = z.matrix().dot(&alpha0).mapv(|x| x.clamp(0.0, 1.0));
    let mut detection = DetectionState {
        alpha: alpha0,
        p: p0,
        omega: Array1::zeros(n_pairs),
    };
    let mut aux = init_aux(&factors, config);
    let z_pinv = cache_z_pinv(z);
    let (t_max_u, t_max_v) = config.t_max_for(m_dim);

    observer(&FitSnapshot {
        iter: 0,
        factors: &factors,
        detection: &detection,
    });

    let mut trace = Trace::default();
    let mut converged = false;
    let mut reason = StopReason::MaxOuter;
    let mut prev_nll = f64::INFINITY;
    let mut completed = 0;

    let mut alpha_rho_prev: Option<f64> = None;
    for k in 0..config.max_outer {
        // (1) detection block at the current intensities
        let lambda_mat = factors.lambda();
        let y_vec = Array1::from_iter(data.y_sum().iter().cloned());
        let lambda_vec = Array1::from_iter(lambda_mat.iter().cloned());
        let alpha_rho = config.alpha_rho.unwrap_or_else(|| {
            let mean = m_dim as f64 * lambda_vec.iter().sum::<f64>() / lambda_vec.len() as f64;
            mean.max(1.0)
        });
        // the warm-started scaled dual tracks the unscaled multiplier, so a
        // penalty change between outer iterations rescales it
        if let Some(prev) = alpha_rho_prev {
            if prev != alpha_rho {
                detection.omega *= prev / alpha_rho;
            }
        }
        alpha_rho_prev = Some(alpha_rho);
        let problem = AlphaProblem {
            y_vec: &y_vec,
            lambda_vec: &lambda_vec,
            m: m_dim,
            z,
            rho: alpha_rho,
            z_pinv: &z_pinv,
        };
        let (det_new, alpha_info) =
            solve_alpha(&problem, &detection, config.inner_alpha_tol, config.inner_alpha_max_iter)?;
        if !alpha_info.converged {
            log::debug!(
                "outer {k}: detection block stopped at residual {} after {} iterations",
                alpha_info.residual,
                alpha_info.iterations
            );
        }
        let delta_alpha = vec_norm(&(&det_new.alpha - &detection.alpha));
        detection = det_new;
        let p_mat = detection.p_matrix(i_dim, j_dim);

        // (2) EM-style imputation of structurally missing entries
        data.impute_missing(&p_mat, &lambda_mat)?;
        let y_sum = data.y_sum().clone();

        let f_before =
            eval_smooth_objective(&factors.u, &factors.v, &p_mat, &y_sum, m_dim, &aux, config.delta_floor);
        let l_start = augmented_lagrangian(&factors, &p_mat, &y_sum, m_dim, &aux, config.delta_floor);

        // (3) factor blocks, U first, each a projected-gradient descent;
        // the after-step objectives are derived from the blocks' own exact
        // deltas so the recorded descent reflects the accepted steps
        let counted = counted_pairs(&y_sum);
        let opts_u = PgOptions {
            t_max: t_max_u,
            armijo_c: config.armijo_c,
            t_min: config.t_min,
            s_max: config.s_max,
            step_tol: config.step_tol,
        };
        let (u_new, out_u) = {
            let mut problem = FactorBlockObjective::u_side(
                &factors.v,
                &p_mat,
                &counted,
                m_dim,
                &aux,
                config.delta_floor,
            );
            projected_gradient_block(&factors.u, &mut problem, &opts_u)
        };
        let delta_u = frobenius_norm(&(&u_new - &factors.u));
        factors.u = u_new;
        let f_after_u = f_before + out_u.delta();

        let opts_v = PgOptions {
            t_max: t_max_v,
            ..opts_u
        };
        let (v_new, out_v) = {
            let mut problem = FactorBlockObjective::v_side(
                &factors.u,
                &p_mat,
                &counted,
                m_dim,
                &aux,
                config.delta_floor,
            );
            projected_gradient_block(&factors.v, &mut problem, &opts_v)
        };
        let delta_v = frobenius_norm(&(&v_new - &factors.v));
        factors.v = v_new;
        let f_after_v = f_after_u + out_v.delta();

        // (4) auxiliary blocks by exact half-thresholding of M_X + W_X
        let m_new = PerBlock::new(
            block_matrix(Block::UU, &factors.u, &factors.v),
            block_matrix(Block::UV, &factors.u, &factors.v),
            block_matrix(Block::VV, &factors.u, &factors.v),
        );
        let mut prox_residual = PerBlock::uniform(0.0);
        let mut prox_bound = PerBlock::uniform(0.0);
        let rho_before = aux.rho();
        for block in Block::ALL {
            let ab = aux.block_mut(block);
            let m_x = m_new.get(block);
            if !ab.is_active() {
                ab.a = m_x.clone();
                continue;
            }
            let q = m_x + &ab.w;
            let a_new = half_threshold_matrix(&q, ab.lambda, ab.rho)?;
            *prox_residual.get_mut(block) = frobenius_norm(&(&q - &a_new));
            *prox_bound.get_mut(block) = 1.5
                * (a_new.len() as f64).sqrt()
                * (ab.lambda / ab.rho).powf(2.0 / 3.0);
            ab.a = a_new;
        }

        // (5) residual-gated penalty growth with the tolerance at rho^k
        let eps_k = PerBlock::new(
            eps_schedule(rho_before.uu, config.eps0.uu, config.beta),
            eps_schedule(rho_before.uv, config.eps0.uv, config.beta),
            eps_schedule(rho_before.vv, config.eps0.vv, config.beta),
        );
        let update = penalty_dual_update(&mut aux, &m_new, &eps_k, config.gamma);
        for &block in &update.increased {
            trace.penalty_events.push(PenaltyEvent { iter: k, block });
        }

        // (6) diagnostics
        let l_end = augmented_lagrangian(&factors, &p_mat, &y_sum, m_dim, &aux, config.delta_floor);
        let mut dual_bump = 0.0;
        for block in Block::ALL {
            let r = *update.residual_norm.get(block);
            let rho_new = aux.block(block).rho;
            dual_bump += 0.5 * (rho_new + rho_before.get(block)) * r * r;
        }
        let kkt = kkt_residuals(&KktState {
            factors: &factors,
            aux: &aux,
            detection: &detection,
            z,
            p_mat: &p_mat,
            y_sum: &y_sum,
            m: m_dim,
            alpha_rho,
            delta_floor: config.delta_floor,
        });
        let nll = negative_log_likelihood(&p_mat, &factors.lambda(), &y_sum, m_dim, config.delta_floor);

        check_finite("factors", k, &[delta_u, delta_v, delta_alpha])?;
        check_finite("objective", k, &[nll, f_before, f_after_u, f_after_v])?;
        if factors.u.iter().chain(factors.v.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("factor matrices at outer iteration {k}")));
        }

        trace.nll.push(nll);
        for block in Block::ALL {
            trace
                .primal_residual
                .get_mut(block)
                .push(*update.residual_norm.get(block));
            trace.rho.get_mut(block).push(aux.block(block).rho);
            trace
                .prox_residual
                .get_mut(block)
                .push(*prox_residual.get(block));
            trace.prox_bound.get_mut(block).push(*prox_bound.get(block));
        }
        trace.kkt.push(kkt);
        trace.f_before.push(f_before);
        trace.f_after_u.push(f_after_u);
        trace.f_after_v.push(f_after_v);
        trace.l_start.push(l_start);
        trace.l_end.push(l_end);
        trace.dual_bump.push(dual_bump);
        trace.delta_u.push(delta_u);
        trace.delta_v.push(delta_v);
        trace.delta_alpha.push(delta_alpha);
        completed = k + 1;

        observer(&FitSnapshot {
            iter: completed,
            factors: &factors,
            detection: &detection,
        });

        let obj_change = (nll - prev_nll).abs();
        prev_nll = nll;
        if obj_change <= config.outer_obj_tol
            && delta_u.max(delta_v).max(delta_alpha) <= config.outer_var_tol
        {
            converged = true;
            reason = StopReason::Tolerance;
            break;
        }
    }

    Ok(FitResult {
        factors,
        detection,
        aux,
        trace,
        converged,
        reason,
        outer_iterations: completed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eps_schedule_values() {
        assert_eq!(eps_schedule(1.0, 0.7, 0.6), 0.7);
        let expect = 8f64.powf(-0.6);
        assert!((eps_schedule(8.0, 1.0, 0.6) - expect).abs() < 1e-15);
        // doubling rho strictly decreases eps
        assert!(eps_schedule(2.0, 1.0, 0.6) < eps_schedule(1.0, 1.0, 0.6));
        assert!(eps_schedule(16.0, 1.0, 0.6) < eps_schedule(8.0, 1.0, 0.6));
    }

    fn aux_fixture() -> (AuxState, PerBlock<Array2<f64>>) {
        let a = array![[1.0, 0.0], [0.0, 2.0]];
        let w = array![[0.1, -0.1], [0.2, 0.0]];
        let block = |a: &Array2<f64>, w: &Array2<f64>| crate::types::AuxBlock {
            a: a.clone(),
            w: w.clone(),
            rho: 1.0,
            lambda: 0.5,
            increase_count: 0,
        };
        let aux = AuxState {
            uu: block(&a, &w),
            uv: block(&a, &w),
            vv: block(&a, &w),
        };
        let m_new = PerBlock::new(a.clone(), a.clone(), a.clone());
        (aux, m_new)
    }

    #[test]
    fn penalty_update_zero_residual_changes_nothing() {
        let (mut aux, m_new) = aux_fixture();
        let before = aux.clone();
        let eps = PerBlock::uniform(1e-3);
        let out = penalty_dual_update(&mut aux, &m_new, &eps, 2.0);
        assert!(out.increased.is_empty());
        assert_eq!(aux, before);
        assert_eq!(out.residual_norm.uu, 0.0);
    }

    #[test]
    fn penalty_update_applies_growth_rule() {
        let (mut aux, mut m_new) = aux_fixture();
        // force a residual of Frobenius norm 2 on the UU block
        m_new.uu = &aux.uu.a + &array![[2.0, 0.0], [0.0, 0.0]];
        let eps = PerBlock::uniform(1.0);
        let w_before = aux.uu.w.clone();
        let out = penalty_dual_update(&mut aux, &m_new, &eps, 2.0);
        assert_eq!(out.increased, vec![Block::UU]);
        assert_eq!(aux.uu.rho, 2.0);
        assert_eq!(aux.uu.increase_count, 1);
        let expect = (&w_before + &array![[2.0, 0.0], [0.0, 0.0]]) / 2.0;
        assert_eq!(aux.uu.w, expect);
        // small-residual branch accumulates into the dual instead
        assert_eq!(aux.uv.rho, 1.0);
        assert_eq!(aux.uv.w, w_before);
    }

    #[test]
    fn penalty_update_ignores_inert_blocks() {
        let (mut aux, mut m_new) = aux_fixture();
        aux.vv.lambda = 0.0;
        m_new.vv = &aux.vv.a + &Array2::from_elem((2, 2), 5.0);
        let eps = PerBlock::uniform(1e-6);
        let out = penalty_dual_update(&mut aux, &m_new, &eps, 2.0);
        assert!(!out.increased.contains(&Block::VV));
        assert_eq!(aux.vv.rho, 1.0);
        assert_eq!(aux.vv.increase_count, 0);
    }

    #[test]
    fn kkt_zero_at_constructed_fixed_point() {
        // U = V = 0 with zero counts, A = M = 0, duals inside the threshold
        // band, p = Z alpha = 0 with zero intensities.
        let factors = FactorPair::new(Array2::zeros((2, 1)), Array2::zeros((2, 1))).unwrap();
        let mut aux = init_aux(&factors, &SolverConfig::default());
        // dual inside the retention band: |h| <= rho * tau
        aux.uu.w = Array2::from_elem((2, 2), 0.1);
        let z = FeatureMatrix::new(2, 2, Array2::eye(4)).unwrap();
        let detection = DetectionState {
            alpha: Array1::zeros(4),
            p: Array1::zeros(4),
            omega: Array1::zeros(4),
        };
        let p_mat = Array2::zeros((2, 2));
        let y_sum = Array2::zeros((2, 2));
        let kkt = kkt_residuals(&KktState {
            factors: &factors,
            aux: &aux,
            detection: &detection,
            z: &z,
            p_mat: &p_mat,
            y_sum: &y_sum,
            m: 1,
            alpha_rho: 1.0,
            delta_floor: 1e-10,
        });
        assert_eq!(kkt.max(), 0.0, "{kkt:?}");
    }

    #[test]
    fn kkt_positive_at_non_stationary_point() {
        let factors = FactorPair::new(array![[2.0], [1.0]], array![[1.5], [0.5]]).unwrap();
        let aux = init_aux(&factors, &SolverConfig::default());
        let z = FeatureMatrix::new(2, 2, Array2::eye(4)).unwrap();
        let detection = DetectionState {
            alpha: Array1::from_elem(4, 0.3),
            p: Array1::from_elem(4, 0.9),
            omega: Array1::from_elem(4, 0.2),
        };
        let p_mat = Array2::from_elem((2, 2), 0.9);
        let y_sum = array![[3.0, 0.0], [1.0, 2.0]];
        let kkt = kkt_residuals(&KktState {
            factors: &factors,
            aux: &aux,
            detection: &detection,
            z: &z,
            p_mat: &p_mat,
            y_sum: &y_sum,
            m: 1,
            alpha_rho: 1.0,
            delta_floor: 1e-10,
        });
        assert!(kkt.max() > 0.1, "{kkt:?}");
    }

    #[test]
    fn nll_matches_hand_value() {
        // single cell: y = 2, p = 0.5, lambda = 4, M = 2
        // nll = M p lambda - y (ln p + ln lambda)
        let p = array![[0.5]];
        let lam = array![[4.0]];
        let y = array![[2.0]];
        let expect = 2.0 * 0.5 * 4.0 - 2.0 * (0.5f64.ln() + 4.0f64.ln());
        let got = negative_log_likelihood(&p, &lam, &y, 2, 1e-10);
        assert!((got - expect).abs() < 1e-12);
    }
}
