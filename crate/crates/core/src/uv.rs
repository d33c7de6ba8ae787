//! Projected-gradient blocks for the factor subproblems of the augmented
//! Lagrangian, with Armijo backtracking and the intensity floor safeguard.
//!
//! The smooth objective at a given iterate is
//! `F(U, V) = f(U, V) + sum_X (rho_X / 2) || M_X - B_X ||_F^2` with
//! `B_X = A_X - W_X` and
//! `f(U, V) = sum_ij [ M p_ij lambda_ij - y_sum_ij log lambda_ij ]`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::{block_matrix, AuxState, Block};

/// Count-weighted reciprocal `y_sum ./ lambda` with the convention that
/// uncounted pairs contribute zero and counted intensities are floored.
fn count_ratio(lambda: &Array2<f64>, y_sum: &Array2<f64>, delta_floor: f64) -> Array2<f64> {
    let mut out = Array2::zeros(lambda.dim());
    for (idx, &y) in y_sum.indexed_iter() {
        if y > 0.0 {
            out[idx] = y / lambda[idx].max(delta_floor);
        }
    }
    out
}

fn log_likelihood_terms(
    lambda: &Array2<f64>,
    p_mat: &Array2<f64>,
    y_sum: &Array2<f64>,
    m: usize,
    delta_floor: f64,
) -> f64 {
    let m = m as f64;
    let mut total = 0.0;
    for (idx, &lam) in lambda.indexed_iter() {
        total += m * p_mat[idx] * lam;
        let y = y_sum[idx];
        if y > 0.0 {
            total -= y * lam.max(delta_floor).ln();
        }
    }
    total
}

/// Smooth likelihood part `f(U, V)`. Counted pairs whose intensity falls
/// below the floor are a domain violation and are reported, not clamped.
pub fn eval_f(
    u: &Array2<f64>,
    v: &Array2<f64>,
    p_mat: &Array2<f64>,
    y_sum: &Array2<f64>,
    m: usize,
    delta_floor: f64,
) -> Result<f64> {
    let lambda = u.dot(&v.t());
    for (idx, &y) in y_sum.indexed_iter() {
        if y > 0.0 && lambda[idx] < delta_floor {
            return Err(Error::DomainViolation(format!(
                "intensity {} below floor {delta_floor} at counted pair {idx:?}",
                lambda[idx]
            )));
        }
    }
    Ok(log_likelihood_terms(&lambda, p_mat, y_sum, m, delta_floor))
}

fn penalty_half_norm(m_x: &Array2<f64>, b_x: &Array2<f64>, rho: f64) -> f64 {
    let mut acc = 0.0;
    for (a, b) in m_x.iter().zip(b_x.iter()) {
        let d = a - b;
        acc += d * d;
    }
    0.5 * rho * acc
}

/// Full smooth objective `F(U, V)` including the quadratic penalties of the
/// active blocks. Intensities are floored inside the logarithm, so the value
/// is finite everywhere; the line search separately rejects floor violations.
pub fn eval_smooth_objective(
    u: &Array2<f64>,
    v: &Array2<f64>,
    p_mat: &Array2<f64>,
    y_sum: &Array2<f64>,
    m: usize,
    aux: &AuxState,
    delta_floor: f64,
) -> f64 {
    let lambda = u.dot(&v.t());
    let mut total = log_likelihood_terms(&lambda, p_mat, y_sum, m, delta_floor);
    for block in Block::ALL {
        let ab = aux.block(block);
        if !ab.is_active() {
            continue;
        }
        let m_x = match block {
            Block::UV => lambda.clone(),
            _ => block_matrix(block, u, v),
        };
        let b_x = &ab.a - &ab.w;
        total += penalty_half_norm(&m_x, &b_x, ab.rho);
    }
    total
}

/// Partial gradient of `F` with respect to `U`.
pub fn grad_u(
    u: &Array2<f64>,
    v: &Array2<f64>,
    p_mat: &Array2<f64>,
    y_sum: &Array2<f64>,
    m: usize,
    aux: &AuxState,
    delta_floor: f64,
) -> Array2<f64> {
    let lambda = u.dot(&v.t());
    let ratio = count_ratio(&lambda, y_sum, delta_floor);
    let mut g = p_mat.dot(v) * m as f64 - ratio.dot(v);
    if aux.uu.is_active() {
        let b = &aux.uu.a - &aux.uu.w;
        g += &((u.dot(&u.t()) - b).dot(u) * (2.0 * aux.uu.rho));
    }
    if aux.uv.is_active() {
        let b = &aux.uv.a - &aux.uv.w;
        g += &((lambda - b).dot(v) * aux.uv.rho);
    }
    g
}

/// Partial gradient of `F` with respect to `V`.
pub fn grad_v(
    u: &Array2<f64>,
    v: &Array2<f64>,
    p_mat: &Array2<f64>,
    y_sum: &Array2<f64>,
    m: usize,
    aux: &AuxState,
    delta_floor: f64,
) -> Array2<f64> {
    let lambda = u.dot(&v.t());
    let ratio = count_ratio(&lambda, y_sum, delta_floor);
    let mut g = p_mat.t().dot(u) * m as f64 - ratio.t().dot(u);
    if aux.vv.is_active() {
        let b = &aux.vv.a - &aux.vv.w;
        g += &((v.dot(&v.t()) - b).dot(v) * (2.0 * aux.vv.rho));
    }
    if aux.uv.is_active() {
        let b = &aux.uv.a - &aux.uv.w;
        g += &((lambda - b).t().dot(u) * aux.uv.rho);
    }
    g
}

/// Stationarity measure `|| min(X, grad) ||_F` for a nonnegativity-constrained
/// block.
pub fn projected_residual(x: &Array2<f64>, grad: &Array2<f64>) -> f64 {
    x.iter()
        .zip(grad.iter())
        .map(|(&xi, &gi)| {
            let r = xi.min(gi);
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Copy, Debug)]
pub struct PgOptions {
    pub t_max: f64,
    pub armijo_c: f64,
    pub t_min: f64,
    pub s_max: usize,
    pub step_tol: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct PgOutcome {
    pub steps: usize,
    /// Line search hit `t_min` without an acceptable candidate.
    pub stalled: bool,
    /// Objective at the starting point and at the returned iterate, in the
    /// problem's own convention (additive constants may be omitted).
    pub initial_objective: f64,
    pub objective: f64,
}

impl PgOutcome {
    /// Exact objective change over the accepted steps; nonpositive by the
    /// Armijo rule.
    pub fn delta(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.objective - self.initial_objective
        }
    }
}

/// Objective driving one projected-gradient block. Implementations may drop
/// additive terms that are constant during the block and may cache
/// intermediates of the last `evaluate` call for the following `gradient`
/// call at the same point.
pub trait BlockObjective {
    /// Value at a candidate, or `None` when the candidate violates the
    /// intensity floor (which rejects the step).
    fn evaluate(&mut self, x: &Array2<f64>) -> Option<f64>;
    fn gradient(&mut self, x: &Array2<f64>) -> Array2<f64>;
}

/// Closure adapter for [`BlockObjective`].
pub struct FnBlock<E, G> {
    pub eval: E,
    pub grad: G,
}

impl<E, G> BlockObjective for FnBlock<E, G>
where
    E: FnMut(&Array2<f64>) -> Option<f64>,
    G: FnMut(&Array2<f64>) -> Array2<f64>,
{
    fn evaluate(&mut self, x: &Array2<f64>) -> Option<f64> {
        (self.eval)(x)
    }
    fn gradient(&mut self, x: &Array2<f64>) -> Array2<f64> {
        (self.grad)(x)
    }
}

/// Projected gradient descent with Armijo backtracking on one factor block.
/// Steps are `max(X - t grad, 0)` with `t` halved from `t_max` until the
/// sufficient-decrease condition holds; the returned iterate never increases
/// the objective.
pub fn projected_gradient_block(
    x0: &Array2<f64>,
    problem: &mut impl BlockObjective,
    opts: &PgOptions,
) -> (Array2<f64>, PgOutcome) {
    let mut x = x0.clone();
    let mut fx = match problem.evaluate(&x) {
        Some(f) => f,
        // the caller maintains feasibility of the incoming iterate; refuse
        // to line-search from an infeasible point
        None => {
            return (
                x,
                PgOutcome {
                    steps: 0,
                    stalled: true,
                    initial_objective: f64::INFINITY,
                    objective: f64::INFINITY,
                },
            )
        }
    };
    let initial_objective = fx;
    let mut steps = 0;
    let mut stalled = false;

    'outer: for _ in 0..opts.s_max {
        let g = problem.gradient(&x);
        let mut t = opts.t_max;
        loop {
            let candidate = ndarray::Zip::from(&x)
                .and(&g)
                .map_collect(|&xi, &gi| (xi - t * gi).max(0.0));
            let diff_sq: f64 = candidate
                .iter()
                .zip(x.iter())
                .map(|(&c, &xi)| (c - xi) * (c - xi))
                .sum();
            if diff_sq == 0.0 {
                // projection absorbs the whole step: stationary point
                break 'outer;
            }
            if let Some(fc) = problem.evaluate(&candidate) {
                if fc <= fx - opts.armijo_c * diff_sq / t {
                    x = candidate;
                    fx = fc;
                    steps += 1;
                    if diff_sq.sqrt() <= opts.step_tol {
                        break 'outer;
                    }
                    break;
                }
            }
            t *= 0.5;
            if t < opts.t_min {
                stalled = true;
                break 'outer;
            }
        }
    }

    (
        x,
        PgOutcome {
            steps,
            stalled,
            initial_objective,
            objective: fx,
        },
    )
}

/// Pairs with positive counts as `(i, j, y)` triples; the logarithm terms
/// and the floor check only touch these.
pub fn counted_pairs(y_sum: &Array2<f64>) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for ((i, j), &y) in y_sum.indexed_iter() {
        if y > 0.0 {
            out.push((i, j, y));
        }
    }
    out
}

struct OwnGram {
    rho: f64,
    /// B = A - W of this side's Gram block.
    b: Array2<f64>,
}

struct CrossTerm {
    rho: f64,
    /// B * other, with B oriented so this block's product is `x * other^T`.
    b_other: Array2<f64>,
    /// other^T * other.
    gram_other: Array2<f64>,
    /// || B ||_F^2, the constant completing the square.
    b_norm_sq: f64,
}

struct BlockCache {
    x: Array2<f64>,
    xtx: Array2<f64>,
    b_x: Option<Array2<f64>>,
    counted_lambda: Vec<f64>,
}

/// One factor block of the smooth objective, restructured so a candidate
/// evaluation avoids full I x J products:
///   - the detection term `sum_ij m p_ij lambda_ij` is linear in the active
///     factor and reduces to an inner product with a precomputed matrix;
///   - the logarithm terms and the intensity floor only involve counted
///     pairs;
///   - the quadratic penalties expand through Gram identities such as
///     `||x other^T - B||^2 = <x^T x, other^T other> - 2 <x, B other> + c`.
/// The Gram penalty of the held factor is constant during the block and is
/// omitted, which cancels in the Armijo comparison.
pub struct FactorBlockObjective<'a> {
    other: &'a Array2<f64>,
    /// `m * P * other` in this block's orientation.
    linear: Array2<f64>,
    /// `(row_of_x, row_of_other, y)` for counted pairs.
    counted: Vec<(usize, usize, f64)>,
    delta_floor: f64,
    own: Option<OwnGram>,
    cross: Option<CrossTerm>,
    cache: Option<BlockCache>,
}

impl<'a> FactorBlockObjective<'a> {
    /// U-side problem: x = U, held factor V.
    pub fn u_side(
        v: &'a Array2<f64>,
        p_mat: &Array2<f64>,
        counted: &[(usize, usize, f64)],
        m: usize,
        aux: &AuxState,
        delta_floor: f64,
    ) -> Self {
        let own = aux.uu.is_active().then(|| OwnGram {
            rho: aux.uu.rho,
            b: &aux.uu.a - &aux.uu.w,
        });
        let cross = aux.uv.is_active().then(|| {
            let b = &aux.uv.a - &aux.uv.w;
            CrossTerm {
                rho: aux.uv.rho,
                b_other: b.dot(v),
                gram_other: v.t().dot(v),
                b_norm_sq: b.iter().map(|x| x * x).sum(),
            }
        });
        Self {
            other: v,
            linear: p_mat.dot(v) * m as f64,
            counted: counted.to_vec(),
            delta_floor,
            own,
            cross,
            cache: None,
        }
    }

    /// V-side problem: x = V, held factor U.
    pub fn v_side(
        u: &'a Array2<f64>,
        p_mat: &Array2<f64>,
        counted: &[(usize, usize, f64)],
        m: usize,
        aux: &AuxState,
        delta_floor: f64,
    ) -> Self {
        let own = aux.vv.is_active().then(|| OwnGram {
            rho: aux.vv.rho,
            b: &aux.vv.a - &aux.vv.w,
        });
        let cross = aux.uv.is_active().then(|| {
            let b = (&aux.uv.a - &aux.uv.w).t().to_owned();
            CrossTerm {
                rho: aux.uv.rho,
                b_other: b.dot(u),
                gram_other: u.t().dot(u),
                b_norm_sq: b.iter().map(|x| x * x).sum(),
            }
        });
        Self {
            other: u,
            linear: p_mat.t().dot(u) * m as f64,
            counted: counted.iter().map(|&(i, j, y)| (j, i, y)).collect(),
            delta_floor,
            own,
            cross,
            cache: None,
        }
    }

    fn row_dot(a: &Array2<f64>, i: usize, b: &Array2<f64>, j: usize) -> f64 {
        let mut acc = 0.0;
        for f in 0..a.ncols() {
            acc += a[(i, f)] * b[(j, f)];
        }
        acc
    }

    fn rebuild_cache(&mut self, x: &Array2<f64>) {
        let mut counted_lambda = Vec::with_capacity(self.counted.len());
        for &(i, j, _) in &self.counted {
            counted_lambda.push(Self::row_dot(x, i, self.other, j));
        }
        let xtx = x.t().dot(x);
        let b_x = self.own.as_ref().map(|own| own.b.dot(x));
        self.cache = Some(BlockCache {
            x: x.clone(),
            xtx,
            b_x,
            counted_lambda,
        });
    }
}

impl<'a> BlockObjective for FactorBlockObjective<'a> {
    fn evaluate(&mut self, x: &Array2<f64>) -> Option<f64> {
        let mut counted_lambda = Vec::with_capacity(self.counted.len());
        let mut total = 0.0;
        for &(i, j, y) in &self.counted {
            let lam = Self::row_dot(x, i, self.other, j);
            if lam < self.delta_floor {
                return None;
            }
            counted_lambda.push(lam);
            total -= y * lam.ln();
        }
        total += self
            .linear
            .iter()
            .zip(x.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>();

        let xtx = x.t().dot(x);
        let mut b_x = None;
        if let Some(own) = &self.own {
            let bx = own.b.dot(x);
            let gram_sq: f64 = xtx.iter().map(|v| v * v).sum();
            let inner: f64 = x.iter().zip(bx.iter()).map(|(a, b)| a * b).sum();
            let b_sq: f64 = own.b.iter().map(|v| v * v).sum();
            total += 0.5 * own.rho * (gram_sq - 2.0 * inner + b_sq);
            b_x = Some(bx);
        }
        if let Some(cross) = &self.cross {
            let inner_gram: f64 = xtx
                .iter()
                .zip(cross.gram_other.iter())
                .map(|(a, b)| a * b)
                .sum();
            let inner: f64 = x.iter().zip(cross.b_other.iter()).map(|(a, b)| a * b).sum();
            total += 0.5 * cross.rho * (inner_gram - 2.0 * inner + cross.b_norm_sq);
        }
        self.cache = Some(BlockCache {
            x: x.clone(),
            xtx,
            b_x,
            counted_lambda,
        });
        Some(total)
    }

    fn gradient(&mut self, x: &Array2<f64>) -> Array2<f64> {
        let hit = matches!(&self.cache, Some(c) if c.x == *x);
        if !hit {
            self.rebuild_cache(x);
        }
        let cache = self.cache.as_ref().expect("cache populated above");

        let mut g = self.linear.clone();
        for (k, &(i, j, y)) in self.counted.iter().enumerate() {
            let w = y / cache.counted_lambda[k].max(self.delta_floor);
            for f in 0..g.ncols() {
                g[(i, f)] -= w * self.other[(j, f)];
            }
        }
        if let Some(own) = &self.own {
            let xg = x.dot(&cache.xtx);
            let bx = cache.b_x.as_ref().expect("own gram cached with b_x");
            g.zip_mut_with(&(xg - bx), |gi, t| *gi += 2.0 * own.rho * t);
        }
        if let Some(cross) = &self.cross {
            let xg = x.dot(&cross.gram_other);
            g.zip_mut_with(&(xg - &cross.b_other), |gi, t| *gi += cross.rho * t);
        }
        g
    }
}
