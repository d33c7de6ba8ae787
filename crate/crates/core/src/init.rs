//! Scale-aware initialization of the factors from a truncated SVD of the
//! detection-corrected count surrogate, plus feasible starting values for
//! the detection coefficients and the auxiliary blocks.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::types::{block_matrix, AuxBlock, AuxState, Block, FactorPair, FeatureMatrix, SolverConfig};

/// Fill value used when the counts are identically zero and the SVD start
/// carries no information.
const ZERO_DATA_FILL: f64 = 1e-2;

/// Rank-F truncation of the surrogate `y_sum / (M p0)` mapped to nonnegative
/// factors `U = |U_F| S_F^{1/2}`, `V = |V_F| S_F^{1/2}`.
///
/// The SVD sign ambiguity is resolved by making the largest-magnitude entry
/// of each left singular vector positive before taking absolute values, so
/// the initialization is deterministic.
pub fn scale_aware_init(
    y_sum: &Array2<f64>,
    m: usize,
    p0: f64,
    rank: usize,
) -> Result<FactorPair> {
    let (i_dim, j_dim) = y_sum.dim();
    if rank == 0 || rank > i_dim.min(j_dim) {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} must lie in [1, min(I, J) = {}]",
            i_dim.min(j_dim)
        )));
    }
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::InvalidArgument(format!("p0 must be in (0, 1), got {p0}")));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("replicate count must be >= 1".into()));
    }

    if y_sum.iter().all(|&y| y == 0.0) {
        return FactorPair::new(
            Array2::from_elem((i_dim, rank), ZERO_DATA_FILL),
            Array2::from_elem((j_dim, rank), ZERO_DATA_FILL),
        );
    }

    let lambda_hat = y_sum / (m as f64 * p0);
    let mut decomp = linalg::svd(&lambda_hat);
    fix_signs(&mut decomp);

    let mut u = Array2::zeros((i_dim, rank));
    let mut v = Array2::zeros((j_dim, rank));
    for f in 0..rank {
        let scale = decomp.s[f].sqrt();
        for i in 0..i_dim {
            u[(i, f)] = decomp.u[(i, f)].abs() * scale;
        }
        for j in 0..j_dim {
            v[(j, f)] = decomp.vt[(f, j)].abs() * scale;
        }
    }
    FactorPair::new(u, v)
}

fn fix_signs(decomp: &mut linalg::Svd) {
    for f in 0..decomp.s.len() {
        let col = decomp.u.column(f);
        let mut best = 0usize;
        for i in 0..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            for i in 0..decomp.u.nrows() {
                decomp.u[(i, f)] = -decomp.u[(i, f)];
            }
            for j in 0..decomp.vt.ncols() {
                decomp.vt[(f, j)] = -decomp.vt[(f, j)];
            }
        }
    }
}

/// Draw detection coefficients uniformly in [0, 1]^R and rescale so the
/// implied probabilities land inside [0, 1]. A zero feature matrix leaves
/// the draw unscaled and warns, since every probability is then zero anyway.
pub fn init_alpha(z: &FeatureMatrix, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = Array1::from_shape_fn(z.n_features(), |_| rng.random_range(0.0..1.0));
    normalize_alpha(z, alpha)
}

/// Scale `alpha` so that `max(Z alpha) <= 1` whenever the products exceed 1.
pub fn normalize_alpha(z: &FeatureMatrix, alpha: Array1<f64>) -> Array1<f64> {
    if z.matrix().iter().all(|&v| v == 0.0) {
        log::warn!("feature matrix is identically zero; detection probabilities start at 0");
        return alpha;
    }
    let products = z.matrix().dot(&alpha);
    let max = products.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max > 1.0 {
        alpha / max
    } else {
        alpha
    }
}

/// Feasible auxiliary start: `A_X = M_X(U0, V0)` so every initial residual is
/// zero, scaled duals at zero, penalties at their configured initial values.
pub fn init_aux(factors: &FactorPair, config: &SolverConfig) -> AuxState {
    let make = |block: Block| {
        let m_x = block_matrix(block, &factors.u, &factors.v);
        AuxBlock {
            w: Array2::zeros(m_x.dim()),
            a: m_x,
            rho: *config.rho0.get(block),
            lambda: *config.lambda.get(block),
            increase_count: 0,
        }
    };
    AuxState {
        uu: make(Block::UU),
        uv: make(Block::UV),
        vv: make(Block::VV),
    }
}
