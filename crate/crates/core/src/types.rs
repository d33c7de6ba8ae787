//! Shared data model: count tensors, feature matrices, latent factors,
//! detection state, auxiliary ADMM blocks, solver configuration, and the
//! fit result with its per-iteration traces.
//!
//! Indexing convention: a pair (i, j) maps to the flat index r = i*J + j
//! (row-major). Every vectorized quantity of length I*J follows it.

use ndarray::{Array1, Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flat index for a pair (i, j) with row-major layout.
pub fn flatten_index(i: usize, j: usize, i_dim: usize, j_dim: usize) -> Result<usize> {
    if i >= i_dim || j >= j_dim {
        return Err(Error::InvalidArgument(format!(
            "index ({i}, {j}) out of range for {i_dim}x{j_dim}"
        )));
    }
    Ok(i * j_dim + j)
}

/// Inverse of [`flatten_index`].
pub fn unflatten_index(r: usize, i_dim: usize, j_dim: usize) -> Result<(usize, usize)> {
    if r >= i_dim * j_dim {
        return Err(Error::InvalidArgument(format!(
            "flat index {r} out of range for {i_dim}x{j_dim}"
        )));
    }
    Ok((r / j_dim, r % j_dim))
}

/// The three structured blocks carrying sparsity penalties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    UU,
    UV,
    VV,
}

impl Block {
    pub const ALL: [Block; 3] = [Block::UU, Block::UV, Block::VV];

    pub fn name(self) -> &'static str {
        match self {
            Block::UU => "UU",
            Block::UV => "UV",
            Block::VV => "VV",
        }
    }
}

/// One value per structured block.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerBlock<T> {
    pub uu: T,
    pub uv: T,
    pub vv: T,
}

impl<T> PerBlock<T> {
    pub fn new(uu: T, uv: T, vv: T) -> Self {
        Self { uu, uv, vv }
    }

    pub fn get(&self, block: Block) -> &T {
        match block {
            Block::UU => &self.uu,
            Block::UV => &self.uv,
            Block::VV => &self.vv,
        }
    }

    pub fn get_mut(&mut self, block: Block) -> &mut T {
        match block {
            Block::UU => &mut self.uu,
            Block::UV => &mut self.uv,
            Block::VV => &mut self.vv,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> PerBlock<U> {
        PerBlock {
            uu: f(&self.uu),
            uv: f(&self.uv),
            vv: f(&self.vv),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Block, &T)> {
        Block::ALL.iter().map(move |&b| (b, self.get(b)))
    }
}

impl PerBlock<f64> {
    pub fn uniform(value: f64) -> Self {
        Self::new(value, value, value)
    }
}

/// Observed count tensor with a missing-entry mask and a cached replicate sum.
///
/// Missing entries are tracked by the mask, never by sentinel values: the
/// stored `y` at a masked slot is 0 until the solver imputes it, and the
/// cached `y_sum` then includes the imputed values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountData {
    i_dim: usize,
    j_dim: usize,
    m_dim: usize,
    y: Array3<f64>,
    missing: Array3<bool>,
    y_sum: Array2<f64>,
}

impl CountData {
    pub fn new(y: Array3<f64>, missing: Array3<bool>) -> Result<Self> {
        let (i_dim, j_dim, m_dim) = y.dim();
        if missing.dim() != (i_dim, j_dim, m_dim) {
            return Err(Error::DimensionMismatch(format!(
                "mask shape {:?} does not match counts shape {:?}",
                missing.dim(),
                y.dim()
            )));
        }
        if i_dim == 0 || j_dim == 0 || m_dim == 0 {
            return Err(Error::InvalidArgument("empty count tensor".into()));
        }
        for &v in y.iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!("invalid count value {v}")));
            }
        }
        let mut data = Self {
            i_dim,
            j_dim,
            m_dim,
            y,
            missing,
            y_sum: Array2::zeros((i_dim, j_dim)),
        };
        data.y_sum = compute_y_sum(&data);
        Ok(data)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.i_dim, self.j_dim, self.m_dim)
    }

    pub fn i_dim(&self) -> usize {
        self.i_dim
    }

    pub fn j_dim(&self) -> usize {
        self.j_dim
    }

    pub fn replicates(&self) -> usize {
        self.m_dim
    }

    pub fn y(&self) -> &Array3<f64> {
        &self.y
    }

    pub fn missing(&self) -> &Array3<bool> {
        &self.missing
    }

    pub fn y_sum(&self) -> &Array2<f64> {
        &self.y_sum
    }

    pub fn missing_rate(&self) -> f64 {
        let total = (self.i_dim * self.j_dim * self.m_dim) as f64;
        self.missing.iter().filter(|&&m| m).count() as f64 / total
    }

    /// Write the conditional expectation `p_ij * lambda_ij` into every masked
    /// slot and refresh the cached replicate sum so it includes the imputed
    /// values.
    pub fn impute_missing(&mut self, p: &Array2<f64>, lambda: &Array2<f64>) -> Result<()> {
        if p.dim() != (self.i_dim, self.j_dim) || lambda.dim() != (self.i_dim, self.j_dim) {
            return Err(Error::DimensionMismatch(
                "imputation matrices must be I x J".into(),
            ));
        }
        if !self.missing.iter().any(|&m| m) {
            return Ok(());
        }
        for i in 0..self.i_dim {
            for j in 0..self.j_dim {
                let value = p[(i, j)] * lambda[(i, j)];
                for m in 0..self.m_dim {
                    if self.missing[(i, j, m)] {
                        self.y[(i, j, m)] = value;
                    }
                }
            }
        }
        // After imputation the cache is the plain replicate sum: masked slots
        // now hold their imputed conditional expectations.
        for i in 0..self.i_dim {
            for j in 0..self.j_dim {
                let mut s = 0.0;
                for m in 0..self.m_dim {
                    s += self.y[(i, j, m)];
                }
                self.y_sum[(i, j)] = s;
            }
        }
        Ok(())
    }
}

/// Replicate sum over non-missing entries.
pub fn compute_y_sum(data: &CountData) -> Array2<f64> {
    let (i_dim, j_dim, m_dim) = data.dims();
    let mut out = Array2::zeros((i_dim, j_dim));
    for i in 0..i_dim {
        for j in 0..j_dim {
            let mut s = 0.0;
            for m in 0..m_dim {
                if !data.missing[(i, j, m)] {
                    s += data.y[(i, j, m)];
                }
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// Detectability features, one row per (i, j) pair in flat order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    i_dim: usize,
    j_dim: usize,
    z: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(i_dim: usize, j_dim: usize, z: Array2<f64>) -> Result<Self> {
        if z.nrows() != i_dim * j_dim {
            return Err(Error::DimensionMismatch(format!(
                "feature matrix has {} rows, expected {}",
                z.nrows(),
                i_dim * j_dim
            )));
        }
        if z.ncols() == 0 {
            return Err(Error::InvalidArgument("feature dimension must be >= 1".into()));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        Ok(Self { i_dim, j_dim, z })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.z
    }

    pub fn n_features(&self) -> usize {
        self.z.ncols()
    }

    pub fn pair_dims(&self) -> (usize, usize) {
        (self.i_dim, self.j_dim)
    }
}

/// Nonnegative latent factors U (I x F) and V (J x F).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorPair {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

impl FactorPair {
    pub fn new(u: Array2<f64>, v: Array2<f64>) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "rank mismatch between U ({}) and V ({})",
                u.ncols(),
                v.ncols()
            )));
        }
        if u.iter().chain(v.iter()).any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidArgument(
                "factors must be nonnegative and finite".into(),
            ));
        }
        Ok(Self { u, v })
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    /// Intensity matrix UV^T.
    pub fn lambda(&self) -> Array2<f64> {
        self.u.dot(&self.v.t())
    }
}

/// Detection coefficients with the associated probability vector and scaled
/// dual, all in flat (i, j) order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionState {
    pub alpha: Array1<f64>,
    pub p: Array1<f64>,
    pub omega: Array1<f64>,
}

impl DetectionState {
    pub fn p_matrix(&self, i_dim: usize, j_dim: usize) -> Array2<f64> {
        Array2::from_shape_vec((i_dim, j_dim), self.p.to_vec())
            .expect("p vector length must equal I*J")
    }
}

/// One auxiliary split block: the thresholded matrix, its scaled dual, the
/// penalty weight, and the sparsity weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxBlock {
    pub a: Array2<f64>,
    pub w: Array2<f64>,
    pub rho: f64,
    pub lambda: f64,
    pub increase_count: u32,
}

impl AuxBlock {
    /// A block with zero sparsity weight carries no penalty machinery.
    pub fn is_active(&self) -> bool {
        self.lambda > 0.0
    }
}

/// Auxiliary state for all three structured blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxState {
    pub uu: AuxBlock,
    pub uv: AuxBlock,
    pub vv: AuxBlock,
}

impl AuxState {
    pub fn block(&self, block: Block) -> &AuxBlock {
        match block {
            Block::UU => &self.uu,
            Block::UV => &self.uv,
            Block::VV => &self.vv,
        }
    }

    pub fn block_mut(&mut self, block: Block) -> &mut AuxBlock {
        match block {
            Block::UU => &mut self.uu,
            Block::UV => &mut self.uv,
            Block::VV => &mut self.vv,
        }
    }

    pub fn rho(&self) -> PerBlock<f64> {
        PerBlock::new(self.uu.rho, self.uv.rho, self.vv.rho)
    }
}

/// The structured matrix M_X at the current factors.
pub fn block_matrix(block: Block, u: &Array2<f64>, v: &Array2<f64>) -> Array2<f64> {
    match block {
        Block::UU => u.dot(&u.t()),
        Block::UV => u.dot(&v.t()),
        Block::VV => v.dot(&v.t()),
    }
}

/// Solver configuration. Defaults follow the synthetic-study protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Latent rank F.
    pub rank: usize,
    /// Penalty growth factor (> 1).
    pub gamma: f64,
    /// Assumed average detection probability used by the warm start.
    pub p0: f64,
    /// Sparsity weights per block; 0 disables the block entirely.
    pub lambda: PerBlock<f64>,
    /// Initial penalty parameters per block.
    pub rho0: PerBlock<f64>,
    /// Exponent of the vanishing residual tolerance, strictly in (1/2, 2/3).
    pub beta: f64,
    /// Scale of the residual tolerance eps_X^k = eps0_X * rho_X^{-beta}.
    pub eps0: PerBlock<f64>,
    /// Lower floor for intensities at counted pairs.
    pub delta_floor: f64,
    pub max_outer: usize,
    /// Inner iteration cap for the projected-gradient blocks.
    pub s_max: usize,
    /// Maximal step sizes; `None` derives them from the replicate count.
    pub t_max_u: Option<f64>,
    pub t_max_v: Option<f64>,
    pub armijo_c: f64,
    pub t_min: f64,
    /// Inner stopping tolerance on the iterate change of a factor block.
    pub step_tol: f64,
    pub inner_alpha_tol: f64,
    pub inner_alpha_max_iter: usize,
    /// Penalty parameter of the inner detection-coefficient ADMM. `None`
    /// scales it to the problem as `max(1, mean(M lambda))`; a fixed small
    /// value stalls the inner iteration when the intensities are large.
    pub alpha_rho: Option<f64>,
    pub outer_obj_tol: f64,
    pub outer_var_tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rank: 8,
            gamma: 2.0,
            p0: 0.5,
            lambda: PerBlock::uniform(1e-2),
            rho0: PerBlock::uniform(1e-3),
            beta: 0.6,
            eps0: PerBlock::uniform(1.0),
            delta_floor: 1e-10,
            max_outer: 100,
            s_max: 3000,
            t_max_u: None,
            t_max_v: None,
            armijo_c: 1e-5,
            t_min: 1e-7,
            step_tol: 1e-7,
            inner_alpha_tol: 1e-6,
            inner_alpha_max_iter: 2000,
            alpha_rho: None,
            outer_obj_tol: 1e-7,
            outer_var_tol: 1e-7,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.rank == 0 {
            return fail("rank must be >= 1".into());
        }
        if !(self.gamma > 1.0) {
            return fail(format!("gamma must be > 1, got {}", self.gamma));
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return fail(format!("p0 must be in (0, 1), got {}", self.p0));
        }
        if !(self.beta > 0.5 && self.beta < 2.0 / 3.0) {
            return fail(format!("beta must lie strictly in (1/2, 2/3), got {}", self.beta));
        }
        for (block, &l) in self.lambda.iter() {
            if !(l >= 0.0 && l.is_finite()) {
                return fail(format!("lambda_{} must be >= 0, got {l}", block.name()));
            }
        }
        for (block, &r) in self.rho0.iter() {
            if !(r > 0.0 && r.is_finite()) {
                return fail(format!("rho0_{} must be > 0, got {r}", block.name()));
            }
        }
        for (block, &e) in self.eps0.iter() {
            if !(e > 0.0 && e.is_finite()) {
                return fail(format!("eps0_{} must be > 0, got {e}", block.name()));
            }
        }
        for (name, v) in [
            ("delta_floor", self.delta_floor),
            ("armijo_c", self.armijo_c),
            ("t_min", self.t_min),
            ("step_tol", self.step_tol),
            ("inner_alpha_tol", self.inner_alpha_tol),
            ("outer_obj_tol", self.outer_obj_tol),
            ("outer_var_tol", self.outer_var_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be > 0, got {v}"));
            }
        }
        for (name, v) in [
            ("t_max_u", self.t_max_u),
            ("t_max_v", self.t_max_v),
            ("alpha_rho", self.alpha_rho),
        ] {
            if let Some(t) = v {
                if !(t > 0.0 && t.is_finite()) {
                    return fail(format!("{name} must be > 0, got {t}"));
                }
            }
        }
        if self.max_outer == 0 || self.s_max == 0 || self.inner_alpha_max_iter == 0 {
            return fail("iteration caps must be >= 1".into());
        }
        Ok(())
    }

    /// Maximal projected-gradient step size keyed to the replicate count:
    /// 1e-3, 1e-4, 1e-5 at M = 1, 5, 10, log-linear in between, clamped at
    /// the endpoints.
    pub fn step_size_cap(m: usize) -> f64 {
        let m = m as f64;
        let log_t = if m <= 1.0 {
            -3.0
        } else if m <= 5.0 {
            -3.0 + (m - 1.0) / 4.0 * (-1.0)
        } else if m <= 10.0 {
            -4.0 + (m - 5.0) / 5.0 * (-1.0)
        } else {
            -5.0
        };
        10f64.powf(log_t)
    }

    pub fn t_max_for(&self, m: usize) -> (f64, f64) {
        let cap = Self::step_size_cap(m);
        (self.t_max_u.unwrap_or(cap), self.t_max_v.unwrap_or(cap))
    }
}

/// First-order optimality residuals of the split formulation, evaluated at
/// the current iterates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// || min(U, grad_U F) ||_F
    pub u_stationarity: f64,
    /// || min(V, grad_V F) ||_F
    pub v_stationarity: f64,
    /// Distance of the unscaled dual from the penalty subdifferential,
    /// with zero entries checked against the threshold retention condition.
    pub a_gap: PerBlock<f64>,
    /// || M_X - A_X ||_F
    pub primal: PerBlock<f64>,
    /// || Z^T omega ||
    pub alpha_gradient: f64,
    /// Stationarity of the detection-probability block.
    pub p_stationarity: f64,
    /// || p - Z alpha ||
    pub alpha_primal: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        [
            self.u_stationarity,
            self.v_stationarity,
            self.a_gap.uu,
            self.a_gap.uv,
            self.a_gap.vv,
            self.primal.uu,
            self.primal.uv,
            self.primal.vv,
            self.alpha_gradient,
            self.p_stationarity,
            self.alpha_primal,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PenaltyEvent {
    pub iter: usize,
    pub block: Block,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Tolerance,
    MaxOuter,
}

/// Per-iteration traces recorded by the outer loop. Every vector has one
/// entry per completed outer iteration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    /// Negative log-likelihood up to additive constants.
    pub nll: Vec<f64>,
    /// || M_X - A_X ||_F after the block updates.
    pub primal_residual: PerBlock<Vec<f64>>,
    pub rho: PerBlock<Vec<f64>>,
    pub penalty_events: Vec<PenaltyEvent>,
    pub kkt: Vec<KktResiduals>,
    /// || (M_X + W_X) - A_X ||_F straight out of the thresholding step.
    pub prox_residual: PerBlock<Vec<f64>>,
    /// The shrinkage bound (3/2) sqrt(n_X) (lambda_X / rho_X)^{2/3}.
    pub prox_bound: PerBlock<Vec<f64>>,
    /// Smooth objective before the U step, after the U step, after the V step.
    pub f_before: Vec<f64>,
    pub f_after_u: Vec<f64>,
    pub f_after_v: Vec<f64>,
    /// Augmented Lagrangian right after the detection update and at the end
    /// of the iteration, plus the dual ascent contribution in between.
    pub l_start: Vec<f64>,
    pub l_end: Vec<f64>,
    pub dual_bump: Vec<f64>,
    pub delta_u: Vec<f64>,
    pub delta_v: Vec<f64>,
    pub delta_alpha: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.nll.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nll.is_empty()
    }
}

/// Fitted variables plus traces and the termination record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub factors: FactorPair,
    pub detection: DetectionState,
    pub aux: AuxState,
    pub trace: Trace,
    pub converged: bool,
    pub reason: StopReason,
    pub outer_iterations: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn flatten_identity_case() {
        assert_eq!(flatten_index(0, 0, 3, 5).unwrap(), 0);
    }

    #[test]
    fn flatten_arithmetic() {
        assert_eq!(flatten_index(2, 3, 4, 5).unwrap(), 13);
    }

    #[test]
    fn unflatten_inverse() {
        assert_eq!(unflatten_index(13, 4, 5).unwrap(), (2, 3));
    }

    #[test]
    fn flatten_round_trips() {
        let (i_dim, j_dim) = (7, 11);
        for i in 0..i_dim {
            for j in 0..j_dim {
                let r = flatten_index(i, j, i_dim, j_dim).unwrap();
                assert_eq!(unflatten_index(r, i_dim, j_dim).unwrap(), (i, j));
            }
        }
    }

    #[test]
    fn flatten_rejects_out_of_range() {
        assert!(flatten_index(4, 0, 4, 5).is_err());
        assert!(flatten_index(0, 5, 4, 5).is_err());
        assert!(unflatten_index(20, 4, 5).is_err());
    }

    #[test]
    fn y_sum_skips_missing() {
        // y = [2, 3, 5] with the middle replicate missing -> 7
        let y = Array3::from_shape_vec((1, 1, 3), vec![2.0, 3.0, 5.0]).unwrap();
        let mut missing = Array3::from_elem((1, 1, 3), false);
        missing[(0, 0, 1)] = true;
        let data = CountData::new(y, missing).unwrap();
        assert_eq!(data.y_sum()[(0, 0)], 7.0);
    }

    #[test]
    fn y_sum_empty_and_single() {
        let y = Array3::from_shape_vec((1, 1, 1), vec![4.0]).unwrap();
        let all_missing = Array3::from_elem((1, 1, 1), true);
        let data = CountData::new(y.clone(), all_missing).unwrap();
        assert_eq!(data.y_sum()[(0, 0)], 0.0);

        let none_missing = Array3::from_elem((1, 1, 1), false);
        let data = CountData::new(y, none_missing).unwrap();
        assert_eq!(data.y_sum()[(0, 0)], 4.0);
    }

    #[test]
    fn impute_updates_cache_with_imputed_values() {
        let y = Array3::from_shape_vec((1, 2, 2), vec![1.0, 2.0, 0.0, 3.0]).unwrap();
        let mut missing = Array3::from_elem((1, 2, 2), false);
        missing[(0, 1, 0)] = true;
        let mut data = CountData::new(y, missing).unwrap();
        assert_eq!(data.y_sum()[(0, 1)], 3.0);

        let p = array![[0.5, 0.5]];
        let lambda = array![[4.0, 4.0]];
        data.impute_missing(&p, &lambda).unwrap();
        assert_eq!(data.y()[(0, 1, 0)], 2.0);
        // cache now includes the imputed entry
        assert_eq!(data.y_sum()[(0, 1)], 5.0);
        // full replicate sum agrees with the cache after imputation
        let mut full = 0.0;
        for m in 0..2 {
            full += data.y()[(0, 1, m)];
        }
        assert_eq!(full, data.y_sum()[(0, 1)]);
        // the spec-level recomputation still skips masked entries
        assert_eq!(compute_y_sum(&data)[(0, 1)], 3.0);
    }

    #[test]
    fn impute_no_missing_is_identity() {
        let y = Array3::from_shape_vec((1, 1, 2), vec![1.0, 2.0]).unwrap();
        let missing = Array3::from_elem((1, 1, 2), false);
        let mut data = CountData::new(y, missing).unwrap();
        let before = data.clone();
        data.impute_missing(&array![[0.5]], &array![[4.0]]).unwrap();
        assert_eq!(data, before);
    }

    #[test]
    fn config_validation_rejects_bad_beta() {
        let mut cfg = SolverConfig::default();
        cfg.beta = 0.5;
        assert!(cfg.validate().is_err());
        cfg.beta = 2.0 / 3.0;
        assert!(cfg.validate().is_err());
        cfg.beta = 0.6;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn step_size_cap_matches_reference_points() {
        assert!((SolverConfig::step_size_cap(1) - 1e-3).abs() < 1e-18);
        assert!((SolverConfig::step_size_cap(5) - 1e-4).abs() < 1e-19);
        assert!((SolverConfig::step_size_cap(10) - 1e-5).abs() < 1e-20);
        let t3 = SolverConfig::step_size_cap(3);
        assert!(t3 < 1e-3 && t3 > 1e-4);
        assert_eq!(SolverConfig::step_size_cap(20), 1e-5);
    }
}
