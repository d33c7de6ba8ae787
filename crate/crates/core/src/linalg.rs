//! Dense linear algebra helpers: thin SVD via one-sided Jacobi rotations and
//! the SVD-based pseudo-inverse.
//!
//! One-sided Jacobi orthogonalizes the columns of the working matrix; it is
//! slow compared to blocked LAPACK kernels but fully deterministic and
//! accurate to machine precision, which is what the initialization and the
//! detection solver need at the problem sizes handled here.

use ndarray::{Array1, Array2};

/// Thin SVD `a = u * diag(s) * vt` with singular values sorted descending.
/// `u` is m x k and `vt` is k x n with k = min(m, n). Columns of `u`
/// associated with zero singular values are left as zero vectors.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub vt: Array2<f64>,
}

impl Svd {
    /// Rank under a relative singular-value cutoff.
    pub fn rank(&self, rel_cutoff: f64) -> usize {
        let smax = self.s.iter().cloned().fold(0.0, f64::max);
        if smax == 0.0 {
            return 0;
        }
        self.s.iter().filter(|&&s| s > rel_cutoff * smax).count()
    }
}

pub fn svd(a: &Array2<f64>) -> Svd {
    let (m, n) = a.dim();
    if m >= n {
        svd_tall(a)
    } else {
        // Work on the transpose and swap the factors back.
        let t = svd_tall(&a.t().to_owned());
        Svd {
            u: t.vt.t().to_owned(),
            s: t.s,
            vt: t.u.t().to_owned(),
        }
    }
}

/// One-sided Jacobi on a tall (m >= n) matrix.
fn svd_tall(a: &Array2<f64>) -> Svd {
    let (m, n) = a.dim();
    let mut g = a.clone();
    let mut v = Array2::<f64>::eye(n);

    let eps = f64::EPSILON;
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..m {
                    let gp = g[(i, p)];
                    let gq = g[(i, q)];
                    app += gp * gp;
                    aqq += gq * gq;
                    apq += gp * gq;
                }
                if apq == 0.0 {
                    continue;
                }
                let denom = (app * aqq).sqrt();
                if denom > 0.0 {
                    off = off.max(apq.abs() / denom);
                }
                if apq.abs() <= eps * denom {
                    continue;
                }
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let gp = g[(i, p)];
                    let gq = g[(i, q)];
                    g[(i, p)] = c * gp - s * gq;
                    g[(i, q)] = s * gp + c * gq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if off <= eps * 8.0 {
            break;
        }
    }

    // Column norms are the singular values; normalize to get U.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| g[(i, j)] * g[(i, j)]).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());

    let mut u = Array2::<f64>::zeros((m, n));
    let mut s = Array1::<f64>::zeros(n);
    let mut vt = Array2::<f64>::zeros((n, n));
    for (k, &j) in order.iter().enumerate() {
        let sigma = norms[j];
        s[k] = sigma;
        if sigma > 0.0 {
            for i in 0..m {
                u[(i, k)] = g[(i, j)] / sigma;
            }
        }
        for i in 0..n {
            vt[(k, i)] = v[(i, j)];
        }
    }
    Svd { u, s, vt }
}

/// Moore-Penrose pseudo-inverse with a relative singular-value cutoff.
/// Returns the pseudo-inverse together with the numerical rank.
pub fn pinv(a: &Array2<f64>, rel_cutoff: f64) -> (Array2<f64>, usize) {
    let decomp = svd(a);
    let smax = decomp.s.iter().cloned().fold(0.0, f64::max);
    let cutoff = rel_cutoff * smax;
    let k = decomp.s.len();
    let (m, n) = a.dim();
    let mut out = Array2::<f64>::zeros((n, m));
    let mut rank = 0;
    for r in 0..k {
        let sigma = decomp.s[r];
        if sigma <= cutoff || sigma == 0.0 {
            continue;
        }
        rank += 1;
        let inv = 1.0 / sigma;
        for i in 0..n {
            let vi = decomp.vt[(r, i)];
            if vi == 0.0 {
                continue;
            }
            for j in 0..m {
                out[(i, j)] += vi * inv * decomp.u[(j, r)];
            }
        }
    }
    (out, rank)
}

pub fn frobenius_norm(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Array2<f64> {
        Array2::from_shape_fn((m, n), |_| rng.random_range(-1.0..1.0))
    }

    fn reconstruct(d: &Svd) -> Array2<f64> {
        let k = d.s.len();
        let mut us = d.u.clone();
        for r in 0..k {
            for i in 0..us.nrows() {
                us[(i, r)] *= d.s[r];
            }
        }
        us.dot(&d.vt)
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(m, n) in &[(6, 4), (4, 6), (9, 9), (30, 8), (17, 29)] {
            let a = random_matrix(&mut rng, m, n);
            let d = svd(&a);
            let err = frobenius_norm(&(&reconstruct(&d) - &a));
            assert!(err < 1e-11, "reconstruction error {err} for {m}x{n}");
            // singular values sorted descending
            for r in 1..d.s.len() {
                assert!(d.s[r] <= d.s[r - 1] + 1e-14);
            }
            // orthonormal factors
            let utu = d.u.t().dot(&d.u);
            let vvt = d.vt.dot(&d.vt.t());
            for i in 0..utu.nrows() {
                for j in 0..utu.ncols() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((utu[(i, j)] - expect).abs() < 1e-12);
                    assert!((vvt[(i, j)] - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn svd_known_diagonal() {
        let a = array![[3.0, 0.0], [0.0, 2.0], [0.0, 0.0]];
        let d = svd(&a);
        assert!((d.s[0] - 3.0).abs() < 1e-14);
        assert!((d.s[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn pinv_solves_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 12, 3);
        let (api, rank) = pinv(&a, 1e-12);
        assert_eq!(rank, 3);
        let b = Array1::from_shape_fn(12, |_| rng.random_range(-1.0..1.0));
        let x = api.dot(&b);
        // normal equations: A^T (A x - b) = 0
        let resid = a.t().dot(&(a.dot(&x) - &b));
        for v in resid.iter() {
            assert!(v.abs() < 1e-10, "normal equation residual {v}");
        }
    }

    #[test]
    fn pinv_handles_rank_deficiency() {
        // second column is a multiple of the first
        let a = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let (api, rank) = pinv(&a, 1e-12);
        assert_eq!(rank, 1);
        // A A+ A = A
        let back = a.dot(&api).dot(&a);
        let err = frobenius_norm(&(&back - &a));
        assert!(err < 1e-12);
    }

    #[test]
    fn pinv_of_zero_matrix_is_zero() {
        let a = Array2::<f64>::zeros((4, 2));
        let (api, rank) = pinv(&a, 1e-12);
        assert_eq!(rank, 0);
        assert!(api.iter().all(|&x| x == 0.0));
    }
}
