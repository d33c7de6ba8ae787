//! Exact minimum-cost assignment on a square cost matrix, O(n^3) with
//! row/column potentials. Used to evaluate the permutation-invariant factor
//! error without enumerating permutations.

use ndarray::Array2;

/// Minimum-cost perfect matching. Returns `assign` with `assign[row] = col`
/// and the total cost. The matrix must be square with finite entries.
pub fn min_cost_assignment(cost: &Array2<f64>) -> (Vec<usize>, f64) {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "cost matrix must be square");
    if n == 0 {
        return (Vec::new(), 0.0);
    }

    // Potentials and matching over a virtual 0-th column, 1-indexed.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched = vec![0usize; n + 1]; // matched[col] = row
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![0usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        if matched[j] > 0 {
            assign[matched[j] - 1] = j - 1;
            total += cost[(matched[j] - 1, j - 1)];
        }
    }
    (assign, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute_force(cost: &Array2<f64>) -> f64 {
        let n = cost.nrows();
        let mut cols: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut cols, 0, &mut |perm| {
            let total: f64 = perm.iter().enumerate().map(|(r, &c)| cost[(r, c)]).sum();
            if total < best {
                best = total;
            }
        });
        best
    }

    fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == items.len() {
            visit(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, visit);
            items.swap(k, i);
        }
    }

    #[test]
    fn small_known_case() {
        let cost = array![[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [3.0, 6.0, 9.0]];
        let (assign, total) = min_cost_assignment(&cost);
        assert_eq!(total, brute_force(&cost));
        // distinct columns
        let mut seen = vec![false; 3];
        for &c in &assign {
            assert!(!seen[c]);
            seen[c] = true;
        }
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let n = rng.random_range(1..=6);
            let cost = Array2::from_shape_fn((n, n), |_| rng.random_range(0.0..10.0));
            let (_, total) = min_cost_assignment(&cost);
            let expect = brute_force(&cost);
            assert!((total - expect).abs() < 1e-9, "n={n}: {total} vs {expect}");
        }
    }
}
