//! Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres with
//! row/column potentials, O(n^3)).

use ndarray::Array2;

/// Returns `assignment` with `assignment[row] = column` minimizing the total
/// cost. The matrix must be square.
pub fn min_cost_assignment(cost: &Array2<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "cost matrix must be square");
    if n == 0 {
        return Vec::new();
    }
    // 1-based bookkeeping; index 0 is the virtual source column.
    let mut row_pot = vec![0.0; n + 1];
    let mut col_pot = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut min_slack = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - row_pot[i0] - col_pot[j];
                if cur < min_slack[j] {
                    min_slack[j] = cur;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    row_pot[matched_row[j]] += delta;
                    col_pot[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[matched_row[j] - 1] = j - 1;
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    fn total(cost: &Array2<f64>, a: &[usize]) -> f64 {
        a.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum()
    }

    #[test]
    fn textbook_case() {
        let cost = array![[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let a = min_cost_assignment(&cost);
        assert_eq!(total(&cost, &a), 5.0);
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = crate::seeded_rng(8);
        for _ in 0..200 {
            let n = rng.random_range(1..=6);
            let cost = Array2::from_shape_simple_fn((n, n), || rng.random_range(0..10) as f64);
            let a = min_cost_assignment(&cost);
            let mut seen = a.clone();
            seen.sort_unstable();
            assert_eq!(seen, (0..n).collect::<Vec<_>>());
            let best = permutations(n)
                .iter()
                .map(|p| total(&cost, p))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(total(&cost, &a), best);
        }
    }
}
