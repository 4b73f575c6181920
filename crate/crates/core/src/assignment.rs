//! Rectangular min-cost linear assignment.
//!
//! [`solve`] is the shortest-augmenting-path form of the Hungarian method
//! (O(n²m) for an n×m problem with n ≤ m). Tall matrices are transposed, which
//! is equivalent to padding the missing columns with zero cost.

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix(Matrix<f64>);

impl CostMatrix {
    /// Panics on an empty matrix or a non-finite entry.
    pub fn new(costs: Matrix<f64>) -> Self {
        assert!(
            costs.rows() >= 1 && costs.cols() >= 1,
            "cost matrix must have at least one row and one column"
        );
        assert!(
            costs.iter().all(|c| c.is_finite()),
            "cost matrix contains a non-finite entry"
        );
        Self(costs)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        Self::new(Matrix::from_rows(rows))
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }
}

/// Matched `(row, col)` pairs, sorted by row.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
}

impl Assignment {
    /// Sum of the matched costs, accumulated in row order.
    pub fn total_cost(&self, costs: &CostMatrix) -> f64 {
        self.pairs.iter().map(|&(r, c)| costs.get(r, c)).sum()
    }

    pub fn col_of(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == row).map(|p| p.1)
    }
}

pub fn solve(costs: &CostMatrix) -> Assignment {
    let (rows, cols) = (costs.rows(), costs.cols());
    let mut pairs = if rows <= cols {
        hungarian(rows, cols, |i, j| costs.get(i, j))
    } else {
        hungarian(cols, rows, |i, j| costs.get(j, i))
            .into_iter()
            .map(|(c, r)| (r, c))
            .collect()
    };
    pairs.sort_unstable();
    Assignment { pairs }
}

/// Potentials-based Hungarian method for `n ≤ m`; every row gets matched.
/// Among equal reduced costs the lowest column index wins, which makes the
/// output a pure function of the input.
fn hungarian(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    debug_assert!(n <= m);
    // 1-based with a virtual column 0, following the classic formulation.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of_col = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    (1..=m)
        .filter(|&j| row_of_col[j] != 0)
        .map(|j| (row_of_col[j] - 1, j - 1))
        .collect()
}

/// Round-based sensing assignment: each round matches at most one SU to each
/// band by maximizing `values` over the SUs that still have capacity, until
/// every SU is used up or has no band left to take.
///
/// Returns an N×V membership matrix (`true` = SU senses band).
pub fn iterated_sensing_assignment(values: &Matrix<f64>, capacity: usize) -> Matrix<bool> {
    let (n, bands) = (values.rows(), values.cols());
    assert!(n >= 1 && bands >= 1, "empty value matrix");
    assert!(capacity >= 1, "SU capacity must be at least 1");
    assert!(
        values.iter().all(|v| v.is_finite()),
        "non-finite sensing value"
    );

    let mut assigned = Matrix::filled(n, bands, false);
    let mut remaining = vec![capacity; n];
    // Exceeds the spread of any legal total, so a round never prefers a
    // repeated (SU, band) pair over a fresh one.
    let forbidden = 1.0 + 2.0 * values.iter().map(|v| v.abs()).sum::<f64>();

    loop {
        let eligible: Vec<usize> = (0..n)
            .filter(|&i| remaining[i] > 0 && (0..bands).any(|k| !assigned[(i, k)]))
            .collect();
        if eligible.is_empty() {
            break;
        }
        let costs = CostMatrix::new(Matrix::from_fn(eligible.len(), bands, |r, k| {
            let i = eligible[r];
            if assigned[(i, k)] {
                forbidden
            } else {
                -values[(i, k)]
            }
        }));
        let mut progressed = false;
        for (r, k) in solve(&costs).pairs {
            let i = eligible[r];
            if !assigned[(i, k)] {
                assigned[(i, k)] = true;
                remaining[i] -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    assigned
}
