//! Minimum-cost bipartite matching (Hungarian method) on rectangular cost
//! matrices with forbidden entries.

use thiserror::Error;

/// Marks a pair that may never be matched.
pub const FORBIDDEN: f64 = f64::INFINITY;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssignmentError {
    #[error("cost matrix has {got} entries, expected {rows}x{cols}")]
    Shape { rows: usize, cols: usize, got: usize },
    #[error("invalid cost {value} at ({row}, {col})")]
    InvalidCost { row: usize, col: usize, value: f64 },
}

/// Row-major matrix of nonnegative costs. [`FORBIDDEN`] entries are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, AssignmentError> {
        if data.len() != rows * cols {
            return Err(AssignmentError::Shape {
                rows,
                cols,
                got: data.len(),
            });
        }
        for (n, &value) in data.iter().enumerate() {
            let valid = (value.is_finite() && value >= 0.0) || value == FORBIDDEN;
            if !valid {
                return Err(AssignmentError::InvalidCost {
                    row: n / cols.max(1),
                    col: n % cols.max(1),
                    value,
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, AssignmentError> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AssignmentError> {
        let cols = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn is_forbidden(&self, row: usize, col: usize) -> bool {
        self.get(row, col) == FORBIDDEN
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    /// Matched `(row, col)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl Assignment {
    pub fn total_cost(&self, costs: &CostMatrix) -> f64 {
        self.pairs.iter().map(|&(r, c)| costs.get(r, c)).sum()
    }

    /// Column matched to `row`, if any.
    pub fn col_of(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == row).map(|p| p.1)
    }
}

/// Square problem solved by the shortest-augmenting-path Hungarian method.
struct Solution {
    /// Column assigned to each row.
    row_to_col: Vec<usize>,
    row_potential: Vec<f64>,
    col_potential: Vec<f64>,
}

/// O(n³) Hungarian method with row/column potentials on a dense square
/// matrix.
fn hungarian(n: usize, weight: impl Fn(usize, usize) -> f64) -> Solution {
    // 1-based working arrays; index 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        col_owner[0] = row;
        let mut current = 0usize;
        let mut min_slack = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[current] = true;
            let owner = col_owner[current];
            let mut delta = f64::INFINITY;
            let mut next = 0usize;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let reduced = weight(owner - 1, col - 1) - u[owner] - v[col];
                if reduced < min_slack[col] {
                    min_slack[col] = reduced;
                    way[col] = current;
                }
                if min_slack[col] < delta {
                    delta = min_slack[col];
                    next = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[col_owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    min_slack[col] -= delta;
                }
            }
            current = next;
            if col_owner[current] == 0 {
                break;
            }
        }
        loop {
            let prev = way[current];
            col_owner[current] = col_owner[prev];
            current = prev;
            if current == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for col in 1..=n {
        if col_owner[col] > 0 {
            row_to_col[col_owner[col] - 1] = col - 1;
        }
    }
    Solution {
        row_to_col,
        row_potential: u[1..].to_vec(),
        col_potential: v[1..].to_vec(),
    }
}

/// Sub-problem over a subset of rows and columns of the original matrix.
struct Subproblem<'a> {
    costs: &'a CostMatrix,
    rows: Vec<usize>,
    cols: Vec<usize>,
    forbidden_weight: f64,
}

impl Subproblem<'_> {
    fn size(&self) -> usize {
        self.rows.len().max(self.cols.len())
    }

    /// Padded weight: dummy cells cost nothing and forbidden cells cost more
    /// than any matching built from allowed cells.
    fn weight(&self, r: usize, c: usize) -> f64 {
        match (self.rows.get(r), self.cols.get(c)) {
            (Some(&row), Some(&col)) => {
                let w = self.costs.get(row, col);
                if w == FORBIDDEN {
                    self.forbidden_weight
                } else {
                    w
                }
            }
            _ => 0.0,
        }
    }

    /// Optimal allowed pairs in original indices, with the objective
    /// `(pair count, total cost)` and a tightness oracle from the duals.
    fn solve(&self) -> (Vec<(usize, usize)>, Solution) {
        let n = self.size();
        let solution = hungarian(n, |r, c| self.weight(r, c));
        let mut pairs = Vec::new();
        for (r, &c) in solution.row_to_col.iter().enumerate() {
            if let (Some(&row), Some(&col)) = (self.rows.get(r), self.cols.get(c)) {
                if !self.costs.is_forbidden(row, col) {
                    pairs.push((row, col));
                }
            }
        }
        (pairs, solution)
    }
}

fn objective(costs: &CostMatrix, pairs: &[(usize, usize)]) -> (usize, f64) {
    (pairs.len(), pairs.iter().map(|&(r, c)| costs.get(r, c)).sum())
}

/// Solves the rectangular assignment problem.
///
/// Among matchings that use no forbidden entry and have maximum size, the
/// one with minimum total cost is returned. Ties are broken towards the
/// lexicographically smallest pair list ordered by `(row, col)`.
pub fn solve_bipartite(costs: &CostMatrix) -> Assignment {
    let (rows, cols) = (costs.rows(), costs.cols());
    if rows == 0 || cols == 0 {
        return Assignment {
            pairs: Vec::new(),
            unmatched_rows: (0..rows).collect(),
            unmatched_cols: (0..cols).collect(),
        };
    }

    let allowed_sum: f64 = (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| costs.get(r, c))
                .filter(|w| w.is_finite())
                .fold(0.0, f64::max)
        })
        .sum();
    let forbidden_weight = 2.0 * allowed_sum + 1.0;
    let scale = forbidden_weight * (rows.max(cols) as f64);
    let tol = 1e-12 * scale.max(1.0);

    let full = Subproblem {
        costs,
        rows: (0..rows).collect(),
        cols: (0..cols).collect(),
        forbidden_weight,
    };
    let (mut current, mut duals) = full.solve();
    let (best_count, best_cost) = objective(costs, &current);

    // Lexicographic refinement. Only edges that are tight under an optimal
    // dual can belong to an optimal matching, so candidates are rare unless
    // the instance has ties.
    let mut fixed: Vec<(usize, usize)> = Vec::new();
    let mut active_rows: Vec<usize> = (0..rows).collect();
    let mut active_cols: Vec<usize> = (0..cols).collect();
    for row in 0..rows {
        let current_col = current.iter().find(|p| p.0 == row).map(|p| p.1);
        let local_row = active_rows.iter().position(|&r| r == row).expect("row is active");
        let candidates: Vec<usize> = active_cols
            .iter()
            .enumerate()
            .filter(|&(_, &col)| current_col.is_none_or(|cc| col < cc) && !costs.is_forbidden(row, col))
            .filter(|&(local_col, &col)| {
                let reduced = costs.get(row, col)
                    - duals.row_potential[local_row]
                    - duals.col_potential[local_col];
                reduced.abs() <= tol
            })
            .map(|(_, &col)| col)
            .collect();

        let mut chosen = None;
        for col in candidates {
            let sub = Subproblem {
                costs,
                rows: active_rows.iter().copied().filter(|&r| r != row).collect(),
                cols: active_cols.iter().copied().filter(|&c| c != col).collect(),
                forbidden_weight,
            };
            let (rest, rest_duals) = sub.solve();
            let mut all = fixed.clone();
            all.push((row, col));
            all.extend(rest.iter().copied());
            let (count, cost) = objective(costs, &all);
            if count == best_count && (cost - best_cost).abs() <= tol {
                chosen = Some((col, rest, rest_duals));
                break;
            }
        }

        match chosen {
            Some((col, rest, rest_duals)) => {
                fixed.push((row, col));
                current = fixed.iter().copied().chain(rest).collect();
                active_rows.retain(|&r| r != row);
                active_cols.retain(|&c| c != col);
                duals = rest_duals;
            }
            None => {
                active_rows.retain(|&r| r != row);
                if let Some(col) = current_col {
                    fixed.push((row, col));
                    active_cols.retain(|&c| c != col);
                }
                // Fresh duals for the residual problem; its optimum extends
                // the fixed pairs to a global optimum.
                let sub = Subproblem {
                    costs,
                    rows: active_rows.clone(),
                    cols: active_cols.clone(),
                    forbidden_weight,
                };
                let (rest, rest_duals) = sub.solve();
                current = fixed.iter().copied().chain(rest).collect();
                duals = rest_duals;
            }
        }
    }

    let mut pairs = fixed;
    pairs.sort_unstable();
    let unmatched_rows = (0..rows).filter(|r| !pairs.iter().any(|p| p.0 == *r)).collect();
    let unmatched_cols = (0..cols).filter(|c| !pairs.iter().any(|p| p.1 == *c)).collect();
    debug_assert_eq!(pairs.len(), best_count);
    Assignment {
        pairs,
        unmatched_rows,
        unmatched_cols,
    }
}
