mod support;

use mvpose3d::assignment::{solve_bipartite, CostMatrix, FORBIDDEN};
use proptest::prelude::*;
use support::brute_force_matching;

fn matrix(rows: usize, cols: usize, data: &[Option<u32>]) -> (CostMatrix, Vec<Vec<Option<f64>>>) {
    let dense: Vec<Vec<Option<f64>>> =
        (0..rows).map(|r| (0..cols).map(|c| data[r * cols + c].map(f64::from)).collect()).collect();
    let m = CostMatrix::from_fn(rows, cols, |r, c| dense[r][c].unwrap_or(FORBIDDEN)).unwrap();
    (m, dense)
}

fn shape_and_costs(max: usize, forbidden: bool) -> impl Strategy<Value = (usize, usize, Vec<Option<u32>>)> {
    (1..=max, 1..=max).prop_flat_map(move |(r, c)| {
        let cell = if forbidden {
            prop_oneof![4 => (0u32..=100).prop_map(Some), 1 => Just(None)].boxed()
        } else {
            (0u32..=100).prop_map(Some).boxed()
        };
        (Just(r), Just(c), proptest::collection::vec(cell, r * c))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn optimal_against_exhaustive_search((r, c, data) in shape_and_costs(5, false)) {
        let (m, dense) = matrix(r, c, &data);
        let got = solve_bipartite(&m);
        let (_, n, cost) = brute_force_matching(&dense);
        prop_assert_eq!(got.pairs.len(), n);
        prop_assert_eq!(got.pairs.len(), r.min(c));
        prop_assert_eq!(got.total_cost(&m), cost);
        prop_assert_eq!(got.unmatched_rows.len(), r - n);
        prop_assert_eq!(got.unmatched_cols.len(), c - n);
    }

    #[test]
    fn forbidden_pairs_maximum_cardinality_first((r, c, data) in shape_and_costs(5, true)) {
        let (m, dense) = matrix(r, c, &data);
        let got = solve_bipartite(&m);
        let (pairs, n, cost) = brute_force_matching(&dense);
        prop_assert!(got.pairs.iter().all(|&(i, j)| !m.is_forbidden(i, j)));
        prop_assert_eq!(got.pairs.len(), n);
        prop_assert_eq!(got.total_cost(&m), cost);
        prop_assert_eq!(got.pairs, pairs);
    }

    #[test]
    fn row_permutation_is_equivariant((r, c, data) in shape_and_costs(5, false), seed in any::<u64>()) {
        let (m, _) = matrix(r, c, &data);
        let mut perm: Vec<usize> = (0..r).collect();
        let mut s = seed;
        for i in (1..r).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permuted = CostMatrix::from_fn(r, c, |i, j| m.get(perm[i], j)).unwrap();
        let a = solve_bipartite(&m);
        let b = solve_bipartite(&permuted);
        prop_assert_eq!(a.total_cost(&m), b.total_cost(&permuted));
        prop_assert_eq!(a.pairs.len(), b.pairs.len());
    }

    #[test]
    fn row_constant_keeps_the_solution((n, _, data) in shape_and_costs(5, false).prop_filter("square", |(r, c, _)| r == c),
                                       row in 0usize..5, shift in 0u32..50) {
        let (m, _) = matrix(n, n, &data);
        let row = row % n;
        let shifted = CostMatrix::from_fn(n, n, |i, j| m.get(i, j) + if i == row { f64::from(shift) } else { 0.0 }).unwrap();
        let a = solve_bipartite(&m);
        let b = solve_bipartite(&shifted);
        prop_assert_eq!(&a.pairs, &b.pairs);
        prop_assert_eq!(a.total_cost(&m) + f64::from(shift), b.total_cost(&shifted));
    }
}

#[test]
fn rectangular_two_by_three() {
    let m = CostMatrix::from_rows(&[vec![7.0, 2.0, 9.0], vec![3.0, 4.0, 1.0]]).unwrap();
    let a = solve_bipartite(&m);
    assert_eq!(a.pairs, vec![(0, 1), (1, 2)]);
    assert_eq!(a.unmatched_cols, vec![0]);
    assert_eq!(a.total_cost(&m), 3.0);
}
