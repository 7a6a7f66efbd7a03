mod common;

use proptest::prelude::*;

use common::{bareiss_kernel, bareiss_rank, nullspace_agrees, random_int_matrix, rng, sparse_from, to_scalars};
use tpw_core::exactlin::{self, NullspaceBasis, SparseMatrix};
use tpw_core::Scalar;

#[test]
fn bareiss_oracle_on_known_kernels() {
    let rows = vec![vec![1, 2, 3], vec![0, 1, 1]];
    let k = bareiss_kernel(&rows, 3);
    assert_eq!(k.len(), 1);
    assert_eq!(to_scalars(&k[0]), exactlin::int_vec(&[-1, -1, 1]));
    assert_eq!(bareiss_rank(&[vec![1, 0], vec![0, 1], vec![1, 1]]), 2);
}

#[test]
fn seeded_random_matrices_agree() {
    let mut r = rng(11);
    for _ in 0..300 {
        let m = random_int_matrix(&mut r, 7, -3, 3);
        nullspace_agrees(&m).unwrap();
    }
}

#[test]
fn canonical_form_is_basis_independent() {
    // Two generating sets of the same kernel give identical canonical bases.
    let rows = vec![vec![1, 1, 0, 0], vec![0, 0, 1, 1]];
    let computed = exactlin::nullspace(&sparse_from(&rows)).unwrap();
    let other: Vec<_> = bareiss_kernel(&rows, 4).iter().map(|v| to_scalars(v)).collect();
    let mixed = vec![
        other[0].iter().zip(&other[1]).map(|(a, b)| a + b).collect::<Vec<_>>(),
        other[1].clone(),
    ];
    assert_eq!(NullspaceBasis::span_of(4, &mixed).unwrap(), computed);
}

fn sparse_matrix() -> impl Strategy<Value = SparseMatrix> {
    (1usize..=60, 1usize..=60).prop_flat_map(|(r, c)| {
        prop::collection::vec((0..r, 0..c, -5i64..=5, 1i64..=3), 0..=3 * (r + c)).prop_map(move |t| {
            let t = t.into_iter().map(|(i, j, n, d)| (i, j, Scalar::new(n, d)));
            SparseMatrix::from_triplets(r, c, t).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn sparse_kernels_are_exact(m in sparse_matrix()) {
        let ns = exactlin::nullspace(&m).unwrap();
        prop_assert_eq!(exactlin::rank(&m).unwrap() + ns.dimension(), m.n_cols());
        for v in ns.vectors() {
            prop_assert!(m.mul_vec(v).unwrap().iter().all(Scalar::is_zero));
        }
    }
}

proptest! {
    #[test]
    fn rank_nullity(rows in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(-4i64..=4, c), r)
    })) {
        let m = sparse_from(&rows);
        let rank = exactlin::rank(&m).unwrap();
        let ns = exactlin::nullspace(&m).unwrap();
        prop_assert_eq!(rank + ns.dimension(), rows[0].len());
        prop_assert_eq!(rank, bareiss_rank(&rows));
    }

    #[test]
    fn nullspace_matches_oracle(rows in (1usize..7, 1usize..7).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(-2i64..=2, c), r)
    })) {
        prop_assert!(nullspace_agrees(&rows).is_ok());
    }

    #[test]
    fn row_scaling_preserves_nullspace(
        rows in (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
            prop::collection::vec(prop::collection::vec(-3i64..=3, c), r)
        }),
        k in prop_oneof![-5i64..=-1, 1i64..=5],
    ) {
        let m = sparse_from(&rows);
        let scaled = m.scale_row(0, &tpw_core::Scalar::from_int(k));
        prop_assert_eq!(exactlin::nullspace(&m).unwrap(), exactlin::nullspace(&scaled).unwrap());
    }
}
