//! Test oracles that share no code with the library's elimination.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tpw_core::exactlin::SparseMatrix;
use tpw_core::Scalar;

/// Dense fraction-free (Bareiss) elimination over the integers. Returns the
/// rank and the pivot columns of the echelon form.
pub fn bareiss_echelon(rows: &[Vec<i64>]) -> (Vec<Vec<BigInt>>, Vec<usize>) {
    let mut m: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let n_rows = m.len();
    let n_cols = m.first().map_or(0, Vec::len);
    let mut prev = BigInt::one();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n_cols {
        if r == n_rows {
            break;
        }
        let Some(p) = (r..n_rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        for i in r + 1..n_rows {
            for j in c + 1..n_cols {
                let v = (&m[r][c] * &m[i][j] - &m[i][c] * &m[r][j]) / &prev;
                m[i][j] = v;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    (m, pivots)
}

/// Kernel basis by back substitution on the Bareiss echelon form: one
/// vector per free column, with a 1 in that column.
pub fn bareiss_kernel(rows: &[Vec<i64>], n_cols: usize) -> Vec<Vec<BigRational>> {
    let (m, pivots) = bareiss_echelon(rows);
    let free: Vec<usize> = (0..n_cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); n_cols];
            v[f] = BigRational::one();
            for (r, &pc) in pivots.iter().enumerate().rev() {
                let mut s = BigRational::zero();
                for (j, vj) in v.iter().enumerate().skip(pc + 1) {
                    s += BigRational::from_integer(m[r][j].clone()) * vj;
                }
                v[pc] = -s / BigRational::from_integer(m[r][pc].clone());
            }
            v
        })
        .collect()
}

pub fn bareiss_rank(rows: &[Vec<i64>]) -> usize {
    bareiss_echelon(rows).1.len()
}

pub fn to_scalars(v: &[BigRational]) -> Vec<Scalar> {
    v.iter().cloned().map(Scalar::from_big).collect()
}

pub fn random_int_matrix(rng: &mut ChaCha8Rng, max_dim: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let r = rng.gen_range(1..=max_dim);
    let c = rng.gen_range(1..=max_dim);
    (0..r).map(|_| (0..c).map(|_| rng.gen_range(lo..=hi)).collect()).collect()
}

pub fn sparse_from(rows: &[Vec<i64>]) -> SparseMatrix {
    let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
    SparseMatrix::from_int_rows(&refs)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Agreement of `exactlin::nullspace` with the Bareiss kernel: equal
/// dimension and every oracle vector in the computed span.
pub fn nullspace_agrees(rows: &[Vec<i64>]) -> Result<(), String> {
    let n_cols = rows[0].len();
    let computed = tpw_core::exactlin::nullspace(&sparse_from(rows)).map_err(|e| e.to_string())?;
    let oracle = bareiss_kernel(rows, n_cols);
    if computed.dimension() != oracle.len() {
        return Err(format!(
            "dimension {} vs oracle {} for {rows:?}",
            computed.dimension(),
            oracle.len()
        ));
    }
    for v in &oracle {
        if !computed.contains(&to_scalars(v)).map_err(|e| e.to_string())? {
            return Err(format!("oracle kernel vector outside computed span for {rows:?}"));
        }
    }
    // The computed vectors must be genuine kernel vectors.
    let m = sparse_from(rows);
    for v in computed.vectors() {
        if m.mul_vec(v).map_err(|e| e.to_string())?.iter().any(|x| !x.is_zero()) {
            return Err(format!("computed vector is not in the kernel of {rows:?}"));
        }
    }
    Ok(())
}
