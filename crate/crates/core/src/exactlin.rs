//! Exact linear algebra over the rationals.
//!
//! Everything downstream reduces to one question: what is the kernel of a
//! sparse rational matrix? Rows are inserted one at a time into a
//! [`RowReducer`], which keeps an echelon form whose pivot rows start with
//! `1`. Rows are fed sparsest-first (ties broken by coefficient bit size),
//! pivots are always the leftmost surviving column, and the final form is
//! fully reduced, so results do not depend on how the caller ordered rows.
//!
//! Kernel bases come out in a fixed canonical form: each basis vector has a
//! distinguished coordinate (a free column of the reduced echelon form) where
//! it equals `1`, every other basis vector vanishes there, and all later
//! coordinates are zero. Vectors are sorted by that coordinate. Any family
//! of vectors can be brought to the same form with [`NullspaceBasis::span_of`],
//! so equal subspaces compare equal.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Default ceiling on `n_rows * n_cols` for a single elimination.
pub const DEFAULT_CELL_LIMIT: u128 = 2_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinAlgError {
    #[error("matrix of {n_rows}x{n_cols} exceeds the configured limit of {limit} cells")]
    DimensionOverflow {
        n_rows: usize,
        n_cols: usize,
        limit: u128,
    },
    #[error("entry ({row}, {col}) lies outside a {n_rows}x{n_cols} matrix")]
    OutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("vector of length {got} does not match ambient dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Sparse matrix in coordinate form, entries sorted by `(row, col)`, with
/// no duplicates and no stored zeros.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(usize, usize, Scalar)>,
}

impl SparseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            entries: Vec::new(),
        }
    }

    /// Builds a matrix from arbitrary triples. Repeated positions are summed
    /// and zero results dropped.
    pub fn from_triplets<I>(n_rows: usize, n_cols: usize, triplets: I) -> Result<Self, LinAlgError>
    where
        I: IntoIterator<Item = (usize, usize, Scalar)>,
    {
        let mut acc: BTreeMap<(usize, usize), Scalar> = BTreeMap::new();
        for (row, col, v) in triplets {
            if row >= n_rows || col >= n_cols {
                return Err(LinAlgError::OutOfRange {
                    row,
                    col,
                    n_rows,
                    n_cols,
                });
            }
            *acc.entry((row, col)).or_default() += v;
        }
        let entries = acc
            .into_iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            entries,
        })
    }

    pub fn from_dense(rows: &[Vec<Scalar>], n_cols: usize) -> Result<Self, LinAlgError> {
        let mut triplets = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(LinAlgError::DimensionMismatch {
                    expected: n_cols,
                    got: row.len(),
                });
            }
            for (c, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    triplets.push((r, c, v.clone()));
                }
            }
        }
        Self::from_triplets(rows.len(), n_cols, triplets)
    }

    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        let n_cols = rows.first().map_or(0, |r| r.len());
        let dense: Vec<Vec<Scalar>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| Scalar::from_int(v)).collect())
            .collect();
        Self::from_dense(&dense, n_cols).expect("ragged integer rows")
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            entries: (0..n).map(|i| (i, i, Scalar::one())).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn entries(&self) -> &[(usize, usize, Scalar)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Nonzero rows as `(row index, [(col, value)])`.
    pub fn sparse_rows(&self) -> Vec<(usize, Vec<(usize, Scalar)>)> {
        let mut out: Vec<(usize, Vec<(usize, Scalar)>)> = Vec::new();
        for (r, c, v) in &self.entries {
            match out.last_mut() {
                Some((row, items)) if row == r => items.push((*c, v.clone())),
                _ => out.push((*r, vec![(*c, v.clone())])),
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[Scalar]) -> Result<Vec<Scalar>, LinAlgError> {
        if x.len() != self.n_cols {
            return Err(LinAlgError::DimensionMismatch {
                expected: self.n_cols,
                got: x.len(),
            });
        }
        let mut out = vec![Scalar::zero(); self.n_rows];
        for (r, c, v) in &self.entries {
            if !x[*c].is_zero() {
                out[*r] += v * &x[*c];
            }
        }
        Ok(out)
    }

    /// Multiplies row `row` by a nonzero scalar.
    pub fn scale_row(&self, row: usize, factor: &Scalar) -> Self {
        assert!(!factor.is_zero(), "row scaling factor must be nonzero");
        let entries = self
            .entries
            .iter()
            .map(|(r, c, v)| {
                if *r == row {
                    (*r, *c, v * factor)
                } else {
                    (*r, *c, v.clone())
                }
            })
            .collect();
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            entries,
        }
    }

    fn check_limit(&self, limit: u128) -> Result<(), LinAlgError> {
        if (self.n_rows as u128) * (self.n_cols as u128) > limit {
            Err(LinAlgError::DimensionOverflow {
                n_rows: self.n_rows,
                n_cols: self.n_cols,
                limit,
            })
        } else {
            Ok(())
        }
    }
}

type SparseRow = Vec<(usize, BigRational)>;

/// `row -= factor * pivot`, both sorted by column.
fn axpy(row: &SparseRow, factor: &BigRational, pivot: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(row.len() + pivot.len());
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < pivot.len() {
        let ci = row.get(i).map_or(usize::MAX, |e| e.0);
        let cj = pivot.get(j).map_or(usize::MAX, |e| e.0);
        if ci < cj {
            out.push(row[i].clone());
            i += 1;
        } else if cj < ci {
            out.push((cj, -(factor * &pivot[j].1)));
            j += 1;
        } else {
            let v = &row[i].1 - factor * &pivot[j].1;
            if !v.is_zero() {
                out.push((ci, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Incremental echelon form. Each stored pivot row has leading coefficient 1
/// at its key column.
#[derive(Debug, Clone)]
pub struct RowReducer {
    n_cols: usize,
    pivots: BTreeMap<usize, SparseRow>,
}

impl RowReducer {
    pub fn new(n_cols: usize) -> Self {
        RowReducer {
            n_cols,
            pivots: BTreeMap::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_full(&self) -> bool {
        self.pivots.len() == self.n_cols
    }

    fn reduce(&self, mut row: SparseRow) -> SparseRow {
        while let Some((lead, coeff)) = row.first() {
            match self.pivots.get(lead) {
                Some(p) => {
                    let factor = coeff.clone();
                    row = axpy(&row, &factor, p);
                }
                None => break,
            }
        }
        row
    }

    /// Inserts a row; returns `true` when it raised the rank.
    pub fn insert(&mut self, row: SparseRow) -> bool {
        let row = self.reduce(row);
        let Some((lead, coeff)) = row.first() else {
            return false;
        };
        let lead = *lead;
        let inv = coeff.recip();
        let normalized: SparseRow = row.into_iter().map(|(c, v)| (c, v * &inv)).collect();
        self.pivots.insert(lead, normalized);
        true
    }

    pub fn insert_dense(&mut self, v: &[Scalar]) -> bool {
        self.insert(to_sparse(v))
    }

    /// Whether the row lies in the span of the rows inserted so far.
    pub fn contains(&self, row: SparseRow) -> bool {
        self.reduce(row).is_empty()
    }

    /// Back-substitutes so every pivot column has a single nonzero entry.
    pub fn into_rref(mut self) -> Vec<(usize, SparseRow)> {
        let cols: Vec<usize> = self.pivots.keys().rev().copied().collect();
        let mut done: BTreeMap<usize, SparseRow> = BTreeMap::new();
        for c in cols {
            let mut row = self.pivots.remove(&c).expect("pivot present");
            let targets: Vec<(usize, BigRational)> = row
                .iter()
                .skip(1)
                .filter(|(col, _)| done.contains_key(col))
                .cloned()
                .collect();
            for (col, factor) in targets {
                row = axpy(&row, &factor, &done[&col]);
            }
            done.insert(c, row);
        }
        done.into_iter().collect()
    }
}

fn to_sparse(v: &[Scalar]) -> SparseRow {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(c, x)| (c, x.as_big().clone()))
        .collect()
}

fn ordered_rows(m: &SparseMatrix) -> Vec<SparseRow> {
    let mut rows: Vec<SparseRow> = m
        .sparse_rows()
        .into_iter()
        .map(|(_, items)| items.into_iter().map(|(c, v)| (c, v.into_big())).collect())
        .collect();
    rows.sort_by_cached_key(|r: &SparseRow| {
        let bits: u64 = r.iter().map(|(_, v)| v.numer().bits() + v.denom().bits()).sum();
        (r.len(), bits)
    });
    rows
}

fn reduce_matrix(m: &SparseMatrix) -> RowReducer {
    let mut red = RowReducer::new(m.n_cols);
    for row in ordered_rows(m) {
        if red.is_full() {
            break;
        }
        red.insert(row);
    }
    red
}

/// Canonical basis of a subspace of `F^len`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullspaceBasis {
    len: usize,
    vectors: Vec<Vec<Scalar>>,
}

impl NullspaceBasis {
    pub fn empty(len: usize) -> Self {
        NullspaceBasis {
            len,
            vectors: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.vectors.len()
    }

    /// Length of each basis vector.
    pub fn ambient_len(&self) -> usize {
        self.len
    }

    pub fn vectors(&self) -> &[Vec<Scalar>] {
        &self.vectors
    }

    /// Canonical basis of the span of arbitrary vectors of length `len`.
    pub fn span_of(len: usize, vectors: &[Vec<Scalar>]) -> Result<Self, LinAlgError> {
        // Reduced echelon form with the column order reversed puts every
        // vector in the "last nonzero entry is 1" shape used by kernels.
        let mut red = RowReducer::new(len);
        for v in vectors {
            if v.len() != len {
                return Err(LinAlgError::DimensionMismatch {
                    expected: len,
                    got: v.len(),
                });
            }
            let rev: SparseRow = v
                .iter()
                .enumerate()
                .rev()
                .filter(|(_, x)| !x.is_zero())
                .map(|(c, x)| (len - 1 - c, x.as_big().clone()))
                .collect();
            red.insert(rev);
        }
        let mut out: Vec<(usize, Vec<Scalar>)> = red
            .into_rref()
            .into_iter()
            .map(|(rc, row)| {
                let mut dense = vec![Scalar::zero(); len];
                for (c, v) in row {
                    dense[len - 1 - c] = Scalar::from_big(v);
                }
                (len - 1 - rc, dense)
            })
            .collect();
        out.sort_by_key(|(k, _)| *k);
        Ok(NullspaceBasis {
            len,
            vectors: out.into_iter().map(|(_, v)| v).collect(),
        })
    }

    /// Restricts every vector to the listed coordinates and returns the
    /// canonical basis of the resulting span.
    pub fn project(&self, coords: &[usize]) -> NullspaceBasis {
        let projected: Vec<Vec<Scalar>> = self
            .vectors
            .iter()
            .map(|v| coords.iter().map(|&c| v[c].clone()).collect())
            .collect();
        NullspaceBasis::span_of(coords.len(), &projected).expect("projection lengths agree")
    }

    pub fn contains(&self, v: &[Scalar]) -> Result<bool, LinAlgError> {
        in_span(v, self)
    }
}

pub fn nullspace(m: &SparseMatrix) -> Result<NullspaceBasis, LinAlgError> {
    nullspace_with_limit(m, DEFAULT_CELL_LIMIT)
}

pub fn nullspace_with_limit(m: &SparseMatrix, limit: u128) -> Result<NullspaceBasis, LinAlgError> {
    m.check_limit(limit)?;
    let n = m.n_cols;
    let rref = reduce_matrix(m).into_rref();
    let pivot_cols: BTreeMap<usize, &SparseRow> = rref.iter().map(|(c, r)| (*c, r)).collect();
    let mut vectors = Vec::new();
    for free in (0..n).filter(|c| !pivot_cols.contains_key(c)) {
        let mut v = vec![Scalar::zero(); n];
        v[free] = Scalar::one();
        for (pc, row) in &pivot_cols {
            if *pc > free {
                break;
            }
            if let Ok(pos) = row.binary_search_by_key(&free, |e| e.0) {
                v[*pc] = Scalar::from_big(-row[pos].1.clone());
            }
        }
        vectors.push(v);
    }
    Ok(NullspaceBasis { len: n, vectors })
}

pub fn rank(m: &SparseMatrix) -> Result<usize, LinAlgError> {
    rank_with_limit(m, DEFAULT_CELL_LIMIT)
}

pub fn rank_with_limit(m: &SparseMatrix, limit: u128) -> Result<usize, LinAlgError> {
    m.check_limit(limit)?;
    Ok(reduce_matrix(m).rank())
}

/// Rank of the span of a list of dense vectors.
pub fn span_rank(len: usize, vectors: &[Vec<Scalar>]) -> Result<usize, LinAlgError> {
    let mut red = RowReducer::new(len);
    for v in vectors {
        if v.len() != len {
            return Err(LinAlgError::DimensionMismatch {
                expected: len,
                got: v.len(),
            });
        }
        red.insert_dense(v);
    }
    Ok(red.rank())
}

pub fn in_span(v: &[Scalar], basis: &NullspaceBasis) -> Result<bool, LinAlgError> {
    if v.len() != basis.len {
        return Err(LinAlgError::DimensionMismatch {
            expected: basis.len,
            got: v.len(),
        });
    }
    let mut red = RowReducer::new(basis.len);
    for b in &basis.vectors {
        red.insert_dense(b);
    }
    Ok(red.contains(to_sparse(v)))
}

/// Convenience for tests and reports: a vector of small integers.
pub fn int_vec(v: &[i64]) -> Vec<Scalar> {
    v.iter().map(|&x| Scalar::from_int(x)).collect()
}

pub(crate) fn is_zero_vec(v: &[Scalar]) -> bool {
    v.iter().all(Scalar::is_zero)
}
