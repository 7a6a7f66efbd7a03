//! The index group `A = Z^n` and the scalar data living on it.
//!
//! Additive maps are stored by their values on the standard generators,
//! biadditive forms and pairings by their Gram matrices. Windows are
//! infinity-norm boxes; [`Window::points`] enumerates a box in *shell
//! order* (by norm, then coordinatewise `0, 1, -1, 2, -2, ...` starting
//! from the last coordinate), which is
//! the order every witness search in the crate uses.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("additive map is identically zero")]
    ZeroMap,
    #[error("form matrix is not antisymmetric")]
    NotAntisymmetric,
    #[error("matrix shape {rows}x{cols} does not match the expected {want_rows}x{want_cols}")]
    Shape {
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("invalid window: radius {radius}, inner margin {margin}")]
    InvalidWindow { radius: u32, margin: u32 },
}

/// A point of `Z^n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(Vec<i64>);

impl GroupElement {
    pub fn new(coords: Vec<i64>) -> Self {
        GroupElement(coords)
    }

    pub fn zero(rank: usize) -> Self {
        GroupElement(vec![0; rank])
    }

    pub fn unit(rank: usize, i: usize) -> Self {
        let mut v = vec![0; rank];
        v[i] = 1;
        GroupElement(v)
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn scale(&self, k: i64) -> Self {
        GroupElement(self.0.iter().map(|c| c * k).collect())
    }

    /// Sort key of shell order: norm, then coordinates from last to first
    /// under `0 < 1 < -1 < 2 < -2 < ...`.
    fn shell_key(&self) -> (u64, Vec<(u64, bool)>) {
        (
            self.norm(),
            self.0.iter().rev().map(|&c| (c.unsigned_abs(), c < 0)).collect(),
        )
    }

    pub fn shell_cmp(&self, other: &Self) -> Ordering {
        self.shell_key().cmp(&other.shell_key())
    }

    fn check_rank(&self, other: &Self) {
        assert_eq!(self.rank(), other.rank(), "group elements of different rank");
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl From<&[i64]> for GroupElement {
    fn from(c: &[i64]) -> Self {
        GroupElement(c.to_vec())
    }
}

impl<const N: usize> From<[i64; N]> for GroupElement {
    fn from(c: [i64; N]) -> Self {
        GroupElement(c.to_vec())
    }
}

impl Add for &GroupElement {
    type Output = GroupElement;
    fn add(self, rhs: &GroupElement) -> GroupElement {
        self.check_rank(rhs);
        GroupElement(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &GroupElement {
    type Output = GroupElement;
    fn sub(self, rhs: &GroupElement) -> GroupElement {
        self.check_rank(rhs);
        GroupElement(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &GroupElement {
    type Output = GroupElement;
    fn neg(self) -> GroupElement {
        GroupElement(self.0.iter().map(|c| -c).collect())
    }
}

fn dot(values: &[Scalar], a: &GroupElement) -> Scalar {
    values
        .iter()
        .zip(a.coords())
        .filter(|(_, &c)| c != 0)
        .map(|(v, &c)| v * &Scalar::from_int(c))
        .sum()
}

/// Additive map `A -> F`, stored by its values on the generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AdditiveMap {
    gen_values: Vec<Scalar>,
}

impl AdditiveMap {
    pub fn new(gen_values: Vec<Scalar>) -> Self {
        AdditiveMap { gen_values }
    }

    pub fn from_ints(values: &[i64]) -> Self {
        AdditiveMap::new(values.iter().map(|&v| Scalar::from_int(v)).collect())
    }

    pub fn zero(rank: usize) -> Self {
        AdditiveMap::new(vec![Scalar::zero(); rank])
    }

    pub fn rank(&self) -> usize {
        self.gen_values.len()
    }

    pub fn gen_values(&self) -> &[Scalar] {
        &self.gen_values
    }

    pub fn is_zero(&self) -> bool {
        self.gen_values.iter().all(Scalar::is_zero)
    }

    pub fn scale(&self, k: &Scalar) -> Self {
        AdditiveMap::new(self.gen_values.iter().map(|v| v * k).collect())
    }

    pub fn eval(&self, a: &GroupElement) -> Result<Scalar, LatticeError> {
        if a.rank() != self.rank() {
            return Err(LatticeError::RankMismatch {
                expected: self.rank(),
                got: a.rank(),
            });
        }
        Ok(dot(&self.gen_values, a))
    }

    /// Evaluation for callers that already validated ranks.
    pub(crate) fn at(&self, a: &GroupElement) -> Scalar {
        debug_assert_eq!(a.rank(), self.rank());
        dot(&self.gen_values, a)
    }
}

pub fn eval_additive(map: &AdditiveMap, a: &GroupElement) -> Result<Scalar, LatticeError> {
    map.eval(a)
}

fn check_square(m: &[Vec<Scalar>], n: usize) -> Result<(), LatticeError> {
    let cols = m.first().map_or(n, Vec::len);
    if m.len() != n || m.iter().any(|r| r.len() != n) {
        return Err(LatticeError::Shape {
            rows: m.len(),
            cols,
            want_rows: n,
            want_cols: n,
        });
    }
    Ok(())
}

/// Antisymmetric biadditive form `f(a, b) = a^T M b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct BiadditiveForm {
    matrix: Vec<Vec<Scalar>>,
}

impl BiadditiveForm {
    pub fn new(matrix: Vec<Vec<Scalar>>) -> Result<Self, LatticeError> {
        let n = matrix.len();
        check_square(&matrix, n)?;
        for (i, row) in matrix.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if *v != -&matrix[j][i] {
                    return Err(LatticeError::NotAntisymmetric);
                }
            }
        }
        Ok(BiadditiveForm { matrix })
    }

    pub fn from_ints(rows: &[&[i64]]) -> Result<Self, LatticeError> {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&v| Scalar::from_int(v)).collect())
                .collect(),
        )
    }

    pub fn zero(rank: usize) -> Self {
        BiadditiveForm {
            matrix: vec![vec![Scalar::zero(); rank]; rank],
        }
    }

    pub fn rank(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<Scalar>] {
        &self.matrix
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().flatten().all(Scalar::is_zero)
    }

    pub fn eval(&self, a: &GroupElement, b: &GroupElement) -> Result<Scalar, LatticeError> {
        for x in [a, b] {
            if x.rank() != self.rank() {
                return Err(LatticeError::RankMismatch {
                    expected: self.rank(),
                    got: x.rank(),
                });
            }
        }
        Ok(self.at(a, b))
    }

    pub(crate) fn at(&self, a: &GroupElement, b: &GroupElement) -> Scalar {
        let mut acc = Scalar::zero();
        for (i, &ai) in a.coords().iter().enumerate() {
            if ai == 0 {
                continue;
            }
            let row = dot(&self.matrix[i], b);
            if !row.is_zero() {
                acc += row * Scalar::from_int(ai);
            }
        }
        acc
    }

    /// The linear functional `f(a, -)` as an additive map.
    pub fn left_partial(&self, a: &GroupElement) -> AdditiveMap {
        let n = self.rank();
        AdditiveMap::new(
            (0..n)
                .map(|j| {
                    a.coords()
                        .iter()
                        .enumerate()
                        .map(|(i, &ai)| &self.matrix[i][j] * &Scalar::from_int(ai))
                        .sum()
                })
                .collect(),
        )
    }
}

impl<'de> Deserialize<'de> for BiadditiveForm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = Vec::<Vec<Scalar>>::deserialize(d)?;
        BiadditiveForm::new(m).map_err(serde::de::Error::custom)
    }
}

pub fn eval_form(f: &BiadditiveForm, a: &GroupElement, b: &GroupElement) -> Result<Scalar, LatticeError> {
    f.eval(a, b)
}

/// The form `f(a, b) = g(a) h(b) - g(b) h(a)`.
pub fn form_from_gh(g: &AdditiveMap, h: &AdditiveMap) -> Result<BiadditiveForm, LatticeError> {
    if g.rank() != h.rank() {
        return Err(LatticeError::RankMismatch {
            expected: g.rank(),
            got: h.rank(),
        });
    }
    let n = g.rank();
    let gv = g.gen_values();
    let hv = h.gen_values();
    let matrix = (0..n)
        .map(|i| (0..n).map(|j| &gv[i] * &hv[j] - &gv[j] * &hv[i]).collect())
        .collect();
    BiadditiveForm::new(matrix)
}

/// Pairing `<v, a> = v^T P a` between `V = F^dim_v` and `A`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Pairing {
    matrix: Vec<Vec<Scalar>>,
}

impl Pairing {
    pub fn new(matrix: Vec<Vec<Scalar>>, rank: usize) -> Result<Self, LatticeError> {
        let rows = matrix.len();
        if rows == 0 || matrix.iter().any(|r| r.len() != rank) {
            return Err(LatticeError::Shape {
                rows,
                cols: matrix.first().map_or(0, Vec::len),
                want_rows: rows.max(1),
                want_cols: rank,
            });
        }
        Ok(Pairing { matrix })
    }

    pub fn from_ints(rows: &[&[i64]]) -> Result<Self, LatticeError> {
        let rank = rows.first().map_or(0, |r| r.len());
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&v| Scalar::from_int(v)).collect())
                .collect(),
            rank,
        )
    }

    pub fn identity(n: usize) -> Self {
        Pairing {
            matrix: (0..n)
                .map(|i| (0..n).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }).collect())
                .collect(),
        }
    }

    pub fn dim_v(&self) -> usize {
        self.matrix.len()
    }

    pub fn rank(&self) -> usize {
        self.matrix[0].len()
    }

    pub fn matrix(&self) -> &[Vec<Scalar>] {
        &self.matrix
    }

    /// `<e_i, a>` for the standard basis vector `e_i` of `V`.
    pub fn basis_at(&self, i: usize, a: &GroupElement) -> Scalar {
        dot(&self.matrix[i], a)
    }

    /// The vector `(<e_i, a>)_i`, so that `<v, a> = v . pa(a)`.
    pub fn column(&self, a: &GroupElement) -> Vec<Scalar> {
        (0..self.dim_v()).map(|i| self.basis_at(i, a)).collect()
    }

    pub fn eval(&self, v: &[Scalar], a: &GroupElement) -> Result<Scalar, LatticeError> {
        if v.len() != self.dim_v() {
            return Err(LatticeError::RankMismatch {
                expected: self.dim_v(),
                got: v.len(),
            });
        }
        if a.rank() != self.rank() {
            return Err(LatticeError::RankMismatch {
                expected: self.rank(),
                got: a.rank(),
            });
        }
        Ok(v.iter().zip(self.column(a)).map(|(x, y)| x * &y).sum())
    }
}

impl<'de> Deserialize<'de> for Pairing {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = Vec::<Vec<Scalar>>::deserialize(d)?;
        let rank = m.first().map_or(0, Vec::len);
        Pairing::new(m, rank).map_err(serde::de::Error::custom)
    }
}

/// Box of radius `N` with an inner box of radius `N - m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub radius: u32,
    pub inner_margin: u32,
}

impl Window {
    pub fn new(radius: u32, inner_margin: u32) -> Result<Self, LatticeError> {
        if radius == 0 || inner_margin >= radius {
            return Err(LatticeError::InvalidWindow {
                radius,
                margin: inner_margin,
            });
        }
        Ok(Window { radius, inner_margin })
    }

    /// Window with the default margin `ceil(N / 2)`.
    pub fn with_default_margin(radius: u32) -> Result<Self, LatticeError> {
        Window::new(radius, radius.div_ceil(2))
    }

    pub fn inner_radius(&self) -> u32 {
        self.radius - self.inner_margin
    }

    pub fn contains(&self, a: &GroupElement) -> bool {
        a.norm() <= self.radius as u64
    }

    pub fn inner_contains(&self, a: &GroupElement) -> bool {
        a.norm() <= self.inner_radius() as u64
    }

    /// `Box(N)` in shell order.
    pub fn points(&self, rank: usize) -> Vec<GroupElement> {
        box_points(rank, self.radius)
    }

    /// `Box(N - m)` in shell order.
    pub fn inner_points(&self, rank: usize) -> Vec<GroupElement> {
        box_points(rank, self.inner_radius())
    }
}

/// All points of `Box(radius)` in lexicographic order.
pub fn box_points_lex(rank: usize, radius: u32) -> Vec<GroupElement> {
    let r = radius as i64;
    let mut out = vec![Vec::with_capacity(rank)];
    for _ in 0..rank {
        out = out
            .into_iter()
            .flat_map(|p| {
                (-r..=r).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out.into_iter().map(GroupElement).collect()
}

/// All points of `Box(radius)` in shell order.
pub fn box_points(rank: usize, radius: u32) -> Vec<GroupElement> {
    let mut pts = box_points_lex(rank, radius);
    pts.sort_by(|a, b| a.shell_cmp(b));
    pts
}

/// A nonzero form value or pairing value certifying non-degeneracy at `a`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Witness {
    /// `f(a, b) = value != 0`.
    Partner { b: GroupElement, value: Scalar },
    /// `<e_i, a> = value != 0`.
    Vector { i: usize, value: Scalar },
    NoWitnessInWindow,
}

/// Datum whose non-degeneracy is probed.
#[derive(Debug, Clone, Copy)]
pub enum NondegeneracyDatum<'a> {
    Form(&'a BiadditiveForm),
    Pairing(&'a Pairing),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub witnesses: Vec<(GroupElement, Witness)>,
    pub degenerate_in_window: bool,
}

pub fn nondegeneracy_witnesses(datum: NondegeneracyDatum<'_>, window: &Window) -> NondegeneracyReport {
    let rank = match datum {
        NondegeneracyDatum::Form(f) => f.rank(),
        NondegeneracyDatum::Pairing(p) => p.rank(),
    };
    let pts = window.points(rank);
    let mut witnesses = Vec::new();
    let mut degenerate = false;
    for a in pts.iter().filter(|a| !a.is_zero()) {
        let w = match datum {
            NondegeneracyDatum::Form(f) => pts
                .iter()
                .find_map(|b| {
                    let v = f.at(a, b);
                    (!v.is_zero()).then(|| Witness::Partner { b: b.clone(), value: v })
                }),
            NondegeneracyDatum::Pairing(p) => (0..p.dim_v()).find_map(|i| {
                let v = p.basis_at(i, a);
                (!v.is_zero()).then_some(Witness::Vector { i, value: v })
            }),
        };
        let w = w.unwrap_or_else(|| {
            degenerate = true;
            Witness::NoWitnessInWindow
        });
        witnesses.push((a.clone(), w));
    }
    NondegeneracyReport {
        witnesses,
        degenerate_in_window: degenerate,
    }
}

/// A point with `alpha(a) != 0 != beta(a)`, searched over growing boxes.
pub fn common_nonvanishing(
    alpha: &AdditiveMap,
    beta: &AdditiveMap,
    window: &Window,
) -> Result<GroupElement, LatticeError> {
    if alpha.rank() != beta.rank() {
        return Err(LatticeError::RankMismatch {
            expected: alpha.rank(),
            got: beta.rank(),
        });
    }
    if alpha.is_zero() || beta.is_zero() {
        return Err(LatticeError::ZeroMap);
    }
    for r in 1..=window.radius.max(1) {
        // Shell order visits Box(r - 1) first, so scanning Box(r) finds the
        // innermost solution.
        if let Some(a) = box_points(alpha.rank(), r)
            .into_iter()
            .find(|a| !alpha.at(a).is_zero() && !beta.at(a).is_zero())
        {
            return Ok(a);
        }
    }
    // Some point of {0,1}^n always works, so this is unreachable for
    // nonzero maps.
    unreachable!("nonzero additive maps have a common nonvanishing point in Box(1)")
}

/// `A_{(lambda, mu)}` restricted to the window, sorted lexicographically.
pub fn coset_filter(
    g: &AdditiveMap,
    h: &AdditiveMap,
    lambda: &Scalar,
    mu: &Scalar,
    window: &Window,
) -> Vec<GroupElement> {
    box_points_lex(g.rank(), window.radius)
        .into_iter()
        .filter(|a| &g.at(a) == lambda && &h.at(a) == mu)
        .collect()
}
