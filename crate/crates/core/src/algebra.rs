//! The three graded Lie algebra families over `A = Z^n`.
//!
//! * generalized Witt `W(A, V, <.,.>)`: `[a(x)v, b(x)w] = (a+b)(x)(<v,b>w - <w,a>v)`;
//! * Block `L(A, g, f)`: `[u_a, u_b] = (f(a,b) + g(a-b)) u_{a+b}`;
//! * Witt type `V(f)`: `[e_a, e_b] = (f(b) - f(a)) e_{a+b}`.
//!
//! Elements are finitely supported maps from group elements to coefficient
//! vectors. The coefficient width is `dim V` for generalized Witt algebras and
//! `1` for the two scalar families, so one element type serves all three.
//! Brackets are evaluated exactly on the full support; windows only bound
//! the universally quantified checks.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::exactlin::is_zero_vec;
use crate::lattice::{
    form_from_gh, AdditiveMap, BiadditiveForm, GroupElement, LatticeError, Pairing, Window,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("element does not belong to this algebra (rank {rank}, width {width})")]
    SpecMismatch { rank: usize, width: usize },
    #[error("operation requires a {expected} algebra, got {got}")]
    FamilyMismatch { expected: &'static str, got: &'static str },
    #[error("operation requires dim V = 1, got {0}")]
    DimMismatch(usize),
    #[error("invalid distinguished vector")]
    BadVector,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GeneralizedWitt,
    Block,
    WittType,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::GeneralizedWitt => "generalized_witt",
            Family::Block => "block",
            Family::WittType => "witt_type",
        }
    }
}

/// How a Block algebra's form was supplied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockForm {
    /// `g = 0` with an explicit antisymmetric form.
    ZeroG,
    /// `f = g h^T - h g^T`; always a Lie algebra.
    FromH(AdditiveMap),
    /// Arbitrary `(g, f)`; only meant for exercising the Lie-axiom checker.
    Unchecked,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Data {
    GeneralizedWitt { pairing: Pairing },
    Block { g: AdditiveMap, f: BiadditiveForm, form: BlockForm },
    WittType { f: AdditiveMap },
}

/// An algebra of one of the three families. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraSpec {
    rank: usize,
    data: Data,
}

impl AlgebraSpec {
    pub fn generalized_witt(pairing: Pairing) -> Self {
        AlgebraSpec {
            rank: pairing.rank(),
            data: Data::GeneralizedWitt { pairing },
        }
    }

    /// Block algebra with `g != 0` (or any `g`) and `f` derived from `h`.
    pub fn block(g: AdditiveMap, h: AdditiveMap) -> Result<Self, AlgebraError> {
        let f = form_from_gh(&g, &h)?;
        Ok(AlgebraSpec {
            rank: g.rank(),
            data: Data::Block {
                g,
                f,
                form: BlockForm::FromH(h),
            },
        })
    }

    pub fn block_zero_g(f: BiadditiveForm) -> Self {
        AlgebraSpec {
            rank: f.rank(),
            data: Data::Block {
                g: AdditiveMap::zero(f.rank()),
                f,
                form: BlockForm::ZeroG,
            },
        }
    }

    /// Raw `(g, f)` data with no Lie guarantee.
    pub fn block_unchecked(g: AdditiveMap, f: BiadditiveForm) -> Result<Self, AlgebraError> {
        if g.rank() != f.rank() {
            return Err(LatticeError::RankMismatch {
                expected: f.rank(),
                got: g.rank(),
            }
            .into());
        }
        Ok(AlgebraSpec {
            rank: g.rank(),
            data: Data::Block {
                g,
                f,
                form: BlockForm::Unchecked,
            },
        })
    }

    /// `B(q) = L(Z^2, g, f)` with `g(m,i) = -qm`, `h(m,i) = i/q` (`q != 0`).
    pub fn block_bq(q: &Scalar) -> Result<Self, AlgebraError> {
        let qinv = q.recip().ok_or(AlgebraError::BadVector)?;
        AlgebraSpec::block(
            AdditiveMap::new(vec![-q, Scalar::zero()]),
            AdditiveMap::new(vec![Scalar::zero(), qinv]),
        )
    }

    /// `B(0)`: `g = 0`, `f((m,i),(n,j)) = ni - mj`.
    pub fn block_b0() -> Self {
        AlgebraSpec::block_zero_g(BiadditiveForm::from_ints(&[&[0, -1], &[1, 0]]).expect("antisymmetric"))
    }

    pub fn witt_type(f: AdditiveMap) -> Self {
        AlgebraSpec {
            rank: f.rank(),
            data: Data::WittType { f },
        }
    }

    pub fn family(&self) -> Family {
        match self.data {
            Data::GeneralizedWitt { .. } => Family::GeneralizedWitt,
            Data::Block { .. } => Family::Block,
            Data::WittType { .. } => Family::WittType,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Coefficient width: `dim V` for generalized Witt, `1` otherwise.
    pub fn width(&self) -> usize {
        match &self.data {
            Data::GeneralizedWitt { pairing } => pairing.dim_v(),
            _ => 1,
        }
    }

    pub fn pairing(&self) -> Option<&Pairing> {
        match &self.data {
            Data::GeneralizedWitt { pairing } => Some(pairing),
            _ => None,
        }
    }

    /// `(g, f, how f was given)` for Block algebras.
    pub fn block_data(&self) -> Option<(&AdditiveMap, &BiadditiveForm, &BlockForm)> {
        match &self.data {
            Data::Block { g, f, form } => Some((g, f, form)),
            _ => None,
        }
    }

    pub fn witt_map(&self) -> Option<&AdditiveMap> {
        match &self.data {
            Data::WittType { f } => Some(f),
            _ => None,
        }
    }

    /// Whether the family data guarantees the Lie axioms.
    pub fn is_lie_by_construction(&self) -> bool {
        !matches!(
            self.data,
            Data::Block {
                form: BlockForm::Unchecked,
                ..
            }
        )
    }

    fn require_block(&self) -> Result<(&AdditiveMap, &BiadditiveForm, &BlockForm), AlgebraError> {
        self.block_data().ok_or(AlgebraError::FamilyMismatch {
            expected: "block",
            got: self.family().name(),
        })
    }

    /// Block algebra with `g != 0` and a known `h`.
    pub fn block_gh(&self) -> Option<(&AdditiveMap, &AdditiveMap)> {
        match &self.data {
            Data::Block {
                g,
                form: BlockForm::FromH(h),
                ..
            } if !g.is_zero() => Some((g, h)),
            _ => None,
        }
    }

    /// Structure constant `c(a, b)` with `[u_a, u_b] = c(a, b) u_{a+b}`
    /// for the scalar families.
    pub fn structure_coeff(&self, a: &GroupElement, b: &GroupElement) -> Scalar {
        match &self.data {
            Data::Block { g, f, .. } => f.at(a, b) + g.at(&(a - b)),
            Data::WittType { f } => f.at(b) - f.at(a),
            Data::GeneralizedWitt { .. } => panic!("generalized Witt brackets are vector valued"),
        }
    }

    /// Bracket of two homogeneous terms `a (x) v` and `b (x) w`; the result
    /// sits at `a + b`.
    pub fn bracket_terms(&self, a: &GroupElement, v: &[Scalar], b: &GroupElement, w: &[Scalar]) -> Vec<Scalar> {
        match &self.data {
            Data::GeneralizedWitt { pairing } => {
                let vb: Scalar = v.iter().zip(pairing.column(b)).map(|(x, y)| x * &y).sum();
                let wa: Scalar = w.iter().zip(pairing.column(a)).map(|(x, y)| x * &y).sum();
                w.iter()
                    .zip(v)
                    .map(|(wk, vk)| &vb * wk - &wa * vk)
                    .collect()
            }
            _ => {
                let c = self.structure_coeff(a, b);
                vec![c * &v[0] * &w[0]]
            }
        }
    }

    /// Bracket of basis elements `(a, e_i)` and `(b, e_j)`.
    pub fn bracket_basis(&self, x: &BasisLabel, y: &BasisLabel) -> (GroupElement, Vec<Scalar>) {
        let w = self.width();
        let v = unit_vec(w, x.comp);
        let u = unit_vec(w, y.comp);
        (&x.index + &y.index, self.bracket_terms(&x.index, &v, &y.index, &u))
    }

    /// Basis labels with index in `Box(radius)`: shell order on indices,
    /// then component.
    pub fn basis_labels(&self, radius: u32) -> Vec<BasisLabel> {
        let w = self.width();
        crate::lattice::box_points(self.rank, radius)
            .into_iter()
            .flat_map(|index| (0..w).map(move |comp| BasisLabel { index: index.clone(), comp }))
            .collect()
    }

    pub fn zero_element(&self) -> AlgebraElement {
        AlgebraElement::zero(self.width())
    }

    pub fn basis_element(&self, label: &BasisLabel) -> AlgebraElement {
        AlgebraElement::basis(self.width(), label)
    }

    fn check(&self, x: &AlgebraElement) -> Result<(), AlgebraError> {
        let ok = x.width == self.width() && x.terms.keys().all(|k| k.rank() == self.rank);
        if ok {
            Ok(())
        } else {
            Err(AlgebraError::SpecMismatch {
                rank: self.rank,
                width: self.width(),
            })
        }
    }
}

pub(crate) fn unit_vec(w: usize, i: usize) -> Vec<Scalar> {
    (0..w)
        .map(|k| if k == i { Scalar::one() } else { Scalar::zero() })
        .collect()
}

/// A basis vector: index `a` and component `e_comp` of `V` (always `0`
/// for the scalar families).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisLabel {
    pub index: GroupElement,
    #[serde(default)]
    pub comp: usize,
}

impl BasisLabel {
    pub fn scalar(index: GroupElement) -> Self {
        BasisLabel { index, comp: 0 }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.comp == 0 {
            write!(f, "u{}", self.index)
        } else {
            write!(f, "u{}[{}]", self.index, self.comp)
        }
    }
}

/// Finitely supported element; zero coefficient vectors are never stored.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct AlgebraElement {
    width: usize,
    terms: BTreeMap<GroupElement, Vec<Scalar>>,
}

impl AlgebraElement {
    pub fn zero(width: usize) -> Self {
        AlgebraElement {
            width,
            terms: BTreeMap::new(),
        }
    }

    pub fn basis(width: usize, label: &BasisLabel) -> Self {
        let mut e = AlgebraElement::zero(width);
        e.add_term(&label.index, &unit_vec(width, label.comp));
        e
    }

    /// Scalar-family element from `(index, coefficient)` pairs.
    pub fn from_scalars<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (GroupElement, Scalar)>,
    {
        let mut e = AlgebraElement::zero(1);
        for (a, c) in terms {
            e.add_term(&a, &[c]);
        }
        e
    }

    pub fn from_terms<I>(width: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (GroupElement, Vec<Scalar>)>,
    {
        let mut e = AlgebraElement::zero(width);
        for (a, c) in terms {
            assert_eq!(c.len(), width, "coefficient width");
            e.add_term(&a, &c);
        }
        e
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GroupElement, &[Scalar])> {
        self.terms.iter().map(|(k, v)| (k, v.as_slice()))
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.terms.keys()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, a: &GroupElement) -> Vec<Scalar> {
        self.terms
            .get(a)
            .cloned()
            .unwrap_or_else(|| vec![Scalar::zero(); self.width])
    }

    /// Scalar coefficient at `a` (component 0).
    pub fn scalar_coeff(&self, a: &GroupElement) -> Scalar {
        self.terms.get(a).map_or_else(Scalar::zero, |v| v[0].clone())
    }

    pub fn add_term(&mut self, a: &GroupElement, c: &[Scalar]) {
        debug_assert_eq!(c.len(), self.width);
        if is_zero_vec(c) {
            return;
        }
        let slot = self
            .terms
            .entry(a.clone())
            .or_insert_with(|| vec![Scalar::zero(); c.len()]);
        for (s, x) in slot.iter_mut().zip(c) {
            *s += x;
        }
        if is_zero_vec(slot) {
            self.terms.remove(a);
        }
    }

    pub fn add_scaled(&mut self, other: &AlgebraElement, k: &Scalar) {
        if k.is_zero() {
            return;
        }
        for (a, c) in &other.terms {
            let scaled: Vec<Scalar> = c.iter().map(|x| x * k).collect();
            self.add_term(a, &scaled);
        }
    }

    pub fn add(&self, other: &AlgebraElement) -> AlgebraElement {
        let mut out = self.clone();
        out.add_scaled(other, &Scalar::one());
        out
    }

    pub fn sub(&self, other: &AlgebraElement) -> AlgebraElement {
        let mut out = self.clone();
        out.add_scaled(other, &Scalar::from_int(-1));
        out
    }

    pub fn scale(&self, k: &Scalar) -> AlgebraElement {
        let mut out = AlgebraElement::zero(self.width);
        out.add_scaled(self, k);
        out
    }

    /// Multiplies by `k` times the group element `c` (translation of support).
    pub fn shifted(&self, c: &GroupElement) -> AlgebraElement {
        AlgebraElement {
            width: self.width,
            terms: self.terms.iter().map(|(a, v)| (a + c, v.clone())).collect(),
        }
    }
}

impl fmt::Debug for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (a, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if self.width == 1 {
                write!(f, "{}*u{}", c[0], a)?;
            } else {
                write!(f, "{:?}*u{}", c, a)?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    index: GroupElement,
    coeff: CoeffJson,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoeffJson {
    Scalar(Scalar),
    Vector(Vec<Scalar>),
}

impl Serialize for AlgebraElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let items: Vec<TermJson> = self
            .terms
            .iter()
            .map(|(a, c)| TermJson {
                index: a.clone(),
                coeff: if self.width == 1 {
                    CoeffJson::Scalar(c[0].clone())
                } else {
                    CoeffJson::Vector(c.clone())
                },
            })
            .collect();
        items.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AlgebraElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let items = Vec::<TermJson>::deserialize(d)?;
        let width = items
            .iter()
            .map(|t| match &t.coeff {
                CoeffJson::Scalar(_) => 1,
                CoeffJson::Vector(v) => v.len(),
            })
            .next()
            .unwrap_or(1);
        let mut e = AlgebraElement::zero(width);
        for t in items {
            let c = match t.coeff {
                CoeffJson::Scalar(x) => vec![x],
                CoeffJson::Vector(v) => v,
            };
            if c.len() != width {
                return Err(serde::de::Error::custom("inconsistent coefficient widths"));
            }
            e.add_term(&t.index, &c);
        }
        Ok(e)
    }
}

pub fn bracket(spec: &AlgebraSpec, x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement, AlgebraError> {
    spec.check(x)?;
    spec.check(y)?;
    Ok(bracket_unchecked(spec, x, y))
}

pub(crate) fn bracket_unchecked(spec: &AlgebraSpec, x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
    let mut out = AlgebraElement::zero(spec.width());
    for (a, v) in &x.terms {
        for (b, w) in &y.terms {
            out.add_term(&(a + b), &spec.bracket_terms(a, v, b, w));
        }
    }
    out
}

/// Outcome of a universally quantified check: pass, or the first
/// counterexample in enumeration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Check {
    Pass,
    Fail { witness: Vec<BasisLabel>, lhs: AlgebraElement, rhs: AlgebraElement },
}

impl Check {
    pub fn passed(&self) -> bool {
        matches!(self, Check::Pass)
    }

    pub fn witness(&self) -> Option<&[BasisLabel]> {
        match self {
            Check::Pass => None,
            Check::Fail { witness, .. } => Some(witness),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LieReport {
    pub window: Window,
    pub anticommutativity: Check,
    pub jacobi: Check,
}

impl LieReport {
    pub fn passed(&self) -> bool {
        self.anticommutativity.passed() && self.jacobi.passed()
    }
}

/// Checks `[x,y] + [y,x] = 0` and the Jacobi identity on all basis
/// pairs and triples with indices in `Box(N)`.
pub fn verify_lie_axioms(spec: &AlgebraSpec, window: &Window) -> LieReport {
    let labels = spec.basis_labels(window.radius);
    let basis: Vec<AlgebraElement> = labels.iter().map(|l| spec.basis_element(l)).collect();

    let mut anti = Check::Pass;
    'pairs: for (i, x) in basis.iter().enumerate() {
        for (j, y) in basis.iter().enumerate() {
            let xy = bracket_unchecked(spec, x, y);
            let yx = bracket_unchecked(spec, y, x);
            if !xy.add(&yx).is_zero() {
                anti = Check::Fail {
                    witness: vec![labels[i].clone(), labels[j].clone()],
                    lhs: xy,
                    rhs: yx.scale(&Scalar::from_int(-1)),
                };
                break 'pairs;
            }
        }
    }

    let n = basis.len();
    // Brackets of pairs are reused across triples.
    let pair: Vec<Vec<AlgebraElement>> = basis
        .iter()
        .map(|x| basis.iter().map(|y| bracket_unchecked(spec, x, y)).collect())
        .collect();
    let mut jacobi = Check::Pass;
    'triples: for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let t1 = bracket_unchecked(spec, &pair[i][j], &basis[k]);
                let t2 = bracket_unchecked(spec, &pair[j][k], &basis[i]);
                let t3 = bracket_unchecked(spec, &pair[k][i], &basis[j]);
                let sum = t1.add(&t2).add(&t3);
                if !sum.is_zero() {
                    jacobi = Check::Fail {
                        witness: vec![labels[i].clone(), labels[j].clone(), labels[k].clone()],
                        lhs: sum,
                        rhs: AlgebraElement::zero(spec.width()),
                    };
                    break 'triples;
                }
            }
        }
    }

    LieReport {
        window: *window,
        anticommutativity: anti,
        jacobi,
    }
}

/// Whether `u_a` lies in the center, by the characterization
/// `Z(L) = span{u_0}` (`g = 0`) or `span{u_a : g(a) = 0, h(a) = -1}`.
pub fn center_predicate(spec: &AlgebraSpec, a: &GroupElement) -> Result<bool, AlgebraError> {
    let (g, _, form) = spec.require_block()?;
    match form {
        BlockForm::FromH(h) if !g.is_zero() => Ok(g.at(a).is_zero() && (h.at(a) + Scalar::one()).is_zero()),
        BlockForm::Unchecked if !g.is_zero() => Err(AlgebraError::FamilyMismatch {
            expected: "Lie block",
            got: "unchecked block",
        }),
        _ => Ok(a.is_zero()),
    }
}

/// Whether `u_a` lies in `[L, L]`: `a != 0` (`g = 0`) or
/// `g(a) != 0 or h(a) + 2 != 0`.
pub fn square_predicate(spec: &AlgebraSpec, a: &GroupElement) -> Result<bool, AlgebraError> {
    let (g, _, form) = spec.require_block()?;
    match form {
        BlockForm::FromH(h) if !g.is_zero() => {
            Ok(!g.at(a).is_zero() || !(h.at(a) + Scalar::from_int(2)).is_zero())
        }
        BlockForm::Unchecked if !g.is_zero() => Err(AlgebraError::FamilyMismatch {
            expected: "Lie block",
            got: "unchecked block",
        }),
        _ => Ok(!a.is_zero()),
    }
}

/// How a membership claim about `u_a` was settled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "evidence")]
pub enum Evidence {
    /// `[u_a, u_b] = 0` for every `b` in the window.
    CommutesWithWindow,
    /// `[u_a, u_b] = value * u_{a+b}` with `value != 0`.
    NonCommuting { b: GroupElement, value: Scalar, recipe: String },
    /// `[u_{a-b}, u_b] = value * u_a` with `value != 0`.
    Bracket { b: GroupElement, value: Scalar, recipe: String },
    /// No pair in the window brackets onto `u_a`.
    NoPairInWindow,
    /// The predicate could not be confirmed inside the window.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateEntry {
    pub index: GroupElement,
    pub predicate: bool,
    pub evidence: Evidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateReport {
    pub window: Window,
    pub entries: Vec<PredicateEntry>,
    pub unresolved: Vec<GroupElement>,
}

impl PredicateReport {
    pub fn passed(&self) -> bool {
        self.unresolved.is_empty()
    }
}

fn finish(window: &Window, entries: Vec<PredicateEntry>) -> PredicateReport {
    let unresolved = entries
        .iter()
        .filter(|e| e.evidence == Evidence::Unresolved)
        .map(|e| e.index.clone())
        .collect();
    PredicateReport {
        window: *window,
        entries,
        unresolved,
    }
}

pub fn verify_center(spec: &AlgebraSpec, window: &Window) -> Result<PredicateReport, AlgebraError> {
    let (g, f, _) = spec.require_block()?;
    let outer = window.points(spec.rank());
    let mut entries = Vec::new();
    for a in window.inner_points(spec.rank()) {
        let pred = center_predicate(spec, &a)?;
        let evidence = if pred {
            if outer.iter().all(|b| spec.structure_coeff(&a, b).is_zero()) {
                Evidence::CommutesWithWindow
            } else {
                Evidence::Unresolved
            }
        } else {
            // Recipes: g = 0 uses a non-degeneracy partner of a; otherwise
            // b = 0 when g(a) != 0, else any b with g(b) != 0.
            let recipe = if g.is_zero() {
                outer
                    .iter()
                    .find(|b| !f.at(&a, b).is_zero())
                    .map(|b| (b.clone(), "f(a,b) != 0"))
            } else if !g.at(&a).is_zero() {
                Some((GroupElement::zero(spec.rank()), "b = 0, g(a) != 0"))
            } else {
                outer
                    .iter()
                    .find(|b| !g.at(b).is_zero())
                    .map(|b| (b.clone(), "g(b) != 0, coefficient -g(b)(h(a)+1)"))
            };
            let found = recipe
                .and_then(|(b, r)| {
                    let v = spec.structure_coeff(&a, &b);
                    (!v.is_zero()).then(|| (b, v, r.to_string()))
                })
                .or_else(|| {
                    outer.iter().find_map(|b| {
                        let v = spec.structure_coeff(&a, b);
                        (!v.is_zero()).then(|| (b.clone(), v, "window scan".to_string()))
                    })
                });
            match found {
                Some((b, value, recipe)) => Evidence::NonCommuting { b, value, recipe },
                None => Evidence::Unresolved,
            }
        };
        entries.push(PredicateEntry {
            index: a,
            predicate: pred,
            evidence,
        });
    }
    Ok(finish(window, entries))
}

pub fn verify_square(spec: &AlgebraSpec, window: &Window) -> Result<PredicateReport, AlgebraError> {
    let (g, f, _) = spec.require_block()?;
    let outer = window.points(spec.rank());
    let mut entries = Vec::new();
    for a in window.inner_points(spec.rank()) {
        let pred = square_predicate(spec, &a)?;
        let evidence = if pred {
            let in_window = |b: &GroupElement| window.contains(&(&a - b));
            let recipe = if g.is_zero() {
                outer
                    .iter()
                    .find(|b| in_window(b) && !f.at(&a, b).is_zero())
                    .map(|b| (b.clone(), "[u_{a-b},u_b] = f(a,b) u_a"))
            } else if !g.at(&a).is_zero() {
                Some((GroupElement::zero(spec.rank()), "[u_a,u_0] = g(a) u_a"))
            } else {
                outer
                    .iter()
                    .find(|b| in_window(b) && !g.at(b).is_zero())
                    .map(|b| (b.clone(), "[u_{a-b},u_b] = -g(b)(h(a)+2) u_a"))
            };
            let check = |b: GroupElement, r: &str| {
                let v = spec.structure_coeff(&(&a - &b), &b);
                (!v.is_zero()).then(|| (b, v, r.to_string()))
            };
            let found = recipe.and_then(|(b, r)| check(b, r)).or_else(|| {
                outer
                    .iter()
                    .filter(|b| in_window(b))
                    .find_map(|b| check(b.clone(), "window scan"))
            });
            match found {
                Some((b, value, recipe)) => Evidence::Bracket { b, value, recipe },
                None => Evidence::Unresolved,
            }
        } else {
            let hit = outer
                .iter()
                .filter(|b| window.contains(&(&a - *b)))
                .any(|b| !spec.structure_coeff(&(&a - b), b).is_zero());
            if hit {
                Evidence::Unresolved
            } else {
                Evidence::NoPairInWindow
            }
        };
        entries.push(PredicateEntry {
            index: a,
            predicate: pred,
            evidence,
        });
    }
    Ok(finish(window, entries))
}

/// The isomorphism `W(A, Fv, <.,.>) -> V(f)`, `a (x) v -> e_a`,
/// `f(a) = <v, a>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WittCorrespondence {
    pub f: AdditiveMap,
    pub v: Scalar,
    pub target: AlgebraSpec,
}

impl WittCorrespondence {
    /// Image of a generalized Witt element: `a (x) c = (c/v) a (x) v -> (c/v) e_a`.
    pub fn map_element(&self, x: &AlgebraElement) -> AlgebraElement {
        AlgebraElement::from_scalars(x.terms().map(|(a, c)| (a.clone(), &c[0] / &self.v)))
    }

    /// Checks `phi([x, y]) = [phi(x), phi(y)]` on basis pairs in `Box(N)`.
    pub fn verify(&self, source: &AlgebraSpec, window: &Window) -> Check {
        let pts = window.points(source.rank());
        for a in &pts {
            for b in &pts {
                let x = AlgebraElement::from_terms(1, [(a.clone(), vec![self.v.clone()])]);
                let y = AlgebraElement::from_terms(1, [(b.clone(), vec![self.v.clone()])]);
                let lhs = self.map_element(&bracket_unchecked(source, &x, &y));
                let rhs = bracket_unchecked(&self.target, &self.map_element(&x), &self.map_element(&y));
                if lhs != rhs {
                    return Check::Fail {
                        witness: vec![BasisLabel::scalar(a.clone()), BasisLabel::scalar(b.clone())],
                        lhs,
                        rhs,
                    };
                }
            }
        }
        Check::Pass
    }
}

/// Witt-type model of a generalized Witt algebra with `dim V = 1`, using
/// the distinguished vector `v` (default `1`).
pub fn witt_to_witt_type(spec: &AlgebraSpec, v: Option<Scalar>) -> Result<WittCorrespondence, AlgebraError> {
    let pairing = spec.pairing().ok_or(AlgebraError::FamilyMismatch {
        expected: "generalized_witt",
        got: spec.family().name(),
    })?;
    if pairing.dim_v() != 1 {
        return Err(AlgebraError::DimMismatch(pairing.dim_v()));
    }
    let v = v.unwrap_or_else(Scalar::one);
    if v.is_zero() {
        return Err(AlgebraError::BadVector);
    }
    let f = AdditiveMap::new(pairing.matrix()[0].iter().map(|p| p * &v).collect());
    Ok(WittCorrespondence {
        target: AlgebraSpec::witt_type(f.clone()),
        f,
        v,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum SpecJson {
    GeneralizedWitt {
        pairing: Pairing,
    },
    Block {
        #[serde(default)]
        g: Option<AdditiveMap>,
        #[serde(default)]
        h: Option<AdditiveMap>,
        #[serde(default)]
        f: Option<BiadditiveForm>,
    },
    BlockUnchecked {
        g: AdditiveMap,
        f: BiadditiveForm,
    },
    WittType {
        f: AdditiveMap,
    },
}

impl Serialize for AlgebraSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let j = match &self.data {
            Data::GeneralizedWitt { pairing } => SpecJson::GeneralizedWitt {
                pairing: pairing.clone(),
            },
            Data::Block { g, f, form } => match form {
                BlockForm::ZeroG => SpecJson::Block {
                    g: None,
                    h: None,
                    f: Some(f.clone()),
                },
                BlockForm::FromH(h) => SpecJson::Block {
                    g: Some(g.clone()),
                    h: Some(h.clone()),
                    f: None,
                },
                BlockForm::Unchecked => SpecJson::BlockUnchecked {
                    g: g.clone(),
                    f: f.clone(),
                },
            },
            Data::WittType { f } => SpecJson::WittType { f: f.clone() },
        };
        j.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AlgebraSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let j = SpecJson::deserialize(d)?;
        match j {
            SpecJson::GeneralizedWitt { pairing } => Ok(AlgebraSpec::generalized_witt(pairing)),
            SpecJson::Block { g, h, f } => match (g, h, f) {
                (Some(g), Some(h), None) => AlgebraSpec::block(g, h).map_err(D::Error::custom),
                (g, None, Some(f)) => {
                    if g.as_ref().is_some_and(|g| !g.is_zero()) {
                        Err(D::Error::custom(
                            "block: g != 0 requires h (use family \"block_unchecked\" for raw (g, f))",
                        ))
                    } else if g.is_some_and(|g| g.rank() != f.rank()) {
                        Err(D::Error::custom("block: g and f have different ranks"))
                    } else {
                        Ok(AlgebraSpec::block_zero_g(f))
                    }
                }
                _ => Err(D::Error::custom("block: give either (g, h) or f with g = 0")),
            },
            SpecJson::BlockUnchecked { g, f } => AlgebraSpec::block_unchecked(g, f).map_err(D::Error::custom),
            SpecJson::WittType { f } => Ok(AlgebraSpec::witt_type(f)),
        }
    }
}
