//! Commutative products compatible with the bracket.
//!
//! A transposed Poisson structure is a commutative associative product `·`
//! with `2z·[x,y] = [z·x, y] + [x, z·y]`. This module builds the standard
//! products on the three families, checks the identities exactly on a
//! window, and classifies products whose left multiplications are drawn from
//! a computed ½-derivation space.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{bracket_unchecked, AlgebraElement, AlgebraSpec, BasisLabel, Check, Family};
use crate::exactlin::{self, LinAlgError, NullspaceBasis, SparseMatrix};
use crate::halfderiv::HalfDerivationComponent;
use crate::lattice::{box_points, GroupElement, Window};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TpError {
    #[error("{variant} products are not defined on {family} algebras")]
    FamilyMismatch { variant: &'static str, family: &'static str },
    #[error("invalid product: {0}")]
    InvalidProduct(String),
    #[error("the ½-derivation family lacks degree {0}")]
    MissingDegree(GroupElement),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarEntry {
    pub a: GroupElement,
    pub b: GroupElement,
    pub value: AlgebraElement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub a: BasisLabel,
    pub b: BasisLabel,
    pub value: AlgebraElement,
}

/// A bilinear symmetric product given on basis vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ProductSpec {
    Zero,
    /// `u_a ∘ u_b = Σ_c w_c u_{a+b+c}`.
    Mutation { w: AlgebraElement },
    /// `u_0 · u_0 = u_0`, every other basis product zero.
    SingleIdempotent,
    /// `u_a · u_b = star(a, b)` on `A_{(0,-2)}`, zero elsewhere.
    ExtensionByZero { star: Vec<StarEntry> },
    /// Arbitrary symmetric table; missing pairs multiply to zero.
    Explicit { table: Vec<TableEntry> },
}

impl ProductSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProductSpec::Zero => "zero",
            ProductSpec::Mutation { .. } => "mutation",
            ProductSpec::SingleIdempotent => "single_idempotent",
            ProductSpec::ExtensionByZero { .. } => "extension_by_zero",
            ProductSpec::Explicit { .. } => "explicit",
        }
    }

    /// The same product multiplied by `k`.
    pub fn scaled(&self, spec: &AlgebraSpec, k: &Scalar) -> ProductSpec {
        match self {
            ProductSpec::Zero => ProductSpec::Zero,
            ProductSpec::Mutation { w } => ProductSpec::Mutation { w: w.scale(k) },
            ProductSpec::SingleIdempotent => {
                let zero = GroupElement::zero(spec.rank());
                ProductSpec::Explicit {
                    table: vec![TableEntry {
                        a: BasisLabel::scalar(zero.clone()),
                        b: BasisLabel::scalar(zero.clone()),
                        value: AlgebraElement::from_scalars([(zero, k.clone())]),
                    }],
                }
            }
            ProductSpec::ExtensionByZero { star } => ProductSpec::ExtensionByZero {
                star: star
                    .iter()
                    .map(|e| StarEntry {
                        a: e.a.clone(),
                        b: e.b.clone(),
                        value: e.value.scale(k),
                    })
                    .collect(),
            },
            ProductSpec::Explicit { table } => ProductSpec::Explicit {
                table: table
                    .iter()
                    .map(|e| TableEntry {
                        a: e.a.clone(),
                        b: e.b.clone(),
                        value: e.value.scale(k),
                    })
                    .collect(),
            },
        }
    }
}

/// A product validated against an algebra, with its tables indexed.
#[derive(Debug, Clone)]
pub struct Product<'a> {
    spec: &'a AlgebraSpec,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Zero,
    Mutation(AlgebraElement),
    Idempotent,
    Table(BTreeMap<(BasisLabel, BasisLabel), AlgebraElement>),
}

fn mismatch(p: &ProductSpec, spec: &AlgebraSpec) -> TpError {
    TpError::FamilyMismatch {
        variant: p.name(),
        family: spec.family().name(),
    }
}

fn insert_symmetric(
    map: &mut BTreeMap<(BasisLabel, BasisLabel), AlgebraElement>,
    a: BasisLabel,
    b: BasisLabel,
    value: AlgebraElement,
) -> Result<(), TpError> {
    for key in [(a.clone(), b.clone()), (b, a)] {
        if let Some(old) = map.get(&key) {
            if *old != value {
                return Err(TpError::InvalidProduct(format!(
                    "table is not symmetric at ({}, {})",
                    key.0, key.1
                )));
            }
        }
        map.insert(key, value.clone());
    }
    Ok(())
}

impl<'a> Product<'a> {
    pub fn new(spec: &'a AlgebraSpec, p: &ProductSpec) -> Result<Self, TpError> {
        let check_elem = |e: &AlgebraElement| -> Result<(), TpError> {
            if e.width() != spec.width() || e.support().any(|k| k.rank() != spec.rank()) {
                return Err(TpError::InvalidProduct("element does not belong to the algebra".into()));
            }
            Ok(())
        };
        let kind = match p {
            ProductSpec::Zero => Kind::Zero,
            ProductSpec::Mutation { w } => {
                let dim_one = spec.family() == Family::WittType
                    || spec.pairing().is_some_and(|p| p.dim_v() == 1);
                if !dim_one {
                    return Err(mismatch(p, spec));
                }
                check_elem(w)?;
                Kind::Mutation(w.clone())
            }
            ProductSpec::SingleIdempotent => match spec.block_data() {
                Some((g, _, _)) if g.is_zero() => Kind::Idempotent,
                _ => return Err(mismatch(p, spec)),
            },
            ProductSpec::ExtensionByZero { star } => {
                let (g, h) = spec.block_gh().ok_or_else(|| mismatch(p, spec))?;
                let in_coset = |a: &GroupElement, mu: i64| g.at(a).is_zero() && h.at(a) == Scalar::from_int(mu);
                let mut map = BTreeMap::new();
                for e in star {
                    check_elem(&e.value)?;
                    if e.a.rank() != spec.rank() || e.b.rank() != spec.rank() {
                        return Err(TpError::InvalidProduct("star key has the wrong rank".into()));
                    }
                    if !in_coset(&e.a, -2) || !in_coset(&e.b, -2) {
                        return Err(TpError::InvalidProduct(format!(
                            "star key ({}, {}) is outside A_(0,-2)",
                            e.a, e.b
                        )));
                    }
                    if let Some(c) = e.value.support().find(|c| !in_coset(c, -1)) {
                        return Err(TpError::InvalidProduct(format!("star value at {c} is outside A_(0,-1)")));
                    }
                    insert_symmetric(
                        &mut map,
                        BasisLabel::scalar(e.a.clone()),
                        BasisLabel::scalar(e.b.clone()),
                        e.value.clone(),
                    )?;
                }
                Kind::Table(map)
            }
            ProductSpec::Explicit { table } => {
                let mut map = BTreeMap::new();
                for e in table {
                    check_elem(&e.value)?;
                    for l in [&e.a, &e.b] {
                        if l.index.rank() != spec.rank() || l.comp >= spec.width() {
                            return Err(TpError::InvalidProduct(format!("label {l} does not belong to the algebra")));
                        }
                    }
                    insert_symmetric(&mut map, e.a.clone(), e.b.clone(), e.value.clone())?;
                }
                Kind::Table(map)
            }
        };
        Ok(Product { spec, kind })
    }

    pub fn spec(&self) -> &AlgebraSpec {
        self.spec
    }

    /// Product of two basis vectors.
    pub fn basis_product(&self, x: &BasisLabel, y: &BasisLabel) -> AlgebraElement {
        let w = self.spec.width();
        match &self.kind {
            Kind::Zero => AlgebraElement::zero(w),
            Kind::Mutation(m) => m.shifted(&(&x.index + &y.index)),
            Kind::Idempotent => {
                if x.index.is_zero() && y.index.is_zero() {
                    self.spec.basis_element(x)
                } else {
                    AlgebraElement::zero(w)
                }
            }
            Kind::Table(t) => t
                .get(&(x.clone(), y.clone()))
                .cloned()
                .unwrap_or_else(|| AlgebraElement::zero(w)),
        }
    }

    /// Bilinear extension of the basis products; exact and untruncated.
    pub fn multiply(&self, x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
        let w = self.spec.width();
        let mut out = AlgebraElement::zero(w);
        for (a, v) in x.terms() {
            for (b, u) in y.terms() {
                for (i, vi) in v.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
                    for (j, uj) in u.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
                        let p = self.basis_product(
                            &BasisLabel { index: a.clone(), comp: i },
                            &BasisLabel { index: b.clone(), comp: j },
                        );
                        out.add_scaled(&p, &(vi * uj));
                    }
                }
            }
        }
        out
    }
}

pub fn multiply(
    spec: &AlgebraSpec,
    p: &ProductSpec,
    x: &AlgebraElement,
    y: &AlgebraElement,
) -> Result<AlgebraElement, TpError> {
    let prod = Product::new(spec, p)?;
    for e in [x, y] {
        if e.width() != spec.width() || e.support().any(|k| k.rank() != spec.rank()) {
            return Err(TpError::InvalidProduct("element does not belong to the algebra".into()));
        }
    }
    Ok(prod.multiply(x, y))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub window: Window,
    pub commutative: Check,
    pub associative: Check,
    pub trans_leibniz: Check,
    pub poisson_leibniz: Check,
}

impl VerificationReport {
    /// The transposed Poisson axioms: commutativity, associativity and the
    /// compatibility identity.
    pub fn is_transposed_poisson(&self) -> bool {
        self.commutative.passed() && self.associative.passed() && self.trans_leibniz.passed()
    }

    pub fn all_passed(&self) -> bool {
        self.is_transposed_poisson() && self.poisson_leibniz.passed()
    }
}

type Identity<'p> = dyn Fn(&[AlgebraElement]) -> Option<(AlgebraElement, AlgebraElement)> + Sync + 'p;

/// First failing tuple in lexicographic order of label positions. Rows of
/// the outermost index are scanned in parallel; `find_map_first` keeps the
/// least one.
fn first_failure(labels: &[BasisLabel], basis: &[AlgebraElement], arity: usize, test: &Identity<'_>) -> Check {
    let n = basis.len();
    let found = (0..n).into_par_iter().find_map_first(|i| {
        let mut idx = vec![i; arity];
        let mut tail = vec![0usize; arity - 1];
        loop {
            idx[1..].copy_from_slice(&tail);
            let args: Vec<AlgebraElement> = idx.iter().map(|&k| basis[k].clone()).collect();
            if let Some((lhs, rhs)) = test(&args) {
                return Some((idx.iter().map(|&k| labels[k].clone()).collect::<Vec<_>>(), lhs, rhs));
            }
            // Odometer over the remaining positions.
            let mut p = arity - 1;
            loop {
                if p == 0 {
                    return None;
                }
                tail[p - 1] += 1;
                if tail[p - 1] < n {
                    break;
                }
                tail[p - 1] = 0;
                p -= 1;
            }
        }
    });
    match found {
        None => Check::Pass,
        Some((witness, lhs, rhs)) => Check::Fail { witness, lhs, rhs },
    }
}

/// Checks commutativity on basis pairs and associativity, the
/// compatibility identity `2z·[x,y] = [z·x,y] + [x,z·y]` and the Poisson
/// Leibniz rule `[x·y,z] = x·[y,z] + [x,z]·y` on basis triples, all with
/// indices in `Box(N)`.
pub fn verify(spec: &AlgebraSpec, p: &ProductSpec, window: &Window) -> Result<VerificationReport, TpError> {
    let prod = Product::new(spec, p)?;
    let labels = spec.basis_labels(window.radius);
    let basis: Vec<AlgebraElement> = labels.iter().map(|l| spec.basis_element(l)).collect();
    let mul = |x: &AlgebraElement, y: &AlgebraElement| prod.multiply(x, y);
    let br = |x: &AlgebraElement, y: &AlgebraElement| bracket_unchecked(spec, x, y);
    let differ = |lhs: AlgebraElement, rhs: AlgebraElement| (lhs != rhs).then_some((lhs, rhs));

    let commutative = first_failure(&labels, &basis, 2, &|v| differ(mul(&v[0], &v[1]), mul(&v[1], &v[0])));
    let associative = first_failure(&labels, &basis, 3, &|v| {
        differ(mul(&mul(&v[0], &v[1]), &v[2]), mul(&v[0], &mul(&v[1], &v[2])))
    });
    // Tuples are reported as (x, y, z).
    let trans_leibniz = first_failure(&labels, &basis, 3, &|v| {
        let (x, y, z) = (&v[0], &v[1], &v[2]);
        let lhs = mul(z, &br(x, y)).scale(&Scalar::from_int(2));
        let rhs = br(&mul(z, x), y).add(&br(x, &mul(z, y)));
        differ(lhs, rhs)
    });
    let poisson_leibniz = first_failure(&labels, &basis, 3, &|v| {
        let (x, y, z) = (&v[0], &v[1], &v[2]);
        let lhs = br(&mul(x, y), z);
        let rhs = mul(x, &br(y, z)).add(&mul(&br(x, z), y));
        differ(lhs, rhs)
    });
    Ok(VerificationReport {
        window: *window,
        commutative,
        associative,
        trans_leibniz,
        poisson_leibniz,
    })
}

/// Graded pieces of `x -> z·x` with tables on `Box(N)`, in shell order of
/// degree.
pub fn left_mult_table(
    spec: &AlgebraSpec,
    p: &ProductSpec,
    z: &BasisLabel,
    window: &Window,
) -> Result<Vec<HalfDerivationComponent>, TpError> {
    let prod = Product::new(spec, p)?;
    let w = spec.width();
    let mut by_degree: BTreeMap<GroupElement, BTreeMap<GroupElement, Vec<Scalar>>> = BTreeMap::new();
    for x in spec.basis_labels(window.radius) {
        let image = prod.basis_product(z, &x);
        for (c, coeffs) in image.terms() {
            let degree = c - &x.index;
            let m = by_degree
                .entry(degree)
                .or_default()
                .entry(x.index.clone())
                .or_insert_with(|| vec![Scalar::zero(); w * w]);
            for (r, v) in coeffs.iter().enumerate() {
                m[r * w + x.comp] = v.clone();
            }
        }
    }
    let mut out: Vec<HalfDerivationComponent> = by_degree
        .into_iter()
        .map(|(degree, table)| {
            let mut comp = HalfDerivationComponent::new(degree, w);
            for (x, m) in table {
                comp.set_matrix(x, m);
            }
            comp
        })
        .filter(|c| !c.is_zero())
        .collect();
    out.sort_by(|a, b| a.degree.shell_cmp(&b.degree));
    Ok(out)
}

/// One free parameter of a classified family and the product it scales.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub generator: ProductSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociativitySample {
    pub values: Vec<Scalar>,
    pub triples_checked: usize,
    pub triples_skipped: usize,
    pub check: Check,
}

/// Products `Σ t_i P_i` on the inner box whose left multiplications lie in
/// the supplied ½-derivation space and which are commutative there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub window: Window,
    pub n_unknowns: usize,
    pub n_constraints: usize,
    pub parameters: Vec<Parameter>,
    pub seed: u64,
    pub samples: Vec<AssociativitySample>,
}

impl Classification {
    pub fn is_zero_only(&self) -> bool {
        self.parameters.is_empty()
    }

    pub fn associativity_passed(&self) -> bool {
        self.samples.iter().all(|s| s.check.passed())
    }

    /// `Σ values[i] · generator[i]` as one explicit table.
    pub fn member(&self, values: &[Scalar]) -> ProductSpec {
        let mut table: BTreeMap<(BasisLabel, BasisLabel), AlgebraElement> = BTreeMap::new();
        for (p, t) in self.parameters.iter().zip(values) {
            if let ProductSpec::Explicit { table: entries } = &p.generator {
                for e in entries {
                    let key = (e.a.clone(), e.b.clone());
                    let slot = table
                        .entry(key)
                        .or_insert_with(|| AlgebraElement::zero(e.value.width()));
                    slot.add_scaled(&e.value, t);
                }
            }
        }
        explicit_from_map(table)
    }
}

fn explicit_from_map(table: BTreeMap<(BasisLabel, BasisLabel), AlgebraElement>) -> ProductSpec {
    ProductSpec::Explicit {
        table: table
            .into_iter()
            .filter(|(k, v)| !v.is_zero() && k.0 <= k.1)
            .map(|((a, b), value)| TableEntry { a, b, value })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifyOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { samples: 3, seed: 0 }
    }
}

/// Classifies products on `InnerBox` whose left multiplications are
/// combinations of the given per-degree ½-derivation bases.
///
/// `delta` maps each degree to basis tables of its ½-derivation space; every
/// degree of `Box(N - m)` must be present. Tables are restricted to sources
/// in the inner box before use.
pub fn classify(
    spec: &AlgebraSpec,
    delta: &BTreeMap<GroupElement, Vec<HalfDerivationComponent>>,
    window: &Window,
    options: &ClassifyOptions,
) -> Result<Classification, TpError> {
    let inner_r = window.inner_radius();
    for d in box_points(spec.rank(), inner_r) {
        if !delta.contains_key(&d) {
            return Err(TpError::MissingDegree(d));
        }
    }
    let w = spec.width();
    let labels = spec.basis_labels(inner_r);

    // Canonical restricted basis per degree; directions vanishing on the
    // inner box cannot influence products of inner basis vectors.
    let mut generators: Vec<HalfDerivationComponent> = Vec::new();
    for (degree, comps) in delta {
        let sources = box_points(spec.rank(), inner_r);
        let flat = |c: &HalfDerivationComponent| -> Vec<Scalar> {
            sources
                .iter()
                .flat_map(|x| match c.entry(x) {
                    Some(m) => m.to_vec(),
                    None => vec![Scalar::zero(); w * w],
                })
                .collect()
        };
        let vecs: Vec<Vec<Scalar>> = comps.iter().map(flat).collect();
        let span = NullspaceBasis::span_of(sources.len() * w * w, &vecs)?;
        for v in span.vectors() {
            let mut comp = HalfDerivationComponent::new(degree.clone(), w);
            for (p, x) in sources.iter().enumerate() {
                comp.set_matrix(x.clone(), v[p * w * w..(p + 1) * w * w].to_vec());
            }
            generators.push(comp);
        }
    }

    // Unknown (a, k): coefficient of generator k in L_{u_a}.
    let n_gen = generators.len();
    let col = |a: usize, k: usize| a * n_gen + k;
    let images: Vec<Vec<AlgebraElement>> = generators
        .iter()
        .map(|g| labels.iter().map(|l| g.apply(&spec.basis_element(l))).collect())
        .collect();
    let mut triplets = Vec::new();
    let mut n_rows = 0;
    for ia in 0..labels.len() {
        for ib in ia + 1..labels.len() {
            // L_a(u_b) - L_b(u_a) = 0, one row per (index, component).
            let mut rows: BTreeMap<(GroupElement, usize), BTreeMap<usize, Scalar>> = BTreeMap::new();
            for (k, image) in images.iter().enumerate() {
                for (sign, owner, arg) in [(1, ia, ib), (-1, ib, ia)] {
                    for (c, coeffs) in image[arg].terms() {
                        for (r, v) in coeffs.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                            *rows
                                .entry((c.clone(), r))
                                .or_default()
                                .entry(col(owner, k))
                                .or_insert_with(Scalar::zero) += v * &Scalar::from_int(sign);
                        }
                    }
                }
            }
            for row in rows.into_values() {
                for (c, v) in row {
                    triplets.push((n_rows, c, v));
                }
                n_rows += 1;
            }
        }
    }
    let n_unknowns = labels.len() * n_gen;
    let solutions = if n_unknowns == 0 {
        NullspaceBasis::empty(0)
    } else if n_rows == 0 {
        exactlin::nullspace(&SparseMatrix::zeros(0, n_unknowns))?
    } else {
        exactlin::nullspace(&SparseMatrix::from_triplets(n_rows, n_unknowns, triplets)?)?
    };

    let parameters: Vec<Parameter> = solutions
        .vectors()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut table = BTreeMap::new();
            for (ia, a) in labels.iter().enumerate() {
                for (ib, b) in labels.iter().enumerate() {
                    let mut ab = AlgebraElement::zero(w);
                    for (k, image) in images.iter().enumerate() {
                        ab.add_scaled(&image[ib], &s[col(ia, k)]);
                    }
                    if !ab.is_zero() {
                        table.insert((a.clone(), b.clone()), ab);
                    }
                }
            }
            Parameter {
                name: format!("t{}", i + 1),
                generator: explicit_from_map(table),
            }
        })
        .collect();

    let mut classification = Classification {
        window: *window,
        n_unknowns,
        n_constraints: n_rows,
        parameters,
        seed: options.seed,
        samples: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let samples = if classification.parameters.is_empty() { 0 } else { options.samples };
    for _ in 0..samples {
        let values: Vec<Scalar> = (0..classification.parameters.len())
            .map(|_| {
                let den = rng.gen_range(1..=9i64);
                let num = loop {
                    let n = rng.gen_range(-9..=9i64);
                    if n != 0 {
                        break n;
                    }
                };
                Scalar::new(num, den)
            })
            .collect();
        let member = classification.member(&values);
        let sample = inner_associativity(spec, &member, inner_r, values)?;
        classification.samples.push(sample);
    }
    Ok(classification)
}

/// Associativity on inner-box triples whose intermediate products stay
/// inside the inner box (the table is unknown beyond it).
fn inner_associativity(
    spec: &AlgebraSpec,
    p: &ProductSpec,
    inner_r: u32,
    values: Vec<Scalar>,
) -> Result<AssociativitySample, TpError> {
    let prod = Product::new(spec, p)?;
    let labels = spec.basis_labels(inner_r);
    let inside = |e: &AlgebraElement| e.support().all(|c| c.norm() <= inner_r as u64);
    let mut checked = 0;
    let mut skipped = 0;
    for x in &labels {
        for y in &labels {
            for z in &labels {
                let (ex, ey, ez) = (spec.basis_element(x), spec.basis_element(y), spec.basis_element(z));
                let xy = prod.multiply(&ex, &ey);
                let yz = prod.multiply(&ey, &ez);
                if !inside(&xy) || !inside(&yz) {
                    skipped += 1;
                    continue;
                }
                checked += 1;
                let lhs = prod.multiply(&xy, &ez);
                let rhs = prod.multiply(&ex, &yz);
                if lhs != rhs {
                    return Ok(AssociativitySample {
                        values,
                        triples_checked: checked,
                        triples_skipped: skipped,
                        check: Check::Fail {
                            witness: vec![x.clone(), y.clone(), z.clone()],
                            lhs,
                            rhs,
                        },
                    });
                }
            }
        }
    }
    Ok(AssociativitySample {
        values,
        triples_checked: checked,
        triples_skipped: skipped,
        check: Check::Pass,
    })
}
