//! Batch jobs: a JSON config names an algebra, a window and a task; `run`
//! executes it and returns a JSON report with pass/fail verdicts.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tpw_core::algebra::{self, AlgebraSpec, Family};
use tpw_core::halfderiv::{self, SweepOptions};
use tpw_core::lattice::{self, NondegeneracyDatum, Window};
use tpw_core::tpstruct::{self, ClassifyOptions, ProductSpec, VerificationReport};
use tpw_core::{AlgebraElement, GroupElement, Scalar};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_MAX_UNKNOWNS: usize = 20_000;
pub const DEFAULT_MAX_TRIPLES: u64 = 50_000_000;
pub const MAX_UNKNOWNS_ENV: &str = "TPW_MAX_UNKNOWNS";

#[derive(Debug, thiserror::Error)]
pub enum JobError {
    #[error("config error: {0}")]
    Config(String),
    #[error("limit exceeded: {limit} = {allowed}, job needs {needed}")]
    LimitExceeded { limit: &'static str, allowed: u64, needed: u64 },
    #[error("{0}")]
    Task(String),
}

fn task_err<E: std::fmt::Display>(e: E) -> JobError {
    JobError::Task(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    CheckLie,
    Witnesses,
    CenterSquare,
    SolveHalfDerivations,
    ClassifyTp,
    VerifyStructure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    #[serde(default = "default_max_unknowns")]
    pub max_unknowns: usize,
    #[serde(default = "default_max_triples")]
    pub max_triples: u64,
}

fn default_max_unknowns() -> usize {
    DEFAULT_MAX_UNKNOWNS
}

fn default_max_triples() -> u64 {
    DEFAULT_MAX_TRIPLES
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_unknowns: DEFAULT_MAX_UNKNOWNS,
            max_triples: DEFAULT_MAX_TRIPLES,
        }
    }
}

/// Seeded random mutation multipliers for `verify-structure`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomMutations {
    pub count: usize,
    pub max_terms: usize,
    /// Support is drawn from `[-support_radius, support_radius]^n`.
    #[serde(default = "default_support_radius")]
    pub support_radius: u32,
}

fn default_support_radius() -> u32 {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    Commutative,
    Associative,
    TransLeibniz,
    PoissonLeibniz,
}

impl Identity {
    pub const ALL: [Identity; 4] = [
        Identity::Commutative,
        Identity::Associative,
        Identity::TransLeibniz,
        Identity::PoissonLeibniz,
    ];

    fn name(self) -> &'static str {
        match self {
            Identity::Commutative => "commutative",
            Identity::Associative => "associative",
            Identity::TransLeibniz => "trans_leibniz",
            Identity::PoissonLeibniz => "poisson_leibniz",
        }
    }

    fn check(self, r: &VerificationReport) -> &algebra::Check {
        match self {
            Identity::Commutative => &r.commutative,
            Identity::Associative => &r.associative,
            Identity::TransLeibniz => &r.trans_leibniz,
            Identity::PoissonLeibniz => &r.poisson_leibniz,
        }
    }
}

/// Expected outcomes; each present field becomes a verdict.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<usize>,
    /// Identities that must fail (e.g. Poisson Leibniz for mutations).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failing: Vec<Identity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub algebra: AlgebraSpec,
    pub window: Window,
    #[serde(default = "default_delta")]
    pub delta: Scalar,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree_bound: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<ProductSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_mutations: Option<RandomMutations>,
    /// Identities that must pass in `verify-structure`; all four by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub require: Option<Vec<Identity>>,
    #[serde(default)]
    pub expect: Expect,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub limits: Limits,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_delta() -> Scalar {
    Scalar::new(1, 2)
}

fn default_samples() -> usize {
    3
}

impl JobConfig {
    pub fn from_json(text: &str) -> Result<Self, JobError> {
        let cfg: JobConfig = serde_json::from_str(text).map_err(|e| JobError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), JobError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(JobError::Config(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        Window::new(self.window.radius, self.window.inner_margin)
            .map_err(|e| JobError::Config(format!("window: {e}")))?;
        if self.limits.max_unknowns == 0 {
            return Err(JobError::Config("limits.max_unknowns: must be positive".into()));
        }
        if self.limits.max_triples == 0 {
            return Err(JobError::Config("limits.max_triples: must be positive".into()));
        }
        if self.delta.is_zero() {
            return Err(JobError::Config("delta: must be nonzero".into()));
        }
        if let Some(b) = self.degree_bound {
            if b > self.window.radius {
                return Err(JobError::Config(format!(
                    "degree_bound: {b} exceeds window radius {}",
                    self.window.radius
                )));
            }
        }
        if self.task == Task::VerifyStructure && self.product.is_none() && self.random_mutations.is_none() {
            return Err(JobError::Config(
                "product: verify-structure needs `product` or `random_mutations`".into(),
            ));
        }
        Ok(())
    }

    fn degree_bound(&self) -> u32 {
        self.degree_bound.unwrap_or(self.window.radius.min(2))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobReport {
    pub schema_version: u32,
    pub config: JobConfig,
    pub result: Value,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
    pub timing: Timing,
}

impl JobReport {
    /// The report as JSON without the timing field, for golden comparisons.
    pub fn deterministic_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timing");
        v
    }

    pub fn summary(&self) -> String {
        let name = self.config.name.clone().unwrap_or_else(|| {
            serde_json::to_value(self.config.task)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default()
        });
        let mut out = format!(
            "{} [{}] {} ms\n",
            if self.pass { "PASS" } else { "FAIL" },
            name,
            self.timing.elapsed_ms
        );
        for v in &self.verdicts {
            out.push_str(&format!(
                "  {} {}: {}\n",
                if v.pass { "ok  " } else { "FAIL" },
                v.name,
                v.detail
            ));
        }
        out
    }
}

/// Resolves the unknown limit: the environment variable wins over the config.
pub fn effective_max_unknowns(cfg: &JobConfig) -> Result<usize, JobError> {
    match std::env::var(MAX_UNKNOWNS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| JobError::Config(format!("{MAX_UNKNOWNS_ENV}: expected a positive integer, got {s:?}"))),
        Err(_) => Ok(cfg.limits.max_unknowns),
    }
}

fn check_triples(spec: &AlgebraSpec, radius: u32, cfg: &JobConfig) -> Result<(), JobError> {
    let labels = spec.basis_labels(radius).len() as u64;
    let needed = labels.saturating_pow(3);
    if needed > cfg.limits.max_triples {
        return Err(JobError::LimitExceeded {
            limit: "max_triples",
            allowed: cfg.limits.max_triples,
            needed,
        });
    }
    Ok(())
}

fn check_unknowns(spec: &AlgebraSpec, window: &Window, max: usize) -> Result<(), JobError> {
    let w = spec.width();
    let needed = (2 * window.radius as u64 + 1).pow(spec.rank() as u32) * (w * w) as u64;
    if needed > max as u64 {
        return Err(JobError::LimitExceeded {
            limit: "max_unknowns",
            allowed: max as u64,
            needed,
        });
    }
    Ok(())
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report values serialize")
}

pub fn run(cfg: &JobConfig) -> Result<JobReport, JobError> {
    cfg.validate()?;
    let start = Instant::now();
    let (result, mut verdicts) = match cfg.task {
        Task::CheckLie => check_lie(cfg)?,
        Task::Witnesses => witnesses(cfg)?,
        Task::CenterSquare => center_square(cfg)?,
        Task::SolveHalfDerivations => solve_half_derivations(cfg)?,
        Task::ClassifyTp => classify_tp(cfg)?,
        Task::VerifyStructure => verify_structure(cfg)?,
    };
    if let Some(expected) = &cfg.expect.verdict {
        let got = result.get("verdict").and_then(Value::as_str).unwrap_or("");
        verdicts.push(Verdict::new(
            "expected verdict",
            got == expected,
            format!("expected {expected:?}, got {got:?}"),
        ));
    }
    let pass = verdicts.iter().all(|v| v.pass);
    Ok(JobReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        result,
        verdicts,
        pass,
        timing: Timing {
            elapsed_ms: start.elapsed().as_millis() as u64,
        },
    })
}

type TaskOutput = (Value, Vec<Verdict>);

fn check_lie(cfg: &JobConfig) -> Result<TaskOutput, JobError> {
    check_triples(&cfg.algebra, cfg.window.radius, cfg)?;
    let rep = algebra::verify_lie_axioms(&cfg.algebra, &cfg.window);
    let detail = |c: &algebra::Check| match c.witness() {
        None => "holds on all basis tuples".to_string(),
        Some(w) => format!(
            "witness ({})",
            w.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
        ),
    };
    let verdicts = vec![
        Verdict::new("anticommutativity", rep.anticommutativity.passed(), detail(&rep.anticommutativity)),
        Verdict::new("jacobi", rep.jacobi.passed(), detail(&rep.jacobi)),
    ];
    Ok((to_value(&rep), verdicts))
}

fn witnesses(cfg: &JobConfig) -> Result<TaskOutput, JobError> {
    let spec = &cfg.algebra;
    let mut result = serde_json::Map::new();
    let mut verdicts = Vec::new();
    if let Some(p) = spec.pairing() {
        let rep = lattice::nondegeneracy_witnesses(NondegeneracyDatum::Pairing(p), &cfg.window);
        verdicts.push(Verdict::new(
            "pairing non-degenerate on window",
            !rep.degenerate_in_window,
            format!("{} nonzero indices checked", rep.witnesses.len()),
        ));
        result.insert("pairing".into(), to_value(&rep));
    }
    if let Some((g, f, _)) = spec.block_data() {
        if g.is_zero() {
            let rep = lattice::nondegeneracy_witnesses(NondegeneracyDatum::Form(f), &cfg.window);
            verdicts.push(Verdict::new(
                "form non-degenerate on window",
                !rep.degenerate_in_window,
                format!("{} nonzero indices checked", rep.witnesses.len()),
            ));
            result.insert("form".into(), to_value(&rep));
        }
    }
    if let Some((g, h)) = spec.block_gh() {
        if !h.is_zero() {
            let a = lattice::common_nonvanishing(g, h, &cfg.window).map_err(task_err)?;
            verdicts.push(Verdict::new("common nonvanishing point", true, format!("g and h nonzero at {a}")));
            result.insert("common_nonvanishing".into(), to_value(&a));
        }
        let zero = Scalar::zero();
        result.insert(
            "A_(0,-1)".into(),
            to_value(&lattice::coset_filter(g, h, &zero, &Scalar::from_int(-1), &cfg.window)),
        );
        result.insert(
            "A_(0,-2)".into(),
            to_value(&lattice::coset_filter(g, h, &zero, &Scalar::from_int(-2), &cfg.window)),
        );
    }
    if let Some(f) = spec.witt_map() {
        let zero_in_window = cfg.window.points(spec.rank()).iter().filter(|a| !a.is_zero()).all(|a| f.eval(a).is_ok_and(|v| !v.is_zero()));
        verdicts.push(Verdict::new(
            "f injective on window",
            zero_in_window,
            "f(a) != 0 for every nonzero a in the window",
        ));
    }
    if verdicts.is_empty() {
        verdicts.push(Verdict::new("witnesses", true, "no non-degeneracy datum for this family"));
    }
    Ok((Value::Object(result), verdicts))
}

fn center_square(cfg: &JobConfig) -> Result<TaskOutput, JobError> {
    let c = algebra::verify_center(&cfg.algebra, &cfg.window).map_err(task_err)?;
    let s = algebra::verify_square(&cfg.algebra, &cfg.window).map_err(task_err)?;
    let verdicts = vec![
        Verdict::new(
            "center",
            c.passed(),
            format!("{} indices, {} unresolved", c.entries.len(), c.unresolved.len()),
        ),
        Verdict::new(
            "square",
            s.passed(),
            format!("{} indices, {} unresolved", s.entries.len(), s.unresolved.len()),
        ),
    ];
    Ok((json!({ "center": c, "square": s }), verdicts))
}

fn sweep(cfg: &JobConfig) -> Result<(halfderiv::SweepReport, halfderiv::SolutionFamily), JobError> {
    let max = effective_max_unknowns(cfg)?;
    check_unknowns(&cfg.algebra, &cfg.window, max)?;
    halfderiv::sweep_with_solutions(
        &cfg.algebra,
        &cfg.window,
        cfg.degree_bound(),
        &cfg.delta,
        &SweepOptions { max_unknowns: max },
    )
    .map_err(task_err)
}

fn sweep_verdict(rep: &halfderiv::SweepReport) -> Verdict {
    let detail = if rep.flagged {
        format!("{} (excess dimensions flagged)", rep.verdict)
    } else {
        rep.verdict.clone()
    };
    Verdict::new("half-derivations", rep.pass, detail)
}

fn solve_half_derivations(cfg: &JobConfig) -> Result<TaskOutput, JobError> {
    let (rep, _) = sweep(cfg)?;
    let verdicts = vec![sweep_verdict(&rep)];
    Ok((to_value(&rep), verdicts))
}

fn describe_family(c: &tpstruct::Classification) -> String {
    if c.parameters.is_empty() {
        return "zero product only".to_string();
    }
    let mut terms: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for p in &c.parameters {
        if let ProductSpec::Explicit { table } = &p.generator {
            for e in table {
                let key = format!("{}·{}", e.a, e.b);
                let value = e
                    .value
                    .terms()
                    .map(|(idx, coeffs)| {
                        let k = if coeffs.len() == 1 && coeffs[0].is_one() {
                            String::new()
                        } else {
                            format!("{}·", coeffs.iter().map(ToString::to_string).collect::<Vec<_>>().join(","))
                        };
                        format!("{}{}·u{}", k, p.name, idx)
                    })
                    .collect::<Vec<_>>()
                    .join(" + ");
                terms.entry(key).or_default().push(value);
            }
        }
    }
    terms
        .into_iter()
        .map(|(k, v)| format!("{k} = {}", v.join(" + ")))
        .collect::<Vec<_>>()
        .join("; ")
}

fn classify_tp(cfg: &JobConfig) -> Result<TaskOutput, JobError> {
    let spec = &cfg.algebra;
    let (rep, family) = sweep(cfg)?;
    let c = tpstruct::classify(
        spec,
        &family,
        &cfg.window,
        &ClassifyOptions {
            samples: cfg.samples,
            seed: cfg.seed,
        },
    )
    .map_err(task_err)?;
    let mut verdicts = vec![sweep_verdict(&rep)];
    let described = describe_family(&c);
    if let Some(n) = cfg.expect.parameters {
        verdicts.push(Verdict::new(
            "family size",
            c.parameters.len() == n,
            format!("{} parameter(s), expected {n}: {described}", c.parameters.len()),
        ));
    }
    verdicts.push(Verdict::new(
        "associativity samples",
        c.associativity_passed(),
        format!("{} sample(s), seed {}", c.samples.len(), c.seed),
    ));
    // Each generator, extended by zero beyond the inner box, must itself be
    // a transposed Poisson structure.
    let inner = Window::new(cfg.window.inner_radius(), 0).map_err(task_err)?;
    let mut generator_reports = Vec::new();
    for p in &c.parameters {
        check_triples(spec, inner.radius, cfg)?;
        let r = tpstruct::verify(spec, &p.generator, &inner).map_err(task_err)?;
        verdicts.push(Verdict::new(
            format!("generator {} is transposed Poisson", p.name),
            r.is_transposed_poisson(),
            format!("Poisson Leibniz {}", if r.poisson_leibniz.passed() { "holds" } else { "fails" }),
        ));
        generator_reports.push(r);
    }
    Ok((
        json!({
            "verdict": rep.verdict,
            "half_derivations": rep,
            "classification": c,
            "family": described,
            "generator_checks": generator_reports,
        }),
        verdicts,
    ))
}

/// Random multiplier with at most `max_terms` terms and small rational
/// coefficients.
pub fn random_multiplier(rng: &mut ChaCha8Rng, rank: usize, max_terms: usize, radius: u32) -> AlgebraElement {
    let r = radius as i64;
    let n_terms = rng.gen_range(1..=max_terms.max(1));
    let mut terms = Vec::new();
    for _ in 0..n_terms {
        let index: Vec<i64> = (0..rank).map(|_| rng.gen_range(-r..=r)).collect();
        let num = loop {
            let n = rng.gen_range(-9..=9i64);
            if n != 0 {
                break n;
            }
        };
        let den = rng.gen_range(1..=9i64);
        terms.push((GroupElement::new(index), Scalar::new(num, den)));
    }
    AlgebraElement::from_scalars(terms)
}

fn verify_structure(cfg: &JobConfig) -> Result<TaskOutput, JobError> {
    let spec = &cfg.algebra;
    check_triples(spec, cfg.window.radius, cfg)?;
    let required = cfg.require.clone().unwrap_or_else(|| Identity::ALL.to_vec());
    let mut products: Vec<ProductSpec> = cfg.product.iter().cloned().collect();
    if let Some(rm) = &cfg.random_mutations {
        if spec.family() != Family::WittType && spec.pairing().is_none_or(|p| p.dim_v() != 1) {
            return Err(JobError::Config("random_mutations: needs a Witt-type or dim V = 1 algebra".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..rm.count {
            products.push(ProductSpec::Mutation {
                w: random_multiplier(&mut rng, spec.rank(), rm.max_terms, rm.support_radius),
            });
        }
    }
    let mut verdicts = Vec::new();
    let mut reports = Vec::new();
    for (i, p) in products.iter().enumerate() {
        let r = tpstruct::verify(spec, p, &cfg.window).map_err(task_err)?;
        for id in Identity::ALL {
            let check = id.check(&r);
            let must_fail = cfg.expect.failing.contains(&id);
            if !required.contains(&id) && !must_fail {
                continue;
            }
            let detail = match check.witness() {
                None => "holds on all basis tuples".to_string(),
                Some(w) => format!(
                    "witness ({})",
                    w.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
                ),
            };
            let pass = if must_fail { !check.passed() } else { check.passed() };
            let label = if must_fail { format!("{} fails", id.name()) } else { id.name().to_string() };
            verdicts.push(Verdict::new(format!("product {i}: {label}"), pass, detail));
        }
        reports.push(json!({ "product": p, "report": r }));
    }
    let mut result = json!({ "products": reports });
    if products.iter().any(|p| matches!(p, ProductSpec::Mutation { .. })) {
        result["note"] = json!("mutation multipliers are finitely supported");
    }
    Ok((result, verdicts))
}

/// Bundled reproduction suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    #[value(name = "thmA")]
    ThmA,
    #[value(name = "thmB")]
    ThmB,
    All,
}

const THM_A: [&str; 2] = [
    include_str!("../configs/witt_rigidity.json"),
    include_str!("../configs/witt_mutations.json"),
];

const THM_B: [&str; 3] = [
    include_str!("../configs/block_zero_g.json"),
    include_str!("../configs/block_empty_coset.json"),
    include_str!("../configs/block_extension.json"),
];

pub fn suite_configs(suite: Suite) -> Vec<JobConfig> {
    let texts: Vec<&str> = match suite {
        Suite::ThmA => THM_A.to_vec(),
        Suite::ThmB => THM_B.to_vec(),
        Suite::All => THM_A.iter().chain(THM_B.iter()).copied().collect(),
    };
    texts
        .into_iter()
        .map(|t| JobConfig::from_json(t).expect("bundled configs are valid"))
        .collect()
}

pub fn reproduce(suite: Suite) -> Result<Vec<JobReport>, JobError> {
    suite_configs(suite).iter().map(run).collect()
}
