//! Built-in metric families with claimed geometry symbols, instantiation
//! with arity checks, seeded sampling and per-point classification.

mod checks;
mod families;
mod file;
mod killing;

pub use checks::{run_check, CheckItem, CheckKind, CheckResult, CURVATURE_TOL};
pub use families::{all_families, auxiliary_families, family, list_families, PLEBANSKI};
pub use file::{CongruenceLine, KillingLine, MetricFile};
pub use killing::{
    killing_check, killing_residual, master_residuals, null_vector_asd_spinor, null_vector_expansion,
    sd_killing_catalog_check, table5_cases, KillingCase, KillingReport, KillingResidual, MasterData, Residual,
    VectorFieldSpec, KILLING_TOL,
};

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classify::{
    assemble_symbol, flush, in_ill_conditioned_band, petrov, Duality, Expansion, GeometrySymbol, OpticsEntry,
    PetrovType, SymbolClaim, Tolerances,
};
use crate::congruence::{
    analyse_spinor, candidate_n_jets, intersection_optics, CongruenceReport, CongruenceTolerance, OpticsReport,
    PointGeometry, SpinorFieldSpec,
};
use crate::curvature::{oracle_curvature, plebanski_curvature_jets, CurvatureData, CurvatureJets};
use crate::dsl::{parse_with, Expr, Field, ParseOptions, ScalarField};
use crate::frame::{Coframe, CoordGeometry, PlebanskiData};
use crate::{Error, Jet, Mode, Result, Scalar};

/// Points closer than this (in |f|) to a guard's zero set are rejected.
pub const SINGULAR_MARGIN: f64 = 1e-3;
/// Draws allowed per requested point before sampling gives up.
const DRAWS_PER_POINT: usize = 50;

/// An arbitrary-function slot and the coordinates it may depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSlot {
    pub name: &'static str,
    pub allowed: &'static [usize],
    pub default: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSlot {
    pub name: &'static str,
    pub default: f64,
}

/// Immutable descriptor of one metric family.
#[derive(Debug, Clone)]
pub struct MetricFamily {
    pub id: &'static str,
    /// Where the line element comes from, in words.
    pub source: &'static str,
    /// Functional content, e.g. "2 functions of 3 variables".
    pub content: &'static str,
    pub coordinates: [&'static str; 4],
    pub slots: Vec<FunctionSlot>,
    pub params: Vec<ParamSlot>,
    pub claimed: SymbolClaim,
    pub singular_loci: &'static [&'static str],
    pub sample_box: [(f64, f64); 4],
    pub(crate) build: fn(&Ctx) -> Template,
}

/// User bindings for a family: DSL sources per slot and numeric parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Bindings {
    pub mode: Mode,
    pub functions: BTreeMap<String, String>,
    pub params: BTreeMap<String, f64>,
}

impl Bindings {
    pub fn new(mode: Mode) -> Self {
        Bindings { mode, ..Default::default() }
    }

    pub fn function(mut self, slot: &str, src: &str) -> Self {
        self.functions.insert(slot.to_string(), src.to_string());
        self
    }

    pub fn param(mut self, name: &str, v: f64) -> Self {
        self.params.insert(name.to_string(), v);
        self
    }
}

// ------------------------------------------------------------ templates

/// Slot expressions handed to a family's builder.
pub(crate) struct Ctx {
    slots: BTreeMap<&'static str, Expr>,
    coords: [&'static str; 4],
}

impl Ctx {
    pub(crate) fn f(&self, name: &str) -> Expr {
        self.slots[name].clone()
    }

    pub(crate) fn c(&self, i: usize) -> Expr {
        Expr::coord(i, self.coords[i])
    }
}

pub(crate) enum GeometryTemplate {
    Plebanski([Expr; 3]),
    Coframe(Box<[[Expr; 4]; 4]>),
}

pub(crate) enum SpinorTemplate {
    Comps([Expr; 2]),
    CurvatureRoot(usize),
}

pub(crate) enum MasterTemplate {
    Einstein { lambda: Expr, sigma: Expr, omega: Expr, delta1: Expr, delta2: Expr },
    Heavenly { phi: Expr, omega: Expr, delta: [Expr; 2], eps: [Expr; 2], consts: [Expr; 4] },
    Null { phi: Expr, omega: Expr, eps: Expr, chi0: Expr },
}

pub(crate) struct Template {
    geometry: GeometryTemplate,
    congruences: Vec<(&'static str, Duality, SpinorTemplate)>,
    guards: Vec<(&'static str, Expr, GuardKind)>,
    killing: Vec<(&'static str, [Expr; 4], Expr, Option<Expansion>)>,
    master: Option<MasterTemplate>,
    type3: Option<[Expr; 4]>,
    lambda: Option<Expr>,
    self_dual: bool,
}

impl Template {
    pub(crate) fn plebanski(a: Expr, q: Expr, b: Expr) -> Self {
        Template::with(GeometryTemplate::Plebanski([a, q, b]))
    }

    /// Rows e¹..e⁴ in the family's coordinates.
    pub(crate) fn coframe(rows: [[Expr; 4]; 4]) -> Self {
        Template::with(GeometryTemplate::Coframe(Box::new(rows)))
    }

    fn with(geometry: GeometryTemplate) -> Self {
        Template {
            geometry,
            congruences: vec![],
            guards: vec![],
            killing: vec![],
            master: None,
            type3: None,
            lambda: None,
            self_dual: false,
        }
    }

    pub(crate) fn sd(mut self, label: &'static str, c0: Expr, c1: Expr) -> Self {
        self.congruences.push((label, Duality::SD, SpinorTemplate::Comps([c0, c1])));
        self
    }

    pub(crate) fn asd(mut self, label: &'static str, c0: Expr, c1: Expr) -> Self {
        self.congruences.push((label, Duality::ASD, SpinorTemplate::Comps([c0, c1])));
        self
    }

    /// n_A = [1, n] with n the `index`-th root of the curvature candidate equation.
    pub(crate) fn sd_root(mut self, label: &'static str, index: usize) -> Self {
        self.congruences.push((label, Duality::SD, SpinorTemplate::CurvatureRoot(index)));
        self
    }

    pub(crate) fn singular(mut self, name: &'static str, e: Expr) -> Self {
        self.guards.push((name, e, GuardKind::Singular));
        self
    }

    pub(crate) fn require(mut self, name: &'static str, e: Expr) -> Self {
        self.guards.push((name, e, GuardKind::Inequality));
        self
    }

    pub(crate) fn killing(mut self, label: &'static str, k: [Expr; 4]) -> Self {
        self.killing.push((label, k, Expr::num(0.0), None));
        self
    }

    pub(crate) fn null_killing(mut self, label: &'static str, k: [Expr; 4], asd: Expansion) -> Self {
        self.killing.push((label, k, Expr::num(0.0), Some(asd)));
        self
    }

    pub(crate) fn homothety(mut self, label: &'static str, k: [Expr; 4], chi0: Expr) -> Self {
        self.killing.push((label, k, chi0, None));
        self
    }

    pub(crate) fn master(mut self, m: MasterTemplate) -> Self {
        self.master = Some(m);
        self
    }

    pub(crate) fn type3(mut self, m0: Expr, n: Expr, p: Expr, omega: Expr) -> Self {
        self.type3 = Some([m0, n, p, omega]);
        self
    }

    pub(crate) fn einstein(mut self, lambda: Expr) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub(crate) fn self_dual(mut self) -> Self {
        self.self_dual = true;
        self
    }
}

// ------------------------------------------------------------ instances

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardKind {
    /// The metric or a structure function blows up or degenerates here.
    Singular,
    /// A defining inequality of the family fails here.
    Inequality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Guard {
    pub name: String,
    pub field: ScalarField,
    pub kind: GuardKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Plebanski(PlebanskiData),
    /// Null coframe rows in the family's own coordinates.
    Coframe(Box<[[ScalarField; 4]; 4]>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CongruenceSource {
    Field(Box<SpinorFieldSpec>),
    /// n_A = [1, n], n a root of C^(1) − 4C^(2)n + 6C^(3)n² = 0.
    CurvatureRoot(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeclaredCongruence {
    pub label: String,
    pub duality: Duality,
    pub source: CongruenceSource,
    pub expected: Option<Expansion>,
}

/// Data of the six-equation type-[III] system: M₀, N, P, Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct Type3Data {
    pub m0: Scalar,
    pub n: Field,
    pub p: Field,
    pub omega: Field,
}

#[derive(Debug, Clone)]
pub struct MetricInstance {
    pub family: String,
    pub mode: Mode,
    pub coordinates: [String; 4],
    pub geometry: Geometry,
    pub claimed: Option<SymbolClaim>,
    pub congruences: Vec<DeclaredCongruence>,
    pub guards: Vec<Guard>,
    pub killing: Vec<VectorFieldSpec>,
    pub master: Option<MasterData>,
    pub type3: Option<Type3Data>,
    /// Λ for Einstein rows.
    pub lambda: Option<Scalar>,
    pub self_dual: bool,
    pub sample_box: [(f64, f64); 4],
    pub seed: u64,
}

/// Everything computed from the metric at one point.
#[derive(Debug, Clone)]
pub struct PointData {
    pub coframe: Coframe,
    /// Matrix of ds².
    pub metric: [[Jet; 4]; 4],
    pub curvature: CurvatureData,
    /// Only for Plebański geometries.
    pub curvature_jets: Option<CurvatureJets>,
    pub geo: PointGeometry,
}

/// FNV-1a of the family id: the default seed.
pub fn family_seed(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl MetricFamily {
    pub fn instantiate(&self, b: &Bindings) -> Result<MetricInstance> {
        let mode = b.mode;
        for name in b.functions.keys() {
            if !self.slots.iter().any(|s| s.name == name) {
                return Err(Error::UnknownSlot(name.clone()));
            }
        }
        let mut params: BTreeMap<String, Scalar> =
            self.params.iter().map(|p| (p.name.to_string(), Scalar::new(p.default, 0.0))).collect();
        for (name, v) in &b.params {
            if !params.contains_key(name) {
                return Err(Error::UnknownSlot(name.clone()));
            }
            params.insert(name.clone(), Scalar::new(*v, 0.0));
        }
        let opts = ParseOptions::with_coords(mode, &self.coordinates);
        let mut slots = BTreeMap::new();
        for slot in &self.slots {
            let src = b
                .functions
                .get(slot.name)
                .map(String::as_str)
                .or(slot.default)
                .ok_or_else(|| Error::UnboundSlot(slot.name.to_string()))?;
            let expr = parse_with(src, &opts)?.strip_spans();
            if let Some(c) = expr.coords_used().into_iter().find(|c| !slot.allowed.contains(c)) {
                return Err(Error::ArityViolation {
                    slot: slot.name.to_string(),
                    coordinate: self.coordinates[c].to_string(),
                });
            }
            // binds parameters and rejects i in real mode
            ScalarField::new(expr.clone(), params.clone(), mode)?;
            slots.insert(slot.name, expr);
        }
        let t = (self.build)(&Ctx { slots, coords: self.coordinates });
        let sf = |e: Expr| ScalarField::new(e, params.clone(), mode);
        let geometry = match t.geometry {
            GeometryTemplate::Plebanski([a, q, bb]) => {
                Geometry::Plebanski(PlebanskiData { a: sf(a)?, q: sf(q)?, b: sf(bb)? })
            }
            GeometryTemplate::Coframe(rows) => {
                let mut out = Vec::with_capacity(16);
                for e in rows.into_iter().flatten() {
                    out.push(sf(e)?);
                }
                let mut it = out.into_iter();
                Geometry::Coframe(Box::new(std::array::from_fn(|_| std::array::from_fn(|_| it.next().unwrap()))))
            }
        };
        let (mut nsd, mut nasd) = (0, 0);
        let mut congruences = vec![];
        for (label, duality, st) in t.congruences {
            let idx = match duality {
                Duality::SD => &mut nsd,
                Duality::ASD => &mut nasd,
            };
            let expected = match duality {
                Duality::SD => self.claimed.sd_supers.get(*idx).copied(),
                Duality::ASD => self.claimed.asd_supers.get(*idx).copied(),
            };
            *idx += 1;
            let source = match st {
                SpinorTemplate::Comps([c0, c1]) => CongruenceSource::Field(Box::new(SpinorFieldSpec::general(
                    duality,
                    [Field::Explicit(sf(c0)?), Field::Explicit(sf(c1)?)],
                ))),
                SpinorTemplate::CurvatureRoot(i) => CongruenceSource::CurvatureRoot(i),
            };
            congruences.push(DeclaredCongruence { label: label.to_string(), duality, source, expected });
        }
        let guards = t
            .guards
            .into_iter()
            .map(|(name, e, kind)| Ok(Guard { name: name.to_string(), field: sf(e)?, kind }))
            .collect::<Result<Vec<_>>>()?;
        let constant = |e: Expr| -> Result<Scalar> { Ok(sf(e)?.eval_jet(&[Scalar::new(0.0, 0.0); 4])?.value()) };
        let mut killing = vec![];
        for (label, k, chi0, asd) in t.killing {
            let [k0, k1, k2, k3] = k;
            killing.push(VectorFieldSpec {
                label: label.to_string(),
                components: [sf(k0)?, sf(k1)?, sf(k2)?, sf(k3)?],
                chi0: constant(chi0)?,
                asd_expansion: asd,
            });
        }
        let master = match t.master {
            None => None,
            Some(MasterTemplate::Einstein { lambda, sigma, omega, delta1, delta2 }) => Some(MasterData::Einstein {
                lambda: constant(lambda)?,
                sigma: sf(sigma)?,
                omega: sf(omega)?,
                delta1: sf(delta1)?,
                delta2: sf(delta2)?,
            }),
            Some(MasterTemplate::Heavenly { phi, omega, delta: [d1, d2], eps: [e1, e2], consts: [chi0, a0, b0, c0] }) => {
                Some(MasterData::Heavenly {
                    phi: sf(phi)?,
                    omega: sf(omega)?,
                    delta: [sf(d1)?, sf(d2)?],
                    eps: [sf(e1)?, sf(e2)?],
                    chi0: constant(chi0)?,
                    a0: constant(a0)?,
                    b0: constant(b0)?,
                    c0: constant(c0)?,
                })
            }
            Some(MasterTemplate::Null { phi, omega, eps, chi0 }) => Some(MasterData::Null {
                phi: sf(phi)?,
                omega: sf(omega)?,
                eps: sf(eps)?,
                chi0: constant(chi0)?,
            }),
        };
        let type3 = match t.type3 {
            None => None,
            Some([m0, n, p, omega]) => Some(Type3Data {
                m0: constant(m0)?,
                n: sf(n)?.into(),
                p: sf(p)?.into(),
                omega: sf(omega)?.into(),
            }),
        };
        Ok(MetricInstance {
            family: self.id.to_string(),
            mode,
            coordinates: self.coordinates.map(str::to_string),
            geometry,
            claimed: Some(self.claimed.clone()),
            congruences,
            guards,
            killing,
            master,
            type3,
            lambda: t.lambda.map(constant).transpose()?,
            self_dual: t.self_dual,
            sample_box: self.sample_box,
            seed: family_seed(self.id),
        })
    }
}

/// Instantiates a family (any of the 16 summary rows or an auxiliary one).
pub fn instantiate(id: &str, bindings: &Bindings) -> Result<MetricInstance> {
    family(id)?.instantiate(bindings)
}

// ------------------------------------------------------------ sampling

/// Seeded uniform sampler over the family box; in complex mode the
/// imaginary parts are drawn independently from [−1, 1].
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
    bounds: [(f64, f64); 4],
    mode: Mode,
}

impl Sampler {
    pub fn new(seed: u64, bounds: [(f64, f64); 4], mode: Mode) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed), bounds, mode }
    }

    pub fn draw(&mut self) -> [Scalar; 4] {
        std::array::from_fn(|i| {
            let (lo, hi) = self.bounds[i];
            let re = self.rng.gen_range(lo..=hi);
            let im = match self.mode {
                Mode::Real => 0.0,
                Mode::Complex => self.rng.gen_range(-1.0..=1.0),
            };
            Scalar::new(re, im)
        })
    }

    pub fn draw_batch(&mut self, n: usize) -> Vec<[Scalar; 4]> {
        (0..n).map(|_| self.draw()).collect()
    }
}

// ------------------------------------------------------------ analysis

#[derive(Debug, Clone, PartialEq)]
pub enum PointFlag {
    /// Coefficients sit in the band where the two classification paths may disagree.
    IllConditioned(Duality),
    /// Classification itself refused to decide.
    Unclassified(Duality, String),
    CongruenceUnverified(String),
    CongruenceError(String, String),
    ExpansionMismatch(String),
    Symbol(String),
}

impl fmt::Display for PointFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |d: &Duality| if *d == Duality::SD { "SD" } else { "ASD" };
        match self {
            PointFlag::IllConditioned(d) => write!(f, "ill-conditioned {}", side(d)),
            PointFlag::Unclassified(d, e) => write!(f, "unclassified {}: {e}", side(d)),
            PointFlag::CongruenceUnverified(l) => write!(f, "congruence {l} fails the null-string test"),
            PointFlag::CongruenceError(l, e) => write!(f, "congruence {l}: {e}"),
            PointFlag::ExpansionMismatch(l) => write!(f, "congruence {l} has unexpected expansion"),
            PointFlag::Symbol(e) => write!(f, "symbol: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CongruenceOutcome {
    pub label: String,
    pub duality: Duality,
    pub expected: Option<Expansion>,
    pub report: Option<CongruenceReport>,
    pub verified: bool,
}

impl CongruenceOutcome {
    pub fn expansion(&self) -> Option<Expansion> {
        self.report.map(|r| Expansion::from_nonexpanding(r.nonexpanding))
    }
}

/// One intersection between verified congruences, indices into the
/// instance's SD and ASD declaration lists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intersection {
    pub sd: usize,
    pub asd: usize,
    pub optics: OpticsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointAnalysis {
    pub point: [Scalar; 4],
    pub curvature: CurvatureData,
    pub sd: Option<PetrovType>,
    pub asd: Option<PetrovType>,
    pub congruences: Vec<CongruenceOutcome>,
    pub intersections: Vec<Intersection>,
    pub symbol: Option<GeometrySymbol>,
    pub flags: Vec<PointFlag>,
}

impl MetricInstance {
    pub fn plebanski(&self) -> Option<&PlebanskiData> {
        match &self.geometry {
            Geometry::Plebanski(d) => Some(d),
            Geometry::Coframe(_) => None,
        }
    }

    /// False when the point lies within [`SINGULAR_MARGIN`] of a guard's
    /// zero set or a guard cannot be evaluated there.
    pub fn admissible(&self, point: &[Scalar; 4]) -> bool {
        self.guards.iter().all(|g| match g.field.eval_jet(point) {
            Ok(v) => v.value().norm() >= SINGULAR_MARGIN && v.value().norm().is_finite(),
            Err(_) => false,
        })
    }

    pub fn evaluate(&self, point: &[Scalar; 4]) -> Result<PointData> {
        match &self.geometry {
            Geometry::Plebanski(d) => {
                let j = d.jets(point)?;
                let cj = plebanski_curvature_jets(&j);
                let coframe = j.coframe();
                let data = PointData {
                    metric: coframe.metric(),
                    curvature: cj.values(),
                    curvature_jets: Some(cj),
                    geo: PointGeometry::plebanski(&j),
                    coframe,
                };
                if !data.curvature.max_abs().is_finite() {
                    return Err(Error::SingularSampling);
                }
                Ok(data)
            }
            Geometry::Coframe(rows) => {
                let mut l: [[Jet; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| Jet::zero(self.mode)));
                for (a, row) in rows.iter().enumerate() {
                    for (mu, f) in row.iter().enumerate() {
                        l[a][mu] = f.eval_jet(point)?;
                    }
                }
                let coframe = Coframe { l };
                let cg = CoordGeometry::new(&coframe)?;
                let curvature = oracle_curvature(&cg);
                if !curvature.max_abs().is_finite() {
                    return Err(Error::SingularSampling);
                }
                Ok(PointData {
                    metric: coframe.metric(),
                    curvature,
                    curvature_jets: None,
                    geo: PointGeometry::from_coords(&cg),
                    coframe,
                })
            }
        }
    }

    fn spinor_jets(&self, c: &DeclaredCongruence, point: &[Scalar; 4], data: &PointData) -> Result<[Jet; 2]> {
        match &c.source {
            CongruenceSource::Field(spec) => spec.jets(point),
            CongruenceSource::CurvatureRoot(i) => {
                let cj = data
                    .curvature_jets
                    .as_ref()
                    .ok_or_else(|| Error::Unsupported("curvature-root congruence needs a Plebański metric".into()))?;
                let roots = candidate_n_jets(cj, self.mode)?;
                let n = roots.get(*i).cloned().ok_or(Error::BothLeadingZero)?;
                Ok([Jet::real(self.mode, 1.0), n])
            }
        }
    }

    /// Classification, congruence checks and optics at one point.
    /// Errors mean the point is unusable (singular) or the instance is broken.
    pub fn analyse(&self, point: &[Scalar; 4]) -> Result<PointAnalysis> {
        if !self.admissible(point) {
            return Err(Error::SingularSampling);
        }
        let data = self.evaluate(point)?;
        Ok(self.analyse_data(point, &data))
    }

    pub fn analyse_data(&self, point: &[Scalar; 4], data: &PointData) -> PointAnalysis {
        let tol = Tolerances::default();
        let ctol = CongruenceTolerance::default();
        let curv = data.curvature;
        let zt = curv.zero_tol();
        let mut flags = vec![];
        let mut side = |cup: [Scalar; 5], d: Duality| {
            let c = flush(&cup, zt);
            if in_ill_conditioned_band(&c, &tol) {
                flags.push(PointFlag::IllConditioned(d));
            }
            match petrov(&c, self.mode, &tol) {
                Ok(t) => Some(t),
                Err(e) => {
                    flags.push(PointFlag::Unclassified(d, e.to_string()));
                    None
                }
            }
        };
        let sd = side(curv.cup, Duality::SD);
        let asd = side(curv.asd_coeffs(), Duality::ASD);

        let mut congruences = vec![];
        for c in &self.congruences {
            let rep = self.spinor_jets(c, point, data).and_then(|psi| analyse_spinor(&psi, c.duality, &data.geo, &ctol));
            let (report, verified) = match rep {
                Ok(r) => {
                    let ok = r.verified(&ctol);
                    if !ok {
                        flags.push(PointFlag::CongruenceUnverified(c.label.clone()));
                    } else if c.expected.is_some_and(|e| e != Expansion::from_nonexpanding(r.nonexpanding)) {
                        flags.push(PointFlag::ExpansionMismatch(c.label.clone()));
                    }
                    (Some(r), ok)
                }
                Err(e) => {
                    flags.push(PointFlag::CongruenceError(c.label.clone(), e.to_string()));
                    (None, false)
                }
            };
            congruences.push(CongruenceOutcome {
                label: c.label.clone(),
                duality: c.duality,
                expected: c.expected,
                report,
                verified,
            });
        }

        // verified congruences per side, keeping declaration order
        let pick = |d: Duality| -> Vec<&CongruenceOutcome> {
            congruences.iter().filter(|c| c.duality == d && c.verified).collect()
        };
        let (sd_ok, asd_ok) = (pick(Duality::SD), pick(Duality::ASD));
        let mut intersections = vec![];
        let mut entries = vec![];
        for (i, s) in sd_ok.iter().enumerate() {
            for (j, a) in asd_ok.iter().enumerate() {
                let o = intersection_optics(s.report.as_ref().unwrap(), a.report.as_ref().unwrap(), &ctol);
                intersections.push(Intersection { sd: i, asd: j, optics: o });
                entries.push(OpticsEntry { sd: i, asd: j, class: o.class });
            }
        }
        let sup = |v: &[&CongruenceOutcome]| -> Vec<Expansion> { v.iter().filter_map(|c| c.expansion()).collect() };
        let symbol = match (&sd, &asd) {
            (Some(s), Some(a)) => match assemble_symbol(s.label, a.label, &sup(&sd_ok), &sup(&asd_ok), &entries) {
                Ok(sym) => Some(sym),
                Err(e) => {
                    flags.push(PointFlag::Symbol(e.to_string()));
                    None
                }
            },
            _ => None,
        };
        PointAnalysis { point: *point, curvature: curv, sd, asd, congruences, intersections, symbol, flags }
    }

    /// Draws candidates in batches and keeps the first `n` usable points in
    /// draw order. `eval` maps a batch to per-point results in the same
    /// order, so a parallel map gives the same answer as a serial one.
    pub fn sample_with<F>(&self, n: usize, seed: u64, mut eval: F) -> Result<Sampled>
    where
        F: FnMut(&[[Scalar; 4]]) -> Vec<Result<PointAnalysis>>,
    {
        let mut sampler = Sampler::new(seed, self.sample_box, self.mode);
        let mut points = Vec::with_capacity(n);
        let mut rejected = 0;
        let mut drawn = 0;
        let budget = DRAWS_PER_POINT * n.max(1) + 100;
        while points.len() < n && drawn < budget {
            let batch = sampler.draw_batch(n.clamp(1, 64));
            drawn += batch.len();
            for r in eval(&batch) {
                if points.len() == n {
                    break;
                }
                match r {
                    Ok(a) => points.push(a),
                    Err(e) if e.is_singular() => rejected += 1,
                    Err(e) => return Err(e),
                }
            }
        }
        if points.is_empty() && n > 0 {
            return Err(Error::SamplingFailed);
        }
        Ok(Sampled { points, rejected })
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Sampled> {
        self.sample_with(n, seed, |batch| batch.iter().map(|p| self.analyse(p)).collect())
    }

    /// Raw admissible points (no analysis), for checks that evaluate their own quantities.
    pub fn sample_points(&self, n: usize, seed: u64) -> Result<Vec<[Scalar; 4]>> {
        Ok(self
            .sample_with(n, seed, |batch| {
                batch
                    .iter()
                    .map(|p| {
                        if !self.admissible(p) {
                            return Err(Error::SingularSampling);
                        }
                        self.evaluate(p)?;
                        Ok(PointAnalysis {
                            point: *p,
                            curvature: CurvatureData::zero(),
                            sd: None,
                            asd: None,
                            congruences: vec![],
                            intersections: vec![],
                            symbol: None,
                            flags: vec![],
                        })
                    })
                    .collect()
            })?
            .points
            .into_iter()
            .map(|a| a.point)
            .collect())
    }

    pub fn summarize(&self, sampled: Sampled) -> ClassificationRun {
        let mut counts: Vec<(String, usize, GeometrySymbol)> = vec![];
        for p in &sampled.points {
            if let Some(s) = &p.symbol {
                let key = s.to_string();
                match counts.iter_mut().find(|(k, _, _)| *k == key) {
                    Some(e) => e.1 += 1,
                    None => counts.push((key, 1, s.clone())),
                }
            }
        }
        // most frequent, earliest first on ties
        let best = counts.iter().fold(None::<&(String, usize, GeometrySymbol)>, |acc, e| match acc {
            Some(a) if a.1 >= e.1 => Some(a),
            _ => Some(e),
        });
        let n = sampled.points.len().max(1) as f64;
        let agreement = best.map_or(0.0, |b| b.1 as f64 / n);
        let claim_fraction = self.claimed.as_ref().map(|c| {
            sampled.points.iter().filter(|p| p.symbol.as_ref().is_some_and(|s| c.matches(s))).count() as f64 / n
        });
        ClassificationRun {
            aggregate: best.map(|b| b.2.clone()),
            agreement,
            claim_fraction,
            rejected: sampled.rejected,
            points: sampled.points,
        }
    }

    pub fn classify(&self, n: usize, seed: u64) -> Result<ClassificationRun> {
        Ok(self.summarize(self.sample(n, seed)?))
    }
}

#[derive(Debug, Clone)]
pub struct Sampled {
    pub points: Vec<PointAnalysis>,
    pub rejected: usize,
}

#[derive(Debug, Clone)]
pub struct ClassificationRun {
    pub points: Vec<PointAnalysis>,
    pub rejected: usize,
    /// Most frequent symbol.
    pub aggregate: Option<GeometrySymbol>,
    /// Fraction of points whose symbol equals the aggregate.
    pub agreement: f64,
    /// Fraction of points matching the claimed symbol.
    pub claim_fraction: Option<f64>,
}

#[cfg(test)]
mod tests;
