//! Homothety residuals ∇_(μ K_ν) − χ₀ g_μν and the master-equation systems
//! constraining Killing data on the Einstein families.

use std::collections::BTreeMap;

use super::{instantiate, Bindings, MetricInstance};
use crate::classify::{Duality, Expansion};
use crate::congruence::{analyse_spinor, CongruenceTolerance, PointGeometry};
use crate::dsl::{Expr, ScalarField};
use crate::frame::{Coframe, SLOT};
use crate::{Error, Jet, Mode, Result, Scalar};

/// Relative tolerance for the homothety equation and the master systems.
pub const KILLING_TOL: f64 = 1e-10;

/// A vector field K = K^μ ∂_μ with its homothety constant.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldSpec {
    pub label: String,
    pub components: [ScalarField; 4],
    pub chi0: Scalar,
    /// For null vectors: the expected expansion of the ASD congruence spanned by k^Ȧ.
    pub asd_expansion: Option<Expansion>,
}

impl VectorFieldSpec {
    /// Components in (q,p,x,y) DSL syntax.
    pub fn parse(label: &str, comps: [&str; 4], params: &BTreeMap<String, Scalar>, mode: Mode) -> Result<Self> {
        let mut out = vec![];
        for c in comps {
            out.push(ScalarField::parse(c, params.clone(), mode)?);
        }
        let [a, b, c, d]: [ScalarField; 4] = out.try_into().expect("four components");
        Ok(VectorFieldSpec {
            label: label.to_string(),
            components: [a, b, c, d],
            chi0: Scalar::new(0.0, 0.0),
            asd_expansion: None,
        })
    }

    pub fn jets(&self, point: &[Scalar; 4]) -> Result<[Jet; 4]> {
        let v = self.components.iter().map(|c| c.eval_jet(point)).collect::<Result<Vec<_>>>()?;
        Ok(v.try_into().expect("four components"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KillingResidual {
    pub max_abs: f64,
    /// Worst component relative to the sum of the magnitudes of its terms.
    pub relative: f64,
}

/// ½(L_K G)_μν − χ₀G_μν with G the matrix of ds², which is ∇_(μ K_ν) − χ₀ g_μν.
pub fn killing_residual(k: &VectorFieldSpec, metric: &[[Jet; 4]; 4], point: &[Scalar; 4]) -> Result<KillingResidual> {
    let kj = k.jets(point)?;
    let kv: [Scalar; 4] = std::array::from_fn(|i| kj[i].value());
    let g = |m: usize, n: usize| metric[m][n].value();
    let mut out = KillingResidual { max_abs: 0.0, relative: 0.0 };
    for mu in 0..4 {
        for nu in mu..4 {
            let mut terms = vec![g(mu, nu) * (-k.chi0)];
            for r in 0..4 {
                terms.push(kv[r] * metric[mu][nu].d(r) * 0.5);
                terms.push(g(r, nu) * kj[r].d(mu) * 0.5);
                terms.push(g(mu, r) * kj[r].d(nu) * 0.5);
            }
            let sum: Scalar = terms.iter().sum();
            let scale: f64 = terms.iter().map(|t| t.norm()).sum();
            let a = sum.norm();
            if !a.is_finite() {
                return Err(Error::SingularSampling);
            }
            out.max_abs = out.max_abs.max(a);
            if scale > 0.0 {
                out.relative = out.relative.max(a / scale);
            }
        }
    }
    Ok(out)
}

/// ASD spinor k_Ȧ of a null vector K^{MṄ} = k^M k^Ṅ, as jets.
pub fn null_vector_asd_spinor(k: &VectorFieldSpec, coframe: &Coframe, point: &[Scalar; 4]) -> Result<[Jet; 2]> {
    let kj = k.jets(point)?;
    let mode = coframe.l[0][0].mode();
    // tetrad components K^a = e^a(K)
    let ka: Vec<Jet> = (0..4)
        .map(|a| (0..4).fold(Jet::zero(mode), |acc, mu| acc.add(&coframe.l[a][mu].mul(&kj[mu]))))
        .collect();
    let kmn = |m: usize, n: usize| {
        let (c, sg) = SLOT[m][n];
        ka[c].scale(Scalar::new(-1.0 / (2f64.sqrt() * sg), 0.0))
    };
    let norm = |m: usize| kmn(m, 0).value().norm().hypot(kmn(m, 1).value().norm());
    let m = if norm(0) >= norm(1) { 0 } else { 1 };
    if norm(m) == 0.0 {
        return Err(Error::ZeroSpinor);
    }
    let up = [kmn(m, 0), kmn(m, 1)];
    // lower: k_1̇ = k^2̇, k_2̇ = −k^1̇
    Ok([up[1].clone(), up[0].neg()])
}

/// Expansion of the ASD congruence of a null vector, if its spinor spans null strings.
pub fn null_vector_expansion(
    k: &VectorFieldSpec,
    coframe: &Coframe,
    geo: &PointGeometry,
    point: &[Scalar; 4],
) -> Result<Option<Expansion>> {
    let psi = null_vector_asd_spinor(k, coframe, point)?;
    let tol = CongruenceTolerance::default();
    let r = analyse_spinor(&psi, Duality::ASD, geo, &tol)?;
    Ok(r.verified(&tol).then(|| Expansion::from_nonexpanding(r.nonexpanding)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KillingReport {
    pub label: String,
    pub chi0: Scalar,
    pub max_abs: f64,
    pub max_relative: f64,
    pub expected_asd: Option<Expansion>,
    /// Observed at every point; None if the points disagree or the spinor fails the null-string test.
    pub observed_asd: Option<Expansion>,
    pub points: usize,
    pub passed: bool,
}

/// Checks every vector of the instance at the given points.
pub fn killing_check(inst: &MetricInstance, points: &[[Scalar; 4]]) -> Result<Vec<KillingReport>> {
    let data = points.iter().map(|p| inst.evaluate(p)).collect::<Result<Vec<_>>>()?;
    let mut out = vec![];
    for k in &inst.killing {
        let mut rep = KillingReport {
            label: k.label.clone(),
            chi0: k.chi0,
            max_abs: 0.0,
            max_relative: 0.0,
            expected_asd: k.asd_expansion,
            observed_asd: None,
            points: points.len(),
            passed: false,
        };
        let mut seen: Vec<Option<Expansion>> = vec![];
        for (p, d) in points.iter().zip(&data) {
            let r = killing_residual(k, &d.metric, p)?;
            rep.max_abs = rep.max_abs.max(r.max_abs);
            rep.max_relative = rep.max_relative.max(r.relative);
            if k.asd_expansion.is_some() {
                seen.push(null_vector_expansion(k, &d.coframe, &d.geo, p).unwrap_or(None));
            }
        }
        if let Some(first) = seen.first() {
            rep.observed_asd = if seen.iter().all(|s| s == first) { *first } else { None };
        }
        rep.passed = !points.is_empty()
            && rep.max_relative <= KILLING_TOL
            && (rep.expected_asd.is_none() || rep.expected_asd == rep.observed_asd);
        out.push(rep);
    }
    Ok(out)
}

/// Samples the instance's own seed and checks its listed Killing vectors,
/// including the ASD expansion flags of null ones.
pub fn sd_killing_catalog_check(inst: &MetricInstance) -> Result<Vec<KillingReport>> {
    if inst.killing.is_empty() {
        return Err(Error::Unsupported(format!("{} lists no Killing vectors", inst.family)));
    }
    let points = inst.sample_points(20, inst.seed)?;
    killing_check(inst, &points)
}

// ------------------------------------------------------------ master equations

/// Killing data entering the master-equation systems.
#[derive(Debug, Clone, PartialEq)]
pub enum MasterData {
    /// Λ ≠ 0 para-Kähler Einstein family, δ¹ = δ¹(q), δ² = δ²(p).
    Einstein { lambda: Scalar, sigma: ScalarField, omega: ScalarField, delta1: ScalarField, delta2: ScalarField },
    /// Λ = 0 heavenly family with a general homothety.
    Heavenly {
        phi: ScalarField,
        omega: ScalarField,
        delta: [ScalarField; 2],
        eps: [ScalarField; 2],
        chi0: Scalar,
        a0: Scalar,
        b0: Scalar,
        c0: Scalar,
    },
    /// Λ = 0, null homothety K = (2χ₀x + ε_p)∂_x + (2χ₀y + ε_q)∂_y.
    Null { phi: ScalarField, omega: ScalarField, eps: ScalarField, chi0: Scalar },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub label: String,
    pub value: f64,
    /// Sum of the magnitudes of the terms.
    pub scale: f64,
}

impl Residual {
    fn new(label: &str, terms: &[Scalar]) -> Self {
        let v: Scalar = terms.iter().sum();
        Residual { label: label.to_string(), value: v.norm(), scale: terms.iter().map(|t| t.norm()).sum() }
    }

    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value / self.scale
        } else {
            self.value
        }
    }

    pub fn passed(&self) -> bool {
        self.value <= KILLING_TOL * self.scale
    }
}

fn d(j: &Jet, vars: &[u8]) -> Result<Scalar> {
    let mut e = [0u8; 4];
    for &v in vars {
        e[v as usize] += 1;
    }
    j.partial(&crate::MultiIndex(e))
}

/// Residuals of the master system, each equation moved to one side.
pub fn master_residuals(m: &MasterData, point: &[Scalar; 4]) -> Result<Vec<Residual>> {
    let (q, p) = (0u8, 1u8);
    let one = Scalar::new(1.0, 0.0);
    match m {
        MasterData::Einstein { lambda, sigma, omega, delta1, delta2 } => {
            let (s, o) = (sigma.eval_jet(point)?, omega.eval_jet(point)?);
            let (d1, d2) = (delta1.eval_jet(point)?, delta2.eval_jet(point)?);
            let il = one / lambda;
            Ok(vec![
                Residual::new(
                    "sigma",
                    &[
                        d1.value() * d(&s, &[q])?,
                        d2.value() * d(&s, &[p])?,
                        s.value() * d(&d1, &[q])? * 2.0,
                        il * d(&d1, &[q, q, q])?,
                    ],
                ),
                Residual::new(
                    "omega",
                    &[
                        d1.value() * d(&o, &[q])?,
                        d2.value() * d(&o, &[p])?,
                        o.value() * d(&d2, &[p])? * 2.0,
                        il * d(&d2, &[p, p, p])?,
                    ],
                ),
            ])
        }
        MasterData::Heavenly { phi, omega, delta, eps, chi0, a0, b0, c0 } => {
            let (f, o) = (phi.eval_jet(point)?, omega.eval_jet(point)?);
            let (d1, d2) = (delta[0].eval_jet(point)?, delta[1].eval_jet(point)?);
            let (e1, e2) = (eps[0].eval_jet(point)?, eps[1].eval_jet(point)?);
            let ef = f.value().exp();
            let (fq, fp) = (d(&f, &[q])?, d(&f, &[p])?);
            Ok(vec![
                Residual::new("delta1_p", &[d(&d1, &[p])?, -a0 * ef]),
                Residual::new("delta2_q", &[d(&d2, &[q])?, -b0 / ef]),
                Residual::new(
                    "const",
                    &[d1.value() * fq, d2.value() * fp, d(&d2, &[p])?, -d(&d1, &[q])?, -c0],
                ),
                Residual::new("eps2", &[e2.value() * fq, d(&e2, &[q])?]),
                Residual::new(
                    "omega",
                    &[
                        d1.value() * d(&o, &[q])?,
                        d2.value() * d(&o, &[p])?,
                        -o.value() * chi0 * 2.0,
                        o.value() * d(&d2, &[p])? * 2.0,
                        e1.value() * fp,
                        -d(&e1, &[p])?,
                    ],
                ),
                Residual::new("eps_mixed", &[o.value() * d(&d2, &[q])? * 2.0, -d(&e1, &[q])?, d(&e2, &[p])?]),
            ])
        }
        MasterData::Null { phi, omega, eps, chi0 } => {
            let (f, o, e) = (phi.eval_jet(point)?, omega.eval_jet(point)?, eps.eval_jet(point)?);
            Ok(vec![
                Residual::new("q", &[d(&e, &[q])? * d(&f, &[q])?, d(&e, &[q, q])?]),
                Residual::new(
                    "p",
                    &[-o.value() * chi0 * 2.0, d(&e, &[p])? * d(&f, &[p])?, -d(&e, &[p, p])?],
                ),
            ])
        }
    }
}

impl MasterData {
    /// The homothety generated by this data.
    pub fn killing_vector(&self) -> Result<VectorFieldSpec> {
        let x = Expr::coord(2, "x");
        let y = Expr::coord(3, "y");
        let (q, p) = (0usize, 1usize);
        let re = |s: Scalar| Expr::num(s.re);
        let (comps, params, mode, chi0) = match self {
            MasterData::Einstein { lambda, delta1, delta2, .. } => {
                let (d1, d2) = (&delta1.expr, &delta2.expr);
                let mut params = delta1.params.clone();
                params.insert("__lambda".into(), *lambda);
                let il = Expr::num(1.0) / Expr::param("__lambda");
                (
                    [
                        d1.clone(),
                        d2.clone(),
                        -(d2.diff(p) * x + il.clone() * d2.d(&[p, p])),
                        -(d1.diff(q) * y - il * d1.d(&[q, q])),
                    ],
                    params,
                    delta1.mode,
                    Scalar::new(0.0, 0.0),
                )
            }
            MasterData::Heavenly { delta, eps, chi0, .. } => {
                let (d1, d2) = (&delta[0].expr, &delta[1].expr);
                let mut params = delta[0].params.clone();
                params.insert("__chi0".into(), *chi0);
                let c = 2.0 * Expr::param("__chi0");
                (
                    [
                        d1.clone(),
                        d2.clone(),
                        c.clone() * x.clone() - d2.diff(p) * x.clone() + d1.diff(p) * y.clone() + eps[0].expr.clone(),
                        c * y.clone() + d2.diff(q) * x - d1.diff(q) * y + eps[1].expr.clone(),
                    ],
                    params,
                    delta[0].mode,
                    *chi0,
                )
            }
            MasterData::Null { eps, chi0, .. } => {
                let e = &eps.expr;
                let c = 2.0 * re(*chi0);
                (
                    [Expr::num(0.0), Expr::num(0.0), c.clone() * x + e.diff(p), c * y + e.diff(q)],
                    eps.params.clone(),
                    eps.mode,
                    *chi0,
                )
            }
        };
        let [a, b, c, dd] = comps;
        let sf = |e: Expr| ScalarField::new(e, params.clone(), mode);
        Ok(VectorFieldSpec {
            label: "master".into(),
            components: [sf(a)?, sf(b)?, sf(c)?, sf(dd)?],
            chi0,
            asd_expansion: None,
        })
    }
}

// ------------------------------------------------------------ Table of Killing vectors

/// One row of the Killing-vector table on the Einstein family with
/// para-Kähler ASD side: a pkE-II (or pkE-D) instance carrying the row's vectors.
#[derive(Debug, Clone)]
pub struct KillingCase {
    pub row: String,
    pub instance: MetricInstance,
}

fn case(
    row: &str,
    family: &str,
    functions: &[(&str, &str)],
    vectors: &[(&str, [&str; 4])],
    sample_box: Option<[(f64, f64); 4]>,
) -> Result<KillingCase> {
    let mut b = Bindings::new(Mode::Real);
    for (k, v) in functions {
        b = b.function(k, v);
    }
    let mut inst = instantiate(family, &b)?;
    let lambda = inst.lambda.expect("Einstein family");
    let params: BTreeMap<String, Scalar> = [("Lambda".to_string(), lambda)].into();
    inst.killing = vectors
        .iter()
        .map(|(label, comps)| VectorFieldSpec::parse(label, *comps, &params, Mode::Real))
        .collect::<Result<_>>()?;
    if let Some(bx) = sample_box {
        inst.sample_box = bx;
    }
    Ok(KillingCase { row: row.to_string(), instance: inst })
}

/// Every row of the table: the type-[II] branches (K₂ with representative
/// constants where the table leaves a family) and the six-vector [D]×[D] algebra.
pub fn table5_cases() -> Result<Vec<KillingCase>> {
    let dq = ("K1", ["1", "0", "0", "0"]);
    let dqp = ("K1", ["1", "1", "0", "0"]);
    let shifted_p = [(-1.0, 1.0), (0.5, 1.5), (-1.0, 1.0), (-1.0, 1.0)];
    let mut out = vec![case("II: K1 = dq, Sigma(p)", "pkE-II", &[("Sigma", "exp(p)"), ("Omega", "0")], &[dq], None)?];
    // K2 = q∂q − y∂y + ζ₀∂p + ξ₀(p∂p − x∂x) + γ₀(p²∂p − 2(px + Λ⁻¹)∂x)
    // (ζ₀, ξ₀, γ₀) label, Σ, K2, sample box override
    type Rep<'a> = (&'a str, &'a str, [&'a str; 4], Option<[(f64, f64); 4]>);
    let reps: [Rep; 4] = [
        ("(0,0,1)", "exp(-2*p)", ["q", "1", "0", "-y"], None),
        ("(0,1,0)", "p^-2", ["q", "p", "-x", "-y"], Some(shifted_p)),
        ("(1,0,0)", "exp(2/p)", ["q", "p^2", "-2*(p*x + 1/Lambda)", "-y"], Some(shifted_p)),
        (
            "(1,0,-1)",
            "(p + 1)/(p - 1)",
            ["q", "p^2 - 1", "-2*(p*x + 1/Lambda)", "-y"],
            Some([(-1.0, 1.0), (1.5, 2.5), (-1.0, 1.0), (-1.0, 1.0)]),
        ),
    ];
    for (consts, sigma, k2, bx) in reps {
        out.push(case(
            &format!("II: K1 = dq, K2 with (gamma0, xi0, zeta0) = {consts}"),
            "pkE-II",
            &[("Sigma", sigma), ("Omega", "0")],
            &[dq, ("K2", k2)],
            bx,
        )?);
    }
    // z = q − p, kept away from 0
    let z_box = Some([(1.5, 2.5), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)]);
    out.push(case(
        "II: K1 = dq + dp, Sigma(z), Omega(z)",
        "pkE-II",
        &[("Sigma", "exp(q - p)"), ("Omega", "(q - p)^3")],
        &[dqp],
        None,
    )?);
    out.push(case(
        "II: K1 = dq + dp, K2 = q dq + p dp - x dx - y dy",
        "pkE-II",
        &[("Sigma", "2*(q - p)^-2"), ("Omega", "3*(q - p)^-2")],
        &[dqp, ("K2", ["q", "p", "-x", "-y"])],
        z_box,
    )?);
    let exp_pair = ["exp(q)", "exp(p)", "-exp(p)*(x + 1/Lambda)", "exp(q)*(-y + 1/Lambda)"];
    // a₀ = 1, Σ₀ = 1, Ω₀ = 0
    out.push(case(
        "II: K1 = dq + dp, K2 = exponential pair",
        "pkE-II",
        &[("Sigma", "1/(1 - exp(q - p))^2 - 1/(2*Lambda)"), ("Omega", "-1/(2*Lambda)")],
        &[dqp, ("K2", exp_pair)],
        z_box,
    )?);
    // Ω₀ = 2 needs (1 − e^{−a₀z})² in Ω's denominator
    out.push(case(
        "II: K1 = dq + dp, K2 = exponential pair, Omega0 != 0 with mirrored exponent",
        "pkE-II",
        &[
            ("Sigma", "1/(1 - exp(q - p))^2 - 1/(2*Lambda)"),
            ("Omega", "2/(1 - exp(p - q))^2 - 1/(2*Lambda)"),
        ],
        &[dqp, ("K2", exp_pair)],
        z_box,
    )?);
    out.push(case(
        "II: K1 = dq + dp, K2 = exponential q part",
        "pkE-II",
        &[("Sigma", "exp(-2*(q - p)) - 1/(2*Lambda)"), ("Omega", "1")],
        &[dqp, ("K2", ["exp(q)", "0", "0", "exp(q)*(-y + 1/Lambda)"])],
        None,
    )?);
    out.push(case(
        "D x D: six vectors",
        "pkE-D",
        &[],
        &[
            ("K1", ["0", "1", "0", "0"]),
            ("K2", ["1", "0", "0", "0"]),
            ("K3", ["q", "0", "0", "-y"]),
            ("K4", ["0", "p", "-x", "0"]),
            ("K5", ["q^2", "0", "0", "-2*(q*y - 1/Lambda)"]),
            ("K6", ["0", "p^2", "-2*(p*x + 1/Lambda)", "0"]),
        ],
        None,
    )?);
    Ok(out)
}
