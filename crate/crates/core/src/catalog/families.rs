//! The sixteen summary families plus auxiliary instances used by the
//! symmetry and type-[III] suites.

use super::{Ctx, FunctionSlot, MasterTemplate, MetricFamily, ParamSlot, Template};
use crate::classify::{Expansion, SymbolClaim};
use crate::dsl::Expr;
use crate::{Error, Result};

const ALL: &[usize] = &[0, 1, 2, 3];
const QPX: &[usize] = &[0, 1, 2];
const QP3: &[usize] = &[0, 1, 3];
const QP: &[usize] = &[0, 1];
const Q: &[usize] = &[0];
const P: &[usize] = &[1];
const PX: &[usize] = &[1, 2];
const Q3: &[usize] = &[0, 3];

const UNIT: [(f64, f64); 4] = [(-1.0, 1.0); 4];
// q < 0 < p keeps 4p − q and p − q away from zero
const Q_NEG_P_POS: [(f64, f64); 4] = [(-1.0, -0.5), (0.5, 1.0), (-1.0, 1.0), (-1.0, 1.0)];
const QPXY: [&str; 4] = ["q", "p", "x", "y"];

fn n(v: f64) -> Expr {
    Expr::num(v)
}

fn k(name: &str) -> Expr {
    Expr::param(name)
}

fn slot(name: &'static str, allowed: &'static [usize], default: &'static str) -> FunctionSlot {
    FunctionSlot { name, allowed, default: Some(default) }
}

fn param(name: &'static str, default: f64) -> ParamSlot {
    ParamSlot { name, default }
}

fn claim(s: &str) -> SymbolClaim {
    s.parse().expect("built-in claims are well formed")
}

fn d(e: &Expr, i: usize) -> Expr {
    e.diff(i)
}

fn zero() -> Expr {
    n(0.0)
}

fn one() -> Expr {
    n(1.0)
}

/// ½ds² = dqdy − dpdx + 𝒜dp² − 2𝒬dpdq + ℬdq²
fn pleb(a: Expr, q: Expr, b: Expr) -> Template {
    Template::plebanski(a, q, b).sd("m", zero(), one())
}

struct Spec {
    id: &'static str,
    source: &'static str,
    content: &'static str,
    coordinates: [&'static str; 4],
    slots: Vec<FunctionSlot>,
    params: Vec<ParamSlot>,
    claimed: &'static str,
    singular_loci: &'static [&'static str],
    sample_box: [(f64, f64); 4],
    build: fn(&Ctx) -> Template,
}

fn fam(s: Spec) -> MetricFamily {
    MetricFamily {
        id: s.id,
        source: s.source,
        content: s.content,
        coordinates: s.coordinates,
        slots: s.slots,
        params: s.params,
        claimed: claim(s.claimed),
        singular_loci: s.singular_loci,
        sample_box: s.sample_box,
        build: s.build,
    }
}

/// The summary rows, in order from the weakest structure to the Einstein rows.
pub fn list_families() -> Vec<MetricFamily> {
    vec![
        fam(Spec {
            id: "weak-hh",
            source: "weak nonexpanding hyperheavenly metric in the Plebański form",
            content: "3 functions of 4 variables",
            coordinates: QPXY,
            slots: vec![slot("A", ALL, "x^2*y + q*p"), slot("Q", ALL, "x*y + p*x"), slot("B", ALL, "y^3 + q*x")],
            params: vec![],
            claimed: "[deg]^n ⊗ [any]",
            singular_loci: &[],
            sample_box: UNIT,
            build: |c| pleb(c.f("A"), c.f("Q"), c.f("B")),
        }),
        fam(Spec {
            id: "sesqui-pp",
            source: "sesqui-Walker metric with an expanding ASD congruence meeting the SD one in a [++] intersection",
            content: "2 functions of 4 variables, 2 functions of 3 variables",
            coordinates: ["q", "p", "x", "z"],
            slots: vec![
                slot("A", ALL, "x*z + q*p"),
                slot("Q", ALL, "z^2*x + p"),
                slot("Sigma", QP3, "q*z^2 + p*z + q*p"),
                slot("Omega", QP3, "p*z + q^2"),
            ],
            params: vec![],
            claimed: "{[deg]^n ⊗ [any]^e, [++]}",
            singular_loci: &["x - Sigma_z"],
            sample_box: UNIT,
            build: |c| {
                let (x, z) = (c.c(2), c.c(3));
                let (a, q, s, o) = (c.f("A"), c.f("Q"), c.f("Sigma"), c.f("Omega"));
                let xs = x.clone() - d(&s, 3);
                // dq² coefficient of ½ds²
                let g = xs.clone() * o + z.clone() * d(&s, 1) - 2.0 * z.clone() * q.clone() - z.clone().powi(2) * a.clone();
                Template::coframe([
                    [n(-1.0), zero(), zero(), zero()],
                    [-g, q.clone() - d(&s, 1), z.clone(), xs.clone()],
                    [zero(), one(), zero(), zero()],
                    [-q, a, n(-1.0), zero()],
                ])
                .sd("m", zero(), one())
                .asd("m", z, one())
                .singular("x - Sigma_z", xs)
            },
        }),
        fam(Spec {
            id: "sesqui-mm",
            source: "sesqui-Walker metric with an expanding ASD congruence meeting the SD one in a [--] intersection",
            content: "2 functions of 4 variables, 1 function of 3 variables",
            coordinates: QPXY,
            slots: vec![slot("A", ALL, "x*y^2 + p"), slot("Q", ALL, "2*x + x*y*q"), slot("B", QP3, "y^3 + p*q*y")],
            params: vec![],
            claimed: "{[deg]^n ⊗ [any]^e, [--]}",
            singular_loci: &[],
            sample_box: UNIT,
            build: |c| {
                let q = c.f("Q");
                pleb(c.f("A"), q.clone(), c.f("B")).asd("m", zero(), one()).require("Q_x", d(&q, 2))
            },
        }),
        fam(Spec {
            id: "walker-2s",
            source: "two-sided Walker metric",
            content: "1 function of 4 variables, 2 functions of 3 variables",
            coordinates: QPXY,
            slots: vec![
                slot("A", ALL, "x^2*y + q*x + p*y^2"),
                slot("Q", QP3, "q*y^2 + p"),
                slot("B", QP3, "y^3 + q*p*y"),
            ],
            params: vec![],
            claimed: "[deg]^n ⊗ [deg]^n",
            singular_loci: &[],
            sample_box: UNIT,
            build: |c| pleb(c.f("A"), c.f("Q"), c.f("B")).asd("m", zero(), one()),
        }),
        fam(Spec {
            id: "walker-ne-pp",
            source: "two-sided Walker metric with a second, expanding ASD congruence meeting the SD one in a [++] intersection",
            content: "4 functions of 3 variables",
            coordinates: ["q", "p", "w", "y"],
            slots: vec![
                slot("Q", QP3, "q*y + p^2"),
                slot("B", QP3, "y^2*p + q"),
                slot("Sigma", QPX, "q*w^2 + p*w"),
                slot("Omega", QPX, "w*q + p^2"),
            ],
            params: vec![],
            claimed: "{[deg]^n ⊗ [deg]^{ne}, [--,++]}",
            singular_loci: &["y - Sigma_w"],
            sample_box: UNIT,
            build: |c| {
                let (w, y) = (c.c(2), c.c(3));
                let (q, b, s, o) = (c.f("Q"), c.f("B"), c.f("Sigma"), c.f("Omega"));
                let ys = y - d(&s, 2);
                let a = d(&s, 1) + ys.clone() * o
                    - w.clone() * d(&s, 0)
                    - 2.0 * w.clone() * q.clone()
                    - w.clone().powi(2) * b.clone();
                Template::coframe([
                    [n(-1.0), zero(), zero(), zero()],
                    [-b, q.clone(), zero(), n(-1.0)],
                    [zero(), one(), zero(), zero()],
                    [-(d(&s, 0) + q), a - d(&s, 1), ys.clone(), w.clone()],
                ])
                .sd("m", zero(), one())
                .asd("m", zero(), one())
                .asd("n", one(), w)
                .singular("y - Sigma_w", ys)
            },
        }),
        fam(Spec {
            id: "walker-ne-mm",
            source: "two-sided Walker metric with a second, expanding ASD congruence meeting the SD one in a [--] intersection",
            content: "3 functions of 3 variables",
            coordinates: QPXY,
            slots: vec![slot("A", QPX, "x^3 + q*x"), slot("Q", QP3, "2*y + p*y^2"), slot("B", QP3, "y^2*q + p")],
            params: vec![],
            claimed: "{[deg]^n ⊗ [deg]^{ne}, [--,--]}",
            singular_loci: &[],
            sample_box: UNIT,
            build: |c| {
                let q = c.f("Q");
                pleb(c.f("A"), q.clone(), c.f("B"))
                    .asd("m", zero(), one())
                    .asd("n", one(), zero())
                    .require("Q_y", d(&q, 3))
            },
        }),
        fam(Spec {
            id: "walker-pk",
            source: "Walker metric whose ASD side is para-Kähler",
            content: "2 functions of 3 variables",
            coordinates: QPXY,
            slots: vec![slot("A", QPX, "x^3 + q^2*x"), slot("B", QP3, "y^3 + p^2*y")],
            params: vec![],
            claimed: "[deg]^n ⊗ [D]^{nn}",
            singular_loci: &[],
            sample_box: UNIT,
            build: |c| pleb(c.f("A"), zero(), c.f("B")).asd("m", zero(), one()).asd("n", one(), zero()),
        }),
        fam(Spec {
            id: "IIxD-ne",
            source: "type [II] with one nonexpanding and one expanding SD congruence, para-Kähler ASD side",
            content: "2 functions of 2 variables",
            coordinates: ["q", "p", "x", "n"],
            slots: vec![slot("A", Q3, "0"), slot("B", Q3, "q*n")],
            params: vec![],
            claimed: "{[II]^{ne} ⊗ [D]^{nn}, [--,--,--,++]}",
            singular_loci: &["B - p"],
            sample_box: [(-1.0, 1.0), (0.5, 1.5), (-1.0, 1.0), (0.5, 1.5)],
            build: |c| {
                let (p, nn) = (c.c(1), c.c(3));
                let (a, b) = (c.f("A"), c.f("B"));
                let bp = b.clone() - p.clone();
                let h = a.clone() * d(&b, 3) + d(&b, 0);
                let long = d(&d(&a, 3), 3) * bp.clone().powi(2) + bp.clone() * d(&h, 3) - d(&b, 3) * h.clone();
                Template::coframe([
                    [n(-1.0), zero(), zero(), zero()],
                    [a * bp.clone(), nn.clone(), zero(), -bp.clone()],
                    [zero(), one(), zero(), zero()],
                    [zero(), zero(), n(-1.0), zero()],
                ])
                .sd("m", zero(), one())
                .sd("n", one(), nn)
                .asd("m", zero(), one())
                .asd("n", one(), zero())
                .singular("B - p", bp)
                .require("A*B_n + B_q", h)
                .require("C3 numerator", long)
            },
        }),
        fam(Spec {
            id: "typeD-ne",
            source: "type [D] with one nonexpanding and one expanding SD congruence, para-Kähler ASD side",
            content: "1 function of 2 variables",
            coordinates: ["q", "p", "x", "z"],
            slots: vec![slot("F", Q3, "exp(q*z)")],
            params: vec![],
            claimed: "{[D]^{ne} ⊗ [D]^{nn}, [--,--,--,++]}",
            singular_loci: &["z - p", "F_z"],
            sample_box: [(0.5, 1.5), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
            build: |c| {
                let (p, z) = (c.c(1), c.c(3));
                let f = c.f("F");
                let fz = d(&f, 3);
                // ∂_z∂_q ln F_z, times F_z²
                let cond = fz.clone() * d(&d(&fz, 3), 0) - d(&fz, 3) * d(&fz, 0);
                Template::coframe([
                    [n(-1.0), zero(), zero(), zero()],
                    [zero(), f.clone(), zero(), (p.clone() - z.clone()) * fz.clone()],
                    [zero(), one(), zero(), zero()],
                    [zero(), zero(), n(-1.0), zero()],
                ])
                .sd("m", zero(), one())
                .sd("n", one(), f)
                .asd("m", zero(), one())
                .asd("n", one(), zero())
                .singular("z - p", z - p)
                .singular("F_z", fz)
                .require("d_z d_q ln F_z", cond)
            },
        }),
        fam(Spec {
            id: "dd-walker",
            source: "double Walker metric, para-Kähler on both sides",
            content: "2 functions of 2 variables",
            coordinates: QPXY,
            slots: vec![slot("A", PX, "exp(x + p)"), slot("B", Q3, "exp(y + q)")],
            params: vec![],
            claimed: "[D]^{nn} ⊗ [D]^{nn}",
            singular_loci: &[],
            sample_box: UNIT,
            build: |c| {
                let (a, b) = (c.f("A"), c.f("B"));
                let cond = d(&d(&a, 2), 2) + d(&d(&b, 3), 3);
                pleb(a, zero(), b)
                    .sd("n", one(), zero())
                    .asd("m", zero(), one())
                    .asd("n", one(), zero())
                    .require("A_xx + B_yy", cond)
            },
        }),
        fam(Spec {
            id: "sd-III",
            source: "self-dual type [III] metric",
            content: "4 functions of 2 variables",
            coordinates: QPXY,
            slots: vec![slot("M", QP, "q*p"), slot("P", QP, "q"), slot("N", QP, "p"), slot("Omega", QP, "q^2")],
            params: vec![],
            claimed: "[III]^n ⊗ [O]^n",
            singular_loci: &[],
            sample_box: UNIT,
            build: |c| {
                let (x, y) = (c.c(2), c.c(3));
                let (m, p, nn, o) = (c.f("M"), c.f("P"), c.f("N"), c.f("Omega"));
                let cond = 2.0 * d(&m, 1) * y.clone() - 2.0 * d(&m, 0) * x.clone() - d(&nn, 1) - d(&p, 0);
                let a = m.clone() * x.clone().powi(2) + p * x + o;
                let b = -(m * y.clone().powi(2)) + nn * y;
                pleb(a, zero(), b).asd("m", zero(), one()).require("C2", cond).self_dual()
            },
        }),
        fam(Spec {
            id: "sd-N",
            source: "self-dual type [N] metric",
            content: "2 functions of 2 variables, 1 constant",
            coordinates: QPXY,
            slots: vec![slot("Sigma", QP, "p*q"), slot("Omega", QP, "q^3")],
            params: vec![param("M0", 1.0)],
            claimed: "[N]^n ⊗ [O]^n",
            singular_loci: &[],
            sample_box: UNIT,
            build: |c| {
                let (x, y) = (c.c(2), c.c(3));
                let (s, o, m0) = (c.f("Sigma"), c.f("Omega"), k("M0"));
                let (sq, sp) = (d(&s, 0), d(&s, 1));
                let cond = y.clone() * (d(&d(&sp, 1), 0) - sp.clone() * d(&sp, 0) + 2.0 * m0.clone() * d(&o, 0))
                    - x.clone() * (d(&d(&sq, 0), 1) - sq.clone() * d(&sq, 1))
                    + sq.clone() * d(&o, 0)
                    - d(&d(&o, 0), 0);
                let a = m0.clone() * x.clone().powi(2) + sp * x + o;
                let b = -(m0 * y.clone().powi(2) + sq * y);
                pleb(a, zero(), b).asd("m", zero(), one()).require("C1", cond).self_dual()
            },
        }),
        fam(Spec {
            id: "pkE-II",
            source: "Einstein metric of type [II] with para-Kähler ASD side",
            content: "2 functions of 2 variables, 1 constant",
            coordinates: QPXY,
            slots: vec![slot("Sigma", QP, "exp(p)"), slot("Omega", QP, "q^2")],
            params: vec![param("Lambda", 2.0)],
            claimed: "[II]^n ⊗ [D]^{nn}",
            singular_loci: &[],
            sample_box: UNIT,
            build: |c| {
                let (s, o) = (c.f("Sigma"), c.f("Omega"));
                let cond = d(&s, 1).powi(2) + d(&o, 0).powi(2);
                pk_einstein(c, s, o).require("|Sigma_p| + |Omega_q|", cond)
            },
        }),
        fam(Spec {
            id: "dxd-einstein",
            source: "product-type Einstein metric, para-Kähler on both sides",
            content: "1 constant",
            coordinates: QPXY,
            slots: vec![],
            params: vec![param("Lambda", 1.0)],
            claimed: "[D]^{nn} ⊗ [D]^{nn}",
            singular_loci: &["1 + Lambda*x*p/2", "1 + Lambda*y*q/2"],
            sample_box: UNIT,
            build: |c| {
                let (q, p, x, y) = (c.c(0), c.c(1), c.c(2), c.c(3));
                let a = one() + k("Lambda") * x * p / n(2.0);
                let b = one() + k("Lambda") * y * q / n(2.0);
                Template::coframe([
                    [n(-1.0), zero(), zero(), zero()],
                    [zero(), zero(), zero(), -(one() / b.clone().powi(2))],
                    [zero(), one(), zero(), zero()],
                    [zero(), zero(), one() / a.clone().powi(2), zero()],
                ])
                .sd("m", zero(), one())
                .sd("n", one(), zero())
                .asd("m", zero(), one())
                .asd("n", one(), zero())
                .singular("1 + Lambda*x*p/2", a)
                .singular("1 + Lambda*y*q/2", b)
                .einstein(k("Lambda"))
            },
        }),
        fam(Spec {
            id: "sdE-III",
            source: "self-dual Einstein (heavenly) metric of type [III]",
            content: "2 functions of 2 variables",
            coordinates: QPXY,
            slots: vec![slot("Phi", QP, "q*p"), slot("Omega", QP, "q^3")],
            params: vec![],
            claimed: "[III]^n ⊗ [O]^n",
            singular_loci: &[],
            sample_box: UNIT,
            build: |c| {
                let phi = c.f("Phi");
                heavenly(c, phi.clone(), c.f("Omega")).require("Phi_pq", d(&d(&phi, 0), 1))
            },
        }),
        fam(Spec {
            id: "sdE-N",
            source: "self-dual Einstein (heavenly) metric of type [N]",
            content: "1 function of 2 variables",
            coordinates: QPXY,
            slots: vec![
                slot("Omega", QP, "exp(q)"),
                slot("delta1", QP, "1"),
                slot("delta2", QP, "0"),
                slot("eps1", QP, "0"),
                slot("eps2", QP, "0"),
            ],
            params: vec![param("chi0", 0.5), param("a0", 0.0), param("b0", 0.0), param("c0", 0.0)],
            claimed: "[N]^n ⊗ [O]^n",
            singular_loci: &[],
            sample_box: UNIT,
            build: |c| {
                let o = c.f("Omega");
                let (x, y) = (c.c(2), c.c(3));
                let (d1, d2, e1, e2) = (c.f("delta1"), c.f("delta2"), c.f("eps1"), c.f("eps2"));
                let chi = k("chi0");
                let kv = [
                    d1.clone(),
                    d2.clone(),
                    2.0 * chi.clone() * x.clone() - d(&d2, 1) * x.clone() + d(&d1, 1) * y.clone() + e1.clone(),
                    2.0 * chi.clone() * y.clone() + d(&d2, 0) * x - d(&d1, 0) * y + e2.clone(),
                ];
                heavenly(c, zero(), o.clone())
                    .require("Omega_qq", d(&d(&o, 0), 0))
                    .homothety("K", kv, chi.clone())
                    .master(MasterTemplate::Heavenly {
                        phi: zero(),
                        omega: o,
                        delta: [d1, d2],
                        eps: [e1, e2],
                        consts: [chi, k("a0"), k("b0"), k("c0")],
                    })
            },
        }),
    ]
}

/// 𝒜 = Λx²/2 + Ω, ℬ = Λy²/2 + Σ with both ASD congruences.
fn pk_einstein(c: &Ctx, sigma: Expr, omega: Expr) -> Template {
    let (x, y) = (c.c(2), c.c(3));
    let lam = k("Lambda");
    let a = lam.clone() * x.powi(2) / n(2.0) + omega;
    let b = lam.clone() * y.powi(2) / n(2.0) + sigma;
    pleb(a, zero(), b).asd("m", zero(), one()).asd("n", one(), zero()).einstein(lam)
}

/// 𝒜 = Φ_p x + Ω, ℬ = Φ_q y.
fn heavenly(c: &Ctx, phi: Expr, omega: Expr) -> Template {
    let (x, y) = (c.c(2), c.c(3));
    let a = d(&phi, 1) * x + omega;
    let b = d(&phi, 0) * y;
    pleb(a, zero(), b).asd("m", zero(), one()).einstein(zero()).self_dual()
}

/// 𝒜 = M₀x² + Px + Ω, ℬ = −M₀y² + Ny with n = C^(1)/(4C^(2)) as second SD congruence.
fn type3(c: &Ctx) -> Template {
    let (x, y) = (c.c(2), c.c(3));
    let (m0, nn, p, o) = (k("M0"), c.f("N"), c.f("P"), c.f("Omega"));
    let a = m0.clone() * x.clone().powi(2) + p.clone() * x + o.clone();
    let b = -(m0.clone() * y.clone().powi(2)) + nn.clone() * y;
    let c2 = -(d(&nn, 1) + d(&p, 0));
    Template::plebanski(a, zero(), b)
        .sd("m", zero(), one())
        .sd_root("n", 0)
        .asd("m", zero(), one())
        .require("N_p + P_q", c2)
        .self_dual()
        .type3(m0, nn, p, o)
}

/// Instances outside the summary rows: the [D]×[D] Einstein space with its
/// six Killing vectors, the null-homothety and null-Killing heavenly
/// metrics, the [N]×[O] space with three null Killing vectors, and the three
/// special type-[III] solutions.
pub fn auxiliary_families() -> Vec<MetricFamily> {
    vec![
        fam(Spec {
            id: "pkE-D",
            source: "Einstein para-Kähler metric of type [D] on both sides",
            content: "1 constant",
            coordinates: QPXY,
            slots: vec![
                slot("Sigma", QP, "0"),
                slot("Omega", QP, "0"),
                slot("delta1", Q, "q^2"),
                slot("delta2", P, "p^2"),
            ],
            params: vec![param("Lambda", 1.0)],
            claimed: "[D]^{nn} ⊗ [D]^{nn}",
            singular_loci: &[],
            sample_box: UNIT,
            build: |c| {
                let (q, p, x, y) = (c.c(0), c.c(1), c.c(2), c.c(3));
                let (s, o) = (c.f("Sigma"), c.f("Omega"));
                let il = one() / k("Lambda");
                let t = pk_einstein(c, s.clone(), o.clone());
                // keep the SD declarations in order: m, then the curvature root
                Template { congruences: vec![], ..t }
                    .sd("m", zero(), one())
                    .sd_root("n", 0)
                    .asd("m", zero(), one())
                    .asd("n", one(), zero())
                    .killing("K1", [zero(), one(), zero(), zero()])
                    .killing("K2", [one(), zero(), zero(), zero()])
                    .killing("K3", [q.clone(), zero(), zero(), -y.clone()])
                    .killing("K4", [zero(), p.clone(), -x.clone(), zero()])
                    .killing(
                        "K5",
                        [q.clone().powi(2), zero(), zero(), -2.0 * (q * y - il.clone())],
                    )
                    .killing("K6", [zero(), p.clone().powi(2), -2.0 * (p * x + il), zero()])
                    .master(MasterTemplate::Einstein {
                        lambda: k("Lambda"),
                        sigma: s,
                        omega: o,
                        delta1: c.f("delta1"),
                        delta2: c.f("delta2"),
                    })
            },
        }),
        fam(Spec {
            id: "homothetic",
            source: "heavenly type [III] metric with a null proper homothety",
            content: "1 function of 2 variables",
            coordinates: QPXY,
            slots: vec![slot("Phi", QP, "q*p"), slot("eps", QP, "0")],
            params: vec![param("chi0", 1.0)],
            claimed: "[III]^n ⊗ [O]^n",
            singular_loci: &[],
            sample_box: UNIT,
            build: |c| {
                let (x, y) = (c.c(2), c.c(3));
                let phi = c.f("Phi");
                let chi = k("chi0");
                heavenly(c, phi.clone(), zero())
                    .require("Phi_pq", d(&d(&phi, 0), 1))
                    .homothety("K", [zero(), zero(), 2.0 * chi.clone() * x, 2.0 * chi.clone() * y], chi.clone())
                    .master(MasterTemplate::Null { phi, omega: zero(), eps: c.f("eps"), chi0: chi })
            },
        }),
        fam(Spec {
            id: "null-killing",
            source: "heavenly type [III] metric with a null Killing vector",
            content: "1 function of 2 variables, 1 function of 1 variable",
            coordinates: QPXY,
            slots: vec![slot("H", Q, "q"), slot("Omega", QP, "q^3")],
            params: vec![],
            claimed: "[III]^n ⊗ [O]^n",
            singular_loci: &["2*p + H"],
            sample_box: [(-1.0, 1.0), (0.5, 1.5), (-1.0, 1.0), (-1.0, 1.0)],
            build: |c| {
                let (p, x) = (c.c(1), c.c(2));
                let (h, o) = (c.f("H"), c.f("Omega"));
                let s = 2.0 * p + h.clone();
                Template::coframe([
                    [n(-1.0), zero(), zero(), zero()],
                    [zero(), zero(), zero(), -s.clone()],
                    [zero(), one(), zero(), zero()],
                    [zero(), o - x / s.clone(), n(-1.0), zero()],
                ])
                .sd("m", zero(), one())
                .asd("m", zero(), one())
                .singular("2*p + H", s)
                .require("H_q", d(&h, 0))
                .killing("K", [zero(), zero(), zero(), one()])
                .einstein(zero())
                .self_dual()
            },
        }),
        fam(Spec {
            id: "nxo-null",
            source: "heavenly type [N] metric with three null Killing vectors",
            content: "1 function of 2 variables",
            coordinates: QPXY,
            slots: vec![slot("Omega", QP, "q^4")],
            params: vec![],
            claimed: "[N]^n ⊗ [O]^n",
            singular_loci: &[],
            sample_box: [(0.5, 1.5), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
            build: |c| {
                let (q, p) = (c.c(0), c.c(1));
                let o = c.f("Omega");
                heavenly(c, zero(), o.clone())
                    .require("Omega_qq", d(&d(&o, 0), 0))
                    .null_killing("K1", [zero(), zero(), one(), zero()], Expansion::Nonexpanding)
                    .null_killing("K2", [zero(), zero(), zero(), one()], Expansion::Nonexpanding)
                    .null_killing("K3", [zero(), zero(), q, p], Expansion::Expanding)
            },
        }),
        fam(Spec {
            id: "type3-i",
            source: "type [III] self-dual metric, first special solution of the six-equation system",
            content: "no free functions",
            coordinates: QPXY,
            slots: vec![slot("N", QP, "0"), slot("P", QP, "4/(4*p - q)"), slot("Omega", QP, "4*p/(4*p - q) - 1 - M0*p^2")],
            params: vec![param("M0", 1.0)],
            claimed: "[III]^{ne} ⊗ [O]^n",
            singular_loci: &["4*p - q"],
            sample_box: Q_NEG_P_POS,
            build: |c| type3(c).singular("4*p - q", n(4.0) * c.c(1) - c.c(0)),
        }),
        fam(Spec {
            id: "type3-ii",
            source: "type [III] self-dual metric, second special solution of the six-equation system",
            content: "no free functions",
            coordinates: QPXY,
            slots: vec![slot("N", QP, "0"), slot("P", QP, "4/(4*p - q) + p"), slot("Omega", QP, "0")],
            params: vec![param("M0", 0.0)],
            claimed: "[III]^{ne} ⊗ [O]^n",
            singular_loci: &["4*p - q"],
            sample_box: Q_NEG_P_POS,
            build: |c| type3(c).singular("4*p - q", n(4.0) * c.c(1) - c.c(0)),
        }),
        fam(Spec {
            id: "type3-iii",
            source: "type [III] self-dual metric, third special solution of the six-equation system",
            content: "no free functions",
            coordinates: QPXY,
            slots: vec![slot("N", QP, "1/(p - q)"), slot("P", QP, "0"), slot("Omega", QP, "0")],
            params: vec![param("M0", 1.0)],
            claimed: "[III]^{ne} ⊗ [O]^n",
            singular_loci: &["p - q"],
            sample_box: Q_NEG_P_POS,
            build: |c| type3(c).singular("p - q", c.c(1) - c.c(0)),
        }),
        fam(Spec {
            id: PLEBANSKI,
            source: "general Plebański form with no structure assumed; every slot must be bound",
            content: "3 functions of 4 variables",
            coordinates: QPXY,
            slots: vec![
                FunctionSlot { name: "A", allowed: ALL, default: None },
                FunctionSlot { name: "Q", allowed: ALL, default: None },
                FunctionSlot { name: "B", allowed: ALL, default: None },
            ],
            params: vec![],
            claimed: "[any] ⊗ [any]",
            singular_loci: &[],
            sample_box: UNIT,
            build: |c| Template::plebanski(c.f("A"), c.f("Q"), c.f("B")),
        }),
    ]
}

/// Pseudo-family used by metric files without a `family` line.
pub const PLEBANSKI: &str = "plebanski";

/// Summary rows followed by auxiliary families.
pub fn all_families() -> Vec<MetricFamily> {
    let mut v = list_families();
    v.extend(auxiliary_families());
    v
}

pub fn family(id: &str) -> Result<MetricFamily> {
    all_families().into_iter().find(|f| f.id == id).ok_or_else(|| Error::UnknownFamily(id.to_string()))
}
