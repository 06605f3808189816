//! Congruences of null strings: spinor covariant derivative, null-string
//! residuals, Sommers vector and expansion, intersection optics, and the
//! explicit z-, w- and second-SD systems of weak-HH metrics.
//!
//! Index conventions: ε^{12} = ε_{12} = 1, m^A = m_B ε^{BA}. The covariant
//! derivative of a lower-index spinor is
//! ∇_{MṄ} ψ_C = ∂_{MṄ} ψ_C + Γ_{2C MṄ} ψ_1 − Γ_{1C MṄ} ψ_2 (dotted alike).

use std::f64::consts::SQRT_2;

use crate::classify::{Duality, OpticsClass};
use crate::curvature::{CurvatureData, CurvatureJets};
use crate::dsl::Field;
use crate::error::{Error, Result};
use crate::frame::{plebanski_frame, spin_connection_plebanski, spinor_derivatives, CoordGeometry, PlebanskiData, QJets, SpinorConnection, SpinorConventions};
use crate::jet::{Jet, Mode, Scalar};

type Spinor = [Scalar; 2];

fn zero() -> Scalar {
    Scalar::new(0.0, 0.0)
}

fn one() -> Scalar {
    Scalar::new(1.0, 0.0)
}

fn norm2(s: &Spinor) -> f64 {
    s[0].norm().max(s[1].norm())
}

/// Null-string residuals must stay below `residual`·scale; expansions below
/// `expansion`·scale count as zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CongruenceTolerance {
    pub residual: f64,
    pub expansion: f64,
}

impl Default for CongruenceTolerance {
    fn default() -> Self {
        CongruenceTolerance { residual: 1e-9, expansion: 1e-8 }
    }
}

/// Connection and the vector fields ∂_{MṄ} at one point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub conn: SpinorConnection,
    /// `dirs[M][N][μ]`: coordinate components of ∂_{MṄ}.
    pub dirs: [[[Scalar; 4]; 2]; 2],
}

impl PointGeometry {
    /// Plebański tetrad with the closed-form connection.
    pub fn plebanski(j: &QJets) -> Self {
        PointGeometry { conn: spin_connection_plebanski(j), dirs: spinor_derivatives(&plebanski_frame(j)) }
    }

    /// Any coframe, connection from the coordinate chain.
    pub fn from_coords(geo: &CoordGeometry) -> Self {
        PointGeometry { conn: geo.spin_connection(), dirs: geo.spinor_derivatives() }
    }

    /// ∂_{MṄ} f from a jet.
    pub fn derivative(&self, f: &Jet, m: usize, n: usize) -> Scalar {
        (0..4).map(|mu| self.dirs[m][n][mu] * f.d(mu)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinorForm {
    /// m_A = [0, m], m constant.
    Constant0m,
    /// n_A = [1, n].
    OneN,
    /// n_A = [n, 0].
    NZero,
    /// m_Ȧ = [z, 1].
    DottedZ,
    /// n_Ȧ = [1, w].
    DottedW,
    General,
}

/// A spinor field generating a candidate congruence.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorFieldSpec {
    pub duality: Duality,
    pub form: SpinorForm,
    pub comps: [Field; 2],
}

impl SpinorFieldSpec {
    pub fn constant_0m(duality: Duality, mode: Mode, m: Scalar) -> Self {
        SpinorFieldSpec {
            duality,
            form: SpinorForm::Constant0m,
            comps: [Field::constant(mode, zero()), Field::constant(mode, m)],
        }
    }

    pub fn one_n(duality: Duality, n: Field) -> Self {
        let mode = n.mode();
        SpinorFieldSpec { duality, form: SpinorForm::OneN, comps: [Field::constant(mode, one()), n] }
    }

    pub fn n_zero(duality: Duality, n: Field) -> Self {
        let mode = n.mode();
        SpinorFieldSpec { duality, form: SpinorForm::NZero, comps: [n, Field::constant(mode, zero())] }
    }

    pub fn dotted_z(z: Field) -> Self {
        let mode = z.mode();
        SpinorFieldSpec { duality: Duality::ASD, form: SpinorForm::DottedZ, comps: [z, Field::constant(mode, one())] }
    }

    pub fn dotted_w(w: Field) -> Self {
        let mode = w.mode();
        SpinorFieldSpec { duality: Duality::ASD, form: SpinorForm::DottedW, comps: [Field::constant(mode, one()), w] }
    }

    pub fn general(duality: Duality, comps: [Field; 2]) -> Self {
        SpinorFieldSpec { duality, form: SpinorForm::General, comps }
    }

    pub fn jets(&self, point: &[Scalar; 4]) -> Result<[Jet; 2]> {
        Ok([self.comps[0].eval_jet(point)?, self.comps[1].eval_jet(point)?])
    }
}

/// ∇_{MṄ} ψ_C as `out[M][N][C]` for a spinor of the given duality.
pub fn covariant_derivative_spinor(psi: &[Jet; 2], duality: Duality, geo: &PointGeometry) -> [[[Scalar; 2]; 2]; 2] {
    let v = [psi[0].value(), psi[1].value()];
    let gamma = |a: usize, c: usize, m: usize, n: usize| match duality {
        Duality::SD => geo.conn.u(a, c, m, n),
        Duality::ASD => geo.conn.d(a, c, m, n),
    };
    std::array::from_fn(|m| {
        std::array::from_fn(|n| {
            std::array::from_fn(|c| geo.derivative(&psi[c], m, n) + gamma(1, c, m, n) * v[0] - gamma(0, c, m, n) * v[1])
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CongruenceReport {
    pub duality: Duality,
    pub spinor: Spinor,
    /// max over the free index of |ψ^A ψ^B ∇_{AĊ} ψ_B| (dotted analogue for ASD).
    pub residual: f64,
    pub residual_scale: f64,
    /// Z_{AĊ} (SD) or Ż_{AĊ} (ASD), `[A][Ċ]`.
    pub sommers: [[Scalar; 2]; 2],
    /// M_Ȧ for SD, M_A for ASD.
    pub expansion: Spinor,
    pub expansion_scale: f64,
    pub nonexpanding: bool,
}

impl CongruenceReport {
    pub fn verified(&self, tol: &CongruenceTolerance) -> bool {
        self.residual <= tol.residual * self.residual_scale
    }

    pub fn relative_residual(&self) -> f64 {
        self.residual / self.residual_scale
    }
}

/// Complement k with k^A ψ_A = 1.
fn complement(psi: &Spinor) -> Spinor {
    // k^A ψ_A = −k_2 ψ_1 + k_1 ψ_2
    if psi[1].norm() >= psi[0].norm() {
        [one() / psi[1], zero()]
    } else {
        [zero(), -one() / psi[0]]
    }
}

/// Null-string test and Sommers/expansion split for spinor jets.
pub fn analyse_spinor(psi: &[Jet; 2], duality: Duality, geo: &PointGeometry, tol: &CongruenceTolerance) -> Result<CongruenceReport> {
    let v: Spinor = [psi[0].value(), psi[1].value()];
    let size = norm2(&v);
    if size == 0.0 || !size.is_finite() {
        return Err(Error::ZeroSpinor);
    }
    let nab = covariant_derivative_spinor(psi, duality, geo);
    let up = SpinorConventions::raise(&v);
    let k = complement(&v);
    let kup = SpinorConventions::raise(&k);

    let dmax = (0..2)
        .flat_map(|m| (0..2).flat_map(move |n| (0..2).map(move |c| (m, n, c))))
        .map(|(m, n, c)| geo.derivative(&psi[c], m, n).norm())
        .fold(0.0, f64::max);
    let s1 = 1.0 + dmax + 2.0 * geo.conn.max_abs() * size;

    // ∇_{AĊ}ψ_B: SD → nab[A][Ċ][B]; ASD ∇_{AĊ}ψ_Ḃ → nab[A][Ċ][Ḃ]
    let mut residual: f64 = 0.0;
    let mut expansion = [zero(); 2];
    let mut sommers = [[zero(); 2]; 2];
    match duality {
        Duality::SD => {
            for c in 0..2 {
                let mut r = zero();
                let mut mm = zero();
                for a in 0..2 {
                    for b in 0..2 {
                        r += up[a] * up[b] * nab[a][c][b];
                        mm += kup[a] * up[b] * nab[a][c][b];
                    }
                }
                residual = residual.max(r.norm());
                expansion[c] = mm;
            }
            for a in 0..2 {
                for c in 0..2 {
                    let kn: Scalar = (0..2).map(|b| kup[b] * nab[a][c][b]).sum();
                    sommers[a][c] = kn - k[a] * expansion[c];
                }
            }
        }
        Duality::ASD => {
            for a in 0..2 {
                let mut r = zero();
                let mut mm = zero();
                for c in 0..2 {
                    for b in 0..2 {
                        r += up[c] * up[b] * nab[a][c][b];
                        mm += kup[c] * up[b] * nab[a][c][b];
                    }
                }
                residual = residual.max(r.norm());
                expansion[a] = mm;
            }
            for a in 0..2 {
                for c in 0..2 {
                    let kn: Scalar = (0..2).map(|b| kup[b] * nab[a][c][b]).sum();
                    sommers[a][c] = kn - k[c] * expansion[a];
                }
            }
        }
    }
    let expansion_scale = size * s1;
    let nonexpanding = norm2(&expansion) <= tol.expansion * expansion_scale;
    Ok(CongruenceReport {
        duality,
        spinor: v,
        residual,
        residual_scale: size * size * s1,
        sommers,
        expansion,
        expansion_scale,
        nonexpanding,
    })
}

pub fn verify_null_string(
    spec: &SpinorFieldSpec,
    geo: &PointGeometry,
    point: &[Scalar; 4],
    tol: &CongruenceTolerance,
) -> Result<CongruenceReport> {
    analyse_spinor(&spec.jets(point)?, spec.duality, geo, tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticsReport {
    pub theta: Scalar,
    pub rho: Scalar,
    pub class: OpticsClass,
}

/// θ ∼ m_A M^A + m_Ȧ M^Ȧ, ϱ ∼ m_A M^A − m_Ȧ M^Ȧ, with m_A from the SD report,
/// M^A the ASD expansion and vice versa. Expansions flagged zero are taken
/// as exactly zero.
pub fn intersection_optics(sd: &CongruenceReport, asd: &CongruenceReport, tol: &CongruenceTolerance) -> OpticsReport {
    let z = [zero(); 2];
    let m_asd = if asd.nonexpanding { z } else { asd.expansion };
    let m_sd = if sd.nonexpanding { z } else { sd.expansion };
    // m_A M^A = −m^A M_A
    let a = -SpinorConventions::contract(&sd.spinor, &m_asd);
    let b = -SpinorConventions::contract(&asd.spinor, &m_sd);
    let theta = a + b;
    let rho = a - b;
    let scale = norm2(&sd.spinor) * asd.expansion_scale + norm2(&asd.spinor) * sd.expansion_scale;
    let nz = |v: Scalar| v.norm() > tol.expansion * scale;
    OpticsReport { theta, rho, class: OpticsClass::from_flags(nz(theta), nz(rho)) }
}

// ------------------------------------------------------------ explicit systems

/// Residuals of a two-equation system plus the expansion it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemResidual {
    pub r1: Scalar,
    pub r2: Scalar,
    pub expansion: Spinor,
    /// Sum of magnitudes of the terms in r1 and r2.
    pub scale: f64,
}

impl SystemResidual {
    pub fn max_abs(&self) -> f64 {
        self.r1.norm().max(self.r2.norm())
    }
}

fn terms_scale(terms: &[Scalar]) -> f64 {
    1.0 + terms.iter().map(|t| t.norm()).sum::<f64>()
}

/// zz_y − z_x = 0 and z_q − zz_p − z_y𝒴 + z𝒴_y − 𝒴_x = 0 with
/// 𝒴 = ℬ + 2z𝒬 + z²𝒜 (total derivatives); M_1 = −√2 z_y,
/// M_2 = √2(−z_p − ∂_x(𝒬 + z𝒜) + z∂_y(𝒬 + z𝒜) − z_y(𝒬 + z𝒜)).
pub fn asd_z_system_residual(z: &Field, q: &PlebanskiData, point: &[Scalar; 4]) -> Result<SystemResidual> {
    let j = q.jets(point)?;
    let zj = z.eval_jet(point)?;
    Ok(z_system(&zj, &j))
}

fn z_system(zj: &Jet, j: &QJets) -> SystemResidual {
    let zv = zj.value();
    let two = Scalar::new(2.0, 0.0);
    let y = j.b.add(&zj.mul(&j.q).scale(two)).add(&zj.mul(zj).mul(&j.a));
    let (zq, zp, zx, zy) = (zj.d(0), zj.d(1), zj.d(2), zj.d(3));
    let t1 = [zv * zy, -zx];
    let t2 = [zq, -zv * zp, -zy * y.value(), zv * y.d(3), -y.d(2)];
    let w = j.q.add(&zj.mul(&j.a));
    let m1 = -zy * SQRT_2;
    let m2 = (-zp - w.d(2) + zv * w.d(3) - zy * w.value()) * SQRT_2;
    SystemResidual {
        r1: t1.iter().sum(),
        r2: t2.iter().sum(),
        expansion: [m1, m2],
        scale: terms_scale(&t1).max(terms_scale(&t2)),
    }
}

/// w_y − ww_x = 0 and w_p − ww_q + 𝒵_y − w𝒵_x + w_x𝒵 = 0 with
/// 𝒵 = 𝒜 + 2w𝒬 + w²ℬ; N_1 = √2 w_x,
/// N_2 = √2(w_q + w∂_x(𝒬 + wℬ) − ∂_y(𝒬 + wℬ) − w_x(𝒬 + wℬ)).
pub fn asd_w_system_residual(w: &Field, q: &PlebanskiData, point: &[Scalar; 4]) -> Result<SystemResidual> {
    let j = q.jets(point)?;
    let wj = w.eval_jet(point)?;
    Ok(w_system(&wj, &j))
}

fn w_system(wj: &Jet, j: &QJets) -> SystemResidual {
    let wv = wj.value();
    let two = Scalar::new(2.0, 0.0);
    let zz = j.a.add(&wj.mul(&j.q).scale(two)).add(&wj.mul(wj).mul(&j.b));
    let (wq, wp, wx, wy) = (wj.d(0), wj.d(1), wj.d(2), wj.d(3));
    let t1 = [wy, -wv * wx];
    let t2 = [wp, -wv * wq, zz.d(3), -wv * zz.d(2), wx * zz.value()];
    let u = j.q.add(&wj.mul(&j.b));
    let n1 = wx * SQRT_2;
    let n2 = (wq + wv * u.d(2) - u.d(3) - wx * u.value()) * SQRT_2;
    SystemResidual {
        r1: t1.iter().sum(),
        r2: t2.iter().sum(),
        expansion: [n1, n2],
        scale: terms_scale(&t1).max(terms_scale(&t2)),
    }
}

/// Second SD congruence n_A = [1, n] on the Walker form (𝒬 = 0):
/// n_q − n_yℬ − ℬ_p + nℬ_y − nn_x = 0, n_p + n_x𝒜 + 𝒜_q − n𝒜_x − nn_y = 0,
/// N_Ṁ = √2 (n_x, n_y).
pub fn second_sd_residual(n: &Field, a: &Field, b: &Field, point: &[Scalar; 4]) -> Result<SystemResidual> {
    let nj = n.eval_jet(point)?;
    second_sd_from_jets(&nj, &a.eval_jet(point)?, &b.eval_jet(point)?)
}

pub fn second_sd_from_jets(nj: &Jet, a: &Jet, b: &Jet) -> Result<SystemResidual> {
    let nv = nj.value();
    let (nq, np, nx, ny) = (nj.d(0), nj.d(1), nj.d(2), nj.d(3));
    let bv = b.value();
    let av = a.value();
    let t1 = [nq, -ny * bv, -b.d(1), nv * b.d(3), -nv * nx];
    let t2 = [np, nx * av, a.d(0), -nv * a.d(2), -nv * ny];
    Ok(SystemResidual {
        r1: t1.iter().sum(),
        r2: t2.iter().sum(),
        expansion: [nx * SQRT_2, ny * SQRT_2],
        scale: terms_scale(&t1).max(terms_scale(&t2)),
    })
}

/// Roots of C^(1) − 4C^(2)n + 6C^(3)n² = 0:
/// n_± = C^(2)/(3C^(3)) ± √(2δ)/(6C^(3)), or n = C^(1)/(4C^(2)) when C^(3) = 0.
/// Real mode drops the pair when δ < 0.
pub fn candidate_n(curv: &CurvatureData, mode: Mode) -> Result<Vec<Scalar>> {
    let tol = curv.zero_tol();
    let [c1, c2, c3, _, _] = curv.cup;
    if c3.norm() > tol {
        let delta = c2 * c2 * 2.0 - c1 * c3 * 3.0;
        if delta.norm() <= tol * (1.0 + curv.max_abs()) {
            return Ok(vec![c2 / (c3 * 3.0)]);
        }
        if mode == Mode::Real && delta.re < 0.0 {
            return Ok(vec![]);
        }
        let s = (delta * 2.0).sqrt();
        Ok(vec![(c2 * 2.0 + s) / (c3 * 6.0), (c2 * 2.0 - s) / (c3 * 6.0)])
    } else if c2.norm() > tol {
        Ok(vec![c1 / (c2 * 4.0)])
    } else {
        Err(Error::BothLeadingZero)
    }
}

/// Jets of the candidates, for checking them against the second-SD system.
/// The square root goes through exp(½ ln(2δ)), so δ must stay away from 0;
/// at δ = 0 only the double root C^(2)/(3C^(3)) is returned.
pub fn candidate_n_jets(curv: &CurvatureJets, mode: Mode) -> Result<Vec<Jet>> {
    let vals = curv.values();
    let tol = vals.zero_tol();
    let [c1, c2, c3, _, _] = &curv.cup;
    let k = |v: f64| Scalar::new(v, 0.0);
    if c3.value().norm() > tol {
        let delta = c2.mul(c2).scale(k(2.0)).sub(&c1.mul(c3).scale(k(3.0)));
        if delta.value().norm() <= tol * (1.0 + vals.max_abs()) {
            return Ok(vec![c2.div(&c3.scale(k(3.0)))?]);
        }
        if mode == Mode::Real && delta.value().re < 0.0 {
            return Ok(vec![]);
        }
        let s = delta.scale(k(2.0)).ln()?.scale(k(0.5)).exp();
        let den = c3.scale(k(6.0));
        let two_c2 = c2.scale(k(2.0));
        Ok(vec![two_c2.add(&s).div(&den)?, two_c2.sub(&s).div(&den)?])
    } else if c2.value().norm() > tol {
        Ok(vec![c1.div(&c2.scale(k(4.0)))?])
    } else {
        Err(Error::BothLeadingZero)
    }
}

/// The six equations for (N, P, Ω) of the type-[III] ansatz, with
/// a = N_p + P_q, b = PN_p − N_pp + 2M₀Ω_q, c = NP_q + P_qq, f = Ω_qq + NΩ_q.
pub fn type3_system_residual(m0: Scalar, n: &Field, p: &Field, omega: &Field, point: &[Scalar; 4]) -> Result<[Scalar; 6]> {
    let (nj, pj, oj) = (n.eval_jet(point)?, p.eval_jet(point)?, omega.eval_jet(point)?);
    let (dq, dp) = (0usize, 1usize);
    let a = nj.deriv(dp).add(&pj.deriv(dq));
    let b = pj.mul(&nj.deriv(dp)).sub(&nj.deriv(dp).deriv(dp)).add(&oj.deriv(dq).scale(m0 * 2.0));
    let c = nj.mul(&pj.deriv(dq)).add(&pj.deriv(dq).deriv(dq));
    let f = oj.deriv(dq).deriv(dq).add(&nj.mul(&oj.deriv(dq)));
    let (av, bv, cv, fv) = (a.value(), b.value(), c.value(), f.value());
    let (nv, pv, ov) = (nj.value(), pj.value(), oj.value());
    let np = nj.d(dp);
    let pq = pj.d(dq);
    let oq = oj.d(dq);
    Ok([
        (bv * a.d(dq) - av * b.d(dq)) * 2.0 - av * av * np * 4.0 - m0 * av * fv * 2.0 + cv * bv,
        (av * c.d(dq) - cv * a.d(dq)) * 2.0 + nv * av * cv * 2.0 - cv * cv,
        (av * f.d(dq) - fv * a.d(dq)) * 2.0 + nv * av * fv * 2.0 - fv * cv,
        (bv * a.d(dp) - av * b.d(dp)) * 2.0 - m0 * av * av * ov * 4.0 + pv * bv * av * 2.0 - bv * bv,
        (av * c.d(dp) - cv * a.d(dp)) * 2.0 + av * av * pq * 4.0 - m0 * av * fv * 2.0 + cv * bv,
        (av * f.d(dp) - fv * a.d(dp)) * 2.0 + av * av * oq * 4.0 + ov * av * cv * 2.0 - pv * fv * av * 2.0 + fv * bv,
    ])
}
