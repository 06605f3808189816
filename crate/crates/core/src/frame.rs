//! Spinor conventions, the Plebański null tetrad, and the two routes to the
//! spinorial connection: the closed-form fast path and the coordinate chain
//! metric → Christoffel → tetrad Γ_abc → spinor.
//!
//! Tetrad labels follow ds² = 2(e¹e² + e³e⁴). Tetrad indices are 0-based in
//! arrays (`gamma[0][1][3]` is Γ_124).

use std::f64::consts::SQRT_2;

use crate::dsl::ScalarField;
use crate::error::{Error, Result};
use crate::jet::{Jet, Mode, Scalar};

pub type Spinor = [Scalar; 2];

fn zero() -> Scalar {
    Scalar::new(0.0, 0.0)
}

/// ε_AB = ε^AB = [[0,1],[−1,0]], m_A = ε_AB m^B, m^A = m_B ε^BA.
pub struct SpinorConventions;

impl SpinorConventions {
    pub const EPSILON: [[f64; 2]; 2] = [[0.0, 1.0], [-1.0, 0.0]];

    pub fn lower(up: &Spinor) -> Spinor {
        [up[1], -up[0]]
    }

    pub fn raise(down: &Spinor) -> Spinor {
        // m^A = m_B ε^{BA}: m^1 = m_2 ε^{21} = −m_2, m^2 = m_1 ε^{12} = m_1
        [-down[1], down[0]]
    }

    /// m^A n_A for lower-index inputs.
    pub fn contract(m: &Spinor, n: &Spinor) -> Scalar {
        let mu = Self::raise(m);
        mu[0] * n[0] + mu[1] * n[1]
    }
}

/// Q^{ȦḂ} = [[𝒜, 𝒬], [𝒬, ℬ]] of a weak-HH metric.
#[derive(Debug, Clone, PartialEq)]
pub struct PlebanskiData {
    pub a: ScalarField,
    pub q: ScalarField,
    pub b: ScalarField,
}

/// Point jets of (𝒜, 𝒬, ℬ).
#[derive(Debug, Clone)]
pub struct QJets {
    pub a: Jet,
    pub q: Jet,
    pub b: Jet,
}

impl PlebanskiData {
    pub fn mode(&self) -> Mode {
        self.a.mode.join(self.q.mode).join(self.b.mode)
    }

    pub fn jets(&self, point: &[Scalar; 4]) -> Result<QJets> {
        Ok(QJets { a: self.a.eval_jet(point)?, q: self.q.eval_jet(point)?, b: self.b.eval_jet(point)? })
    }
}

impl QJets {
    /// Q_{ȦḂ} = [[ℬ, −𝒬], [−𝒬, 𝒜]].
    pub fn lower(&self) -> [[Jet; 2]; 2] {
        let mq = self.q.neg();
        [[self.b.clone(), mq.clone()], [mq, self.a.clone()]]
    }

    pub fn upper(&self) -> [[Jet; 2]; 2] {
        [[self.a.clone(), self.q.clone()], [self.q.clone(), self.b.clone()]]
    }

    /// ∂_Ȧ f = (f_x, f_y).
    pub fn d_lo(&self, f: &Jet, a: usize) -> Jet {
        f.deriv(2 + a)
    }

    /// ∂^Ȧ f = (f_y, −f_x).
    pub fn d_up(&self, f: &Jet, a: usize) -> Jet {
        if a == 0 {
            f.deriv(3)
        } else {
            f.deriv(2).neg()
        }
    }

    /// Eth operator: ð^1̇ = ∂_p + 𝒜∂_x + 𝒬∂_y, ð^2̇ = −∂_q + 𝒬∂_x + ℬ∂_y.
    pub fn eth(&self, f: &Jet, a: usize) -> Jet {
        let (fx, fy) = (f.deriv(2), f.deriv(3));
        if a == 0 {
            f.deriv(1).add(&self.a.mul(&fx)).add(&self.q.mul(&fy))
        } else {
            f.deriv(0).neg().add(&self.q.mul(&fx)).add(&self.b.mul(&fy))
        }
    }

    /// Rows e¹..e⁴ of the Plebański coframe in (q,p,x,y).
    pub fn coframe(&self) -> Coframe {
        let m = self.a.mode().join(self.q.mode()).join(self.b.mode());
        let c = |v: f64| Jet::real(m, v);
        Coframe {
            l: [
                [c(-1.0), c(0.0), c(0.0), c(0.0)],
                [self.b.neg(), self.q.clone(), c(0.0), c(-1.0)],
                [c(0.0), c(1.0), c(0.0), c(0.0)],
                [self.q.neg(), self.a.clone(), c(-1.0), c(0.0)],
            ],
        }
    }
}

/// Coordinate components g_{μν} of ds²/2 = dq dy − dp dx + 𝒜dp² − 2𝒬 dp dq + ℬ dq²,
/// coordinate order (q,p,x,y).
pub fn plebanski_metric(data: &PlebanskiData, point: &[Scalar; 4]) -> Result<[[Jet; 4]; 4]> {
    let j = data.jets(point)?;
    let mut g = j.coframe().metric();
    for row in g.iter_mut() {
        for v in row.iter_mut() {
            *v = v.scale(Scalar::new(0.5, 0.0));
        }
    }
    Ok(g)
}

/// Null coframe: `l[a][μ] = e^a_μ`, ds² = 2(e¹e² + e³e⁴).
#[derive(Debug, Clone)]
pub struct Coframe {
    pub l: [[Jet; 4]; 4],
}

/// Pairs (a,b) with η_ab = 1.
const ETA_PAIR: [usize; 4] = [1, 0, 3, 2];

impl Coframe {
    /// Matrix of ds² (not ds²/2).
    pub fn metric(&self) -> [[Jet; 4]; 4] {
        std::array::from_fn(|mu| {
            std::array::from_fn(|nu| {
                let mut acc = self.l[0][mu].mul(&self.l[1][nu]);
                acc = acc.add(&self.l[1][mu].mul(&self.l[0][nu]));
                acc = acc.add(&self.l[2][mu].mul(&self.l[3][nu]));
                acc.add(&self.l[3][mu].mul(&self.l[2][nu]))
            })
        })
    }

    pub fn mode(&self) -> Mode {
        self.l.iter().flatten().fold(Mode::Real, |m, j| m.join(j.mode()))
    }
}

/// Gauss-Jordan inverse of a 4×4 jet matrix with partial pivoting on values.
pub fn invert_jets(m: &[[Jet; 4]; 4]) -> Result<[[Jet; 4]; 4]> {
    let mode = m.iter().flatten().fold(Mode::Real, |md, j| md.join(j.mode()));
    let scale = m.iter().flatten().map(|j| j.value().norm()).fold(0.0, f64::max).max(1e-300);
    let mut a = m.clone();
    let mut inv: [[Jet; 4]; 4] =
        std::array::from_fn(|i| std::array::from_fn(|j| Jet::real(mode, if i == j { 1.0 } else { 0.0 })));
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&r, &s| a[r][col].value().norm().total_cmp(&a[s][col].value().norm()))
            .unwrap_or(col);
        if a[piv][col].value().norm() <= 1e-12 * scale {
            return Err(Error::DegenerateMetric);
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let r = a[col][col].recip()?;
        for k in 0..4 {
            a[col][k] = a[col][k].mul(&r);
            inv[col][k] = inv[col][k].mul(&r);
        }
        for row in 0..4 {
            if row == col {
                continue;
            }
            let f = a[row][col].clone();
            if f.max_abs() == 0.0 {
                continue;
            }
            for k in 0..4 {
                a[row][k] = a[row][k].sub(&f.mul(&a[col][k]));
                inv[row][k] = inv[row][k].sub(&f.mul(&inv[col][k]));
            }
        }
    }
    Ok(inv)
}

pub fn det4(m: &[[Scalar; 4]; 4]) -> Scalar {
    let mut a = *m;
    let mut det = Scalar::new(1.0, 0.0);
    for col in 0..4 {
        let piv = (col..4).max_by(|&r, &s| a[r][col].norm().total_cmp(&a[s][col].norm())).unwrap_or(col);
        if a[piv][col].norm() == 0.0 {
            return zero();
        }
        if piv != col {
            a.swap(col, piv);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                let t = a[col][k];
                a[row][k] -= f * t;
            }
        }
    }
    det
}

/// Γ_abc = η_ad ω^d_b(E_c), antisymmetric in (a,b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetradConnection {
    pub gamma: [[[Scalar; 4]; 4]; 4],
}

impl TetradConnection {
    pub fn zero() -> Self {
        TetradConnection { gamma: [[[zero(); 4]; 4]; 4] }
    }

    /// 1-based accessor, Γ_abc.
    pub fn g(&self, a: usize, b: usize, c: usize) -> Scalar {
        self.gamma[a - 1][b - 1][c - 1]
    }

    /// Largest |Γ_abc + Γ_bac|.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    m = m.max((self.gamma[a][b][c] + self.gamma[b][a][c]).norm());
                }
            }
        }
        m
    }
}

/// Spinorial connection. `und[k][M][Ṅ]` is Γ_{AB MṄ} with k = 0,1,2 for
/// AB = 11, 12, 22; `dot` likewise for Γ_{ȦḂ MṄ}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorConnection {
    pub und: [[[Scalar; 2]; 2]; 3],
    pub dot: [[[Scalar; 2]; 2]; 3],
}

/// Index of a symmetric pair (A,B), A,B ∈ {0,1}.
pub fn pair(a: usize, b: usize) -> usize {
    a + b
}

impl SpinorConnection {
    pub fn zero() -> Self {
        SpinorConnection { und: [[[zero(); 2]; 2]; 3], dot: [[[zero(); 2]; 2]; 3] }
    }

    /// Γ_{AB MṄ} for 0-based indices.
    pub fn u(&self, a: usize, b: usize, m: usize, n: usize) -> Scalar {
        self.und[pair(a, b)][m][n]
    }

    /// Γ_{ȦḂ MṄ} for 0-based indices.
    pub fn d(&self, a: usize, b: usize, m: usize, n: usize) -> Scalar {
        self.dot[pair(a, b)][m][n]
    }

    pub fn max_abs(&self) -> f64 {
        self.und.iter().chain(self.dot.iter()).flatten().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &SpinorConnection) -> f64 {
        let a = self.und.iter().chain(self.dot.iter()).flatten().flatten();
        let b = other.und.iter().chain(other.dot.iter()).flatten().flatten();
        a.zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }
}

/// Matrix slot (M,Ṅ) → (tetrad leg c, sign): [[c=4, c=2], [c=1, −c=3]].
pub const SLOT: [[(usize, f64); 2]; 2] = [[(3, 1.0), (1, 1.0)], [(0, 1.0), (2, -1.0)]];

/// Tetrad Γ_abc → spinorial Γ_{ABMṄ}, Γ_{ȦḂMṄ}.
pub fn gamma_to_spinor(t: &TetradConnection) -> SpinorConnection {
    let g = &t.gamma;
    let mut s = SpinorConnection::zero();
    let h = 1.0 / SQRT_2;
    for m in 0..2 {
        for n in 0..2 {
            let (c, sg) = SLOT[m][n];
            s.und[0][m][n] = g[3][1][c] * (SQRT_2 * sg);
            s.und[2][m][n] = g[2][0][c] * (SQRT_2 * sg);
            s.und[1][m][n] = (g[0][1][c] + g[2][3][c]) * (h * sg);
            s.dot[0][m][n] = g[3][0][c] * (SQRT_2 * sg);
            s.dot[2][m][n] = g[2][1][c] * (SQRT_2 * sg);
            s.dot[1][m][n] = (-g[0][1][c] + g[2][3][c]) * (h * sg);
        }
    }
    s
}

/// Inverse of [`gamma_to_spinor`] on antisymmetric input.
pub fn spinor_to_gamma(s: &SpinorConnection) -> TetradConnection {
    let mut t = TetradConnection::zero();
    let mut set = |a: usize, b: usize, c: usize, v: Scalar| {
        t.gamma[a][b][c] = v;
        t.gamma[b][a][c] = -v;
    };
    for m in 0..2 {
        for n in 0..2 {
            let (c, sg) = SLOT[m][n];
            set(3, 1, c, s.und[0][m][n] * (sg / SQRT_2));
            set(2, 0, c, s.und[2][m][n] * (sg / SQRT_2));
            set(3, 0, c, s.dot[0][m][n] * (sg / SQRT_2));
            set(2, 1, c, s.dot[2][m][n] * (sg / SQRT_2));
            set(2, 3, c, (s.und[1][m][n] + s.dot[1][m][n]) * (sg / SQRT_2));
            set(0, 1, c, (s.und[1][m][n] - s.dot[1][m][n]) * (sg / SQRT_2));
        }
    }
    t
}

/// Closed-form connection in the Plebański tetrad:
/// Γ_{12 2Ḋ} = −(1/√2)∂^Ȧ Q_{ȦḊ}, Γ_{22 2Ḋ} = −√2 ð^Ȧ Q_{ȦḊ}, Γ_{ȦḂ 2Ḋ} = √2 ∂_(Ȧ Q_Ḃ)Ḋ.
/// Every other component is exactly zero.
pub fn spin_connection_plebanski(j: &QJets) -> SpinorConnection {
    let ql = j.lower();
    let mut s = SpinorConnection::zero();
    for d in 0..2 {
        let mut s12 = zero();
        let mut s22 = zero();
        for a in 0..2 {
            s12 += j.d_up(&ql[a][d], a).value();
            s22 += j.eth(&ql[a][d], a).value();
        }
        s.und[1][1][d] = s12 * (-1.0 / SQRT_2);
        s.und[2][1][d] = s22 * (-SQRT_2);
        for (a, b) in [(0, 0), (0, 1), (1, 1)] {
            let v = j.d_lo(&ql[b][d], a).value() + j.d_lo(&ql[a][d], b).value();
            s.dot[pair(a, b)][1][d] = v * (SQRT_2 / 2.0);
        }
    }
    s
}

/// Metric, Christoffels and frame as jets at one point, built from a coframe.
#[derive(Debug, Clone)]
pub struct CoordGeometry {
    pub mode: Mode,
    /// Matrix of ds² at the point.
    pub g: [[Scalar; 4]; 4],
    /// Christoffel symbols Chr^a_{bc} as jets (valid to first order at least).
    pub chr: [[[Jet; 4]; 4]; 4],
    /// Coframe values e^a_μ.
    pub l: [[Scalar; 4]; 4],
    /// Frame vectors E_a^μ, indexed `e[a][μ]`.
    pub e: [[Scalar; 4]; 4],
    pub gamma: TetradConnection,
}

impl CoordGeometry {
    pub fn new(cf: &Coframe) -> Result<Self> {
        let mode = cf.mode();
        let gj = cf.metric();
        let g: [[Scalar; 4]; 4] = std::array::from_fn(|i| std::array::from_fn(|k| gj[i][k].value()));
        let scale = g.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
        if det4(&g).norm() <= 1e-12 * scale.powi(4).max(1e-300) {
            return Err(Error::DegenerateMetric);
        }
        let gi = invert_jets(&gj)?;
        // dg[a][b][c] = ∂_c g_ab
        let dg: [[[Jet; 4]; 4]; 4] =
            std::array::from_fn(|a| std::array::from_fn(|b| std::array::from_fn(|c| gj[a][b].deriv(c))));
        let chr: [[[Jet; 4]; 4]; 4] = std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                std::array::from_fn(|c| {
                    let mut acc = Jet::zero(mode);
                    for d in 0..4 {
                        let t = dg[d][c][b].add(&dg[d][b][c]).sub(&dg[b][c][d]);
                        acc = acc.add(&gi[a][d].mul(&t));
                    }
                    acc.scale(Scalar::new(0.5, 0.0))
                })
            })
        });
        let linv = invert_jets(&cf.l)?;
        let l: [[Scalar; 4]; 4] = std::array::from_fn(|a| std::array::from_fn(|m| cf.l[a][m].value()));
        let e: [[Scalar; 4]; 4] = std::array::from_fn(|a| std::array::from_fn(|m| linv[m][a].value()));
        let mut gamma = TetradConnection::zero();
        for b in 0..4 {
            for c in 0..4 {
                // v^ρ = ∇_{E_c} E_b in coordinates
                let mut v = [zero(); 4];
                for (rho, vr) in v.iter_mut().enumerate() {
                    for mu in 0..4 {
                        *vr += e[c][mu] * linv[rho][b].d(mu);
                        for sigma in 0..4 {
                            *vr += chr[rho][mu][sigma].value() * e[c][mu] * e[b][sigma];
                        }
                    }
                }
                for a in 0..4 {
                    let d = ETA_PAIR[a];
                    gamma.gamma[a][b][c] = (0..4).map(|rho| l[d][rho] * v[rho]).sum();
                }
            }
        }
        Ok(CoordGeometry { mode, g, chr, l, e, gamma })
    }

    /// Spinorial connection of the coframe via [`gamma_to_spinor`].
    pub fn spin_connection(&self) -> SpinorConnection {
        gamma_to_spinor(&self.gamma)
    }

    /// Vector fields ∂_{MṄ} = −√2 [[E₄, E₂], [E₁, −E₃]] as coordinate components.
    pub fn spinor_derivatives(&self) -> [[[Scalar; 4]; 2]; 2] {
        spinor_derivatives(&self.e)
    }
}

/// ∂_{MṄ} from frame vectors `e[a][μ]`.
pub fn spinor_derivatives(e: &[[Scalar; 4]; 4]) -> [[[Scalar; 4]; 2]; 2] {
    let s = -SQRT_2;
    std::array::from_fn(|m| {
        std::array::from_fn(|n| {
            let (c, sg) = SLOT[m][n];
            std::array::from_fn(|mu| e[c][mu] * (s * sg))
        })
    })
}

/// Frame vectors of the Plebański tetrad at a point:
/// E₁ = −∂_q + 𝒬∂_x + ℬ∂_y, E₂ = −∂_y, E₃ = ∂_p + 𝒜∂_x + 𝒬∂_y, E₄ = −∂_x.
pub fn plebanski_frame(j: &QJets) -> [[Scalar; 4]; 4] {
    let (a, q, b) = (j.a.value(), j.q.value(), j.b.value());
    let o = zero();
    let one = Scalar::new(1.0, 0.0);
    [[-one, o, q, b], [o, o, o, -one], [o, one, a, q], [o, o, -one, o]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::ScalarField;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn field(src: &str) -> ScalarField {
        ScalarField::parse(src, BTreeMap::new(), Mode::Real).unwrap()
    }

    fn pleb(a: &str, q: &str, b: &str) -> PlebanskiData {
        PlebanskiData { a: field(a), q: field(q), b: field(b) }
    }

    fn pt(v: [f64; 4]) -> [Scalar; 4] {
        v.map(|x| Scalar::new(x, 0.0))
    }

    #[test]
    fn flat_metric_matrix() {
        let g = plebanski_metric(&pleb("0", "0", "0"), &pt([0.1, 0.2, 0.3, 0.4])).unwrap();
        let v = |i: usize, k: usize| g[i][k].value().re;
        assert_eq!(v(0, 3), 0.5);
        assert_eq!(v(3, 0), 0.5);
        assert_eq!(v(1, 2), -0.5);
        assert_eq!(v(0, 0), 0.0);
        assert_eq!(v(1, 1), 0.0);
    }

    #[test]
    fn metric_reads_off_functions() {
        let g = plebanski_metric(&pleb("x^2", "0", "y^2"), &pt([0.0, 0.0, 1.0, 2.0])).unwrap();
        assert_eq!(g[1][1].value().re, 1.0);
        assert_eq!(g[0][0].value().re, 4.0);
        let g = plebanski_metric(&pleb("0", "x", "0"), &pt([0.0, 0.0, 0.7, 0.0])).unwrap();
        assert!((g[0][1].value().re + 0.7).abs() < 1e-15);
        assert!((g[1][0].value().re + 0.7).abs() < 1e-15);
    }

    #[test]
    fn epsilon_rules() {
        let m = [Scalar::new(0.3, -1.0), Scalar::new(2.0, 0.5)];
        assert_eq!(SpinorConventions::lower(&SpinorConventions::raise(&m)), m);
        assert_eq!(SpinorConventions::contract(&m, &m), zero());
        // ε_AC ε^AB = δ^B_C
        let e = SpinorConventions::EPSILON;
        for b in 0..2 {
            for c in 0..2 {
                let s: f64 = (0..2).map(|a| e[a][c] * e[a][b]).sum();
                assert_eq!(s, if b == c { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn gamma_424_lands_in_top_left() {
        let mut t = TetradConnection::zero();
        t.gamma[3][1][3] = Scalar::new(1.0, 0.0);
        t.gamma[1][3][3] = Scalar::new(-1.0, 0.0);
        let s = gamma_to_spinor(&t);
        assert_eq!(s.und[0][0][0], Scalar::new(SQRT_2, 0.0));
        let mut others = s;
        others.und[0][0][0] = zero();
        assert_eq!(others.max_abs(), 0.0);
    }

    #[test]
    fn flat_fast_path_is_zero() {
        let j = pleb("0", "0", "0").jets(&pt([0.1, 0.2, 0.3, 0.4])).unwrap();
        assert_eq!(spin_connection_plebanski(&j).max_abs(), 0.0);
    }

    #[test]
    fn fast_path_matches_coordinate_chain() {
        let d = pleb("x^2*y + q*p*x", "x*y + p*x^2 + exp(q)", "y^3 + q*x*y - p");
        let p = pt([0.3, -0.4, 0.7, 0.2]);
        let j = d.jets(&p).unwrap();
        let fast = spin_connection_plebanski(&j);
        let geo = CoordGeometry::new(&j.coframe()).unwrap();
        let slow = geo.spin_connection();
        assert!(fast.max_diff(&slow) < 1e-12 * (1.0 + fast.max_abs()), "{fast:?}\n{slow:?}");
        assert!(geo.gamma.antisymmetry_defect() < 1e-12);
        let fe = plebanski_frame(&j);
        for a in 0..4 {
            for m in 0..4 {
                assert!((fe[a][m] - geo.e[a][m]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn q_x_sets_dotted_connection() {
        let j = pleb("0", "x", "0").jets(&pt([0.0, 0.0, 0.5, 0.5])).unwrap();
        let s = spin_connection_plebanski(&j);
        // Γ_{1̇1̇ 22̇} = √2 ∂_x Q_{1̇2̇} = −√2 𝒬_x
        assert!((s.dot[0][1][1] - Scalar::new(-SQRT_2, 0.0)).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn round_trip_random_gamma(vals in proptest::collection::vec(-5.0f64..5.0, 24)) {
            let mut t = TetradConnection::zero();
            let mut k = 0;
            for a in 0..4 {
                for b in (a + 1)..4 {
                    for c in 0..4 {
                        t.gamma[a][b][c] = Scalar::new(vals[k], 0.0);
                        t.gamma[b][a][c] = Scalar::new(-vals[k], 0.0);
                        k += 1;
                    }
                }
            }
            let back = spinor_to_gamma(&gamma_to_spinor(&t));
            for a in 0..4 { for b in 0..4 { for c in 0..4 {
                prop_assert!((back.gamma[a][b][c] - t.gamma[a][b][c]).norm() < 1e-12);
            }}}
        }

        #[test]
        fn lower_raise_identity(a in -1e6f64..1e6, b in -1e6f64..1e6, c in -1e6f64..1e6, d in -1e6f64..1e6) {
            let m = [Scalar::new(a, b), Scalar::new(c, d)];
            prop_assert_eq!(SpinorConventions::raise(&SpinorConventions::lower(&m)), m);
        }
    }
}
