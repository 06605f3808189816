//! Curvature at a point by two routes: closed-form Plebański-tetrad formulas
//! (the fast path) and the coordinate-tensor oracle. Sign convention: the
//! scalar R satisfies R = −4Λ for Einstein spaces, which is minus the usual
//! scalar curvature of ds².

use serde::Serialize;

use crate::error::Result;
use crate::frame::{pair, CoordGeometry, QJets};
use crate::jet::{Jet, Scalar};

fn zero() -> Scalar {
    Scalar::new(0.0, 0.0)
}

/// Curvature at a point relative to the chosen null tetrad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureData {
    /// C^(1..5) of the SD Weyl spinor: 2·(C_2222, C_1222, C_1122, C_1112, C_1111).
    #[serde(serialize_with = "ser_arr")]
    pub cup: [Scalar; 5],
    /// ASD Weyl components C_{1̇1̇1̇1̇}, C_{1̇1̇1̇2̇}, C_{1̇1̇2̇2̇}, C_{1̇2̇2̇2̇}, C_{2̇2̇2̇2̇}.
    #[serde(serialize_with = "ser_arr")]
    pub weyl_asd: [Scalar; 5],
    /// Traceless Ricci C_{AB ĊḊ}; rows AB = 11,12,22, columns ĊḊ likewise.
    #[serde(serialize_with = "ser_mat")]
    pub ricci: [[Scalar; 3]; 3],
    #[serde(serialize_with = "ser_c")]
    pub r: Scalar,
}

fn ser_c<S: serde::Serializer>(v: &Scalar, s: S) -> std::result::Result<S::Ok, S::Error> {
    [v.re, v.im].serialize(s)
}

fn ser_arr<S: serde::Serializer>(v: &[Scalar; 5], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>().serialize(s)
}

fn ser_mat<S: serde::Serializer>(v: &[[Scalar; 3]; 3], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(|row| row.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>()).collect::<Vec<_>>().serialize(s)
}

impl CurvatureData {
    pub fn zero() -> Self {
        CurvatureData { cup: [zero(); 5], weyl_asd: [zero(); 5], ricci: [[zero(); 3]; 3], r: zero() }
    }

    /// C^(i) analogue for the ASD spinor, same binomial map as `cup`.
    pub fn asd_coeffs(&self) -> [Scalar; 5] {
        let w = &self.weyl_asd;
        [w[4] * 2.0, w[3] * 2.0, w[2] * 2.0, w[1] * 2.0, w[0] * 2.0]
    }

    fn components(&self) -> impl Iterator<Item = &Scalar> {
        self.cup.iter().chain(self.weyl_asd.iter()).chain(self.ricci.iter().flatten()).chain(std::iter::once(&self.r))
    }

    /// Largest component magnitude.
    pub fn max_abs(&self) -> f64 {
        self.components().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &CurvatureData) -> f64 {
        self.components().zip(other.components()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_ricci(&self) -> f64 {
        self.ricci.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_asd(&self) -> f64 {
        self.weyl_asd.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Zero threshold used by classification: 1e-8·(1 + max component).
    pub fn zero_tol(&self) -> f64 {
        1e-8 * (1.0 + self.max_abs())
    }

    /// The Ricci eigenvalue degeneracy flag: C_{12 1̇2̇} = 0.
    pub fn ricci_degenerate(&self) -> bool {
        self.ricci[1][1].norm() <= self.zero_tol()
    }
}

/// Curvature quantities as jets (lower valid order than the input).
#[derive(Debug, Clone)]
pub struct CurvatureJets {
    pub cup: [Jet; 5],
    pub weyl_asd: [Jet; 5],
    pub ricci: [[Jet; 3]; 3],
    pub r: Jet,
}

impl CurvatureJets {
    pub fn values(&self) -> CurvatureData {
        CurvatureData {
            cup: std::array::from_fn(|i| self.cup[i].value()),
            weyl_asd: std::array::from_fn(|i| self.weyl_asd[i].value()),
            ricci: std::array::from_fn(|i| std::array::from_fn(|k| self.ricci[i][k].value())),
            r: self.r.value(),
        }
    }
}

const PERMS4: [[usize; 4]; 24] = {
    let mut out = [[0usize; 4]; 24];
    let mut n = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = 0;
        while b < 4 {
            let mut c = 0;
            while c < 4 {
                if a != b && a != c && b != c {
                    out[n] = [a, b, c, 6 - a - b - c];
                    n += 1;
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
};

/// Closed-form curvature of the weak-HH metric in the Plebański tetrad:
/// C^(3) = R/6 = −⅓∂_Ȧ∂_Ḃ Q^{ȦḂ}, C^(2) = −∂^Ȧ ð^Ḃ Q_{ȦḂ},
/// ½C^(1) = −ð^Ȧ ð^Ḃ Q_{ȦḂ} + (ð^Ȧ Q_{ȦḂ})(∂_Ċ Q^{ḂĊ}), C_{ȦḂĊḊ} = −∂_(Ȧ∂_Ḃ Q_ĊḊ),
/// C_{12ȦḂ} = −½∂_(Ȧ ∂^Ċ Q_Ḃ)Ċ, C_{22ȦḂ} = −∂_(Ȧ ð^Ċ Q_Ḃ)Ċ, C_{11ȦḂ} = 0.
pub fn plebanski_curvature_jets(j: &QJets) -> CurvatureJets {
    let mode = j.a.mode().join(j.q.mode()).join(j.b.mode());
    let ql = j.lower();
    let qu = j.upper();
    let z = || Jet::zero(mode);

    let c3 = j.a.deriv(2).deriv(2).add(&j.q.deriv(2).deriv(3).scale(Scalar::new(2.0, 0.0))).add(&j.b.deriv(3).deriv(3));
    let c3 = c3.scale(Scalar::new(-1.0 / 3.0, 0.0));

    let mut c2 = z();
    let mut eth_eth = z();
    for a in 0..2 {
        for b in 0..2 {
            let eb = j.eth(&ql[a][b], b);
            c2 = c2.sub(&j.d_up(&eb, a));
            eth_eth = eth_eth.add(&j.eth(&eb, a));
        }
    }
    let mut cross = z();
    for b in 0..2 {
        let mut left = z();
        let mut right = z();
        for a in 0..2 {
            left = left.add(&j.eth(&ql[a][b], a));
            right = right.add(&j.d_lo(&qu[b][a], a));
        }
        cross = cross.add(&left.mul(&right));
    }
    let c1 = cross.sub(&eth_eth).scale(Scalar::new(2.0, 0.0));

    // ∂_a ∂_b Q_cd
    let dd = |a: usize, b: usize, c: usize, d: usize| j.d_lo(&j.d_lo(&ql[c][d], b), a);
    let sym4 = |idx: [usize; 4]| {
        let mut acc = z();
        for p in PERMS4 {
            acc = acc.add(&dd(idx[p[0]], idx[p[1]], idx[p[2]], idx[p[3]]));
        }
        acc.scale(Scalar::new(-1.0 / 24.0, 0.0))
    };
    let weyl_asd = [sym4([0, 0, 0, 0]), sym4([0, 0, 0, 1]), sym4([0, 0, 1, 1]), sym4([0, 1, 1, 1]), sym4([1, 1, 1, 1])];

    let mut ricci: [[Jet; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| z()));
    let t12 = |b: usize| (0..2).fold(z(), |acc, c| acc.add(&j.d_up(&ql[b][c], c)));
    let t22 = |b: usize| (0..2).fold(z(), |acc, c| acc.add(&j.eth(&ql[b][c], c)));
    for (a, b) in [(0, 0), (0, 1), (1, 1)] {
        let s12 = j.d_lo(&t12(b), a).add(&j.d_lo(&t12(a), b));
        let s22 = j.d_lo(&t22(b), a).add(&j.d_lo(&t22(a), b));
        ricci[1][pair(a, b)] = s12.scale(Scalar::new(-0.25, 0.0));
        ricci[2][pair(a, b)] = s22.scale(Scalar::new(-0.5, 0.0));
    }

    let r = c3.scale(Scalar::new(6.0, 0.0));
    CurvatureJets { cup: [c1, c2, c3, z(), z()], weyl_asd, ricci, r }
}

pub fn plebanski_curvature(j: &QJets) -> CurvatureData {
    plebanski_curvature_jets(j).values()
}

/// Coordinate Riemann tensor R^r_{smn} at the point.
#[derive(Debug, Clone)]
pub struct Riemann {
    pub r: [[[[Scalar; 4]; 4]; 4]; 4],
}

impl Riemann {
    pub fn new(geo: &CoordGeometry) -> Self {
        let c = &geo.chr;
        let mut r = [[[[zero(); 4]; 4]; 4]; 4];
        for (ri, rr) in r.iter_mut().enumerate() {
            for (s, rs) in rr.iter_mut().enumerate() {
                for (m, rm) in rs.iter_mut().enumerate() {
                    for (n, v) in rm.iter_mut().enumerate() {
                        let mut acc = c[ri][n][s].d(m) - c[ri][m][s].d(n);
                        for l in 0..4 {
                            acc += c[ri][m][l].value() * c[l][n][s].value() - c[ri][n][l].value() * c[l][m][s].value();
                        }
                        *v = acc;
                    }
                }
            }
        }
        Riemann { r }
    }

    /// max |R_{μ[νρσ]}| using the metric of ds².
    pub fn bianchi_defect(&self, g: &[[Scalar; 4]; 4]) -> f64 {
        let low = |mu: usize, n: usize, r: usize, s: usize| (0..4).map(|k| g[mu][k] * self.r[k][n][r][s]).sum::<Scalar>();
        let mut m: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        m = m.max((low(a, b, c, d) + low(a, c, d, b) + low(a, d, b, c)).norm());
                    }
                }
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.r.iter().flatten().flatten().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Standard scalar curvature g^{bd} R^a_{bad} of ds².
    pub fn scalar_standard(&self, ginv: &[[Scalar; 4]; 4]) -> Scalar {
        let mut s = zero();
        for b in 0..4 {
            for d in 0..4 {
                for a in 0..4 {
                    s += ginv[b][d] * self.r[a][b][a][d];
                }
            }
        }
        s
    }

    /// Tetrad components R_{abcd} (first index lowered with η).
    pub fn tetrad(&self, geo: &CoordGeometry) -> [[[[Scalar; 4]; 4]; 4]; 4] {
        let (l, e) = (&geo.l, &geo.e);
        let mut t = self.r;
        // contract each slot in turn
        let mut next = [[[[zero(); 4]; 4]; 4]; 4];
        for a in 0..4 {
            for s in 0..4 {
                for m in 0..4 {
                    for n in 0..4 {
                        next[a][s][m][n] = (0..4).map(|r| l[a][r] * t[r][s][m][n]).sum();
                    }
                }
            }
        }
        t = next;
        for a in 0..4 {
            for b in 0..4 {
                for m in 0..4 {
                    for n in 0..4 {
                        next[a][b][m][n] = (0..4).map(|s| e[b][s] * t[a][s][m][n]).sum();
                    }
                }
            }
        }
        t = next;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for n in 0..4 {
                        next[a][b][c][n] = (0..4).map(|m| e[c][m] * t[a][b][m][n]).sum();
                    }
                }
            }
        }
        t = next;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        next[a][b][c][d] = (0..4).map(|n| e[d][n] * t[a][b][c][n]).sum();
                    }
                }
            }
        }
        // lower: R_abcd = η_ae R^e_bcd
        const ETA_PAIR: [usize; 4] = [1, 0, 3, 2];
        std::array::from_fn(|a| next[ETA_PAIR[a]])
    }
}

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Coefficients of a 2-form on (S11, S12, S22, D11, D12, D22) where
/// S11 = 2e⁴∧e², S12 = e¹∧e² + e³∧e⁴, S22 = 2e³∧e¹,
/// D11 = 2e⁴∧e¹, D12 = −e¹∧e² + e³∧e⁴, D22 = 2e³∧e².
fn decompose(w: &[Scalar; 6]) -> [Scalar; 6] {
    [-w[4] * 0.5, (w[0] + w[5]) * 0.5, -w[1] * 0.5, -w[2] * 0.5, (w[5] - w[0]) * 0.5, -w[3] * 0.5]
}

/// The spinor 2-forms R_AB and R_ȦḂ decomposed on the S/D bases,
/// as `(sd[k], asd[k])` for k = 11, 12, 22.
pub fn spinor_two_forms(rt: &[[[[Scalar; 4]; 4]; 4]; 4]) -> ([[Scalar; 6]; 3], [[Scalar; 6]; 3]) {
    let form = |a: usize, b: usize| -> [Scalar; 6] { std::array::from_fn(|k| rt[a][b][PAIRS[k].0][PAIRS[k].1]) };
    let lin = |x: [Scalar; 6], y: [Scalar; 6], cx: f64, cy: f64| -> [Scalar; 6] { std::array::from_fn(|k| x[k] * cx + y[k] * cy) };
    let (f12, f34) = (form(0, 1), form(2, 3));
    let sd = [
        decompose(&lin(form(3, 1), f12, -1.0, 0.0)),
        decompose(&lin(f12, f34, -0.5, -0.5)),
        decompose(&lin(form(2, 0), f12, -1.0, 0.0)),
    ];
    let asd = [
        decompose(&lin(form(3, 0), f12, -1.0, 0.0)),
        decompose(&lin(f12, f34, 0.5, -0.5)),
        decompose(&lin(form(2, 1), f12, -1.0, 0.0)),
    ];
    (sd, asd)
}

const S11: usize = 0;
const S12: usize = 1;
const S22: usize = 2;
const D11: usize = 3;
const D12: usize = 4;
const D22: usize = 5;

/// Reads curvature spinors from the decomposed 2-forms. In R_AB the S_CD
/// coefficient is −½C_ABCD (−C_AB12 for CD = 12), with R/24 added to
/// R_11[S22], R_22[S11] and −R/24 to R_12[S12]; the D_ĊḊ coefficients are
/// ½C_AB1̇1̇, C_AB1̇2̇, ½C_AB2̇2̇.
pub fn extract(sd: &[[Scalar; 6]; 3], asd: &[[Scalar; 6]; 3]) -> CurvatureData {
    let (a1, a2) = (sd[0][S22], sd[1][S12]);
    let c1122 = (a1 + a2) * (-2.0 / 3.0);
    let r = a1 * 24.0 + c1122 * 12.0;
    let c2222 = sd[2][S22] * -2.0;
    let c1222 = sd[1][S22] * -2.0;
    let c1112 = -sd[0][S12];
    let c1111 = sd[0][S11] * -2.0;
    let cup = [c2222 * 2.0, c1222 * 2.0, c1122 * 2.0, c1112 * 2.0, c1111 * 2.0];

    let (b1, b2) = (asd[0][D22], asd[1][D12]);
    let d1122 = (b1 + b2) * (-2.0 / 3.0);
    let weyl_asd = [asd[0][D11] * -2.0, -asd[0][D12], d1122, asd[1][D22] * -2.0, asd[2][D22] * -2.0];

    let ricci = std::array::from_fn(|k| [sd[k][D11] * 2.0, sd[k][D12], sd[k][D22] * 2.0]);
    CurvatureData { cup, weyl_asd, ricci, r }
}

/// Largest mismatch between redundant readings of the same spinor
/// components (a self-check of the decomposition on arbitrary tetrads).
pub fn extraction_defect(sd: &[[Scalar; 6]; 3], asd: &[[Scalar; 6]; 3]) -> f64 {
    let c = extract(sd, asd);
    let c1112 = c.cup[3] * 0.5;
    let c1222 = c.cup[1] * 0.5;
    let c1122 = c.cup[2] * 0.5;
    let d = &c.weyl_asd;
    [
        sd[1][S11] * -2.0 - c1112,
        -sd[2][S12] - c1222,
        sd[2][S11] * -2.0 + c.r / 12.0 - c1122,
        asd[1][D11] * -2.0 - d[1],
        -asd[2][D12] - d[3],
        asd[2][D11] * -2.0 + c.r / 12.0 - d[2],
    ]
    .iter()
    .map(|v| v.norm())
    .fold(0.0, f64::max)
}

/// Coordinate-tensor oracle: Christoffel → Riemann → tetrad components →
/// spinor decomposition.
pub fn oracle_curvature(geo: &CoordGeometry) -> CurvatureData {
    let rt = Riemann::new(geo).tetrad(geo);
    let (sd, asd) = spinor_two_forms(&rt);
    extract(&sd, &asd)
}

/// Max |C_{ABĊḊ}| and |R + 4Λ|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EinsteinResidual {
    pub max_ricci: f64,
    pub scalar_gap: f64,
}

pub fn einstein_residual(c: &CurvatureData, lambda: Scalar) -> EinsteinResidual {
    EinsteinResidual { max_ricci: c.max_ricci(), scalar_gap: (c.r + lambda * 4.0).norm() }
}

/// Oracle curvature straight from Plebański jets.
pub fn oracle_from_plebanski(j: &QJets) -> Result<CurvatureData> {
    Ok(oracle_curvature(&CoordGeometry::new(&j.coframe())?))
}
