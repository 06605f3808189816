//! Petrov-Penrose classification of a totally symmetric 4-spinor from its
//! coefficients C^(1..5), and the geometry symbol
//! `{[SD]^{…} ⊗ [ASD]^{…}, [k…]}`.
//!
//! The quartic is P(z) = C^(1) + 4C^(2)z + 6C^(3)z² + 4C^(4)z³ + C^(5)z⁴; a
//! vanishing leading coefficient puts roots at z = ∞.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::jet::{Mode, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PetrovLabel {
    I,
    II,
    D,
    III,
    N,
    O,
    Ir,
    Irc,
    Ic,
    IIr,
    IIrc,
    Dr,
    Dc,
    IIIr,
    Nr,
    Or,
}

impl PetrovLabel {
    pub fn as_str(self) -> &'static str {
        use PetrovLabel::*;
        match self {
            I => "I",
            II => "II",
            D => "D",
            III => "III",
            N => "N",
            O => "O",
            Ir => "I_r",
            Irc => "I_rc",
            Ic => "I_c",
            IIr => "II_r",
            IIrc => "II_rc",
            Dr => "D_r",
            Dc => "D_c",
            IIIr => "III_r",
            Nr => "N_r",
            Or => "O_r",
        }
    }

    /// The complex type a real label refines.
    pub fn complexify(self) -> PetrovLabel {
        use PetrovLabel::*;
        match self {
            Ir | Irc | Ic => I,
            IIr | IIrc => II,
            Dr | Dc => D,
            IIIr => III,
            Nr => N,
            Or => O,
            other => other,
        }
    }

    /// Rank in the degeneration order I < II < D < III < N < O (D and III
    /// are not comparable in general; the rank is only used as "at least as
    /// special as").
    pub fn speciality(self) -> u8 {
        use PetrovLabel::*;
        match self.complexify() {
            I => 0,
            II => 1,
            D => 2,
            III => 3,
            N => 4,
            _ => 5,
        }
    }

    pub fn is_degenerate(self) -> bool {
        matches!(self.complexify(), PetrovLabel::II | PetrovLabel::D | PetrovLabel::III | PetrovLabel::N)
    }
}

impl fmt::Display for PetrovLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PetrovLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        use PetrovLabel::*;
        Ok(match s {
            "I" => I,
            "II" => II,
            "D" => D,
            "III" => III,
            "N" => N,
            "O" => O,
            "I_r" => Ir,
            "I_rc" => Irc,
            "I_c" => Ic,
            "II_r" => IIr,
            "II_rc" => IIrc,
            "D_r" => Dr,
            "D_c" => Dc,
            "III_r" => IIIr,
            "N_r" => Nr,
            "O_r" => Or,
            _ => return Err(Error::Syntax { offset: 0, message: format!("unknown Petrov label `{s}`") }),
        })
    }
}

impl Serialize for PetrovLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// One principal spinor: z value (None = ∞), multiplicity, realness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootCluster {
    #[serde(serialize_with = "ser_opt")]
    pub value: Option<Scalar>,
    pub multiplicity: u8,
    pub real: bool,
}

fn ser_opt<S: Serializer>(v: &Option<Scalar>, s: S) -> std::result::Result<S::Ok, S::Error> {
    v.map(|c| [c.re, c.im]).serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PetrovType {
    pub label: PetrovLabel,
    pub roots: Vec<RootCluster>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative zero test for coefficients and for polynomial values at
    /// candidate multiple roots.
    pub zero: f64,
    /// Root clustering distance, relative to 1 + max|r|.
    pub cluster: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { zero: 1e-8, cluster: 1e-6 }
    }
}

fn czero() -> Scalar {
    Scalar::new(0.0, 0.0)
}

fn max_abs(c: &[Scalar]) -> f64 {
    c.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// δ = 2C^(2)C^(2) − 3C^(1)C^(3).
pub fn type_delta(cup: &[Scalar; 5]) -> Scalar {
    cup[1] * cup[1] * 2.0 - cup[0] * cup[2] * 3.0
}

// ------------------------------------------------------------------ polynomials

/// Ascending coefficients of P.
pub fn quartic_coeffs(cup: &[Scalar; 5]) -> [Scalar; 5] {
    [cup[0], cup[1] * 4.0, cup[2] * 6.0, cup[3] * 4.0, cup[4]]
}

fn horner(c: &[Scalar], z: Scalar) -> Scalar {
    c.iter().rev().fold(czero(), |acc, &a| acc * z + a)
}

fn eval_scale(c: &[Scalar], z: Scalar) -> f64 {
    let r = z.norm();
    c.iter().rev().fold(0.0, |acc, a| acc * r + a.norm())
}

fn derivative(c: &[Scalar]) -> Vec<Scalar> {
    c.iter().enumerate().skip(1).map(|(i, &a)| a * i as f64).collect()
}

fn newton(c: &[Scalar], mut z: Scalar, iters: usize) -> Scalar {
    let d = derivative(c);
    for _ in 0..iters {
        let dv = horner(&d, z);
        if dv.norm() == 0.0 {
            break;
        }
        let pz = horner(c, z);
        let step = pz / dv;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        // near a multiple root the full step can overshoot; only accept
        // steps that reduce |P|
        if horner(c, z - step).norm() >= pz.norm() {
            break;
        }
        z -= step;
        if step.norm() <= 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// All roots of a polynomial with nonzero leading coefficient (ascending
/// order), by closed forms up to degree 2 and Aberth-Ehrlich iteration above.
pub fn poly_roots(c: &[Scalar]) -> Vec<Scalar> {
    let n = c.len() - 1;
    match n {
        0 => vec![],
        1 => vec![-c[0] / c[1]],
        2 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = (b * b - a * cc * 4.0).sqrt();
            // pick the sign that avoids cancellation
            let s = if (b.conj() * disc).re >= 0.0 { b + disc } else { b - disc };
            if s.norm() == 0.0 {
                return vec![czero(), czero()];
            }
            let r1 = -s / (a * 2.0);
            let r2 = -(cc * 2.0) / s;
            vec![r1, r2]
        }
        _ => {
            let lead = c[n];
            let bound = 1.0 + c[..n].iter().map(|a| (a / lead).norm()).fold(0.0, f64::max);
            let mut z: Vec<Scalar> =
                (0..n).map(|k| Scalar::from_polar(bound * 0.5 + 0.1, 0.4 + std::f64::consts::TAU * k as f64 / n as f64)).collect();
            let d = derivative(c);
            for _ in 0..800 {
                let mut moved: f64 = 0.0;
                for k in 0..n {
                    let p = horner(c, z[k]);
                    if p.norm() == 0.0 {
                        continue;
                    }
                    let w = p / horner(&d, z[k]);
                    let s: Scalar = (0..n).filter(|&j| j != k).map(|j| Scalar::new(1.0, 0.0) / (z[k] - z[j])).sum();
                    let corr = w / (Scalar::new(1.0, 0.0) - w * s);
                    if corr.re.is_finite() && corr.im.is_finite() {
                        z[k] -= corr;
                        moved = moved.max(corr.norm() / (1.0 + z[k].norm()));
                    }
                }
                if moved < 1e-16 {
                    break;
                }
            }
            z
        }
    }
}

fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(i: usize, n: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(i);
            rec(i + 1, n, cur, out);
            cur[b].pop();
        }
        cur.push(vec![i]);
        rec(i + 1, n, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    rec(0, n, &mut Vec::new(), &mut out);
    out
}

/// Centre and validation ratio of a candidate k-fold root: the centre is a
/// simple root of P^(k−1) near the block mean; the ratio is the worst
/// |P^(j)(centre)| / (tol · scale_j) over j < k−1 (≤ 1 means "is k-fold").
fn block_fit(c: &[Scalar], roots: &[Scalar], block: &[usize], tol: f64) -> (Scalar, f64) {
    let k = block.len();
    let mean = block.iter().map(|&i| roots[i]).sum::<Scalar>() / k as f64;
    if k == 1 {
        return (roots[block[0]], 0.0);
    }
    let mut ders = vec![c.to_vec()];
    for _ in 1..k {
        let next = derivative(ders.last().unwrap());
        ders.push(next);
    }
    let centre = newton(&ders[k - 1], mean, 60);
    // a k-fold root perturbed at the zero tolerance spreads by ~tol^(1/k);
    // blocks wider than that, or whose centre escaped, are not candidates
    let reach = 10.0 * tol.powf(1.0 / k as f64) * (1.0 + mean.norm());
    let spread = block.iter().map(|&i| (roots[i] - mean).norm()).fold(0.0, f64::max);
    if spread > reach || (centre - mean).norm() > spread + reach * 1e-3 {
        return (centre, f64::INFINITY);
    }
    let mut ratio: f64 = 0.0;
    for d in ders.iter().take(k - 1) {
        let s = eval_scale(d, centre).max(1e-300);
        ratio = ratio.max(horner(d, centre).norm() / (tol * s));
    }
    (centre, ratio)
}

/// Root pattern of P. Roots are clustered into multiple roots; a block of
/// k roots is accepted as a k-fold root when P, …, P^(k−2) vanish (relative
/// `tol.zero`) at the simple root of P^(k−1) it contains. Any two remaining
/// roots closer than `tol.cluster·(1 + max|r|)` that do not validate, or any
/// decision within a factor 2 of its threshold, is `IllConditioned`.
pub fn quartic_root_structure(cup: &[Scalar; 5], tol: &Tolerances) -> Result<Vec<RootCluster>> {
    let a = quartic_coeffs(cup);
    let scale = max_abs(&a);
    if scale == 0.0 {
        return Ok(vec![]);
    }
    let a: Vec<Scalar> = a.iter().map(|v| v / scale).collect();
    let mut deg = 4;
    while deg > 0 && a[deg].norm() <= tol.zero {
        deg -= 1;
    }
    let at_inf = (4 - deg) as u8;
    let c = &a[..=deg];
    let roots: Vec<Scalar> = poly_roots(c).into_iter().map(|r| newton(c, r, 8)).collect();
    let mut clusters = Vec::new();
    if at_inf > 0 {
        clusters.push(RootCluster { value: None, multiplicity: at_inf, real: true });
    }
    if roots.is_empty() {
        return Ok(clusters);
    }

    // coarsest partition whose blocks all validate
    let mut scored = Vec::new();
    for part in set_partitions(roots.len()) {
        let fits: Vec<(Scalar, usize, f64)> = part
            .iter()
            .map(|block| {
                let (centre, ratio) = block_fit(c, &roots, block, tol.zero);
                (centre, block.len(), ratio)
            })
            .collect();
        let worst = fits.iter().map(|f| f.2).fold(0.0, f64::max);
        scored.push((part.len(), worst, fits));
    }
    let best_nb = scored.iter().filter(|s| s.1 <= 1.0).map(|s| s.0).min().ok_or(Error::IllConditioned)?;
    let pattern = |f: &[(Scalar, usize, f64)]| {
        let mut m: Vec<usize> = f.iter().map(|x| x.1).collect();
        m.sort();
        m
    };
    let winners: Vec<_> = scored.iter().filter(|s| s.0 == best_nb && s.1 <= 1.0).collect();
    let fits = &winners[0].2;
    let ambiguous = winners.iter().any(|w| pattern(&w.2) != pattern(fits))
        || winners[0].1 > 0.5
        || scored.iter().any(|s| s.0 < best_nb && s.1 <= 2.0);
    if ambiguous {
        return Err(Error::IllConditioned);
    }
    let fits: Vec<(Scalar, usize)> = fits.iter().map(|f| (f.0, f.1)).collect();
    let rmax = fits.iter().map(|f| f.0.norm()).fold(0.0, f64::max);
    let dtol = tol.cluster * (1.0 + rmax);
    for i in 0..fits.len() {
        for j in i + 1..fits.len() {
            if (fits[i].0 - fits[j].0).norm() <= 2.0 * dtol {
                return Err(Error::IllConditioned);
            }
        }
    }
    for (centre, k) in fits {
        let real = centre.im.abs() <= dtol;
        clusters.push(RootCluster { value: Some(centre), multiplicity: k as u8, real });
    }
    Ok(clusters)
}

fn label_from_multiplicities(roots: &[RootCluster]) -> PetrovLabel {
    let mut m: Vec<u8> = roots.iter().map(|r| r.multiplicity).collect();
    m.sort_unstable_by(|a, b| b.cmp(a));
    match m.as_slice() {
        [] => PetrovLabel::O,
        [4] => PetrovLabel::N,
        [3, 1] => PetrovLabel::III,
        [2, 2] => PetrovLabel::D,
        [2, 1, 1] => PetrovLabel::II,
        _ => PetrovLabel::I,
    }
}

fn real_label(roots: &[RootCluster]) -> Result<PetrovLabel> {
    use PetrovLabel::*;
    let c = label_from_multiplicities(roots);
    let nreal = |k: u8| roots.iter().filter(|r| r.multiplicity == k && r.real).count();
    let ncx = |k: u8| roots.iter().filter(|r| r.multiplicity == k && !r.real).count();
    Ok(match c {
        O => Or,
        N if nreal(4) == 1 => Nr,
        III if nreal(3) == 1 && nreal(1) == 1 => IIIr,
        D if nreal(2) == 2 => Dr,
        D if ncx(2) == 2 => Dc,
        II if nreal(2) == 1 && nreal(1) == 2 => IIr,
        II if nreal(2) == 1 && ncx(1) == 2 => IIrc,
        I if nreal(1) == 4 => Ir,
        I if nreal(1) == 2 && ncx(1) == 2 => Irc,
        I if ncx(1) == 4 => Ic,
        _ => return Err(Error::IllConditioned),
    })
}

/// Closed-condition classification, valid when C^(5) = C^(4) = 0.
/// Returns None when the input is not in the adapted form.
pub fn petrov_conditions(cup: &[Scalar; 5], tol: &Tolerances) -> Option<PetrovType> {
    let s = max_abs(cup);
    if s == 0.0 {
        return Some(PetrovType { label: PetrovLabel::O, roots: vec![] });
    }
    let z = |v: Scalar| v.norm() <= tol.zero * s;
    if !z(cup[4]) || !z(cup[3]) {
        return None;
    }
    let (c1, c2, c3) = (cup[0], cup[1], cup[2]);
    let inf = |m: u8| RootCluster { value: None, multiplicity: m, real: true };
    let fin = |v: Scalar, m: u8| RootCluster { value: Some(v), multiplicity: m, real: v.im == 0.0 };
    Some(if !z(c3) {
        let delta = type_delta(cup);
        if delta.norm() <= tol.zero * s * s {
            PetrovType { label: PetrovLabel::D, roots: vec![inf(2), fin(-c2 / (c3 * 3.0), 2)] }
        } else {
            let sq = (delta * 2.0).sqrt();
            let r1 = (-c2 * 2.0 + sq) / (c3 * 6.0);
            let r2 = (-c2 * 2.0 - sq) / (c3 * 6.0);
            PetrovType { label: PetrovLabel::II, roots: vec![inf(2), fin(r1, 1), fin(r2, 1)] }
        }
    } else if !z(c2) {
        PetrovType { label: PetrovLabel::III, roots: vec![inf(3), fin(-c1 / (c2 * 4.0), 1)] }
    } else if !z(c1) {
        PetrovType { label: PetrovLabel::N, roots: vec![inf(4)] }
    } else {
        PetrovType { label: PetrovLabel::O, roots: vec![] }
    })
}

/// Root-pattern classification (any input).
pub fn petrov_roots(cup: &[Scalar; 5], tol: &Tolerances) -> Result<PetrovType> {
    let roots = quartic_root_structure(cup, tol)?;
    Ok(PetrovType { label: label_from_multiplicities(&roots), roots })
}

/// Complex Petrov-Penrose type: closed conditions in the adapted case,
/// the root pattern otherwise.
pub fn petrov_complex(cup: &[Scalar; 5], tol: &Tolerances) -> Result<PetrovType> {
    match petrov_conditions(cup, tol) {
        Some(t) => Ok(t),
        None => petrov_roots(cup, tol),
    }
}

/// Neutral-signature type. In the adapted case the sign of δ separates
/// II_r (δ > 0) from II_rc (δ < 0); otherwise root realness decides.
pub fn petrov_real(cup: &[Scalar; 5], tol: &Tolerances) -> Result<PetrovType> {
    use PetrovLabel::*;
    if let Some(t) = petrov_conditions(cup, tol) {
        let label = match t.label {
            O => Or,
            N => Nr,
            III => IIIr,
            D => Dr,
            II => {
                if type_delta(cup).re > 0.0 {
                    IIr
                } else {
                    IIrc
                }
            }
            _ => unreachable!("adapted input is algebraically special"),
        };
        let roots = t
            .roots
            .iter()
            .map(|r| RootCluster { real: r.value.is_none_or(|v| v.im.abs() <= tol.cluster * (1.0 + v.norm())), ..*r })
            .collect();
        return Ok(PetrovType { label, roots });
    }
    let roots = quartic_root_structure(cup, tol)?;
    Ok(PetrovType { label: real_label(&roots)?, roots })
}

pub fn petrov(cup: &[Scalar; 5], mode: Mode, tol: &Tolerances) -> Result<PetrovType> {
    match mode {
        Mode::Complex => petrov_complex(cup, tol),
        Mode::Real => petrov_real(cup, tol),
    }
}

/// Zeroes coefficients at or below an absolute threshold before
/// classification (the curvature-level zero test).
pub fn flush(cup: &[Scalar; 5], abs_tol: f64) -> [Scalar; 5] {
    cup.map(|c| if c.norm() <= abs_tol { czero() } else { c })
}

/// Band where the closed-condition and root-pattern paths use thresholds
/// that are not equivalent: the δ test and the multiple-root validation are
/// both reduced to ratios against their own thresholds, and a point is
/// inside the band when either ratio lies within a factor 100 of 1, or when
/// the two ratios fall on opposite sides of 1. Points where a coefficient
/// sits within a factor 100 of the zero threshold are also inside.
pub fn in_ill_conditioned_band(cup: &[Scalar; 5], tol: &Tolerances) -> bool {
    let s = max_abs(cup);
    if s == 0.0 {
        return false;
    }
    let near = |r: f64| r > 0.01 && r < 100.0;
    if cup.iter().any(|c| near(c.norm() / (tol.zero * s))) {
        return true;
    }
    let zero = |c: Scalar| c.norm() <= tol.zero * s;
    if zero(cup[2]) {
        return false;
    }
    let delta_ratio = type_delta(cup).norm() / (tol.zero * s * s);
    // same quantity as seen by the root path: P at the double-root candidate
    let a = quartic_coeffs(cup);
    let a: Vec<Scalar> = a.iter().map(|v| v / max_abs(&a)).collect();
    let centre = -a[1] / (a[2] * 2.0);
    let root_ratio = horner(&a[..3], centre).norm() / (tol.zero * eval_scale(&a[..3], centre).max(1e-300));
    near(delta_ratio) || near(root_ratio) || ((delta_ratio <= 1.0) != (root_ratio <= 1.0))
}

// ------------------------------------------------------------------ symbols

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Duality {
    SD,
    ASD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpticsClass {
    /// θ = 0, ϱ = 0
    MinusMinus,
    /// θ = 0, ϱ ≠ 0
    MinusPlus,
    /// θ ≠ 0, ϱ = 0
    PlusMinus,
    PlusPlus,
}

impl OpticsClass {
    pub fn from_flags(theta_nonzero: bool, rho_nonzero: bool) -> Self {
        match (theta_nonzero, rho_nonzero) {
            (false, false) => OpticsClass::MinusMinus,
            (false, true) => OpticsClass::MinusPlus,
            (true, false) => OpticsClass::PlusMinus,
            (true, true) => OpticsClass::PlusPlus,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OpticsClass::MinusMinus => "--",
            OpticsClass::MinusPlus => "-+",
            OpticsClass::PlusMinus => "+-",
            OpticsClass::PlusPlus => "++",
        }
    }
}

impl FromStr for OpticsClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "--" => OpticsClass::MinusMinus,
            "-+" => OpticsClass::MinusPlus,
            "+-" => OpticsClass::PlusMinus,
            "++" => OpticsClass::PlusPlus,
            other => return Err(Error::Syntax { offset: 0, message: format!("bad optics class `{other}`") }),
        })
    }
}

impl fmt::Display for OpticsClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Expansion flag of one congruence, rendered `n` or `e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Expansion {
    Nonexpanding,
    Expanding,
}

impl Expansion {
    pub fn from_nonexpanding(ne: bool) -> Self {
        if ne {
            Expansion::Nonexpanding
        } else {
            Expansion::Expanding
        }
    }

    pub fn letter(self) -> char {
        match self {
            Expansion::Nonexpanding => 'n',
            Expansion::Expanding => 'e',
        }
    }
}

/// One intersection: SD congruence index, ASD congruence index, class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticsEntry {
    pub sd: usize,
    pub asd: usize,
    pub class: OpticsClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GeometrySymbol {
    pub sd: PetrovLabel,
    pub asd: PetrovLabel,
    pub sd_supers: Vec<Expansion>,
    pub asd_supers: Vec<Expansion>,
    /// Ordered (m,ṁ), (m,ṅ), (n,ṁ), (n,ṅ); empty when the block is dropped.
    pub optics: Vec<OpticsClass>,
}

fn supers(v: &[Expansion]) -> String {
    v.iter().map(|e| e.letter()).collect()
}

fn bracket(label: &str, sup: &str) -> String {
    match sup.len() {
        0 => format!("[{label}]"),
        _ => format!("[{label}]^{{{sup}}}"),
    }
}

impl fmt::Display for GeometrySymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = format!(
            "{} ⊗ {}",
            bracket(self.sd.as_str(), &supers(&self.sd_supers)),
            bracket(self.asd.as_str(), &supers(&self.asd_supers))
        );
        if self.optics.is_empty() {
            f.write_str(&body)
        } else {
            let o: Vec<&str> = self.optics.iter().map(|c| c.as_str()).collect();
            write!(f, "{{{body}, [{}]}}", o.join(","))
        }
    }
}

impl Serialize for GeometrySymbol {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Builds the symbol: optics sorted into canonical order, (n,n) pairs must
/// be `--`, and the optics block is dropped when every congruence is
/// nonexpanding or either side is type O.
pub fn assemble_symbol(
    sd: PetrovLabel,
    asd: PetrovLabel,
    sd_supers: &[Expansion],
    asd_supers: &[Expansion],
    optics: &[OpticsEntry],
) -> Result<GeometrySymbol> {
    let mut entries = optics.to_vec();
    entries.sort_by_key(|e| (e.sd, e.asd));
    for e in &entries {
        let both_n = sd_supers.get(e.sd) == Some(&Expansion::Nonexpanding)
            && asd_supers.get(e.asd) == Some(&Expansion::Nonexpanding);
        if both_n && e.class != OpticsClass::MinusMinus {
            return Err(Error::InconsistentOptics(e.class.as_str().to_string()));
        }
    }
    let all_n = sd_supers.iter().chain(asd_supers).all(|e| *e == Expansion::Nonexpanding);
    let any_o = sd.complexify() == PetrovLabel::O || asd.complexify() == PetrovLabel::O;
    let optics = if all_n || any_o { vec![] } else { entries.iter().map(|e| e.class).collect() };
    Ok(GeometrySymbol { sd, asd, sd_supers: sd_supers.to_vec(), asd_supers: asd_supers.to_vec(), optics })
}

// ------------------------------------------------------------------ claims

/// A label as written in a claim: a concrete type, `deg` (II, D, III or N)
/// or `any`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelPattern {
    Exact(PetrovLabel),
    Deg,
    Any,
}

impl LabelPattern {
    pub fn matches(self, label: PetrovLabel) -> bool {
        match self {
            LabelPattern::Any => true,
            LabelPattern::Deg => label.is_degenerate(),
            LabelPattern::Exact(l) => l == label || l == label.complexify(),
        }
    }
}

impl fmt::Display for LabelPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelPattern::Exact(l) => f.write_str(l.as_str()),
            LabelPattern::Deg => f.write_str("deg"),
            LabelPattern::Any => f.write_str("any"),
        }
    }
}

/// A claimed geometry symbol with optional patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolClaim {
    pub sd: LabelPattern,
    pub asd: LabelPattern,
    pub sd_supers: Vec<Expansion>,
    pub asd_supers: Vec<Expansion>,
    pub optics: Vec<OpticsClass>,
}

impl SymbolClaim {
    pub fn matches(&self, s: &GeometrySymbol) -> bool {
        self.sd.matches(s.sd)
            && self.asd.matches(s.asd)
            && self.sd_supers == s.sd_supers
            && self.asd_supers == s.asd_supers
            && self.optics == s.optics
    }
}

impl fmt::Display for SymbolClaim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = format!(
            "{} ⊗ {}",
            bracket(&self.sd.to_string(), &supers(&self.sd_supers)),
            bracket(&self.asd.to_string(), &supers(&self.asd_supers))
        );
        if self.optics.is_empty() {
            f.write_str(&body)
        } else {
            let o: Vec<&str> = self.optics.iter().map(|c| c.as_str()).collect();
            write!(f, "{{{body}, [{}]}}", o.join(","))
        }
    }
}

fn parse_side(s: &str) -> Result<(LabelPattern, Vec<Expansion>)> {
    let bad = || Error::Syntax { offset: 0, message: format!("bad symbol side `{s}`") };
    let s = s.trim();
    let close = s.find(']').ok_or_else(bad)?;
    let label = s.strip_prefix('[').ok_or_else(bad)?[..close - 1].trim();
    let pat = match label {
        "deg" => LabelPattern::Deg,
        "any" => LabelPattern::Any,
        l => LabelPattern::Exact(l.parse()?),
    };
    let rest = s[close + 1..].trim();
    let sup = if rest.is_empty() {
        ""
    } else {
        let r = rest.strip_prefix('^').ok_or_else(bad)?;
        r.trim_start_matches('{').trim_end_matches('}')
    };
    let supers = sup
        .chars()
        .map(|c| match c {
            'n' => Ok(Expansion::Nonexpanding),
            'e' => Ok(Expansion::Expanding),
            _ => Err(bad()),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((pat, supers))
}

impl FromStr for SymbolClaim {
    type Err = Error;
    fn from_str(src: &str) -> Result<Self> {
        let s = src.trim();
        let (body, optics) = if let Some(inner) = s.strip_prefix('{') {
            let inner = inner.strip_suffix('}').ok_or(Error::Syntax { offset: 0, message: "missing `}`".into() })?;
            let cut = inner.rfind(", [").ok_or(Error::Syntax { offset: 0, message: "missing optics block".into() })?;
            let block = inner[cut + 2..].trim().trim_start_matches('[').trim_end_matches(']');
            let optics = block.split(',').map(|c| c.parse()).collect::<Result<Vec<_>>>()?;
            (&inner[..cut], optics)
        } else {
            (s, vec![])
        };
        let (l, r) = body.split_once('⊗').ok_or(Error::Syntax { offset: 0, message: "missing ⊗".into() })?;
        let (sd, sd_supers) = parse_side(l)?;
        let (asd, asd_supers) = parse_side(r)?;
        Ok(SymbolClaim { sd, asd, sd_supers, asd_supers, optics })
    }
}
