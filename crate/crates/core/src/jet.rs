//! Truncated Taylor jets in four variables up to total order three.
//!
//! Coefficients are stored divided by α! so products are plain truncated
//! polynomial products. Every jet also records how many orders are known:
//! differentiating a jet loses the top order, and arithmetic keeps the
//! minimum of its operands.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Scalar = Complex64;

pub const NVARS: usize = 4;
pub const MAX_ORDER: usize = 3;
pub const NCOEFFS: usize = 35;

const DIV_GUARD: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Real,
    Complex,
}

impl Mode {
    pub fn join(self, other: Mode) -> Mode {
        if self == Mode::Complex || other == Mode::Complex {
            Mode::Complex
        } else {
            Mode::Real
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Real => write!(f, "real"),
            Mode::Complex => write!(f, "complex"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "real" => Ok(Mode::Real),
            "complex" => Ok(Mode::Complex),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

/// Exponents of a monomial in (q,p,x,y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub [u8; 4]);

impl MultiIndex {
    pub fn new(exps: [u8; 4]) -> Result<Self> {
        let order: usize = exps.iter().map(|&e| e as usize).sum();
        if order > MAX_ORDER {
            return Err(Error::OrderExceeded { requested: order, available: MAX_ORDER });
        }
        Ok(MultiIndex(exps))
    }

    /// Index of the first-order derivative in `var`.
    pub fn unit(var: usize) -> Self {
        let mut e = [0u8; 4];
        e[var] = 1;
        MultiIndex(e)
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&e| (1..=e as u32).product::<u32>() as f64).product()
    }

    /// All multi-indices of total order ≤ 3 in storage order.
    pub fn all() -> &'static [MultiIndex; NCOEFFS] {
        &tables().monos
    }
}

struct Tables {
    monos: [MultiIndex; NCOEFFS],
    degree: [u8; NCOEFFS],
    lookup: [[[[u8; 4]; 4]; 4]; 4],
    // (i, j, k) with i <= j and mono_i * mono_j = mono_k
    products: Vec<(u8, u8, u8)>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut monos = Vec::with_capacity(NCOEFFS);
        for deg in 0..=MAX_ORDER as u8 {
            for a in (0..=deg).rev() {
                for b in (0..=deg - a).rev() {
                    for c in (0..=deg - a - b).rev() {
                        let d = deg - a - b - c;
                        monos.push(MultiIndex([a, b, c, d]));
                    }
                }
            }
        }
        let monos: [MultiIndex; NCOEFFS] = monos.try_into().expect("35 monomials");
        let mut lookup = [[[[u8::MAX; 4]; 4]; 4]; 4];
        let mut degree = [0u8; NCOEFFS];
        for (k, m) in monos.iter().enumerate() {
            let [a, b, c, d] = m.0;
            lookup[a as usize][b as usize][c as usize][d as usize] = k as u8;
            degree[k] = m.order() as u8;
        }
        let mut products = Vec::new();
        for i in 0..NCOEFFS {
            for j in i..NCOEFFS {
                if degree[i] + degree[j] > MAX_ORDER as u8 {
                    continue;
                }
                let (mi, mj) = (monos[i].0, monos[j].0);
                let s = [mi[0] + mj[0], mi[1] + mj[1], mi[2] + mj[2], mi[3] + mj[3]];
                let k = lookup[s[0] as usize][s[1] as usize][s[2] as usize][s[3] as usize];
                products.push((i as u8, j as u8, k));
            }
        }
        Tables { monos, degree, lookup, products }
    })
}

fn slot(m: &MultiIndex) -> usize {
    let [a, b, c, d] = m.0;
    tables().lookup[a as usize][b as usize][c as usize][d as usize] as usize
}

/// Order-3 Taylor jet of a scalar function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    mode: Mode,
    order: u8,
    c: [Scalar; NCOEFFS],
}

fn realify(mode: Mode, z: Scalar) -> Scalar {
    match mode {
        Mode::Real => Scalar::new(z.re, 0.0),
        Mode::Complex => z,
    }
}

impl Jet {
    pub fn constant(mode: Mode, v: Scalar) -> Jet {
        let mut c = [Scalar::new(0.0, 0.0); NCOEFFS];
        c[0] = realify(mode, v);
        Jet { mode, order: MAX_ORDER as u8, c }
    }

    pub fn real(mode: Mode, v: f64) -> Jet {
        Jet::constant(mode, Scalar::new(v, 0.0))
    }

    pub fn zero(mode: Mode) -> Jet {
        Jet::real(mode, 0.0)
    }

    /// Jet of the coordinate function `var` (0..4 meaning q,p,x,y) at `point`.
    pub fn seed(mode: Mode, point: &[Scalar; 4], var: usize) -> Result<Jet> {
        if var >= NVARS {
            return Err(Error::VarOutOfRange(var));
        }
        let mut j = Jet::constant(mode, point[var]);
        j.c[slot(&MultiIndex::unit(var))] = Scalar::new(1.0, 0.0);
        Ok(j)
    }

    /// Seeds for all four coordinates.
    pub fn seeds(mode: Mode, point: &[Scalar; 4]) -> [Jet; 4] {
        [0, 1, 2, 3].map(|v| Jet::seed(mode, point, v).expect("var < 4"))
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Number of derivative orders known exactly.
    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn value(&self) -> Scalar {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[Scalar; NCOEFFS] {
        &self.c
    }

    /// Taylor coefficient ∂^α f / α!.
    pub fn coeff(&self, alpha: &MultiIndex) -> Scalar {
        self.c[slot(alpha)]
    }

    /// Raw partial derivative ∂^α f.
    pub fn partial(&self, alpha: &MultiIndex) -> Result<Scalar> {
        let n = alpha.order();
        if n > self.order() {
            return Err(Error::OrderExceeded { requested: n, available: self.order() });
        }
        Ok(self.c[slot(alpha)] * alpha.factorial())
    }

    /// First derivative ∂f/∂(var) at the point.
    pub fn d(&self, var: usize) -> Scalar {
        self.c[slot(&MultiIndex::unit(var))]
    }

    /// Jet of ∂f/∂(var); one order of accuracy is lost.
    pub fn deriv(&self, var: usize) -> Jet {
        let t = tables();
        let mut c = [Scalar::new(0.0, 0.0); NCOEFFS];
        let new_order = self.order.saturating_sub(1);
        for (k, m) in t.monos.iter().enumerate() {
            if t.degree[k] as usize >= MAX_ORDER {
                continue;
            }
            let mut up = m.0;
            up[var] += 1;
            let src = t.lookup[up[0] as usize][up[1] as usize][up[2] as usize][up[3] as usize];
            c[k] = self.c[src as usize] * (up[var] as f64);
        }
        let mut out = Jet { mode: self.mode, order: new_order, c };
        out.truncate();
        out
    }

    fn truncate(&mut self) {
        let t = tables();
        for k in 0..NCOEFFS {
            if t.degree[k] > self.order {
                self.c[k] = Scalar::new(0.0, 0.0);
            }
        }
    }

    fn binary_meta(&self, other: &Jet) -> (Mode, u8) {
        (self.mode.join(other.mode), self.order.min(other.order))
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let (mode, order) = self.binary_meta(other);
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(other.c.iter()) {
            *a += *b;
        }
        let mut j = Jet { mode, order, c };
        j.truncate();
        j
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let (mode, order) = self.binary_meta(other);
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(other.c.iter()) {
            *a -= *b;
        }
        let mut j = Jet { mode, order, c };
        j.truncate();
        j
    }

    pub fn neg(&self) -> Jet {
        let mut j = self.clone();
        for a in j.c.iter_mut() {
            *a = -*a;
        }
        j
    }

    pub fn scale(&self, s: Scalar) -> Jet {
        let mode = if s.im != 0.0 { Mode::Complex } else { self.mode };
        let mut j = self.clone();
        j.mode = mode;
        for a in j.c.iter_mut() {
            *a *= s;
        }
        j
    }

    pub fn add_scalar(&self, s: Scalar) -> Jet {
        let mut j = self.clone();
        if s.im != 0.0 {
            j.mode = Mode::Complex;
        }
        j.c[0] += s;
        j
    }

    /// Truncated product. Each unordered pair of slots contributes
    /// `a_i b_j + a_j b_i`, so `a.mul(b) == b.mul(a)` bit for bit.
    pub fn mul(&self, other: &Jet) -> Jet {
        let (mode, order) = self.binary_meta(other);
        let mut c = [Scalar::new(0.0, 0.0); NCOEFFS];
        for &(i, j, k) in &tables().products {
            let (i, j, k) = (i as usize, j as usize, k as usize);
            if i == j {
                c[k] += self.c[i] * other.c[i];
            } else {
                c[k] += self.c[i] * other.c[j] + self.c[j] * other.c[i];
            }
        }
        let mut j = Jet { mode, order, c };
        j.truncate();
        j
    }

    /// f(self) from [f(a), f'(a), f''(a)/2, f'''(a)/6] at a = value.
    fn compose(&self, taylor: [Scalar; 4]) -> Jet {
        let mut h = self.clone();
        h.c[0] = Scalar::new(0.0, 0.0);
        let h2 = Jet::mul(&h, &h);
        let h3 = Jet::mul(&h2, &h);
        let mut out = Jet::constant(self.mode, taylor[0]);
        out.order = self.order;
        for (k, hk) in [(1usize, &h), (2, &h2), (3, &h3)] {
            for (o, v) in out.c.iter_mut().zip(hk.c.iter()) {
                *o += taylor[k] * *v;
            }
        }
        for v in out.c.iter_mut() {
            *v = realify(self.mode, *v);
        }
        out.truncate();
        out
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = self.value();
        if a.norm() <= DIV_GUARD {
            return Err(Error::DivisionNearZero { span: None });
        }
        let r = a.inv();
        Ok(self.compose([r, -r * r, r * r * r, -r * r * r * r]))
    }

    pub fn div(&self, other: &Jet) -> Result<Jet> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut base = self.clone();
        let mut acc = Jet::real(self.mode, 1.0);
        acc.order = self.order;
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = Jet::mul(&base, &base);
            }
        }
        Ok(acc)
    }

    pub fn exp(&self) -> Jet {
        let a = self.value();
        let e = match self.mode {
            Mode::Real => Scalar::new(a.re.exp(), 0.0),
            Mode::Complex => a.exp(),
        };
        self.compose([e, e, e / 2.0, e / 6.0])
    }

    pub fn ln(&self) -> Result<Jet> {
        let a = self.value();
        if a.norm() <= DIV_GUARD {
            return Err(Error::LogOfZero { span: None });
        }
        let l = match self.mode {
            Mode::Real => {
                if a.re < 0.0 {
                    return Err(Error::LogOfNegative { span: None });
                }
                Scalar::new(a.re.ln(), 0.0)
            }
            Mode::Complex => a.ln(),
        };
        let r = a.inv();
        Ok(self.compose([l, r, -r * r / 2.0, r * r * r / 3.0]))
    }

    pub fn sin(&self) -> Jet {
        let a = self.value();
        let (s, c) = match self.mode {
            Mode::Real => (Scalar::new(a.re.sin(), 0.0), Scalar::new(a.re.cos(), 0.0)),
            Mode::Complex => (a.sin(), a.cos()),
        };
        self.compose([s, c, -s / 2.0, -c / 6.0])
    }

    pub fn cos(&self) -> Jet {
        let a = self.value();
        let (s, c) = match self.mode {
            Mode::Real => (Scalar::new(a.re.sin(), 0.0), Scalar::new(a.re.cos(), 0.0)),
            Mode::Complex => (a.sin(), a.cos()),
        };
        self.compose([c, -s, -c / 2.0, s / 6.0])
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Elementary operation tags for [`jet_apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    PowInt(i32),
    Exp,
    Ln,
    Sin,
    Cos,
}

/// Applies one elementary operation; binary ops read `args[0]` and `args[1]`.
pub fn jet_apply(op: JetOp, args: &[&Jet]) -> Result<Jet> {
    let a = args[0];
    let b = || args.get(1).copied().expect("binary op needs two arguments");
    Ok(match op {
        JetOp::Add => a.add(b()),
        JetOp::Sub => a.sub(b()),
        JetOp::Mul => a.mul(b()),
        JetOp::Div => a.div(b())?,
        JetOp::Neg => a.neg(),
        JetOp::PowInt(n) => a.powi(n)?,
        JetOp::Exp => a.exp(),
        JetOp::Ln => a.ln()?,
        JetOp::Sin => a.sin(),
        JetOp::Cos => a.cos(),
    })
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                Jet::$m(self, rhs)
            }
        }
    };
}

// Operators are provided on references only, so method calls like
// `a.mul(&b)` always resolve to the borrowing inherent methods.
forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet::neg(self)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(Scalar::new(rhs, 0.0))
    }
}

fn stencil(order: u8) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(1, 0.5), (-1, -0.5)],
        2 => &[(1, 1.0), (0, -2.0), (-1, 1.0)],
        _ => &[(2, 0.5), (1, -1.0), (-1, 1.0), (-2, -0.5)],
    }
}

fn central_difference<F>(f: &F, point: &[Scalar; 4], alpha: &MultiIndex, step: f64) -> Result<Scalar>
where
    F: Fn(&[Scalar; 4]) -> Result<Scalar>,
{
    let sts: Vec<&[(i32, f64)]> = alpha.0.iter().map(|&e| stencil(e)).collect();
    let mut acc = Scalar::new(0.0, 0.0);
    for &(o0, w0) in sts[0] {
        for &(o1, w1) in sts[1] {
            for &(o2, w2) in sts[2] {
                for &(o3, w3) in sts[3] {
                    let mut p = *point;
                    p[0] += o0 as f64 * step;
                    p[1] += o1 as f64 * step;
                    p[2] += o2 as f64 * step;
                    p[3] += o3 as f64 * step;
                    acc += f(&p)? * (w0 * w1 * w2 * w3);
                }
            }
        }
    }
    Ok(acc / step.powi(alpha.order() as i32))
}

/// Step actually used for a partial of total order `n` given the base step.
pub fn fd_step(h: f64, n: usize) -> f64 {
    h * 10f64.powi(n as i32 - 1)
}

/// Richardson-extrapolated central-difference estimate of ∂^α f.
pub fn finite_difference<F>(f: &F, point: &[Scalar; 4], alpha: &MultiIndex, h: f64) -> Result<Scalar>
where
    F: Fn(&[Scalar; 4]) -> Result<Scalar>,
{
    if alpha.order() == 0 {
        return f(point);
    }
    let s = fd_step(h, alpha.order());
    let d1 = central_difference(f, point, alpha, s)?;
    let d2 = central_difference(f, point, alpha, s / 2.0)?;
    let d4 = central_difference(f, point, alpha, s / 4.0)?;
    // errors are even in the step: eliminate s² then s⁴
    let r1 = (d2 * 4.0 - d1) / 3.0;
    let r2 = (d4 * 4.0 - d2) / 3.0;
    Ok((r2 * 16.0 - r1) / 15.0)
}

/// Rejects points whose Taylor jet disagrees with direct evaluation at
/// distance `margin` along any axis.
pub fn check_margin<F>(f: &F, jet: &Jet, point: &[Scalar; 4], margin: f64) -> Result<()>
where
    F: Fn(&[Scalar; 4]) -> Result<Scalar>,
{
    for var in 0..NVARS {
        let coeffs: Vec<Scalar> = (0..=jet.order())
            .map(|k| {
                let mut e = [0u8; 4];
                e[var] = k as u8;
                jet.coeff(&MultiIndex(e))
            })
            .collect();
        for sign in [1.0, -1.0] {
            let d = sign * margin;
            let mut p = *point;
            p[var] += d;
            let direct = f(&p).map_err(|e| if e.is_singular() { Error::SingularSampling } else { e })?;
            let mut taylor = Scalar::new(0.0, 0.0);
            let mut size = direct.norm();
            for (k, c) in coeffs.iter().enumerate() {
                taylor += *c * d.powi(k as i32);
                size += c.norm() * margin.powi(k as i32);
            }
            if !(direct - taylor).norm().is_finite() || (direct - taylor).norm() > 1e-2 * size {
                return Err(Error::SingularSampling);
            }
        }
    }
    Ok(())
}

/// Relative error between the jet partial ∂^α f and its finite-difference
/// estimate; the denominator is max(|exact|, 1).
pub fn finite_diff_check<F>(f: &F, point: &[Scalar; 4], alpha: &MultiIndex, h: f64) -> Result<f64>
where
    F: Fn(&[Scalar; 4]) -> Result<Jet>,
{
    let jet = f(point)?;
    let exact = jet.partial(alpha)?;
    let value = |p: &[Scalar; 4]| f(p).map(|j| j.value());
    check_margin(&value, &jet, point, 10.0 * fd_step(h, alpha.order().max(1)))?;
    let approx = finite_difference(&value, point, alpha, h)?;
    Ok((approx - exact).norm() / exact.norm().max(1.0))
}
