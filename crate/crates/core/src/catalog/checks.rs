//! Named verification passes over analysed sample points.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::killing::{killing_check, master_residuals, KILLING_TOL};
use super::{MetricInstance, PointAnalysis};
use crate::classify::{Duality, Expansion, OpticsClass};
use crate::congruence::{type3_system_residual, CongruenceTolerance};
use crate::curvature::einstein_residual;
use crate::{Error, Result, Scalar};

/// Curvature-level tolerance for the Einstein and self-duality checks.
pub const CURVATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Congruences,
    Einstein,
    #[serde(rename = "selfdual")]
    SelfDual,
    Killing,
    Master,
    Type3,
}

impl CheckKind {
    pub const ALL: [CheckKind; 6] =
        [CheckKind::Congruences, CheckKind::Einstein, CheckKind::SelfDual, CheckKind::Killing, CheckKind::Master, CheckKind::Type3];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Congruences => "congruences",
            CheckKind::Einstein => "einstein",
            CheckKind::SelfDual => "selfdual",
            CheckKind::Killing => "killing",
            CheckKind::Master => "master",
            CheckKind::Type3 => "type3",
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Unsupported(format!("unknown check '{s}'")))
    }
}

/// One named quantity inside a check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: String,
    /// Worst value over the points, already divided by its scale.
    pub value: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub kind: CheckKind,
    pub passed: bool,
    /// Largest item value.
    pub worst: f64,
    pub items: Vec<CheckItem>,
}

impl CheckResult {
    fn from_items(kind: CheckKind, items: Vec<CheckItem>) -> Self {
        let passed = !items.is_empty() && items.iter().all(|i| i.passed);
        let worst = items.iter().map(|i| i.value).fold(0.0, f64::max);
        CheckResult { kind, passed, worst, items }
    }
}

fn item(name: impl Into<String>, value: f64, passed: bool) -> CheckItem {
    CheckItem { name: name.into(), value, passed, note: None }
}

fn failing(name: &str, note: String) -> CheckItem {
    CheckItem { name: name.into(), value: f64::INFINITY, passed: false, note: Some(note) }
}

fn optics_symbol(c: OpticsClass) -> &'static str {
    match c {
        OpticsClass::MinusMinus => "--",
        OpticsClass::MinusPlus => "-+",
        OpticsClass::PlusMinus => "+-",
        OpticsClass::PlusPlus => "++",
    }
}

/// Runs one check over already analysed points. A check whose data the
/// instance does not declare fails with a note rather than passing vacuously.
pub fn run_check(inst: &MetricInstance, kind: CheckKind, analyses: &[PointAnalysis]) -> Result<CheckResult> {
    if analyses.is_empty() {
        return Err(Error::SamplingFailed);
    }
    let items = match kind {
        CheckKind::Congruences => congruence_items(inst, analyses),
        CheckKind::Einstein => {
            let v = analyses
                .iter()
                .map(|a| {
                    let c = &a.curvature;
                    // without a declared Λ only the traceless Ricci part is tested
                    let lambda = inst.lambda.unwrap_or(-c.r / 4.0);
                    let e = einstein_residual(c, lambda);
                    e.max_ricci.max(e.scalar_gap) / (1.0 + c.max_abs())
                })
                .fold(0.0, f64::max);
            let mut it = item("einstein", v, v < CURVATURE_TOL);
            if inst.lambda.is_none() {
                it.note = Some("no cosmological constant declared; R only required constant".into());
                let rs: Vec<Scalar> = analyses.iter().map(|a| a.curvature.r).collect();
                let spread = rs.iter().map(|r| (r - rs[0]).norm()).fold(0.0, f64::max);
                let scale = 1.0 + rs.iter().map(|r| r.norm()).fold(0.0, f64::max);
                it.passed &= spread / scale < CURVATURE_TOL;
                it.value = it.value.max(spread / scale);
            }
            vec![it]
        }
        CheckKind::SelfDual => {
            let v = analyses.iter().map(|a| a.curvature.max_asd() / (1.0 + a.curvature.max_abs())).fold(0.0, f64::max);
            vec![item("asd-weyl", v, v < CURVATURE_TOL)]
        }
        CheckKind::Killing => {
            if inst.killing.is_empty() {
                vec![failing("killing", "no Killing vectors declared".into())]
            } else {
                let points: Vec<[Scalar; 4]> = analyses.iter().map(|a| a.point).collect();
                killing_check(inst, &points)?
                    .into_iter()
                    .map(|r| {
                        let mut it = item(r.label.clone(), r.max_relative, r.passed);
                        if let Some(e) = r.expected_asd {
                            it.note = Some(format!(
                                "ASD congruence expected {}, observed {}",
                                exp_word(Some(e)),
                                exp_word(r.observed_asd)
                            ));
                        }
                        it
                    })
                    .collect()
            }
        }
        CheckKind::Master => match &inst.master {
            None => vec![failing("master", "no master-equation data declared".into())],
            Some(m) => {
                let mut worst: Vec<(String, f64, bool)> = vec![];
                for a in analyses {
                    for (i, r) in master_residuals(m, &a.point)?.into_iter().enumerate() {
                        if worst.len() <= i {
                            worst.push((r.label.clone(), 0.0, true));
                        }
                        worst[i].1 = worst[i].1.max(r.relative());
                        worst[i].2 &= r.passed();
                    }
                }
                worst.into_iter().map(|(n, v, ok)| item(n, v, ok)).collect()
            }
        },
        CheckKind::Type3 => match &inst.type3 {
            None => vec![failing("type3", "no type-[III] system data declared".into())],
            Some(t) => {
                let mut worst = [0.0f64; 6];
                for a in analyses {
                    let r = type3_system_residual(t.m0, &t.n, &t.p, &t.omega, &a.point)?;
                    for (w, v) in worst.iter_mut().zip(r) {
                        *w = w.max(v.norm());
                    }
                }
                worst.iter().enumerate().map(|(i, &v)| item(format!("eq{}", i + 1), v, v < KILLING_TOL)).collect()
            }
        },
    };
    Ok(CheckResult::from_items(kind, items))
}

fn exp_word(e: Option<Expansion>) -> &'static str {
    match e {
        Some(Expansion::Nonexpanding) => "nonexpanding",
        Some(Expansion::Expanding) => "expanding",
        None => "none",
    }
}

fn congruence_items(inst: &MetricInstance, analyses: &[PointAnalysis]) -> Vec<CheckItem> {
    if inst.congruences.is_empty() {
        return vec![failing("congruences", "no congruences declared".into())];
    }
    let tol = CongruenceTolerance::default();
    let mut items = vec![];
    for (ci, c) in inst.congruences.iter().enumerate() {
        let mut worst = 0.0f64;
        let mut ok = true;
        let mut notes = vec![];
        for a in analyses {
            let o = &a.congruences[ci];
            match &o.report {
                Some(r) => {
                    worst = worst.max(r.relative_residual());
                    if !o.verified {
                        ok = false;
                    }
                    if let Some(e) = c.expected {
                        if Expansion::from_nonexpanding(r.nonexpanding) != e {
                            ok = false;
                            if notes.is_empty() {
                                notes.push(format!("expected {}", exp_word(Some(e))));
                            }
                        }
                    }
                }
                None => {
                    ok = false;
                    worst = f64::INFINITY;
                }
            }
        }
        let side = if c.duality == Duality::SD { "sd" } else { "asd" };
        let mut it = item(format!("{side} {}", c.label), worst, ok && worst <= tol.residual);
        if !notes.is_empty() {
            it.note = Some(notes.join("; "));
        }
        items.push(it);
    }
    // intersections: (n,n) pairs are "--"; declared optics, if claimed, must agree
    let claimed = inst.claimed.as_ref().map(|c| c.optics.clone()).unwrap_or_default();
    let mut pair_ok = true;
    let mut pair_notes = vec![];
    let mut any_pair = false;
    for a in analyses {
        let sd: Vec<_> = a.congruences.iter().filter(|c| c.duality == Duality::SD && c.verified).collect();
        let asd: Vec<_> = a.congruences.iter().filter(|c| c.duality == Duality::ASD && c.verified).collect();
        for (k, x) in a.intersections.iter().enumerate() {
            any_pair = true;
            let nn = sd[x.sd].expansion() == Some(Expansion::Nonexpanding)
                && asd[x.asd].expansion() == Some(Expansion::Nonexpanding);
            if nn && x.optics.class != OpticsClass::MinusMinus {
                pair_ok = false;
                pair_notes.push(format!("({},{}) nonexpanding pair not --", sd[x.sd].label, asd[x.asd].label));
            }
            if let Some(&want) = claimed.get(k) {
                if want != x.optics.class {
                    pair_ok = false;
                    pair_notes.push(format!(
                        "({},{}) is {}, claimed {}",
                        sd[x.sd].label,
                        asd[x.asd].label,
                        optics_symbol(x.optics.class),
                        optics_symbol(want)
                    ));
                }
            }
        }
    }
    if any_pair {
        pair_notes.dedup();
        let mut it = item("intersections", if pair_ok { 0.0 } else { 1.0 }, pair_ok);
        if !pair_notes.is_empty() {
            it.note = Some(pair_notes.join("; "));
        }
        items.push(it);
    }
    items
}
