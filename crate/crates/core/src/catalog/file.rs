//! Text metric definitions.
//!
//! ```text
//! mode = real
//! family = pkE-II
//! claim = "[II]^n ⊗ [D]^{nn}"
//!
//! [params]
//! Lambda = 2
//!
//! [functions]
//! Sigma = "exp(p)"
//! Omega = "q^2"
//!
//! [congruences]
//! asd m = "0", "1" n
//!
//! [killing]
//! K1 = "1", "0", "0", "0"
//! ```
//!
//! Without a `family` line the file describes a bare Plebański metric with
//! slots `A`, `Q`, `B`. Congruence and Killing sections replace the family's
//! own lists. The canonical rendering (`Display`) parses back to the same
//! value and re-renders byte for byte.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::families::PLEBANSKI;
use super::{family, Bindings, CongruenceSource, DeclaredCongruence, Geometry, MetricInstance, VectorFieldSpec};
use crate::classify::{Duality, Expansion, SymbolClaim};
use crate::congruence::SpinorFieldSpec;
use crate::dsl::{parse_with, Field, ParseOptions, ScalarField};
use crate::{Error, Mode, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct CongruenceLine {
    pub duality: Duality,
    pub label: String,
    /// ψ_1, ψ_2 (dotted for ASD).
    pub comps: [String; 2],
    pub expansion: Option<Expansion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KillingLine {
    pub label: String,
    pub comps: [String; 4],
    /// Homothety constant; absent for Killing vectors.
    pub chi0: Option<f64>,
    /// Expected ASD expansion for a null vector.
    pub asd: Option<Expansion>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricFile {
    pub mode: Mode,
    pub family: Option<String>,
    pub claim: Option<String>,
    pub params: Vec<(String, f64)>,
    pub functions: Vec<(String, String)>,
    pub congruences: Vec<CongruenceLine>,
    pub killing: Vec<KillingLine>,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Params,
    Functions,
    Congruences,
    Killing,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Format { line, message: message.into() }
}

/// Splits `"a", "b" rest` into the quoted strings and the trailing text.
fn quoted_list(s: &str, line: usize) -> Result<(Vec<String>, &str)> {
    let mut out = vec![];
    let mut rest = s.trim_start();
    loop {
        let body = rest.strip_prefix('"').ok_or_else(|| err(line, "expected a quoted string"))?;
        let end = body.find('"').ok_or_else(|| err(line, "unterminated string"))?;
        out.push(body[..end].to_string());
        rest = body[end + 1..].trim_start();
        match rest.strip_prefix(',') {
            Some(r) => rest = r.trim_start(),
            None => return Ok((out, rest)),
        }
    }
}

fn expansion(tok: &str, line: usize) -> Result<Expansion> {
    match tok {
        "n" => Ok(Expansion::Nonexpanding),
        "e" => Ok(Expansion::Expanding),
        _ => Err(err(line, format!("expected n or e, found `{tok}`"))),
    }
}

fn number(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| err(line, format!("bad number `{tok}`")))?;
    if !v.is_finite() {
        return Err(err(line, format!("non-finite number `{tok}`")));
    }
    Ok(v)
}

fn name_ok(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl FromStr for MetricFile {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut f = MetricFile::default();
        let mut section = Section::Header;
        let mut saw_mode = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            if let Some(h) = s.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
                section = match h.trim() {
                    "params" => Section::Params,
                    "functions" => Section::Functions,
                    "congruences" => Section::Congruences,
                    "killing" => Section::Killing,
                    other => return Err(err(line, format!("unknown section [{other}]"))),
                };
                continue;
            }
            let (lhs, rhs) = s.split_once('=').ok_or_else(|| err(line, "expected `key = value`"))?;
            let (lhs, rhs) = (lhs.trim(), rhs.trim());
            match section {
                Section::Header => match lhs {
                    "mode" => {
                        f.mode = match rhs {
                            "real" => Mode::Real,
                            "complex" => Mode::Complex,
                            _ => return Err(err(line, format!("mode must be real or complex, found `{rhs}`"))),
                        };
                        saw_mode = true;
                    }
                    "family" => {
                        if !name_ok(rhs) {
                            return Err(err(line, format!("bad family id `{rhs}`")));
                        }
                        f.family = Some(rhs.to_string());
                    }
                    "claim" => {
                        let (v, rest) = quoted_list(rhs, line)?;
                        if v.len() != 1 || !rest.is_empty() {
                            return Err(err(line, "claim takes one quoted symbol"));
                        }
                        v[0].parse::<SymbolClaim>().map_err(|e| err(line, e.to_string()))?;
                        f.claim = Some(v[0].clone());
                    }
                    _ => return Err(err(line, format!("unknown header key `{lhs}`"))),
                },
                Section::Params => {
                    if !name_ok(lhs) {
                        return Err(err(line, format!("bad parameter name `{lhs}`")));
                    }
                    f.params.push((lhs.to_string(), number(rhs, line)?));
                }
                Section::Functions => {
                    let (v, rest) = quoted_list(rhs, line)?;
                    if v.len() != 1 || !rest.is_empty() || !name_ok(lhs) {
                        return Err(err(line, "expected slot = \"expression\""));
                    }
                    f.functions.push((lhs.to_string(), v[0].clone()));
                }
                Section::Congruences => {
                    let (side, label) = lhs.split_once(char::is_whitespace).ok_or_else(|| err(line, "expected `sd|asd label`"))?;
                    let duality = match side {
                        "sd" => Duality::SD,
                        "asd" => Duality::ASD,
                        _ => return Err(err(line, format!("expected sd or asd, found `{side}`"))),
                    };
                    let label = label.trim();
                    if !name_ok(label) {
                        return Err(err(line, format!("bad label `{label}`")));
                    }
                    let (v, rest) = quoted_list(rhs, line)?;
                    let comps: [String; 2] = v.try_into().map_err(|_| err(line, "a spinor has two components"))?;
                    let exp = match rest {
                        "" => None,
                        t => Some(expansion(t, line)?),
                    };
                    f.congruences.push(CongruenceLine { duality, label: label.to_string(), comps, expansion: exp });
                }
                Section::Killing => {
                    if !name_ok(lhs) {
                        return Err(err(line, format!("bad label `{lhs}`")));
                    }
                    let (v, rest) = quoted_list(rhs, line)?;
                    let comps: [String; 4] = v.try_into().map_err(|_| err(line, "a vector has four components"))?;
                    let mut k = KillingLine { label: lhs.to_string(), comps, chi0: None, asd: None };
                    let toks: Vec<&str> = rest.split_whitespace().collect();
                    let mut it = toks.chunks(2);
                    for pair in &mut it {
                        match pair {
                            ["chi0", v] if k.chi0.is_none() => k.chi0 = Some(number(v, line)?),
                            ["asd", v] if k.asd.is_none() => k.asd = Some(expansion(v, line)?),
                            _ => return Err(err(line, format!("unexpected `{}`", pair.join(" ")))),
                        }
                    }
                    f.killing.push(k);
                }
            }
        }
        if !saw_mode {
            return Err(err(1, "missing `mode = real|complex`"));
        }
        Ok(f)
    }
}

fn quote(v: &[String]) -> String {
    v.iter().map(|s| format!("\"{s}\"")).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for MetricFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            Mode::Real => "real",
            Mode::Complex => "complex",
        };
        writeln!(f, "mode = {mode}")?;
        if let Some(id) = &self.family {
            writeln!(f, "family = {id}")?;
        }
        if let Some(c) = &self.claim {
            writeln!(f, "claim = \"{c}\"")?;
        }
        if !self.params.is_empty() {
            writeln!(f, "\n[params]")?;
            for (k, v) in &self.params {
                writeln!(f, "{k} = {v}")?;
            }
        }
        if !self.functions.is_empty() {
            writeln!(f, "\n[functions]")?;
            for (k, v) in &self.functions {
                writeln!(f, "{k} = \"{v}\"")?;
            }
        }
        if !self.congruences.is_empty() {
            writeln!(f, "\n[congruences]")?;
            for c in &self.congruences {
                let side = if c.duality == Duality::SD { "sd" } else { "asd" };
                write!(f, "{side} {} = {}", c.label, quote(&c.comps))?;
                if let Some(e) = c.expansion {
                    write!(f, " {}", e.letter())?;
                }
                writeln!(f)?;
            }
        }
        if !self.killing.is_empty() {
            writeln!(f, "\n[killing]")?;
            for k in &self.killing {
                write!(f, "{} = {}", k.label, quote(&k.comps))?;
                if let Some(c) = k.chi0 {
                    write!(f, " chi0 {c}")?;
                }
                if let Some(e) = k.asd {
                    write!(f, " asd {}", e.letter())?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

impl MetricFile {
    pub fn parse(text: &str) -> Result<Self> {
        text.parse()
    }

    pub fn family_id(&self) -> &str {
        self.family.as_deref().unwrap_or(PLEBANSKI)
    }

    pub fn bindings(&self) -> Bindings {
        let mut b = Bindings::new(self.mode);
        for (k, v) in &self.functions {
            b = b.function(k, v);
        }
        for (k, v) in &self.params {
            b = b.param(k, *v);
        }
        b
    }

    /// The described metric with the file's claim, congruences and vectors applied.
    pub fn instantiate(&self) -> Result<MetricInstance> {
        let fam = family(self.family_id())?;
        let mut inst = fam.instantiate(&self.bindings())?;
        if self.family.is_none() {
            inst.claimed = None;
        }
        if let Some(c) = &self.claim {
            inst.claimed = Some(c.parse()?);
        }
        let params = instance_params(&inst);
        let opts = ParseOptions::with_coords(self.mode, &fam.coordinates);
        let sf = |src: &str| -> Result<ScalarField> {
            ScalarField::new(parse_with(src, &opts)?.strip_spans(), params.clone(), self.mode)
        };
        if !self.congruences.is_empty() {
            inst.congruences = self
                .congruences
                .iter()
                .map(|c| {
                    Ok(DeclaredCongruence {
                        label: c.label.clone(),
                        duality: c.duality,
                        source: CongruenceSource::Field(Box::new(SpinorFieldSpec::general(
                            c.duality,
                            [Field::Explicit(sf(&c.comps[0])?), Field::Explicit(sf(&c.comps[1])?)],
                        ))),
                        expected: c.expansion,
                    })
                })
                .collect::<Result<_>>()?;
        }
        if let Some(claim) = &inst.claimed {
            // unflagged congruences take the claim's superscript at their position
            let (mut nsd, mut nasd) = (0, 0);
            for (i, c) in inst.congruences.iter_mut().enumerate() {
                let (idx, sup) = match c.duality {
                    Duality::SD => (&mut nsd, &claim.sd_supers),
                    Duality::ASD => (&mut nasd, &claim.asd_supers),
                };
                let explicit = self.congruences.get(i).and_then(|l| l.expansion);
                if self.claim.is_some() && explicit.is_none() {
                    c.expected = sup.get(*idx).copied();
                }
                *idx += 1;
            }
        }
        if !self.killing.is_empty() {
            inst.killing = self
                .killing
                .iter()
                .map(|k| {
                    let c = &k.comps;
                    Ok(VectorFieldSpec {
                        label: k.label.clone(),
                        components: [sf(&c[0])?, sf(&c[1])?, sf(&c[2])?, sf(&c[3])?],
                        chi0: Scalar::new(k.chi0.unwrap_or(0.0), 0.0),
                        asd_expansion: k.asd,
                    })
                })
                .collect::<Result<_>>()?;
        }
        Ok(inst)
    }
}

fn instance_params(inst: &MetricInstance) -> BTreeMap<String, Scalar> {
    match &inst.geometry {
        Geometry::Plebanski(d) => d.a.params.clone(),
        Geometry::Coframe(rows) => rows[0][0].params.clone(),
    }
}
