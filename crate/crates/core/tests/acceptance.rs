//! Ten end-to-end acceptance criteria. Each prints one PASS/FAIL line with
//! the measured quantity; the test fails if any criterion fails.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nullstring_core::catalog::{
    all_families, instantiate, list_families, run_check, sd_killing_catalog_check, table5_cases, Bindings, CheckKind,
    MetricInstance, PointAnalysis, PLEBANSKI,
};
use nullstring_core::classify::{
    in_ill_conditioned_band, petrov, petrov_conditions, petrov_roots, type_delta, OpticsClass, PetrovLabel, Tolerances,
};
use nullstring_core::congruence::candidate_n;
use nullstring_core::curvature::{oracle_from_plebanski, plebanski_curvature};
use nullstring_core::dsl::{BinOp, Expr, Func, ScalarField, COORD_NAMES};
use nullstring_core::frame::PlebanskiData;
use nullstring_core::jet::{check_margin, finite_diff_check, fd_step};
use nullstring_core::{Jet, Mode, MultiIndex, Scalar};

type Outcome = Result<String, String>;

fn c(v: f64) -> Scalar {
    Scalar::new(v, 0.0)
}

fn real() -> Bindings {
    Bindings::new(Mode::Real)
}

fn sample(inst: &MetricInstance, n: usize) -> Result<Vec<PointAnalysis>, String> {
    inst.sample(n, inst.seed).map(|s| s.points).map_err(|e| format!("{}: {e}", inst.family))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1 ------------------------------------------------------------------------

fn summary_table() -> Outcome {
    ensure(Tolerances::default().zero == 1e-8, || "zero tolerance is not 1e-8".into())?;
    let fams = list_families();
    ensure(fams.len() == 16, || format!("{} summary rows", fams.len()))?;
    let mut worst = 1.0f64;
    for f in &fams {
        let inst = f.instantiate(&real()).map_err(|e| format!("{}: {e}", f.id))?;
        let run = inst.classify(20, inst.seed).map_err(|e| format!("{}: {e}", f.id))?;
        let frac = run.claim_fraction.unwrap_or(0.0);
        ensure(run.points.len() == 20 && frac >= 0.95, || {
            format!("{} matches {} only at {frac} of {} points", f.id, f.claimed, run.points.len())
        })?;
        worst = worst.min(frac);
    }
    Ok(format!("16 families, lowest claim confidence {worst}"))
}

// 2 ------------------------------------------------------------------------

/// Random polynomial-times-elementary slot function in (q,p,x,y).
fn random_slot(rng: &mut ChaCha8Rng) -> String {
    let mut terms = vec![];
    for _ in 0..rng.gen_range(1..4) {
        let coef = rng.gen_range(-2.0..2.0f64);
        let mut mono = vec![format!("{coef}")];
        for v in COORD_NAMES {
            let k = rng.gen_range(0..3);
            if k > 0 {
                mono.push(format!("{v}^{k}"));
            }
        }
        match rng.gen_range(0..4) {
            0 => mono.push(format!("exp({} * {})", rng.gen_range(-1.0..1.0f64), COORD_NAMES[rng.gen_range(0..4)])),
            1 => mono.push(format!("sin({} + {})", COORD_NAMES[rng.gen_range(0..4)], COORD_NAMES[rng.gen_range(0..4)])),
            _ => {}
        }
        terms.push(mono.join("*"));
    }
    terms.join(" + ")
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 300 {
        let mode = if done % 2 == 0 { Mode::Real } else { Mode::Complex };
        let f = |s: String| ScalarField::parse(&s, BTreeMap::new(), mode).unwrap();
        let data = PlebanskiData { a: f(random_slot(&mut rng)), q: f(random_slot(&mut rng)), b: f(random_slot(&mut rng)) };
        let pt: [Scalar; 4] = std::array::from_fn(|_| {
            let im = if mode == Mode::Complex { rng.gen_range(-0.5..0.5) } else { 0.0 };
            Scalar::new(rng.gen_range(-1.0..1.0), im)
        });
        let j = data.jets(&pt).map_err(|e| e.to_string())?;
        let fast = plebanski_curvature(&j);
        let slow = match oracle_from_plebanski(&j) {
            Ok(s) => s,
            Err(e) if e.is_singular() => continue,
            Err(e) => return Err(e.to_string()),
        };
        let scale = fast.max_abs().max(slow.max_abs());
        if scale == 0.0 {
            continue;
        }
        let rel = fast.max_diff(&slow) / scale;
        ensure(rel <= 1e-9, || format!("instance {done}: relative difference {rel:e}"))?;
        worst = worst.max(rel);
        done += 1;
    }
    Ok(format!("300 instances, worst component difference {worst:.2e} of max component"))
}

// 3 ------------------------------------------------------------------------

fn einstein_rows() -> Outcome {
    let funcs = [("exp(p) + q*p^2", "sin(q) - p*q"), ("p^3 - q", "exp(q - p) + q^2*p"), ("cos(p*q) + p", "q^3")];
    let mut worst = 0.0f64;
    let mut n = 0;
    for (sigma, omega) in funcs {
        for lambda in [1.0, -1.0, 2.0, -2.0] {
            let b = real().function("Sigma", sigma).function("Omega", omega).param("Lambda", lambda);
            let inst = instantiate("pkE-II", &b).map_err(|e| e.to_string())?;
            let pts = sample(&inst, 20)?;
            let r = run_check(&inst, CheckKind::Einstein, &pts).map_err(|e| e.to_string())?;
            ensure(r.passed, || format!("pkE-II Sigma={sigma} Omega={omega} Lambda={lambda}: {:e}", r.worst))?;
            // R = −4Λ directly
            for a in &pts {
                let gap = (a.curvature.r + 4.0 * lambda).norm() / (1.0 + a.curvature.max_abs());
                ensure(gap < 1e-10, || format!("R + 4Λ = {gap:e}"))?;
            }
            worst = worst.max(r.worst);
            n += 1;
        }
    }
    for lambda in [1.0, -2.0] {
        let inst = instantiate("dxd-einstein", &real().param("Lambda", lambda)).map_err(|e| e.to_string())?;
        let pts = sample(&inst, 20)?;
        let r = run_check(&inst, CheckKind::Einstein, &pts).map_err(|e| e.to_string())?;
        ensure(r.passed, || format!("dxd-einstein Lambda={lambda}: {:e}", r.worst))?;
        worst = worst.max(r.worst);
        n += 1;
    }
    Ok(format!("{n} instances, worst scaled residual {worst:.2e}"))
}

// 4 ------------------------------------------------------------------------

fn self_duality() -> Outcome {
    let mut worst = 0.0f64;
    for (id, need_c2) in [("sd-III", true), ("sdE-III", true), ("sd-N", false)] {
        let inst = instantiate(id, &real()).map_err(|e| e.to_string())?;
        let pts = sample(&inst, 20)?;
        let r = run_check(&inst, CheckKind::SelfDual, &pts).map_err(|e| e.to_string())?;
        ensure(r.passed, || format!("{id}: ASD Weyl {:e}", r.worst))?;
        worst = worst.max(r.worst);
        for a in &pts {
            let cu = &a.curvature;
            let z = cu.zero_tol();
            if need_c2 {
                ensure(cu.cup[1].norm() > z, || format!("{id}: C^(2) vanishes"))?;
            } else {
                ensure(cu.cup[0].norm() > z && cu.cup[1].norm() <= z && cu.cup[2].norm() <= z, || {
                    format!("{id}: C^(1..3) = {:?}", &cu.cup[..3])
                })?;
            }
        }
    }
    // sd-N carries M as a constant parameter
    let f = nullstring_core::catalog::family("sd-N").map_err(|e| e.to_string())?;
    ensure(f.params.iter().any(|p| p.name == "M0") && f.slots.iter().all(|s| s.name != "M"), || {
        "sd-N: M is not a constant".into()
    })?;
    Ok(format!("3 families, worst ASD Weyl {worst:.2e} of scale"))
}

// 5 ------------------------------------------------------------------------

fn discriminant() -> Outcome {
    let d = instantiate("typeD-ne", &real()).map_err(|e| e.to_string())?;
    let mut worst_d = 0.0f64;
    for a in sample(&d, 20)? {
        let cu = &a.curvature;
        let scale = (1.0 + cu.max_abs()).powi(2);
        let delta = type_delta(&cu.cup).norm() / scale;
        ensure(delta < 1e-10, || format!("typeD-ne: delta {delta:e}"))?;
        worst_d = worst_d.max(delta);
        let n = candidate_n(cu, Mode::Real).map_err(|e| e.to_string())?;
        ensure(n.len() == 1 && n[0] == cu.cup[1] / (cu.cup[2] * 3.0), || format!("typeD-ne: candidates {n:?}"))?;
    }
    let ii = instantiate("IIxD-ne", &real()).map_err(|e| e.to_string())?;
    let mut least = f64::INFINITY;
    for a in sample(&ii, 20)? {
        let cu = &a.curvature;
        let delta = type_delta(&cu.cup).norm() / (1.0 + cu.max_abs()).powi(2);
        ensure(delta > 1e-6, || format!("IIxD-ne: delta {delta:e}"))?;
        least = least.min(delta);
    }
    Ok(format!("typeD-ne delta <= {worst_d:.2e}, IIxD-ne delta >= {least:.2e} (scaled)"))
}

// 6 ------------------------------------------------------------------------

fn type3_solutions() -> Outcome {
    let mut worst = 0.0f64;
    for id in ["type3-i", "type3-ii", "type3-iii"] {
        let inst = instantiate(id, &real()).map_err(|e| e.to_string())?;
        let pts = sample(&inst, 20)?;
        let r = run_check(&inst, CheckKind::Type3, &pts).map_err(|e| e.to_string())?;
        ensure(r.passed && r.worst < 1e-10, || format!("{id}: residual {:e}", r.worst))?;
        worst = worst.max(r.worst);
        for a in &pts {
            let cu = &a.curvature;
            let z = cu.zero_tol();
            ensure(cu.cup[2].norm() <= z && cu.cup[1].norm() > z && cu.max_asd() <= z, || {
                format!("{id}: curvature {:?}", cu.cup)
            })?;
        }
        let cx = instantiate(id, &Bindings::new(Mode::Complex)).map_err(|e| e.to_string())?;
        let run = cx.classify(20, cx.seed).map_err(|e| e.to_string())?;
        let sym = run.aggregate.map(|s| s.to_string()).unwrap_or_default();
        ensure(sym == "[III]^{ne} ⊗ [O]^{n}" && run.agreement == 1.0, || format!("{id}: {sym} at {}", run.agreement))?;
    }
    Ok(format!("3 solutions, worst residual {worst:.2e}, all [III]^{{ne}} ⊗ [O]^{{n}}"))
}

// 7 ------------------------------------------------------------------------

fn killing_suite() -> Outcome {
    let mut worst = 0.0f64;
    let mut vectors = 0;
    let cases = table5_cases().map_err(|e| e.to_string())?;
    for case in &cases {
        for r in sd_killing_catalog_check(&case.instance).map_err(|e| format!("{}: {e}", case.row))? {
            ensure(r.passed, || format!("{} {}: {:e}", case.row, r.label, r.max_relative))?;
            worst = worst.max(r.max_relative);
            vectors += 1;
        }
    }
    for id in ["homothetic", "null-killing", "nxo-null"] {
        let inst = instantiate(id, &real()).map_err(|e| e.to_string())?;
        for r in sd_killing_catalog_check(&inst).map_err(|e| format!("{id}: {e}"))? {
            ensure(r.passed, || format!("{id} {}: {:e}, asd {:?}/{:?}", r.label, r.max_relative, r.expected_asd, r.observed_asd))?;
            worst = worst.max(r.max_relative);
            vectors += 1;
        }
    }
    // the triple's ASD expansions, in order
    let inst = instantiate("nxo-null", &real()).map_err(|e| e.to_string())?;
    let flags: String = sd_killing_catalog_check(&inst)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|r| r.observed_asd.map_or('?', |e| e.letter()))
        .collect();
    ensure(flags == "nne", || format!("nxo-null ASD flags {flags}"))?;
    Ok(format!("{} table rows, {vectors} vectors, worst relative residual {worst:.2e}, triple flags {flags}", cases.len()))
}

// 8 ------------------------------------------------------------------------

fn optics_of(id: &str) -> Result<Vec<OpticsClass>, String> {
    let inst = instantiate(id, &Bindings::new(Mode::Complex)).map_err(|e| e.to_string())?;
    let run = inst.classify(20, inst.seed).map_err(|e| e.to_string())?;
    ensure(run.agreement == 1.0, || format!("{id}: agreement {}", run.agreement))?;
    Ok(run.aggregate.map(|s| s.optics).unwrap_or_default())
}

fn congruence_suite() -> Outcome {
    let mut worst = 0.0f64;
    let mut declared = 0;
    for f in all_families() {
        if f.id == PLEBANSKI {
            continue;
        }
        let inst = f.instantiate(&real()).map_err(|e| format!("{}: {e}", f.id))?;
        let pts = sample(&inst, 20)?;
        let r = run_check(&inst, CheckKind::Congruences, &pts).map_err(|e| e.to_string())?;
        ensure(r.passed, || format!("{}: {:?}", f.id, r.items.iter().filter(|i| !i.passed).collect::<Vec<_>>()))?;
        declared += inst.congruences.len();
        worst = worst.max(r.worst);
    }
    let mm = optics_of("sesqui-mm")?;
    ensure(mm == [OpticsClass::MinusMinus], || format!("sesqui-mm optics {mm:?}"))?;
    let ii = optics_of("IIxD-ne")?;
    ensure(ii.len() == 4 && ii[3] == OpticsClass::PlusPlus && ii[..3].iter().all(|&o| o == OpticsClass::MinusMinus), || {
        format!("IIxD-ne optics {ii:?}")
    })?;
    Ok(format!("{declared} declared congruences, worst residual {worst:.2e}; (n,e) pair --, fourth IIxD pair ++"))
}

// 9 ------------------------------------------------------------------------

fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..3) {
            0 => Expr::Num(rng.gen_range(1..12) as f64 / 4.0),
            _ => {
                let k = rng.gen_range(0..4);
                Expr::coord(k, COORD_NAMES[k])
            }
        };
    }
    let d = depth - 1;
    match rng.gen_range(0..10) {
        0 => Expr::Neg(Box::new(random_expr(rng, d))),
        1..=5 => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Mul][rng.gen_range(0..5)];
            Expr::Bin(op, Box::new(random_expr(rng, d)), Box::new(random_expr(rng, d)))
        }
        6 => {
            let n = rng.gen_range(-2..4);
            Expr::Pow(Box::new(random_expr(rng, d)), n)
        }
        _ => {
            let func = [Func::Exp, Func::Ln, Func::Sin, Func::Cos][rng.gen_range(0..4)];
            Expr::Call(func, Box::new(random_expr(rng, d)))
        }
    }
}

fn differentiation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let alphas: Vec<MultiIndex> = MultiIndex::all().iter().copied().filter(|a| a.order() >= 1).collect();
    let h = 1e-4;
    let mut worst = 0.0f64;
    let (mut accepted, mut skipped) = (0, 0);
    while accepted < 1000 {
        let raw = random_expr(&mut rng, 4);
        let pt: [Scalar; 4] = std::array::from_fn(|_| c(rng.gen_range(0.3..1.2)));
        // divide by a power of two near the jet's size: exact, and keeps the
        // finite-difference roundoff floor ε|f|/h³ below the tolerance
        let size = ScalarField::new(raw.clone(), BTreeMap::new(), Mode::Real)
            .unwrap()
            .eval_jet(&pt)
            .map_or(1.0, |j| j.max_abs());
        if !size.is_finite() {
            skipped += 1;
            continue;
        }
        let k = size.max(1.0).log2().ceil();
        let e = Expr::Bin(BinOp::Div, Box::new(raw), Box::new(Expr::Num(2f64.powf(k))));
        let f = ScalarField::new(e.clone(), BTreeMap::new(), Mode::Real).unwrap();
        let value = |p: &[Scalar; 4]| f.eval_jet(p).map(|j| j.value());
        // a point is usable when the jet exists and the function is analytic
        // out to the largest finite-difference stencil
        let usable = f.eval_jet(&pt).ok().filter(|j: &Jet| {
            j.is_finite() && check_margin(&value, j, &pt, 10.0 * fd_step(h, 3)).is_ok()
        });
        if usable.is_none() {
            skipped += 1;
            continue;
        }
        for a in &alphas {
            let rel = finite_diff_check(&|p: &[Scalar; 4]| f.eval_jet(p), &pt, a, h)
                .map_err(|err| format!("{e} at {pt:?}, {a:?}: {err}"))?;
            ensure(rel < 1e-6, || format!("{e} at {pt:?}, {:?}: relative error {rel:e}", a.0))?;
            worst = worst.max(rel);
        }
        accepted += 1;
    }
    Ok(format!("1000 expressions x 34 partials, worst relative error {worst:.2e} ({skipped} singular draws skipped)"))
}

// 10 -----------------------------------------------------------------------

/// Adapted coefficients (C^(4) = C^(5) = 0) drawn across all special types.
fn adapted(rng: &mut ChaCha8Rng) -> [Scalar; 5] {
    let mut z = || Scalar::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let (c1, c2, c3) = (z(), z(), z());
    let zero = c(0.0);
    match rng.gen_range(0..5) {
        0 => [c1, c2, c3, zero, zero],
        1 => [c2 * c2 * 2.0 / (c3 * 3.0), c2, c3, zero, zero],
        2 => [c1, c2, zero, zero, zero],
        3 => [c1, zero, zero, zero, zero],
        _ => [zero; 5],
    }
}

fn classifier() -> Outcome {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut compared, mut banded) = (0, 0);
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..10_000 {
        let cup = adapted(&mut rng);
        if in_ill_conditioned_band(&cup, &tol) {
            banded += 1;
            continue;
        }
        let cond = petrov_conditions(&cup, &tol).ok_or("adapted input rejected")?.label;
        let roots = petrov_roots(&cup, &tol).map_err(|e| format!("{cup:?}: {e}"))?.label;
        ensure(cond == roots, || format!("{cup:?}: conditions {cond}, roots {roots}"))?;
        seen.insert(cond.as_str());
        let lambda = 10f64.powf(rng.gen_range(-6.0..6.0));
        let scaled = cup.map(|v| v * lambda);
        let again = petrov(&scaled, Mode::Complex, &tol).map_err(|e| e.to_string())?.label;
        ensure(again == cond, || format!("{cup:?} scaled by {lambda:e}: {again} vs {cond}"))?;
        // neutral signature labels on the real part
        let re = cup.map(|v| c(v.re));
        if !in_ill_conditioned_band(&re, &tol) {
            let a = petrov(&re, Mode::Real, &tol).map_err(|e| e.to_string())?.label;
            let b = petrov(&re.map(|v| v * lambda), Mode::Real, &tol).map_err(|e| e.to_string())?.label;
            ensure(a == b, || format!("{re:?} scaled by {lambda:e}: {b} vs {a}"))?;
        }
        compared += 1;
    }
    ensure(seen.len() == 5, || format!("types reached: {seen:?}"))?;
    let _ = PetrovLabel::O;
    Ok(format!("{compared} sets agree and are scale invariant ({banded} in the ill-conditioned band)"))
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("summary table reproduction", summary_table),
        ("closed form vs coordinate oracle", oracle_equivalence),
        ("Einstein rows", einstein_rows),
        ("self-duality rows", self_duality),
        ("discriminant dichotomy", discriminant),
        ("type-[III] special solutions", type3_solutions),
        ("Killing and homothety suite", killing_suite),
        ("congruence and optics suite", congruence_suite),
        ("differentiation soundness", differentiation),
        ("classifier soundness", classifier),
    ];
    let mut failed = vec![];
    // the harness prints "test acceptance ... " without a newline
    println!();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = std::time::Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                println!("FAIL {:>2} {name}: {why} [{secs:.1}s]", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
