use super::*;
use crate::classify::OpticsClass;

fn real() -> Bindings {
    Bindings::new(Mode::Real)
}

fn describe(run: &ClassificationRun) -> String {
    run.points
        .iter()
        .map(|p| {
            let s = p.symbol.as_ref().map_or("-".to_string(), |s| s.to_string());
            let f: Vec<String> = p.flags.iter().map(|f| f.to_string()).collect();
            format!("{s} {f:?}")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn sixteen_summary_rows() {
    let ids: Vec<&str> = list_families().iter().map(|f| f.id).collect();
    assert_eq!(ids.len(), 16);
    for id in ["walker-pk", "pkE-II", "dxd-einstein", "weak-hh", "sdE-N"] {
        assert!(ids.contains(&id), "{id}");
    }
    let pk = family("walker-pk").unwrap();
    assert_eq!(pk.claimed.to_string(), "[deg]^{n} ⊗ [D]^{nn}");
    assert_eq!(pk.content, "2 functions of 3 variables");
    assert_eq!(family("pkE-II").unwrap().content, "2 functions of 2 variables, 1 constant");
    assert_eq!(family("dxd-einstein").unwrap().content, "1 constant");
    assert!(matches!(family("nope"), Err(Error::UnknownFamily(_))));
}

#[test]
fn every_family_matches_its_claim() {
    for fam in all_families().into_iter().filter(|f| f.id != PLEBANSKI) {
        let inst = fam.instantiate(&real()).unwrap();
        let run = inst.classify(20, inst.seed).unwrap();
        let hits = (run.claim_fraction.unwrap() * 20.0).round() as usize;
        assert_eq!(run.points.len(), 20, "{}", fam.id);
        assert!(hits >= 19, "{}: {hits}/20 match {}\n{}", fam.id, fam.claimed, describe(&run));
    }
}

#[test]
fn complex_mode_matches_claims_too() {
    for id in ["walker-pk", "pkE-II", "sd-III", "dd-walker"] {
        let inst = instantiate(id, &Bindings::new(Mode::Complex)).unwrap();
        let run = inst.classify(20, inst.seed).unwrap();
        assert!(run.claim_fraction.unwrap() >= 0.95, "{id}\n{}", describe(&run));
    }
}

#[test]
fn arity_is_enforced() {
    let e = instantiate("walker-pk", &real().function("B", "x*y")).unwrap_err();
    assert!(matches!(e, Error::ArityViolation { ref slot, ref coordinate } if slot == "B" && coordinate == "x"), "{e}");
    let e = instantiate("typeD-ne", &real().function("F", "exp(p)")).unwrap_err();
    assert!(matches!(e, Error::ArityViolation { .. }));
    assert!(matches!(instantiate("walker-pk", &real().function("C", "q")), Err(Error::UnknownSlot(_))));
    assert!(matches!(instantiate("walker-pk", &real().param("Lambda", 1.0)), Err(Error::UnknownSlot(_))));
    assert!(matches!(instantiate(PLEBANSKI, &real().function("A", "x")), Err(Error::UnboundSlot(_))));
}

#[test]
fn family_coordinate_names_parse() {
    let inst = instantiate("sesqui-pp", &real().function("Sigma", "z^3 + q")).unwrap();
    assert_eq!(inst.coordinates[3], "z");
    assert!(instantiate("sesqui-pp", &real().function("Sigma", "y")).is_err());
}

/// ½ds² of each exotic family, written directly from its line element.
fn half_line_element(id: &str, pt: &[f64; 4]) -> [[f64; 4]; 4] {
    let [q, p, a, b] = *pt;
    let mut h = [[0.0; 4]; 4];
    let mut sym = |i: usize, j: usize, v: f64| {
        if i == j {
            h[i][i] += v;
        } else {
            h[i][j] += v / 2.0;
            h[j][i] += v / 2.0;
        }
    };
    match id {
        "sesqui-pp" => {
            // −dpdx − z dqdx − (x − Σ_z)dqdz + 𝒜dp² + (Σ_p − 2𝒬)dpdq
            //   + ((x − Σ_z)Ω + zΣ_p − 2z𝒬 − z²𝒜)dq²
            let (x, z) = (a, b);
            let aa = x * z + q * p;
            let qq = z * z * x + p;
            let s_p = z + q;
            let xs = x - (2.0 * q * z + p);
            let om = p * z + q * q;
            sym(1, 2, -1.0);
            sym(0, 2, -z);
            sym(0, 3, -xs);
            sym(1, 1, aa);
            sym(0, 1, s_p - 2.0 * qq);
            sym(0, 0, xs * om + z * s_p - 2.0 * z * qq - z * z * aa);
        }
        "walker-ne-pp" => {
            // dqdy + w dpdy + (y − Σ_w)dpdw + ℬdq² − (2𝒬 + Σ_q)dqdp
            //   + ((y − Σ_w)Ω − wΣ_q − 2w𝒬 − w²ℬ)dp²
            let (w, y) = (a, b);
            let qq = q * y + p * p;
            let bb = y * y * p + q;
            let s_q = w * w;
            let ys = y - (2.0 * q * w + p);
            let om = w * q + p * p;
            sym(0, 3, 1.0);
            sym(1, 3, w);
            sym(1, 2, ys);
            sym(0, 0, bb);
            sym(0, 1, -(2.0 * qq + s_q));
            sym(1, 1, ys * om - w * s_q - 2.0 * w * qq - w * w * bb);
        }
        "IIxD-ne" => {
            // −dq(n dp + (p − B)dn + A(B − p)dq) − dp dx, A = 0, B = qn
            let n = b;
            let bb = q * n;
            sym(0, 1, -n);
            sym(0, 3, -(p - bb));
            sym(1, 2, -1.0);
        }
        "typeD-ne" => {
            // −dq(F dp + (p − z)F_z dz) − dp dx
            let z = b;
            let f = (q * z).exp();
            sym(0, 1, -f);
            sym(0, 3, -(p - z) * q * f);
            sym(1, 2, -1.0);
        }
        "dxd-einstein" => {
            let (x, y) = (a, b);
            let aa = 1.0 + x * p / 2.0;
            let bb = 1.0 + y * q / 2.0;
            sym(1, 2, 1.0 / (aa * aa));
            sym(0, 3, 1.0 / (bb * bb));
        }
        "null-killing" => {
            // −dpdx + (2p + H)dqdy + (Ω − x/(2p + H))dp², H = q, Ω = q³
            let x = a;
            let s = 2.0 * p + q;
            sym(1, 2, -1.0);
            sym(0, 3, s);
            sym(1, 1, q * q * q - x / s);
        }
        _ => unreachable!(),
    }
    h
}

#[test]
fn coframes_reproduce_line_elements() {
    for id in ["sesqui-pp", "walker-ne-pp", "IIxD-ne", "typeD-ne", "dxd-einstein", "null-killing"] {
        let inst = instantiate(id, &real()).unwrap();
        for pt in inst.sample_points(5, 7).unwrap() {
            let g = inst.evaluate(&pt).unwrap().metric;
            let h = half_line_element(id, &pt.map(|c| c.re));
            for i in 0..4 {
                for j in 0..4 {
                    let want = 2.0 * h[i][j];
                    let got = g[i][j].value().re;
                    assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()), "{id} g[{i}][{j}] {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn guards_reject_singular_points() {
    let inst = instantiate("dxd-einstein", &real()).unwrap();
    // 1 + xp/2 = 0 at x = −2/p
    let bad = [0.3, 1.0, -2.0, 0.1].map(|v| Scalar::new(v, 0.0));
    assert!(!inst.admissible(&bad));
    assert!(matches!(inst.analyse(&bad), Err(Error::SingularSampling)));
    let inst = instantiate("typeD-ne", &real()).unwrap();
    let bad = [1.0, 0.4, 0.0, 0.4 + 1e-4].map(|v| Scalar::new(v, 0.0));
    assert!(!inst.admissible(&bad));
}

#[test]
fn sampling_is_deterministic_and_seeded() {
    let inst = instantiate("walker-pk", &real()).unwrap();
    let a = inst.sample_points(10, 3).unwrap();
    let b = inst.sample_points(10, 3).unwrap();
    let c = inst.sample_points(10, 4).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(inst.seed, family_seed("walker-pk"));
    assert_ne!(family_seed("walker-pk"), family_seed("pkE-II"));
}

#[test]
fn declared_congruences_carry_expected_flags() {
    let inst = instantiate("IIxD-ne", &real()).unwrap();
    let flags: Vec<_> = inst.congruences.iter().map(|c| (c.label.as_str(), c.duality, c.expected)).collect();
    assert_eq!(
        flags,
        vec![
            ("m", Duality::SD, Some(Expansion::Nonexpanding)),
            ("n", Duality::SD, Some(Expansion::Expanding)),
            ("m", Duality::ASD, Some(Expansion::Nonexpanding)),
            ("n", Duality::ASD, Some(Expansion::Nonexpanding)),
        ]
    );
}

#[test]
fn intersection_classes_of_mixed_families() {
    // sesqui-mm: the single pair is --; IIxD-ne: the fourth pair is ++
    let inst = instantiate("sesqui-mm", &real()).unwrap();
    let run = inst.classify(5, inst.seed).unwrap();
    for p in &run.points {
        assert_eq!(p.intersections.len(), 1);
        assert_eq!(p.intersections[0].optics.class, OpticsClass::MinusMinus);
    }
    let inst = instantiate("IIxD-ne", &real()).unwrap();
    let run = inst.classify(5, inst.seed).unwrap();
    for p in &run.points {
        let c: Vec<_> = p.intersections.iter().map(|i| i.optics.class).collect();
        assert_eq!(c, vec![OpticsClass::MinusMinus, OpticsClass::MinusMinus, OpticsClass::MinusMinus, OpticsClass::PlusPlus]);
    }
}

#[test]
fn checks_pass_on_their_rows() {
    let cases: [(&str, &[CheckKind]); 9] = [
        ("pkE-II", &[CheckKind::Einstein, CheckKind::Congruences]),
        ("dxd-einstein", &[CheckKind::Einstein, CheckKind::Congruences]),
        ("sd-III", &[CheckKind::SelfDual]),
        ("sd-N", &[CheckKind::SelfDual]),
        ("sdE-III", &[CheckKind::SelfDual, CheckKind::Einstein]),
        ("sdE-N", &[CheckKind::Master, CheckKind::Killing, CheckKind::Einstein]),
        ("pkE-D", &[CheckKind::Killing, CheckKind::Master]),
        ("homothetic", &[CheckKind::Killing, CheckKind::Master]),
        ("type3-iii", &[CheckKind::Type3, CheckKind::SelfDual]),
    ];
    for (id, kinds) in cases {
        let inst = instantiate(id, &real()).unwrap();
        let pts = inst.sample(10, inst.seed).unwrap().points;
        for &k in kinds {
            let r = run_check(&inst, k, &pts).unwrap();
            assert!(r.passed, "{id} {k}: {r:?}");
        }
    }
}

#[test]
fn checks_fail_without_data_or_on_wrong_rows() {
    let inst = instantiate("walker-pk", &real()).unwrap();
    let pts = inst.sample(5, 1).unwrap().points;
    for k in [CheckKind::Einstein, CheckKind::SelfDual, CheckKind::Killing, CheckKind::Master, CheckKind::Type3] {
        assert!(!run_check(&inst, k, &pts).unwrap().passed, "{k}");
    }
    assert!(run_check(&inst, CheckKind::Congruences, &pts).unwrap().passed);
}

#[test]
fn congruence_check_catches_expanding_asd() {
    // 𝒬 = x*y: 𝒬_x ≠ 0 so the ASD congruence m expands
    let text = "mode = real\n\n[functions]\nA = \"x^2\"\nQ = \"x*y\"\nB = \"y^2\"\n\n[congruences]\nasd m = \"0\", \"1\" n\n";
    let inst = MetricFile::parse(text).unwrap().instantiate().unwrap();
    let pts = inst.sample(5, 2).unwrap().points;
    assert!(!run_check(&inst, CheckKind::Congruences, &pts).unwrap().passed);
}

#[test]
fn killing_examples() {
    let pkd = instantiate("pkE-D", &real()).unwrap();
    let pt = [0.3, -0.2, 0.7, 0.1].map(|v| Scalar::new(v, 0.0));
    let g = pkd.evaluate(&pt).unwrap().metric;
    let k5 = pkd.killing.iter().find(|k| k.label == "K5").unwrap();
    assert!(killing_residual(k5, &g, &pt).unwrap().relative < 1e-10);

    let params: BTreeMap<String, Scalar> = BTreeMap::new();
    let dq = VectorFieldSpec::parse("dq", ["1", "0", "0", "0"], &params, Mode::Real).unwrap();
    let dx = VectorFieldSpec::parse("dx", ["0", "0", "1", "0"], &params, Mode::Real).unwrap();
    let inst = instantiate("pkE-II", &real().function("Sigma", "exp(p)").function("Omega", "0")).unwrap();
    let g = inst.evaluate(&pt).unwrap().metric;
    assert!(killing_residual(&dq, &g, &pt).unwrap().relative < 1e-10);
    let generic = instantiate("pkE-II", &real()).unwrap();
    let g = generic.evaluate(&pt).unwrap().metric;
    assert!(killing_residual(&dx, &g, &pt).unwrap().relative > 1e-3);
    assert!(killing_residual(&dq, &g, &pt).unwrap().relative > 1e-3);
}

#[test]
fn killing_table_rows_pass() {
    for case in table5_cases().unwrap() {
        let reports = sd_killing_catalog_check(&case.instance).unwrap();
        for r in reports {
            assert!(r.passed, "{}: {} relative {}", case.row, r.label, r.max_relative);
        }
    }
}

#[test]
fn null_killing_vectors_and_their_congruences() {
    let inst = instantiate("null-killing", &real()).unwrap();
    let r = sd_killing_catalog_check(&inst).unwrap();
    assert!(r[0].passed && r[0].max_relative < 1e-10);

    let inst = instantiate("nxo-null", &real()).unwrap();
    let r = sd_killing_catalog_check(&inst).unwrap();
    let obs: Vec<_> = r.iter().map(|r| (r.passed, r.observed_asd)).collect();
    assert_eq!(
        obs,
        vec![
            (true, Some(Expansion::Nonexpanding)),
            (true, Some(Expansion::Nonexpanding)),
            (true, Some(Expansion::Expanding))
        ]
    );
    // ∂_q is not a symmetry when Ω depends on q
    let mut bad = inst.clone();
    bad.killing = vec![VectorFieldSpec::parse("dq", ["1", "0", "0", "0"], &BTreeMap::new(), Mode::Real).unwrap()];
    assert!(!sd_killing_catalog_check(&bad).unwrap()[0].passed);
}

#[test]
fn homothety_and_master_vectors_agree() {
    for id in ["homothetic", "sdE-N", "pkE-D"] {
        let inst = instantiate(id, &real()).unwrap();
        let k = inst.master.as_ref().unwrap().killing_vector().unwrap();
        for pt in inst.sample_points(5, 11).unwrap() {
            let g = inst.evaluate(&pt).unwrap().metric;
            assert!(killing_residual(&k, &g, &pt).unwrap().relative < 1e-10, "{id}");
        }
    }
}

#[test]
fn master_examples() {
    let f = |s: &str| ScalarField::parse(s, BTreeMap::new(), Mode::Real).unwrap();
    let one = Scalar::new(1.0, 0.0);
    let pt = [0.4, 0.3, -0.2, 0.5].map(|v| Scalar::new(v, 0.0));
    let m = MasterData::Einstein { lambda: one, sigma: f("exp(p)"), omega: f("0"), delta1: f("1"), delta2: f("0") };
    assert!(master_residuals(&m, &pt).unwrap().iter().all(|r| r.value == 0.0));
    let m = MasterData::Null { phi: f("q*p"), omega: f("0"), eps: f("0"), chi0: one };
    assert!(master_residuals(&m, &pt).unwrap().iter().all(|r| r.passed()));
    let m = MasterData::Einstein {
        lambda: one,
        sigma: f("q*p^2 + exp(q)"),
        omega: f("p*q^3"),
        delta1: f("sin(q) + q^4"),
        delta2: f("cos(p)"),
    };
    assert!(master_residuals(&m, &pt).unwrap().iter().all(|r| !r.passed() && r.value > 1e-3));
}

#[test]
fn type3_special_solutions() {
    for id in ["type3-i", "type3-ii", "type3-iii"] {
        let inst = instantiate(id, &real()).unwrap();
        let pts = inst.sample(10, inst.seed).unwrap().points;
        let r = run_check(&inst, CheckKind::Type3, &pts).unwrap();
        assert!(r.passed && r.worst < 1e-10, "{id}: {r:?}");
    }
}

const CANONICAL: &str = "mode = complex
family = pkE-II
claim = \"[II]^{n} ⊗ [D]^{nn}\"

[params]
Lambda = -1.5

[functions]
Sigma = \"exp(p)\"
Omega = \"q^2 + 0.25*p\"

[congruences]
sd m = \"0\", \"1\" n
asd n = \"1\", \"0\"

[killing]
K1 = \"1\", \"0\", \"0\", \"0\"
K2 = \"0\", \"0\", \"x\", \"y\" chi0 0.5 asd e
";

#[test]
fn metric_file_round_trips_bit_exactly() {
    let f = MetricFile::parse(CANONICAL).unwrap();
    assert_eq!(f.to_string(), CANONICAL);
    assert_eq!(MetricFile::parse(&f.to_string()).unwrap(), f);
    assert_eq!(f.params, vec![("Lambda".to_string(), -1.5)]);
    assert_eq!(f.killing[1].chi0, Some(0.5));

    let minimal = "mode = real\n";
    assert_eq!(MetricFile::parse(minimal).unwrap().to_string(), minimal);
}

#[test]
fn metric_file_accepts_comments_and_reports_lines() {
    let text = "# flat\nmode = real\n\n[functions]\n  A = \"0\"   \nQ = \"0\"\nB = \"0\"\n";
    let f = MetricFile::parse(text).unwrap();
    assert_eq!(f.to_string(), "mode = real\n\n[functions]\nA = \"0\"\nQ = \"0\"\nB = \"0\"\n");
    for (bad, line) in [
        ("mode = sideways\n", 1),
        ("mode = real\n[stuff]\n", 2),
        ("mode = real\n[params]\nL = abc\n", 3),
        ("mode = real\n[functions]\nA = \"x\n", 3),
        ("mode = real\n[congruences]\nsd m = \"1\" n\n", 3),
        ("mode = real\n[killing]\nK = \"1\", \"0\", \"0\", \"0\" chi1 2\n", 3),
        ("[functions]\nA = \"x\"\n", 1),
    ] {
        match MetricFile::parse(bad) {
            Err(Error::Format { line: l, .. }) => assert_eq!(l, line, "{bad}"),
            other => panic!("{bad}: {other:?}"),
        }
    }
}

#[test]
fn metric_file_instantiates() {
    let inst = MetricFile::parse(CANONICAL).unwrap().instantiate().unwrap();
    assert_eq!(inst.mode, Mode::Complex);
    assert_eq!(inst.lambda, Some(Scalar::new(-1.5, 0.0)));
    assert_eq!(inst.congruences.len(), 2);
    assert_eq!(inst.congruences[1].expected, Some(Expansion::Nonexpanding));
    assert_eq!(inst.killing[1].chi0, Scalar::new(0.5, 0.0));

    let flat = MetricFile::parse("mode = real\n[functions]\nA = \"0\"\nQ = \"0\"\nB = \"0\"\n").unwrap();
    let inst = flat.instantiate().unwrap();
    assert_eq!(inst.family, PLEBANSKI);
    assert!(inst.claimed.is_none());
    let run = inst.classify(3, 1).unwrap();
    assert_eq!(run.aggregate.unwrap().to_string(), "[O_r] ⊗ [O_r]");

    let unknown = MetricFile::parse("mode = real\nfamily = nope\n").unwrap();
    assert!(matches!(unknown.instantiate(), Err(Error::UnknownFamily(_))));
}

#[test]
fn exponential_pair_needs_the_mirrored_omega() {
    // The printed Ω = Ω₀/(1 − e^{a₀z})² − a₀²/(2Λ) satisfies the second master
    // equation only for Ω₀ = 0; for Ω₀ ≠ 0 the exponent must be −a₀z.
    let k2 = ["exp(q)", "exp(p)", "-exp(p)*(x + 1/Lambda)", "exp(q)*(-y + 1/Lambda)"];
    let run = |omega: &str| {
        let sigma = "1/(1 - exp(q - p))^2 - 1/(2*Lambda)";
        let mut inst = instantiate("pkE-II", &real().function("Sigma", sigma).function("Omega", omega)).unwrap();
        let params: BTreeMap<String, Scalar> = [("Lambda".to_string(), inst.lambda.unwrap())].into();
        inst.killing = vec![VectorFieldSpec::parse("K2", k2, &params, Mode::Real).unwrap()];
        inst.sample_box = [(1.5, 2.5), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)];
        sd_killing_catalog_check(&inst).unwrap()[0].max_relative
    };
    assert!(run("2/(1 - exp(q - p))^2 - 1/(2*Lambda)") > 1e-2);
    assert!(run("2/(1 - exp(p - q))^2 - 1/(2*Lambda)") < 1e-10);
    assert!(run("-1/(2*Lambda)") < 1e-10);
}
