mod support;

use gbal_core::certificate::{Certificate, Declaration};
use gbal_core::model::{IndexedInstance, Rational};
use gbal_core::oracle::{exact_opt, feasible_at, verify_certificate, verify_declaration, Verdict};
use gbal_core::search::{solve, SolveOptions};
use support::{general_case, two_valued_case, BETAS};

fn suite_declarations() -> Vec<(IndexedInstance, Declaration)> {
    let mut out = Vec::new();
    let mut cases = Vec::new();
    for seed in 0..150 {
        cases.push(two_valued_case(80_000 + seed, seed % 2 == 0));
    }
    for (i, (p, q)) in BETAS.into_iter().enumerate() {
        for seed in 0..80 {
            cases.push(general_case(90_000 + 100 * i as u64 + seed, Rational::new(p, q)));
        }
    }
    for (inst, mode) in cases {
        let report = solve(&inst, mode, &SolveOptions::default()).unwrap();
        for d in report.solution.declarations {
            out.push((inst.clone(), d));
        }
    }
    out
}

#[test]
fn suite_certificates_are_never_refuted() {
    let decls = suite_declarations();
    assert!(decls.len() > 50);
    let mut kinds = std::collections::BTreeMap::new();
    for (inst, d) in &decls {
        let verdict = verify_certificate(inst, d).unwrap();
        assert!(
            !matches!(verdict, Verdict::Refuted(_)),
            "{verdict:?} for {}",
            d.to_json()
        );
        if d.mode == "general" {
            assert_eq!(verdict, Verdict::Confirmed, "{}", d.to_json());
        }
        assert!(verify_declaration(inst, d).unwrap());
        *kinds.entry(d.certificate.kind()).or_insert(0) += 1;
    }
    assert!(kinds.len() >= 3, "{kinds:?}");
}

#[test]
fn declarations_round_trip_through_json() {
    for (inst, d) in suite_declarations().into_iter().take(40) {
        let back: Declaration = serde_json::from_str(&d.to_json()).unwrap();
        assert_eq!(back, d);
        assert_eq!(
            verify_certificate(&inst, &back).unwrap(),
            verify_certificate(&inst, &d).unwrap()
        );
    }
}

#[test]
fn corrupted_payloads_are_never_confirmed_when_feasible() {
    let mut mutated = 0;
    for (inst, d) in suite_declarations() {
        let opt = exact_opt(&inst).unwrap();

        // Moving the declaration to a feasible guess must not be confirmed.
        let moved = Declaration { t: opt, ..d.clone() };
        assert!(feasible_at(&inst, opt).unwrap());
        if let Ok(v) = verify_certificate(&inst, &moved) {
            assert_ne!(v, Verdict::Confirmed, "{}", moved.to_json());
        }
        assert!(!verify_declaration(&inst, &moved).unwrap_or(false));

        if let Certificate::ActivatedSet(p) = &d.certificate {
            let mut bad = d.clone();
            let Certificate::ActivatedSet(q) = &mut bad.certificate else {
                unreachable!()
            };
            let key = p.levels.keys().next().expect("activated set is non-empty").clone();
            *q.pl.get_mut(&key).unwrap() -= 1;
            let verdict = verify_certificate(&inst, &bad).unwrap();
            assert!(matches!(verdict, Verdict::Refuted(_)), "{verdict:?}");
            mutated += 1;
        }
    }
    assert!(mutated > 0);
}

#[test]
fn multi_cycle_example() {
    let inst = support::build(
        &[0, 0, 0, 0],
        &[(8, &[0, 1]), (8, &[1, 2]), (8, &[0, 2]), (8, &[2, 3]), (8, &[1, 3])],
    );
    let d = Declaration::new(
        10,
        gbal_core::SolveMode::General {
            beta: Rational::new(7, 10),
        },
        Certificate::MultiCycleComponent(gbal_core::certificate::MultiCyclePayload {
            nodes: ["m1", "m2", "m3", "m4"].map(String::from).to_vec(),
            rocks: ["j1", "j2", "j3", "j4", "j5"].map(String::from).to_vec(),
        }),
    );
    assert_eq!(verify_certificate(&inst, &d).unwrap(), Verdict::Confirmed);
}
