use std::sync::OnceLock;

use super::*;
use crate::synthetic::tests::{chart, fixture};

const NAMES: &str = include_str!("../../../../fixtures/naming.txt");
const CLAIMS: &str = include_str!("../../../../fixtures/claims.txt");
const RELATIONS: &str = include_str!("../../../../fixtures/relations.txt");

fn names() -> &'static HomotopyNames {
    static N: OnceLock<HomotopyNames> = OnceLock::new();
    N.get_or_init(|| HomotopyNames::parse(NAMES, "naming.txt", &GeneratorSpec::defaults()).unwrap())
}

fn relations() -> RelationSet {
    RelationSet::parse(RELATIONS, "relations.txt", names()).unwrap()
}

fn claims() -> Vec<HiddenExtensionClaim> {
    ingest_claims_str(CLAIMS, "claims.txt", names()).unwrap()
}

fn evidence() -> Evidence<'static> {
    let f = fixture();
    Evidence { res: &f.res, naming: &f.naming, chart: chart(), names: names() }
}

fn claim(id: &str) -> HiddenExtensionClaim {
    claims().into_iter().find(|c| c.id() == id).unwrap_or_else(|| panic!("no row {id}"))
}

#[test]
fn expressions_round_trip() {
    for s in ["2~*nu*kappa", "tau^2*B*eps1*kappa", "w2^2*(delta+alpha*g)", "{h2^2*w2^3*alpha*d0}", "0"] {
        assert_eq!(Expr::parse(s).unwrap().to_string(), s);
    }
    let e = Expr::parse("B*eta4*kbar+eta1*kbar^5").unwrap();
    assert_eq!(e.0.len(), 2);
    assert_eq!(e.0[1].0[1].power, 5);
}

#[test]
fn malformed_expressions_are_rejected() {
    for s in ["", "a*", "(a+b", "a^", "a^0", "a b", "{a"] {
        assert!(Expr::parse(s).is_err(), "{s}");
    }
}

#[test]
fn name_degrees_come_from_detecting_classes() {
    let n = names();
    let d = |s: &str| n.degree(&Expr::parse(s).unwrap()).unwrap().unwrap();
    assert_eq!(d("2~*nu*kappa"), SyntheticDegree::new(17, 23));
    assert_eq!(d("tau*eta*B*eps"), SyntheticDegree::new(17, 24));
    assert_eq!(d("nu1*kbar"), SyntheticDegree::new(47, 57));
    assert_eq!(n.top_weight(&Expr::parse("tau^2*B*kbar^2").unwrap()).unwrap(), 60);
    assert!(n.degree(&Expr::parse("eta+nu").unwrap()).is_err());
    assert!(matches!(n.degree(&Expr::parse("zeta").unwrap()), Err(Error::UnknownName(_))));
}

#[test]
fn naming_line_in_the_wrong_stem_is_rejected() {
    let err = HomotopyNames::parse("eta 2 1 h1\n", "n.txt", &GeneratorSpec::defaults()).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    let err = HomotopyNames::parse("x 1 1 h9\n", "n.txt", &GeneratorSpec::defaults()).unwrap_err();
    assert!(err.to_string().contains("h9"), "{err}");
}

#[test]
fn relation_with_unequal_sides_is_rejected() {
    let err = RelationSet::parse("rel bad eta^2 = nu\n", "r.txt", names()).unwrap_err();
    assert!(err.to_string().contains("bad"), "{err}");
    assert_eq!(relations().len(), 15);
}

#[test]
fn fixture_has_one_row_per_table_row() {
    let c = claims();
    let count = |m| c.iter().filter(|x| x.multiplier == m).count();
    assert_eq!(count(Multiplier::TwoTilde), 33);
    assert_eq!(count(Multiplier::Eta), 61);
    assert_eq!(count(Multiplier::Nu), 32);
}

#[test]
fn every_row_passes_the_degree_check() {
    for c in claims() {
        let check = check_degrees(&c, names()).unwrap();
        assert!(check.passed, "{}: {:?}", c.id(), check.failures().collect::<Vec<_>>());
    }
}

#[test]
fn degree_check_states_the_arithmetic() {
    let c = claim("2 2~*nu*kappa@(17,23)");
    let check = check_degrees(&c, names()).unwrap();
    let text: Vec<&str> = check.checks.iter().map(|(_, s)| s.as_str()).collect();
    assert!(text.iter().any(|s| s.contains("z = h0*h2*d0 in Ext^{6,23}")), "{text:?}");
    assert!(text.iter().any(|s| s.contains("source weight 23 + 1 = 24")), "{text:?}");
}

#[test]
fn wrong_tau_power_fails_ingest_with_the_row() {
    let line = "ext 2 2~*nu*kappa@(17,23) => tau^2 eta*B*eps method=ctau lifts=h2*beta,h0*h2*beta z=h0*h2*d0\n";
    let err = ingest_claims_str(line, "bad.txt", names()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("bad.txt:1") && msg.contains("2 2~*nu*kappa@(17,23)"), "{msg}");
    assert!(msg.contains("target weight"), "{msg}");
}

#[test]
fn non_hidden_product_fails_ingest() {
    // eta*h1 is detected one filtration up: not hidden.
    let line = "ext eta eta@(1,2) => tau^0 eta^2 method=classical z=h1\n";
    let err = ingest_claims_str(line, "bad.txt", names()).unwrap_err();
    assert!(err.to_string().contains("hidden"), "{err}");
}

#[test]
fn claim_grammar_errors_name_the_line() {
    for bad in [
        "ext 3 eta@(1,2) => 0 method=none",
        "ext eta eta@(1,2) => tau^1 nu method=magic",
        "ext eta eta@(1,2) => tau^1 nu method=ctau",
        "ext eta eta@(1,2) => tau^1 nu method=classical colour=red",
        "ext eta eta(1,2) => 0 method=none",
    ] {
        let err = parse_claims(&format!("# c\n{bad}\n"), "c.txt").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{bad}: {err}");
    }
}

const REQUIRED: [&str; 11] = [
    "2 2~*nu*kappa@(17,23)",
    "2 nu1*kbar@(47,57)",
    "2 nu1*kappa*kbar@(61,75)",
    "2 2~*nu2*kappa@(65,79)",
    "2 nu1*kbar^2@(67,81)",
    "eta nu1*kbar@(47,57)",
    "eta nu1*kappa*kbar@(61,75)",
    "eta eta1^2*kappa@(64,78)",
    "eta nu1*kbar^2@(67,81)",
    "nu eta1^2*kappa@(64,78)",
    "nu 2~*nu2*kappa@(65,79)",
];

#[test]
fn required_ctau_extensions_verify() {
    let ev = evidence();
    for id in REQUIRED {
        let v = verify_ctau(&claim(id), &ev).unwrap();
        assert_eq!(v.status, Status::Verified, "{v}");
    }
}

#[test]
fn h0_times_h2_beta_is_h0_h2_beta() {
    let ev = evidence();
    let v = verify_ctau(&claim("2 2~*nu*kappa@(17,23)"), &ev).unwrap();
    assert!(v.diagnostics.iter().any(|d| d.contains("h0*h2*beta in Ext^{5,23} is nonzero")), "{v}");
    assert!(v.diagnostics.iter().any(|d| d.starts_with("(3)") && d.contains("equals")), "{v}");
    let v = verify_ctau(&claim("nu eta1^2*kappa@(64,78)"), &ev).unwrap();
    assert!(v.diagnostics.iter().any(|d| d.contains("h2*w2*e0 in Ext^{13,81} is nonzero")), "{v}");
}

#[test]
fn zero_target_lift_is_refuted() {
    let ev = evidence();
    let c = claim("nu eta1^2*kappa@(64,78)");
    let (zx, zy) = c.lifts.clone().unwrap();
    let x = ev.eval_ext(&zx).unwrap();
    let y = ev.eval_ext(&zy).unwrap();
    let zero = ExtClass::zero(ev.res, y.degree).unwrap();
    assert_eq!(verify_ctau_with(&c, &ev, &x, &y).unwrap().status, Status::Verified);
    let v = verify_ctau_with(&c, &ev, &x, &zero).unwrap();
    assert_eq!(v.status, Status::Refuted, "{v}");
}

#[test]
fn lift_with_the_wrong_multiplier_is_refuted() {
    let ev = evidence();
    // h1*w2 is the eta-lift; it sits one weight too high for the 2~-square.
    let mut c = claim("2 nu1*kbar@(47,57)");
    c.lifts = Some((Expr::parse("w2").unwrap(), Expr::parse("h1*w2").unwrap()));
    let v = verify_ctau(&c, &ev).unwrap();
    assert_eq!(v.status, Status::Refuted, "{v}");
    assert!(v.diagnostics.iter().any(|d| d.starts_with("(2)") && d.contains("expected Ext^{9,57}")), "{v}");
}

#[test]
fn lift_choice_does_not_matter() {
    // Lifts are defined up to permanent cycles (the kernel of the boundary
    // map); perturbing either one by such a class leaves the verdict alone.
    let ev = evidence();
    let mut perturbed = 0;
    for id in REQUIRED {
        let c = claim(id);
        let (zx, zy) = c.lifts.clone().unwrap();
        let (x, y) = (ev.eval_ext(&zx).unwrap(), ev.eval_ext(&zy).unwrap());
        for (i, s) in ev.chart.summands().iter().enumerate() {
            let u = ev.chart.class(i).unwrap();
            let (px, py) = if s.ext == x.degree {
                (x.sum(u).unwrap(), y.clone())
            } else if s.ext == y.degree {
                (x.clone(), y.sum(u).unwrap())
            } else {
                continue;
            };
            let v = verify_ctau_with(&c, &ev, &px, &py).unwrap();
            assert_eq!(v.status, Status::Verified, "{id} perturbed by {}: {v}", s.name);
            perturbed += 1;
        }
    }
    assert!(perturbed > 0, "no required extension has a permanent cycle next to its lifts");
}

#[test]
fn non_torsion_target_is_ambiguous() {
    let ev = evidence();
    let mut tried = 0;
    for id in REQUIRED {
        let c = claim(id);
        let at_y = c.product_position();
        let free = ev.chart.summands().iter().find(|s| {
            s.torsion == Torsion::Free && s.ext.stem() == at_y.stem && i64::from(s.ext.t) >= at_y.weight
        });
        let Some(s) = free else { continue };
        let mut bent = c.clone();
        bent.target = Some(ClaimTarget {
            tau: (i64::from(s.ext.t) - at_y.weight) as u32,
            element: Expr::parse(&format!("{{{}}}", s.name)).unwrap(),
            detected_by: None,
        });
        let v = verify_ctau(&bent, &ev).unwrap();
        assert_eq!(v.status, Status::Ambiguous, "{v}");
        assert!(v.diagnostics.iter().any(|d| d.starts_with("(1)") && d.contains("is not zero")), "{v}");
        tried += 1;
    }
    assert!(tried > 0);
}

#[test]
fn rows_beyond_the_chart_are_ingested_unchecked() {
    let ev = evidence();
    let v = verify_ctau(&claim("2 2~*nu6*kappa@(161,191)"), &ev).unwrap();
    assert_eq!(v.status, Status::IngestedUnchecked);
    assert!(v.diagnostics[0].contains("outside the computed region"), "{v}");
}

#[test]
fn relation_chains_are_consistent() {
    let all = claims();
    let rels = relations();
    for c in all.iter().filter(|c| c.method == Method::Relation) {
        let v = verify_relation(c, names(), &rels, &all).unwrap();
        assert_eq!(v.status, Status::Verified, "{v}");
    }
}

#[test]
fn step_in_the_wrong_weight_is_refuted() {
    let all = claims();
    let mut c = claim("2 nu1*kappa@(41,51)");
    // Drop the tau: same stem, one weight too high.
    *c.chain.last_mut().unwrap() = Expr::parse("eta*B*eps1").unwrap();
    let v = verify_relation(&c, names(), &relations(), &all).unwrap();
    assert_eq!(v.status, Status::Refuted, "{v}");
    assert!(v.diagnostics.iter().any(|d| d.contains("expected (41, 52)")), "{v}");
}

#[test]
fn missing_citation_is_ambiguous_and_named() {
    let all = claims();
    let mut c = claim("2 nu1*kappa@(41,51)");
    c.via.push(Citation::Relation("no-such-relation".into()));
    c.via.push(Citation::Extension(Multiplier::Nu, Expr::parse("kappa").unwrap()));
    let v = verify_relation(&c, names(), &relations(), &all).unwrap();
    assert_eq!(v.status, Status::Ambiguous, "{v}");
    let gap = v.diagnostics.last().unwrap();
    assert!(gap.contains("rel:no-such-relation") && gap.contains("ext:nu:kappa"), "{gap}");
}

#[test]
fn full_fixture_has_no_refutations() {
    let all = claims();
    let ev = evidence();
    let verdicts = verify_all(&all, &ev, &relations()).unwrap();
    let r = report(&all, &verdicts);
    assert!(r.conserved);
    assert_eq!(r.rows, 126);
    assert_eq!(r.count(Status::Refuted), 0, "{r}");
    assert_eq!(r.count(Status::Ambiguous), 0, "{r}");
    let total: usize = r.per_status.values().sum();
    assert_eq!(total, 126);
    for v in verdicts.iter().filter(|v| matches!(v.method, Method::Toda | Method::Classical | Method::None)) {
        assert_eq!(v.status, Status::IngestedUnchecked, "{v}");
    }
    for id in REQUIRED {
        assert!(verdicts.iter().any(|v| v.id == id && v.status == Status::Verified), "{id}");
    }
    let json = r.to_json();
    assert!(json.contains("\"INGESTED-UNCHECKED\"") && json.contains("\"rows\": 126"), "{json}");
    assert!(r.to_string().contains("eta: 61"));
}

#[test]
fn corrupted_lift_in_a_fixture_is_a_release_blocker() {
    let ev = evidence();
    let text = CLAIMS.replace("lifts=w2,h1*w2", "lifts=w2,h0*h2*w2");
    let all = parse_claims(&text, "claims.txt").unwrap();
    let verdicts = verify_all(&all, &ev, &relations()).unwrap();
    let r = report(&all, &verdicts);
    assert_eq!(r.refuted, vec!["eta nu1*kbar@(47,57)".to_string()], "{r}");
    assert!(r.to_string().contains("release blocker"));
}
