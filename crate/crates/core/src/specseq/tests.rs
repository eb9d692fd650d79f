use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::resolution::{name_generators, GeneratorSpec};

const SEEDS: &str = include_str!("../../../../fixtures/seeds.txt");

struct Fixture {
    res: Resolution,
    naming: Naming,
}

fn small() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let res = Resolution::compute(16, 60).unwrap();
        let naming = name_generators(&res, &GeneratorSpec::defaults()).unwrap();
        Fixture { res, naming }
    })
}

fn large() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let res = Resolution::compute(30, 120).unwrap();
        let naming = name_generators(&res, &GeneratorSpec::defaults()).unwrap();
        Fixture { res, naming }
    })
}

fn full_run() -> &'static SpectralSequence<'static> {
    static S: OnceLock<SpectralSequence<'static>> = OnceLock::new();
    S.get_or_init(|| {
        let f = large();
        let seeds = parse_seeds(SEEDS, "seeds.txt").unwrap();
        SpectralSequence::run(&f.res, &f.naming, &seeds).unwrap()
    })
}

fn class(f: &Fixture, expr: &str) -> ExtClass {
    f.naming.eval_expression(&f.res, expr).unwrap()
}

/// Fate of a single class, read off the pages.
fn fate(ss: &SpectralSequence<'_>, x: &ExtClass) -> KillRecord {
    for r in 2..=LAST_PAGE {
        if ss.page(r + 1).unwrap().is_boundary(x) {
            return KillRecord::Target(r);
        }
    }
    for r in 2..=LAST_PAGE {
        if !ss.page(r + 1).unwrap().is_cycle(x) {
            return KillRecord::Source(r);
        }
    }
    KillRecord::Survives
}

#[test]
fn seed_lines_resolve_to_bidegrees() {
    let f = small();
    let file = parse_seeds("d2 alpha -> h2*w1\nd4 d0*e0 -> w1^2*d0\n", "t").unwrap();
    let recs = check_seeds(&file, &f.naming, &f.res).unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0].source.degree, Bidegree::new(3, 15));
    assert_eq!(recs[0].target.degree, Bidegree::new(5, 16));
    assert_eq!(recs[1].source.degree, Bidegree::new(8, 39));
    assert_eq!(recs[1].target.degree, Bidegree::new(12, 42));
    assert_eq!(recs[1].origin, Origin::Seed { line: 2 });
}

#[test]
fn misplaced_target_is_rejected_with_its_line() {
    let f = small();
    let file = parse_seeds("# header\n\nd2 alpha -> h1*w1\n", "bad.txt").unwrap();
    let msg = check_seeds(&file, &f.naming, &f.res).unwrap_err().to_string();
    assert!(msg.starts_with("bad.txt:3:"), "{msg}");
    // h1*w1 sits at (1, 2) + (4, 12).
    assert!(msg.contains("must land in (5, 16)") && msg.contains("is in (5, 14)"), "{msg}");
}

#[test]
fn unknown_names_are_rejected() {
    let f = small();
    let file = parse_seeds("d2 kappa -> 0\n", "t").unwrap();
    let msg = check_seeds(&file, &f.naming, &f.res).unwrap_err().to_string();
    assert!(msg.contains("kappa"), "{msg}");
}

#[test]
fn grammar() {
    let file = parse_seeds("# c\nd3 w2^2 -> beta^3*gamma^2\nassume-zero: alpha*beta d3\nd4 g -> 0\n", "t").unwrap();
    assert_eq!(
        file.seeds[0],
        SeedLine { line: 2, page: 3, source: "w2^2".into(), target: Some("beta^3*gamma^2".into()) }
    );
    assert_eq!(file.seeds[1].target, None);
    assert_eq!(file.assume_zero, vec![AssumeZero { line: 3, page: 3, source: "alpha*beta".into() }]);
    for bad in ["d5 h0 -> 0", "d2 h0", "d2 h0 h1 -> 0", "h0 -> 0", "d2 h0 -> h1 h2", "assume-zero: h0"] {
        let err = parse_seeds(bad, "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{bad}: {err}");
    }
}

#[test]
fn the_fixture_has_one_line_per_table_cell() {
    let file = parse_seeds(SEEDS, "seeds.txt").unwrap();
    // Twenty-one rows, one line per page while the class is still a cycle,
    // plus one supplementary line.
    assert_eq!(file.seeds.len(), 53 + 1);
    assert!(file.assume_zero.is_empty());
    let nonzero: Vec<_> = file.seeds.iter().filter(|s| s.target.is_some()).collect();
    assert_eq!(nonzero.len(), 9);
}

#[test]
fn every_seed_holds_on_its_page() {
    let f = large();
    let ss = full_run();
    let file = parse_seeds(SEEDS, "seeds.txt").unwrap();
    let mut checked = 0;
    for rec in check_seeds(&file, &f.naming, &f.res).unwrap() {
        if !ss.is_valid(rec.source.degree) {
            continue;
        }
        let y = ss.differential(rec.page, &rec.source).unwrap();
        let diff = y.sum(&rec.target).unwrap();
        assert!(ss.page(rec.page).unwrap().is_boundary(&diff), "{rec:?}");
        checked += 1;
    }
    assert!(checked >= 50, "{checked}");
}

#[test]
fn blank_rows_survive() {
    let f = large();
    let ss = full_run();
    for name in ["h0", "h1", "h2", "c0", "w1", "d0", "g", "gamma", "delta"] {
        let x = class(f, name);
        assert_eq!(fate(ss, &x), KillRecord::Survives, "{name}");
    }
}

#[test]
fn kill_records_of_table_classes() {
    let f = large();
    let ss = full_run();
    let cases = [
        ("alpha", KillRecord::Source(2)),
        ("h2*w1", KillRecord::Target(2)),
        ("beta", KillRecord::Source(2)),
        ("h0*d0", KillRecord::Target(2)),
        ("alpha^2", KillRecord::Source(3)),
        ("h1*w1*d0", KillRecord::Target(3)),
        ("e0", KillRecord::Source(3)),
        ("w1*c0", KillRecord::Target(3)),
        ("d0*e0", KillRecord::Source(4)),
        ("w1^2*d0", KillRecord::Target(4)),
        ("w2", KillRecord::Source(2)),
        ("alpha*beta*g", KillRecord::Target(2)),
        ("w2^2", KillRecord::Source(3)),
        ("alpha^4", KillRecord::Survives),
        ("h1", KillRecord::Survives),
    ];
    for (expr, want) in cases {
        let x = class(f, expr);
        assert_eq!(fate(ss, &x), want, "{expr}");
        let records = ss.kill_records(x.degree).unwrap();
        assert!(records.iter().any(|c| c.record == want), "{expr}: {records:?}");
    }
    assert_eq!(class(f, "w1^2*d0").degree, Bidegree::new(12, 42));
    assert_eq!(class(f, "h1").degree, Bidegree::new(1, 2));
}

#[test]
fn kill_records_form_a_basis() {
    let ss = full_run();
    for d in ss.page(2).unwrap().bidegrees().filter(|&d| ss.is_valid(d)) {
        let records = ss.kill_records(d).unwrap();
        assert_eq!(records.len(), ss.resolution().ext_dim(d).unwrap(), "{d}");
        let survivors = records.iter().filter(|c| c.record == KillRecord::Survives).count();
        assert_eq!(survivors, ss.e_infinity().unwrap().dim(d), "{d}");
    }
    let edge = Bidegree::new(29, 100);
    assert!(matches!(ss.kill_records(edge), Err(Error::Region(_))));
}

#[test]
fn d2_drops_the_h2w1_column_by_one() {
    let ss = full_run();
    let d = Bidegree::new(5, 16);
    assert_eq!(ss.page(3).unwrap().dim(d), ss.page(2).unwrap().dim(d) - 1);
}

/// Each page's rank out of a source equals the rank into its target.
#[test]
fn ranks_balance() {
    let ss = full_run();
    for r in 2..=LAST_PAGE {
        let (now, next) = (ss.page(r).unwrap(), ss.page(r + 1).unwrap());
        for d in now.bidegrees() {
            let tgt = target_of(d, r);
            if !ss.resolution().contains(tgt) {
                continue;
            }
            let lost = now.cycles(d).len() - next.cycles(d).len();
            let hit = next.boundaries(tgt).len() - now.boundaries(tgt).len();
            assert_eq!(lost, hit, "d{r} from {d}");
        }
    }
}

#[test]
fn differentials_square_to_zero() {
    let ss = full_run();
    for r in 2..=LAST_PAGE {
        let page = ss.page(r).unwrap();
        for d in page.bidegrees().filter(|&d| ss.is_valid(d)) {
            for z in page.cycles(d) {
                let y = ss.differential(r, &ExtClass::new(d, z)).unwrap();
                if !ss.resolution().contains(target_of(y.degree, r)) {
                    continue;
                }
                let yy = ss.differential(r, &y).unwrap();
                assert!(page.is_boundary(&yy), "d{r} d{r} at {d}");
            }
        }
    }
}

/// Random products of page-r cycles obey `d(xy) = d(x)y + x d(y)`.
#[test]
fn leibniz_rule_on_random_products() {
    let ss = full_run();
    let res = ss.resolution();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for r in 2..=LAST_PAGE {
        let page = ss.page(r).unwrap();
        let cells: Vec<Bidegree> = page
            .bidegrees()
            .filter(|&d| page.cycles(d).len() > page.boundaries(d).len())
            .collect();
        let mut tested = 0;
        while tested < 150 {
            let (a, b) = (cells[rng.gen_range(0..cells.len())], cells[rng.gen_range(0..cells.len())]);
            let p = a.checked_add(b);
            if !ss.is_valid(p) || !ss.is_valid(target_of(p, r)) {
                continue;
            }
            let pick = |d: Bidegree, rng: &mut ChaCha8Rng| {
                let mut v = F2Vector::zeros(res.ext_dim(d).unwrap());
                for z in page.cycles(d) {
                    if rng.gen_bool(0.5) {
                        v.add_assign(&z);
                    }
                }
                ExtClass::new(d, v)
            };
            let (x, y) = (pick(a, &mut rng), pick(b, &mut rng));
            let xy = res.multiply(&x, &y).unwrap();
            let lhs = ss.differential(r, &xy).unwrap();
            let dx = res.multiply(&ss.differential(r, &x).unwrap(), &y).unwrap();
            let dy = res.multiply(&x, &ss.differential(r, &y).unwrap()).unwrap();
            let diff = lhs.sum(&dx).unwrap().sum(&dy).unwrap();
            assert!(page.is_boundary(&diff), "d{r} on {a} x {b}");
            tested += 1;
        }
    }
}

#[test]
fn results_do_not_depend_on_the_range() {
    let big = full_run();
    let res = Resolution::compute(30, 110).unwrap();
    let naming = name_generators(&res, &GeneratorSpec::defaults()).unwrap();
    let seeds = parse_seeds(SEEDS, "seeds.txt").unwrap();
    let ss = SpectralSequence::run(&res, &naming, &seeds).unwrap();
    let e = ss.e_infinity().unwrap();
    let mut compared = 0;
    for d in e.bidegrees().filter(|&d| ss.is_valid(d)) {
        assert_eq!(e.dim(d), big.e_infinity().unwrap().dim(d), "{d}");
        let fates = |s: &SpectralSequence<'_>| {
            let mut v: Vec<KillRecord> = s.kill_records(d).unwrap().iter().map(|c| c.record).collect();
            v.sort();
            v
        };
        assert_eq!(fates(&ss), fates(big), "{d}");
        compared += 1;
    }
    assert!(compared > 400);
}

#[test]
fn alpha_alone_propagates_along_products() {
    let f = small();
    let seeds = parse_seeds("d2 alpha -> h2*w1\n", "t").unwrap();
    let mut ss = SpectralSequence::new(&f.res, &f.naming, &seeds).unwrap();
    ss.leibniz_closure().unwrap();
    let lines = ss.log_lines();
    assert!(lines.contains(&"d2 alpha -> h2*w1 [seed line 1]".to_string()), "{lines:?}");
    assert!(lines.contains(&"d2 w1*alpha -> h2*w1^2 [leibniz alpha * w1]".to_string()), "{lines:?}");
    assert!(lines.contains(&"d2 h0*alpha -> h0*h2*w1 [leibniz h0 * alpha]".to_string()), "{lines:?}");
    // g is a d2-cycle, and h2*w1*g already vanishes in E2, so alpha*g is a d2-cycle.
    assert!(class(f, "h2*w1*g").is_zero());
    let ag = class(f, "alpha*g");
    assert!(!ag.is_zero());
    assert!(ss.differential(2, &ag).unwrap().is_zero());
}

#[test]
fn empty_seed_file_lists_the_classes_it_needs() {
    let f = small();
    let seeds = parse_seeds("", "empty").unwrap();
    let mut ss = SpectralSequence::new(&f.res, &f.naming, &seeds).unwrap();
    match ss.leibniz_closure() {
        Err(Error::Undetermined { page: 2, classes }) => {
            assert!(classes.iter().any(|c| c == "alpha"), "{classes:?}")
        }
        other => panic!("{other:?}"),
    }
    let mut lenient = SpectralSequence::new(&f.res, &f.naming, &seeds).unwrap();
    lenient.set_lenient(true);
    lenient.leibniz_closure().unwrap();
    assert!(lenient.residue().iter().any(|(r, d, c)| *r == 2 && *d == Bidegree::new(3, 15) && c == "alpha"));
}

#[test]
fn contradicting_derivations_are_fatal() {
    let f = small();
    let seeds = parse_seeds("d2 alpha -> h2*w1\nd2 h0*alpha -> 0\n", "t").unwrap();
    let mut ss = SpectralSequence::new(&f.res, &f.naming, &seeds).unwrap();
    let msg = ss.leibniz_closure().unwrap_err().to_string();
    assert!(msg.starts_with("consistency failure: d2 on h0*alpha"), "{msg}");
    assert!(msg.contains("seed line 2") && msg.contains("h0*h2*w1"), "{msg}");
}

#[test]
fn seeds_must_live_on_their_page() {
    let f = small();
    let seeds = parse_seeds("d2 alpha -> h2*w1\nd3 alpha -> 0\n", "t").unwrap();
    let mut ss = SpectralSequence::new(&f.res, &f.naming, &seeds).unwrap();
    ss.turn_page().unwrap();
    let msg = ss.leibniz_closure().unwrap_err().to_string();
    assert!(msg.contains("seed line 2: alpha does not survive to E3"), "{msg}");

    let seeds = parse_seeds("d2 beta -> h0*d0\nd2 alpha -> h0*h2*w1\n", "t").unwrap();
    let msg = check_seeds(&seeds, &f.naming, &f.res).unwrap_err().to_string();
    assert!(msg.contains("t:2"), "{msg}");
}

#[test]
fn queries_respect_the_range() {
    let f = small();
    let seeds = parse_seeds("d2 alpha -> h2*w1\n", "t").unwrap();
    let mut ss = SpectralSequence::new(&f.res, &f.naming, &seeds).unwrap();
    let x = class(f, "alpha");
    assert!(matches!(ss.differential(2, &x), Err(Error::Contract(_))));
    assert!(matches!(ss.e_infinity(), Err(Error::Contract(_))));
    ss.leibniz_closure().unwrap();
    let edge = class(f, "h0^16");
    assert_eq!(edge.degree, Bidegree::new(16, 16));
    assert!(matches!(ss.differential(2, &edge), Err(Error::Region(_))));
}

#[test]
fn trust_annotations_pair_nonzero_groups() {
    let ss = full_run();
    let e = ss.e_infinity().unwrap();
    for (r, src, tgt) in ss.trust_annotations().unwrap() {
        assert!(r > LAST_PAGE && ss.is_valid(src));
        assert_eq!(tgt, target_of(src, r));
        assert!(e.dim(src) > 0 && e.dim(tgt) > 0);
    }
}
