mod common;

use std::fmt::Write as _;

use vpcn::builder::{build_model, validate_model, ModelCounts};
use vpcn::ingest::parse_instance;
use vpcn::milp::{rat, Domain, Family, Symbol};
use vpcn::solution::{optimize, verify_solution, OptimizeConfig, SolutionStatus};

/// `n` nodes on a path, `t` transactions from the first node to the last.
fn path_instance(n: usize, max_level: usize, t: usize) -> String {
    let names: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
    let mut s = format!("nodes = {names:?}\nbudget = 5\nmax_level = {max_level}\n");
    for w in names.windows(2) {
        let _ = write!(s, "\n[[payment_channels]]\nendpoints = [{:?}, {:?}]\nbalance_1 = 10\nbalance_2 = 10\n", w[0], w[1]);
    }
    for k in 0..t {
        let _ = write!(s, "\n[[demand]]\nsource = {:?}\nreceiver = {:?}\namount = {}\n", names[0], names[n - 1], k + 1);
    }
    s
}

#[test]
fn variable_counts_follow_closed_form() {
    for n in 2..=6 {
        for max_level in 0..=3 {
            for t in 0..=4 {
                let inst = parse_instance(&path_instance(n, max_level, t)).unwrap();
                let pm = build_model(&inst).unwrap();
                let pairs = n * (n - 1);
                let triples = pairs * (n - 2);
                let m = max_level.min(n - 2);
                let want = ModelCounts {
                    pt: t * pairs,
                    vt: t * pairs,
                    x: t,
                    vc0: triples,
                    vc_upper: 3 * m * triples,
                    caps: triples + 3 * m * triples,
                };
                assert_eq!(ModelCounts::of(&pm.model), want, "n={n} M={max_level} T={t}");
                assert_eq!(pm.model.vars.len(), want.total());
                assert!(validate_model(&pm).is_empty(), "n={n} M={max_level} T={t}: {:?}", validate_model(&pm));
            }
        }
    }
}

#[test]
fn three_node_reference_counts() {
    let inst = parse_instance(&path_instance(3, 1, 2)).unwrap();
    let c = ModelCounts::of(&build_model(&inst).unwrap().model);
    assert_eq!((c.pt, c.vt, c.x, c.vc0, c.vc_upper, c.caps), (12, 12, 2, 6, 18, 24));
}

#[test]
fn dropping_any_family_is_detected() {
    let inst = parse_instance(&path_instance(4, 1, 2)).unwrap();
    let pm = build_model(&inst).unwrap();
    for family in Family::ALL.into_iter().filter(|f| *f != Family::Generic) {
        assert!(pm.model.constraints.iter().any(|c| c.tag.family == family), "{} not emitted", family.label());
        let mut mutated = pm.clone();
        mutated.model.constraints.retain(|c| c.tag.family != family);
        let violations = validate_model(&mutated);
        assert!(
            violations.iter().any(|v| v.what.starts_with(&family.label()) && v.detail == "constraint missing"),
            "dropping {} went unnoticed",
            family.label()
        );
    }
}

#[test]
fn dropping_a_single_row_is_detected() {
    let inst = parse_instance(&path_instance(4, 1, 1)).unwrap();
    let pm = build_model(&inst).unwrap();
    for k in (0..pm.model.constraints.len()).step_by(7) {
        let mut mutated = pm.clone();
        let removed = mutated.model.constraints.remove(k);
        let violations = validate_model(&mutated);
        assert!(violations.iter().any(|v| v.what == removed.tag.name()), "row {} not reported", removed.tag.name());
    }
}

#[test]
fn other_mutations_are_detected() {
    let inst = parse_instance(&path_instance(3, 1, 1)).unwrap();
    let pm = build_model(&inst).unwrap();

    let mut wrong_domain = pm.clone();
    let cap = wrong_domain.model.vars.iter().position(|v| matches!(v.symbol, Symbol::Cap0 { .. })).unwrap();
    wrong_domain.model.vars[cap].domain = Domain::Binary;
    assert!(!validate_model(&wrong_domain).is_empty());

    let mut stray = pm.clone();
    stray.model.add_var(Symbol::Aux("extra".into()), Domain::Binary);
    assert!(!validate_model(&stray).is_empty());

    let mut objective = pm.clone();
    objective.model.objective[0].0 = rat(999);
    assert!(!validate_model(&objective).is_empty());

    let mut duplicate = pm.clone();
    let row = duplicate.model.constraints[0].clone();
    duplicate.model.constraints.push(row);
    assert!(!validate_model(&duplicate).is_empty());
}

#[test]
fn optimal_solutions_satisfy_every_row_exactly() {
    let corpus = [
        common::corpus(41, 25, &common::PAYABLE),
        common::corpus(42, 25, &common::WIDE),
        common::corpus(43, 25, &common::RELAY_HEAVY),
    ]
    .concat();
    for (text, inst) in corpus {
        let solved = optimize(&inst, &OptimizeConfig::default()).unwrap();
        assert_eq!(solved.solution.status, SolutionStatus::Optimal);
        let violations = verify_solution(&solved.model, &solved.solution);
        assert!(violations.is_empty(), "{violations:?}\n{text}");
    }
}
