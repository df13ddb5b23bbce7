use std::time::Duration;

use dpnalign_core::cost::{standard_profile, PenaltyFunctions};
use dpnalign_core::encode::{encode, EncodeOptions};
use dpnalign_core::fixtures::{ab_trace, gadget_trace, running_example, sat_gadget};
use dpnalign_core::model::{Expr, Value};
use dpnalign_core::solver::{check, minimize, Session, SolverConfig, Strategy, Verdict};

fn z3() -> SolverConfig {
    SolverConfig::new("z3").with_timeout(Duration::from_secs(60))
}

fn optimum(net: &dpnalign_core::model::Dpn, trace: &dpnalign_core::log::LogTrace, n: usize, strategy: Strategy) -> u64 {
    let a = encode(net, trace, n, standard_profile(), EncodeOptions::default()).unwrap();
    let mut s = Session::start(&z3()).unwrap();
    let min = minimize(&mut s, &a, strategy).unwrap().unwrap();
    assert!(min.optimal);
    min.value
}

#[test]
fn running_example_optima() {
    let net = running_example();
    for strategy in [Strategy::Binary, Strategy::Linear, Strategy::Native] {
        assert_eq!(optimum(&net, &ab_trace("e1", 2, 1), 4, strategy), 0);
        assert_eq!(optimum(&net, &ab_trace("e3", 4, 1), 4, strategy), 1);
        assert_eq!(optimum(&net, &ab_trace("e4", 3, 2), 4, strategy), 0);
    }
}

#[test]
fn unsatisfiable_formula_costs_two() {
    let p = Expr::var("p", dpnalign_core::model::Ann::Read);
    let f = Expr::And(vec![p.clone(), Expr::Not(Box::new(p))]);
    let net = sat_gadget(&f, &["p"]);
    let a = encode(&net, &gadget_trace(), 1, standard_profile(), EncodeOptions::default()).unwrap();
    let mut s = Session::start(&z3()).unwrap();
    assert_eq!(minimize(&mut s, &a, Strategy::Binary).unwrap().unwrap().value, 2);
}

#[test]
fn plain_check_returns_decoder_symbols() {
    let net = running_example();
    let a = encode(&net, &ab_trace("e", 2, 1), 4, PenaltyFunctions::Standard, EncodeOptions::none()).unwrap();
    let mut s = Session::start(&z3()).unwrap();
    let Verdict::Sat(v) = check(&mut s, &a).unwrap() else { panic!("expected sat") };
    for name in a.decode_vars() {
        assert!(v.contains_key(&name), "{name}");
    }
    assert!(matches!(v[&a.steps[0]], Value::Int(_)));
}

#[test]
fn bound_too_small_is_unsat() {
    let net = running_example();
    let a = encode(&net, &ab_trace("e", 2, 1), 1, standard_profile(), EncodeOptions::default()).unwrap();
    let mut s = Session::start(&z3()).unwrap();
    assert_eq!(minimize(&mut s, &a, Strategy::Binary).unwrap(), None);
}
