mod common;

use proptest::prelude::*;

use dpnalign_core::cluster::{extract_atoms, signature, traces_equivalent};
use dpnalign_core::cost::PenaltyFunctions;
use dpnalign_core::encode::{compute_bound, encode, EncodeOptions};
use dpnalign_core::fixtures::running_example;
use dpnalign_core::log::{Event, LogTrace};
use dpnalign_core::model::Value;
use dpnalign_core::solver::{minimize, Session, Strategy as Search, Verdict};

fn arb_trace() -> impl Strategy<Value = LogTrace> {
    let event = (prop::sample::select(vec!["a", "b", "d"]), prop::option::of(-2i64..6), prop::option::of(-2i64..6))
        .prop_map(|(act, x, y)| {
            let mut kv = Vec::new();
            if let Some(x) = x {
                kv.push(("x".to_string(), Value::int(x)));
            }
            if let Some(y) = y {
                kv.push(("y".to_string(), Value::int(y)));
            }
            Event::new(act, kv)
        });
    prop::collection::vec(event, 0..4).prop_map(|es| LogTrace::new("t", es))
}

fn profile() -> impl Strategy<Value = PenaltyFunctions> {
    prop::sample::select(vec![PenaltyFunctions::Standard, PenaltyFunctions::Levenshtein])
}

proptest! {
    #[test]
    fn constant_comparison_equivalence_is_an_equivalence(a in arb_trace(), b in arb_trace(), c in arb_trace()) {
        let atoms = extract_atoms(&running_example());
        prop_assert!(traces_equivalent(&a, &a, &atoms));
        prop_assert_eq!(traces_equivalent(&a, &b, &atoms), traces_equivalent(&b, &a, &atoms));
        if traces_equivalent(&a, &b, &atoms) && traces_equivalent(&b, &c, &atoms) {
            prop_assert!(traces_equivalent(&a, &c, &atoms));
        }
        prop_assert_eq!(traces_equivalent(&a, &b, &atoms), signature(&a, &atoms) == signature(&b, &atoms));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn solver_models_satisfy_every_assertion(seed in 0u64..5000, pf in profile()) {
        let Some(inst) = common::random_instance(seed) else { return Ok(()) };
        let a = encode(&inst.dpn, &inst.trace, common::MAX_LEN, pf, EncodeOptions::default()).unwrap();
        let mut s = Session::start(&common::solver()).unwrap();
        s.load(&a).unwrap();
        prop_assert!(matches!(s.check_sat().unwrap(), Verdict::Sat(_)));
        let names: Vec<String> = a.vars.iter().map(|v| v.name.clone()).collect();
        let model = s.get_values(&a, &names).unwrap();
        prop_assert_eq!(a.first_violation(&|n| model.get(n).cloned()), None);
    }

    #[test]
    fn binary_and_linear_search_agree(seed in 0u64..5000, pf in profile()) {
        let Some(inst) = common::random_instance(seed) else { return Ok(()) };
        let n = compute_bound(&inst.dpn, &inst.trace, Some(common::MAX_LEN)).unwrap();
        let a = encode(&inst.dpn, &inst.trace, n, pf, EncodeOptions::default()).unwrap();
        let value = |strategy| {
            let mut s = Session::start(&common::solver()).unwrap();
            minimize(&mut s, &a, strategy).unwrap().map(|m| (m.value, m.optimal))
        };
        prop_assert_eq!(value(Search::Binary), value(Search::Linear));
    }
}
