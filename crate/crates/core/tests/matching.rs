mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use morphkit_core::{match_state, VisSpec};
use support::{matching_state, oracle_match, parse_states, random_state, random_vis};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn agrees_with_reference(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_vis(&mut rng);
        let vis = VisSpec::from_tree(&tree).unwrap();
        let state = random_state(&mut rng, "s", &tree);
        let spec = &parse_states(&[&state])[0];
        let r = match_state(spec, &vis);
        prop_assert_eq!(r.matched, oracle_match(&state, &tree), "state {} vis {}", state, tree);
        prop_assert_eq!(r.matched, r.failures.is_empty());
    }

    #[test]
    fn derived_states_always_match(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_vis(&mut rng);
        let state = matching_state(&mut rng, "s", &tree);
        prop_assert!(oracle_match(&state, &tree));
        let r = match_state(&parse_states(&[&state])[0], &VisSpec::from_tree(&tree).unwrap());
        prop_assert!(r.matched, "{:?}", r.failures);
    }

    /// Dropping a constraint never turns a match into a mismatch.
    #[test]
    fn removing_a_term_is_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = random_vis(&mut rng);
        let vis = VisSpec::from_tree(&tree).unwrap();
        let state = random_state(&mut rng, "s", &tree);
        let mut looser = state.clone();
        let obj = looser.as_object_mut().unwrap();
        let key = obj.keys().find(|k| *k != "name").cloned();
        if let Some(k) = key {
            obj.remove(&k);
        }
        let strict = match_state(&parse_states(&[&state])[0], &vis).matched;
        let loose = match_state(&parse_states(&[&looser])[0], &vis).matched;
        prop_assert!(!strict || loose);
    }
}

#[test]
fn bindings_capture_wildcards() {
    let tree = json!({"mark": "cube", "width": 0.5,
                      "encoding": {"x": {"field": "a", "type": "quantitative"}},
                      "data": {"columns": [{"name": "a", "kind": "number"}], "rows": [[1]]}});
    let vis = VisSpec::from_tree(&tree).unwrap();
    let state = json!({"name": "s", "width": "*", "encoding": {"x": {"field": "*"}, "color": null}});
    let r = match_state(&parse_states(&[&state])[0], &vis);
    assert!(r.matched);
    let bound: Vec<String> = r.bindings.iter().map(|(p, v)| format!("{p}={v}")).collect();
    assert_eq!(bound, ["encoding.x.field=\"a\"", "width=0.5"]);
}

#[test]
fn failures_name_the_path() {
    let tree = json!({"mark": "sphere", "height": 0.3});
    let vis = VisSpec::from_tree(&tree).unwrap();
    let state = json!({"name": "s", "mark": "cube", "height": "> 0.5", "depth": "*"});
    let r = match_state(&parse_states(&[&state])[0], &vis);
    let paths: Vec<String> = r.failures.iter().map(|(p, _)| p.to_string()).collect();
    assert_eq!(paths, ["depth", "height", "mark"]);
}
