mod support;

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use morphkit_core::keyframes::{create_final, create_initial};
use morphkit_core::VisSpec;
use support::{matching_state, oracle_final, parse_states, random_state, related, state_leaves, tree_leaves};

fn case(seed: u64) -> (Value, Value, Value) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vis = support::random_vis(&mut rng);
    let s_i = matching_state(&mut rng, "a", &vis);
    let s_f = random_state(&mut rng, "b", &vis);
    (vis, s_i, s_f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn merge_agrees_with_reference(seed in any::<u64>()) {
        let (vis, s_i, s_f) = case(seed);
        let states = parse_states(&[&s_i, &s_f]);
        let kf_i = create_initial(&Arc::new(VisSpec::from_tree(&vis).unwrap()), &states[0]).unwrap();
        let expected = oracle_final(&vis, &s_i, &s_f);
        match create_final(&kf_i, &states[0], &states[1], None) {
            Ok(p) => {
                prop_assert!(p.placeholders.is_empty());
                prop_assert_eq!(&p.tree, &expected, "s_i {} s_f {}", s_i, s_f);
            }
            Err(e) => prop_assert!(
                VisSpec::from_tree(&expected).is_err(),
                "rejected a valid merge {}: {}", expected, e
            ),
        }
    }

    /// Paths neither state mentions come through untouched.
    #[test]
    fn frame_axiom(seed in any::<u64>()) {
        let (vis, s_i, s_f) = case(seed);
        let states = parse_states(&[&s_i, &s_f]);
        let kf_i = create_initial(&Arc::new(VisSpec::from_tree(&vis).unwrap()), &states[0]).unwrap();
        let Ok(p) = create_final(&kf_i, &states[0], &states[1], None) else { return Ok(()) };
        let named: Vec<Vec<String>> = state_leaves(&s_i).into_iter().chain(state_leaves(&s_f)).map(|(p, _)| p).collect();
        for (path, value) in tree_leaves(&vis) {
            if named.iter().any(|n| related(n, &path)) {
                continue;
            }
            let got = path.iter().try_fold(&p.tree, |node, seg| node.get(seg));
            prop_assert_eq!(got, Some(&value), "path {:?}", path);
        }
    }

    /// Initial keyframes are the live spec, byte for byte.
    #[test]
    fn initial_is_identity(seed in any::<u64>()) {
        let (vis, s_i, _) = case(seed);
        let spec = Arc::new(VisSpec::from_tree(&vis).unwrap());
        let kf = create_initial(&spec, &parse_states(&[&s_i])[0]).unwrap();
        prop_assert_eq!(kf.spec.to_json_string(), spec.to_json_string());
    }
}

#[test]
fn mismatched_initial_is_rejected() {
    let vis = serde_json::json!({"mark": "cube"});
    let s = serde_json::json!({"name": "a", "mark": "sphere"});
    let spec = Arc::new(VisSpec::from_tree(&vis).unwrap());
    assert!(create_initial(&spec, &parse_states(&[&s])[0]).is_err());
}
