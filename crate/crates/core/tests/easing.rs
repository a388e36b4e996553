use morphkit_core::Easing;

const GRID: usize = 1001;

fn grid() -> impl Iterator<Item = f64> {
    (0..GRID).map(|i| i as f64 / (GRID - 1) as f64)
}

#[test]
fn endpoints_are_exact() {
    for e in Easing::ALL {
        assert_eq!(e.apply(0.0), 0.0, "{}", e.as_str());
        assert_eq!(e.apply(1.0), 1.0, "{}", e.as_str());
    }
}

#[test]
fn monotone_and_bounded_on_grid() {
    for e in Easing::ALL {
        let values: Vec<f64> = grid().map(|t| e.apply(t)).collect();
        assert!(values.iter().all(|v| (0.0..=1.0).contains(v)), "{}", e.as_str());
        assert!(values.windows(2).all(|w| w[0] <= w[1]), "{} is not monotone", e.as_str());
    }
}

#[test]
fn known_values() {
    assert_eq!(Easing::Linear.apply(0.3), 0.3);
    assert_eq!(Easing::EaseInQuad.apply(0.5), 0.25);
    assert_eq!(Easing::EaseOutQuad.apply(0.5), 0.75);
    assert_eq!(Easing::EaseInCubic.apply(0.5), 0.125);
    assert_eq!(Easing::EaseOutCubic.apply(0.5), 0.875);
    assert_eq!(Easing::EaseInOutQuad.apply(0.5), 0.5);
    assert_eq!(Easing::EaseInOutCubic.apply(0.5), 0.5);
}

#[test]
fn in_out_curves_are_symmetric() {
    for e in [Easing::EaseInOutQuad, Easing::EaseInOutCubic] {
        for t in grid() {
            assert!((e.apply(t) + e.apply(1.0 - t) - 1.0).abs() < 1e-12, "{} at {t}", e.as_str());
        }
    }
}

#[test]
fn names_round_trip() {
    for e in Easing::ALL {
        assert_eq!(e.as_str().parse::<Easing>(), Ok(e));
    }
    assert!("bounce".parse::<Easing>().is_err());
}
