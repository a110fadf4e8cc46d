use proptest::prelude::*;

use l4dec::stats::{mean, wilson_interval, Z95};
use l4dec::svg::{scatter, viridis, Heatmap};

#[test]
fn wilson_closed_forms() {
    // Zero successes: the upper end is z²/(n + z²).
    let (lo, hi) = wilson_interval(0, 10, Z95);
    assert_eq!(lo, 0.0);
    assert!((hi - Z95 * Z95 / (10.0 + Z95 * Z95)).abs() < 1e-12);
    // Half the trials: symmetric around 1/2.
    let (lo, hi) = wilson_interval(5, 10, Z95);
    assert!((lo + hi - 1.0).abs() < 1e-12);
    assert!((hi - 0.763_406_909_487).abs() < 1e-9);
    assert_eq!(wilson_interval(0, 0, Z95), (0.0, 1.0));
}

#[test]
fn mean_of_empty_is_none() {
    assert_eq!(mean(&[]), None);
    assert_eq!(mean(&[1.0, 2.0, 6.0]), Some(3.0));
}

#[test]
fn viridis_hits_its_stops() {
    assert_eq!(viridis(0.0), "#440154");
    assert_eq!(viridis(1.0), "#fde725");
    assert_eq!(viridis(3.0 / 7.0), "#277f8e");
    assert_eq!(viridis(-1.0), viridis(0.0));
    assert_eq!(viridis(f64::NAN), "#bbbbbb");
}

#[test]
fn heatmap_canvas_and_timestamp() {
    let map = Heatmap {
        title: "t",
        x_label: "x",
        y_label: "y",
        x_ticks: vec!["a".into(), "b".into()],
        y_ticks: vec!["1".into()],
        values: vec![vec![0.0, 1.0]],
        range: (0.0, 1.0),
    };
    let plain = map.render(None);
    assert!(plain.contains(r#"viewBox="0 0 600 480""#));
    assert!(!plain.contains("<metadata>"));
    assert_eq!(plain.matches("<title>").count(), 2);
    assert!(map.render(Some("now")).contains("<metadata>generated now</metadata>"));
    let s = scatter("s", "x", "y", &[(0.1, -1.0), (0.5, 2.0)], &[0.25], None);
    assert_eq!(s.matches("<circle").count(), 2);
}

proptest! {
    #[test]
    fn wilson_brackets_the_estimate(n in 1usize..500, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).round() as usize;
        let (lo, hi) = wilson_interval(k, n, Z95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }
}
