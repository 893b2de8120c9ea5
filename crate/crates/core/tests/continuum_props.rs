use agenda_core::continuum::*;
use agenda_core::rng::{RngSpec, StreamFamily};
use proptest::prelude::*;

fn eval(m: u32, eta: f64, precision: PrecisionConfig) -> WinProbability {
    p_win_continuous(ContinuousParams::new(m, eta).unwrap(), precision).unwrap()
}

/// Direct double sum of multinomial terms, with factorials as products.
fn naive_p(m: u32, eta: f64) -> f64 {
    let ln_fact = |k: u32| (1..=k).map(|j| f64::from(j).ln()).sum::<f64>();
    let mut p = 0.0;
    for s in 2..=(m.saturating_sub(1)) / 2 {
        for t in 2..=m - s {
            let r = m - s - t;
            let ln = ln_fact(m) - ln_fact(s) - ln_fact(t) - ln_fact(r)
                + f64::from(s + t) * eta.ln()
                + f64::from(r) * (1.0 - 2.0 * eta).ln();
            p += ln.exp();
        }
    }
    p
}

#[test]
fn matches_direct_summation() {
    for m in [5, 6, 11, 20, 31, 60] {
        for eta in [0.1, 0.2, 0.3, 0.4] {
            let w = eval(m, eta, PrecisionConfig::Machine);
            let want = naive_p(m, eta);
            assert!((w.p - want).abs() < 1e-12, "m={m} eta={eta}: {} vs {want}", w.p);
        }
    }
}

#[test]
fn complement_is_consistent() {
    for m in 1..=200 {
        for k in 1..=9 {
            let w = eval(m, 0.05 * f64::from(k), PrecisionConfig::Machine);
            assert!((w.p + w.q - 1.0).abs() < 1e-12, "m={m} k={k}: {}", w.p + w.q);
        }
    }
}

#[test]
fn boundary_behaviour() {
    assert!(eval(21, 1e-4, PrecisionConfig::Machine).p < 1e-4);
    assert!(eval(21, 0.4999, PrecisionConfig::Machine).p <= 0.52);
}

#[test]
fn probability_grows_with_the_electorate() {
    let mut last = 0.0;
    for m in (5..=101).step_by(2) {
        let p = eval(m, 0.25, PrecisionConfig::Machine).p;
        assert!(p >= last, "m={m}");
        last = p;
    }
}

#[test]
fn extended_agrees_with_machine() {
    let extended = PrecisionConfig::extended(DEFAULT_DIGITS).unwrap();
    for m in [7, 15, 31, 45] {
        for eta in [0.15, 0.25, 0.35] {
            let a = eval(m, eta, PrecisionConfig::Machine);
            let b = eval(m, eta, extended);
            if a.q > 1e-10 {
                assert!(((a.p - b.p) / b.p).abs() < 1e-10, "m={m} eta={eta}");
            }
            assert!(((a.q - b.q) / b.q).abs() < 1e-9, "q m={m} eta={eta}");
        }
    }
}

#[test]
fn optimizer_errors_and_table() {
    assert!(optimize_eta_win(4, EtaGrid::default(), PrecisionConfig::Machine).is_err());
    let rows = decay_table(&[21, 61], EtaGrid::default(), PrecisionConfig::Machine).unwrap();
    assert!((rows[0].eta_star - 0.2815).abs() < 1e-3, "{:?}", rows[0]);
    assert!((rows[0].log10_q + 1.48).abs() < 0.05, "{:?}", rows[0]);
    assert!((rows[1].eta_star - 0.2330).abs() < 1e-3, "{:?}", rows[1]);
    assert!((rows[1].log10_q + 5.19).abs() < 0.05, "{:?}", rows[1]);
}

#[test]
fn uniforms_look_uniform() {
    let spec = RngSpec::new(21);
    let sample = sample_uniform_points(100_000, &mut spec.stream(StreamFamily::Scan, 0)).unwrap();
    let again = sample_uniform_points(100_000, &mut spec.stream(StreamFamily::Scan, 0)).unwrap();
    assert_eq!(sample, again);
    let mean = sample.points().iter().sum::<f64>() / 1e5;
    assert!((mean - 0.5).abs() < 0.005, "{mean}");
    let ks = sample
        .sorted()
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / 1e5).abs().max(((i + 1) as f64 / 1e5 - x).abs()))
        .fold(0.0, f64::max);
    assert!(ks < 0.006, "{ks}");
}

#[test]
fn continuous_universal_estimates() {
    let e = estimate_p2_continuous(5, 0.3, 10_000, &RngSpec::new(1)).unwrap();
    assert_eq!(e.successes, 0);
    let o = optimize_eta_universal(21, EtaGrid::default(), 20_000, 100_000, &RngSpec::new(2)).unwrap();
    assert!((o.eta_star - 0.2725).abs() < 0.01, "{}", o.eta_star);
    assert!((o.validated.p_hat - 0.6399).abs() < 0.005, "{}", o.validated.p_hat);
}

/// Brute-force count over each window, anchored at every point.
fn naive_universal(points: &[f64], eta: f64) -> bool {
    let m = points.len();
    let inside = |u: f64, x: f64, closed: bool| {
        let d = (x - u).rem_euclid(1.0);
        (closed || d > 0.0) && d < eta
    };
    points.iter().all(|&u| {
        let open = points.iter().filter(|&&x| inside(u, x, false)).count();
        let half = points.iter().filter(|&&x| inside(u, x, true)).count();
        open >= 2 && 2 * half < m
    })
}

proptest! {
    #[test]
    fn window_search_matches_brute_force(
        points in prop::collection::vec(0.0f64..1.0, 1..30),
        eta in 0.01f64..0.49,
    ) {
        let sample = UniformSample::new(points.clone()).unwrap();
        prop_assert_eq!(universal_event_continuous(&sample, eta).unwrap(), naive_universal(&points, eta));
    }

    #[test]
    fn probabilities_stay_in_unit_interval(m in 1u32..300, eta in 0.001f64..0.499) {
        let w = eval(m, eta, PrecisionConfig::Machine);
        prop_assert!((0.0..=1.0).contains(&w.p));
        prop_assert!((0.0..=1.0).contains(&w.q));
    }
}
