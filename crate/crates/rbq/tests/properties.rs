//! Property tests for the transform calculus: every operation must produce
//! a genuine LST (value one at zero, nonincreasing, bounded), the residual
//! operator must be continuous through its removable singularity, means
//! must match the slope at the origin, and the inverse construction must
//! undo the forward operator.

use proptest::prelude::*;

use rbq::dist::DistributionSpec;
use rbq::oracles;
use rbq::transforms::{d_operator, inverse_d, mix, residual_mean, Transform};

fn families() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::exponential(2.0).unwrap(),
        DistributionSpec::deterministic(1.0).unwrap(),
        DistributionSpec::erlang(2, 2.0).unwrap(),
        DistributionSpec::hyper_exponential(vec![0.3, 0.7], vec![0.5, 2.0]).unwrap(),
        DistributionSpec::uniform(0.5, 2.0).unwrap(),
    ]
}

fn s_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 * 0.1).collect()
}

fn assert_valid_transform(t: &Transform, label: &str) {
    assert!(
        (t.eval(0.0) - 1.0).abs() <= 1e-10,
        "{label}: eval(0) = {}",
        t.eval(0.0)
    );
    let mut prev = f64::INFINITY;
    for s in s_grid() {
        let v = t.eval(s);
        assert!(
            (-1e-12..=1.0 + 1e-12).contains(&v),
            "{label}: eval({s}) = {v} out of [0,1]"
        );
        assert!(v <= prev + 1e-12, "{label}: increased at s = {s}");
        prev = v;
    }
}

fn family_strategy() -> impl Strategy<Value = DistributionSpec> {
    prop_oneof![
        (0.2f64..4.0).prop_map(|r| DistributionSpec::exponential(r).unwrap()),
        (0.2f64..3.0).prop_map(|v| DistributionSpec::deterministic(v).unwrap()),
        (1u32..5, 0.3f64..4.0).prop_map(|(k, r)| DistributionSpec::erlang(k, r).unwrap()),
        ((0.05f64..0.95), 0.3f64..2.0, 0.5f64..5.0).prop_map(|(p, r1, r2)| {
            DistributionSpec::hyper_exponential(vec![p, 1.0 - p], vec![r1, r2]).unwrap()
        }),
        ((0.0f64..1.0), 0.1f64..3.0)
            .prop_map(|(lo, w)| DistributionSpec::uniform(lo, lo + w).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn base_transforms_are_valid(spec in family_strategy()) {
        let t = Transform::base(spec).unwrap();
        assert_valid_transform(&t, "base");
    }

    #[test]
    fn d_operator_output_is_valid(spec in family_strategy(), lambda in 0.3f64..3.0) {
        let base = Transform::base(spec).unwrap();
        let r = d_operator(&base, lambda).unwrap();
        assert_valid_transform(&r, "d_operator");
        prop_assert!(r.mean() > 0.0);
    }

    #[test]
    fn mixtures_are_valid(
        a in family_strategy(),
        b in family_strategy(),
        w in 0.0f64..=1.0,
        lambda in 0.3f64..3.0,
    ) {
        let ta = d_operator(&Transform::base(a).unwrap(), lambda).unwrap();
        let tb = Transform::base(b).unwrap();
        let m = mix(&[w, 1.0 - w], &[ta.clone(), tb.clone()]).unwrap();
        assert_valid_transform(&m, "mixture");
        // mean is the weight-convex combination of parent means
        let expected = w * ta.mean() + (1.0 - w) * tb.mean();
        prop_assert!((m.mean() - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn singularity_continuity(spec in family_strategy(), lambda in 0.3f64..3.0) {
        let r = d_operator(&Transform::base(spec).unwrap(), lambda).unwrap();
        let at = r.eval(lambda);
        for s in [lambda - 1e-4, lambda + 1e-4] {
            prop_assert!(
                (r.eval(s) - at).abs() <= 1e-3 * lambda.max(1.0),
                "{} vs {at}", r.eval(s)
            );
        }
    }

    #[test]
    fn residual_mean_matches_slope_at_origin(
        spec in family_strategy(),
        lambda in 0.3f64..3.0,
    ) {
        let f = Transform::base(spec).unwrap();
        let r = d_operator(&f, lambda).unwrap();
        // -dT/ds at 0 by central difference, h = 1e-5
        let h = 1e-5;
        let slope = -(r.eval(h) - r.eval(-h)) / (2.0 * h);
        let mean = residual_mean(&f, lambda).unwrap();
        prop_assert!(
            (slope - mean).abs() <= 1e-4 * mean,
            "slope {slope} vs mean {mean}"
        );
    }

    #[test]
    fn nested_operator_is_valid(
        spec in family_strategy(),
        l1 in 0.3f64..2.0,
        l2 in 0.5f64..3.0,
    ) {
        let inner = d_operator(&Transform::base(spec).unwrap(), l1).unwrap();
        let outer = d_operator(&inner, l2).unwrap();
        assert_valid_transform(&outer, "nested");
    }
}

#[test]
fn roundtrip_all_families() {
    // inverse_d(d_operator(F, lambda), gamma_F, lambda) reproduces F on the
    // grid, with gamma_F = lambda F*(lambda) / (1 - F*(lambda)).
    for spec in families() {
        let f = Transform::base(spec.clone()).unwrap();
        for lambda in [0.5, 1.0, 2.0] {
            let h = d_operator(&f, lambda).unwrap();
            let flam = f.eval(lambda);
            let gamma = lambda * flam / (1.0 - flam);
            let back = inverse_d(&h, gamma, lambda).unwrap();
            for s in s_grid() {
                assert!(
                    (back.eval(s) - f.eval(s)).abs() <= 1e-9,
                    "{spec:?}, lambda={lambda}, s={s}: {} vs {}",
                    back.eval(s),
                    f.eval(s)
                );
            }
        }
    }
}

#[test]
fn residual_means_against_monte_carlo() {
    // The closed-form mean of the conditional residual against the
    // accept/reject sampler.
    for (spec, lambda) in [
        (DistributionSpec::deterministic(1.0).unwrap(), 1.0),
        (DistributionSpec::erlang(2, 2.0).unwrap(), 1.0),
        (DistributionSpec::uniform(0.5, 2.0).unwrap(), 0.8),
    ] {
        let f = Transform::base(spec.clone()).unwrap();
        let mean = residual_mean(&f, lambda).unwrap();
        let mc = oracles::mc::residual_mean_mc(&spec, lambda, 2_000_000, 99).unwrap();
        assert!(
            (mean - mc).abs() < 2e-3,
            "{spec:?}: closed {mean} vs mc {mc}"
        );
    }
}

#[test]
fn numeric_cdf_monotone_and_saturates() {
    for spec in families() {
        let lambda = 1.3;
        let mut prev = 0.0;
        for i in 0..=12 {
            let w = 0.5 * i as f64;
            let v = oracles::numeric_d_cdf(&spec, lambda, w).unwrap();
            assert!(v + 1e-9 >= prev, "{spec:?} at w={w}");
            prev = v;
        }
        let far = oracles::numeric_d_cdf(&spec, lambda, 60.0).unwrap();
        assert!((far - 1.0).abs() < 1e-6, "{spec:?}: {far}");
    }
}
