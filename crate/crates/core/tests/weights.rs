use proptest::prelude::*;

use peelkit::hfun::h_eval;
use peelkit::rational::ratio;
use peelkit::weights::*;

#[test]
fn validation() {
    let quad = validate(&WeightSequence::from_rationals([(4, ratio(1, 12))])).unwrap();
    assert!(quad.bipartite && quad.lattice_d == 1 && quad.is_valid());
    assert!(!validate(&WeightSequence::from_floats([(3, 0.2)])).unwrap().bipartite);
    assert!(!validate(&WeightSequence::from_floats([(2, 0.5)])).unwrap().non_degenerate);
}

#[test]
fn quadrangulation_step_law() {
    let q = WeightSequence::from_rationals([(4, ratio(1, 12))]);
    let nu = nu_from_q(&q, 8f64.sqrt(), 1.0).unwrap();
    assert!((nu.nu(2) - 2.0 / 3.0).abs() < 1e-15);
    assert!((nu.nu(-2) - 0.25).abs() < 1e-15);
    let back = q_from_nu(&nu);
    assert!((back.q(4) - 1.0 / 12.0).abs() < 1e-16);
}

#[test]
fn triangulation_step_law() {
    let s3 = 3f64.sqrt();
    let (c, r) = ((6.0 + 4.0 * s3).sqrt(), 2.0 * s3 - 3.0);
    let pre = preset(Preset::triangulation()).unwrap();
    let nu = nu_from_q(&pre.weights, c, r).unwrap();
    assert!((nu.nu(1) - 1.0 / h_eval(r, 1, 2).unwrap()).abs() < 1e-12);
    let back = q_from_nu(&nu);
    assert!((back.q(3) - pre.weights.q(3)).abs() < 1e-14);
}

#[test]
fn nu_minus_two() {
    let nu = nu_from_q(&WeightSequence::from_floats([(3, 0.01)]), 10.0, 0.3).unwrap();
    assert!((nu.nu(-2) - 0.02).abs() < 1e-16);
}

#[test]
fn geometric_at_three() {
    let q = preset(Preset::Geometric { h: 3.0 }).unwrap();
    let beta = 1.0 / (2.0 * 3f64.sqrt());
    for k in 1..=8 {
        assert!((q.weights.q(k) - beta.powi(k as i32)).abs() < 1e-15);
    }
    assert!((q.closed.r.unwrap() - 0.6).abs() < 1e-15);
    assert!((q.closed.l_nu.unwrap() - 5.0).abs() < 1e-14);
}

#[test]
fn quadrangulation_preset() {
    let pre = preset(Preset::quadrangulation()).unwrap();
    assert_eq!(pre.weights.exact().unwrap().get(&4), Some(&ratio(1, 12)));
    assert!((pre.closed.c_plus.unwrap() - 8f64.sqrt()).abs() < 1e-15);
    assert!((pre.closed.l_nu.unwrap() - 4.0 / 3.0).abs() < 1e-15);
    let tri = preset(Preset::triangulation()).unwrap();
    assert!((tri.closed.r.unwrap() - (2.0 * 3f64.sqrt() - 3.0)).abs() < 1e-14);
}

#[test]
fn pointed_disk_values() {
    assert_eq!(pointed_disk(0, 3.0, 0.2).unwrap(), 1.0);
    assert!((pointed_disk(2, 8f64.sqrt(), 1.0).unwrap() - 4.0).abs() < 1e-14);
    for (c, r) in [(8f64.sqrt(), 1.0), ((6.0 + 4.0 * 3f64.sqrt()).sqrt(), 2.0 * 3f64.sqrt() - 3.0)] {
        for l in 0..=12 {
            let a = pointed_disk(l, c, r).unwrap();
            let b = pointed_disk_binomial(l, c, r);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "l={l}: {a} vs {b}");
        }
    }
}

#[test]
fn symmetric_weights() {
    let pre = preset(Preset::SymmetricCritical { r: 1.0, a: std::f64::consts::FRAC_PI_4 }).unwrap();
    for k in 2..=6 {
        let target = 6f64.powi(1 - k) / (((2 * k - 2) * (2 * k - 2)) as f64 - 1.0);
        assert!((pre.weights.q(2 * k as u32) / target - 1.0).abs() < 1e-12);
        assert_eq!(pre.weights.q(2 * k as u32 + 1), 0.0);
    }
}

proptest! {
    #[test]
    fn q_nu_round_trip(
        terms in prop::collection::btree_map(1u32..=12, 0.0f64..2.0, 1..6),
        c in 2.01f64..8.0,
        r in -0.9f64..=1.0,
    ) {
        let q = WeightSequence::from_floats(terms.clone());
        let nu = nu_from_q(&q, c, r).unwrap();
        let back = q_from_nu(&nu);
        for (k, v) in terms {
            prop_assert!((back.q(k) - v).abs() <= 1e-12 * v.max(1e-300));
        }
    }

    #[test]
    fn odd_support_is_not_bipartite(k in 1u32..20, w in 0.01f64..1.0) {
        let q = WeightSequence::from_floats([(2 * k + 1, w), (4, 0.01)]);
        prop_assert!(!validate(&q).unwrap().bipartite);
    }
}
