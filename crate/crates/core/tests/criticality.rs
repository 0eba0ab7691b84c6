use proptest::prelude::*;

use peelkit::criticality::*;
use peelkit::hfun::h_eval;
use peelkit::rational::ratio;
use peelkit::weights::{preset, Preset, WeightSequence};

fn quad(num: i64, den: i64) -> WeightSequence {
    WeightSequence::from_rationals([(4, ratio(num, den))])
}

#[test]
fn quadrangulation_is_critical() {
    let cd = solve_boltzmann(&quad(1, 12), 1.0).unwrap();
    assert!((cd.c_plus - 8f64.sqrt()).abs() < 1e-12);
    assert_eq!(cd.r, 1.0);
    assert!(cd.margin.abs() < MARGIN_TOL);
    assert_eq!(cd.classification, Classification::RegularCritical);
}

#[test]
fn triangulation_ratio() {
    let q = WeightSequence::from_floats([(3, 1.0 / (12.0 * 3f64.sqrt()).sqrt())]);
    let cd = solve_boltzmann(&q, 1.0).unwrap();
    assert!((cd.r - (2.0 * 3f64.sqrt() - 3.0)).abs() < 1e-10);
    assert!(cd.classification.is_critical());
}

#[test]
fn subcritical_quadrangulation() {
    // bipartite with nu(2) = c^2/20: 2/c^2 = h0(2) - h0(4) nu(2) gives 3y^2 - 80y + 320 = 0, y = c^2
    let y = (80.0 - (6400.0f64 - 3840.0).sqrt()) / 6.0;
    let margin = 1.0 - h_eval(1.0, 1, 3).unwrap() * y / 20.0;
    let cd = solve_boltzmann(&quad(1, 20), 1.0).unwrap();
    assert!((cd.c_plus - y.sqrt()).abs() < 1e-10);
    assert!((cd.margin - margin).abs() < 1e-10);
    assert!(cd.margin > 0.0);
    assert_eq!(cd.classification, Classification::Subcritical);
    assert_eq!(classify(&quad(1, 20), &cd), Classification::Subcritical);
}

#[test]
fn overweight_is_not_admissible() {
    let cd = solve_boltzmann(&quad(1, 10), 1.0).unwrap();
    assert_eq!(cd.classification, Classification::NotAdmissible);
    assert!(cd.margin < 0.0);
    assert!((cd.g_critical - 10.0 / 12.0).abs() < 1e-9);
}

#[test]
fn symmetric_family_is_critical_non_regular() {
    let pre = preset(Preset::SymmetricCritical { r: 1.0, a: std::f64::consts::FRAC_PI_4 }).unwrap();
    let cd = solve_boltzmann(&pre.weights, 1.0).unwrap();
    assert_eq!(cd.classification, Classification::CriticalNonRegular);
    assert!((cd.c_plus - 6f64.sqrt()).abs() < 1e-9);
}

#[test]
fn miermont_quadrangulation() {
    let q = quad(1, 12);
    let cd = solve_boltzmann(&q, 1.0).unwrap();
    let m = miermont_check(&q, &cd);
    assert_eq!(m.a0, 0.0);
    assert!((m.a1 - 1.0).abs() < 1e-12);
    assert!(m.passed);
}

#[test]
fn miermont_triangulation_and_subcritical() {
    let q = preset(Preset::triangulation()).unwrap().weights;
    let cd = solve_boltzmann(&q, 1.0).unwrap();
    let m = miermont_check(&q, &cd);
    assert!((m.scalar - 1.0).abs() < 1e-8, "{}", m.scalar);
    assert!(m.f_bullet_residual.abs() < 1e-10 && m.f_diamond_residual.abs() < 1e-10);

    let q = quad(1, 20);
    let cd = solve_boltzmann(&q, 1.0).unwrap();
    let m = miermont_check(&q, &cd);
    assert!(m.scalar < 1.0);
    assert!((m.scalar - m.scalar_from_margin).abs() < 1e-10);
}

#[test]
fn tuning() {
    let (t, _) = tune_critical(&WeightSequence::from_floats([(4, 1.0)])).unwrap();
    assert!((t - 1.0 / 12.0).abs() < 1e-10);
    let (t, _) = tune_critical(&WeightSequence::from_floats([(3, 1.0)])).unwrap();
    assert!((t - 1.0 / (12.0 * 3f64.sqrt()).sqrt()).abs() < 1e-10);
    let shape = WeightSequence::from_floats([(3, 1.0), (4, 1.0)]);
    let (t, cd) = tune_critical(&shape).unwrap();
    assert!((t - 0.0585330575502889).abs() < 1e-10);
    let q = shape.scaled(t);
    let check = solve_boltzmann(&q, 1.0).unwrap();
    assert!(check.margin.abs() < MARGIN_TOL);
    assert!((miermont_check(&q, &cd).scalar - 1.0).abs() < 1e-8);
}

#[test]
fn newton_probe_agrees() {
    let q = WeightSequence::from_floats([(3, 0.1), (4, 0.02)]);
    let cd = solve_boltzmann(&q, 1.0).unwrap();
    assert_eq!(cd.classification, Classification::Subcritical);
    let roots = uniqueness_probe(&q, 1.0);
    assert!(!roots.is_empty());
    for (c, r) in roots {
        assert!((c - cd.c_plus).abs() < 1e-9 && (r - cd.r).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn deformation_is_subcritical(g in 0.05f64..0.999) {
        let q = quad(1, 12);
        let cd = solve_boltzmann(&q, g).unwrap();
        prop_assert_eq!(cd.classification, Classification::Subcritical);
        prop_assert!(cd.c_plus < 8f64.sqrt());
        let res = residuals(&q, g, cd.c_plus, cd.r).unwrap();
        prop_assert!(res.iter().all(|x| x.abs() < RESIDUAL_TOL * 10.0));
    }

    #[test]
    fn tuned_shapes_are_critical(a in 0.0f64..1.0, b in 0.05f64..1.0) {
        let shape = WeightSequence::from_floats([(3, a), (4, b)]);
        let (t, cd) = tune_critical(&shape).unwrap();
        prop_assert!(cd.classification.is_critical());
        let m = miermont_check(&shape.scaled(t), &cd);
        prop_assert!((m.scalar - 1.0).abs() < 1e-6);
    }
}
