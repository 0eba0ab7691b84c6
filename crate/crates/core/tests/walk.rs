use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

use peelkit::hfun::{h_eval, h_exact};
use peelkit::rational::{ratio, to_f64};
use peelkit::walk::*;
use peelkit::weights::{preset, Preset};

fn law(p: Preset) -> StepLaw {
    step_law(&preset(p).unwrap().weights, 512).unwrap()
}

#[test]
fn kernel_values() {
    assert!((kernel_r(1.0, 2, 2).unwrap() - 3.0 / 8.0).abs() < 1e-15);
    // direct sum over p of h1(m-p) (h-2(k+p-1) + r h-2(k+p-2)) in exact arithmetic
    let r = ratio(1, 2);
    let direct = (0..2).fold(BigRational::zero(), |s, p| {
        s + h_exact(&r, 1, 2 - p).unwrap()
            * (h_exact(&r, -2, 3 + p - 1).unwrap() + &r * h_exact(&r, -2, 3 + p - 2).unwrap())
    });
    assert_eq!(direct, ratio(81, 2048));
    assert!((kernel_r(0.5, 3, 2).unwrap() - 81.0 / 2048.0).abs() < 1e-15);
}

#[test]
fn kernel_large_k() {
    for (r, m) in [(0.3, 2), (0.8, 5), (-0.4, 3)] {
        let k = 20_000;
        let ratio = kernel_r(r, k, m).unwrap() / h_eval(r, -2, k).unwrap();
        let limit = (1.0 + r) * h_eval(r, 2, m + 1).unwrap();
        assert!((ratio / limit - 1.0).abs() < 2e-3, "r={r} m={m}: {ratio} vs {limit}");
    }
}

#[test]
fn quadrangulation_constants() {
    let q = law(Preset::quadrangulation());
    assert!((q.nu(-4) - 1.0 / 24.0).abs() < 1e-15);
    assert!((q.l_nu.unwrap() - 4.0 / 3.0).abs() < 1e-14);
    assert!((q.b_nu.unwrap() - 0.125).abs() < 1e-14);
    assert!((0..50).all(|k| q.nu(-2 * k - 1) == 0.0));
    assert!((disk_coefficient(&q, 0).unwrap() - 1.0).abs() < 1e-14);
    assert!((disk_coefficient(&q, 2).unwrap() - 4.0 / 3.0).abs() < 1e-14);
    assert!((expected_volume(&q, 2).unwrap() - 3.0).abs() < 1e-13);
    // E|V(m_l)| = (l+4)(l+2)/8 for quadrangulations, so l^-2 E / B_nu = 1 + 6/l + 8/l^2
    for l in [2i64, 10, 200] {
        let want = ((l + 4) * (l + 2)) as f64 / 8.0;
        assert!((expected_volume(&q, l).unwrap() / want - 1.0).abs() < 1e-12);
    }
    let deep = step_law(&preset(Preset::quadrangulation()).unwrap().weights, 4096).unwrap();
    let e = expected_volume(&deep, 2000).unwrap() / (2000.0f64 * 2000.0) / deep.b_nu.unwrap();
    assert!((0.98..=1.02).contains(&e), "{e}");
    assert!(expected_volume(&q, 1).is_err());
    assert_eq!(disk_coefficient(&q, 511).unwrap_err().code(), "out-of-range");
}

#[test]
fn triangulation_constants() {
    let t = law(Preset::triangulation());
    assert!((t.l_nu.unwrap() - 0.5 * (1.0 + 1.0 / 3f64.sqrt())).abs() < 1e-10);
    let kernel = disk_coefficient(&t, 1).unwrap();
    let harmonic = nu_negative_by_harmonicity(t.positive().unwrap(), 3).unwrap()[1] * t.c_plus.powi(3) / 2.0;
    assert!((kernel - harmonic).abs() < 1e-12);
    assert!((kernel - 0.3053960375260388).abs() < 1e-12);
}

#[test]
fn inconsistent_input_is_rejected() {
    let q = peelkit::weights::WeightSequence::from_rationals([(4, ratio(1, 20))]);
    let cd = peelkit::criticality::solve_boltzmann(&q, 1.0).unwrap();
    let pos = peelkit::criticality::positive_half(&q, &cd).unwrap();
    assert_eq!(complete_nu(&pos, 64).unwrap_err().code(), "inconsistent-criticality");
    assert_eq!(step_law(&q, 64).unwrap_err().code(), "not-critical");
}

#[test]
fn laws_are_centered_probabilities() {
    for p in [Preset::quadrangulation(), Preset::triangulation(), Preset::Geometric { h: 3.0 }] {
        let l = law(p);
        assert!(l.table().iter().all(|&v| v >= 0.0));
        let missing = 1.0 - l.total_mass();
        assert!(missing >= -1e-12 && missing <= 1.01 * l.neg_tail_mass + 1e-12, "{missing} vs {}", l.neg_tail_mass);
        assert!((l.mean() - l.neg_tail_mean).abs() <= 0.01 * l.neg_tail_mean);
    }
}

#[test]
fn tail_law() {
    let q = law(Preset::quadrangulation());
    let c = q.tail_const.unwrap();
    let dev = |k: i64| {
        let s = 0.5 * ((k as f64).powf(2.5) * q.nu(-k) + ((k + 1) as f64).powf(2.5) * q.nu(-k - 1));
        (s / c - 1.0).abs()
    };
    assert!(dev(200) < 0.05 && dev(400) < 0.05 && dev(400) < dev(200));
}

#[test]
fn charfun_expansion() {
    for p in [Preset::quadrangulation(), Preset::triangulation()] {
        let l = law(p);
        let lead = ((1.0 + l.r) / 2.0).sqrt() * l.l_nu.unwrap();
        let c: Vec<f64> = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1]
            .iter()
            .map(|&t: &f64| {
                let approx = Complex64::new(1.0, 0.0) - lead * t.sqrt() * Complex64::new(t, -t);
                (charfun(&l, t) - approx).norm() / t.powf(2.5)
            })
            .collect();
        let (lo, hi) = c.iter().fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi <= 1.1 * lo, "{c:?}");
        let d = (charfun(&l, 0.7) - charfun_direct(&l, 0.7)).norm();
        assert!(d < 1e-4, "{d}");
    }
}

#[test]
fn symmetric_laws() {
    let s = symmetric_family(0.0, std::f64::consts::PI / 8.0).unwrap();
    for k in 1..500 {
        assert!((s.nu(k) - s.nu(-k)).abs() < 1e-15);
    }
    assert!((s.total_mass() + s.neg_tail_mass * 2.0 - 1.0).abs() < 1e-6, "{}", s.total_mass());
    let one = symmetric_family(1.0, std::f64::consts::FRAC_PI_4).unwrap();
    assert!((one.c_plus - 6f64.sqrt()).abs() < 1e-12);
    assert!(symmetric_family(1.0, 1.0).is_err());
    // tail sum behaves like k^-1
    let tail = |k: i64| -> f64 { (k..one.k_pos()).map(|m| one.nu(m)).sum::<f64>() };
    let slope = (tail(4000) / tail(400)).ln() / 10f64.ln();
    assert!((slope + 1.0).abs() < 0.1, "{slope}");
}

#[test]
fn csv_export() {
    let mut buf = Vec::new();
    export_csv(&law(Preset::quadrangulation()), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("k,nu_k\n-512,"));
    assert!(text.contains("# L_nu=1.3333"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bipartite_kernel_closed_form(k in 1i64..=20, m in 1i64..=20) {
        let a = kernel_r(1.0, 2 * k, 2 * m).unwrap();
        let b = kernel_bipartite(k, m);
        prop_assert!((a - b).abs() <= 1e-13 * b.max(1e-300), "{} {}", a, b);
    }

    #[test]
    fn kernel_matches_harmonicity(h in 1.3f64..12.0) {
        let l = law(Preset::Geometric { h });
        let route = nu_negative_by_harmonicity(l.positive().unwrap(), 60).unwrap();
        for (i, v) in route.iter().enumerate() {
            let k = i as i64 + 2;
            prop_assert!((l.nu(-k) - v).abs() <= 1e-10, "k={} {} {}", k, l.nu(-k), v);
        }
        let d = l.harmonic_defects(1, 30).unwrap();
        prop_assert!(d.iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn exact_kernel_agrees(k in 1i64..=8, m in 1i64..=8, num in -9i64..=10) {
        let r = ratio(num, 10);
        let exact = (0..m).fold(BigRational::zero(), |s, p| {
            s + h_exact(&r, 1, m - p).unwrap()
                * (h_exact(&r, -2, k + p - 1).unwrap() + &r * h_exact(&r, -2, k + p - 2).unwrap())
        });
        let f = kernel_r(num as f64 / 10.0, k, m).unwrap();
        prop_assert!((to_f64(&exact) - f).abs() < 1e-13);
    }
}
