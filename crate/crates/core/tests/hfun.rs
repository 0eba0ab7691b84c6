use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use peelkit::hfun::{h_asymptote, h_eval, h_exact, HCache};
use peelkit::rational::{int, ratio};

/// Coefficients of `(1+x)^e` for rational `e` up to order `n`.
fn binomial_series(e: &BigRational, x: &BigRational, n: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::one()];
    for j in 1..=n {
        let jj = int(j as i64);
        let prev = out[j - 1].clone();
        out.push(prev * (e - (&jj - int(1))) / jj * x);
    }
    out
}

/// `[u^(l-k)] (1-u)^(-(k+1/2)) (1+ru)^(-1/2)` by a plain Cauchy product.
fn h_oracle(k: i64, l: i64, r: &BigRational) -> BigRational {
    if l < k {
        return BigRational::zero();
    }
    let n = (l - k) as usize;
    let a = binomial_series(&(-(int(k) + ratio(1, 2))), &int(-1), n);
    let b = binomial_series(&ratio(-1, 2), r, n);
    (0..=n).map(|i| &a[i] * &b[n - i]).fold(BigRational::zero(), |s, t| s + t)
}

#[test]
fn first_values() {
    assert_eq!(h_exact(&ratio(1, 2), 0, 1).unwrap(), ratio(1, 4));
    assert_eq!(h_exact(&int(0), 0, 2).unwrap(), ratio(3, 8));
    assert_eq!(h_exact(&int(1), 1, 4).unwrap(), ratio(3, 2));
    assert_eq!(h_exact(&ratio(-2, 5), 3, 3).unwrap(), int(1));
}

#[test]
fn order_two_value() {
    // (1-u)^(-5/2) (1+u/2)^(-1/2) at u^3
    assert_eq!(h_oracle(2, 5, &ratio(1, 2)), ratio(725, 128));
    assert_eq!(h_exact(&ratio(1, 2), 2, 5).unwrap(), ratio(725, 128));
    assert!((h_eval(0.5, 2, 5).unwrap() - 725.0 / 128.0).abs() < 1e-14);
}

#[test]
fn batches() {
    let c = HCache::exact(int(1), 4).unwrap();
    assert_eq!(c.batch(0, 2).unwrap(), vec![int(1), int(0), ratio(1, 2)]);
    let c = HCache::float(0.3, 4).unwrap();
    assert_eq!(c.batch(1, 1).unwrap(), vec![1.0]);
    let r = ratio(1, 3);
    let c = HCache::exact(r.clone(), 4).unwrap();
    let b = c.batch(0, 4).unwrap();
    for l in 0..=4 {
        assert_eq!(b[l as usize], h_exact(&r, 0, l).unwrap());
    }
}

#[test]
fn asymptotes() {
    let ratio_at = |k: i32, l: i64, r: f64| h_eval(r, k, l).unwrap() / h_asymptote(k, l, r).unwrap();
    let a = ratio_at(0, 400, 0.0);
    assert!((0.995..=1.005).contains(&a), "{a}");
    let b = 0.5 * (ratio_at(1, 400, 1.0) + ratio_at(1, 401, 1.0));
    assert!((0.995..=1.005).contains(&b), "{b}");
    let c = ratio_at(-2, 400, 0.5);
    assert!((0.99..=1.01).contains(&c), "{c}");
}

#[test]
fn unsupported_orders() {
    assert_eq!(h_eval(0.5, 5, 10).unwrap_err().code(), "unsupported-order");
    assert!(h_eval(1.5, 0, 10).is_err());
}

proptest! {
    #[test]
    fn exact_matches_oracle(k in -2i64..=3, l in -2i64..=9, num in -9i64..=10) {
        let r = ratio(num, 10);
        prop_assert_eq!(h_exact(&r, k as i32, l).unwrap(), h_oracle(k, l, &r));
    }

    #[test]
    fn float_tracks_exact(k in -4i32..=4, l in 0i64..=40, num in -90i64..=100) {
        let r = ratio(num, 100);
        let e = peelkit::rational::to_f64(&h_exact(&r, k, l).unwrap());
        let f = h_eval(num as f64 / 100.0, k, l).unwrap();
        prop_assert!((e - f).abs() <= 1e-12 * e.abs().max(1.0));
    }

    #[test]
    fn order_recursion(k in -3i32..=4, l in 1i64..=200, r in -0.95f64..1.0) {
        // h^(k)(l) - h^(k)(l-1) = h^(k-1)(l-1)
        let d = h_eval(r, k, l).unwrap() - h_eval(r, k, l - 1).unwrap();
        let lower = h_eval(r, k - 1, l - 1).unwrap();
        prop_assert!((d - lower).abs() <= 1e-9 * lower.abs().max(1.0));
    }
}
