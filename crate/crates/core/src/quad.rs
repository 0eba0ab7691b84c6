//! Numerical integration on finite and half-infinite intervals.

use quadrature::double_exponential;

/// Integral of `f` over `[a, b]` split into `panels` equal pieces.
///
/// Each piece goes through tanh-sinh quadrature, which tolerates integrable
/// endpoint singularities. Split at interior kinks before calling.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    let n = panels.max(1);
    let h = (b - a) / n as f64;
    let per = tol / n as f64;
    (0..n)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == n { b } else { lo + h };
            double_exponential::integrate(&f, lo, hi, per).integral
        })
        .sum()
}

/// Integral of `f` over `(0, inf)` through the substitution `x = e^t`.
///
/// `t` runs over `[t_lo, t_hi]`; the caller picks the window so that the
/// integrand has decayed at both ends.
pub fn integrate_positive<F: Fn(f64) -> f64>(f: F, t_lo: f64, t_hi: f64, panels: usize, tol: f64) -> f64 {
    integrate(|t| {
        let x = t.exp();
        f(x) * x
    }, t_lo, t_hi, panels, tol)
}
