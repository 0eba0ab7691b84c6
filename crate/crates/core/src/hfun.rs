//! The special functions `h_r^(k)(l)`.
//!
//! For a ratio `r` in `(-1, 1]` and an order `k` the value `h_r^(k)(l)` is the
//! coefficient
//!
//! ```text
//! h_r^(k)(l) = [u^(l-k)] (1-u)^-(k+1/2) (1+r u)^-1/2 ,
//! ```
//!
//! so that `h(k, l) = 0` for `l < k` and `h(k, k) = 1`. Neighbouring orders are
//! related by
//!
//! ```text
//! h(k+1, l) = sum_{p=k}^{l-1} h(k, p),      h(k, l) = h(k+1, l+1) - h(k+1, l).
//! ```
//!
//! `h^(0)` is the hitting probability of the finite-map perimeter chain and
//! `h^(1)` the renewal function used by the infinite-map chain.
//!
//! Two evaluation modes are offered. [`HCache::exact`] works over
//! `BigRational`, starting from the binomial convolution for `k = 0` and
//! walking the order relations up and down. [`HCache::float`] evaluates every
//! order directly from the three-term coefficient recurrence of
//! `(1-u)^-a (1+ru)^-b`, which is forward stable for `|r| < 1` and exact up to
//! rounding at `r = 1`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use std::ops::{Add, Sub};

use crate::rational;
use crate::{Error, Result};

pub const MIN_ORDER: i32 = -4;
pub const MAX_ORDER: i32 = 4;
const N_ORDERS: usize = (MAX_ORDER - MIN_ORDER + 1) as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Float,
}

/// Scalar types an [`HCache`] can hold.
pub trait HValue: Clone + Zero + One + Add<Output = Self> + Sub<Output = Self> {}
impl HValue for f64 {}
impl HValue for BigRational {}

/// Memoized table of `h_r^(k)(l)` for all supported orders and `l <= l_max`.
///
/// Immutable once built; share it freely between threads.
#[derive(Debug, Clone)]
pub struct HCache<T> {
    r: T,
    mode: Mode,
    l_max: i64,
    // orders[k - MIN_ORDER][l - k] = h(k, l) for k <= l <= l_max
    orders: Vec<Vec<T>>,
}

fn check_order(k: i32) -> Result<usize> {
    if (MIN_ORDER..=MAX_ORDER).contains(&k) {
        Ok((k - MIN_ORDER) as usize)
    } else {
        Err(Error::UnsupportedOrder(k))
    }
}

fn check_ratio(r: f64) -> Result<()> {
    if r > -1.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("ratio r = {r} must lie in (-1, 1]")))
    }
}

/// Taylor coefficients `g_0..g_{n-1}` of `(1-u)^-a (1+ru)^-b`.
///
/// Uses `(n+1) g_{n+1} = ((1-r) n + a - r b) g_n + r (n - 1 + a + b) g_{n-1}`.
pub fn series_coeffs(a: f64, b: f64, r: f64, n: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(n);
    if n == 0 {
        return g;
    }
    g.push(1.0);
    if n == 1 {
        return g;
    }
    g.push(a - r * b);
    for m in 1..n - 1 {
        let mf = m as f64;
        let next = ((1.0 - r) * mf + a - r * b) * g[m] + r * (mf - 1.0 + a + b) * g[m - 1];
        g.push(next / (mf + 1.0));
    }
    g
}

impl HCache<f64> {
    /// Float table for ratio `r` covering `l <= l_max`.
    pub fn float(r: f64, l_max: i64) -> Result<Self> {
        check_ratio(r)?;
        let mut orders = Vec::with_capacity(N_ORDERS);
        for k in MIN_ORDER..=MAX_ORDER {
            let len = (l_max - k as i64 + 1).max(0) as usize;
            orders.push(series_coeffs(k as f64 + 0.5, 0.5, r, len));
        }
        Ok(HCache { r, mode: Mode::Float, l_max, orders })
    }
}

impl HCache<BigRational> {
    /// Exact table for a rational ratio `r` covering `l <= l_max`.
    pub fn exact(r: BigRational, l_max: i64) -> Result<Self> {
        let one = BigRational::one();
        if r > one || r <= -one.clone() {
            return Err(Error::Domain(format!("ratio r = {} must lie in (-1, 1]", rational::format(&r))));
        }
        // base order k = 0 up to l_max - MIN_ORDER, so differencing reaches k = -4
        let top = (l_max - MIN_ORDER as i64).max(0) as usize;
        let mut central = Vec::with_capacity(top + 1);
        let mut c = one.clone();
        for j in 0..=top {
            if j > 0 {
                // C(2j,j)/4^j = C(2j-2,j-1)/4^(j-1) * (2j-1)/(2j)
                c *= rational::ratio(2 * j as i64 - 1, 2 * j as i64);
            }
            central.push(c.clone());
        }
        let minus_r = -r.clone();
        let mut b = Vec::with_capacity(top + 1);
        let mut pw = one.clone();
        for cj in central.iter() {
            b.push(cj * &pw);
            pw = &pw * &minus_r;
        }
        let mut base = Vec::with_capacity(top + 1);
        for l in 0..=top {
            let mut s = BigRational::zero();
            for j in 0..=l {
                s += &central[j] * &b[l - j];
            }
            base.push(s);
        }
        let mut orders: Vec<Vec<BigRational>> = vec![Vec::new(); N_ORDERS];
        let zero_idx = (-MIN_ORDER) as usize;
        orders[zero_idx] = base;
        // upward: h(k+1, l) = sum_{p=k}^{l-1} h(k, p); stored index l-(k+1)
        for k in 0..MAX_ORDER {
            let prev = &orders[(k - MIN_ORDER) as usize];
            let len = (l_max - k as i64).max(0) as usize;
            let mut next = Vec::with_capacity(len);
            let mut acc = BigRational::zero();
            for p in prev.iter().take(len) {
                acc += p;
                next.push(acc.clone());
            }
            orders[(k + 1 - MIN_ORDER) as usize] = next;
        }
        // downward: h(k-1, l) = h(k, l+1) - h(k, l)
        for k in (MIN_ORDER + 1..=0).rev() {
            let prev = &orders[(k - MIN_ORDER) as usize];
            // h(k-1, l) for l from k-1; h(k, k-1) = 0
            let mut next = Vec::with_capacity(prev.len() + 1);
            next.push(prev[0].clone());
            for i in 1..prev.len() {
                next.push(prev[i].clone() - prev[i - 1].clone());
            }
            orders[(k - 1 - MIN_ORDER) as usize] = next;
        }
        let mut cache = HCache { r, mode: Mode::Exact, l_max, orders };
        cache.trim();
        Ok(cache)
    }

    pub fn to_float(&self) -> HCache<f64> {
        HCache {
            r: rational::to_f64(&self.r),
            mode: Mode::Float,
            l_max: self.l_max,
            orders: self.orders.iter().map(|v| v.iter().map(rational::to_f64).collect()).collect(),
        }
    }
}

impl<T: HValue> HCache<T> {
    fn trim(&mut self) {
        for (i, v) in self.orders.iter_mut().enumerate() {
            let k = i as i64 + MIN_ORDER as i64;
            let len = (self.l_max - k + 1).max(0) as usize;
            v.truncate(len);
        }
    }

    pub fn r(&self) -> &T {
        &self.r
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn l_max(&self) -> i64 {
        self.l_max
    }

    /// `h_r^(k)(l)`, with an error for unsupported orders or `l > l_max`.
    pub fn eval(&self, k: i32, l: i64) -> Result<T> {
        let idx = check_order(k)?;
        if l < k as i64 {
            return Ok(T::zero());
        }
        if l > self.l_max {
            return Err(Error::OutOfRange { l, l_max: self.l_max });
        }
        Ok(self.orders[idx][(l - k as i64) as usize].clone())
    }

    /// Values `h(k, l)` for `l = k..=l_max`.
    pub fn batch(&self, k: i32, l_max: i64) -> Result<Vec<T>> {
        let idx = check_order(k)?;
        if l_max < k as i64 {
            return Err(Error::Domain(format!("l_max = {l_max} below order {k}")));
        }
        if l_max > self.l_max {
            return Err(Error::OutOfRange { l: l_max, l_max: self.l_max });
        }
        Ok(self.orders[idx][..(l_max - k as i64 + 1) as usize].to_vec())
    }
}

impl HCache<f64> {
    /// Unchecked float lookup; zero below the diagonal.
    ///
    /// # Panics
    ///
    /// If `k` is unsupported or `l > l_max`.
    #[inline]
    pub fn get(&self, k: i32, l: i64) -> f64 {
        let ki = k as i64;
        if l < ki {
            return 0.0;
        }
        self.orders[(k - MIN_ORDER) as usize][(l - ki) as usize]
    }

    /// Slice of `h(k, l)` for `l = k..=l_max`.
    pub fn slice(&self, k: i32) -> &[f64] {
        &self.orders[(k - MIN_ORDER) as usize]
    }
}

/// One-off float evaluation of `h_r^(k)(l)`.
pub fn h_eval(r: f64, k: i32, l: i64) -> Result<f64> {
    check_order(k)?;
    HCache::float(r, l.max(k as i64))?.eval(k, l)
}

/// One-off exact evaluation of `h_r^(k)(l)`.
pub fn h_exact(r: &BigRational, k: i32, l: i64) -> Result<BigRational> {
    check_order(k)?;
    HCache::exact(r.clone(), l.max(k as i64))?.eval(k, l)
}

/// `Gamma(k + 1/2)` for integer `k`.
pub fn gamma_half(k: i32) -> f64 {
    let mut g = std::f64::consts::PI.sqrt();
    if k >= 0 {
        for j in 0..k {
            g *= j as f64 + 0.5;
        }
    } else {
        for j in (k..0).rev() {
            g /= j as f64 + 0.5;
        }
    }
    g
}

/// Leading large-`l` behaviour `l^(k-1/2) / (Gamma(k+1/2) sqrt(1+r))`.
///
/// At `r = 1` compare against `(h(k,l) + h(k,l+1)) / 2`.
pub fn h_asymptote(k: i32, l: i64, r: f64) -> Result<f64> {
    check_order(k)?;
    check_ratio(r)?;
    if l < (k as i64).max(1) {
        return Err(Error::Domain(format!("asymptote needs l >= max(k, 1), got l = {l}")));
    }
    Ok((l as f64).powf(k as f64 - 0.5) / (gamma_half(k) * (1.0 + r).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn closed_forms() {
        assert_eq!(h_exact(&ratio(1, 2), 0, 1).unwrap(), ratio(1, 4));
        assert_eq!(h_exact(&ratio(0, 1), 0, 2).unwrap(), ratio(3, 8));
        assert_eq!(h_exact(&ratio(1, 1), 1, 4).unwrap(), ratio(3, 2));
        assert_eq!(h_exact(&ratio(-2, 5), 3, 3).unwrap(), ratio(1, 1));
        assert_eq!(h_exact(&ratio(-2, 5), 3, 2).unwrap(), ratio(0, 1));
    }

    #[test]
    fn batch_bipartite() {
        let c = HCache::exact(ratio(1, 1), 4).unwrap();
        assert_eq!(c.batch(0, 2).unwrap(), vec![ratio(1, 1), ratio(0, 1), ratio(1, 2)]);
        assert_eq!(c.batch(1, 1).unwrap(), vec![ratio(1, 1)]);
    }

    #[test]
    fn unsupported_order() {
        assert!(matches!(h_eval(0.3, 5, 7), Err(Error::UnsupportedOrder(5))));
        assert!(matches!(h_eval(0.3, -5, 7), Err(Error::UnsupportedOrder(-5))));
    }

    #[test]
    fn gamma_half_values() {
        let sp = std::f64::consts::PI.sqrt();
        assert!((gamma_half(0) - sp).abs() < 1e-15);
        assert!((gamma_half(1) - sp / 2.0).abs() < 1e-15);
        assert!((gamma_half(-1) + 2.0 * sp).abs() < 1e-14);
        assert!((gamma_half(-2) - 4.0 * sp / 3.0).abs() < 1e-14);
    }
}
