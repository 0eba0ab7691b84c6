//! The full two-sided step law `nu` and its constants.
//!
//! Negative jumps follow from the positive ones through the kernel
//!
//! ```text
//! nu(-k) = sum_{m>=1} R_r(k, m) nu(m),
//! R_r(k, m) = sum_{p=0}^{m-1} h^(1)(m-p) (h^(-2)(k+p-1) + r h^(-2)(k+p-2)),
//! ```
//!
//! which holds whenever `h^(1)` is `nu`-harmonic. The law carries
//!
//! ```text
//! L_nu = sum_{k>=1} nu(k) h^(2)(k+1),   B_nu = 4 nu(-2) / (3 (1+r) L_nu),
//! k^(5/2) nu(-k) -> 3 L_nu sqrt(1+r) / (4 sqrt(pi)).
//! ```

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hfun::{series_coeffs, HCache};
use crate::weights::{symmetric_a_max, Family, StepLawPositive, WeightSequence};
use crate::{Error, Result};

/// Default depth of the negative half.
pub const DEFAULT_K_NEG: i64 = 512;

/// Tolerance on `|nu(-2) - 2/c_+^2|` for the kernel consistency check.
pub const KERNEL_CONSISTENCY_TOL: f64 = 1e-9;

const SYM_FFT_LEN: usize = 1 << 16;

/// Kink amplitudes of the symmetric family, used beyond the tabulated range.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct SymmetricTail {
    a: f64,
    omega0: f64,
    omega1: f64,
}

impl SymmetricTail {
    // Fourier coefficients of |sin(t/2)| and |cos(t/2)|
    fn nu(&self, k: i64) -> f64 {
        let s0 = 2.0 / PI / (1.0 - 4.0 * (k as f64).powi(2));
        let s1 = if k % 2 == 0 { s0 } else { -s0 };
        -self.omega0 * s0 - self.omega1 * s1
    }
}

/// A complete step law on `[-k_neg, k_pos]`.
#[derive(Debug, Clone)]
pub struct StepLaw {
    pub r: f64,
    pub c_plus: f64,
    k_neg: i64,
    k_pos: i64,
    nu: Vec<f64>,
    /// Bound on the weight of omitted positive jumps.
    pub pos_tail_bound: f64,
    /// `1 - sum nu(k)` over the stored range.
    pub truncation_mass: f64,
    /// Estimated weight of negative jumps below `-k_neg`, from the tail asymptotics.
    pub neg_tail_mass: f64,
    /// Estimated `sum_{k > k_neg} k nu(-k)`; bounds the drift of the stored table.
    pub neg_tail_mean: f64,
    pub l_nu: Option<f64>,
    pub b_nu: Option<f64>,
    pub tail_const: Option<f64>,
    sym: Option<SymmetricTail>,
    positive: Option<StepLawPositive>,
}

impl StepLaw {
    /// `nu(k)`; zero outside the stored range unless the law has an analytic tail.
    #[inline]
    pub fn nu(&self, k: i64) -> f64 {
        if k >= -self.k_neg && k <= self.k_pos {
            self.nu[(k + self.k_neg) as usize]
        } else if let Some(s) = &self.sym {
            s.nu(k)
        } else {
            0.0
        }
    }

    pub fn k_neg(&self) -> i64 {
        self.k_neg
    }

    pub fn k_pos(&self) -> i64 {
        self.k_pos
    }

    /// Stored values for `k = -k_neg..=k_pos`.
    pub fn table(&self) -> &[f64] {
        &self.nu
    }

    /// Whether `nu` decays like `k^-2` on both sides.
    pub fn is_heavy(&self) -> bool {
        self.sym.is_some()
    }

    pub fn positive(&self) -> Option<&StepLawPositive> {
        self.positive.as_ref()
    }

    pub fn total_mass(&self) -> f64 {
        self.nu.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.nu.iter().enumerate().map(|(i, v)| (i as i64 - self.k_neg) as f64 * v).sum()
    }

    /// `sum_l h^(order)(l+k) nu(l) - h^(order)(k)` for `k = 1..=k_max`.
    ///
    /// Light-tailed laws are summed over the stored range. Heavy-tailed laws
    /// are summed to a ladder of cut-offs and extrapolated in the cut-off.
    pub fn harmonic_defects(&self, order: i32, k_max: i64) -> Result<Vec<f64>> {
        if order != 0 && order != 1 {
            return Err(Error::Domain(format!("harmonicity is checked for orders 0 and 1, got {order}")));
        }
        if self.is_heavy() {
            return self.harmonic_defects_extrapolated(order, k_max);
        }
        let h = HCache::float(self.r, self.k_pos + k_max + 1)?;
        let mut out = Vec::with_capacity(k_max as usize);
        for k in 1..=k_max {
            let lo = (-k).max(-self.k_neg);
            let mut s = 0.0;
            for l in lo..=self.k_pos {
                s += h.get(order, l + k) * self.nu(l);
            }
            out.push(s - h.get(order, k));
        }
        Ok(out)
    }

    fn harmonic_defects_extrapolated(&self, order: i32, k_max: i64) -> Result<Vec<f64>> {
        let levels = 6;
        let base: i64 = 4096;
        let top = base << (levels - 1);
        let h = HCache::float(self.r, top + k_max + 1)?;
        let nu: Vec<f64> = (0..=top).map(|l| self.nu(l)).collect();
        let p0 = if order == 1 { 0.5 } else { 1.5 };
        let mut out = Vec::with_capacity(k_max as usize);
        for k in 1..=k_max {
            let mut s: f64 = (-k..0).map(|l| h.get(order, l + k) * self.nu(l)).sum();
            let mut partial = Vec::with_capacity(levels);
            let mut next = 0i64;
            for j in 0..levels {
                let cut = base << j;
                while next <= cut {
                    s += h.get(order, next + k) * nu[next as usize];
                    next += 1;
                }
                partial.push(s);
            }
            out.push(richardson(&partial, p0) - h.get(order, k));
        }
        Ok(out)
    }
}

/// Richardson extrapolation of values at cut-offs `L, 2L, 4L, ...` whose
/// error expands in `L^-(p0 + i)`, `i = 0, 1, ...`.
pub fn richardson(values: &[f64], p0: f64) -> f64 {
    let mut t = values.to_vec();
    let mut p = p0;
    while t.len() > 1 {
        let f = 2f64.powf(p);
        t = t.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
        p += 1.0;
    }
    t[0]
}

/// Kernel evaluator with precomputed `h`-tables.
pub struct Kernel {
    r: f64,
    h: HCache<f64>,
    // g[j + 1] = h^(-2)(j-1) + r h^(-2)(j-2)
    g: Vec<f64>,
}

impl Kernel {
    pub fn new(r: f64, k_max: i64, m_max: i64) -> Result<Self> {
        let h = HCache::float(r, m_max + 1)?;
        let n = (k_max + m_max + 3) as usize;
        let g = series_coeffs(-1.5, -0.5, r, n + 1);
        Ok(Kernel { r, h, g })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    fn g(&self, j: i64) -> f64 {
        self.g[(j + 1) as usize]
    }

    /// `R_r(k, m)`.
    pub fn eval(&self, k: i64, m: i64) -> f64 {
        (0..m).map(|p| self.h.get(1, m - p) * self.g(k + p)).sum()
    }
}

/// `R_r(k, m)` for `k, m >= 1`.
pub fn kernel_r(r: f64, k: i64, m: i64) -> Result<f64> {
    if k < 1 || m < 1 {
        return Err(Error::Domain(format!("kernel needs k, m >= 1, got ({k}, {m})")));
    }
    Ok(Kernel::new(r, k, m)?.eval(k, m))
}

/// Closed form of `R_1(2k, 2m)`.
pub fn kernel_bipartite(k: i64, m: i64) -> f64 {
    let (kf, mf) = (k as f64, m as f64);
    let ck = crate::weights::binom_f64(2 * k as u64, k as u64) * 0.25f64.powi(k as i32);
    let cm = crate::weights::binom_f64(2 * m as u64, m as u64) * 0.25f64.powi(m as i32);
    mf * (2.0 * mf + 1.0) / ((mf + kf) * (2.0 * kf - 1.0)) * ck * cm
}

/// Completes a critical positive half to a two-sided law with `k_neg` negative jumps.
pub fn complete_nu(pos: &StepLawPositive, k_neg: i64) -> Result<StepLaw> {
    let k_neg = k_neg.max(3);
    let m_max = pos.k_max().max(1);
    let r = pos.r;
    let kern = Kernel::new(r, k_neg, m_max)?;
    // w(p) = sum_{m>p} nu(m) h^(1)(m-p)
    let w: Vec<f64> = (0..m_max)
        .map(|p| ((p + 1)..=m_max).map(|m| pos.nu(m) * kern.h.get(1, m - p)).sum())
        .collect();
    let bipartite = r == 1.0;
    let mut neg = vec![0.0; k_neg as usize + 1];
    for k in 1..=k_neg {
        if bipartite && k % 2 == 1 {
            continue;
        }
        let v: f64 = w.iter().enumerate().map(|(p, wp)| kern.g(k + p as i64) * wp).sum();
        neg[k as usize] = v.max(0.0);
    }
    let nu_m2 = 2.0 / (pos.c_plus * pos.c_plus);
    let gap = (neg[2] - nu_m2).abs();
    if gap.is_nan() || gap > KERNEL_CONSISTENCY_TOL {
        return Err(Error::InconsistentCriticality(format!(
            "kernel gives nu(-2) = {:.12e}, expected 2/c_+^2 = {:.12e}",
            neg[2], nu_m2
        )));
    }
    let k_pos = m_max;
    let mut nu = Vec::with_capacity((k_neg + k_pos + 1) as usize);
    for k in (1..=k_neg).rev() {
        nu.push(neg[k as usize]);
    }
    for k in 0..=k_pos {
        nu.push(pos.nu(k));
    }
    // the kernel reproduces nu(-1) = q_1 / c_+; keep the face-step value
    nu[(k_neg - 1) as usize] = pos.nu(-1);
    let h = HCache::float(r, k_pos + 2)?;
    let l_nu: f64 = (1..=k_pos).map(|k| pos.nu(k) * h.get(2, k + 1)).sum();
    let b_nu = 4.0 * nu_m2 / (3.0 * (1.0 + r) * l_nu);
    let tail_const = 3.0 * l_nu * (1.0 + r).sqrt() / (4.0 * PI.sqrt());
    let total: f64 = nu.iter().sum();
    let kf = k_neg as f64 + 0.5;
    Ok(StepLaw {
        r,
        c_plus: pos.c_plus,
        k_neg,
        k_pos,
        nu,
        pos_tail_bound: pos.tail_bound,
        truncation_mass: 1.0 - total,
        neg_tail_mass: tail_const * (2.0 / 3.0) * kf.powf(-1.5),
        neg_tail_mean: tail_const * 2.0 * kf.powf(-0.5),
        l_nu: Some(l_nu),
        b_nu: Some(b_nu),
        tail_const: Some(tail_const),
        sym: None,
        positive: Some(pos.clone()),
    })
}

/// Two-sided law of a critical weight sequence at `g = 1`.
pub fn step_law(q: &WeightSequence, k_neg: i64) -> Result<StepLaw> {
    if let Family::SymmetricCritical { r, a } = *q.family() {
        return symmetric_family(r, a);
    }
    let cd = crate::criticality::solve_boltzmann(q, 1.0)?;
    if !cd.classification.is_critical() {
        return Err(Error::NotCritical(format!("{:?}, margin {:e}", cd.classification, cd.margin)));
    }
    complete_nu(&crate::criticality::positive_half(q, &cd)?, k_neg)
}

/// `nu(-j)` for `j = 2..=n` from `h^(0)`-harmonicity, solved one perimeter at a time.
///
/// Valid for any admissible sequence, critical or not, and independent of the
/// kernel. Entry `i` of the result is `nu(-i-2)`.
pub fn nu_negative_by_harmonicity(pos: &StepLawPositive, n: i64) -> Result<Vec<f64>> {
    let h = HCache::float(pos.r, n + pos.k_max() + 2)?;
    let mut neg: Vec<f64> = Vec::with_capacity((n - 1).max(0) as usize);
    for j in 2..=n {
        // sum_{l >= -j} nu(l) h0(j + l) = h0(j) with h0(0) = 1
        let mut s = 0.0;
        for l in -1..=pos.k_max() {
            s += pos.nu(l) * h.get(0, j + l);
        }
        for (i, v) in neg.iter().enumerate() {
            s += v * h.get(0, j - i as i64 - 2);
        }
        neg.push(h.get(0, j) - s);
    }
    Ok(neg)
}

/// `W^(l) = nu(-l-2) c_+^(l+2) / 2`.
pub fn disk_coefficient(law: &StepLaw, l: i64) -> Result<f64> {
    if l < 0 || l + 2 > law.k_neg {
        return Err(Error::OutOfRange { l, l_max: law.k_neg - 2 });
    }
    Ok(law.nu(-l - 2) * law.c_plus.powi(l as i32 + 2) / 2.0)
}

/// `E|V(m_l)| = h^(0)(l) nu(-2) / nu(-l-2)`.
pub fn expected_volume(law: &StepLaw, l: i64) -> Result<f64> {
    if l < 1 || l + 2 > law.k_neg {
        return Err(Error::OutOfRange { l, l_max: law.k_neg - 2 });
    }
    let denom = law.nu(-l - 2);
    if denom <= 0.0 {
        return Err(Error::Domain(format!("no map with root face degree {l} (nu(-{}) = 0)", l + 2)));
    }
    let h = HCache::float(law.r, l)?;
    Ok(h.get(0, l) * (2.0 / (law.c_plus * law.c_plus)) / denom)
}

/// The symmetric critical law with `phi(t) = 1 - 2a sqrt(1+r^2+2r cos t) |sin(t/2)|`.
pub fn symmetric_family(r: f64, a: f64) -> Result<StepLaw> {
    let a_max = symmetric_a_max(r)?;
    if !(a > 0.0 && a <= a_max * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("a = {a} outside (0, {a_max}] for r = {r}: nu(0) would be negative")));
    }
    let omega0 = 2.0 * a * (1.0 + r);
    let omega1 = if r == 1.0 { 4.0 * a } else { 0.0 };
    let tail = SymmetricTail { a, omega0, omega1 };
    let n = SYM_FFT_LEN;
    let phi = |t: f64| 1.0 - 2.0 * a * (1.0 + r * r + 2.0 * r * t.cos()).max(0.0).sqrt() * (t / 2.0).sin().abs();
    // smooth remainder after removing the kinks at 0 and pi
    let mut buf: Vec<rustfft::num_complex::Complex<f64>> = (0..n)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            let v = phi(t) + omega0 * (t / 2.0).sin().abs() + omega1 * (t / 2.0).cos().abs();
            rustfft::num_complex::Complex::new(v, 0.0)
        })
        .collect();
    let mut planner = rustfft::FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = (n / 2 - 1) as i64;
    let mut nu = Vec::with_capacity((2 * half + 1) as usize);
    for k in -half..=half {
        let idx = k.rem_euclid(n as i64) as usize;
        let psi = buf[idx].re / n as f64;
        nu.push(psi + tail.nu(k));
    }
    if r == 1.0 {
        for (i, v) in nu.iter_mut().enumerate() {
            if (i as i64 - half) % 2 != 0 {
                *v = 0.0;
            }
        }
    }
    if nu[half as usize] < -1e-12 {
        return Err(Error::Domain(format!("nu(0) = {} < 0", nu[half as usize])));
    }
    let nu_m2 = nu[(half - 2) as usize];
    let c_plus = (2.0 / nu_m2).sqrt();
    let total: f64 = nu.iter().sum();
    Ok(StepLaw {
        r,
        c_plus,
        k_neg: half,
        k_pos: half,
        nu,
        pos_tail_bound: f64::INFINITY,
        truncation_mass: 1.0 - total,
        neg_tail_mass: omega0 / (2.0 * PI * (half as f64 + 0.5)),
        neg_tail_mean: f64::INFINITY,
        l_nu: None,
        b_nu: None,
        tail_const: None,
        sym: Some(tail),
        positive: None,
    })
}

/// Characteristic function `sum_k nu(k) e^(i k t)`.
///
/// Uses the closed form `1 + y^-1 M(c_+ y) sqrt((y-1)(y+r))`, `y = e^(it)`,
/// which needs only the non-negative half of `nu`; heavy-tailed symmetric
/// laws use their defining formula.
pub fn charfun(law: &StepLaw, t: f64) -> Complex64 {
    if let Some(s) = &law.sym {
        let r = law.r;
        let v = 1.0 - 2.0 * s.a * (1.0 + r * r + 2.0 * r * t.cos()).max(0.0).sqrt() * (t / 2.0).sin().abs();
        return Complex64::new(v, 0.0);
    }
    let pos = law.positive.as_ref().expect("kernel-completed law keeps its positive half");
    let y = Complex64::from_polar(1.0, t);
    let m_max = pos.k_max().max(0);
    let h = HCache::float(law.r, m_max).expect("valid ratio");
    // M(c_+ y) = -1 + sum_l y^l sum_{m >= l} nu(m) h0(m - l)
    let mut m_val = Complex64::new(-1.0, 0.0);
    let mut yl = Complex64::new(1.0, 0.0);
    for l in 0..=m_max {
        let c: f64 = (l..=m_max).map(|m| pos.nu(m) * h.get(0, m - l)).sum();
        m_val += yl * c;
        yl *= y;
    }
    let inv = y.inv();
    let root = y * (Complex64::new(1.0, 0.0) - inv).sqrt() * (Complex64::new(1.0, 0.0) + inv * law.r).sqrt();
    Complex64::new(1.0, 0.0) + inv * m_val * root
}

/// Characteristic function summed directly over the stored table.
pub fn charfun_direct(law: &StepLaw, t: f64) -> Complex64 {
    law.nu
        .iter()
        .enumerate()
        .map(|(i, &v)| Complex64::from_polar(v, (i as i64 - law.k_neg) as f64 * t))
        .sum()
}

/// Metadata and table export as CSV (`k,nu_k`) with `#` header lines.
pub fn export_csv<W: Write>(law: &StepLaw, mut out: W) -> Result<()> {
    writeln!(out, "# r={:.17e}", law.r)?;
    writeln!(out, "# c_plus={:.17e}", law.c_plus)?;
    if let Some(l) = law.l_nu {
        writeln!(out, "# L_nu={l:.17e}")?;
    }
    if let Some(b) = law.b_nu {
        writeln!(out, "# B_nu={b:.17e}")?;
    }
    writeln!(out, "# truncation_mass={:.17e}", law.truncation_mass)?;
    writeln!(out, "# pos_tail_bound={:.17e}", law.pos_tail_bound)?;
    writeln!(out, "k,nu_k")?;
    for (i, v) in law.nu.iter().enumerate() {
        writeln!(out, "{},{:.17e}", i as i64 - law.k_neg, v)?;
    }
    Ok(())
}
