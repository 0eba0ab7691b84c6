//! Weight sequences, the `q <-> nu` dictionary and the preset families.
//!
//! A weight sequence assigns `q_k >= 0` to faces of degree `k`. Given the
//! constants `c_+` and `r` the non-negative half of the step law is
//!
//! ```text
//! nu(k) = q_{k+2} c_+^k   (k >= -1),        nu(-2) = 2 / c_+^2 ,
//! ```
//!
//! and conversely `q_k = (nu(-2)/2)^((k-2)/2) nu(k-2)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::hfun::HCache;
use crate::rational;
use crate::{Error, Result};

/// Relative tail tolerance used when materializing infinite sequences.
pub const TAIL_TOL: f64 = 1e-17;

/// Tag recording where a weight sequence came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum Family {
    Custom,
    TwoPAngulation { p: u32 },
    OddAngulation { p: u32 },
    Geometric { h: f64 },
    SymmetricCritical { r: f64, a: f64 },
}

#[derive(Debug, Clone)]
enum Tail {
    /// `q_k = amp * ratio^k` for every `k >= 1`.
    Geometric { amp: f64, ratio: f64 },
    /// Explicit values `q_1..q_K`; zero beyond `K` up to underflow.
    Table { values: Arc<Vec<f64>> },
}

/// A face-weight sequence.
#[derive(Debug, Clone)]
pub struct WeightSequence {
    finite: BTreeMap<u32, f64>,
    exact: Option<BTreeMap<u32, BigRational>>,
    tail: Option<Tail>,
    family: Family,
}

impl WeightSequence {
    /// Finite sequence from float weights.
    pub fn from_floats<I: IntoIterator<Item = (u32, f64)>>(terms: I) -> Self {
        let finite: BTreeMap<u32, f64> = terms.into_iter().filter(|&(_, v)| v != 0.0).collect();
        WeightSequence { finite, exact: None, tail: None, family: Family::Custom }
    }

    /// Finite sequence from exact rational weights.
    pub fn from_rationals<I: IntoIterator<Item = (u32, BigRational)>>(terms: I) -> Self {
        let exact: BTreeMap<u32, BigRational> = terms.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        let finite = exact.iter().map(|(&k, v)| (k, rational::to_f64(v))).collect();
        WeightSequence { finite, exact: Some(exact), tail: None, family: Family::Custom }
    }

    fn geometric_tail(amp: f64, ratio: f64, family: Family) -> Self {
        WeightSequence { finite: BTreeMap::new(), exact: None, tail: Some(Tail::Geometric { amp, ratio }), family }
    }

    fn table_tail(values: Vec<f64>, family: Family) -> Self {
        WeightSequence { finite: BTreeMap::new(), exact: None, tail: Some(Tail::Table { values: Arc::new(values) }), family }
    }

    pub fn with_family(mut self, family: Family) -> Self {
        self.family = family;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// `q_k` as a float.
    pub fn q(&self, k: u32) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let base = self.finite.get(&k).copied().unwrap_or(0.0);
        match &self.tail {
            None => base,
            Some(Tail::Geometric { amp, ratio }) => base + amp * ratio.powi(k as i32),
            Some(Tail::Table { values }) => base + values.get(k as usize - 1).copied().unwrap_or(0.0),
        }
    }

    /// `q_k x^(k-2)`, without intermediate overflow for geometric tails.
    pub fn weighted(&self, k: u32, x: f64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let base = self.finite.get(&k).copied().unwrap_or(0.0);
        let e = k as i32 - 2;
        let head = if base == 0.0 { 0.0 } else { base * x.powi(e) };
        match &self.tail {
            None => head,
            Some(Tail::Geometric { amp, ratio }) => head + amp * ratio * ratio * (ratio * x).powi(e),
            Some(Tail::Table { values }) => {
                let v = base + values.get(k as usize - 1).copied().unwrap_or(0.0);
                if v == 0.0 {
                    0.0
                } else {
                    v * x.powi(e)
                }
            }
        }
    }

    /// Exact weights, when every weight is a known rational.
    pub fn exact(&self) -> Option<&BTreeMap<u32, BigRational>> {
        if self.tail.is_some() {
            None
        } else {
            self.exact.as_ref()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tail.is_none()
    }

    /// Largest degree with a non-zero weight, if the support is finite.
    pub fn max_degree(&self) -> Option<u32> {
        match &self.tail {
            None => self.finite.keys().next_back().copied(),
            Some(Tail::Table { values }) => {
                let t = values.iter().rposition(|&v| v != 0.0).map(|i| i as u32 + 1).unwrap_or(0);
                Some(t.max(self.finite.keys().next_back().copied().unwrap_or(0)))
            }
            Some(Tail::Geometric { .. }) => None,
        }
    }

    /// Smallest degree with a non-zero weight.
    pub fn min_degree(&self) -> Option<u32> {
        let f = self.finite.keys().next().copied();
        let t = match &self.tail {
            None => None,
            Some(Tail::Geometric { amp, .. }) => (*amp > 0.0).then_some(1),
            Some(Tail::Table { values }) => values.iter().position(|&v| v != 0.0).map(|i| i as u32 + 1),
        };
        match (f, t) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Geometric decay rate bounding `q_{k+1} / q_k` in the tail.
    pub fn tail_ratio(&self) -> f64 {
        match &self.tail {
            Some(Tail::Geometric { ratio, .. }) => *ratio,
            _ => 0.0,
        }
    }

    /// Non-zero weights with degree `<= k_max`.
    pub fn terms_upto(&self, k_max: u32) -> Vec<(u32, f64)> {
        match &self.tail {
            None => self.finite.range(..=k_max).map(|(&k, &v)| (k, v)).collect(),
            Some(_) => (1..=k_max).map(|k| (k, self.q(k))).filter(|&(_, v)| v != 0.0).collect(),
        }
    }

    /// Whether every odd weight vanishes.
    pub fn is_bipartite(&self) -> bool {
        match &self.tail {
            Some(Tail::Geometric { amp, .. }) if *amp > 0.0 => false,
            Some(Tail::Table { values }) => {
                values.iter().enumerate().all(|(i, &v)| (i + 1) % 2 == 0 || v == 0.0)
                    && self.finite.keys().all(|k| k % 2 == 0)
            }
            _ => self.finite.keys().all(|k| k % 2 == 0),
        }
    }

    /// Degree cut-off beyond which `sum_{k>K} q_k x^(k-2) poly(k)` is below
    /// `tol` relative to the leading terms, or `None` if the series diverges
    /// at `x`.
    pub fn truncation(&self, x: f64, tol: f64) -> Option<u32> {
        match &self.tail {
            None => Some(self.max_degree().unwrap_or(0)),
            Some(Tail::Table { values }) => Some(values.len().max(self.finite.keys().next_back().copied().unwrap_or(0) as usize) as u32),
            Some(Tail::Geometric { ratio, .. }) => {
                let rho = ratio * x;
                if rho.is_nan() || rho >= 1.0 {
                    return None;
                }
                // terms behave like rho^k k^(5/2); stop once the remaining tail is negligible
                let mut k = 8u32;
                loop {
                    let kf = k as f64;
                    let tail = rho.powf(kf) * kf.powf(2.5) / (1.0 - rho).powi(4);
                    if tail < tol || k > 200_000 {
                        return (k <= 200_000).then_some(k);
                    }
                    k += 8;
                }
            }
        }
    }

    /// The sequence `t * q`.
    pub fn scaled(&self, t: f64) -> WeightSequence {
        let mut out = WeightSequence {
            finite: self.finite.iter().map(|(&k, &v)| (k, v * t)).collect(),
            exact: None,
            tail: self.tail.clone().map(|tail| match tail {
                Tail::Geometric { amp, ratio } => Tail::Geometric { amp: amp * t, ratio },
                Tail::Table { values } => Tail::Table { values: Arc::new(values.iter().map(|v| v * t).collect()) },
            }),
            family: Family::Custom,
        };
        if let (Some(ex), true) = (&self.exact, t == 1.0) {
            out.exact = Some(ex.clone());
        }
        out
    }

    /// The deformed sequence `(q_g)_k = g^((k-2)/2) q_k`.
    pub fn deformed(&self, g: f64) -> WeightSequence {
        if g == 1.0 {
            return self.clone();
        }
        let sg = g.sqrt();
        WeightSequence {
            finite: self.finite.iter().map(|(&k, &v)| (k, v * sg.powi(k as i32 - 2))).collect(),
            exact: None,
            tail: self.tail.clone().map(|tail| match tail {
                Tail::Geometric { amp, ratio } => Tail::Geometric { amp: amp / g, ratio: ratio * sg },
                Tail::Table { values } => Tail::Table {
                    values: Arc::new(values.iter().enumerate().map(|(i, v)| v * sg.powi(i as i32 - 1)).collect()),
                },
            }),
            family: Family::Custom,
        }
    }

    /// Finite truncation keeping degrees `<= k_max`.
    pub fn truncated(&self, k_max: u32) -> WeightSequence {
        WeightSequence::from_floats(self.terms_upto(k_max)).with_family(self.family.clone())
    }
}

/// Outcome of [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub nonnegative: bool,
    pub non_degenerate: bool,
    pub bipartite: bool,
    /// gcd of the lattice generated by the support.
    pub lattice_d: u32,
    pub finite_support: bool,
    pub exact: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.nonnegative && self.non_degenerate
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Checks non-negativity and non-degeneracy and computes the parity lattice.
pub fn validate(q: &WeightSequence) -> Result<ValidationReport> {
    let k_scan = q.max_degree().unwrap_or(64).max(3);
    let terms = q.terms_upto(k_scan);
    if terms.is_empty() {
        return Err(Error::InvalidWeights("empty support".into()));
    }
    let nonnegative = terms.iter().all(|&(_, v)| v >= 0.0)
        && q.exact.as_ref().is_none_or(|ex| ex.values().all(|v| !v.is_negative()));
    let non_degenerate = terms.iter().any(|&(k, v)| k >= 3 && v > 0.0);
    let mut d = 0u32;
    for &(deg, v) in &terms {
        if v <= 0.0 {
            continue;
        }
        // q_{2k+2} > 0 contributes k; q_{k+2} > 0 with k odd contributes k
        if deg >= 4 && deg % 2 == 0 {
            d = gcd(d, (deg - 2) / 2);
        }
        if deg >= 3 && (deg - 2) % 2 == 1 {
            d = gcd(d, deg - 2);
        }
    }
    Ok(ValidationReport {
        nonnegative,
        non_degenerate,
        bipartite: q.is_bipartite(),
        lattice_d: d,
        finite_support: q.is_finite(),
        exact: q.exact().is_some(),
    })
}

/// Non-negative half of the step law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepLawPositive {
    pub c_plus: f64,
    pub r: f64,
    /// `nu[i] = nu(i - 1)` for `i = 0..`, i.e. starting at `nu(-1)`.
    pub nu: Vec<f64>,
    pub nu_m2: f64,
    /// Bound on `sum_{k > K} nu(k) k^(5/2)` for the omitted tail.
    pub tail_bound: f64,
}

impl StepLawPositive {
    /// `nu(k)` for `k >= -2`; zero beyond the stored range.
    pub fn nu(&self, k: i64) -> f64 {
        if k == -2 {
            self.nu_m2
        } else if k >= -1 {
            self.nu.get((k + 1) as usize).copied().unwrap_or(0.0)
        } else {
            0.0
        }
    }

    /// Largest stored jump.
    pub fn k_max(&self) -> i64 {
        self.nu.len() as i64 - 2
    }
}

/// `nu(k) = q_{k+2} c_+^k` for `k >= -1` and `nu(-2) = 2/c_+^2`.
pub fn nu_from_q(q: &WeightSequence, c_plus: f64, r: f64) -> Result<StepLawPositive> {
    if c_plus.is_nan() || c_plus <= 2.0 {
        return Err(Error::Domain(format!("c_plus = {c_plus} must exceed 2")));
    }
    let k_top = q
        .truncation(c_plus, TAIL_TOL)
        .ok_or_else(|| Error::Divergent(format!("weight tail not summable at c_plus = {c_plus}")))?;
    let mut nu = Vec::with_capacity(k_top as usize + 1);
    for deg in 1..=k_top.max(1) {
        nu.push(q.weighted(deg, c_plus));
    }
    while nu.len() > 1 && *nu.last().unwrap() == 0.0 {
        nu.pop();
    }
    let tail_bound = if q.is_finite() { 0.0 } else { TAIL_TOL };
    Ok(StepLawPositive { c_plus, r, nu, nu_m2: 2.0 / (c_plus * c_plus), tail_bound })
}

/// Inverse of [`nu_from_q`]: `q_k = (nu(-2)/2)^((k-2)/2) nu(k-2)`.
pub fn q_from_nu(nu: &StepLawPositive) -> WeightSequence {
    let s = (nu.nu_m2 / 2.0).sqrt();
    WeightSequence::from_floats(
        nu.nu.iter().enumerate().map(|(i, &v)| {
            let deg = i as u32 + 1;
            (deg, s.powi(deg as i32 - 2) * v)
        }),
    )
}

/// `W_bullet^(l) = c_+^l h_r^(0)(l)`.
pub fn pointed_disk(l: i64, c_plus: f64, r: f64) -> Result<f64> {
    if l < 0 {
        return Err(Error::Domain(format!("perimeter {l} must be non-negative")));
    }
    let h = HCache::float(r, l)?;
    Ok(c_plus.powi(l as i32) * h.get(0, l))
}

/// `W_bullet^(l)` from the mobile sum `sum_k l!/((k!)^2 (l-2k)!) z+^k z0^(l-2k)`.
pub fn pointed_disk_binomial(l: i64, c_plus: f64, r: f64) -> f64 {
    let zp = ((1.0 + r) * c_plus / 4.0).powi(2);
    let z0 = (1.0 - r) * c_plus / 2.0;
    let mut total = 0.0;
    for k in 0..=l / 2 {
        // l!/((k!)^2 (l-2k)!) = C(l, 2k) C(2k, k)
        let coeff = binom_f64(l as u64, 2 * k as u64) * binom_f64(2 * k as u64, k as u64);
        total += coeff * zp.powi(k as i32) * z0.powi((l - 2 * k) as i32);
    }
    total
}

pub(crate) fn binom_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Preset families with known critical weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Preset {
    TwoPAngulation { p: u32 },
    OddAngulation { p: u32 },
    Geometric { h: f64 },
    SymmetricCritical { r: f64, a: f64 },
}

impl Preset {
    pub fn quadrangulation() -> Self {
        Preset::TwoPAngulation { p: 2 }
    }

    pub fn triangulation() -> Self {
        Preset::OddAngulation { p: 1 }
    }
}

/// Closed-form constants attached to a preset.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ClosedForm {
    pub c_plus: Option<f64>,
    pub r: Option<f64>,
    pub nu_m2: Option<f64>,
    /// `(k, nu(k))` for the single positive jump of an angulation.
    pub nu_top: Option<(i64, f64)>,
    pub l_nu: Option<f64>,
    /// `(k, q_k)` for the single weight of an angulation.
    pub q_top: Option<(u32, f64)>,
}

#[derive(Debug, Clone)]
pub struct PresetData {
    pub weights: WeightSequence,
    pub closed: ClosedForm,
}

/// Builds the critical weight sequence of a preset family.
pub fn preset(p: Preset) -> Result<PresetData> {
    match p {
        Preset::TwoPAngulation { p } => two_p_angulation(p),
        Preset::OddAngulation { p } => odd_angulation(p),
        Preset::Geometric { h } => geometric(h),
        Preset::SymmetricCritical { r, a } => symmetric_critical(r, a),
    }
}

fn two_p_angulation(p: u32) -> Result<PresetData> {
    if p < 2 {
        return Err(Error::Domain(format!("2p-angulation needs p >= 2, got {p}")));
    }
    let pb = p as i64;
    let central = BigRational::from_integer(rational::binomial(2 * p as u64, p as u64));
    // q_2p = 2 (1 - 1/p)^(p-1) / (p C(2p,p))
    let q = rational::int(2) * rational::pow(&rational::ratio(pb - 1, pb), p - 1) / (rational::int(pb) * &central);
    let nu_top = BigRational::from_integer(num_bigint::BigInt::from(2).pow(2 * p - 1)) / (rational::int(pb) * &central);
    let closed = ClosedForm {
        c_plus: Some((4.0 * p as f64 / (p as f64 - 1.0)).sqrt()),
        r: Some(1.0),
        nu_m2: Some((p as f64 - 1.0) / (2.0 * p as f64)),
        nu_top: Some((2 * pb - 2, rational::to_f64(&nu_top))),
        l_nu: Some(4.0 * (p as f64 - 1.0) / 3.0),
        q_top: Some((2 * p, rational::to_f64(&q))),
    };
    let weights = WeightSequence::from_rationals([(2 * p, q)]).with_family(Family::TwoPAngulation { p });
    Ok(PresetData { weights, closed })
}

/// Root in `(-1, 1)` of `h^(1)(2p+1) - (3-r)/2 h^(1)(2p)` by bisection.
pub fn odd_angulation_ratio(p: u32) -> Result<f64> {
    let f = |r: f64| -> f64 {
        let h = HCache::float(r, 2 * p as i64 + 1).expect("valid ratio");
        h.get(1, 2 * p as i64 + 1) - 0.5 * (3.0 - r) * h.get(1, 2 * p as i64)
    };
    // scan for the sign change, then bisect
    let n = 2000;
    let mut prev_r = -1.0 + 1e-9;
    let mut prev_f = f(prev_r);
    for i in 1..=n {
        let r = -1.0 + 2.0 * i as f64 / n as f64 - if i == n { 1e-12 } else { 0.0 };
        let fr = f(r);
        if prev_f == 0.0 {
            return Ok(prev_r);
        }
        if prev_f.signum() != fr.signum() {
            let (mut lo, mut hi, mut flo) = (prev_r, r, prev_f);
            while hi - lo > 1e-15 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev_r = r;
        prev_f = fr;
    }
    Err(Error::SolverFailure(format!("no root of the odd-angulation polynomial for p = {p}")))
}

fn odd_angulation(p: u32) -> Result<PresetData> {
    if p < 1 {
        return Err(Error::Domain("odd angulation needs p >= 1".into()));
    }
    let r = odd_angulation_ratio(p)?;
    let pl = p as i64;
    let h = HCache::float(r, 2 * pl + 2)?;
    let nu_top = 1.0 / h.get(1, 2 * pl);
    let nu_m2 = h.get(1, 3) - h.get(1, 2 * pl + 2) * nu_top;
    let c_plus = (2.0 / nu_m2).sqrt();
    let q = nu_top / c_plus.powi(2 * p as i32 - 1);
    let mut closed = ClosedForm {
        c_plus: Some(c_plus),
        r: Some(r),
        nu_m2: Some(nu_m2),
        nu_top: Some((2 * pl - 1, nu_top)),
        l_nu: None,
        q_top: Some((2 * p + 1, q)),
    };
    if p == 1 {
        let s3 = 3f64.sqrt();
        closed.l_nu = Some(0.5 * (1.0 + 1.0 / s3));
    }
    let weights = WeightSequence::from_floats([(2 * p + 1, q)]).with_family(Family::OddAngulation { p });
    Ok(PresetData { weights, closed })
}

/// Amplitude and ratio of the critical geometric sequence `q_k = A beta^k`.
pub fn geometric_params(h: f64) -> (f64, f64) {
    let amp = 16.0 * h / ((h + 3.0) * (h - 1.0).powi(3));
    let beta = (h - 1.0).powf(1.5) * (h + 3.0).sqrt() / (2.0 * (h * h + 3.0));
    (amp, beta)
}

fn geometric(h: f64) -> Result<PresetData> {
    if h <= 1.0 || !h.is_finite() {
        return Err(Error::Domain(format!("geometric family needs H > 1, got {h}")));
    }
    let (amp, beta) = geometric_params(h);
    let h2 = h * h;
    let c_plus = 2.0 * (h2 + 1.0) / ((h - 1.0).powf(1.5) * (h + 3.0).sqrt());
    let closed = ClosedForm {
        c_plus: Some(c_plus),
        r: Some((h2 - 3.0) / (h2 + 1.0)),
        nu_m2: Some(2.0 / (c_plus * c_plus)),
        nu_top: None,
        l_nu: Some(0.5 * (h2 + 1.0)),
        q_top: None,
    };
    Ok(PresetData { weights: WeightSequence::geometric_tail(amp, beta, Family::Geometric { h }), closed })
}

/// Upper end of the admissible range of `a` for the symmetric family.
pub fn symmetric_a_max(r: f64) -> Result<f64> {
    use std::f64::consts::PI;
    if !(r > -1.0 && r <= 1.0) {
        return Err(Error::Domain(format!("ratio r = {r} must lie in (-1, 1]")));
    }
    if r == 0.0 || r == 1.0 {
        return Ok(PI / 4.0);
    }
    let denom = if r > 0.0 {
        let s = r.sqrt();
        2.0 * (r + 1.0) + (r - 1.0).powi(2) / s * (2.0 * s / (r + 1.0)).atanh()
    } else {
        let s = (-r).sqrt();
        2.0 * (r + 1.0) + (r - 1.0).powi(2) / s * (2.0 * s / (r + 1.0)).atan()
    };
    Ok(PI / denom)
}

fn symmetric_critical(r: f64, a: f64) -> Result<PresetData> {
    let law = crate::walk::symmetric_family(r, a)?;
    let c_plus = law.c_plus;
    // q_k = c_+^-(k-2) nu(k-2); keep degrees until two consecutive weights underflow
    let mut values = Vec::new();
    for deg in 1u32.. {
        let v = law.nu(deg as i64 - 2) * c_plus.powi(2 - deg as i32);
        let prev = values.last().copied().unwrap_or(1.0);
        if deg > 4 && ((v < 1e-300 && prev < 1e-300) || deg as i64 - 2 > law.k_pos()) {
            break;
        }
        values.push(v);
    }
    let closed = ClosedForm {
        c_plus: Some(c_plus),
        r: Some(r),
        nu_m2: Some(law.nu(-2)),
        nu_top: None,
        l_nu: None,
        q_top: None,
    };
    Ok(PresetData { weights: WeightSequence::table_tail(values, Family::SymmetricCritical { r, a }), closed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn validate_examples() {
        let quad = WeightSequence::from_rationals([(4, ratio(1, 12))]);
        let rep = validate(&quad).unwrap();
        assert!(rep.bipartite && rep.non_degenerate && rep.lattice_d == 1);
        let tri = WeightSequence::from_floats([(3, 0.2)]);
        assert!(!validate(&tri).unwrap().bipartite);
        let deg = WeightSequence::from_floats([(2, 0.5)]);
        assert!(!validate(&deg).unwrap().non_degenerate);
        let hex = WeightSequence::from_floats([(6, 0.01)]);
        assert_eq!(validate(&hex).unwrap().lattice_d, 2);
        assert!(validate(&WeightSequence::from_floats([])).is_err());
    }

    #[test]
    fn quadrangulation_dictionary() {
        let q = WeightSequence::from_rationals([(4, ratio(1, 12))]);
        let nu = nu_from_q(&q, 8f64.sqrt(), 1.0).unwrap();
        assert!((nu.nu(2) - 2.0 / 3.0).abs() < 1e-15);
        assert!((nu.nu(-2) - 0.25).abs() < 1e-15);
        let back = q_from_nu(&nu);
        assert!((back.q(4) - 1.0 / 12.0).abs() < 1e-16);
        let any = nu_from_q(&q, 10.0, 0.0).unwrap();
        assert!((any.nu_m2 - 0.02).abs() < 1e-17);
    }

    #[test]
    fn preset_constants() {
        let d = preset(Preset::quadrangulation()).unwrap();
        assert_eq!(d.weights.exact().unwrap()[&4], ratio(1, 12));
        assert!((d.closed.c_plus.unwrap() - 8f64.sqrt()).abs() < 1e-15);
        let g = preset(Preset::Geometric { h: 3.0 }).unwrap();
        assert!((g.closed.r.unwrap() - 0.6).abs() < 1e-15);
        assert!((g.closed.l_nu.unwrap() - 5.0).abs() < 1e-15);
        let t = preset(Preset::triangulation()).unwrap();
        assert!((t.closed.r.unwrap() - (2.0 * 3f64.sqrt() - 3.0)).abs() < 1e-14);
        assert!(preset(Preset::Geometric { h: 1.0 }).is_err());
        assert!(preset(Preset::TwoPAngulation { p: 1 }).is_err());
    }

    #[test]
    fn pointed_disk_small() {
        assert_eq!(pointed_disk(0, 3.0, 0.2).unwrap(), 1.0);
        assert!((pointed_disk(2, 8f64.sqrt(), 1.0).unwrap() - 4.0).abs() < 1e-14);
    }
}
