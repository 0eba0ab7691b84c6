//! Solving for `(c_+, r)` and classifying a weight sequence.
//!
//! With `x = c_+ sqrt(g)` the positive half of the step law is
//! `nu(k) = q_{k+2} x^k` and `nu(-2) = 2 g / x^2`, so `g` enters the second
//! harmonicity equation linearly:
//!
//! ```text
//! R1(x, r) = sum_{k>=-1} nu(k) h0(k+1) - h0(1) = 0
//! g = G(x, r) = x^2 (h0(2) - sum_{k>=-1} nu(k) h0(k+2)) / 2
//! ```
//!
//! Along the branch `r = r(x)` solving `R1 = 0`, `G` increases until the
//! margin `1 - sum_{l>=0} h1(l+1) nu(l)` vanishes. That fold is the critical
//! point; a sequence is admissible iff `g <= G` at the fold.

use serde::{Deserialize, Serialize};

use crate::hfun::series_coeffs;
use crate::walk::symmetric_family;
use crate::weights::{Family, StepLawPositive, WeightSequence, TAIL_TOL};
use crate::{Error, Result};

pub const RESIDUAL_TOL: f64 = 1e-12;
pub const MARGIN_TOL: f64 = 1e-9;
const FOLD_SNAP: f64 = 1e-12;
const R_SCAN_STEPS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    NotAdmissible,
    Subcritical,
    Critical,
    RegularCritical,
    CriticalNonRegular,
}

impl Classification {
    pub fn is_critical(self) -> bool {
        matches!(self, Classification::Critical | Classification::RegularCritical | Classification::CriticalNonRegular)
    }

    pub fn is_admissible(self) -> bool {
        self != Classification::NotAdmissible
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MiermontReport {
    pub f_bullet_residual: f64,
    pub f_diamond_residual: f64,
    pub a0: f64,
    pub a1: f64,
    /// `A1 + 2 sqrt(z+) A0`.
    pub scalar: f64,
    /// `sum_{l>=0} h1(l+1) nu(l)`, which equals the scalar.
    pub scalar_from_margin: f64,
    pub divergent: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalData {
    pub c_plus: f64,
    pub c_minus: f64,
    pub r: f64,
    pub z_plus: f64,
    pub z_diamond: f64,
    pub margin: f64,
    pub classification: Classification,
    pub g: f64,
    /// Largest `g` at which the sequence is admissible.
    pub g_critical: f64,
    pub residuals: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub miermont: Option<MiermontReport>,
}

impl CriticalData {
    fn new(c_plus: f64, r: f64, g: f64, g_critical: f64, margin: f64, residuals: [f64; 2]) -> Self {
        CriticalData {
            c_plus,
            c_minus: -r * c_plus,
            r,
            z_plus: ((1.0 + r) * c_plus / 4.0).powi(2),
            z_diamond: (1.0 - r) * c_plus / 2.0,
            margin,
            classification: Classification::Subcritical,
            g,
            g_critical,
            residuals,
            miermont: None,
        }
    }
}

/// The positive half of the step law at `x = c_+ sqrt(g)`, or `None` if the
/// weights are not summable there.
struct Branch {
    nu: Vec<f64>,
}

impl Branch {
    fn at(q: &WeightSequence, x: f64) -> Option<Branch> {
        let top = q.truncation(x, TAIL_TOL)?.max(1);
        let nu = (1..=top).map(|d| q.weighted(d, x)).collect();
        Some(Branch { nu })
    }

    // nu[i] = nu(i - 1)
    fn k_max(&self) -> i64 {
        self.nu.len() as i64 - 2
    }

    /// `(R1, margin, G / x^2 * 2)` at ratio `r`.
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let n = self.nu.len() + 3;
        let h0 = series_coeffs(0.5, 0.5, r, n);
        let h1 = series_coeffs(1.5, 0.5, r, n);
        let mut r1 = -h0[1];
        let mut s2 = 0.0;
        let mut m = 0.0;
        for (i, &v) in self.nu.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            // k = i - 1
            r1 += v * h0[i];
            s2 += v * h0[i + 1];
            if i >= 1 {
                m += v * h1[i - 1];
            }
        }
        (r1, 1.0 - m, h0[2] - s2)
    }
}

struct Solver<'a> {
    q: &'a WeightSequence,
    bipartite: bool,
}

#[derive(Debug, Clone, Copy)]
struct Point {
    x: f64,
    r: f64,
    margin: f64,
    g: f64,
}

impl<'a> Solver<'a> {
    fn new(q: &'a WeightSequence) -> Self {
        Solver { q, bipartite: q.is_bipartite() }
    }

    /// The branch point above `x`, or `None` if it does not exist there.
    fn point(&self, x: f64) -> Option<Point> {
        let b = Branch::at(self.q, x)?;
        let r = if self.bipartite { 1.0 } else { self.branch_ratio(&b)? };
        let (_, margin, s) = b.eval(r);
        Some(Point { x, r, margin, g: x * x * s / 2.0 })
    }

    // largest root r < 1 of R1(x, .); R1(x, 1) >= 0
    fn branch_ratio(&self, b: &Branch) -> Option<f64> {
        let f = |r: f64| b.eval(r).0;
        let mut hi = 1.0;
        let mut f_hi = f(hi);
        if f_hi == 0.0 {
            return Some(1.0);
        }
        for i in 1..=R_SCAN_STEPS {
            let lo = 1.0 - 2.0 * i as f64 / R_SCAN_STEPS as f64;
            let lo = if i == R_SCAN_STEPS { -1.0 + 1e-12 } else { lo };
            let f_lo = f(lo);
            if f_lo.signum() != f_hi.signum() || f_lo == 0.0 {
                return Some(bisect(f, lo, hi, f_lo));
            }
            hi = lo;
            f_hi = f_lo;
        }
        None
    }

    /// The critical point: the branch point with zero margin.
    fn fold(&self) -> Result<Point> {
        let mut x = 1e-3;
        let mut lo = None;
        let mut hi = None;
        for _ in 0..400 {
            match self.point(x) {
                Some(p) if p.margin > 0.0 => lo = Some(p),
                Some(p) if p.margin == 0.0 => return Ok(p),
                _ if lo.is_some() => {
                    hi = Some(x);
                    break;
                }
                _ => {}
            }
            x *= 1.125;
        }
        let (mut lo, mut hi) = match (lo, hi) {
            (Some(l), Some(h)) => (l, h),
            _ => return Err(Error::SolverFailure("could not bracket the critical point".into())),
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo.x + hi);
            if mid <= lo.x || mid >= hi {
                break;
            }
            match self.point(mid) {
                Some(p) if p.margin >= 0.0 => lo = p,
                _ => hi = mid,
            }
        }
        Ok(lo)
    }

    /// Branch point with `G = g` below the fold.
    fn subcritical(&self, g: f64, fold: &Point) -> Result<Point> {
        let mut lo = 0.0;
        let mut hi = fold.x;
        let mut best = *fold;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let p = self
                .point(mid)
                .ok_or_else(|| Error::SolverFailure(format!("branch lost at x = {mid}")))?;
            if p.g < g {
                lo = mid;
            } else {
                hi = mid;
                best = p;
            }
        }
        Ok(best)
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let s_lo = f_lo.signum();
    if f_lo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `(R1, R2)` at `(c_+, r)` for the deformed sequence `q_g`.
pub fn residuals(q: &WeightSequence, g: f64, c_plus: f64, r: f64) -> Result<[f64; 2]> {
    let x = c_plus * g.sqrt();
    let b = Branch::at(q, x).ok_or_else(|| Error::Divergent(format!("weights not summable at c_+ = {c_plus}")))?;
    let (r1, _, s) = b.eval(r);
    Ok([r1, 2.0 / (c_plus * c_plus) - s])
}

/// Solves the critical equations for `q_g` and classifies the result.
///
/// Sequences that are not admissible yield a result with negative margin
/// (`g_critical - g`) rather than an error.
pub fn solve_boltzmann(q: &WeightSequence, g: f64) -> Result<CriticalData> {
    if !(g > 0.0 && g <= 1.0) {
        return Err(Error::Domain(format!("g = {g} outside (0, 1]")));
    }
    let rep = crate::weights::validate(q)?;
    if !rep.nonnegative {
        return Err(Error::InvalidWeights("negative weight".into()));
    }
    if !rep.non_degenerate {
        return Err(Error::InvalidWeights("sequence has no face of degree >= 3".into()));
    }
    if let Family::SymmetricCritical { r, a } = *q.family() {
        if g == 1.0 {
            return symmetric_data(r, a);
        }
    }
    let solver = Solver::new(q);
    let fold = solver.fold()?;
    let g_crit = fold.g;
    if g_crit.is_nan() || g_crit <= 0.0 {
        return Err(Error::SolverFailure(format!("critical deformation g* = {g_crit}")));
    }
    let snap = (g - g_crit).abs() <= FOLD_SNAP * g_crit.max(1.0);
    if !snap && g > g_crit {
        let c = fold.x / g.sqrt();
        let mut cd = CriticalData::new(c, fold.r, g, g_crit, g_crit - g, [f64::NAN; 2]);
        cd.classification = Classification::NotAdmissible;
        return Ok(cd);
    }
    let p = if snap { fold } else { solver.subcritical(g, &fold)? };
    let c = p.x / g.sqrt();
    let res = residuals(q, g, c, p.r)?;
    let mut cd = CriticalData::new(c, p.r, g, g_crit, p.margin, res);
    cd.classification = classify(q, &cd);
    Ok(cd)
}

fn symmetric_data(r: f64, a: f64) -> Result<CriticalData> {
    let law = symmetric_family(r, a)?;
    // margin = -(h1-defect at k = 1) since h1(0) = 0
    let defect = law.harmonic_defects(1, 1)?[0];
    let mut cd = CriticalData::new(law.c_plus, r, 1.0, 1.0, -defect, [0.0; 2]);
    cd.classification = Classification::CriticalNonRegular;
    Ok(cd)
}

/// Classification from the margin and the decay of the weights.
pub fn classify(q: &WeightSequence, cd: &CriticalData) -> Classification {
    if cd.classification == Classification::NotAdmissible || cd.margin < -MARGIN_TOL {
        return Classification::NotAdmissible;
    }
    if cd.margin > MARGIN_TOL {
        return Classification::Subcritical;
    }
    if let Family::SymmetricCritical { .. } = q.family() {
        return Classification::CriticalNonRegular;
    }
    if q.is_finite() {
        return Classification::RegularCritical;
    }
    let x = cd.c_plus * cd.g.sqrt();
    let ratio = q.tail_ratio();
    if ratio > 0.0 && ratio * x < 1.0 {
        Classification::RegularCritical
    } else {
        Classification::Critical
    }
}

/// Positive half of the step law for a solved datum.
pub fn positive_half(q: &WeightSequence, cd: &CriticalData) -> Result<StepLawPositive> {
    let x = cd.c_plus * cd.g.sqrt();
    let b = Branch::at(q, x).ok_or_else(|| Error::Divergent(format!("weights not summable at c_+ = {}", cd.c_plus)))?;
    let tail_bound = if q.is_finite() { 0.0 } else { TAIL_TOL };
    Ok(StepLawPositive { c_plus: cd.c_plus, r: cd.r, nu: b.nu, nu_m2: 2.0 / (cd.c_plus * cd.c_plus), tail_bound })
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for i in 1..=n {
        t[i] = t[i - 1] + (i as f64).ln();
    }
    t
}

/// Evaluates the bullet/diamond fixed-point system and `A0`, `A1`.
pub fn miermont_check(q: &WeightSequence, cd: &CriticalData) -> MiermontReport {
    let g = cd.g;
    let x = cd.c_plus * g.sqrt();
    let (zp, z0) = (cd.z_plus, cd.z_diamond);
    let nan_report = |divergent| MiermontReport {
        f_bullet_residual: f64::NAN,
        f_diamond_residual: f64::NAN,
        a0: f64::NAN,
        a1: f64::NAN,
        scalar: f64::NAN,
        scalar_from_margin: 1.0 - cd.margin,
        divergent,
        passed: false,
    };
    if !cd.classification.is_admissible() {
        return nan_report(Branch::at(q, x).is_none());
    }
    let top = match q.truncation(x, TAIL_TOL) {
        Some(t) => t.max(4) as usize,
        None => return nan_report(true),
    };
    let lf = ln_factorials(2 * top + 4);
    let lb = |n: usize, k: usize| lf[n] - lf[k] - lf[n - k];
    let (lzp, lz0) = (zp.ln(), z0.ln());
    // x^k y^k' as a log, with 0^0 = 1
    let mono = |k: usize, kp: usize| -> Option<f64> {
        if kp > 0 && z0 == 0.0 {
            None
        } else {
            Some(k as f64 * lzp + if kp > 0 { kp as f64 * lz0 } else { 0.0 })
        }
    };
    let (mut fb, mut fd, mut dx, mut dy) = (0.0, 0.0, 0.0, 0.0);
    for d in 1..=top {
        // ln of the deformed weight, via q_d x^(d-2) = (q_g)_d c^(d-2)
        let w = q.weighted(d as u32, x);
        if w == 0.0 {
            continue;
        }
        let lq = w.ln() - (d as f64 - 2.0) * cd.c_plus.ln();
        // bullet: d = 2 + 2k + k'
        if d >= 2 {
            for k in 0..=(d - 2) / 2 {
                let kp = d - 2 - 2 * k;
                if let Some(m) = mono(k, kp) {
                    fb += (lq + m + lb(2 * k + kp + 1, k + 1) + lb(k + kp, k)).exp();
                }
            }
        }
        // diamond: d = 1 + 2k + k'
        for k in 0..=(d - 1) / 2 {
            let kp = d - 1 - 2 * k;
            let c = lq + lb(2 * k + kp, k) + lb(k + kp, k);
            if let Some(m) = mono(k, kp) {
                fd += (c + m).exp();
            }
            if k >= 1 {
                if let Some(m) = mono(k - 1, kp) {
                    dx += k as f64 * (c + m).exp();
                }
            }
            if kp >= 1 {
                if let Some(m) = mono(k, kp - 1) {
                    dy += kp as f64 * (c + m).exp();
                }
            }
        }
    }
    let a0 = dx / 2.0;
    let a1 = dy;
    let scalar = a1 + 2.0 * zp.sqrt() * a0;
    let fb_res = fb - (1.0 - 1.0 / zp);
    let fd_res = fd - z0;
    let from_margin = 1.0 - cd.margin;
    let tol = 1e-8;
    let mut passed = fb_res.abs() <= tol && fd_res.abs() <= tol && scalar <= 1.0 + tol;
    if cd.classification.is_critical() {
        passed &= (scalar - 1.0).abs() <= tol;
    } else {
        passed &= scalar < 1.0 - MARGIN_TOL;
    }
    MiermontReport {
        f_bullet_residual: fb_res,
        f_diamond_residual: fd_res,
        a0,
        a1,
        scalar,
        scalar_from_margin: from_margin,
        divergent: false,
        passed,
    }
}

/// Scale `t*` at which `t * shape` is critical, with the datum there.
pub fn tune_critical(shape: &WeightSequence) -> Result<(f64, CriticalData)> {
    let rep = crate::weights::validate(shape)?;
    if !rep.non_degenerate || !rep.nonnegative {
        return Err(Error::InvalidWeights("shape must be non-negative with a face of degree >= 3".into()));
    }
    let g_star = |t: f64| -> Option<f64> { Solver::new(&shape.scaled(t)).fold().ok().map(|p| p.g) };
    // g* decreases in t; find t with g*(t) = 1
    let mut lo = 1.0;
    let mut hi = 1.0;
    let mut found = false;
    for _ in 0..200 {
        match g_star(lo) {
            Some(v) if v > 1.0 => {
                found = true;
                break;
            }
            _ => lo *= 0.5,
        }
    }
    if !found {
        return Err(Error::BoundaryNotFound("no admissible scale in bracket".into()));
    }
    found = false;
    for _ in 0..200 {
        match g_star(hi) {
            Some(v) if v < 1.0 => {
                found = true;
                break;
            }
            _ => hi *= 2.0,
        }
    }
    if !found {
        return Err(Error::BoundaryNotFound("no non-admissible scale in bracket".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match g_star(mid) {
            Some(v) if v >= 1.0 => lo = mid,
            _ => hi = mid,
        }
    }
    let t = lo;
    let q = shape.scaled(t);
    let solver = Solver::new(&q);
    let fold = solver.fold()?;
    let c = fold.x;
    let res = residuals(&q, 1.0, c, fold.r)?;
    let mut cd = CriticalData::new(c, fold.r, 1.0, fold.g, fold.margin, res);
    cd.classification = classify(&q, &cd);
    Ok((t, cd))
}

/// Damped Newton on `(R1, R2)` in `(c_+, s)` with `r = tanh(s)`.
///
/// Returns `None` when the iteration leaves the domain or stalls.
pub fn newton(q: &WeightSequence, g: f64, c0: f64, r0: f64) -> Option<(f64, f64)> {
    let bip = q.is_bipartite();
    let f = |c: f64, s: f64| -> Option<[f64; 2]> {
        if c.is_nan() || c <= 0.0 {
            return None;
        }
        let r = if bip { 1.0 } else { s.tanh() };
        residuals(q, g, c, r).ok()
    };
    let norm = |v: [f64; 2]| if bip { v[1].abs() } else { v[0].abs().max(v[1].abs()) };
    let mut c = c0;
    let mut s = if bip { 0.0 } else { r0.clamp(-0.999, 0.999).atanh() };
    let mut fv = f(c, s)?;
    for _ in 0..200 {
        if norm(fv) <= RESIDUAL_TOL * 1e-2 {
            break;
        }
        let hc = 1e-7 * c.abs().max(1.0);
        let fc = f(c + hc, s)?;
        let (dc, ds) = if bip {
            let j = (fc[1] - fv[1]) / hc;
            if j == 0.0 {
                return None;
            }
            (-fv[1] / j, 0.0)
        } else {
            let hs = 1e-7 * s.abs().max(1.0);
            let fs = f(c, s + hs)?;
            let j = [[(fc[0] - fv[0]) / hc, (fs[0] - fv[0]) / hs], [(fc[1] - fv[1]) / hc, (fs[1] - fv[1]) / hs]];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            ((-fv[0] * j[1][1] + fv[1] * j[0][1]) / det, (-j[0][0] * fv[1] + j[1][0] * fv[0]) / det)
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let (nc, ns) = (c + lambda * dc, s + lambda * ds);
            if let Some(nf) = f(nc, ns) {
                if norm(nf) < norm(fv) {
                    c = nc;
                    s = ns;
                    fv = nf;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (norm(fv) <= 1e-10).then(|| (c, if bip { 1.0 } else { s.tanh() }))
}

/// Admissible Newton limits from eight spread starting points.
///
/// Roots with negative margin (the far side of the fold) are discarded.
pub fn uniqueness_probe(q: &WeightSequence, g: f64) -> Vec<(f64, f64)> {
    let starts = [(2.2, 0.0), (2.5, 0.5), (3.0, -0.5), (3.0, 0.9), (4.0, 0.2), (2.8, -0.8), (3.5, 0.7), (2.1, 0.3)];
    let mut out = Vec::new();
    for &(c0, r0) in &starts {
        if let Some((c, r)) = newton(q, g, c0, r0) {
            let x = c * g.sqrt();
            if let Some(b) = Branch::at(q, x) {
                if b.k_max() >= -1 && b.eval(r).1 >= -MARGIN_TOL && c > 2.0 {
                    out.push((c, r));
                }
            }
        }
    }
    out
}

/// `c_+` of the deformed sequence `q_g`.
pub fn c_plus_at(q: &WeightSequence, g: f64) -> Result<f64> {
    Ok(solve_boltzmann(q, g)?.c_plus)
}
