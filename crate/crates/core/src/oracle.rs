//! Exact enumeration of small maps.
//!
//! `T(l, D, F)` is the total weight of rooted planar maps whose root face has
//! degree `l`, whose `F` inner faces have total degree `D`. Removing the root
//! edge gives
//!
//! ```text
//! T(l, D, F) = sum_k q_k T(l+k-2, D-k, F-1)
//!            + sum_{l'=0}^{l-2} sum T(l', D1, F1) T(l-2-l', D-D1, F-F1),
//! ```
//!
//! with `T(0, 0, 0) = 1` for the vertex map. Both branches lower `l + D` by
//! two, so the table is filled by increasing `l + D`.
//!
//! The brute-force side enumerates rotation systems `(sigma, alpha)` on `2E`
//! darts: `alpha` a fixed-point-free involution, faces the cycles of
//! `sigma . alpha`, the root face the one through dart 0.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::criticality::{positive_half, solve_boltzmann};
use crate::walk::nu_negative_by_harmonicity;
use crate::weights::WeightSequence;
use crate::{rational, Error, Result};

/// Default and hard cap on the inner-degree budget.
pub const DEFAULT_D_MAX: u32 = 60;
pub const D_MAX_LIMIT: u32 = 120;
/// Largest edge count accepted by [`brute_force_maps`].
pub const BRUTE_E_MAX: u32 = 4;

type FaceDist = BTreeMap<u32, BigRational>;

/// Weighted counts `T(l, D, F)` for all `l + D <= l0 + d_max`, `D <= d_max`.
#[derive(Debug, Clone)]
pub struct EnumTable {
    pub q: BTreeMap<u32, BigRational>,
    pub l0: u32,
    pub d_max: u32,
    // cells[l][D]
    cells: Vec<Vec<FaceDist>>,
}

impl EnumTable {
    /// `T(l, D, F)`; zero outside the computed range.
    pub fn cell(&self, l: u32, d: u32, f: u32) -> BigRational {
        self.cells
            .get(l as usize)
            .and_then(|row| row.get(d as usize))
            .and_then(|m| m.get(&f))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Non-zero cells `(D, F, T)` at perimeter `l`.
    pub fn cells_at(&self, l: u32) -> Vec<(u32, u32, BigRational)> {
        let mut out = Vec::new();
        if let Some(row) = self.cells.get(l as usize) {
            for (d, m) in row.iter().enumerate() {
                for (&f, v) in m {
                    out.push((d as u32, f, v.clone()));
                }
            }
        }
        out
    }

    /// Largest `l + D` covered.
    pub fn span(&self) -> u32 {
        self.l0 + self.d_max
    }

    /// `sum_{D <= d, F} T(l, D, F)`; requires `l + d <= span`.
    pub fn disk_partial(&self, l: u32, d: u32) -> BigRational {
        self.cells_at(l).into_iter().filter(|(dd, _, _)| *dd <= d).map(|(_, _, v)| v).sum()
    }

    /// Truncated `W^(l0)`.
    pub fn disk_total(&self) -> BigRational {
        self.disk_partial(self.l0, self.d_max)
    }

    /// CSV with columns `l,D,F,V,weight_num,weight_den` for the requested perimeter.
    pub fn export_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "l,D,F,V,weight_num,weight_den")?;
        for (d, f, v) in self.cells_at(self.l0) {
            let verts = (self.l0 + d) / 2 + 1 - f;
            writeln!(out, "{},{},{},{},{},{}", self.l0, d, f, verts, v.numer(), v.denom())?;
        }
        Ok(())
    }
}

/// Exact rational weights of a finite sequence.
fn exact_weights(q: &WeightSequence) -> Result<BTreeMap<u32, BigRational>> {
    if !q.is_finite() {
        return Err(Error::Unsupported(
            "infinite support: enumerate a finite truncation (the result is then approximate)".into(),
        ));
    }
    if let Some(ex) = q.exact() {
        return Ok(ex.clone());
    }
    Ok(q.terms_upto(q.max_degree().unwrap_or(0)).into_iter().map(|(k, v)| (k, rational::from_f64(v))).collect())
}

fn add_into(dst: &mut FaceDist, f: u32, v: BigRational) {
    if v.is_zero() {
        return;
    }
    let e = dst.entry(f).or_insert_with(BigRational::zero);
    *e += v;
    if e.is_zero() {
        dst.remove(&f);
    }
}

/// Fills the loop-equation table for perimeter `l0` up to inner degree `d_max`.
pub fn enumerate_dp(q: &WeightSequence, l0: u32, d_max: u32) -> Result<EnumTable> {
    if d_max > D_MAX_LIMIT {
        return Err(Error::Domain(format!("d_max = {d_max} exceeds the limit {D_MAX_LIMIT}")));
    }
    let qx = exact_weights(q)?;
    let span = l0 + d_max;
    let mut cells: Vec<Vec<FaceDist>> =
        (0..=span).map(|l| vec![FaceDist::new(); (d_max.min(span - l) + 1) as usize]).collect();
    cells[0][0].insert(0, BigRational::one());
    for s in 1..=span {
        for d in 0..=d_max.min(s) {
            let l = s - d;
            if l == 0 {
                continue;
            }
            let mut acc = FaceDist::new();
            for (&k, qk) in &qx {
                if k > d || l + k < 2 {
                    continue;
                }
                for (&f, v) in &cells[(l + k - 2) as usize][(d - k) as usize] {
                    add_into(&mut acc, f + 1, qk * v);
                }
            }
            for lp in 0..=l.saturating_sub(2) {
                if l < 2 {
                    break;
                }
                let lq = l - 2 - lp;
                for d1 in 0..=d {
                    let a = match cells[lp as usize].get(d1 as usize) {
                        Some(m) if !m.is_empty() => m,
                        _ => continue,
                    };
                    let b = match cells[lq as usize].get((d - d1) as usize) {
                        Some(m) if !m.is_empty() => m,
                        _ => continue,
                    };
                    for (&f1, v1) in a {
                        for (&f2, v2) in b {
                            add_into(&mut acc, f1 + f2, v1 * v2);
                        }
                    }
                }
            }
            cells[l as usize][d as usize] = acc;
        }
    }
    Ok(EnumTable { q: qx, l0, d_max, cells })
}

/// Rooted-map counts from the brute-force scan, keyed by
/// `(root face degree, sorted inner face degrees)`.
pub type BruteCounts = BTreeMap<(u32, Vec<u32>), BigInt>;

/// Calls `f` on every permutation of `0..n` (Heap's algorithm).
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&p);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            f(&p);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

fn cycle_lengths(perm: &[usize]) -> Vec<(usize, usize)> {
    // (representative, length)
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for s in 0..perm.len() {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut d = s;
        while !seen[d] {
            seen[d] = true;
            d = perm[d];
            len += 1;
        }
        out.push((s, len));
    }
    out
}

fn connected(sigma: &[usize], alpha: &[usize]) -> bool {
    let n = sigma.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(d) = stack.pop() {
        for e in [sigma[d], alpha[d]] {
            if !seen[e] {
                seen[e] = true;
                count += 1;
                stack.push(e);
            }
        }
    }
    count == n
}

/// Counts rooted planar maps with `1..=e_max` edges by scanning rotation systems.
///
/// Dart 0 is the root. Permutations fixing dart 0 act transitively on the
/// perfect matchings, so every edge involution gives the same counts and
/// only `alpha = (0 1)(2 3)...` is scanned. The vertex map is included under
/// key `(0, [])`.
pub fn brute_force_maps(e_max: u32) -> Result<BruteCounts> {
    if e_max > BRUTE_E_MAX {
        return Err(Error::Domain(format!("brute force is limited to E <= {BRUTE_E_MAX}, got {e_max}")));
    }
    let mut total = BruteCounts::new();
    total.insert((0, vec![]), BigInt::one());
    for e in 1..=e_max as usize {
        let n = 2 * e;
        let alpha: Vec<usize> = (0..n).map(|d| d ^ 1).collect();
        let mut raw: BTreeMap<(u32, Vec<u32>), u64> = BTreeMap::new();
        let mut phi = vec![0; n];
        for_each_permutation(n, |sigma| {
            for d in 0..n {
                phi[d] = sigma[alpha[d]];
            }
            let faces = cycle_lengths(&phi);
            let verts = cycle_lengths(sigma).len();
            if verts + faces.len() != e + 2 || !connected(sigma, &alpha) {
                return;
            }
            // dart 0 is the smallest element of its cycle, so it is a representative
            let root = faces.iter().find(|(s, _)| *s == 0).map(|&(_, l)| l as u32).unwrap_or(0);
            let mut inner: Vec<u32> = faces.iter().filter(|(s, _)| *s != 0).map(|&(_, l)| l as u32).collect();
            inner.sort_unstable();
            *raw.entry((root, inner)).or_insert(0) += 1;
        });
        // labelled count = raw (n-1)!!, and each rooted map has (n-1)! labellings
        let relabel: BigInt = (1..e as u64).map(|i| BigInt::from(2 * i)).product();
        for (k, v) in raw {
            let c = BigInt::from(v);
            if !(&c % &relabel).is_zero() {
                return Err(Error::SolverFailure(format!("count {c} for {k:?} not divisible by {relabel}")));
            }
            total.insert(k, c / &relabel);
        }
    }
    Ok(total)
}

/// Projects brute-force counts onto weighted `(l, D, F)` cells.
pub fn weigh_brute(counts: &BruteCounts, q: &BTreeMap<u32, BigRational>) -> BTreeMap<(u32, u32, u32), BigRational> {
    let mut out = BTreeMap::new();
    for ((l, inner), c) in counts {
        let mut w = BigRational::from_integer(c.clone());
        for k in inner {
            match q.get(k) {
                Some(v) => w *= v,
                None => {
                    w = BigRational::zero();
                    break;
                }
            }
        }
        if w.is_zero() {
            continue;
        }
        let d: u32 = inner.iter().sum();
        *out.entry((*l, d, inner.len() as u32)).or_insert_with(BigRational::zero) += w;
    }
    out
}

/// Exact `W^(l, V)` from the DP table.
#[derive(Debug, Clone)]
pub struct VolumeTable {
    pub l: u32,
    pub d_max: u32,
    /// `V -> W^(l, V)` restricted to `D <= d_max`.
    pub values: BTreeMap<u32, BigRational>,
    /// Every `V <= v_complete` is exact; `None` when completeness cannot be certified.
    pub v_complete: Option<u32>,
}

impl VolumeTable {
    pub fn complete(&self) -> impl Iterator<Item = (u32, &BigRational)> {
        let cap = self.v_complete.unwrap_or(0);
        self.values.iter().filter(move |(v, _)| **v <= cap).map(|(v, w)| (*v, w))
    }
}

/// Groups the DP cells at perimeter `l` by vertex count.
pub fn volume_tables(q: &WeightSequence, l: u32, d_max: u32) -> Result<VolumeTable> {
    let table = enumerate_dp(q, l, d_max)?;
    Ok(volume_from_table(&table, l, d_max))
}

/// Like [`volume_tables`], reusing a table whose span covers `l + d_max`.
pub fn volume_from_table(table: &EnumTable, l: u32, d_max: u32) -> VolumeTable {
    let mut values = BTreeMap::new();
    for (d, f, w) in table.cells_at(l) {
        if d > d_max {
            continue;
        }
        let v = (l + d) / 2 + 1 - f;
        *values.entry(v).or_insert_with(BigRational::zero) += w;
    }
    if l == 0 {
        values.entry(1).or_insert_with(BigRational::one);
    }
    let m = table.q.iter().filter(|(_, v)| !v.is_zero()).map(|(k, _)| *k).min().unwrap_or(0);
    // a map with V vertices has D <= (V - 1 - l/2) 2m/(m-2)
    let v_complete = (m >= 3).then(|| {
        let v = (d_max as f64 * (m as f64 - 2.0) / (2.0 * m as f64) + 1.0 + l as f64 / 2.0 + 1e-9).floor();
        v as u32
    });
    VolumeTable { l, d_max, values, v_complete }
}

/// Truncated series `sum_V W^(l, V) g^V` for `W_g^(l) = g^(1 + l/2) W^(l)(q_g)`.
#[derive(Debug, Clone)]
pub struct GSeries {
    pub l: u32,
    pub coeffs: BTreeMap<u32, BigRational>,
    pub v_complete: Option<u32>,
}

impl GSeries {
    pub fn eval(&self, g: f64) -> f64 {
        self.coeffs.iter().map(|(v, w)| rational::to_f64(w) * g.powi(*v as i32)).sum()
    }

    pub fn eval_exact(&self, g: &BigRational) -> BigRational {
        self.coeffs.iter().map(|(v, w)| w * rational::pow(g, *v)).sum()
    }

    /// Lowest-order term `(V, W^(l, V))`.
    pub fn leading(&self) -> Option<(u32, &BigRational)> {
        self.coeffs.iter().next().map(|(v, w)| (*v, w))
    }
}

pub fn g_series(q: &WeightSequence, l: u32, d_max: u32) -> Result<GSeries> {
    let vt = volume_tables(q, l, d_max)?;
    Ok(GSeries { l, coeffs: vt.values, v_complete: vt.v_complete })
}

/// `W_g^(l) = g^(1 + l/2) nu_g(-l-2) c_+(g)^(l+2) / 2`, independent of the DP.
pub fn disk_analytic(q: &WeightSequence, l: u32, g: f64) -> Result<f64> {
    let cd = solve_boltzmann(q, g)?;
    if !cd.classification.is_admissible() {
        return Err(Error::NotCritical(format!("q_g not admissible at g = {g}")));
    }
    let pos = positive_half(q, &cd)?;
    let neg = nu_negative_by_harmonicity(&pos, l as i64 + 2)?;
    let w = neg[l as usize] * cd.c_plus.powi(l as i32 + 2) / 2.0;
    Ok(g.powf(1.0 + l as f64 / 2.0) * w)
}
