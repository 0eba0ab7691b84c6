//! Monte Carlo checks of the scaling limits and the `c_+(g)` slope.
//!
//! Perimeters are rescaled by `(sqrt(1+r) L_nu n)^(2/3)` and volumes by
//! `(8 / (3 c_+^2)) (L_nu / (1+r))^(1/3) n^(4/3)`. The unconditioned walk,
//! rescaled like the perimeter, has characteristic function tending to
//! `exp(-|t|^(1/2) (|t| - i t) / sqrt(2))`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criticality::{solve_boltzmann, CriticalData};
use crate::peeling::{Sampler, TraceFlags, VolumeMode, VolumeOptions};
use crate::rng::stream;
use crate::walk::StepLaw;
use crate::weights::WeightSequence;
use crate::{Error, Result};

/// Work is split into this many independently seeded blocks, so results do
/// not depend on the number of threads.
const BLOCKS: u64 = 256;

pub const QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

fn l_nu(law: &StepLaw) -> Result<f64> {
    law.l_nu.ok_or_else(|| Error::Unsupported("law without a finite L_nu".into()))
}

/// Perimeter normalization `(sqrt(1+r) L_nu n)^(2/3)`.
pub fn perimeter_scale(law: &StepLaw, n: f64) -> Result<f64> {
    Ok(((1.0 + law.r).sqrt() * l_nu(law)? * n).powf(2.0 / 3.0))
}

/// Volume normalization `(8/(3 c_+^2)) (L_nu/(1+r))^(1/3) n^(4/3)`.
pub fn volume_scale(law: &StepLaw, n: f64) -> Result<f64> {
    let c2 = law.c_plus * law.c_plus;
    Ok(8.0 / (3.0 * c2) * (l_nu(law)? / (1.0 + law.r)).powf(1.0 / 3.0) * n.powf(4.0 / 3.0))
}

/// `(l_hat, V_hat)` at step `floor(n t)` of each trace.
pub fn rescale(traces: &[(Vec<i64>, Vec<u64>)], law: &StepLaw, n: usize, t: f64) -> Result<Vec<(f64, f64)>> {
    let i = (n as f64 * t).floor() as usize;
    let (ps, vs) = (perimeter_scale(law, n as f64)?, volume_scale(law, n as f64)?);
    traces
        .iter()
        .map(|(l, v)| {
            if i >= l.len() || i >= v.len() {
                Err(Error::InsufficientLength(format!("trace of length {} has no step {i}", l.len())))
            } else {
                Ok((l[i] as f64 / ps, v[i] as f64 / vs))
            }
        })
        .collect()
}

/// A statistic with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Sample quantile with a sectioning standard error from the order
/// statistics at `p +- sqrt(p(1-p)/N)`.
pub fn quantile(sorted: &[f64], p: f64) -> Estimate {
    let n = sorted.len();
    let at = |p: f64| {
        let x = (p.clamp(0.0, 1.0) * (n - 1) as f64).round() as usize;
        sorted[x.min(n - 1)]
    };
    let d = (p * (1.0 - p) / n as f64).sqrt();
    Estimate { value: at(p), se: 0.5 * (at(p + d) - at(p - d)).abs() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EcfPoint {
    pub theta: f64,
    pub ecf_re: f64,
    pub ecf_im: f64,
    pub target_re: f64,
    pub target_im: f64,
    pub abs_diff: f64,
    pub se: f64,
}

/// Limit `exp(-|t|^(1/2) (|t| - i t) / sqrt(2))`.
pub fn ecf_target(theta: f64) -> Complex64 {
    let a = theta.abs();
    (-(a.sqrt() * Complex64::new(a, -theta)) / 2f64.sqrt()).exp()
}

/// Empirical characteristic function of the rescaled unconditioned walk after `n` steps.
pub fn ecf_test(law: &StepLaw, n: usize, samples: usize, thetas: &[f64], seed: u64) -> Result<Vec<EcfPoint>> {
    let scale = perimeter_scale(law, n as f64)?;
    let sampler = Sampler::new(law, crate::peeling::Mode::Finite, VolumeOptions { mode: VolumeMode::Expectation, ..Default::default() })?;
    let per_block = samples.div_ceil(BLOCKS as usize);
    let blocks: Vec<Vec<[f64; 4]>> = (0..BLOCKS)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b);
            let count = per_block.min(samples.saturating_sub(b as usize * per_block));
            let mut acc = vec![[0.0; 4]; thetas.len()];
            for _ in 0..count {
                let mut x: i64 = 0;
                for _ in 0..n {
                    x += sampler.free_step(&mut rng);
                }
                let y = x as f64 / scale;
                for (a, &t) in acc.iter_mut().zip(thetas) {
                    let (s, c) = (t * y).sin_cos();
                    a[0] += c;
                    a[1] += s;
                    a[2] += c * c;
                    a[3] += s * s;
                }
            }
            acc
        })
        .collect();
    let nf = samples as f64;
    Ok(thetas
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let mut s = [0.0; 4];
            for b in &blocks {
                for i in 0..4 {
                    s[i] += b[j][i];
                }
            }
            let (mc, ms) = (s[0] / nf, s[1] / nf);
            let var = (s[2] / nf - mc * mc) + (s[3] / nf - ms * ms);
            let target = ecf_target(t);
            EcfPoint {
                theta: t,
                ecf_re: mc,
                ecf_im: ms,
                target_re: target.re,
                target_im: target.im,
                abs_diff: (Complex64::new(mc, ms) - target).norm(),
                se: (var.max(0.0) / nf).sqrt(),
            }
        })
        .collect())
}

/// Rescaled perimeters and volumes of many IBPM chains at a set of step counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSample {
    pub name: String,
    pub steps: Vec<usize>,
    /// `l_hat[i][c]` for step `steps[i]`, chain `c`.
    pub l_hat: Vec<Vec<f64>>,
    pub v_hat: Vec<Vec<f64>>,
    pub raw_l: Vec<Vec<i64>>,
    pub raw_v: Vec<Vec<u64>>,
    pub flags: TraceFlags,
}

type ChainRecord = (Vec<(i64, u64)>, TraceFlags);

/// Runs `chains` IBPM chains from `l0` and records them at `steps`.
pub fn sample_chains(
    name: &str,
    law: &StepLaw,
    volume: VolumeOptions,
    l0: i64,
    steps: &[usize],
    chains: usize,
    seed: u64,
) -> Result<ChainSample> {
    let sampler = Sampler::new(law, crate::peeling::Mode::Ibpm, volume)?;
    let n_max = *steps.iter().max().unwrap_or(&0);
    let results: Vec<Result<ChainRecord>> = (0..chains as u64)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c);
            let mut flags = TraceFlags::default();
            let mut rec = Vec::with_capacity(steps.len());
            let mut next = 0;
            sampler.run_chain(
                l0,
                n_max,
                &mut rng,
                &mut |i, l, v| {
                    while next < steps.len() && steps[next] == i {
                        rec.push((l, v));
                        next += 1;
                    }
                },
                &mut flags,
            )?;
            Ok((rec, flags))
        })
        .collect();
    let mut raw_l = vec![Vec::with_capacity(chains); steps.len()];
    let mut raw_v = vec![Vec::with_capacity(chains); steps.len()];
    let mut flags = TraceFlags::default();
    for r in results {
        let (rec, f) = r?;
        flags.exact_fallback |= f.exact_fallback;
        flags.residual_draws += f.residual_draws;
        for (i, (l, v)) in rec.into_iter().enumerate() {
            raw_l[i].push(l);
            raw_v[i].push(v);
        }
    }
    let mut l_hat = Vec::new();
    let mut v_hat = Vec::new();
    for (i, &n) in steps.iter().enumerate() {
        let (ps, vs) = (perimeter_scale(law, n as f64)?, volume_scale(law, n as f64)?);
        l_hat.push(raw_l[i].iter().map(|&l| l as f64 / ps).collect());
        v_hat.push(raw_v[i].iter().map(|&v| v as f64 / vs).collect());
    }
    Ok(ChainSample { name: name.to_string(), steps: steps.to_vec(), l_hat, v_hat, raw_l, raw_v, flags })
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantileRow {
    pub name: String,
    pub n: usize,
    pub l_hat: Vec<Estimate>,
    pub v_hat: Vec<Estimate>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairDiff {
    pub a: String,
    pub b: String,
    /// `|med_a - med_b| / mean(med_a, med_b)` for `l_hat`.
    pub l_rel: f64,
    pub l_rel_se: f64,
    /// `med_a / med_b` for `V_hat`.
    pub v_ratio: f64,
    pub v_ratio_se: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollapseReport {
    pub n: usize,
    pub chains: usize,
    pub rows: Vec<QuantileRow>,
    pub pairs: Vec<PairDiff>,
}

/// Quantile table at step `n` and pairwise median comparisons.
pub fn collapse_from(samples: &[ChainSample], n: usize) -> Result<CollapseReport> {
    let mut rows = Vec::new();
    for s in samples {
        let i = s
            .steps
            .iter()
            .position(|&m| m == n)
            .ok_or_else(|| Error::InsufficientLength(format!("{} not recorded at step {n}", s.name)))?;
        let (l, v) = (sorted(&s.l_hat[i]), sorted(&s.v_hat[i]));
        rows.push(QuantileRow {
            name: s.name.clone(),
            n,
            l_hat: QUANTILES.iter().map(|&p| quantile(&l, p)).collect(),
            v_hat: QUANTILES.iter().map(|&p| quantile(&v, p)).collect(),
        });
    }
    let mut pairs = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (a, b) = (&rows[i], &rows[j]);
            let (la, lb) = (a.l_hat[2], b.l_hat[2]);
            let m = 0.5 * (la.value + lb.value);
            let (va, vb) = (a.v_hat[2], b.v_hat[2]);
            let ratio = va.value / vb.value;
            pairs.push(PairDiff {
                a: a.name.clone(),
                b: b.name.clone(),
                l_rel: (la.value - lb.value).abs() / m,
                l_rel_se: (la.se.powi(2) + lb.se.powi(2)).sqrt() / m,
                v_ratio: ratio,
                v_ratio_se: ratio * ((va.se / va.value).powi(2) + (vb.se / vb.value).powi(2)).sqrt(),
            });
        }
    }
    Ok(CollapseReport { n, chains: samples.first().map_or(0, |s| s.l_hat[0].len()), rows, pairs })
}

/// Runs the models and compares their rescaled quantiles at step `n`.
pub fn collapse_test(
    models: &[(&str, &StepLaw, VolumeOptions)],
    n: usize,
    chains: usize,
    seed: u64,
) -> Result<CollapseReport> {
    let samples = models
        .iter()
        .map(|(name, law, vo)| {
            let l0 = 2;
            sample_chains(name, law, vo.clone(), l0, &[n], chains, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    collapse_from(&samples, n)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFit {
    pub perimeter_slope: f64,
    pub perimeter_slope_se: f64,
    pub volume_slope: f64,
    pub volume_slope_se: f64,
    pub ns: Vec<usize>,
    pub median_l: Vec<Estimate>,
    pub median_v: Vec<Estimate>,
}

/// Weighted least-squares slope of `y` on `x` and its standard error.
pub fn fit_slope(x: &[f64], y: &[f64], sy: &[f64]) -> (f64, f64) {
    let w: Vec<f64> = sy.iter().map(|s| if *s > 0.0 { 1.0 / (s * s) } else { 1.0 }).collect();
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(&w).map(|(a, b)| b * (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).zip(&w).map(|((a, c), b)| b * (a - mx) * (c - my)).sum();
    (sxy / sxx, (1.0 / sxx).sqrt())
}

/// Log-log regression of the raw medians of `l_n` and `V_n` on `n`.
pub fn exponent_fit(sample: &ChainSample) -> ExponentFit {
    let mut x = Vec::new();
    let (mut yl, mut sl, mut yv, mut sv) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut median_l = Vec::new();
    let mut median_v = Vec::new();
    for (i, &n) in sample.steps.iter().enumerate() {
        let l = sorted(&sample.raw_l[i].iter().map(|&v| v as f64).collect::<Vec<_>>());
        let v = sorted(&sample.raw_v[i].iter().map(|&v| v as f64).collect::<Vec<_>>());
        let (ml, mv) = (quantile(&l, 0.5), quantile(&v, 0.5));
        x.push((n as f64).ln());
        yl.push(ml.value.ln());
        sl.push(ml.se / ml.value);
        yv.push(mv.value.max(1.0).ln());
        sv.push(mv.se / mv.value.max(1.0));
        median_l.push(ml);
        median_v.push(mv);
    }
    let (pl, pse) = fit_slope(&x, &yl, &sl);
    let (vl, vse) = fit_slope(&x, &yv, &sv);
    ExponentFit {
        perimeter_slope: pl,
        perimeter_slope_se: pse,
        volume_slope: vl,
        volume_slope_se: vse,
        ns: sample.steps.clone(),
        median_l,
        median_v,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeReport {
    pub gs: Vec<f64>,
    pub ratios: Vec<f64>,
    pub estimate: f64,
    pub predicted: f64,
    pub rel_err: f64,
    /// Extrapolated `(1 - c_-(g)/c_-) / sqrt(1-g)`; `None` when `c_- = 0`.
    pub c_minus_slope: Option<f64>,
}

/// Neville extrapolation of `(x_i, y_i)` to `x = 0`.
pub fn extrapolate_to_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let n = x.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
        }
    }
    p[0]
}

/// `(1 - c_+(g)/c_+) / sqrt(1-g)` at `g = 1 - 10^-j`, `j = 2..=6`, extrapolated in `sqrt(1-g)`.
pub fn cplus_slope_test(q: &WeightSequence, law: &StepLaw) -> Result<SlopeReport> {
    let crit: CriticalData = solve_boltzmann(q, 1.0)?;
    if !crit.classification.is_critical() {
        return Err(Error::NotCritical(format!("margin {:e}", crit.margin)));
    }
    let l = l_nu(law)?;
    let predicted = (16.0 / (3.0 * (1.0 + crit.r) * crit.c_plus.powi(2) * l)).sqrt();
    let mut gs = Vec::new();
    let mut xs = Vec::new();
    let mut ratios = Vec::new();
    let mut minus = Vec::new();
    for j in 2..=6 {
        let e = 10f64.powi(-j);
        let g = 1.0 - e;
        let cd = solve_boltzmann(q, g)?;
        let s = e.sqrt();
        gs.push(g);
        xs.push(s);
        ratios.push((1.0 - cd.c_plus / crit.c_plus) / s);
        if crit.c_minus != 0.0 {
            minus.push((1.0 - cd.c_minus / crit.c_minus) / s);
        }
    }
    let estimate = extrapolate_to_zero(&xs, &ratios);
    let c_minus_slope = (!minus.is_empty() && crit.r < 1.0).then(|| extrapolate_to_zero(&xs, &minus));
    Ok(SlopeReport { gs, ratios, estimate, predicted, rel_err: (estimate / predicted - 1.0).abs(), c_minus_slope })
}

/// `E exp(-lambda V / (B_nu l^2))` for holes of perimeter `l` drawn by the
/// asymptotic volume rule, against `(1 + sqrt(2 lambda)) exp(-sqrt(2 lambda))`.
pub fn hole_laplace_check(law: &StepLaw, l: i64, lambdas: &[f64], samples: usize, seed: u64) -> Result<Vec<(f64, Estimate, f64)>> {
    let sampler = Sampler::new(law, crate::peeling::Mode::Finite, VolumeOptions { mode: VolumeMode::AsymptoticXi, ..Default::default() })?;
    let b = law.b_nu.ok_or_else(|| Error::Unsupported("law without B_nu".into()))?;
    let scale = b * (l * l) as f64;
    let mut rng = stream(seed, 0);
    let mut flags = TraceFlags::default();
    let mut acc = vec![(0.0, 0.0); lambdas.len()];
    for _ in 0..samples {
        let v = sampler.hole_volume(l, &mut rng, &mut flags) as f64 / scale;
        for (a, lam) in acc.iter_mut().zip(lambdas) {
            let e = (-lam * v).exp();
            a.0 += e;
            a.1 += e * e;
        }
    }
    let nf = samples as f64;
    Ok(lambdas
        .iter()
        .zip(acc)
        .map(|(&lam, (s, s2))| {
            let m = s / nf;
            let se = ((s2 / nf - m * m).max(0.0) / nf).sqrt();
            (lam, Estimate { value: m, se }, crate::peeling::xi_laplace(lam))
        })
        .collect())
}

/// Full report written by the command-line front end.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScalingReport {
    pub models: Vec<String>,
    pub ns: Vec<usize>,
    pub ecf: Vec<EcfPoint>,
    pub collapse: Option<CollapseReport>,
    pub exponents: Vec<(String, ExponentFit)>,
    pub slopes: Vec<(String, SlopeReport)>,
    pub criteria: Vec<(String, bool)>,
}

impl ScalingReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Flat CSV `model,n,chain,l_hat,v_hat` of rescaled samples.
pub fn export_samples_csv<W: Write>(samples: &[ChainSample], mut out: W) -> Result<()> {
    writeln!(out, "model,n,chain,l_hat,v_hat")?;
    for s in samples {
        for (i, &n) in s.steps.iter().enumerate() {
            for (c, (l, v)) in s.l_hat[i].iter().zip(&s.v_hat[i]).enumerate() {
                writeln!(out, "{},{},{},{:.9e},{:.9e}", s.name, n, c, l, v)?;
            }
        }
    }
    Ok(())
}
