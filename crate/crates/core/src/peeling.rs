//! Perimeter and volume processes of the peeling exploration.
//!
//! Finite pointed maps use the `h^(0)`-transform of the walk, the infinite
//! map the `h^(1)`-transform:
//!
//! ```text
//! finite:  P(l -> l+k) = h0(l+k) / h0(l) nu(k)
//! ibpm:    P(l -> l+k) = h1(l+k) / h1(l) nu(k)
//! ```
//!
//! A jump `k = -l' - 2` swallows a hole of perimeter `l'`, whose vertex count
//! is added to the volume.

use std::io::{Read, Write};
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution, Gamma};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::hfun::{series_coeffs, HCache};
use crate::oracle::{enumerate_dp, volume_from_table};
use crate::rng::{stream, StreamRng};
use crate::walk::{disk_coefficient, StepLaw};
use crate::weights::{q_from_nu, WeightSequence};
use crate::{rational, Error, Result};

/// Perimeters below this use exact alias tables; larger ones use rejection.
pub const EXACT_TABLE_CAP: i64 = 1024;
/// Default largest perimeter a chain may reach.
pub const DEFAULT_L_MAX: i64 = 1 << 20;
const HARMONIC_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Finite,
    Ibpm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMode {
    ExactSmall,
    AsymptoticXi,
    Expectation,
}

/// Settings for the volume increments.
#[derive(Debug, Clone)]
pub struct VolumeOptions {
    pub mode: VolumeMode,
    /// Holes up to this perimeter use exact tables in `ExactSmall` mode.
    pub l_exact: u32,
    /// Inner-degree budget of the exact tables.
    pub d_max: u32,
    /// Weights for the exact tables; recovered from the law when absent.
    pub weights: Option<WeightSequence>,
    /// Scale `xi` by `E|V(m_l)|` instead of `B_nu l^2`.
    pub xi_mean_matched: bool,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        VolumeOptions { mode: VolumeMode::ExactSmall, l_exact: 6, d_max: 40, weights: None, xi_mean_matched: false }
    }
}

/// Conditions under which a trace departed from the requested volume rule.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TraceFlags {
    /// Exact tables unavailable; small holes used randomized rounding of `E|V|`.
    pub exact_fallback: bool,
    /// Small holes whose volume fell above the certified range.
    pub residual_draws: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeelTrace {
    pub perimeter: Vec<i64>,
    pub volume: Vec<u64>,
    pub mode: Mode,
    pub volume_mode: VolumeMode,
    pub seed: u64,
    pub chain: u64,
    pub l0: i64,
    pub law_digest: String,
    /// Step at which a finite chain reached perimeter zero.
    pub absorbed_at: Option<usize>,
    pub flags: TraceFlags,
}

impl PeelTrace {
    pub fn len(&self) -> usize {
        self.perimeter.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perimeter.is_empty()
    }

    /// CSV `step,perimeter,volume` with `#` metadata lines.
    pub fn export_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# seed={}", self.seed)?;
        writeln!(out, "# chain={}", self.chain)?;
        writeln!(out, "# mode={}", serde_json::to_string(&self.mode).unwrap_or_default().trim_matches('"'))?;
        writeln!(
            out,
            "# volume_mode={}",
            serde_json::to_string(&self.volume_mode).unwrap_or_default().trim_matches('"')
        )?;
        writeln!(out, "# law_digest={}", self.law_digest)?;
        writeln!(out, "# exact_fallback={}", self.flags.exact_fallback)?;
        writeln!(out, "# residual_draws={}", self.flags.residual_draws)?;
        writeln!(out, "step,perimeter,volume")?;
        for (i, (l, v)) in self.perimeter.iter().zip(&self.volume).enumerate() {
            writeln!(out, "{i},{l},{v}")?;
        }
        Ok(())
    }

    /// Two length-prefixed little-endian 64-bit columns: perimeters, then volumes.
    pub fn export_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.perimeter.len() as u64).to_le_bytes())?;
        for l in &self.perimeter {
            out.write_all(&l.to_le_bytes())?;
        }
        out.write_all(&(self.volume.len() as u64).to_le_bytes())?;
        for v in &self.volume {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads the columns written by [`PeelTrace::export_binary`].
    pub fn read_binary<R: Read>(mut input: R) -> Result<(Vec<i64>, Vec<u64>)> {
        let mut buf = [0u8; 8];
        let mut next = |inp: &mut R| -> Result<[u8; 8]> {
            inp.read_exact(&mut buf)?;
            Ok(buf)
        };
        let n = u64::from_le_bytes(next(&mut input)?) as usize;
        let mut per = Vec::with_capacity(n);
        for _ in 0..n {
            per.push(i64::from_le_bytes(next(&mut input)?));
        }
        let m = u64::from_le_bytes(next(&mut input)?) as usize;
        let mut vol = Vec::with_capacity(m);
        for _ in 0..m {
            vol.push(u64::from_le_bytes(next(&mut input)?));
        }
        Ok((per, vol))
    }
}

/// Hex SHA-256 of the stored step law.
pub fn law_digest(law: &StepLaw) -> String {
    let mut h = Sha256::new();
    h.update(law.r.to_le_bytes());
    h.update(law.c_plus.to_le_bytes());
    h.update(law.k_neg().to_le_bytes());
    for v in law.table() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn check_critical(law: &StepLaw) -> Result<()> {
    let d = law.harmonic_defects(1, 3)?;
    if d.iter().any(|x| x.abs() > HARMONIC_TOL) {
        return Err(Error::NotCritical(format!("h^(1) is not harmonic for this law (defect {:e})", d[0])));
    }
    Ok(())
}

fn step_distribution(l: i64, law: &StepLaw, order: i32) -> Result<Vec<(i64, f64)>> {
    if l <= 0 {
        return Err(Error::Absorbed(format!("perimeter {l}")));
    }
    let h = HCache::float(law.r, l + law.k_pos())?;
    let hl = h.get(order, l);
    let lo = (-l).max(-law.k_neg());
    Ok((lo..=law.k_pos())
        .map(|k| (k, h.get(order, l + k) / hl * law.nu(k)))
        .filter(|&(_, p)| p > 0.0)
        .collect())
}

/// Jump law of the perimeter of a finite pointed map at perimeter `l`.
pub fn step_finite(l: i64, law: &StepLaw) -> Result<Vec<(i64, f64)>> {
    step_distribution(l, law, 0)
}

/// Jump law of the perimeter of the infinite map at perimeter `l`.
pub fn step_ibpm(l: i64, law: &StepLaw) -> Result<Vec<(i64, f64)>> {
    check_critical(law)?;
    step_distribution(l, law, 1)
}

/// `xi` with density `exp(-1/(2x)) x^(-5/2) / sqrt(2 pi)`: the reciprocal of a
/// Gamma(3/2, scale 2) variate.
pub fn sample_xi<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let g = Gamma::new(1.5, 2.0).expect("valid gamma parameters");
    1.0 / g.sample(rng)
}

/// Density of `xi`.
pub fn xi_density(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (-0.5 / x).exp() * x.powf(-2.5) / (2.0 * std::f64::consts::PI).sqrt()
}

/// `E exp(-lambda xi) = (1 + sqrt(2 lambda)) exp(-sqrt(2 lambda))`.
pub fn xi_laplace(lambda: f64) -> f64 {
    let s = (2.0 * lambda).sqrt();
    (1.0 + s) * (-s).exp()
}

struct AliasTable {
    offset: i64,
    index: WeightedAliasIndex<f64>,
}

/// Exact volume law of a small hole.
struct HoleLaw {
    values: Vec<u64>,
    // last bucket = mass above the certified range
    index: WeightedAliasIndex<f64>,
    v_complete: u64,
}

/// Shared jump and volume samplers for one law and mode.
pub struct Sampler<'a> {
    law: &'a StepLaw,
    mode: Mode,
    h: Vec<f64>,
    hmax: Vec<f64>,
    tables: Vec<OnceLock<Option<AliasTable>>>,
    exact_cap: i64,
    global: WeightedAliasIndex<f64>,
    tail_bucket: usize,
    bipartite: bool,
    volume: VolumeOptions,
    evol: Vec<f64>,
    holes: Vec<Option<HoleLaw>>,
    exact_fallback: bool,
    b_nu: f64,
    xi: Gamma<f64>,
}

impl<'a> Sampler<'a> {
    pub fn new(law: &'a StepLaw, mode: Mode, volume: VolumeOptions) -> Result<Self> {
        Self::with_l_max(law, mode, volume, DEFAULT_L_MAX)
    }

    pub fn with_l_max(law: &'a StepLaw, mode: Mode, volume: VolumeOptions, l_max: i64) -> Result<Self> {
        if mode == Mode::Ibpm {
            check_critical(law)?;
        }
        let n = (l_max + law.k_pos() + 2) as usize;
        let h = match mode {
            Mode::Finite => series_coeffs(0.5, 0.5, law.r, n),
            // h1(l) = [u^(l-1)] (1-u)^(-3/2) (1+ru)^(-1/2)
            Mode::Ibpm => {
                let mut v = vec![0.0];
                v.extend(series_coeffs(1.5, 0.5, law.r, n - 1));
                v
            }
        };
        let mut hmax = h.clone();
        for i in 1..hmax.len() {
            hmax[i] = hmax[i].max(hmax[i - 1]);
        }
        let mut w: Vec<f64> = law.table().iter().map(|v| v.max(0.0)).collect();
        let tail = if law.is_heavy() { 2.0 * law.neg_tail_mass } else { law.neg_tail_mass };
        w.push(tail.max(0.0));
        let tail_bucket = w.len() - 1;
        let global = WeightedAliasIndex::new(w).map_err(|e| Error::InvalidWeights(format!("step law: {e}")))?;
        let exact_cap = EXACT_TABLE_CAP.min(law.k_neg());
        let tables = (0..=exact_cap).map(|_| OnceLock::new()).collect();
        let bipartite = law.r == 1.0;
        let mut s = Sampler {
            law,
            mode,
            h,
            hmax,
            tables,
            exact_cap,
            global,
            tail_bucket,
            bipartite,
            volume,
            evol: Vec::new(),
            holes: Vec::new(),
            exact_fallback: false,
            b_nu: law.b_nu.unwrap_or(f64::NAN),
            xi: Gamma::new(1.5, 2.0).expect("valid gamma parameters"),
        };
        s.prepare_volumes()?;
        Ok(s)
    }

    pub fn law(&self) -> &StepLaw {
        self.law
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn prepare_volumes(&mut self) -> Result<()> {
        let law = self.law;
        let top = (law.k_neg() - 2).max(0);
        let h0 = series_coeffs(0.5, 0.5, law.r, top as usize + 1);
        let nu_m2 = 2.0 / (law.c_plus * law.c_plus);
        self.evol = (0..=top)
            .map(|l| {
                let d = law.nu(-l - 2);
                if l == 0 {
                    1.0
                } else if d > 0.0 {
                    h0[l as usize] * nu_m2 / d
                } else {
                    f64::NAN
                }
            })
            .collect();
        if self.volume.mode != VolumeMode::ExactSmall {
            return Ok(());
        }
        let q = match &self.volume.weights {
            Some(q) => Some(q.clone()),
            None => law.positive().map(q_from_nu).filter(|q| q.is_finite()),
        };
        let q = match q {
            Some(q) if q.is_finite() && q.min_degree().is_some_and(|m| m >= 3) => q,
            _ => {
                self.exact_fallback = true;
                return Ok(());
            }
        };
        let lx = self.volume.l_exact;
        let table = enumerate_dp(&q, lx, self.volume.d_max)?;
        self.holes = (0..=lx)
            .map(|l| -> Result<Option<HoleLaw>> {
                if l == 0 || l as i64 + 2 > law.k_neg() {
                    return Ok(None);
                }
                let w_total = disk_coefficient(law, l as i64)?;
                if w_total.is_nan() || w_total <= 0.0 {
                    return Ok(None);
                }
                let vt = volume_from_table(&table, l, self.volume.d_max);
                let mut values = Vec::new();
                let mut weights = Vec::new();
                for (v, w) in vt.complete() {
                    values.push(v as u64);
                    weights.push(rational::to_f64(w) / w_total);
                }
                let residual = (1.0 - weights.iter().sum::<f64>()).max(0.0);
                weights.push(residual);
                let index = WeightedAliasIndex::new(weights)
                    .map_err(|e| Error::InvalidWeights(format!("hole law: {e}")))?;
                Ok(Some(HoleLaw { values, index, v_complete: vt.v_complete.unwrap_or(0) as u64 }))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(())
    }

    fn table(&self, l: i64) -> Option<&AliasTable> {
        self.tables[l as usize]
            .get_or_init(|| {
                let lo = match self.mode {
                    Mode::Finite => -l,
                    Mode::Ibpm => 1 - l,
                }
                .max(-self.law.k_neg());
                let w: Vec<f64> = (lo..=self.law.k_pos()).map(|k| self.h[(l + k) as usize] * self.law.nu(k)).collect();
                WeightedAliasIndex::new(w).ok().map(|index| AliasTable { offset: lo, index })
            })
            .as_ref()
    }

    /// Draw from the stored law, with the tail beyond the table as a power law.
    fn draw_nu<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let i = self.global.sample(rng);
        if i != self.tail_bucket {
            return i as i64 - self.law.k_neg();
        }
        let kf = self.law.k_neg() as f64 + 0.5;
        let u: f64 = 1.0 - rng.random::<f64>();
        let (mag, sign) = if self.law.is_heavy() {
            (kf / u, if rng.random::<bool>() { 1.0 } else { -1.0 })
        } else {
            (kf * u.powf(-2.0 / 3.0), -1.0)
        };
        let mut k = mag.round().min(1e15) as i64;
        if self.bipartite && k % 2 != 0 {
            k += 1;
        }
        (sign * k as f64) as i64
    }

    /// One step of the unconditioned walk.
    pub fn free_step<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        self.draw_nu(rng)
    }

    /// One jump of the transformed chain from perimeter `l >= 1`.
    pub fn jump<R: Rng + ?Sized>(&self, l: i64, rng: &mut R) -> Result<i64> {
        if l <= 0 {
            return Err(Error::Absorbed(format!("perimeter {l}")));
        }
        if l <= self.exact_cap {
            let t = self
                .table(l)
                .ok_or_else(|| Error::InvalidWeights(format!("empty jump law at perimeter {l}")))?;
            return Ok(t.offset + t.index.sample(rng) as i64);
        }
        let top = (l + self.law.k_pos()) as usize;
        if top >= self.h.len() {
            return Err(Error::OutOfRange { l, l_max: self.h.len() as i64 - self.law.k_pos() - 2 });
        }
        let bound = self.hmax[top];
        loop {
            let k = self.draw_nu(rng);
            let j = l + k;
            if j < 0 || j as usize >= self.h.len() {
                continue;
            }
            if rng.random::<f64>() * bound < self.h[j as usize] {
                return Ok(k);
            }
        }
    }

    /// Vertex count of a hole of perimeter `lp`.
    pub fn hole_volume<R: Rng + ?Sized>(&self, lp: i64, rng: &mut R, flags: &mut TraceFlags) -> u64 {
        if lp == 0 {
            return 1;
        }
        let mean = self.evol.get(lp as usize).copied().unwrap_or(self.b_nu * (lp * lp) as f64);
        match self.volume.mode {
            VolumeMode::Expectation => mean.round().max(1.0) as u64,
            VolumeMode::AsymptoticXi => self.xi_volume(lp, mean, rng),
            VolumeMode::ExactSmall => {
                if lp > self.volume.l_exact as i64 {
                    return self.xi_volume(lp, mean, rng);
                }
                match self.holes.get(lp as usize).and_then(|h| h.as_ref()) {
                    Some(hl) => {
                        let i = hl.index.sample(rng);
                        if i < hl.values.len() {
                            return hl.values[i];
                        }
                        flags.residual_draws += 1;
                        // conditioned on exceeding the certified range
                        for _ in 0..100_000 {
                            let v = self.xi_volume(lp, mean, rng);
                            if v > hl.v_complete {
                                return v;
                            }
                        }
                        hl.v_complete + 1
                    }
                    None => {
                        flags.exact_fallback = true;
                        let f = mean.floor();
                        let up = rng.random::<f64>() < mean - f;
                        (f as u64 + up as u64).max(1)
                    }
                }
            }
        }
    }

    fn xi_volume<R: Rng + ?Sized>(&self, lp: i64, mean: f64, rng: &mut R) -> u64 {
        let scale = if self.volume.xi_mean_matched { mean } else { self.b_nu * (lp * lp) as f64 };
        let xi = 1.0 / self.xi.sample(rng);
        (xi * scale).round().max(1.0) as u64
    }

    /// Runs one chain, recording `(l_i, V_i)` at the requested step indices
    /// (sorted, each `<= n_steps`).
    pub fn run_chain<R: Rng + ?Sized>(
        &self,
        l0: i64,
        n_steps: usize,
        rng: &mut R,
        record: &mut dyn FnMut(usize, i64, u64),
        flags: &mut TraceFlags,
    ) -> Result<Option<usize>> {
        let mut l = l0;
        let mut v = 0u64;
        record(0, l, v);
        for i in 1..=n_steps {
            if l == 0 {
                return Ok(Some(i - 1));
            }
            let k = self.jump(l, rng)?;
            if k <= -2 {
                v += self.hole_volume(-k - 2, rng, flags);
            }
            l += k;
            record(i, l, v);
        }
        Ok(if l == 0 { Some(n_steps) } else { None })
    }
}

/// Simulates one chain and returns its full trace.
pub fn simulate(
    mode: Mode,
    law: &StepLaw,
    l0: i64,
    n_steps: usize,
    seed: u64,
    volume: VolumeOptions,
) -> Result<PeelTrace> {
    let sampler = Sampler::new(law, mode, volume)?;
    simulate_with(&sampler, l0, n_steps, seed, 0)
}

/// Simulates chain `chain` of a run with a prepared sampler.
pub fn simulate_with(sampler: &Sampler<'_>, l0: i64, n_steps: usize, seed: u64, chain: u64) -> Result<PeelTrace> {
    if l0 < 1 {
        return Err(Error::Domain(format!("initial perimeter {l0} must be positive")));
    }
    if sampler.bipartite && l0 % 2 != 0 {
        return Err(Error::Domain(format!("bipartite law needs an even initial perimeter, got {l0}")));
    }
    let mut rng: StreamRng = stream(seed, chain);
    let mut perimeter = Vec::with_capacity(n_steps + 1);
    let mut volume = Vec::with_capacity(n_steps + 1);
    let mut flags = TraceFlags { exact_fallback: sampler.exact_fallback, residual_draws: 0 };
    let absorbed_at = sampler.run_chain(
        l0,
        n_steps,
        &mut rng,
        &mut |_, l, v| {
            perimeter.push(l);
            volume.push(v);
        },
        &mut flags,
    )?;
    Ok(PeelTrace {
        perimeter,
        volume,
        mode: sampler.mode,
        volume_mode: sampler.volume.mode,
        seed,
        chain,
        l0,
        law_digest: law_digest(sampler.law),
        absorbed_at,
        flags,
    })
}

/// Whether `(l, k)` is allowed by the parity and support of the law.
pub fn jump_allowed(law: &StepLaw, l: i64, k: i64) -> bool {
    l + k >= 0 && law.nu(k) > 0.0
}
