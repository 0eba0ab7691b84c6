use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};

use peelkit::criticality::{solve_boltzmann, tune_critical};
use peelkit::oracle::enumerate_dp;
use peelkit::peeling::{Mode, VolumeMode, VolumeOptions};
use peelkit::rational;
use peelkit::scaling;
use peelkit::walk::{complete_nu, export_csv, step_law, StepLaw};
use peelkit::weights::{preset, Preset, WeightSequence};
use peelkit::Error;

use crate::args::*;

pub enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

pub fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Preset(a) => preset_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Enumerate(a) => enumerate(a),
        Command::ScalingTest(a) => scaling_test(a),
        Command::TuneCritical(a) => tune(a),
    }
}

/// Weights plus whether every entry was given exactly.
struct Source {
    q: WeightSequence,
    exact: bool,
    preset: Option<Preset>,
}

fn parse_weight_map(text: &str) -> std::result::Result<Source, Failure> {
    let v: Value = serde_json::from_str(text).map_err(|e| Failure::Usage(format!("weights are not JSON: {e}")))?;
    let obj = v.as_object().ok_or_else(|| Failure::Usage("weights must be a JSON object".into()))?;
    let mut exact = true;
    let mut terms = Vec::new();
    for (k, val) in obj {
        let deg: u32 = k.trim().parse().map_err(|_| Failure::Usage(format!("bad face degree {k:?}")))?;
        let s = match val {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => return Err(Failure::Usage(format!("weight of degree {deg} must be a string or number"))),
        };
        let (x, is_exact) = rational::parse(&s).map_err(|e| Failure::Usage(e.to_string()))?;
        exact &= is_exact;
        terms.push((deg, x));
    }
    if terms.is_empty() {
        return Err(Failure::Usage("empty weight map".into()));
    }
    let q = if exact {
        WeightSequence::from_rationals(terms)
    } else {
        eprintln!("warning: decimal weights are inexact; exact enumeration uses their binary values");
        WeightSequence::from_floats(terms.iter().map(|(k, x)| (*k, rational::to_f64(x))))
    };
    Ok(Source { q, exact, preset: None })
}

fn preset_of(w: &WeightArgs, name: PresetName) -> std::result::Result<Preset, Failure> {
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| Failure::Usage(format!("preset needs --{flag}")));
    Ok(match name {
        PresetName::Quadrangulation => Preset::quadrangulation(),
        PresetName::Triangulation => Preset::triangulation(),
        PresetName::TwoPAngulation => Preset::TwoPAngulation { p: w.p.unwrap_or(2) },
        PresetName::OddAngulation => Preset::OddAngulation { p: w.p.unwrap_or(1) },
        PresetName::Geometric => Preset::Geometric { h: need(w.h, "H")? },
        PresetName::Symmetric => Preset::SymmetricCritical {
            r: w.r.unwrap_or(1.0),
            a: w.a.unwrap_or(std::f64::consts::FRAC_PI_4),
        },
    })
}

fn source(w: &WeightArgs) -> std::result::Result<Source, Failure> {
    if let Some(text) = &w.weights {
        return parse_weight_map(text);
    }
    if let Some(path) = &w.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        return parse_weight_map(&text);
    }
    if let Some(name) = w.preset {
        let p = preset_of(w, name)?;
        let data = preset(p)?;
        let exact = data.weights.exact().is_some();
        return Ok(Source { q: data.weights, exact, preset: Some(p) });
    }
    Err(Failure::Usage("one of --weights, --preset or --config is required".into()))
}

fn check_out(path: &Option<std::path::PathBuf>) -> Outcome {
    if let Some(p) = path {
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(Failure::Usage(format!("output directory {} does not exist", parent.display())));
        }
    }
    Ok(())
}

fn writer(path: &Option<std::path::PathBuf>) -> std::result::Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(Error::from)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

/// Flat key/value report rendered as text, CSV or JSON.
#[derive(Default)]
struct Report(Vec<(String, Value)>);

impl Report {
    fn put(&mut self, k: impl Into<String>, v: impl Into<Value>) {
        self.0.push((k.into(), v.into()));
    }

    fn put_opt(&mut self, k: &str, v: Option<f64>) {
        if let Some(x) = v {
            self.put(k, x);
        }
    }

    fn render(&self, fmt: Format, out: &mut dyn Write) -> std::io::Result<()> {
        let plain = |v: &Value| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        match fmt {
            Format::Json | Format::Bin => {
                let map: serde_json::Map<String, Value> = self.0.iter().cloned().collect();
                writeln!(out, "{}", serde_json::to_string_pretty(&Value::Object(map)).unwrap_or_default())
            }
            Format::Csv => {
                writeln!(out, "key,value")?;
                for (k, v) in &self.0 {
                    writeln!(out, "{k},{}", plain(v))?;
                }
                Ok(())
            }
            Format::Text => {
                for (k, v) in &self.0 {
                    writeln!(out, "{k}={}", plain(v))?;
                }
                Ok(())
            }
        }
    }

    fn emit(&self, o: &OutputArgs) -> Outcome {
        let mut w = writer(&o.out)?;
        self.render(o.format, &mut *w).map_err(Error::from)?;
        w.flush().map_err(Error::from)?;
        Ok(())
    }
}

fn law_fields(rep: &mut Report, law: &StepLaw) -> Outcome {
    rep.put_opt("L_nu", law.l_nu);
    rep.put_opt("B_nu", law.b_nu);
    rep.put_opt("tail_const", law.tail_const);
    rep.put("nu(-2)", law.nu(-2));
    rep.put("k_neg", law.k_neg());
    rep.put("k_pos", law.k_pos());
    rep.put("truncation_mass", law.truncation_mass);
    rep.put("mean", law.mean());
    for order in [0, 1] {
        let d = law.harmonic_defects(order, 30)?;
        let m = d.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        rep.put(format!("max_h{order}_defect"), m);
    }
    for k in -6..=6 {
        rep.put(format!("nu({k})"), law.nu(k));
    }
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Outcome {
    check_out(&a.output.out)?;
    check_out(&a.law_out)?;
    let src = source(&a.weights)?;
    let mut rep = Report::default();
    let is_sym = src.preset.is_some_and(|p| matches!(p, Preset::SymmetricCritical { .. }));
    let law = if is_sym {
        let law = step_law(&src.q, a.kneg)?;
        rep.put("classification", "critical_non_regular");
        rep.put("g", 1.0);
        rep.put("c_plus", law.c_plus);
        rep.put("c_minus", -law.r * law.c_plus);
        rep.put("r", law.r);
        Some(law)
    } else {
        let cd = solve_boltzmann(&src.q, a.g)?;
        let label = serde_json::to_value(cd.classification).unwrap_or(Value::Null);
        rep.put("classification", label);
        rep.put("g", cd.g);
        rep.put("g_critical", cd.g_critical);
        rep.put("c_plus", cd.c_plus);
        rep.put("c_minus", cd.c_minus);
        rep.put("r", cd.r);
        rep.put("z_plus", cd.z_plus);
        rep.put("z_diamond", cd.z_diamond);
        rep.put("margin", cd.margin);
        rep.put("residual_1", cd.residuals[0]);
        rep.put("residual_2", cd.residuals[1]);
        let converged = cd.residuals.iter().all(|x| x.abs() <= a.tol);
        rep.put("converged", converged);
        if let Some(m) = &cd.miermont {
            rep.put("miermont_scalar", m.scalar);
            rep.put("miermont_passed", m.passed);
        }
        if a.require_critical && !cd.classification.is_critical() {
            rep.emit(&a.output)?;
            return Err(Error::NotCritical(format!("{:?} with margin {:e}", cd.classification, cd.margin)).into());
        }
        if cd.classification.is_critical() {
            let pos = peelkit::criticality::positive_half(&src.q, &cd)?;
            Some(complete_nu(&pos, a.kneg)?)
        } else {
            None
        }
    };
    if let Some(law) = &law {
        law_fields(&mut rep, law)?;
        if let Some(p) = &a.law_out {
            let mut w = writer(&Some(p.clone()))?;
            export_csv(law, &mut w)?;
            w.flush().map_err(Error::from)?;
        }
    }
    rep.emit(&a.output)
}

fn preset_cmd(a: PresetArgs) -> Outcome {
    check_out(&a.output.out)?;
    let name = a.weights.preset.ok_or_else(|| Failure::Usage("preset requires --preset".into()))?;
    let p = preset_of(&a.weights, name)?;
    let data = preset(p)?;
    let law = step_law(&data.weights, 512)?;
    let mut rep = Report::default();
    rep.put("preset", serde_json::to_value(p).unwrap_or(Value::Null));
    let c = &data.closed;
    let pairs: [(&str, Option<f64>, f64); 4] = [
        ("c_plus", c.c_plus, law.c_plus),
        ("r", c.r, law.r),
        ("nu(-2)", c.nu_m2, law.nu(-2)),
        ("L_nu", c.l_nu, law.l_nu.unwrap_or(f64::NAN)),
    ];
    for (k, closed, solved) in pairs {
        rep.put_opt(&format!("{k}.closed"), closed);
        rep.put(format!("{k}.solved"), solved);
    }
    if let Some((k, v)) = c.nu_top {
        rep.put(format!("nu({k}).closed"), v);
        rep.put(format!("nu({k}).solved"), law.nu(k));
    }
    if let Some((k, v)) = c.q_top {
        rep.put(format!("q_{k}"), v);
        if let Some(x) = data.weights.exact().and_then(|m| m.get(&k)) {
            rep.put(format!("q_{k}.exact"), rational::format(x));
        }
    }
    rep.put_opt("B_nu", law.b_nu);
    rep.emit(&a.output)
}

fn volume_options(v: VolumeArg, q: Option<WeightSequence>) -> VolumeOptions {
    let mode = match v {
        VolumeArg::ExactSmall => VolumeMode::ExactSmall,
        VolumeArg::AsymptoticXi => VolumeMode::AsymptoticXi,
        VolumeArg::Expectation => VolumeMode::Expectation,
    };
    VolumeOptions { mode, weights: q, ..Default::default() }
}

fn simulate_cmd(a: SimulateArgs) -> Outcome {
    check_out(&a.output.out)?;
    let src = source(&a.weights)?;
    let law = step_law(&src.q, a.kneg)?;
    let mode = match a.mode {
        ModeArg::Finite => Mode::Finite,
        ModeArg::Ibpm => Mode::Ibpm,
    };
    let sampler = peelkit::peeling::Sampler::new(&law, mode, volume_options(a.volume_mode, Some(src.q)))?;
    let trace = peelkit::peeling::simulate_with(&sampler, a.l, a.steps, a.seed, a.chain)?;
    let mut w = writer(&a.output.out)?;
    match a.output.format {
        Format::Bin => trace.export_binary(&mut w)?,
        Format::Json => {
            let s = serde_json::to_string(&trace).map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(w, "{s}").map_err(Error::from)?;
        }
        Format::Csv | Format::Text => trace.export_csv(&mut w)?,
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn enumerate(a: EnumerateArgs) -> Outcome {
    check_out(&a.output.out)?;
    if a.dmax > peelkit::oracle::D_MAX_LIMIT {
        return Err(Failure::Usage(format!("--dmax above {}", peelkit::oracle::D_MAX_LIMIT)));
    }
    let src = source(&a.weights)?;
    if !src.exact {
        eprintln!("warning: inexact weights; the rotation-system cross-check is disabled");
    }
    let table = enumerate_dp(&src.q, a.l, a.dmax)?;
    let mut w = writer(&a.output.out)?;
    match a.output.format {
        Format::Json => {
            let mut cells: BTreeMap<String, String> = BTreeMap::new();
            for l in 0..=table.span() {
                for (d, f, v) in table.cells_at(l) {
                    cells.insert(format!("{l},{d},{f}"), rational::format(&v));
                }
            }
            let v = json!({
                "l": a.l,
                "d_max": a.dmax,
                "exact_input": src.exact,
                "disk_total": rational::format(&table.disk_total()),
                "disk_total_f64": rational::to_f64(&table.disk_total()),
                "cells": cells,
            });
            writeln!(w, "{}", serde_json::to_string_pretty(&v).unwrap_or_default()).map_err(Error::from)?;
        }
        _ => table.export_csv(&mut w)?,
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn scaling_test(a: ScalingArgs) -> Outcome {
    check_out(&a.output.out)?;
    if a.steps < 10 || a.chains < 10 || a.samples < 10 {
        return Err(Failure::Usage("--steps, --chains and --samples must be at least 10".into()));
    }
    let names = ["quadrangulation", "triangulation", "geometric(3)"];
    let presets = [Preset::quadrangulation(), Preset::triangulation(), Preset::Geometric { h: 3.0 }];
    let data = presets.iter().map(|p| preset(*p)).collect::<peelkit::Result<Vec<_>>>()?;
    let laws = data.iter().map(|d| step_law(&d.weights, 512)).collect::<peelkit::Result<Vec<_>>>()?;
    let mut report = scaling::ScalingReport { models: names.iter().map(|s| s.to_string()).collect(), ..Default::default() };

    let free = step_law(&data[0].weights, 1 << 17)?;
    report.ecf = scaling::ecf_test(&free, a.steps, a.samples, &[0.5, 1.0, 2.0], a.seed)?;

    let ns: Vec<usize> = [a.steps / 100, a.steps / 10, a.steps].into_iter().filter(|&n| n > 0).collect();
    report.ns = ns.clone();
    let mut samples = Vec::new();
    for ((name, law), d) in names.iter().zip(&laws).zip(&data) {
        let vo = volume_options(a.volume_mode, Some(d.weights.clone()));
        samples.push(scaling::sample_chains(name, law, vo, 2, &ns, a.chains, a.seed)?);
    }
    report.collapse = Some(scaling::collapse_from(&samples, a.steps)?);
    for s in &samples {
        report.exponents.push((s.name.clone(), scaling::exponent_fit(s)));
    }
    for ((name, law), d) in names.iter().zip(&laws).zip(&data) {
        report.slopes.push((name.to_string(), scaling::cplus_slope_test(&d.weights, law)?));
    }
    let mut w = writer(&a.output.out)?;
    match a.output.format {
        Format::Csv => scaling::export_samples_csv(&samples, &mut w)?,
        _ => writeln!(w, "{}", report.to_json()?).map_err(Error::from)?,
    }
    w.flush().map_err(Error::from)?;
    Ok(())
}

fn tune(a: TuneArgs) -> Outcome {
    check_out(&a.output.out)?;
    let src = source(&a.weights)?;
    let (t, cd) = tune_critical(&src.q)?;
    let mut rep = Report::default();
    rep.put("t_star", t);
    rep.put("c_plus", cd.c_plus);
    rep.put("r", cd.r);
    rep.put("margin", cd.margin);
    rep.put("classification", serde_json::to_value(cd.classification).unwrap_or(Value::Null));
    for (k, x) in src.q.scaled(t).terms_upto(64) {
        if x != 0.0 {
            rep.put(format!("q_{k}"), x);
        }
    }
    rep.emit(&a.output)
}
