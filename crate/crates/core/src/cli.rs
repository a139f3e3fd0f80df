//! Command-line driver: config parsing, presets, the five subcommands and the exit-code
//! contract (0 pass, 1 usage or config error, 2 check failure).

use crate::fields::Configuration;
use crate::flow::{self, FlowOptions};
use crate::frequency::{self, AnalysisParams, Geometry};
use crate::functionals::{self, IdentityReport, ModelOperatorSpec};
use crate::grid::dump;
use crate::grid::quadrature::{BallRule, BallSpec};
use crate::grid::{Domain, FormField, ValueKind};
use crate::limits;
use crate::liealg::LieVec;
use crate::synth::{BandLimited, ConstantModel, FieldSampler, PolyGradient, Z2Model};
use clap::{Parser, Subcommand};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kwflow", version, about = "Checks for the SL(2;C) ASD equations and the complex Chern–Simons flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Config file (key = value lines under [section] headers).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sites per axis.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub preset: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integral and pointwise identities.
    Identities,
    /// Gradient flow with the dissipation ledger.
    Flow,
    /// Frequency profile and scale detectors.
    Frequency,
    /// Eigen-splitting, sign cocycle, concentration set.
    Limits,
    /// Write the configured fields in the binary dump format, or describe a dump file.
    Dump {
        /// Dump file to describe instead.
        input: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

const KEYS: &[(&str, &[&str])] = &[
    ("domain", &["kind", "sites", "extent"]),
    ("field", &["generator", "seed", "amplitude", "kmax", "modes", "r", "tau", "perturbation"]),
    ("analysis", &["c", "e_bound", "kappa_u", "z_u", "mu", "r_max"]),
    ("identities", &["checks"]),
    ("flow", &["s_end", "dt", "ceiling", "project", "snapshot_every"]),
    ("frequency", &["model", "center", "r_min", "r_max", "radii", "target"]),
    ("limits", &["task", "gap", "bumps", "loop_radius", "ball_radius", "balls"]),
    ("check", &["tol"]),
    ("output", &["record_timing"]),
];

/// Parsed `key = value` configuration. Unknown sections and keys are rejected.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<(String, String), String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let ini = ini::Ini::load_from_str(text).map_err(usage)?;
        let mut values = BTreeMap::new();
        for (sec, props) in ini.iter() {
            let sec = sec.unwrap_or("");
            if sec.is_empty() && props.is_empty() {
                continue;
            }
            let allowed = KEYS
                .iter()
                .find(|(s, _)| *s == sec)
                .map(|(_, k)| *k)
                .ok_or_else(|| CliError::Usage(format!("unknown section [{sec}]")))?;
            for (k, v) in props.iter() {
                if !allowed.contains(&k) {
                    return Err(CliError::Usage(format!("unknown key {k} in [{sec}]")));
                }
                values.insert((sec.to_string(), k.to_string()), v.trim().to_string());
            }
        }
        Ok(RunConfig { values })
    }

    /// Later values override earlier ones.
    pub fn merged(mut self, o: RunConfig) -> Self {
        self.values.extend(o.values);
        self
    }

    pub fn set(&mut self, sec: &str, key: &str, v: impl ToString) {
        self.values.insert((sec.into(), key.into()), v.to_string());
    }

    pub fn get_str(&self, sec: &str, key: &str, default: &str) -> String {
        self.values.get(&(sec.into(), key.into())).cloned().unwrap_or_else(|| default.into())
    }

    pub fn get<T: std::str::FromStr>(&self, sec: &str, key: &str, default: T) -> Result<T, CliError> {
        match self.values.get(&(sec.into(), key.into())) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| CliError::Usage(format!("bad value {v:?} for {sec}.{key}"))),
        }
    }

    fn point(&self, sec: &str, key: &str) -> Result<[f64; 4], CliError> {
        let s = self.get_str(sec, key, "0,0,0,0");
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Usage(format!("bad point {s:?} for {sec}.{key}")))?;
        if v.len() != 4 {
            return Err(CliError::Usage(format!("{sec}.{key} needs four coordinates")));
        }
        Ok([v[0], v[1], v[2], v[3]])
    }

    pub fn analysis(&self) -> Result<AnalysisParams, CliError> {
        let d = AnalysisParams::default();
        let kappa_u = self.get("analysis", "kappa_u", d.kappa_u)?;
        let p = AnalysisParams {
            c: self.get("analysis", "c", d.c)?,
            e_bound: self.get("analysis", "e_bound", d.e_bound)?,
            kappa_u,
            z_u: self.get("analysis", "z_u", 100.0 * kappa_u)?,
            mu: self.get("analysis", "mu", d.mu)?,
            r_max: self.get("analysis", "r_max", d.r_max)?,
        };
        p.validate().map_err(usage)?;
        Ok(p)
    }

    pub fn domain(&self) -> Result<Domain, CliError> {
        let n = self.get("domain", "sites", 8usize)?;
        let kind = self.get_str("domain", "kind", "torus4");
        match kind.as_str() {
            "torus4" => Domain::cube4(n, self.get("domain", "extent", 1.0)?).map_err(usage),
            "torus3" => Domain::cube3(n, self.get("domain", "extent", 2.0 * std::f64::consts::PI)?).map_err(usage),
            k => Err(CliError::Usage(format!("unknown domain kind {k}"))),
        }
    }

    pub fn configuration(&self) -> Result<Configuration, CliError> {
        let d = self.domain()?;
        let r = self.get("field", "r", 1.0)?;
        let tau = self.get("field", "tau", 0.5)?;
        let seed = self.get("field", "seed", 0u64)?;
        let amp = self.get("field", "amplitude", 0.1)?;
        let kmax = self.get("field", "kmax", 1i32)?;
        let modes = self.get("field", "modes", 4usize)?;
        let random = |s: u64| BandLimited::new(&d, 1, ValueKind::Lie, kmax, modes, amp, s).field(&d, 1, ValueKind::Lie);
        let flat = || Configuration::flat(&d, [0.3, -0.2, 0.5, 0.1], LieVec::basis(0), r, tau);
        let cfg = match self.get_str("field", "generator", "random").as_str() {
            "zero" => Configuration::zero(&d, r, tau),
            "flat" => flat(),
            "random" => Configuration::new(random(seed), random(seed + 1), r, tau),
            "perturbed" => {
                let mut c = flat().map_err(usage)?;
                let eps = self.get("field", "perturbation", 1e-3)?;
                c.a.axpy(eps / amp.max(1e-300), &random(seed + 1)).map_err(usage)?;
                Ok(c)
            }
            g => return Err(CliError::Usage(format!("unknown generator {g}"))),
        };
        cfg.map_err(usage)
    }

    fn tol(&self, default: f64) -> Result<f64, CliError> {
        self.get("check", "tol", default)
    }

    fn record_timing(&self) -> Result<bool, CliError> {
        self.get("output", "record_timing", false)
    }
}

/// Built-in presets, as config text.
pub fn preset(name: &str) -> Option<&'static str> {
    Some(match name {
        "flat" => "[domain]\nkind = torus4\nsites = 8\n[field]\ngenerator = flat\nr = 1.5\ntau = 0.3\n[identities]\nchecks = pointwise,bochner,model,energy,green,pontrjagin\n",
        "random" => "[domain]\nkind = torus4\nsites = 8\n[field]\ngenerator = random\nseed = 1\namplitude = 0.3\nr = 1.2\ntau = 0.25\n[identities]\nchecks = pointwise,bochner,model\n",
        "perturbed" => "[domain]\nkind = torus4\nsites = 8\n[field]\ngenerator = perturbed\nseed = 2\nperturbation = 1e-2\nr = 1.5\ntau = 0.3\n[identities]\nchecks = pointwise,bochner,model,energy,green\n",
        "dissipation" => "[domain]\nkind = torus3\nsites = 12\n[field]\ngenerator = random\nseed = 1\namplitude = 0.01\nr = 1.0\ntau = 0.3\n[flow]\ns_end = 1.0\ndt = 0.05\nproject = true\n",
        "homogeneous-d1" => "[frequency]\nmodel = degree-one\nr_min = 0.1\nr_max = 0.4\nradii = 16\ntarget = 1\n",
        "homogeneous-d2" => "[frequency]\nmodel = degree-two\nr_min = 0.1\nr_max = 0.4\nradii = 16\ntarget = 2\n",
        "constant" => "[frequency]\nmodel = constant\nr_min = 0.1\nr_max = 0.4\nradii = 16\ntarget = 0\n",
        "z2-frequency" => "[frequency]\nmodel = z2\nr_min = 0.1\nr_max = 0.4\nradii = 16\ntarget = 0.5\n",
        "grid-frequency" => "[domain]\nkind = torus4\nsites = 12\n[field]\ngenerator = random\nseed = 3\namplitude = 0.2\n[frequency]\nmodel = grid\ncenter = 0.5,0.5,0.5,0.5\nr_min = 0.1\nr_max = 0.3\nradii = 6\n",
        "z2-model" => "[limits]\ntask = z2\nloop_radius = 0.5\nball_radius = 0.25\nballs = 12\n",
        "bumps" => "[domain]\nkind = torus4\nsites = 12\n[limits]\ntask = theta\nbumps = 2\n[analysis]\nc = 128\n",
        "decompose" => "[domain]\nkind = torus4\nsites = 8\n[field]\ngenerator = random\nseed = 4\namplitude = 1.0\n[limits]\ntask = decompose\ngap = 0.1\n",
        _ => return None,
    })
}

fn default_preset(cmd: &Command) -> &'static str {
    match cmd {
        Command::Identities => "flat",
        Command::Flow => "dissipation",
        Command::Frequency => "homogeneous-d1",
        Command::Limits => "z2-model",
        Command::Dump { .. } => "random",
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let name = cli.preset.clone().unwrap_or_else(|| default_preset(&cli.command).to_string());
    let mut cfg = RunConfig::parse(preset(&name).ok_or_else(|| CliError::Usage(format!("unknown preset {name}")))?)?;
    if let Some(p) = &cli.config {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
        cfg = cfg.merged(RunConfig::parse(&text)?);
    }
    if let Some(s) = cli.seed {
        cfg.set("field", "seed", s);
    }
    if let Some(n) = cli.grid {
        cfg.set("domain", "sites", n);
    }
    if let Some(t) = cli.tol {
        cfg.set("check", "tol", t);
    }
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(usage)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn status(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

#[derive(Serialize)]
struct CheckedReport {
    #[serde(flatten)]
    report: IdentityReport,
    pass: bool,
}

pub fn cmd_identities(cfg: &RunConfig, out: &Path) -> Result<i32, CliError> {
    let c = cfg.configuration()?;
    let d = *c.domain();
    let tol = cfg.tol(1e-9)?;
    let timing = cfg.record_timing()?;
    let mut reports = vec![];
    for id in cfg.get_str("identities", "checks", "pointwise,bochner,model").split(',').map(str::trim) {
        let t0 = Instant::now();
        let (lhs, rhs) = match id {
            "pointwise" => {
                let (l, r) = functionals::pointwise_identity(&c).map_err(usage)?;
                (l.integrate(), r.integrate())
            }
            "bochner" => {
                let (l, r) = crate::fields::bochner_scalar(&c).map_err(usage)?;
                (l.integrate(), r.integrate())
            }
            "model" => {
                let spec = ModelOperatorSpec { sigma0: LieVec::basis(2), e: [0.6, 0.0, 0.8, 0.0], m: 1.3 };
                let seed = cfg.get("field", "seed", 0u64)?;
                let f = |s| BandLimited::new(&d, 1, ValueKind::Lie, 1, 4, 0.5, s).field(&d, 1, ValueKind::Lie);
                functionals::model_weitzenbock(&spec, &f(seed + 7), &f(seed + 8)).map_err(usage)?
            }
            "energy" => functionals::energy_identity(&c).map_err(usage)?,
            "green" => functionals::green_identity(&c, 0).map_err(usage)?,
            "pontrjagin" => (functionals::pontrjagin_integral(&c.conn).map_err(usage)?.0, 0.0),
            other => return Err(CliError::Usage(format!("unknown identity {other}"))),
        };
        let mut report = IdentityReport::new(&format!("{id}_identity"), lhs, rhs, &d);
        if timing {
            report.runtime_ms = t0.elapsed().as_millis() as u64;
        }
        let pass = report.abs_gap <= tol * 1f64.max(lhs.abs()).max(rhs.abs());
        println!("{:<22} gap {:.3e} {}", report.identity_id, report.abs_gap, if pass { "PASS" } else { "FAIL" });
        reports.push(CheckedReport { report, pass });
    }
    write_json(&out.join("identities.json"), &reports)?;
    Ok(status(reports.iter().all(|r| r.pass)))
}

#[derive(Serialize)]
struct FlowSummary {
    steps: usize,
    max_increase: f64,
    drop: f64,
    stage_energy: f64,
    trapezoid_energy: f64,
    energy_rel_gap: f64,
    constraint_drift: f64,
    rhs_gradient_gap: f64,
    pass: bool,
}

pub fn cmd_flow(cfg: &RunConfig, out: &Path) -> Result<i32, CliError> {
    let mut c = cfg.configuration()?;
    if c.domain().dim() != 3 {
        return Err(CliError::Usage("flow needs domain.kind = torus3".into()));
    }
    if cfg.get("flow", "project", true)? {
        c = flow::project_constraint(&c, 1e-13, 5000).map_err(usage)?;
    }
    let opts = FlowOptions {
        ceiling: cfg.get("flow", "ceiling", 1e3)?,
        snapshot_every: cfg.get("flow", "snapshot_every", 0usize)?,
    };
    let (rhs, grad) = (flow::flow_rhs(&c).map_err(usage)?, flow::rotated_gradient(&c).map_err(usage)?);
    let gap = rhs.0.add(&grad.0).map_err(usage)?.sup_norm().max(rhs.1.add(&grad.1).map_err(usage)?.sup_norm());
    let run = flow::integrate(&c, cfg.get("flow", "s_end", 1.0)?, cfg.get("flow", "dt", 0.05)?, &opts);
    let (_, ledger) = match run {
        Ok(v) => v,
        Err(e) => {
            eprintln!("flow failed: {e}");
            return Ok(EXIT_FAIL);
        }
    };
    let mut f = std::fs::File::create(out.join("ledger.csv"))?;
    ledger.write_csv(&mut f)?;
    for (i, (_, snap)) in ledger.snapshots.iter().enumerate() {
        let mut w = std::fs::File::create(out.join(format!("snapshot_{i:04}_a.kwf")))?;
        dump::write_field(&snap.a, &mut w)?;
        let mut w = std::fs::File::create(out.join(format!("snapshot_{i:04}_conn.kwf")))?;
        dump::write_field(&snap.conn, &mut w)?;
    }
    let drop = flow::instanton_energy(&ledger);
    let stage = flow::stage_energy(&ledger);
    let rel = (stage - drop).abs() / drop.abs().max(1e-300);
    let tol = cfg.tol(1e-5)?;
    let summary = FlowSummary {
        steps: ledger.rows.len() - 1,
        max_increase: ledger.max_increase(),
        drop,
        stage_energy: stage,
        trapezoid_energy: flow::trapezoid_energy(&ledger),
        energy_rel_gap: rel,
        constraint_drift: flow::constraint_drift(&ledger),
        rhs_gradient_gap: gap,
        pass: ledger.max_increase() <= 1e-9 && rel <= tol && gap <= 1e-12,
    };
    println!(
        "flow: {} steps, drop {:.6e}, energy gap {:.2e}, drift {:.2e} {}",
        summary.steps,
        drop,
        rel,
        summary.constraint_drift,
        if summary.pass { "PASS" } else { "FAIL" }
    );
    write_json(&out.join("flow_summary.json"), &summary)?;
    Ok(status(summary.pass))
}

#[derive(Serialize)]
struct FrequencySummary {
    model: String,
    target: Option<f64>,
    max_deviation: Option<f64>,
    ode_residual: f64,
    detectors: Option<frequency::Detectors>,
    pass: bool,
}

pub fn radii(r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![r_min];
    }
    (0..n).map(|i| r_min + (r_max - r_min) * i as f64 / (n - 1) as f64).collect()
}

pub fn cmd_frequency(cfg: &RunConfig, out: &Path) -> Result<i32, CliError> {
    let model = cfg.get_str("frequency", "model", "degree-one");
    let rs = radii(cfg.get("frequency", "r_min", 0.1)?, cfg.get("frequency", "r_max", 0.4)?, cfg.get("frequency", "radii", 16)?);
    let p = cfg.point("frequency", "center")?;
    let rule = BallRule::default_for(4);
    let geo = Geometry::flat();
    let mut detectors = None;
    let prof = match model.as_str() {
        "grid" => {
            let c = cfg.configuration()?;
            let params = cfg.analysis()?;
            detectors = Some(frequency::scale_detectors(&c, p, &params, &BallRule::new(4, 8, 8, 16)).map_err(usage)?);
            frequency::profile_grid(&c, p, &rs, &geo, &rule).map_err(usage)?
        }
        "z2" => frequency::limit_profile(&Z2Model { center: p }, p, &rs, &rule),
        m => {
            let src: Box<dyn FieldSampler> = match m {
                "constant" => Box::new(ConstantModel([LieVec::basis(0), LieVec::ZERO, LieVec::basis(0).scale(0.5), LieVec::ZERO])),
                "degree-one" => Box::new(PolyGradient::degree_one(p)),
                "degree-two" => Box::new(PolyGradient::degree_two(p)),
                "harmonic" => Box::new(PolyGradient::random_harmonic(cfg.get("field", "seed", 0u64)?, p)),
                other => return Err(CliError::Usage(format!("unknown frequency model {other}"))),
            };
            frequency::profile(src.as_ref(), cfg.get("field", "r", 1.0)?, p, &rs, &geo, &rule)
        }
    };
    let mut f = std::fs::File::create(out.join("profile.csv"))?;
    prof.write_csv(&mut f)?;
    let target: Option<f64> = match cfg.values.get(&("frequency".into(), "target".into())) {
        Some(v) => Some(v.parse().map_err(|_| CliError::Usage(format!("bad target {v}")))?),
        None => None,
    };
    let dev = target.map(|t| prof.max_dev(t));
    let ode = if rs.len() >= 3 { frequency::ode_residual(&prof).map_err(usage)? } else { 0.0 };
    let pass = dev.map_or(true, |d| d <= cfg.tol(1e-3).unwrap_or(1e-3)) && prof.n.iter().all(Option::is_some);
    if let Some(d) = &detectors {
        write_json(&out.join("detectors.json"), d)?;
    }
    let summary = FrequencySummary { model, target, max_deviation: dev, ode_residual: ode, detectors, pass };
    println!(
        "frequency {}: max|N - target| {} ode residual {:.2e} {}",
        summary.model,
        dev.map_or("n/a".into(), |d| format!("{d:.2e}")),
        ode,
        if pass { "PASS" } else { "FAIL" }
    );
    write_json(&out.join("frequency_summary.json"), &summary)?;
    Ok(status(pass))
}

/// The ℤ/2 model sampled on a grid flat in `x3, x4`, with `Z` offset by half a cell.
pub fn z2_grid(n: usize) -> Result<(FormField, [f64; 4]), CliError> {
    let d = Domain::torus4([n, n, 4, 4], [2.0, 2.0, 1.0, 1.0]).map_err(usage)?;
    let c = [1.0 + 0.5 * d.spacing(0), 1.0 + 0.5 * d.spacing(1), 0.0, 0.0];
    let m = Z2Model { center: c };
    let a = FormField::from_fn(&d, 1, ValueKind::Lie, |x, o| {
        let v = m.a(x);
        for k in 0..4 {
            v[k].write(&mut o[3 * k..3 * k + 3]);
        }
    });
    Ok((a, c))
}

/// `|ν|` of the ℤ/2 model on a grid whose sites include `Z`.
pub fn z2_abs_grid(n: usize) -> Result<(FormField, [f64; 4]), CliError> {
    let d = Domain::torus4([n, n, 4, 4], [2.0, 2.0, 1.0, 1.0]).map_err(usage)?;
    let c = [1.0, 1.0, 0.0, 0.0];
    let f = FormField::from_fn(&d, 0, ValueKind::Real, |x, o| {
        o[0] = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt().sqrt();
    });
    Ok((f, c))
}

/// Gaussian bumps of mass `mass` each at `centers`, as a density on `d`.
pub fn bump_density(d: &Domain, centers: &[[f64; 4]], width: f64, mass: f64) -> FormField {
    let mut f = FormField::from_fn(d, 0, ValueKind::Real, |x, o| {
        o[0] = centers
            .iter()
            .map(|c| {
                let r2 = d.distance(&x, c).powi(2);
                (-r2 / (2.0 * width * width)).exp()
            })
            .sum();
    });
    let one = f.integrate() / centers.len().max(1) as f64;
    f = f.scale(mass / one);
    f
}

#[derive(Serialize)]
struct LimitsSummary {
    task: String,
    holonomy_around_z: Option<f64>,
    holonomy_contractible: Option<f64>,
    holder_exponent: Option<f64>,
    decomposition_defects: Option<[f64; 4]>,
    theta: Option<limits::ConcentrationSet>,
    pass: bool,
}

pub fn cmd_limits(cfg: &RunConfig, out: &Path) -> Result<i32, CliError> {
    let task = cfg.get_str("limits", "task", "z2");
    let mut s = LimitsSummary {
        task: task.clone(),
        holonomy_around_z: None,
        holonomy_contractible: None,
        holder_exponent: None,
        decomposition_defects: None,
        theta: None,
        pass: false,
    };
    match task.as_str() {
        "z2" => {
            let n = cfg.get("domain", "sites", 32usize)?;
            let (a, c) = z2_grid(n)?;
            let dec = limits::decompose(&a, 1e-8);
            let balls = cfg.get("limits", "balls", 12usize)?;
            let big = cfg.get("limits", "loop_radius", 0.5)?;
            let small = cfg.get("limits", "ball_radius", 0.25)?;
            let around = limits::sign_cocycle(&dec, &limits::circle_cover(c, big, small, balls)).map_err(usage)?;
            let off = [c[0] + 0.55, c[1], 0.0, 0.0];
            let local = limits::sign_cocycle(&dec, &limits::circle_cover(off, 0.15, 0.1, 8)).map_err(usage)?;
            s.holonomy_around_z = around.holonomy(&(0..balls).collect::<Vec<_>>());
            s.holonomy_contractible = local.holonomy(&(0..8).collect::<Vec<_>>());
            let (nu, zc) = z2_abs_grid(n.max(64))?;
            let mask: Vec<bool> = nu.data.iter().map(|&v| v <= 1e-12).collect();
            let fit = limits::holder_fit(&nu, &mask, &BallSpec::new(zc, 0.9)).map_err(usage)?;
            s.holder_exponent = Some(fit.exponent);
            s.pass = s.holonomy_around_z == Some(-1.0)
                && s.holonomy_contractible == Some(1.0)
                && (fit.exponent - 0.5).abs() <= 0.05;
        }
        "decompose" => {
            let c = cfg.configuration()?;
            let dec = limits::decompose(&c.a, cfg.get("limits", "gap", 0.1)?);
            let w = limits::decomposition_defects(&c.a, &dec);
            s.pass = w[0] == 0.0 && w[1] <= 1e-12 && w[2] <= 1e-12 && w[3] <= 1e-11;
            s.decomposition_defects = Some(w);
            let (sig, nu, mask) = dec.to_fields();
            for (name, f) in [("sigma", &sig), ("nu", &nu), ("mask", &mask)] {
                let mut w = std::fs::File::create(out.join(format!("decomposition_{name}.kwf")))?;
                dump::write_field(f, &mut w)?;
            }
        }
        "theta" => {
            let d = cfg.domain()?;
            let params = cfg.analysis()?;
            let nb = cfg.get("limits", "bumps", 1usize)?;
            let all = [[0.25, 0.25, 0.25, 0.25], [0.75, 0.75, 0.5, 0.75], [0.25, 0.75, 0.75, 0.5]];
            if nb > all.len() {
                return Err(CliError::Usage(format!("at most {} bumps", all.len())));
            }
            let thr = params.c.powi(-2) / 8.0;
            let dens = bump_density(&d, &all[..nb], 0.5 * d.spacing(0), 10.0 * thr);
            let set = limits::theta_c_construct(&dens, params.c, params.e_bound, params.r_max);
            s.pass = set.points.len() == nb && (set.points.len() as f64) <= set.cap;
            s.theta = Some(set);
        }
        t => return Err(CliError::Usage(format!("unknown limits task {t}"))),
    }
    println!("limits {}: {}", s.task, if s.pass { "PASS" } else { "FAIL" });
    write_json(&out.join("limits.json"), &s)?;
    Ok(status(s.pass))
}

#[derive(Serialize)]
struct DumpInfo {
    degree: usize,
    kind: String,
    sites: Vec<usize>,
    extents: Vec<f64>,
    sup_norm: f64,
    l2_norm: f64,
}

pub fn cmd_dump(cfg: &RunConfig, out: &Path, input: Option<&Path>) -> Result<i32, CliError> {
    if let Some(p) = input {
        let mut f = std::fs::File::open(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
        let field = dump::read_field(&mut f).map_err(usage)?;
        let d = field.domain;
        let info = DumpInfo {
            degree: field.degree,
            kind: format!("{:?}", field.kind),
            sites: d.sites[..d.dim()].to_vec(),
            extents: d.extents[..d.dim()].to_vec(),
            sup_norm: field.sup_norm(),
            l2_norm: field.norm_l2(),
        };
        println!("{}", serde_json::to_string_pretty(&info).map_err(usage)?);
        return Ok(EXIT_PASS);
    }
    let c = cfg.configuration()?;
    for (name, f) in [("conn", &c.conn), ("a", &c.a)] {
        let mut w = std::fs::File::create(out.join(format!("{name}.kwf")))?;
        dump::write_field(f, &mut w)?;
    }
    println!("wrote conn.kwf and a.kwf to {}", out.display());
    Ok(EXIT_PASS)
}

/// Run with the given arguments and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let result = build_config(&cli).and_then(|cfg| {
        std::fs::create_dir_all(&cli.out)?;
        match &cli.command {
            Command::Identities => cmd_identities(&cfg, &cli.out),
            Command::Flow => cmd_flow(&cfg, &cli.out),
            Command::Frequency => cmd_frequency(&cfg, &cli.out),
            Command::Limits => cmd_limits(&cfg, &cli.out),
            Command::Dump { input } => cmd_dump(&cfg, &cli.out, input.as_deref()),
        }
    });
    match result {
        Ok(code) => code,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("[field]\nseed = 3\n").is_ok());
        assert!(matches!(RunConfig::parse("[field]\nsede = 3\n"), Err(CliError::Usage(_))));
        assert!(matches!(RunConfig::parse("[nowhere]\nx = 1\n"), Err(CliError::Usage(_))));
        assert!(matches!(RunConfig::parse("stray = 1\n"), Err(CliError::Usage(_))));
    }

    #[test]
    fn presets_parse() {
        for name in [
            "flat", "random", "perturbed", "dissipation", "homogeneous-d1", "homogeneous-d2", "constant", "z2-frequency",
            "grid-frequency", "z2-model", "bumps", "decompose",
        ] {
            RunConfig::parse(preset(name).unwrap()).unwrap();
        }
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let c = RunConfig::parse("[field]\nseed = abc\n").unwrap();
        assert!(matches!(c.get("field", "seed", 0u64), Err(CliError::Usage(_))));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["kwflow", "bogus"]), EXIT_USAGE);
        assert_eq!(run(["kwflow", "identities", "--preset", "nope"]), EXIT_USAGE);
    }
}
