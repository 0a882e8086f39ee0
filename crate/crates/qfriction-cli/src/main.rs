//! Command-line front end: single-point evaluation, parameter sweeps,
//! the scaling-comparison table, and the material preset listing.

use std::f64::consts::TAU;
use std::path::Path;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qfriction::analysis::{self, Agreement, ScalingClass};
use qfriction::markov::{self, AtomParams, Axis, DipoleConfig, InternalDynamics};
use qfriction::perturbative;
use qfriction::{MaterialModel, MotionState, QuadratureSpec};

#[derive(Parser)]
#[command(name = "qfriction", version, about = "Velocity-dependent atom-surface shifts, rates and forces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the requested terms at a single kinematic state.
    Point(PointArgs),
    /// Sweep one scenario axis over a grid and stream one row per point.
    Sweep(SweepArgs),
    /// Reproduce the velocity-scaling comparison table.
    Table(TableArgs),
    /// List the built-in material presets.
    Presets {
        #[arg(long, default_value = "text")]
        format: String,
    },
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Material preset name or path to a TOML parameter file.
    #[arg(long, default_value = "drude-gold")]
    material: String,
    /// Transition frequency [rad/s].
    #[arg(long, default_value_t = 1e13)]
    omega10: f64,
    /// Dipole matrix element magnitude [C*m].
    #[arg(long, default_value_t = 3e-30)]
    dipole: f64,
    /// Dipole orientation "x,y,z" (omit for the isotropic average).
    #[arg(long)]
    dipole_dir: Option<String>,
    /// Speed [m/s].
    #[arg(long, default_value_t = 0.0)]
    v: f64,
    /// Angle between velocity and surface normal [deg]: 90 parallel,
    /// 180 toward the plane, 0 away from it.
    #[arg(long, default_value_t = 90.0)]
    theta: f64,
    /// Initial height [m].
    #[arg(long, default_value_t = 1e-8)]
    z0: f64,
    /// Elapsed time [s].
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    /// Relative quadrature tolerance.
    #[arg(long, default_value_t = 1e-9)]
    rel_tol: f64,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Output format: csv or json.
    #[arg(long, default_value = "json")]
    format: String,
    /// Comma-separated term list; see `point --terms help`.
    #[arg(long, default_value = "shift_ground,rate_ground,cp_d2,friction_d2,friction_d4_explicit,friction_d4_implicit,resonant,total")]
    terms: String,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Swept axis: v, theta, z0 or t (theta in degrees).
    #[arg(long)]
    axis: String,
    #[arg(long)]
    start: f64,
    #[arg(long)]
    stop: f64,
    #[arg(long)]
    points: usize,
    /// Log-spaced grid instead of linear.
    #[arg(long, default_value_t = false)]
    log: bool,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long, default_value = "cp_d2,friction_d2")]
    terms: String,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Output format: text or json.
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Term {
    ShiftGround,
    RateGround,
    CpD2,
    FrictionD2,
    FrictionD4Explicit,
    FrictionD4Implicit,
    Resonant,
    Total,
    PertShift,
    PertRate,
    PertCp2,
    PertFriction2,
    PertForce2Full,
    PertCp4,
    PertFriction4,
    PertLoss,
    Sigma40,
}

const TERM_CATALOG: &[(&str, Term, &str)] = &[
    ("shift_ground", Term::ShiftGround, "rad/s"),
    ("rate_ground", Term::RateGround, "1/s"),
    ("cp_d2", Term::CpD2, "N"),
    ("friction_d2", Term::FrictionD2, "N"),
    ("friction_d4_explicit", Term::FrictionD4Explicit, "N"),
    ("friction_d4_implicit", Term::FrictionD4Implicit, "N"),
    ("resonant", Term::Resonant, "N"),
    ("total", Term::Total, "N"),
    ("pert_shift", Term::PertShift, "J"),
    ("pert_rate", Term::PertRate, "1/s"),
    ("pert_cp2", Term::PertCp2, "N"),
    ("pert_friction2", Term::PertFriction2, "N"),
    ("pert_force2_full", Term::PertForce2Full, "N"),
    ("pert_cp4", Term::PertCp4, "N"),
    ("pert_friction4", Term::PertFriction4, "N"),
    ("pert_loss", Term::PertLoss, "N"),
    ("sigma4_0", Term::Sigma40, "N"),
];

impl Term {
    fn name(self) -> &'static str {
        TERM_CATALOG.iter().find(|(_, t, _)| *t == self).unwrap().0
    }
    fn unit(self) -> &'static str {
        TERM_CATALOG.iter().find(|(_, t, _)| *t == self).unwrap().2
    }
}

impl FromStr for Term {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TERM_CATALOG
            .iter()
            .find(|(n, _, _)| *n == s)
            .map(|(_, t, _)| *t)
            .ok_or_else(|| {
                let names: Vec<&str> = TERM_CATALOG.iter().map(|(n, _, _)| *n).collect();
                format!("unknown term '{s}'; known terms: {}", names.join(", "))
            })
    }
}

fn parse_terms(list: &str) -> Result<Vec<Term>, String> {
    let terms: Result<Vec<Term>, String> = list
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(Term::from_str)
        .collect();
    let terms = terms?;
    if terms.is_empty() {
        return Err("empty term list".into());
    }
    Ok(terms)
}

/// A scenario resolved into library types.
struct Scenario {
    atom: AtomParams,
    mat: MaterialModel,
    state: MotionState,
    spec: QuadratureSpec,
}

impl Scenario {
    fn build(args: &ScenarioArgs) -> Result<Self, String> {
        let mat = match MaterialModel::preset(&args.material) {
            Some(m) => m,
            None => MaterialModel::from_config_file(Path::new(&args.material))
                .map_err(|e| format!("material: {e}"))?,
        };
        let config = match &args.dipole_dir {
            None => DipoleConfig::Isotropic,
            Some(s) => {
                let parts: Vec<f64> = s
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| format!("dipole_dir: {e}"))?;
                if parts.len() != 3 {
                    return Err("dipole_dir: expected three components".into());
                }
                DipoleConfig::vector(parts[0], parts[1], parts[2])
                    .map_err(|e| format!("dipole_dir: {e}"))?
            }
        };
        let atom = AtomParams::new(args.dipole, args.omega10, config)
            .map_err(|e| format!("atom: {e}"))?;
        let theta = deg_to_internal(args.theta);
        let state = MotionState::new(args.v, theta, args.z0, args.t)
            .map_err(|e| format!("motion: {e}"))?;
        if !(args.rel_tol > 0.0 && args.rel_tol < 1.0) {
            return Err(format!("rel_tol: must lie in (0, 1), got {}", args.rel_tol));
        }
        let spec = QuadratureSpec::default().with_rel_tol(args.rel_tol);
        Ok(Scenario {
            atom,
            mat,
            state,
            spec,
        })
    }

    fn at(&self, axis: &str, value: f64) -> Result<MotionState, String> {
        let s = &self.state;
        let st = match axis {
            "v" => MotionState::new(value, s.theta, s.z0, s.time),
            "theta" => MotionState::new(s.speed, deg_to_internal(value), s.z0, s.time),
            "z0" => MotionState::new(s.speed, s.theta, value, s.time),
            "t" => MotionState::new(s.speed, s.theta, s.z0, value),
            other => return Err(format!("unknown sweep axis '{other}'")),
        };
        st.map_err(|e| e.to_string())
    }
}

fn deg_to_internal(deg: f64) -> f64 {
    let rad = deg.to_radians() % TAU;
    if rad < 0.0 {
        rad + TAU
    } else {
        rad
    }
}

#[derive(Serialize, Clone)]
struct TermResult {
    term: &'static str,
    unit: &'static str,
    /// Rounded to 12 significant digits; null when the evaluation failed.
    value: Option<f64>,
    error_estimate: Option<f64>,
    converged: bool,
    valid: bool,
    source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// One point evaluation with the internal-dynamics result shared between
/// the terms that need it.
struct PointEval<'a> {
    sc: &'a Scenario,
    state: MotionState,
    dynamics: std::cell::OnceCell<Result<InternalDynamics, String>>,
}

impl<'a> PointEval<'a> {
    fn new(sc: &'a Scenario, state: MotionState) -> Self {
        Self {
            sc,
            state,
            dynamics: std::cell::OnceCell::new(),
        }
    }

    fn dynamics(&self) -> Result<&InternalDynamics, String> {
        self.dynamics
            .get_or_init(|| {
                markov::internal_dynamics(&self.sc.atom, &self.sc.mat, &self.state, &self.sc.spec)
                    .map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| e.clone())
    }

    fn eval(&self, term: Term) -> TermResult {
        let valid = self.state.is_valid_for(self.sc.atom.omega10);
        let a = &self.sc.atom;
        let m = &self.sc.mat;
        let s = &self.state;
        let q = &self.sc.spec;
        // (value, error_estimate, converged, source)
        let out: Result<(f64, f64, bool, &'static str), String> = (|| {
            Ok(match term {
                Term::ShiftGround => {
                    let r = markov::shift_ground(a, m, s, Axis::Imaginary, q)
                        .map_err(|e| e.to_string())?;
                    (r.value, r.error_estimate, r.converged, "ground-shift-with-v2-correction")
                }
                Term::RateGround => {
                    let r = markov::rate_ground(a, m, s, Axis::Imaginary, q)
                        .map_err(|e| e.to_string())?;
                    (r.value, r.error_estimate, r.converged, "ground-rate-linear-in-v")
                }
                Term::CpD2 => {
                    let r = markov::cp_force_d2(a, m, s, Axis::Imaginary, q)
                        .map_err(|e| e.to_string())?;
                    (r.value, r.error_estimate, r.converged, "static-cp-projection")
                }
                Term::FrictionD2 => {
                    let r = markov::friction_force_d2(a, m, s, Axis::Imaginary, q)
                        .map_err(|e| e.to_string())?;
                    (r.value, r.error_estimate, r.converged, "lorentzian-width-squared")
                }
                Term::FrictionD4Explicit | Term::FrictionD4Implicit => {
                    let dy = self.dynamics()?;
                    let (ex, im) = markov::friction_force_d4(a, m, s, dy, Axis::Imaginary, q)
                        .map_err(|e| e.to_string())?;
                    let t = if term == Term::FrictionD4Explicit { ex } else { im };
                    (t.value, t.error_estimate, t.converged, t.source)
                }
                Term::Resonant => {
                    let dy = self.dynamics()?;
                    let t = markov::force_resonant(a, m, s, dy, q).map_err(|e| e.to_string())?;
                    (t.value, t.error_estimate, t.converged, t.source)
                }
                Term::Total => {
                    let r = markov::force_report(a, m, s, q).map_err(|e| e.to_string())?;
                    let err = r.cp_d2.error_estimate
                        + r.friction_d2.error_estimate
                        + r.friction_d4_explicit.error_estimate
                        + r.friction_d4_implicit.error_estimate
                        + r.resonant.error_estimate;
                    (r.total, err, true, "summed-force-report")
                }
                Term::PertShift => {
                    let (sh, _) =
                        perturbative::shift_rate_ground(a, m, s.z0, s.speed, s.theta, q);
                    (sh.value, sh.error_estimate, sh.converged, "initial-state-energy-shift")
                }
                Term::PertRate => {
                    let (_, r) =
                        perturbative::shift_rate_ground(a, m, s.z0, s.speed, s.theta, q);
                    (r.value, r.error_estimate, r.converged, "initial-state-depletion-rate")
                }
                Term::PertCp2 => {
                    let r = perturbative::cp_force_2(a, m, s, true, q).map_err(|e| e.to_string())?;
                    (r.value, r.error_estimate, r.converged, "second-order-static-projection")
                }
                Term::PertFriction2 => {
                    let r = perturbative::friction_force_2(a, m, s, true, q)
                        .map_err(|e| e.to_string())?;
                    (r.value, r.error_estimate, r.converged, "second-order-friction")
                }
                Term::PertForce2Full => {
                    let r = perturbative::force_2_full(a, m, s, q).map_err(|e| e.to_string())?;
                    (r.value, r.error_estimate, r.converged, "second-order-unexpanded")
                }
                Term::PertCp4 => {
                    let (_, cp4, _) =
                        perturbative::force_4_vacuum(a, m, s, q).map_err(|e| e.to_string())?;
                    (cp4.value, cp4.error_estimate, cp4.converged, "fourth-order-cp-correction")
                }
                Term::PertFriction4 => {
                    let (_, _, fr4) =
                        perturbative::force_4_vacuum(a, m, s, q).map_err(|e| e.to_string())?;
                    (fr4.value, fr4.error_estimate, fr4.converged, "fourth-order-friction-correction")
                }
                Term::PertLoss => {
                    let (loss, _, _) =
                        perturbative::force_4_vacuum(a, m, s, q).map_err(|e| e.to_string())?;
                    (loss, 0.0, true, "depletion-weighted-second-order")
                }
                Term::Sigma40 => {
                    let r = perturbative::sigma4_0(a, m, s, q).map_err(|e| e.to_string())?;
                    (r.value, r.error_estimate, r.converged, "two-photon-velocity-independent")
                }
            })
        })();
        match out {
            Ok((value, err_est, converged, source)) => TermResult {
                term: term.name(),
                unit: term.unit(),
                value: Some(sig12(value)),
                error_estimate: Some(sig12(err_est)),
                converged,
                valid,
                source,
                error: None,
            },
            Err(e) => TermResult {
                term: term.name(),
                unit: term.unit(),
                value: None,
                error_estimate: None,
                converged: false,
                valid,
                source: "evaluation-failed",
                error: Some(e),
            },
        }
    }
}

/// Round to 12 significant digits so the serialized output is below the
/// quadrature tolerance, above noise, and stable across runs.
fn sig12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap()
}

fn fmt12(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.11e}"),
        _ => "nan".into(),
    }
}

#[derive(Serialize)]
struct ScenarioDoc {
    material: String,
    omega10: f64,
    dipole: f64,
    dipole_dir: Option<String>,
    v: f64,
    theta_deg: f64,
    z0: f64,
    t: f64,
    rel_tol: f64,
}

impl ScenarioDoc {
    fn from_args(a: &ScenarioArgs) -> Self {
        Self {
            material: a.material.clone(),
            omega10: a.omega10,
            dipole: a.dipole,
            dipole_dir: a.dipole_dir.clone(),
            v: a.v,
            theta_deg: a.theta,
            z0: a.z0,
            t: a.t,
            rel_tol: a.rel_tol,
        }
    }
}

#[derive(Serialize)]
struct PointDoc {
    schema: &'static str,
    scenario: ScenarioDoc,
    results: Vec<TermResult>,
}

fn run_point(args: &PointArgs) -> Result<(), String> {
    let terms = parse_terms(&args.terms)?;
    let sc = Scenario::build(&args.scenario)?;
    let eval = PointEval::new(&sc, sc.state);
    let results: Vec<TermResult> = terms.iter().map(|&t| eval.eval(t)).collect();
    match args.format.as_str() {
        "json" => {
            let doc = PointDoc {
                schema: "qfriction-point-result-v1",
                scenario: ScenarioDoc::from_args(&args.scenario),
                results,
            };
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
        }
        "csv" => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record(["term", "unit", "value", "error_estimate", "converged", "valid", "source"])
                .unwrap();
            for r in &results {
                w.write_record([
                    r.term,
                    r.unit,
                    &fmt12(r.value),
                    &fmt12(r.error_estimate),
                    if r.converged { "true" } else { "false" },
                    if r.valid { "true" } else { "false" },
                    r.source,
                ])
                .unwrap();
            }
            w.flush().unwrap();
        }
        other => return Err(format!("unknown format '{other}'")),
    }
    Ok(())
}

fn sweep_grid(args: &SweepArgs) -> Result<Vec<f64>, String> {
    if args.points == 0 {
        return Err("empty sweep grid".into());
    }
    if args.points == 1 {
        return Ok(vec![args.start]);
    }
    let n = args.points;
    let mut grid = Vec::with_capacity(n);
    if args.log {
        if !(args.start > 0.0 && args.stop > 0.0) {
            return Err("log grid requires positive endpoints".into());
        }
        let ratio = (args.stop / args.start).powf(1.0 / (n as f64 - 1.0));
        for i in 0..n {
            grid.push(args.start * ratio.powi(i as i32));
        }
    } else {
        let step = (args.stop - args.start) / (n as f64 - 1.0);
        for i in 0..n {
            grid.push(args.start + step * i as f64);
        }
    }
    Ok(grid)
}

fn run_sweep(args: &SweepArgs) -> Result<(), String> {
    use rayon::prelude::*;

    let terms = parse_terms(&args.terms)?;
    let sc = Scenario::build(&args.scenario)?;
    let grid = sweep_grid(args)?;
    // Validate the axis name before spawning workers.
    sc.at(&args.axis, grid[0]).ok();
    if !["v", "theta", "z0", "t"].contains(&args.axis.as_str()) {
        return Err(format!("unknown sweep axis '{}'", args.axis));
    }

    // Workers evaluate rows concurrently; the writer below is the single
    // serialization point and preserves grid order.
    let rows: Vec<(f64, Vec<TermResult>)> = grid
        .par_iter()
        .map(|&x| {
            let results = match sc.at(&args.axis, x) {
                Ok(state) => {
                    let eval = PointEval::new(&sc, state);
                    terms.iter().map(|&t| eval.eval(t)).collect()
                }
                // Guard violations are flagged per row, not fatal.
                Err(e) => terms
                    .iter()
                    .map(|&t| TermResult {
                        term: t.name(),
                        unit: t.unit(),
                        value: None,
                        error_estimate: None,
                        converged: false,
                        valid: false,
                        source: "evaluation-failed",
                        error: Some(e.clone()),
                    })
                    .collect(),
            };
            (x, results)
        })
        .collect();

    let axis_unit = match args.axis.as_str() {
        "v" => "m/s",
        "theta" => "deg",
        "z0" => "m",
        "t" => "s",
        _ => unreachable!(),
    };
    match args.format.as_str() {
        "csv" => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            let mut header = vec![format!("{} [{}]", args.axis, axis_unit)];
            for t in &terms {
                header.push(format!("{} [{}]", t.name(), t.unit()));
                header.push(format!("{}_error [{}]", t.name(), t.unit()));
            }
            header.push("valid".into());
            w.write_record(&header).unwrap();
            for (x, results) in &rows {
                let mut rec = vec![format!("{x:.11e}")];
                let mut valid = true;
                for r in results {
                    rec.push(fmt12(r.value));
                    rec.push(fmt12(r.error_estimate));
                    valid &= r.valid;
                }
                rec.push(if valid { "true" } else { "false" }.into());
                w.write_record(&rec).unwrap();
            }
            w.flush().unwrap();
        }
        "json" => {
            #[derive(Serialize)]
            struct Row<'a> {
                axis_value: f64,
                results: &'a [TermResult],
            }
            let docs: Vec<Row> = rows
                .iter()
                .map(|(x, r)| Row {
                    axis_value: sig12(*x),
                    results: r,
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&docs).unwrap());
        }
        other => return Err(format!("unknown format '{other}'")),
    }
    Ok(())
}

fn class_label(c: &ScalingClass) -> String {
    match c {
        ScalingClass::Exponent(fit) => format!(
            "v^{:.2} (stderr {:.2})",
            fit.exponent, fit.exponent_stderr
        ),
        ScalingClass::ExpSmall => "exp. small".into(),
        ScalingClass::Zero => "0".into(),
    }
}

fn run_table(args: &TableArgs) -> Result<(), String> {
    let sc = Scenario::build(&args.scenario)?;
    let rows = analysis::build_table(&sc.atom, &sc.mat, &sc.state, &sc.spec)
        .map_err(|e| e.to_string())?;
    match args.format.as_str() {
        "text" => {
            println!(
                "{:<24} {:<22} {:<22} {}",
                "quantity", "markov", "perturbative", "agree"
            );
            for r in &rows {
                let agree = match r.agree {
                    Agreement::Match => "match",
                    Agreement::Differ => "differ",
                    Agreement::NotApplicable => "n/a",
                };
                println!(
                    "{:<24} {:<22} {:<22} {}",
                    r.label,
                    class_label(&r.markov),
                    class_label(&r.perturbative),
                    agree
                );
            }
        }
        "json" => {
            #[derive(Serialize)]
            struct RowDoc {
                label: &'static str,
                markov: String,
                markov_exponent: Option<f64>,
                perturbative: String,
                perturbative_exponent: Option<f64>,
                agree: &'static str,
            }
            let exp = |c: &ScalingClass| match c {
                ScalingClass::Exponent(f) => Some(sig12(f.exponent)),
                _ => None,
            };
            let docs: Vec<RowDoc> = rows
                .iter()
                .map(|r| RowDoc {
                    label: r.label,
                    markov: class_label(&r.markov),
                    markov_exponent: exp(&r.markov),
                    perturbative: class_label(&r.perturbative),
                    perturbative_exponent: exp(&r.perturbative),
                    agree: match r.agree {
                        Agreement::Match => "match",
                        Agreement::Differ => "differ",
                        Agreement::NotApplicable => "n/a",
                    },
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&docs).unwrap());
        }
        other => return Err(format!("unknown format '{other}'")),
    }
    Ok(())
}

fn run_presets(format: &str) -> Result<(), String> {
    #[derive(Serialize)]
    struct PresetDoc {
        name: String,
        omega_p: f64,
        omega_r: f64,
        gamma: f64,
    }
    let docs: Vec<PresetDoc> = MaterialModel::preset_names()
        .iter()
        .map(|n| {
            let m = MaterialModel::preset(n).unwrap();
            PresetDoc {
                name: n.to_string(),
                omega_p: m.omega_p,
                omega_r: m.omega_r,
                gamma: m.gamma,
            }
        })
        .collect();
    match format {
        "text" => {
            println!("{:<20} {:>12} {:>12} {:>12}", "name", "omega_p", "omega_r", "gamma");
            for d in &docs {
                println!(
                    "{:<20} {:>12.4e} {:>12.4e} {:>12.4e}",
                    d.name, d.omega_p, d.omega_r, d.gamma
                );
            }
        }
        "json" => println!("{}", serde_json::to_string_pretty(&docs).unwrap()),
        other => return Err(format!("unknown format '{other}'")),
    }
    Ok(())
}

fn init_threads() {
    if let Ok(n) = std::env::var("QFRICTION_THREADS") {
        if let Ok(n) = n.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Point(args) => run_point(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Table(args) => run_table(args),
        Command::Presets { format } => run_presets(format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
