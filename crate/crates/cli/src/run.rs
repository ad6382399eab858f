//! Command execution: builds the inputs, runs the computation, fills a report.

use crate::config::{BuildError, ConfigError, RunConfig};
use crate::limitset::{self, LimitSetCloud, LimitSetError};
use crate::report::{Report, Status};
use quake_core::covering::{crossing_sequence, CoveringError, ReferenceStructure};
use quake_core::deform::{DeformError, DeformationPlan};
use quake_core::earthquake::{earthquake_limit_with, EarthquakeError, EarthquakeOptions, Verdict};
use quake_core::verify::{self, CheckResult, VerifyError};
use serde_json::{json, Value};
use std::fs;
use std::io;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Deform,
    Earthquake,
    Verify,
    Crossings,
    Limitset,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Deform => "deform",
            Command::Earthquake => "earthquake",
            Command::Verify => "verify",
            Command::Crossings => "crossings",
            Command::Limitset => "limitset",
        }
    }
}

/// Basepoint shifts `(dx, dy)` in the reference plane tried in order after a
/// degeneracy error; the one used is recorded in the report.
pub const BASEPOINT_OFFSETS: [(f64, f64); 4] = [(0.0, 0.0), (1e-3, 0.0), (0.0, 1e-3), (-1e-3, -7e-4)];

/// A file written next to the report.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub artifacts: Vec<Artifact>,
    /// Wall-clock seconds per phase; kept out of the report so it stays reproducible.
    pub timings: Vec<(String, f64)>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.report.status.exit_code()
    }

    /// Writes `report.json`, `report.txt`, `timings.json` and the artifacts into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.report.to_json())?;
        fs::write(dir.join("report.txt"), self.report.to_text())?;
        let timings: serde_json::Map<String, Value> = self.timings.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let timings = json!({ "config_hash": self.report.config_hash, "seconds": timings });
        fs::write(dir.join("timings.json"), format!("{}\n", serde_json::to_string_pretty(&timings)?))?;
        for a in &self.artifacts {
            fs::write(dir.join(&a.name), &a.contents)?;
        }
        Ok(())
    }
}

/// Failure of a command, sorted by exit status.
#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
    /// Basepoint or segment endpoint on a lift; retried from a shifted basepoint.
    Degenerate(String),
}

impl From<BuildError> for Failure {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::Config(c) => Failure::Config(c.to_string()),
            BuildError::Numerical(m) => Failure::Numerical(m),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<CoveringError> for Failure {
    fn from(e: CoveringError) -> Self {
        match e {
            CoveringError::Degenerate(_) => Failure::Degenerate(e.to_string()),
            e => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<DeformError> for Failure {
    fn from(e: DeformError) -> Self {
        match e {
            DeformError::Covering(c) => c.into(),
            DeformError::Intersecting(..)
            | DeformError::Homotopic(..)
            | DeformError::MissingPlane(_)
            | DeformError::RotationInPlane
            | DeformError::Invalid(_) => Failure::Config(e.to_string()),
            e => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<EarthquakeError> for Failure {
    fn from(e: EarthquakeError) -> Self {
        match e {
            EarthquakeError::Deform(d) => d.into(),
            e => Failure::Config(e.to_string()),
        }
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Invalid(m) => Failure::Config(m),
            e => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<LimitSetError> for Failure {
    fn from(e: LimitSetError) -> Self {
        match e {
            LimitSetError::DepthBudget(_) => Failure::Config(e.to_string()),
            LimitSetError::NotLoxodromic(_) => Failure::Numerical(e.to_string()),
        }
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    offset: (f64, f64),
    report: Report,
    artifacts: Vec<Artifact>,
    timings: Vec<(String, f64)>,
}

impl Context<'_> {
    fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push((phase.into(), start.elapsed().as_secs_f64()));
        out
    }
}

/// Runs `command` on a validated configuration. Failures are recorded in the
/// report together with the configuration that reproduces them.
pub fn run(command: Command, cfg: &RunConfig) -> Outcome {
    let mut retries = Vec::new();
    for (attempt, &offset) in BASEPOINT_OFFSETS.iter().enumerate() {
        let mut ctx = Context {
            cfg,
            offset,
            report: Report::new(command.name(), cfg),
            artifacts: Vec::new(),
            timings: Vec::new(),
        };
        let result = match command {
            Command::Deform => run_deform(&mut ctx),
            Command::Earthquake => run_earthquake(&mut ctx),
            Command::Verify => run_verify(&mut ctx),
            Command::Crossings => run_crossings(&mut ctx),
            Command::Limitset => run_limitset(&mut ctx),
        };
        if let Err(Failure::Degenerate(m)) = &result {
            retries.push(json!({ "basepoint_offset": offset, "error": m }));
            if attempt + 1 < BASEPOINT_OFFSETS.len() {
                continue;
            }
        }
        let witness = json!({ "command": command.name(), "config": cfg, "basepoint_retries": retries });
        match result {
            Ok(()) => ctx.report.settle(),
            Err(Failure::Config(m)) => ctx.report.fail(Status::ConfigError, m, witness),
            Err(Failure::Numerical(m) | Failure::Degenerate(m)) => ctx.report.fail(Status::NumericalError, m, witness),
        }
        if !retries.is_empty() {
            if let Value::Object(map) = &mut ctx.report.result {
                map.insert("basepoint_offset".into(), json!(offset));
                map.insert("basepoint_retries".into(), json!(retries));
            }
        }
        return Outcome { report: ctx.report, artifacts: ctx.artifacts, timings: ctx.timings };
    }
    unreachable!("the last offset always returns")
}

fn reference(ctx: &Context) -> Result<ReferenceStructure, Failure> {
    let base = ctx.cfg.reference()?;
    Ok(match ctx.offset {
        (0.0, 0.0) => base,
        (dx, dy) => base.with_basepoint_offset(dx, dy),
    })
}

fn run_deform(ctx: &mut Context) -> Result<(), Failure> {
    let cfg = ctx.cfg;
    let reference = reference(ctx)?;
    let rho = cfg.representation(&reference)?;
    let mc = cfg.multicurve(&reference)?;
    let plan = ctx.timed("plan", || DeformationPlan::new(&mc, &reference))?;
    let deformation = ctx.timed("deform", || plan.apply(&rho, cfg.deform.t))?;
    let out = &deformation.representation;
    let generators = rho.presentation().generator_names();
    let crossings: Vec<Value> = generators
        .iter()
        .zip(plan.generator_crossings())
        .map(|(g, cs)| json!({ "generator": g, "crossings": cs }))
        .collect();
    let residual = out.relator_residual();
    ctx.report.checks.push(CheckResult::new("homomorphism", residual, out.relator_tolerance(), || json!({ "images": out })));
    let (distance, _) = rho.max_generator_distance(out);
    ctx.report.result = json!({
        "t": cfg.deform.t,
        "relator_residual": residual,
        "max_generator_distance": distance,
        "input": rho,
        "representation": out,
        "raw_images": deformation.raw.iter().map(|g| g.rows()).collect::<Vec<_>>(),
        "generator_crossings": crossings,
    });
    Ok(())
}

fn run_earthquake(ctx: &mut Context) -> Result<(), Failure> {
    let cfg = ctx.cfg;
    let reference = reference(ctx)?;
    let rho = cfg.representation(&reference)?;
    let approximation = cfg.approximation(&reference)?;
    let max_steps = cfg.earthquake.as_ref().map_or(16, |e| e.max_steps);
    let options = EarthquakeOptions { max_steps, time_limit: None };
    let tol = cfg.tolerances.convergence;
    let report = ctx.timed("earthquake", || earthquake_limit_with(&rho, &approximation, tol, &reference, &options))?;
    let last = report.distances.last().map_or(f64::INFINITY, |&(_, d)| d);
    let converged = report.verdict == Verdict::Converged;
    ctx.report.checks.push(CheckResult {
        name: "convergence".into(),
        residual: last,
        threshold: tol,
        pass: converged,
        witness: (!converged).then(|| json!({ "distances": report.distances, "verdict": report.verdict })),
    });
    ctx.report.checks.push(CheckResult {
        name: "side-separation".into(),
        residual: if report.side_separation { 0.0 } else { 1.0 },
        threshold: 1.0,
        pass: report.side_separation,
        witness: None,
    });
    ctx.report.result = serde_json::to_value(&report).expect("report serializes");
    Ok(())
}

fn run_verify(ctx: &mut Context) -> Result<(), Failure> {
    let cfg = ctx.cfg;
    let reference = reference(ctx)?;
    let options = cfg.suite_options();
    let checks = ctx.timed("verify", || verify::run_suite(&reference, &options))?;
    let passed = checks.iter().filter(|c| c.pass).count();
    ctx.report.result = json!({ "checks_run": checks.len(), "checks_passed": passed });
    ctx.report.checks = checks;
    Ok(())
}

fn run_crossings(ctx: &mut Context) -> Result<(), Failure> {
    let cfg = ctx.cfg;
    let reference = reference(ctx)?;
    let words = cfg.crossing_words()?;
    let curves = cfg.crossing_curves()?;
    let mut sequences = Vec::new();
    let mut incomplete = Vec::new();
    let start = Instant::now();
    for w in &words {
        for c in &curves {
            let seq = crossing_sequence(w, c, &reference)?;
            if !seq.certificate.is_complete(reference.cover_radius()) {
                incomplete.push(json!({ "element": w, "curve": c.core() }));
            }
            sequences.push(json!({
                "element": w,
                "curve": c.core(),
                "intersection": seq.crossings.iter().map(|x| x.sign as i64).sum::<i64>(),
                "crossings": seq.crossings,
                "certificate": seq.certificate,
            }));
        }
    }
    ctx.timings.push(("crossings".into(), start.elapsed().as_secs_f64()));
    ctx.report.checks.push(CheckResult::new("search-complete", incomplete.len() as f64, 1.0, || json!(incomplete)));
    ctx.report.result = json!({ "cover_radius": reference.cover_radius(), "sequences": sequences });
    Ok(())
}

fn run_limitset(ctx: &mut Context) -> Result<(), Failure> {
    let cfg = ctx.cfg;
    let reference = reference(ctx)?;
    let mut rho = cfg.representation(&reference)?;
    if !cfg.multicurve.is_empty() {
        let mc = cfg.multicurve(&reference)?;
        rho = ctx.timed("deform", || DeformationPlan::new(&mc, &reference)?.apply(&rho, cfg.deform.t))?.representation;
    }
    let (depth, tol) = (cfg.limitset.depth, cfg.limitset.angular_tolerance);
    let cloud: LimitSetCloud = ctx.timed("limitset", || limitset::limitset_cloud(&rho, depth, tol))?;
    let fit = limitset::fit_circle(&cloud.points);
    let hash = ctx.report.config_hash.clone();
    ctx.artifacts.push(Artifact { name: "limitset.csv".into(), contents: limitset::to_csv(&cloud, &hash) });
    match cloud.dim {
        2 => ctx.artifacts.push(Artifact { name: "limitset.svg".into(), contents: limitset::disk_svg(&cloud, &hash) }),
        3 => ctx.artifacts.push(Artifact { name: "limitset.svg".into(), contents: limitset::sphere_svg(&cloud, &hash) }),
        _ => {}
    }
    ctx.report.result = json!({
        "points": cloud.points.len(),
        "words": cloud.words,
        "skipped": cloud.skipped,
        "circle_deviation": fit.as_ref().map(|f| f.max_deviation),
        "circle": fit,
        "artifacts": ctx.artifacts.iter().map(|a| a.name.clone()).collect::<Vec<_>>(),
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn deform_at_zero_returns_input() {
        let cfg = parse_config("[[multicurve]]\nword = \"a1\"\ntwist = 0.7\n[deform]\nt = 0.0").unwrap();
        let out = run(Command::Deform, &cfg);
        assert_eq!(out.exit_code(), 0);
        assert_eq!(out.report.result["representation"], out.report.result["input"]);
    }

    #[test]
    fn crossing_of_b1_with_a1() {
        let cfg = parse_config("[crossings]\nwords = [\"b1\"]\ncurves = [\"a1\"]").unwrap();
        let out = run(Command::Crossings, &cfg);
        assert_eq!(out.exit_code(), 0);
        let seq = &out.report.result["sequences"][0];
        let crossings = seq["crossings"].as_array().unwrap();
        assert_eq!(crossings.len(), 1);
        assert_eq!(crossings[0]["sign"].as_i64().unwrap().abs(), 1);
    }

    #[test]
    fn intersecting_curves_exit_with_config_status() {
        let cfg = parse_config("[[multicurve]]\nword = \"a1\"\n[[multicurve]]\nword = \"b1\"").unwrap();
        let out = run(Command::Deform, &cfg);
        assert_eq!(out.exit_code(), 2);
        assert!(out.report.error.as_ref().unwrap().witness["config"].is_object());
    }

    #[test]
    fn earthquake_recipe_converges() {
        let text = "[earthquake]\nmax_steps = 8\n[earthquake.recipe]\nseed = \"a1\"\ntwisting = \"b1\"\ncount = 8\ntwist = 0.3\n[tolerances]\nconvergence = 0.5";
        let out = run(Command::Earthquake, &parse_config(text).unwrap());
        assert_eq!(out.report.result["steps"].as_u64(), Some(8));
        assert!(out.report.checks.iter().any(|c| c.name == "convergence"));
    }

    #[test]
    fn unsupported_recipe_is_a_config_error() {
        let text = "[earthquake.recipe]\nseed = \"a1\"\ntwisting = \"a1 b1\"";
        assert_eq!(run(Command::Earthquake, &parse_config(text).unwrap()).exit_code(), 2);
    }

    #[test]
    fn limitset_artifacts_carry_the_hash() {
        let cfg = parse_config("[limitset]\ndepth = 2").unwrap();
        let out = run(Command::Limitset, &cfg);
        assert_eq!(out.exit_code(), 0);
        let names: Vec<_> = out.artifacts.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["limitset.csv", "limitset.svg"]);
        assert!(out.artifacts.iter().all(|a| a.contents.contains(&out.report.config_hash)));
        assert!(out.report.result["circle_deviation"].as_f64().unwrap() < 1e-6);
    }

    #[test]
    fn dimension_four_writes_csv_only() {
        let cfg = parse_config("dimension = 4\n[limitset]\ndepth = 1").unwrap();
        let out = run(Command::Limitset, &cfg);
        assert_eq!(out.artifacts.len(), 1);
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = parse_config("[[multicurve]]\nword = \"b2\"\ntwist = 0.4").unwrap();
        let a = run(Command::Deform, &cfg);
        let b = run(Command::Deform, &cfg);
        assert_eq!(a.report.to_json(), b.report.to_json());
        assert_eq!(a.report.to_text(), b.report.to_text());
    }
}
