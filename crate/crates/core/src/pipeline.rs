//! Config files, the end-to-end pipeline, and output rendering.
//!
//! Stages run in order: orbits, quotient metric, slices, orbital metric,
//! allowability graph and lift, then verification.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::gspace::{Elem, Point, SampledGSpace};
use crate::lift::{build_allowability_graph, lift_metric, AllowabilityGraph, CoverOptions, LiftError, LiftMode, LiftedMetric};
use crate::metric::DEFAULT_TOLERANCE;
use crate::orbital::{build_orbital_metric, verify_orbital_properties, GroupMetric, OrbitalError, OrbitalMetric};
use crate::quotient::{compute_orbits, quotient_metric, Quotient, QuotientError, QuotientMetricMode};
use crate::scenario::{generate_scenario, Scenario, ScenarioError, ScenarioSpec};
use crate::slices::{build_slice_family, verify_slice_family, SliceFamily, SliceOptions};
use crate::verify::{
    format_sig, property_report, quotient_consistency, slice_report, verify_ball_inclusions, verify_lifted_metric, Status,
    VerificationReport,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("quotient metric: {0}")]
    Quotient(#[from] QuotientError),
    #[error("group metric: {0}")]
    Orbital(#[from] OrbitalError),
    #[error("lift: {0}")]
    Lift(#[from] LiftError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GroupMetricConfig {
    Discrete {
        #[serde(default = "one")]
        scale: f64,
    },
    Word,
    Explicit {
        path: PathBuf,
    },
}

impl Default for GroupMetricConfig {
    fn default() -> Self {
        GroupMetricConfig::Discrete { scale: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum QuotientModeConfig {
    #[default]
    Graph,
    Isometric,
    Explicit {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SlicePolicy {
    /// Shrinking quotient-ball search.
    #[default]
    Build,
    /// `S_x = {x}` and single-point small sets.
    Singleton,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

/// Pipeline configuration (JSON, unknown fields rejected).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioSpec,
    pub mode: LiftMode,
    #[serde(default)]
    pub group_metric: GroupMetricConfig,
    #[serde(default)]
    pub quotient_mode: QuotientModeConfig,
    #[serde(default)]
    pub shrink_factor: Option<f64>,
    #[serde(default)]
    pub enlargement_factor: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub slice_policy: SlicePolicy,
}

impl Config {
    /// Parse and validate; relative paths are resolved against `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: Config = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let ScenarioSpec::File { path } = &mut cfg.scenario {
            resolve(path);
        }
        if let GroupMetricConfig::Explicit { path } = &mut cfg.group_metric {
            resolve(path);
        }
        if let QuotientModeConfig::Explicit { path } = &mut cfg.quotient_mode {
            resolve(path);
        }
        if let Some(p) = &mut cfg.output_dir {
            resolve(p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Config::from_json(&text, base)
    }

    /// Config with defaults for everything but scenario and mode.
    pub fn new(scenario: ScenarioSpec, mode: LiftMode) -> Self {
        Config {
            scenario,
            mode,
            group_metric: GroupMetricConfig::default(),
            quotient_mode: QuotientModeConfig::default(),
            shrink_factor: None,
            enlargement_factor: None,
            tolerance: DEFAULT_TOLERANCE,
            output_dir: None,
            slice_policy: SlicePolicy::Build,
        }
    }

    /// All numeric parameters must be positive and finite.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(PipelineError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("tolerance", self.tolerance)?;
        if let Some(f) = self.shrink_factor {
            positive("shrink_factor", f)?;
        }
        if let Some(f) = self.enlargement_factor {
            positive("enlargement_factor", f)?;
        }
        if let GroupMetricConfig::Discrete { scale } = self.group_metric {
            positive("group_metric.scale", scale)?;
        }
        Ok(())
    }
}

fn read_table(path: &Path) -> Result<Vec<Vec<f64>>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub scenario: Scenario,
    pub quotient: Quotient,
    pub family: SliceFamily,
    pub group_metric: GroupMetric,
    pub orbital: Option<OrbitalMetric>,
    pub graph: AllowabilityGraph,
    pub lifted: LiftedMetric,
    pub report: VerificationReport,
    pub notes: Vec<String>,
}

impl PipelineOutput {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code()
    }

    pub fn rho_csv(&self) -> String {
        let labels = self.scenario.gspace.space().labels();
        table_csv(labels, labels, self.lifted.table())
    }

    pub fn quotient_csv(&self) -> String {
        let q = &self.quotient;
        let labels = self.scenario.gspace.space().labels();
        let orbit_labels: Vec<String> = (0..q.n_orbits()).map(|o| format!("q{o}")).collect();
        let mut out = table_csv(&orbit_labels, &orbit_labels, q.table());
        out.push('\n');
        out.push_str("point,orbit,representative\n");
        for (x, label) in labels.iter().enumerate() {
            let o = q.orbit_of(x);
            out.push_str(&format!("{},{},{}\n", csv_cell(label), orbit_labels[o], csv_cell(&labels[q.representative(o)])));
        }
        out
    }

    pub fn slices_txt(&self) -> String {
        let q = &self.quotient;
        let labels = self.scenario.gspace.space().labels();
        let names = |s: &[Point]| s.iter().map(|&z| labels[z].as_str()).collect::<Vec<_>>().join(" ");
        let mut out = String::from("# levels\n");
        for o in 0..q.n_orbits() {
            out.push_str(&format!(
                "orbit q{o}\trepresentative {}\tlevel {}\tchart radius {}\n",
                labels[q.representative(o)],
                self.family.level(o),
                format_sig(self.family.radius(o))
            ));
        }
        out.push_str("# slices\n");
        for x in 0..labels.len() {
            out.push_str(&format!("S[{}] = {{{}}}\n", labels[x], names(self.family.slice(x))));
        }
        if !self.graph.small_sets().is_empty() {
            out.push_str("# small sets\n");
            for s in self.graph.small_sets() {
                out.push_str(&format!("{{{}}}\n", names(s)));
            }
        }
        out.push_str("# construction log\n");
        for e in self.family.log() {
            match &e.violation {
                None => out.push_str(&format!("q{}\t{}\taccepted\n", e.orbit, e.level)),
                Some(v) => out.push_str(&format!("q{}\t{}\tafter {v}\n", e.orbit, e.level)),
            }
        }
        out
    }

    pub fn report_txt(&self) -> String {
        let mut out = String::new();
        for n in &self.notes {
            out.push_str(&format!("# note: {n}\n"));
        }
        out.push_str(&self.report.render());
        out
    }

    /// Write `rho.csv`, `quotient.csv`, `slices.txt`, `report.txt`.
    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (name, body) in [
            ("rho.csv", self.rho_csv()),
            ("quotient.csv", self.quotient_csv()),
            ("slices.txt", self.slices_txt()),
            ("report.txt", self.report_txt()),
        ] {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(io_err(&p))?;
        }
        Ok(())
    }
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn table_csv(rows: &[String], cols: &[String], table: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for c in cols {
        out.push(',');
        out.push_str(&csv_cell(c));
    }
    out.push('\n');
    for (r, row) in rows.iter().zip(table) {
        out.push_str(&csv_cell(r));
        for v in row {
            out.push(',');
            out.push_str(&format_sig(*v));
        }
        out.push('\n');
    }
    out
}

fn distinct_stabilizers(gs: &SampledGSpace) -> Vec<Vec<Elem>> {
    let mut s = gs.stabilizers().to_vec();
    s.sort();
    s.dedup();
    s
}

/// Run every stage and assemble the report.
pub fn run_pipeline(cfg: &Config) -> Result<PipelineOutput, PipelineError> {
    cfg.validate()?;
    let scenario = generate_scenario(&cfg.scenario)?;
    let gs = &scenario.gspace;
    let region = scenario.region.as_deref();
    let tol = cfg.tolerance;
    let mut notes = vec![format!("scenario {} mode {}", scenario.name, cfg.mode)];
    notes.extend(scenario.notes.iter().cloned());

    let qmode = match &cfg.quotient_mode {
        QuotientModeConfig::Graph => QuotientMetricMode::Graph,
        QuotientModeConfig::Isometric => QuotientMetricMode::Isometric,
        QuotientModeConfig::Explicit { path } => QuotientMetricMode::Explicit { table: read_table(path)? },
    };
    let quotient = quotient_metric(gs, compute_orbits(gs), &qmode)?;

    let family = match cfg.slice_policy {
        SlicePolicy::Build => build_slice_family(
            gs,
            &quotient,
            SliceOptions {
                shrink_factor: cfg.shrink_factor,
            },
        ),
        SlicePolicy::Singleton => SliceFamily::singletons(&quotient),
    };

    let stabs = distinct_stabilizers(gs);
    let dg = match &cfg.group_metric {
        GroupMetricConfig::Discrete { scale } => GroupMetric::discrete(gs.group(), *scale)?,
        GroupMetricConfig::Word => GroupMetric::word(gs.group())?,
        GroupMetricConfig::Explicit { path } => GroupMetric::explicit(gs.group(), read_table(path)?)?,
    }
    .flag_subgroups(stabs.iter().map(Vec::as_slice));

    let orbital = match build_orbital_metric(gs, &quotient, &family, &dg) {
        Ok(o) => Some(o),
        Err(e) if cfg.mode != LiftMode::General => {
            notes.push(format!("orbital metric unavailable: {e}"));
            None
        }
        Err(e) => return Err(e.into()),
    };

    if cfg.mode == LiftMode::Cover && gs.stabilizers().iter().any(|s| s.len() > 1) {
        notes.push("cover mode: the action has fixed points, so it is not a covering and small sets around them are single points".into());
    }
    let cover = CoverOptions {
        enlargement_factor: cfg.enlargement_factor,
        singleton: cfg.slice_policy == SlicePolicy::Singleton,
    };
    let graph = build_allowability_graph(gs, &quotient, &family, orbital.as_ref(), cfg.mode, cover)?;
    let lifted = lift_metric(&graph);

    let mut report = VerificationReport::default();
    report.extend(slice_report(&verify_slice_family(gs, &quotient, &family, region)));
    if let Some(d_o) = &orbital {
        report.extend(property_report(&verify_orbital_properties(gs, &quotient, &family, d_o, &dg, region, tol)));
    }
    report.extend(verify_lifted_metric(gs, &quotient, &lifted, Some(&graph), region, tol));
    if let (LiftMode::General, Some(d_o)) = (cfg.mode, &orbital) {
        if lifted.is_connected() {
            report.extend(verify_ball_inclusions(gs, &quotient, &family, &dg, d_o, &lifted, region));
        } else {
            report.push("balls.inner-inclusion", Status::Advisory, f64::INFINITY, "lift is disconnected, skipped");
            report.push("balls.outer-inclusion", Status::Advisory, f64::INFINITY, "lift is disconnected, skipped");
        }
    }
    report.extend(quotient_consistency(&quotient, &lifted, tol));

    Ok(PipelineOutput {
        scenario,
        quotient,
        family,
        group_metric: dg,
        orbital,
        graph,
        lifted,
        report,
        notes,
    })
}
