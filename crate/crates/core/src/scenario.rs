//! Run configuration files, built-in presets, scenario execution, and
//! post-hoc verification of written artifacts.
//!
//! A configuration is a TOML file with sections `[domain]`, `[model]`,
//! `[initial]`, `[source]`, `[run]` and `[analysis]`; every key has a
//! default, so presets and user files only state what differs. The
//! `[analysis] scenario` key selects what `execute` does with the model:
//! a plain simulation, one of the certified checks (mass law, extinction
//! sandwich, critical source, long-time vanishing), or the PDE-free
//! envelope and constant studies.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    comparison_alpha, design_critical_source, estimate_gn_constant, extinction_lower_bound,
    extinction_upper_bound, longtime_vanishing_check, mass_residual, richardson_order,
};
use crate::error::{Error, Result};
use crate::grid::{gn_ratio, BoxDomain, ComplexField};
use crate::integrator::{run_simulation, LedgerRow, ModelParams, RunOptions, Scheme, Trajectory};
use crate::nonlinearity::DampingCoefficient;
use crate::odi::{
    envelope_eval, forced_extinction_certificate, odi_oracle, star_points_by_search, xstar,
    ystar, OdiEnvelope, OdiParams, OdiRegime,
};
use crate::report::ExtinctionReport;
use crate::source::{Profile, SourceSpec};

// ---------------------------------------------------------------------------
// configuration sections
// ---------------------------------------------------------------------------

fn default_lengths() -> Vec<f64> {
    vec![std::f64::consts::PI]
}
fn default_points() -> Vec<usize> {
    vec![256]
}
fn default_im_a() -> f64 {
    1.0
}
fn default_m() -> f64 {
    1.0
}
fn default_kind_sine() -> String {
    "sine".into()
}
fn default_kind_zero() -> String {
    "zero".into()
}
fn default_modes() -> Vec<usize> {
    vec![1]
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_width() -> f64 {
    0.2
}
fn default_t0() -> f64 {
    1.0
}
fn default_exponent() -> f64 {
    3.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_t_end() -> f64 {
    2.0
}
fn default_scheme() -> String {
    "strang".into()
}
fn default_stride() -> usize {
    100
}
fn default_scenario() -> String {
    "plain".into()
}
fn default_gn_budget() -> usize {
    200
}
fn default_safety() -> f64 {
    2.0
}
fn default_law_tol() -> f64 {
    1e-4
}
fn default_halving_tol() -> f64 {
    0.02
}
fn default_cutoff_ratio() -> f64 {
    1e-8
}
fn default_final_fraction() -> f64 {
    1e-3
}
fn default_draws() -> usize {
    100
}
fn default_envelope_tol() -> f64 {
    1e-5
}
fn default_amplitude_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    #[serde(default = "default_lengths")]
    pub lengths: Vec<f64>,
    #[serde(default = "default_points")]
    pub points: Vec<usize>,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self { lengths: default_lengths(), points: default_points() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Real part of the damping coefficient.
    #[serde(default)]
    pub re_a: f64,
    /// Imaginary part; `re_a = im_a = 0` removes the damping term.
    #[serde(default = "default_im_a")]
    pub im_a: f64,
    #[serde(default = "default_m")]
    pub m: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { re_a: 0.0, im_a: default_im_a(), m: default_m() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// "sine", "gaussian" or "zero".
    #[serde(default = "default_kind_sine")]
    pub kind: String,
    #[serde(default = "default_modes")]
    pub modes: Vec<usize>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Scale to unit L2 norm after construction.
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default = "default_width")]
    pub width: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            kind: default_kind_sine(),
            modes: default_modes(),
            amplitude: default_amplitude(),
            normalize: false,
            center: None,
            width: default_width(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    /// "zero", "compact", "critical" or "table".
    #[serde(default = "default_kind_zero")]
    pub kind: String,
    #[serde(default = "default_t0")]
    pub t0: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    /// "sine" or "gaussian".
    #[serde(default = "default_kind_sine")]
    pub profile: String,
    #[serde(default = "default_modes")]
    pub modes: Vec<usize>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub values: Vec<f64>,
}

impl Default for SourceSection {
    fn default() -> Self {
        Self {
            kind: default_kind_zero(),
            t0: default_t0(),
            amplitude: 0.0,
            exponent: default_exponent(),
            profile: default_kind_sine(),
            modes: default_modes(),
            center: None,
            width: default_width(),
            times: Vec::new(),
            values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// "strang" or "midpoint".
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            t_end: default_t_end(),
            scheme: default_scheme(),
            snapshot_stride: default_stride(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// "plain", "mass-law", "sandwich", "critical-source", "longtime",
    /// "odi-regimes" or "gn-estimate".
    #[serde(default = "default_scenario")]
    pub scenario: String,
    /// Regularity order; defaults to `floor(N/2) + 1`.
    #[serde(default)]
    pub ell: Option<u32>,
    #[serde(default = "default_gn_budget")]
    pub gn_budget: usize,
    #[serde(default = "default_safety")]
    pub safety_factor: f64,
    #[serde(default = "default_law_tol")]
    pub law_tolerance: f64,
    #[serde(default = "default_halving_tol")]
    pub halving_tolerance: f64,
    #[serde(default = "default_cutoff_ratio")]
    pub cutoff_norm_ratio: f64,
    #[serde(default = "default_final_fraction")]
    pub final_fraction: f64,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_envelope_tol")]
    pub envelope_tolerance: f64,
    /// Multiplies the designed critical-source amplitude; values other than
    /// one are for negative controls.
    #[serde(default = "default_amplitude_scale")]
    pub amplitude_scale: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            scenario: default_scenario(),
            ell: None,
            gn_budget: default_gn_budget(),
            safety_factor: default_safety(),
            law_tolerance: default_law_tol(),
            halving_tolerance: default_halving_tol(),
            cutoff_norm_ratio: default_cutoff_ratio(),
            final_fraction: default_final_fraction(),
            draws: default_draws(),
            envelope_tolerance: default_envelope_tol(),
            amplitude_scale: default_amplitude_scale(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub source: SourceSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

/// Parses a configuration, anchoring syntax and schema errors to a line.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str::<RunConfig>(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1);
        Error::Config { msg: e.message().to_string(), line }
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

// ---------------------------------------------------------------------------
// building the model from a configuration
// ---------------------------------------------------------------------------

/// A configuration resolved into concrete objects.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub params: ModelParams,
    pub u0: ComplexField,
    pub opts: RunOptions,
}

impl RunConfig {
    pub fn domain(&self) -> Result<BoxDomain> {
        BoxDomain::new(&self.domain.lengths, &self.domain.points)
    }

    pub fn damping(&self) -> Result<Option<DampingCoefficient>> {
        let a = Complex64::new(self.model.re_a, self.model.im_a);
        if a == Complex64::new(0.0, 0.0) {
            Ok(None)
        } else {
            Ok(Some(DampingCoefficient::new(a, self.model.m)?))
        }
    }

    pub fn ell(&self) -> u32 {
        self.analysis.ell.unwrap_or(self.domain.points.len() as u32 / 2 + 1)
    }

    fn initial_field(&self, domain: &BoxDomain) -> Result<ComplexField> {
        let sec = &self.initial;
        let mut u0 = match sec.kind.as_str() {
            "zero" => ComplexField::zeros(domain),
            "sine" => {
                if sec.modes.len() != domain.dims() {
                    return Err(Error::invalid(format!(
                        "initial state has {} mode indices for a {}-dimensional box",
                        sec.modes.len(),
                        domain.dims()
                    )));
                }
                if sec.modes.contains(&0) {
                    return Err(Error::invalid("initial sine mode indices are 1-based"));
                }
                let lengths = domain.lengths().to_vec();
                let modes = sec.modes.clone();
                let amp = sec.amplitude;
                ComplexField::from_fn(domain, |x| {
                    let mut v = amp;
                    for (d, &xi) in x.iter().enumerate() {
                        v *= (modes[d] as f64 * std::f64::consts::PI * xi / lengths[d]).sin();
                    }
                    Complex64::new(v, 0.0)
                })
            }
            "gaussian" => {
                let center = sec
                    .center
                    .clone()
                    .unwrap_or_else(|| domain.lengths().iter().map(|l| l / 2.0).collect());
                if center.len() != domain.dims() {
                    return Err(Error::invalid("initial center dimension mismatch"));
                }
                if sec.width <= 0.0 || sec.width.is_nan() {
                    return Err(Error::invalid("initial width must be positive"));
                }
                let (w, amp) = (sec.width, sec.amplitude);
                ComplexField::from_fn(domain, |x| {
                    let r2: f64 =
                        x.iter().zip(&center).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum();
                    Complex64::new(amp * (-r2 / (2.0 * w * w)).exp(), 0.0)
                })
            }
            other => {
                return Err(Error::invalid(format!(
                    "unknown initial state kind '{other}' (use sine, gaussian or zero)"
                )))
            }
        };
        if sec.normalize {
            let n = u0.norm_l2();
            if n == 0.0 {
                return Err(Error::invalid("cannot normalize a zero initial state"));
            }
            u0.scale(Complex64::new(1.0 / n, 0.0));
        }
        Ok(u0)
    }

    fn source_profile(&self, domain: &BoxDomain) -> Result<Profile> {
        match self.source.profile.as_str() {
            "sine" => Ok(Profile::SineMode { modes: self.source.modes.clone() }),
            "gaussian" => {
                let center = self
                    .source
                    .center
                    .clone()
                    .unwrap_or_else(|| domain.lengths().iter().map(|l| l / 2.0).collect());
                Ok(Profile::Gaussian { center, width: self.source.width })
            }
            other => Err(Error::invalid(format!(
                "unknown source profile '{other}' (use sine or gaussian)"
            ))),
        }
    }

    fn source_spec(&self, domain: &BoxDomain) -> Result<SourceSpec> {
        let sec = &self.source;
        Ok(match sec.kind.as_str() {
            "zero" => SourceSpec::Zero,
            "compact" => SourceSpec::CompactSupport {
                t0: sec.t0,
                amplitude: sec.amplitude,
                profile: self.source_profile(domain)?,
            },
            "critical" => SourceSpec::CriticalDecay {
                t0: sec.t0,
                amplitude: sec.amplitude,
                exponent: sec.exponent,
                profile: self.source_profile(domain)?,
            },
            "table" => SourceSpec::Table {
                times: sec.times.clone(),
                values: sec.values.clone(),
                profile: self.source_profile(domain)?,
            },
            other => {
                return Err(Error::invalid(format!(
                    "unknown source kind '{other}' (use zero, compact, critical or table)"
                )))
            }
        })
    }

    fn scheme(&self) -> Result<Scheme> {
        match self.run.scheme.as_str() {
            "strang" => Ok(Scheme::Strang),
            "midpoint" => Ok(Scheme::Midpoint),
            other => Err(Error::invalid(format!(
                "unknown scheme '{other}' (use strang or midpoint)"
            ))),
        }
    }

    /// Resolves the configuration into model parameters, initial state and
    /// run options.
    pub fn build(&self) -> Result<BuiltScenario> {
        let domain = self.domain()?;
        let damping = self.damping()?;
        let u0 = self.initial_field(&domain)?;
        let source = self.source_spec(&domain)?;
        // fail early on malformed sources
        source.bind(&domain)?;
        let params = ModelParams {
            damping,
            domain,
            source,
            t_end: self.run.t_end,
            dt: self.run.dt,
            scheme: self.scheme()?,
        };
        let opts = RunOptions { snapshot_stride: self.run.snapshot_stride };
        Ok(BuiltScenario { params, u0, opts })
    }
}

// ---------------------------------------------------------------------------
// presets
// ---------------------------------------------------------------------------

pub const PRESET_NAMES: [&str; 7] = [
    "mass-law-m1",
    "extinction-sandwich-1d",
    "extinction-sandwich-2d",
    "critical-source",
    "longtime-vanishing",
    "odi-regimes",
    "gn-estimate",
];

/// Returns the built-in configuration with the given name.
pub fn preset(name: &str) -> Result<RunConfig> {
    let text = match name {
        "mass-law-m1" => {
            r#"
[domain]
lengths = [3.141592653589793]
points = [256]

[model]
im_a = 1.0
m = 1.0

[initial]
kind = "sine"
modes = [1]
normalize = true

[run]
dt = 1e-3
t_end = 2.0
snapshot_stride = 500

[analysis]
scenario = "mass-law"
law_tolerance = 1e-4
"#
        }
        "extinction-sandwich-1d" => {
            r#"
[domain]
lengths = [3.141592653589793]
points = [256]

[model]
im_a = 1.0
m = 0.5

[initial]
kind = "sine"
modes = [1]
amplitude = 1.0

[run]
dt = 1e-3
t_end = 4.0
snapshot_stride = 500
seed = 11

[analysis]
scenario = "sandwich"
ell = 1
gn_budget = 200
safety_factor = 2.0
"#
        }
        "extinction-sandwich-2d" => {
            r#"
[domain]
lengths = [3.141592653589793, 3.141592653589793]
points = [128, 128]

[model]
im_a = 1.0
m = 0.5

[initial]
kind = "sine"
modes = [1, 1]
amplitude = 1.0

[run]
dt = 1e-3
t_end = 4.0
snapshot_stride = 1000
seed = 12

[analysis]
scenario = "sandwich"
ell = 2
gn_budget = 120
safety_factor = 2.0
"#
        }
        "critical-source" => {
            r#"
[domain]
lengths = [3.141592653589793]
points = [256]

[model]
im_a = 1.0
m = 0.5

[initial]
kind = "sine"
modes = [1]
amplitude = 2e-4

[source]
kind = "critical"
t0 = 1.0
profile = "sine"
modes = [1]

[run]
dt = 1e-3
t_end = 2.0
snapshot_stride = 500
seed = 13

[analysis]
scenario = "critical-source"
ell = 1
gn_budget = 200
safety_factor = 2.0
"#
        }
        "longtime-vanishing" => {
            r#"
[domain]
lengths = [3.141592653589793]
points = [128]

[model]
im_a = 1.0
m = 1.0

[initial]
kind = "sine"
modes = [1]
amplitude = 0.5

[source]
kind = "compact"
t0 = 1.0
amplitude = 0.1
profile = "sine"
modes = [2]

[run]
dt = 1e-3
t_end = 16.0
snapshot_stride = 2000

[analysis]
scenario = "longtime"
final_fraction = 1e-3
"#
        }
        "odi-regimes" => {
            r#"
[run]
seed = 21

[analysis]
scenario = "odi-regimes"
draws = 100
envelope_tolerance = 1e-5
"#
        }
        "gn-estimate" => {
            r#"
[domain]
lengths = [3.141592653589793]
points = [256]

[model]
im_a = 1.0
m = 0.5

[run]
seed = 31

[analysis]
scenario = "gn-estimate"
ell = 1
gn_budget = 400
safety_factor = 2.0
"#
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown preset '{other}'; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    parse_config(text)
}

// ---------------------------------------------------------------------------
// execution
// ---------------------------------------------------------------------------

/// Result of executing a scenario: the report that was written to disk and
/// the overall pass flag.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: ExtinctionReport,
    pub pass: bool,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_ledger(dir: &Path, name: &str, traj: &Trajectory) -> Result<()> {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    traj.write_ledger_csv(&mut f).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn write_snapshots(dir: &Path, traj: &Trajectory) -> Result<()> {
    if traj.snapshots.is_empty() {
        return Ok(());
    }
    let snap_dir = dir.join("snapshots");
    ensure_dir(&snap_dir)?;
    for (i, (t, field)) in traj.snapshots.iter().enumerate() {
        let path = snap_dir.join(format!("snap_{i:05}.csv"));
        let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        writeln!(f, "# t = {t}").map_err(|e| Error::io(&path, e))?;
        field.write_csv(&mut f).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn common_params(cfg: &RunConfig, report: &mut ExtinctionReport) {
    report.params.insert("im_a".into(), cfg.model.im_a);
    report.params.insert("re_a".into(), cfg.model.re_a);
    report.params.insert("m".into(), cfg.model.m);
    report.params.insert("dt".into(), cfg.run.dt);
    report.params.insert("t_end".into(), cfg.run.t_end);
    report.params.insert("seed".into(), cfg.run.seed as f64);
    report.params.insert("dims".into(), cfg.domain.points.len() as f64);
}

fn record_trajectory(report: &mut ExtinctionReport, traj: &Trajectory, im_a: f64) -> Result<()> {
    let series = mass_residual(&traj.rows, im_a)?;
    report.params.insert("mass_floor".into(), traj.mass_floor);
    report.measured.insert("residual_max".into(), series.max_abs());
    report.measured.insert("mass_initial".into(), traj.rows[0].mass);
    report.measured.insert("mass_final".into(), traj.rows.last().unwrap().mass);
    report.measured.insert("sup_h1".into(), traj.sup_h1);
    report.measured.insert("sup_h2".into(), traj.sup_h2);
    if traj.extinction_confirmed {
        report.t_num = traj.first_extinction;
    }
    Ok(())
}

/// Executes the scenario selected by the configuration, writing artifacts
/// into `outdir` (`ledger.csv`, auxiliary ledgers, `snapshots/`,
/// `report.json`).
pub fn execute(cfg: &RunConfig, outdir: &Path) -> Result<Outcome> {
    ensure_dir(outdir)?;
    let mut report = match cfg.analysis.scenario.as_str() {
        "plain" => scenario_plain(cfg, outdir)?,
        "mass-law" => scenario_mass_law(cfg, outdir)?,
        "sandwich" => scenario_sandwich(cfg, outdir)?,
        "critical-source" => scenario_critical(cfg, outdir)?,
        "longtime" => scenario_longtime(cfg, outdir)?,
        "odi-regimes" => scenario_odi(cfg, outdir)?,
        "gn-estimate" => scenario_gn(cfg, outdir)?,
        other => {
            return Err(Error::invalid(format!(
                "unknown scenario '{other}'; see the analysis section documentation"
            )))
        }
    };
    common_params(cfg, &mut report);
    let pass = report.overall_pass();
    report.save(&outdir.join("report.json"))?;
    Ok(Outcome { report, pass })
}

fn scenario_plain(cfg: &RunConfig, outdir: &Path) -> Result<ExtinctionReport> {
    let built = cfg.build()?;
    let traj = run_simulation(&built.params, &built.u0, &built.opts)?;
    write_ledger(outdir, "ledger.csv", &traj)?;
    write_snapshots(outdir, &traj)?;
    let mut report = ExtinctionReport::new("plain", "mass balance ledger of a single run");
    record_trajectory(&mut report, &traj, cfg.model.im_a)?;
    if built.params.source.is_zero_after(0.0) {
        report.params.insert("expect_nonincreasing_after".into(), 0.0);
    } else {
        report
            .params
            .insert("expect_nonincreasing_after".into(), built.params.source.support_end());
    }
    report.verdicts.insert("run_completed".into(), true);
    Ok(report)
}

fn scenario_mass_law(cfg: &RunConfig, outdir: &Path) -> Result<ExtinctionReport> {
    if cfg.model.m != 1.0 {
        return Err(Error::invalid("the mass-law scenario requires m = 1"));
    }
    if cfg.source.kind != "zero" {
        return Err(Error::invalid("the mass-law scenario requires a zero source"));
    }
    let built = cfg.build()?;
    if built.params.damping.is_none() {
        return Err(Error::invalid("the mass-law scenario requires a damping term"));
    }
    let im_a = cfg.model.im_a;
    let traj = run_simulation(&built.params, &built.u0, &built.opts)?;
    write_ledger(outdir, "ledger.csv", &traj)?;
    write_snapshots(outdir, &traj)?;

    // the exact law: mass(t) = mass(0) exp(-2 Im(a) t)
    let mass0 = traj.rows[0].mass;
    let mut max_rel = 0.0f64;
    for r in &traj.rows {
        let exact = mass0 * (-2.0 * im_a * r.t).exp();
        max_rel = max_rel.max((r.mass - exact).abs() / exact);
    }

    // halving dt must cut the balance residual at least in half
    let mut cfg_half = cfg.clone();
    cfg_half.run.dt = cfg.run.dt / 2.0;
    let built_half = cfg_half.build()?;
    let traj_half = run_simulation(&built_half.params, &built_half.u0, &built_half.opts)?;
    write_ledger(outdir, "ledger_half.csv", &traj_half)?;

    let res = mass_residual(&traj.rows, im_a)?.max_abs();
    let res_half = mass_residual(&traj_half.rows, im_a)?.max_abs();

    let mut report =
        ExtinctionReport::new("mass-law", "exponential mass decay law in the linear case");
    record_trajectory(&mut report, &traj, im_a)?;
    report.params.insert("expect_nonincreasing_after".into(), 0.0);
    report.measured.insert("law_max_rel_err".into(), max_rel);
    report.measured.insert("residual_max_half_dt".into(), res_half);
    report.convergence_order = if res_half > 0.0 { Some((res / res_half).log2()) } else { None };
    report.verdicts.insert("mass_law_exact".into(), max_rel <= cfg.analysis.law_tolerance);
    report.verdicts.insert("residual_small".into(), res <= cfg.analysis.law_tolerance);
    report.verdicts.insert("residual_halves".into(), res_half <= 0.5 * res);
    Ok(report)
}

fn scenario_sandwich(cfg: &RunConfig, outdir: &Path) -> Result<ExtinctionReport> {
    if cfg.model.m >= 1.0 || cfg.model.m.is_nan() {
        return Err(Error::invalid("the sandwich scenario requires m < 1"));
    }
    if cfg.source.kind != "zero" {
        return Err(Error::invalid("the sandwich scenario requires a zero source"));
    }
    let built = cfg.build()?;
    if built.params.damping.is_none() {
        return Err(Error::invalid("the sandwich scenario requires a damping term"));
    }
    let domain = &built.params.domain;
    let n = domain.dims() as u32;
    let ell = cfg.ell();
    if 2 * ell <= n {
        return Err(Error::invalid(format!(
            "the sandwich bound needs 2 ell > N, got ell = {ell}, N = {n}"
        )));
    }
    let (m, im_a) = (cfg.model.m, cfg.model.im_a);

    let gn = estimate_gn_constant(
        domain,
        m,
        ell,
        cfg.analysis.gn_budget,
        cfg.run.seed,
        cfg.analysis.safety_factor,
    )?;

    let traj = run_simulation(&built.params, &built.u0, &built.opts)?;
    write_ledger(outdir, "ledger.csv", &traj)?;
    write_snapshots(outdir, &traj)?;

    let mut cfg_half = cfg.clone();
    cfg_half.run.dt = cfg.run.dt / 2.0;
    let built_half = cfg_half.build()?;
    let traj_half = run_simulation(&built_half.params, &built_half.u0, &built_half.opts)?;
    write_ledger(outdir, "ledger_half.csv", &traj_half)?;

    let norm0 = traj.rows[0].mass.sqrt();
    let t_lower = extinction_lower_bound(norm0, 0.0, m, im_a, domain.volume())?;
    let sup_hl = if ell == 1 { traj.sup_h1 } else { traj.sup_h2 };
    let t_upper = extinction_upper_bound(norm0, 0.0, m, im_a, gn.c_safe, sup_hl, n, ell)?;

    let t_num = traj.first_extinction.filter(|_| traj.extinction_confirmed);
    let t_num_half = traj_half.first_extinction.filter(|_| traj_half.extinction_confirmed);

    // the balance residual, away from the extinction kink
    let window_end = t_num.map_or(cfg.run.t_end, |t| t - 5.0 * cfg.run.dt);
    let res = mass_residual(&traj.rows, im_a)?.max_abs_in(0.0, window_end);
    let res_half = mass_residual(&traj_half.rows, im_a)?.max_abs_in(0.0, window_end);

    // convergence order from the mass at a pre-extinction checkpoint
    let checkpoint = (0.5 * t_lower).min(cfg.run.t_end);
    let mass_at = |rows: &[LedgerRow]| -> Option<f64> {
        rows.iter()
            .min_by(|a, b| {
                (a.t - checkpoint).abs().partial_cmp(&(b.t - checkpoint).abs()).unwrap()
            })
            .map(|r| r.mass)
    };
    let mut cfg_quarter = cfg.clone();
    cfg_quarter.run.dt = cfg.run.dt / 4.0;
    cfg_quarter.run.t_end = checkpoint;
    cfg_quarter.run.snapshot_stride = 0;
    let built_quarter = cfg_quarter.build()?;
    let traj_quarter =
        run_simulation(&built_quarter.params, &built_quarter.u0, &built_quarter.opts)?;
    let order = match (mass_at(&traj.rows), mass_at(&traj_half.rows), mass_at(&traj_quarter.rows))
    {
        (Some(a), Some(b), Some(c)) => richardson_order(a, b, c),
        _ => None,
    };

    let mut report = ExtinctionReport::new(
        "sandwich",
        "finite-time extinction between closed-form lower and upper bounds",
    );
    record_trajectory(&mut report, &traj, im_a)?;
    report.params.insert("ell".into(), ell as f64);
    report.params.insert("expect_nonincreasing_after".into(), 0.0);
    report.t_num = t_num;
    report.t_lower = Some(t_lower);
    report.t_upper = Some(t_upper);
    report.c_gn_est = Some(gn.c_safe);
    report.sup_hl = Some(sup_hl);
    report.convergence_order = order;
    report.measured.insert("c_gn_raw".into(), gn.c_raw);
    report.measured.insert("residual_max_window".into(), res);
    report.measured.insert("residual_max_window_half_dt".into(), res_half);
    if let Some(t) = t_num_half {
        report.measured.insert("t_num_half_dt".into(), t);
    }

    report.verdicts.insert("extinction_confirmed".into(), t_num.is_some());
    report.verdicts.insert(
        "lower_le_num".into(),
        matches!(t_num, Some(t) if t_lower <= t),
    );
    report.verdicts.insert(
        "num_le_upper".into(),
        matches!(t_num, Some(t) if t <= t_upper),
    );
    report.verdicts.insert(
        "step_halving_stable".into(),
        matches!((t_num, t_num_half), (Some(a), Some(b)) if (a - b).abs() <= cfg.analysis.halving_tolerance * a),
    );
    report.verdicts.insert("residual_small_pre_extinction".into(), res <= 1e-2);
    report.verdicts.insert("residual_halves".into(), res_half <= 0.5 * res);
    Ok(report)
}

fn scenario_critical(cfg: &RunConfig, outdir: &Path) -> Result<ExtinctionReport> {
    if cfg.model.m >= 1.0 || cfg.model.m.is_nan() {
        return Err(Error::invalid("the critical-source scenario requires m < 1"));
    }
    if cfg.source.kind != "critical" {
        return Err(Error::invalid("the critical-source scenario requires source kind 'critical'"));
    }
    let built = cfg.build()?;
    let damping = built
        .params
        .damping
        .ok_or_else(|| Error::invalid("the critical-source scenario requires a damping term"))?;
    let domain = built.params.domain.clone();
    let (m, im_a) = (cfg.model.m, cfg.model.im_a);
    let t0 = cfg.source.t0;

    let gn = estimate_gn_constant(
        &domain,
        m,
        1,
        cfg.analysis.gn_budget,
        cfg.run.seed,
        cfg.analysis.safety_factor,
    )?;
    let profile = cfg.source_profile(&domain)?;
    let (mut spec, design) =
        design_critical_source(&built.u0, &damping, t0, gn.c_safe, profile)?;
    let scale = cfg.analysis.amplitude_scale;
    if scale != 1.0 {
        if let SourceSpec::CriticalDecay { amplitude, .. } = &mut spec {
            *amplitude *= scale;
        }
    }

    let mut params = built.params.clone();
    params.source = spec;
    let traj = run_simulation(&params, &built.u0, &built.opts)?;
    write_ledger(outdir, "ledger.csv", &traj)?;
    write_snapshots(outdir, &traj)?;

    let mass0 = traj.rows[0].mass;
    let row_at_t0 = traj
        .rows
        .iter()
        .min_by(|a, b| (a.t - t0).abs().partial_cmp(&(b.t - t0).abs()).unwrap())
        .expect("ledger is nonempty");
    let norm_ratio = (row_at_t0.mass / mass0).sqrt();
    let max_mass_after = traj
        .rows
        .iter()
        .filter(|r| r.t >= t0)
        .fold(0.0f64, |a, r| a.max(r.mass));

    // certificate against the comparison construction, at the certified
    // budget k_max
    let alpha = comparison_alpha(im_a, gn.c_safe, design.k_max, 1, m, 1);
    let delta = design.delta;
    let times: Vec<f64> = traj.rows.iter().map(|r| r.t).collect();
    let masses: Vec<f64> = traj.rows.iter().map(|r| r.mass).collect();
    let cert_params = OdiParams::new(alpha, delta, t0, mass0)?;
    let xs = xstar(alpha, delta, t0)?;
    let cert = forced_extinction_certificate(
        &times,
        &masses,
        &cert_params,
        1e-9 * xs,
        traj.mass_floor,
    )?;

    // a-priori H1 budget with the actually used amplitude
    let h1_bound_scaled = design.h1_initial + scale * (design.h1_bound - design.h1_initial);

    let mut report = ExtinctionReport::new(
        "critical-source",
        "forced extinction exactly at the source cutoff",
    );
    record_trajectory(&mut report, &traj, im_a)?;
    report.params.insert("t0".into(), t0);
    report.params.insert("amplitude_scale".into(), scale);
    report.params.insert("expect_nonincreasing_after".into(), t0);
    report.c_gn_est = Some(gn.c_safe);
    report.measured.insert("norm_ratio_at_t0".into(), norm_ratio);
    report.measured.insert("max_mass_after_t0".into(), max_mass_after);
    report.measured.insert("design_eps_star".into(), design.eps_star);
    report.measured.insert("design_k_max".into(), design.k_max);
    report.measured.insert("design_k_design".into(), design.k_design);
    report.measured.insert("design_amplitude".into(), design.amplitude * scale);
    report.measured.insert("design_exponent".into(), design.exponent);
    report.measured.insert("design_xstar".into(), xs);
    report.measured.insert("certificate_max_excess".into(), cert.max_excess);
    report.measured.insert("h1_bound_scaled".into(), h1_bound_scaled);

    report
        .verdicts
        .insert("cutoff_norm_small".into(), norm_ratio <= cfg.analysis.cutoff_norm_ratio);
    report
        .verdicts
        .insert("stays_extinct_after_t0".into(), max_mass_after <= traj.mass_floor);
    report.verdicts.insert("certificate_dominated".into(), cert.pass);
    report.verdicts.insert("h1_budget_respected".into(), h1_bound_scaled <= design.k_max);
    Ok(report)
}

fn scenario_longtime(cfg: &RunConfig, outdir: &Path) -> Result<ExtinctionReport> {
    if cfg.source.kind != "compact" {
        return Err(Error::invalid("the longtime scenario requires a compactly supported source"));
    }
    let built = cfg.build()?;
    if built.params.damping.is_none() {
        return Err(Error::invalid("the longtime scenario requires a damping term"));
    }
    let im_a = cfg.model.im_a;
    let t0 = built.params.source.support_end();
    let traj = run_simulation(&built.params, &built.u0, &built.opts)?;
    write_ledger(outdir, "ledger.csv", &traj)?;
    write_snapshots(outdir, &traj)?;
    let verdict = longtime_vanishing_check(&traj.rows, t0, cfg.analysis.final_fraction)?;

    // companion run with sublinear damping dies exactly
    let mut cfg_sub = cfg.clone();
    cfg_sub.model.m = if cfg.model.m < 1.0 { cfg.model.m } else { 0.5 };
    cfg_sub.analysis.scenario = "plain".into();
    let built_sub = cfg_sub.build()?;
    let traj_sub = run_simulation(&built_sub.params, &built_sub.u0, &built_sub.opts)?;
    write_ledger(outdir, "ledger_sub.csv", &traj_sub)?;

    let mut report = ExtinctionReport::new(
        "longtime",
        "long-time vanishing after a compactly supported source switches off",
    );
    record_trajectory(&mut report, &traj, im_a)?;
    report.params.insert("t0".into(), t0);
    report.params.insert("expect_nonincreasing_after".into(), t0);
    report.measured.insert("peak_mass".into(), verdict.peak_mass);
    report.measured.insert("final_over_peak".into(), verdict.final_mass / verdict.peak_mass);
    report.measured.insert("max_uptick_after_t0".into(), verdict.max_uptick);
    if let Some(t) = traj_sub.first_extinction.filter(|_| traj_sub.extinction_confirmed) {
        report.measured.insert("t_num_sublinear".into(), t);
    }
    report
        .verdicts
        .insert("nonincreasing_after_cutoff".into(), verdict.nonincreasing_after_t0);
    report.verdicts.insert(
        "final_below_fraction_of_peak".into(),
        verdict.final_mass <= cfg.analysis.final_fraction * verdict.peak_mass,
    );
    report.verdicts.insert(
        "sublinear_companion_extinguishes".into(),
        traj_sub.extinction_confirmed && traj_sub.final_state.is_zero(),
    );
    Ok(report)
}

fn scenario_odi(cfg: &RunConfig, outdir: &Path) -> Result<ExtinctionReport> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let draws = cfg.analysis.draws.max(1);
    let tol = cfg.analysis.envelope_tolerance;

    let mut max_env_err = 0.0f64;
    let mut max_time_err = 0.0f64;
    let mut samples_csv = String::from("regime,alpha,delta,y0,t,envelope,oracle\n");
    let none: Option<&fn(f64) -> f64> = None;

    for regime in [OdiRegime::Sub, OdiRegime::Linear, OdiRegime::Super] {
        for draw in 0..draws {
            let alpha = rng.gen_range(0.1..2.0);
            let y0 = rng.gen_range(0.1..3.0);
            let delta = match regime {
                OdiRegime::Sub => rng.gen_range(0.2..0.95),
                OdiRegime::Linear => 1.0,
                OdiRegime::Super => rng.gen_range(1.05..2.5),
            };
            let p = OdiParams::new(alpha, delta, 0.0, y0)?;
            let e = OdiEnvelope::new(p);
            // for the sub regime run just past the predicted extinction
            let horizon = match e.extinction_time {
                Some(t) => t + 1.0,
                None => 10.0,
            };
            let trace = odi_oracle(&p, none, horizon)?;
            for (i, (t, y)) in trace.times.iter().zip(&trace.values).enumerate() {
                if i % 100 != 0 {
                    continue;
                }
                let exact = envelope_eval(&e, *t)?;
                max_env_err = max_env_err.max((y - exact).abs());
                if draw == 0 {
                    samples_csv.push_str(&format!(
                        "{:?},{alpha},{delta},{y0},{t},{exact},{y}\n",
                        regime
                    ));
                }
            }
            if let Some(t_star) = e.extinction_time {
                let t_zero = trace
                    .first_zero
                    .ok_or_else(|| Error::invalid("oracle missed a certain extinction"))?;
                max_time_err = max_time_err.max((t_zero - t_star).abs());
            }
        }
    }

    // closed-form maximizer and maximum against independent search
    let mut max_star_err = 0.0f64;
    for _ in 0..10 {
        let alpha = rng.gen_range(0.2..2.0);
        let delta = rng.gen_range(0.3..0.9);
        let t0 = rng.gen_range(0.5..4.0);
        let (x_found, y_found) = star_points_by_search(alpha, delta, t0)?;
        let xs = xstar(alpha, delta, t0)?;
        let ys = ystar(alpha, delta)?;
        max_star_err = max_star_err.max((x_found - xs).abs() / xs);
        max_star_err = max_star_err.max((y_found - ys).abs() / ys);
    }

    let csv_path = outdir.join("odi_samples.csv");
    std::fs::write(&csv_path, samples_csv).map_err(|e| Error::io(&csv_path, e))?;

    let mut report = ExtinctionReport::new(
        "odi-regimes",
        "three decay regimes of the ordinary differential inequality",
    );
    report.params.insert("draws".into(), draws as f64);
    report.measured.insert("max_envelope_err".into(), max_env_err);
    report.measured.insert("max_extinction_time_err".into(), max_time_err);
    report.measured.insert("max_star_rel_err".into(), max_star_err);
    report.verdicts.insert("envelopes_match_oracle".into(), max_env_err <= tol);
    report.verdicts.insert("extinction_times_match".into(), max_time_err <= tol);
    report.verdicts.insert("star_points_match".into(), max_star_err <= 1e-8);
    Ok(report)
}

fn scenario_gn(cfg: &RunConfig, _outdir: &Path) -> Result<ExtinctionReport> {
    let domain = cfg.domain()?;
    let ell = cfg.ell();
    let m = cfg.model.m;
    let estimate = estimate_gn_constant(
        &domain,
        m,
        ell,
        cfg.analysis.gn_budget,
        cfg.run.seed,
        cfg.analysis.safety_factor,
    )?;

    // the single lowest mode is an exact member of the search family
    let modes = vec![1usize; domain.dims()];
    let base = SourceSpec::CompactSupport {
        t0: 1.0,
        amplitude: 1.0,
        profile: Profile::SineMode { modes },
    }
    .bind(&domain)?;
    let mode_ratio = gn_ratio(base.spatial(), m, ell)?;

    let mut report = ExtinctionReport::new(
        "gn-estimate",
        "interpolation constant for the dissipation lower bound",
    );
    report.params.insert("ell".into(), ell as f64);
    report.params.insert("gn_budget".into(), cfg.analysis.gn_budget as f64);
    report.params.insert("safety_factor".into(), cfg.analysis.safety_factor);
    report.c_gn_est = Some(estimate.c_safe);
    report.measured.insert("c_gn_raw".into(), estimate.c_raw);
    report.measured.insert("evaluations".into(), estimate.evaluations as f64);
    report.measured.insert("single_mode_ratio".into(), mode_ratio);
    report
        .verdicts
        .insert("covers_single_modes".into(), estimate.c_raw >= mode_ratio - 1e-12);
    report.verdicts.insert("ratio_plausible".into(), estimate.c_raw < 10.0);
    report.notes.push(format!("best family: {}", estimate.best_family));
    Ok(report)
}

// ---------------------------------------------------------------------------
// verification of written artifacts
// ---------------------------------------------------------------------------

/// Result of re-checking a written run directory.
#[derive(Debug, Clone)]
pub struct VerifySummary {
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Parses a ledger CSV written by [`Trajectory::write_ledger_csv`].
pub fn read_ledger_csv(path: &Path) -> Result<Vec<LedgerRow>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse { path: path.to_path_buf(), msg: "empty ledger".into() })?
        .map_err(|e| Error::io(path, e))?;
    if header.trim() != "t,mass,lmp1,pairing,h1,h2,extinct_flag" {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            msg: format!("unexpected ledger header '{header}'"),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                msg: format!("row {} has {} columns", i + 2, cols.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                msg: format!("row {}: {e}", i + 2),
            })
        };
        rows.push(LedgerRow {
            t: num(cols[0])?,
            mass: num(cols[1])?,
            lmp1: num(cols[2])?,
            pairing: num(cols[3])?,
            h1: num(cols[4])?,
            h2: num(cols[5])?,
            extinct: cols[6].trim() == "1",
        });
    }
    Ok(rows)
}

/// Re-checks a run directory against its own report: the ledger must
/// reproduce the recorded balance residual, the extinction flags must match
/// the recorded floor, the mass must not increase once the source is off,
/// and the recorded extinction time must match the ledger. Any recorded
/// verdict failure also fails verification.
pub fn verify_dir(dir: &Path) -> Result<VerifySummary> {
    let report = ExtinctionReport::load(&dir.join("report.json"))?;
    let mut failures = Vec::new();

    if !report.overall_pass() {
        for (name, ok) in &report.verdicts {
            if !ok {
                failures.push(format!("recorded verdict '{name}' is false"));
            }
        }
        if report.verdicts.is_empty() {
            failures.push("report records no verdicts".into());
        }
    }

    let ledger_path = dir.join("ledger.csv");
    if ledger_path.exists() {
        let rows = read_ledger_csv(&ledger_path)?;
        if rows.len() < 3 {
            failures.push("ledger has fewer than three rows".into());
        } else {
            if rows.iter().any(|r| !r.mass.is_finite() || r.mass < 0.0) {
                failures.push("ledger contains non-finite or negative mass".into());
            }
            if let Some(im_a) = report.params.get("im_a") {
                if let Some(stored) = report.measured.get("residual_max") {
                    let recomputed = mass_residual(&rows, *im_a)?.max_abs();
                    let tol = 1e-9 * stored.abs().max(1e-300);
                    if (recomputed - stored).abs() > tol {
                        failures.push(format!(
                            "balance residual mismatch: ledger gives {recomputed:e}, report records {stored:e}"
                        ));
                    }
                }
            }
            if let Some(floor) = report.params.get("mass_floor") {
                for r in &rows {
                    if r.extinct != (r.mass <= *floor) {
                        failures.push(format!(
                            "extinct flag at t = {} disagrees with the recorded floor",
                            r.t
                        ));
                        break;
                    }
                }
                // recompute the persistent extinction time
                let mut since: Option<f64> = None;
                for r in &rows {
                    if r.mass <= *floor {
                        if since.is_none() {
                            since = Some(r.t);
                        }
                    } else {
                        since = None;
                    }
                }
                match (report.t_num, since) {
                    (Some(a), Some(b)) => {
                        if (a - b).abs() > 1e-12 {
                            failures.push(format!(
                                "extinction time mismatch: report {a}, ledger {b}"
                            ));
                        }
                    }
                    (Some(a), None) => {
                        failures.push(format!(
                            "report claims extinction at {a} but the ledger ends above the floor"
                        ));
                    }
                    _ => {}
                }
            }
            if let Some(after) = report.params.get("expect_nonincreasing_after") {
                let mut prev: Option<f64> = None;
                for r in rows.iter().filter(|r| r.t >= *after) {
                    if let Some(p) = prev {
                        if r.mass > p * (1.0 + 1e-10) + 1e-300 {
                            failures.push(format!(
                                "mass increases at t = {} although the source is off",
                                r.t
                            ));
                            break;
                        }
                    }
                    prev = Some(r.mass);
                }
            }
        }
    }

    Ok(VerifySummary { pass: failures.is_empty(), failures })
}

/// Convenience map of the measured scalars, exposed for tabular output.
pub fn measured_table(report: &ExtinctionReport) -> BTreeMap<String, f64> {
    report.measured.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_build() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            // every preset resolves into a buildable model
            cfg.build().unwrap_or_else(|e| panic!("preset {name} failed to build: {e}"));
        }
        assert!(preset("no-such-preset").is_err());
    }

    #[test]
    fn config_defaults_and_overrides() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.domain.points, vec![256]);
        assert_eq!(cfg.model.im_a, 1.0);
        assert_eq!(cfg.analysis.scenario, "plain");

        let cfg = parse_config(
            "[model]\nim_a = 2.0\nm = 0.5\n\n[run]\ndt = 0.01\n",
        )
        .unwrap();
        assert_eq!(cfg.model.im_a, 2.0);
        assert_eq!(cfg.run.dt, 0.01);
        assert_eq!(cfg.run.t_end, 2.0);
    }

    #[test]
    fn malformed_config_reports_line() {
        let text = "[model]\nim_a = 1.0\nm = \"not a number\"\n";
        match parse_config(text) {
            Err(Error::Config { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("expected config error, got {other:?}"),
        }
        // unknown keys are rejected
        let text = "[model]\nim_a = 1.0\nnot_a_key = 5\n";
        match parse_config(text) {
            Err(Error::Config { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn inadmissible_coefficient_is_rejected_at_build() {
        // m = 1/2 needs 2 sqrt(1/2) im >= (1/2) |re|
        let text = "[model]\nre_a = 10.0\nim_a = 0.1\nm = 0.5\n";
        let cfg = parse_config(text).unwrap();
        match cfg.build() {
            Err(Error::Inadmissible(_)) => {}
            other => panic!("expected inadmissibility, got {other:?}"),
        }
    }

    #[test]
    fn zero_coefficient_means_no_damping() {
        let cfg = parse_config("[model]\nre_a = 0.0\nim_a = 0.0\n").unwrap();
        let built = cfg.build().unwrap();
        assert!(built.params.damping.is_none());
    }

    #[test]
    fn plain_scenario_writes_artifacts_and_verifies() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(
            "[domain]\npoints = [32]\n\n[model]\nim_a = 1.0\nm = 1.0\n\n[run]\ndt = 1e-2\nt_end = 0.3\nsnapshot_stride = 10\n",
        )
        .unwrap();
        let outcome = execute(&cfg, dir.path()).unwrap();
        assert!(outcome.pass);
        assert!(dir.path().join("ledger.csv").exists());
        assert!(dir.path().join("report.json").exists());
        assert!(dir.path().join("snapshots/snap_00000.csv").exists());

        let rows = read_ledger_csv(&dir.path().join("ledger.csv")).unwrap();
        assert_eq!(rows.len(), 31);

        let summary = verify_dir(dir.path()).unwrap();
        assert!(summary.pass, "failures: {:?}", summary.failures);
    }

    #[test]
    fn verify_catches_tampered_ledger() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(
            "[domain]\npoints = [32]\n\n[model]\nim_a = 1.0\nm = 1.0\n\n[run]\ndt = 1e-2\nt_end = 0.3\n",
        )
        .unwrap();
        execute(&cfg, dir.path()).unwrap();
        let ledger_path = dir.path().join("ledger.csv");
        let text = std::fs::read_to_string(&ledger_path).unwrap();
        // bump one interior mass value upward
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let cols: Vec<&str> = lines[10].split(',').collect();
        let mut bumped: Vec<String> = cols.iter().map(|s| s.to_string()).collect();
        let mass: f64 = cols[1].parse().unwrap();
        bumped[1] = format!("{}", mass * 3.0);
        lines[10] = bumped.join(",");
        std::fs::write(&ledger_path, lines.join("\n") + "\n").unwrap();

        let summary = verify_dir(dir.path()).unwrap();
        assert!(!summary.pass);
        assert!(!summary.failures.is_empty());
    }

    #[test]
    fn ledger_round_trip_preserves_rows() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(
            "[domain]\npoints = [32]\n\n[model]\nim_a = 1.3\nm = 0.5\n\n[run]\ndt = 1e-2\nt_end = 0.2\n",
        )
        .unwrap();
        let built = cfg.build().unwrap();
        let traj = run_simulation(&built.params, &built.u0, &built.opts).unwrap();
        let path = dir.path().join("ledger.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        traj.write_ledger_csv(&mut f).unwrap();
        drop(f);
        let rows = read_ledger_csv(&path).unwrap();
        assert_eq!(rows.len(), traj.rows.len());
        for (a, b) in rows.iter().zip(&traj.rows) {
            assert_eq!(a.t, b.t);
            assert_eq!(a.mass, b.mass);
            assert_eq!(a.lmp1, b.lmp1);
            assert_eq!(a.pairing, b.pairing);
            assert_eq!(a.extinct, b.extinct);
        }
    }

    #[test]
    fn odi_scenario_passes_quickly() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = preset("odi-regimes").unwrap();
        cfg.analysis.draws = 5;
        let outcome = execute(&cfg, dir.path()).unwrap();
        assert!(outcome.pass, "verdicts: {:?}", outcome.report.verdicts);
        assert!(dir.path().join("odi_samples.csv").exists());
    }

    #[test]
    fn gn_scenario_passes_with_small_budget() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = preset("gn-estimate").unwrap();
        cfg.analysis.gn_budget = 60;
        cfg.domain.points = vec![64];
        let outcome = execute(&cfg, dir.path()).unwrap();
        assert!(outcome.pass, "verdicts: {:?}", outcome.report.verdicts);
        assert!(outcome.report.c_gn_est.unwrap() > 1.0);
    }
}
