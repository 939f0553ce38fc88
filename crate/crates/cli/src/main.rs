//! Command-line runner for the extinction laboratory: scenario presets,
//! config-driven runs, parameter sweeps, artifact verification, and the
//! standalone envelope and constant tools.
//!
//! Exit codes: 0 all verdicts pass, 2 at least one verdict failed, 1 the
//! run itself could not be carried out (bad config, inadmissible
//! parameters, I/O failure).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quench_core::analysis::design_critical_source;
use quench_core::analysis::estimate_gn_constant;
use quench_core::grid::BoxDomain;
use quench_core::odi::{
    envelope_eval, odi_oracle, xstar, ystar, OdiEnvelope, OdiParams, OdiRegime,
};
use quench_core::report::ExtinctionReport;
use quench_core::scenario::{
    execute, load_config, preset, verify_dir, Outcome, RunConfig, PRESET_NAMES,
};
use quench_core::Error;

#[derive(Parser)]
#[command(
    name = "quench",
    version,
    about = "Simulates damped Schrodinger fields and verifies their extinction laws"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigSource {
    /// Path to a TOML run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Name of a built-in preset (see `quench presets`).
    #[arg(long)]
    preset: Option<String>,
}

impl ConfigSource {
    fn load(&self) -> anyhow::Result<(RunConfig, String)> {
        match (&self.config, &self.preset) {
            (Some(path), None) => {
                let cfg = load_config(path)?;
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "run".into());
                Ok((cfg, name))
            }
            (None, Some(name)) => Ok((preset(name)?, name.clone())),
            (None, None) => anyhow::bail!("pass either --config <path> or --preset <name>"),
            (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
        }
    }
}

#[derive(Args)]
struct Overrides {
    /// Override the time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the interpolation-constant safety factor.
    #[arg(long)]
    safety_factor: Option<f64>,
    /// Multiply the designed critical-source amplitude (negative controls).
    #[arg(long)]
    amplitude_scale: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(dt) = self.dt {
            cfg.run.dt = dt;
        }
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        if let Some(s) = self.safety_factor {
            cfg.analysis.safety_factor = s;
        }
        if let Some(s) = self.amplitude_scale {
            cfg.analysis.amplitude_scale = s;
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a scenario and write its ledger, snapshots and report.
    Run {
        #[command(flatten)]
        source: ConfigSource,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory for ledger.csv, snapshots/ and report.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check the artifacts in a run directory, or rerun a preset and
    /// check it.
    Verify {
        /// Run directory containing report.json and ledger.csv.
        #[arg(long, conflicts_with = "preset")]
        out: Option<PathBuf>,
        /// Preset to rerun into a temporary directory and check.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Run a one-parameter sweep and merge the results into summary.csv.
    Sweep {
        #[command(flatten)]
        source: ConfigSource,
        #[command(flatten)]
        overrides: Overrides,
        /// Config key to vary (model.m, model.im_a, model.re_a, run.dt,
        /// run.t_end, run.seed, source.amplitude, source.t0,
        /// initial.amplitude, analysis.amplitude_scale,
        /// analysis.safety_factor).
        #[arg(long)]
        param: String,
        /// Comma-separated grid values, e.g. 0.2,0.4,0.6.
        #[arg(long)]
        values: String,
        /// Output directory; one subdirectory per grid point.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print decay envelopes and their constants as CSV.
    OdiTable {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Comma-separated exponent values, one table block per value.
        #[arg(long, default_value = "0.5")]
        delta: String,
        #[arg(long, default_value_t = 1.0)]
        y0: f64,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Add a column with the independent integrator's values.
        #[arg(long)]
        oracle: bool,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the interpolation constant for a box and exponent pair.
    GnEstimate {
        /// Comma-separated box side lengths.
        #[arg(long, default_value = "3.141592653589793")]
        lengths: String,
        /// Comma-separated grid sizes per axis.
        #[arg(long, default_value = "256")]
        points: String,
        #[arg(long, default_value_t = 0.5)]
        m: f64,
        #[arg(long, default_value_t = 1)]
        ell: u32,
        #[arg(long, default_value_t = 400)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2.0)]
        safety_factor: f64,
    },
    /// Design the critically decaying source for a configured initial state.
    DesignSource {
        #[command(flatten)]
        source: ConfigSource,
        /// Override the prescribed cutoff time.
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        safety_factor: Option<f64>,
        /// Write the design JSON to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in presets.
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Cmd) -> anyhow::Result<ExitCode> {
    match cmd {
        Cmd::Run { source, overrides, out } => {
            let (mut cfg, name) = source.load()?;
            overrides.apply(&mut cfg);
            let outcome = execute(&cfg, &out)?;
            print_outcome(&name, &outcome, &out);
            Ok(exit_for(outcome.pass))
        }
        Cmd::Verify { out, preset: preset_name } => cmd_verify(out, preset_name),
        Cmd::Sweep { source, overrides, param, values, out } => {
            cmd_sweep(source, overrides, &param, &values, &out)
        }
        Cmd::OdiTable { alpha, delta, y0, t0, t_end, samples, oracle, out } => {
            cmd_odi_table(alpha, &delta, y0, t0, t_end, samples, oracle, out.as_deref())
        }
        Cmd::GnEstimate { lengths, points, m, ell, budget, seed, safety_factor } => {
            cmd_gn_estimate(&lengths, &points, m, ell, budget, seed, safety_factor)
        }
        Cmd::DesignSource { source, t0, seed, safety_factor, out } => {
            cmd_design_source(source, t0, seed, safety_factor, out.as_deref())
        }
        Cmd::Presets => {
            for name in PRESET_NAMES {
                let cfg = preset(name)?;
                println!("{name}: scenario {}", cfg.analysis.scenario);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn exit_for(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn print_outcome(name: &str, outcome: &Outcome, out: &Path) {
    let r = &outcome.report;
    println!("run: {name}");
    println!("claim: {}", r.claim);
    for (key, ok) in &r.verdicts {
        println!("  [{}] {key}", if *ok { "pass" } else { "FAIL" });
    }
    if let Some(t) = r.t_num {
        println!("  extinction time: {t}");
    }
    if let (Some(lo), Some(hi)) = (r.t_lower, r.t_upper) {
        println!("  bounds: [{lo}, {hi}]");
    }
    println!(
        "overall: {} (artifacts in {})",
        if outcome.pass { "PASS" } else { "FAIL" },
        out.display()
    );
}

fn cmd_verify(out: Option<PathBuf>, preset_name: Option<String>) -> anyhow::Result<ExitCode> {
    let dir = match (out, preset_name) {
        (Some(dir), None) => dir,
        (None, Some(name)) => {
            let cfg = preset(&name)?;
            let dir = std::env::temp_dir().join(format!("quench-verify-{name}-{}", std::process::id()));
            let outcome = execute(&cfg, &dir)?;
            print_outcome(&name, &outcome, &dir);
            dir
        }
        _ => anyhow::bail!("pass either --out <dir> or --preset <name>"),
    };
    let report_path = dir.join("report.json");
    if !report_path.exists() {
        anyhow::bail!("{} does not contain report.json", dir.display());
    }
    let report = ExtinctionReport::load(&report_path)?;
    let summary = verify_dir(&dir)?;
    println!("verify: {}", dir.display());
    println!("claim: {}", report.claim);
    for (key, ok) in &report.verdicts {
        println!("  [{}] recorded {key}", if *ok { "pass" } else { "FAIL" });
    }
    if summary.failures.is_empty() {
        println!("  [pass] ledger consistent with report");
    }
    for failure in &summary.failures {
        println!("  [FAIL] {failure}");
    }
    println!("overall: {}", if summary.pass { "PASS" } else { "FAIL" });
    Ok(exit_for(summary.pass))
}

fn set_param(cfg: &mut RunConfig, key: &str, value: f64) -> anyhow::Result<()> {
    match key {
        "model.m" => cfg.model.m = value,
        "model.im_a" => cfg.model.im_a = value,
        "model.re_a" => cfg.model.re_a = value,
        "run.dt" => cfg.run.dt = value,
        "run.t_end" => cfg.run.t_end = value,
        "run.seed" => cfg.run.seed = value as u64,
        "source.amplitude" => cfg.source.amplitude = value,
        "source.t0" => cfg.source.t0 = value,
        "initial.amplitude" => cfg.initial.amplitude = value,
        "analysis.amplitude_scale" => cfg.analysis.amplitude_scale = value,
        "analysis.safety_factor" => cfg.analysis.safety_factor = value,
        other => anyhow::bail!("unknown sweep parameter '{other}'"),
    }
    Ok(())
}

fn cmd_sweep(
    source: ConfigSource,
    overrides: Overrides,
    param: &str,
    values: &str,
    out: &Path,
) -> anyhow::Result<ExitCode> {
    let (mut base, name) = source.load()?;
    overrides.apply(&mut base);
    let grid: Vec<f64> = values
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| anyhow::anyhow!("bad --values entry: {e}"))?;
    // validate the key up front so typos fail before hours of runs
    set_param(&mut base.clone(), param, grid.first().copied().unwrap_or(0.0))?;

    std::fs::create_dir_all(out)?;
    let mut summary = String::from(
        "index,param,value,status,t_num,t_lower,t_upper,mass_final,residual_max\n",
    );
    let mut all_ok = true;
    for (i, &value) in grid.iter().enumerate() {
        let mut cfg = base.clone();
        set_param(&mut cfg, param, value)?;
        let dir = out.join(format!("point_{i:03}"));
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v}"));
        let row = match execute(&cfg, &dir) {
            Ok(outcome) => {
                let r = &outcome.report;
                let status = if outcome.pass { "ok" } else { "verdict-fail" };
                if !outcome.pass {
                    all_ok = false;
                }
                format!(
                    "{i},{param},{value},{status},{},{},{},{},{}\n",
                    opt(r.t_num),
                    opt(r.t_lower),
                    opt(r.t_upper),
                    opt(r.measured.get("mass_final").copied()),
                    opt(r.measured.get("residual_max").copied()),
                )
            }
            Err(e) => {
                all_ok = false;
                eprintln!("point {i} ({param} = {value}) failed: {e}");
                format!("{i},{param},{value},error,,,,,\n")
            }
        };
        summary.push_str(&row);
        println!("point {i}: {param} = {value} -> {}", row.split(',').nth(3).unwrap_or("?"));
    }
    let summary_path = out.join("summary.csv");
    std::fs::write(&summary_path, summary)?;
    println!("sweep: {name}, {} points, summary in {}", grid.len(), summary_path.display());
    Ok(exit_for(all_ok))
}

#[allow(clippy::too_many_arguments)]
fn cmd_odi_table(
    alpha: f64,
    delta_list: &str,
    y0: f64,
    t0: f64,
    t_end: f64,
    samples: usize,
    oracle: bool,
    out: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let deltas: Vec<f64> = delta_list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| anyhow::anyhow!("bad --delta entry: {e}"))?;
    if deltas.is_empty() {
        anyhow::bail!("--delta names at least one exponent");
    }
    if t_end.is_nan() || t0.is_nan() || t_end <= t0 || samples < 2 {
        anyhow::bail!("need t_end > t0 and at least two samples");
    }

    let mut text = String::new();
    for &delta in &deltas {
        let p = OdiParams::new(alpha, delta, t0, y0)?;
        let env = OdiEnvelope::new(p);
        text.push_str(&format!("# alpha = {alpha}, delta = {delta}, y0 = {y0}, t0 = {t0}\n"));
        text.push_str(&format!("# regime = {:?}\n", env.regime));
        if let Some(t_star) = env.extinction_time {
            text.push_str(&format!("# extinction_time = {t_star}\n"));
        }
        if env.regime == OdiRegime::Sub {
            text.push_str(&format!("# ystar = {}\n", ystar(alpha, delta)?));
            // the forced comparison constant needs a positive cutoff
            if t0 > 0.0 {
                text.push_str(&format!("# xstar = {}\n", xstar(alpha, delta, t0)?));
            }
        }
        let trace = if oracle {
            Some(odi_oracle(&p, None::<&fn(f64) -> f64>, t_end)?)
        } else {
            None
        };
        text.push_str(if oracle {
            "delta,t,envelope,oracle\n"
        } else {
            "delta,t,envelope\n"
        });
        for k in 0..samples {
            let t = t0 + (t_end - t0) * k as f64 / (samples - 1) as f64;
            let value = envelope_eval(&env, t)?;
            if let Some(trace) = &trace {
                // linear interpolation on the much finer oracle grid
                let fi = (t - t0) / (t_end - t0) * (trace.times.len() - 1) as f64;
                let i0 = (fi.floor() as usize).min(trace.times.len() - 2);
                let w = fi - i0 as f64;
                let o = trace.values[i0] * (1.0 - w) + trace.values[i0 + 1] * w;
                text.push_str(&format!("{delta},{t},{value},{o}\n"));
            } else {
                text.push_str(&format!("{delta},{t},{value}\n"));
            }
        }
        text.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse::<T>().map_err(|e| anyhow::anyhow!("bad {what} entry: {e}")))
        .collect()
}

fn cmd_gn_estimate(
    lengths: &str,
    points: &str,
    m: f64,
    ell: u32,
    budget: usize,
    seed: u64,
    safety_factor: f64,
) -> anyhow::Result<ExitCode> {
    let lengths: Vec<f64> = parse_list(lengths, "--lengths")?;
    let points: Vec<usize> = parse_list(points, "--points")?;
    let domain = BoxDomain::new(&lengths, &points)?;
    let est = estimate_gn_constant(&domain, m, ell, budget, seed, safety_factor)?;
    println!(
        "{{\n  \"c_raw\": {},\n  \"c_safe\": {},\n  \"evaluations\": {},\n  \"best_family\": \"{}\"\n}}",
        est.c_raw, est.c_safe, est.evaluations, est.best_family
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_design_source(
    source: ConfigSource,
    t0: Option<f64>,
    seed: Option<u64>,
    safety_factor: Option<f64>,
    out: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let (mut cfg, _) = source.load()?;
    if let Some(t0) = t0 {
        cfg.source.t0 = t0;
    }
    if let Some(seed) = seed {
        cfg.run.seed = seed;
    }
    if let Some(s) = safety_factor {
        cfg.analysis.safety_factor = s;
    }
    let built = cfg.build()?;
    let damping = built
        .params
        .damping
        .ok_or_else(|| Error::invalid("source design needs a damping term"))?;
    let domain = &built.params.domain;
    let gn = estimate_gn_constant(
        domain,
        cfg.model.m,
        1,
        cfg.analysis.gn_budget,
        cfg.run.seed,
        cfg.analysis.safety_factor,
    )?;
    let profile = quench_core::source::Profile::SineMode { modes: cfg.source.modes.clone() };
    let (_, design) = design_critical_source(&built.u0, &damping, cfg.source.t0, gn.c_safe, profile)?;
    let json = serde_json::to_string_pretty(&design)? + "\n";
    match out {
        Some(path) => std::fs::write(path, json)?,
        None => print!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}
