//! Acceptance gate: eleven numbered criteria covering the exact decay law,
//! the extinction-time sandwich in one and two dimensions, forced
//! extinction at a prescribed cutoff, balance-residual convergence, the
//! envelope toolkit, the scalar inequality suites, exponent algebra, the
//! discrete interpolation inequality, long-time vanishing, and bytewise
//! determinism. One pass/fail line prints per criterion; run with
//! `--nocapture` to see them as they complete.

use std::path::Path;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quench_core::analysis::mass_residual;
use quench_core::grid::{
    gradient_interpolation_check, laplacian_apply, norm_grad, BoxDomain, ComplexField,
};
use quench_core::nonlinearity::{
    accretivity_pairing, holder_bound_check, monotonicity_gap, DampingCoefficient,
};
use quench_core::odi::{default_ell, delta_exponent, delta_identities_check};
use quench_core::report::ExtinctionReport;
use quench_core::scenario::{execute, preset, read_ledger_csv, Outcome};

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn new() -> Self {
        Self { failures: Vec::new() }
    }

    fn check(&mut self, idx: usize, name: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("criterion {idx:2}: {tag} - {name} ({detail})");
        if !pass {
            self.failures.push(format!("criterion {idx} ({name}): {detail}"));
        }
    }
}

fn run_preset(name: &str, dir: &Path) -> (Outcome, Duration) {
    let cfg = preset(name).expect("preset exists");
    let start = Instant::now();
    let outcome = execute(&cfg, dir).unwrap_or_else(|e| panic!("preset {name} failed: {e}"));
    (outcome, start.elapsed())
}

fn measured(outcome: &Outcome, key: &str) -> f64 {
    *outcome
        .report
        .measured
        .get(key)
        .unwrap_or_else(|| panic!("report lacks measured key {key}"))
}

fn windowed_residual(dir: &Path, report: &ExtinctionReport, window_end: f64) -> f64 {
    let rows = read_ledger_csv(&dir.join("ledger.csv")).expect("ledger readable");
    let im_a = report.params["im_a"];
    mass_residual(&rows, im_a).expect("residual computable").max_abs_in(0.0, window_end)
}

#[test]
fn acceptance_gate() {
    let mut gate = Gate::new();
    let root = tempfile::tempdir().expect("temp dir");
    let dir = |name: &str| root.path().join(name);

    // criterion 1: the exact exponential decay law for linear damping
    let (mass_law, took1) = run_preset("mass-law-m1", &dir("mass-law"));
    let law_err = measured(&mass_law, "law_max_rel_err");
    gate.check(
        1,
        "exponential mass decay law",
        mass_law.pass && law_err <= 1e-4 && took1 < Duration::from_secs(10),
        format!("max rel err {law_err:.3e} <= 1e-4, {took1:.1?} < 10s"),
    );

    // criterion 2: extinction-time sandwich in one dimension
    let (sand1, took2) = run_preset("extinction-sandwich-1d", &dir("sand1"));
    let t_lower = sand1.report.t_lower.expect("lower bound recorded");
    let exact_lower = 2.0f64.powf(0.75);
    let lower_exact = (t_lower - exact_lower).abs() <= 1e-14;
    gate.check(
        2,
        "extinction sandwich, 1d",
        sand1.pass && lower_exact && took2 < Duration::from_secs(60),
        format!(
            "t_num {:?} in [{t_lower:.6}, {:.6}], lower exact to 1e-14, {took2:.1?} < 60s",
            sand1.report.t_num,
            sand1.report.t_upper.unwrap_or(f64::NAN),
        ),
    );

    // criterion 3: the same sandwich on the square
    let (sand2, took3) = run_preset("extinction-sandwich-2d", &dir("sand2"));
    gate.check(
        3,
        "extinction sandwich, 2d",
        sand2.pass && took3 < Duration::from_secs(300),
        format!(
            "t_num {:?} in [{:.6}, {:.6}], {took3:.1?} < 5min",
            sand2.report.t_num,
            sand2.report.t_lower.unwrap_or(f64::NAN),
            sand2.report.t_upper.unwrap_or(f64::NAN),
        ),
    );

    // criterion 4: forced extinction at the cutoff, with a negative control
    let (crit, _) = run_preset("critical-source", &dir("critical"));
    let ratio = measured(&crit, "norm_ratio_at_t0");
    let mut neg_cfg = preset("critical-source").expect("preset exists");
    neg_cfg.analysis.amplitude_scale = 1000.0;
    let neg = execute(&neg_cfg, &dir("critical-neg")).expect("negative control runs");
    let neg_broke = !neg.report.verdicts["cutoff_norm_small"]
        || !neg.report.verdicts["h1_budget_respected"];
    gate.check(
        4,
        "critical-source extinction at the cutoff",
        crit.pass && ratio <= 1e-8 && !neg.pass && neg_broke,
        format!(
            "norm ratio at cutoff {ratio:.3e} <= 1e-8, extinct through horizon; 1000x control breaks detection"
        ),
    );

    // criterion 5: balance residual small and at least halving under dt/2,
    // for every preset that produces a ledger
    let mut res_details = Vec::new();
    let mut res_ok = true;
    // the two presets with built-in halving studies on the full window
    let res1 = measured(&mass_law, "residual_max");
    let res1h = measured(&mass_law, "residual_max_half_dt");
    res_ok &= res1 <= 1e-4 && res1h <= 0.5 * res1;
    res_details.push(format!("mass-law {res1:.1e}/{res1h:.1e}"));
    for (name, outcome) in [("sandwich-1d", &sand1), ("sandwich-2d", &sand2)] {
        let r = measured(outcome, "residual_max_window");
        let rh = measured(outcome, "residual_max_window_half_dt");
        res_ok &= r <= 1e-2 && rh <= 0.5 * r;
        res_details.push(format!("{name} {r:.1e}/{rh:.1e}"));
    }
    // critical-source: windowed residual away from the extinction kink
    {
        let cfg = preset("critical-source").expect("preset exists");
        let t_num = crit.report.t_num.expect("extinction recorded");
        let window = t_num - 5.0 * cfg.run.dt;
        let r = windowed_residual(&dir("critical"), &crit.report, window);
        let mut half_cfg = cfg.clone();
        half_cfg.run.dt /= 2.0;
        let crit_half = execute(&half_cfg, &dir("critical-half")).expect("half-dt run");
        let rh = windowed_residual(&dir("critical-half"), &crit_half.report, window);
        res_ok &= r <= 1e-2 && rh <= 0.5 * r;
        res_details.push(format!("critical {r:.1e}/{rh:.1e}"));
    }
    // longtime: linear damping with a compactly supported source
    let (longtime, _) = run_preset("longtime-vanishing", &dir("longtime"));
    {
        let cfg = preset("longtime-vanishing").expect("preset exists");
        let r = measured(&longtime, "residual_max");
        let mut half_cfg = cfg.clone();
        half_cfg.run.dt /= 2.0;
        half_cfg.analysis.scenario = "plain".into();
        let long_half = execute(&half_cfg, &dir("longtime-half")).expect("half-dt run");
        let rh = measured(&long_half, "residual_max");
        res_ok &= r <= 1e-4 && rh <= 0.5 * r;
        res_details.push(format!("longtime {r:.1e}/{rh:.1e}"));
    }
    gate.check(5, "balance residual converges", res_ok, res_details.join(", "));

    // criterion 6: envelope toolkit against the independent integrator
    let (odi, _) = run_preset("odi-regimes", &dir("odi"));
    gate.check(
        6,
        "decay envelopes match the oracle",
        odi.pass,
        format!(
            "envelope err {:.1e} <= 1e-5, extinction err {:.1e} <= 1e-5, star err {:.1e} <= 1e-8",
            measured(&odi, "max_envelope_err"),
            measured(&odi, "max_extinction_time_err"),
            measured(&odi, "max_star_rel_err"),
        ),
    );

    // criterion 7: scalar inequality suites on random pairs and fields
    {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sample_disk = |rng: &mut ChaCha8Rng| -> Complex64 {
            let r = 1e3 * rng.gen::<f64>().sqrt();
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(r, th)
        };
        let mut violations = 0usize;
        let m_grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
        for &m in &m_grid {
            for _ in 0..100_000 {
                let z1 = sample_disk(&mut rng);
                let z2 = sample_disk(&mut rng);
                if !holder_bound_check(z1, z2, m) {
                    violations += 1;
                }
                let (re, im) = monotonicity_gap(z1, z2, m);
                let scale = re.abs().max(im.abs()).max(1e-300);
                if re < -1e-12 * scale
                    || 2.0 * m.sqrt() * im.abs() > (1.0 - m) * re + 1e-12 * scale
                {
                    violations += 1;
                }
            }
        }

        // pairing accretivity on random fields for admissible coefficients,
        // boundary equality included
        let domain = BoxDomain::new(&[std::f64::consts::PI], &[32]).expect("domain");
        let random_field = |rng: &mut ChaCha8Rng| {
            ComplexField::from_fn(&domain, |_| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
        };
        let mut coefficients = Vec::new();
        for k in 0..10 {
            let m = 0.1 + 0.08 * k as f64;
            let im = 0.5 + 0.15 * k as f64;
            let re_max = DampingCoefficient::max_admissible_re(im, m);
            let re = match k % 4 {
                0 => 0.0,
                1 => re_max,
                2 => -re_max,
                _ => 0.5 * re_max,
            };
            coefficients
                .push(DampingCoefficient::new(Complex64::new(re, im), m).expect("admissible"));
        }
        let mut min_pairing = f64::INFINITY;
        for _ in 0..1_000 {
            let u = random_field(&mut rng);
            let v = random_field(&mut rng);
            for c in &coefficients {
                let p = accretivity_pairing(&u, &v, c).expect("same grid");
                min_pairing = min_pairing.min(p);
            }
        }
        let pass = violations == 0 && min_pairing >= -1e-12;
        gate.check(
            7,
            "scalar inequality suites",
            pass,
            format!("0 of 1e6 pair checks violated ({violations}), min pairing {min_pairing:.3e} >= -1e-12"),
        );
    }

    // criterion 8: exponent algebra across the full grid
    {
        let mut range_ok = true;
        let mut identities = true;
        let mut count = 0usize;
        for n in 1..=3u32 {
            let ell = default_ell(n);
            for k in 1..=19 {
                let m = 0.05 * k as f64;
                let delta = delta_exponent(n, m, ell);
                range_ok &= delta > 0.5 && delta < 1.0;
                identities &= delta_identities_check(n, m, ell);
                count += 1;
            }
        }
        gate.check(
            8,
            "exponent identities and range",
            identities && range_ok,
            format!("identities hold, delta in (1/2, 1) at all {count} grid points"),
        );
    }

    // criterion 9: discrete gradient interpolation inequality
    {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let domains = [
            BoxDomain::new(&[std::f64::consts::PI], &[64]).expect("1d"),
            BoxDomain::new(&[std::f64::consts::PI, 2.0], &[16, 16]).expect("2d"),
            BoxDomain::new(&[1.0, 2.0, 3.0], &[8, 8, 8]).expect("3d"),
        ];
        let mut all_hold = true;
        for i in 0..10_000 {
            let domain = &domains[i % domains.len()];
            let field = ComplexField::from_fn(domain, |_| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            all_hold &= gradient_interpolation_check(&field);
        }
        // single modes attain equality
        let mut max_mode_gap = 0.0f64;
        for mode in 1..=4usize {
            let domain = &domains[0];
            let u = ComplexField::from_fn(domain, |x| {
                Complex64::new((mode as f64 * x[0]).sin(), 0.0)
            });
            let lhs = norm_grad(&u).powi(2);
            let rhs = u.norm_l2() * laplacian_apply(&u).norm_l2();
            max_mode_gap = max_mode_gap.max((lhs - rhs).abs() / rhs);
        }
        gate.check(
            9,
            "gradient interpolation inequality",
            all_hold && max_mode_gap <= 1e-12,
            format!("held on 1e4 random fields; single-mode equality gap {max_mode_gap:.2e}"),
        );
    }

    // criterion 10: long-time vanishing for both damping exponents
    gate.check(
        10,
        "long-time vanishing with compact forcing",
        longtime.pass,
        format!(
            "final/peak {:.3e} <= 1e-3, sublinear companion extinct at {:?}",
            measured(&longtime, "final_over_peak"),
            longtime.report.measured.get("t_num_sublinear").copied(),
        ),
    );

    // criterion 11: bytewise determinism across repeated runs
    {
        let (_, _) = run_preset("critical-source", &dir("det-a"));
        let (_, _) = run_preset("critical-source", &dir("det-b"));
        let la = std::fs::read(dir("det-a").join("ledger.csv")).expect("ledger a");
        let lb = std::fs::read(dir("det-b").join("ledger.csv")).expect("ledger b");
        let ra = ExtinctionReport::load(&dir("det-a").join("report.json")).expect("report a");
        let rb = ExtinctionReport::load(&dir("det-b").join("report.json")).expect("report b");
        gate.check(
            11,
            "determinism of repeated runs",
            la == lb && ra.content_equal(&rb),
            format!("ledgers byte-identical ({} bytes), reports equal modulo timestamp", la.len()),
        );
    }

    assert!(
        gate.failures.is_empty(),
        "acceptance failures:\n{}",
        gate.failures.join("\n")
    );
}
