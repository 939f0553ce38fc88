//! Post-processing of trajectories: mass-balance residuals, closed-form
//! lower and upper bounds for the extinction time, a randomized search for
//! the interpolation constant entering the upper bound, the designer for
//! critically decaying sources that force extinction exactly at a cutoff,
//! and decay-envelope verdicts for the regimes without finite-time
//! extinction.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{
    gn_ratio, inverse_sine_transform, norm_h1, BoxDomain, ComplexField, SpectralField,
};
use crate::integrator::LedgerRow;
use crate::nonlinearity::DampingCoefficient;
use crate::odi::{delta_exponent, epsilon_star, xstar};
use crate::source::{Profile, SourceSpec};

// ---------------------------------------------------------------------------
// mass-balance residual
// ---------------------------------------------------------------------------

/// Central-difference residual of the dissipation identity
/// `(1/2) d/dt mass + Im(a) lmp1 - pairing = 0`, one value per interior
/// ledger row.
#[derive(Debug, Clone, Serialize)]
pub struct MassResidualSeries {
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl MassResidualSeries {
    pub fn max_abs(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    /// Largest absolute residual over samples with `t_lo <= t <= t_hi`.
    pub fn max_abs_in(&self, t_lo: f64, t_hi: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.residuals)
            .filter(|(t, _)| **t >= t_lo && **t <= t_hi)
            .fold(0.0, |a, (_, r)| a.max(r.abs()))
    }
}

/// Evaluates the residual series from a ledger. Needs at least three rows.
pub fn mass_residual(rows: &[LedgerRow], im_a: f64) -> Result<MassResidualSeries> {
    if rows.len() < 3 {
        return Err(Error::invalid(format!(
            "residual needs at least 3 ledger rows, got {}",
            rows.len()
        )));
    }
    let mut times = Vec::with_capacity(rows.len() - 2);
    let mut residuals = Vec::with_capacity(rows.len() - 2);
    for w in rows.windows(3) {
        let (prev, mid, next) = (&w[0], &w[1], &w[2]);
        let dmdt = (next.mass - prev.mass) / (next.t - prev.t);
        times.push(mid.t);
        residuals.push(0.5 * dmdt + im_a * mid.lmp1 - mid.pairing);
    }
    Ok(MassResidualSeries { times, residuals })
}

/// Richardson-style order estimate from one observable at dt, dt/2, dt/4.
pub fn richardson_order(coarse: f64, mid: f64, fine: f64) -> Option<f64> {
    let e1 = (coarse - mid).abs();
    let e2 = (mid - fine).abs();
    if e2 == 0.0 || !e1.is_finite() || !e2.is_finite() {
        return None;
    }
    Some((e1 / e2).log2())
}

// ---------------------------------------------------------------------------
// extinction-time bounds
// ---------------------------------------------------------------------------

/// Lower bound for the extinction time,
/// `t0 + ||u(t0)|| ^ (1-m) / ((1-m) Im(a) |Omega|^((1-m)/2))`.
/// Takes the L2 norm (not its square) at the reference time.
pub fn extinction_lower_bound(
    l2_norm_at_t0: f64,
    t0: f64,
    m: f64,
    im_a: f64,
    volume: f64,
) -> Result<f64> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::invalid(format!(
            "lower bound needs 0 < m < 1, got {m}"
        )));
    }
    if !(im_a > 0.0 && volume > 0.0 && l2_norm_at_t0 >= 0.0 && t0 >= 0.0) {
        return Err(Error::invalid("lower bound needs Im(a) > 0, |Omega| > 0, norm >= 0"));
    }
    let om = 1.0 - m;
    Ok(t0 + l2_norm_at_t0.powf(om) / (om * im_a * volume.powf(0.5 * om)))
}

/// Upper bound for the extinction time from the differential inequality with
/// exponent `delta(n, m, ell)`:
/// `t0 + 2l C K^(N(1-m)/(2l)) ||u(t0)||^((1-m)(2l-N)/(2l)) / (Im(a)(1-m)(2l-N))`,
/// where `K` bounds the H^ell norm on `[t0, inf)`. Takes the L2 norm at the
/// reference time. Requires `2l > N` and `m < 1`.
#[allow(clippy::too_many_arguments)]
pub fn extinction_upper_bound(
    l2_norm_at_t0: f64,
    t0: f64,
    m: f64,
    im_a: f64,
    c_gn: f64,
    sup_hl: f64,
    n: u32,
    ell: u32,
) -> Result<f64> {
    let tl = 2.0 * ell as f64;
    let nf = n as f64;
    if tl <= nf {
        return Err(Error::invalid(format!(
            "upper bound needs 2 ell > N, got ell = {ell}, N = {n}"
        )));
    }
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::invalid(format!("upper bound needs 0 < m < 1, got {m}")));
    }
    if !(im_a > 0.0 && c_gn > 0.0 && sup_hl > 0.0 && l2_norm_at_t0 >= 0.0 && t0 >= 0.0) {
        return Err(Error::invalid(
            "upper bound needs Im(a), C, K positive and norm, t0 nonnegative",
        ));
    }
    let om = 1.0 - m;
    let coeff = tl * c_gn * sup_hl.powf(nf * om / tl) / (im_a * om * (tl - nf));
    Ok(t0 + coeff * l2_norm_at_t0.powf(om * (tl - nf) / tl))
}

// ---------------------------------------------------------------------------
// interpolation-constant search
// ---------------------------------------------------------------------------

/// Result of the randomized search for the interpolation constant.
#[derive(Debug, Clone, Serialize)]
pub struct GnEstimate {
    /// Largest ratio found by the search.
    pub c_raw: f64,
    /// `c_raw` times the safety factor; use this in certified bounds.
    pub c_safe: f64,
    pub evaluations: usize,
    pub best_family: String,
}

fn flat_mode_index(domain: &BoxDomain, modes: &[usize]) -> usize {
    let mut idx = 0;
    for (d, &k) in modes.iter().enumerate() {
        idx = idx * domain.points()[d] + (k - 1);
    }
    idx
}

fn mode_field(domain: &BoxDomain, modes: &[usize]) -> ComplexField {
    let mut coeffs = SpectralField::zeros(domain);
    coeffs.coeffs_mut()[flat_mode_index(domain, modes)] = Complex64::new(1.0, 0.0);
    inverse_sine_transform(&coeffs)
}

fn random_decay_field(
    domain: &BoxDomain,
    eigenvalues: &[f64],
    s: f64,
    rng: &mut ChaCha8Rng,
) -> ComplexField {
    let mut coeffs = SpectralField::zeros(domain);
    for (z, lam) in coeffs.coeffs_mut().iter_mut().zip(eigenvalues) {
        let w = (1.0 + lam).powf(-s);
        *z = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * w;
    }
    inverse_sine_transform(&coeffs)
}

/// Searches for the largest ratio
/// `||v||_{m+1}^{m+1} / (||v||^e1 ||v||_{H^ell}^e2)` over sine modes,
/// Gaussian bumps, random spectrally decaying fields, and a hill climb from
/// the best candidate. Deterministic for a fixed seed. The returned safe
/// value multiplies the supremum estimate by `safety_factor` to absorb the
/// finite search budget.
pub fn estimate_gn_constant(
    domain: &BoxDomain,
    m: f64,
    ell: u32,
    budget: usize,
    seed: u64,
    safety_factor: f64,
) -> Result<GnEstimate> {
    if !(m > 0.0 && m <= 1.0) {
        return Err(Error::invalid(format!("m must lie in (0, 1], got {m}")));
    }
    if budget == 0 {
        return Err(Error::invalid("search budget must be positive"));
    }
    if safety_factor < 1.0 || safety_factor.is_nan() {
        return Err(Error::invalid(format!(
            "safety factor must be at least 1, got {safety_factor}"
        )));
    }
    // the ratio is identically one in the linear case
    if m == 1.0 {
        return Ok(GnEstimate {
            c_raw: 1.0,
            c_safe: safety_factor,
            evaluations: 0,
            best_family: "exact".into(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eigenvalues = domain.eigenvalues();
    let mut best = 0.0f64;
    let mut best_field: Option<ComplexField> = None;
    let mut best_family = String::new();
    let mut evals = 0usize;

    let consider = |v: ComplexField,
                        family: &str,
                        evals: &mut usize,
                        best: &mut f64,
                        best_field: &mut Option<ComplexField>,
                        best_family: &mut String|
     -> Result<()> {
        *evals += 1;
        let r = gn_ratio(&v, m, ell)?;
        if r > *best {
            *best = r;
            *best_field = Some(v);
            *best_family = family.to_string();
        }
        Ok(())
    };

    // low sine modes, exhaustive up to a small per-axis cap
    let cap = match domain.dims() {
        1 => 12usize,
        2 => 6,
        _ => 4,
    };
    let caps: Vec<usize> = domain.points().iter().map(|&p| p.min(cap)).collect();
    let mut modes = vec![1usize; domain.dims()];
    'outer: loop {
        if evals >= budget {
            break;
        }
        consider(
            mode_field(domain, &modes),
            "sine_mode",
            &mut evals,
            &mut best,
            &mut best_field,
            &mut best_family,
        )?;
        let mut d = domain.dims();
        loop {
            if d == 0 {
                break 'outer;
            }
            d -= 1;
            modes[d] += 1;
            if modes[d] <= caps[d] {
                break;
            }
            modes[d] = 1;
        }
    }

    // gaussian bumps at random interior centers
    while evals < (2 * budget) / 5 {
        let lengths = domain.lengths().to_vec();
        let center: Vec<f64> = lengths.iter().map(|&l| l * rng.gen_range(0.25..0.75)).collect();
        let min_l = lengths.iter().cloned().fold(f64::INFINITY, f64::min);
        let width = min_l * rng.gen_range(0.05..0.3);
        let v = ComplexField::from_fn(domain, |x| {
            let r2: f64 = x.iter().zip(&center).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum();
            Complex64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
        });
        consider(v, "gaussian", &mut evals, &mut best, &mut best_field, &mut best_family)?;
    }

    // random fields with polynomial spectral decay
    let smoothness = [1.0, 1.5, 2.0, 3.0];
    let mut si = 0;
    while evals < (7 * budget) / 10 {
        let v = random_decay_field(domain, &eigenvalues, smoothness[si % 4], &mut rng);
        si += 1;
        consider(v, "random_smooth", &mut evals, &mut best, &mut best_field, &mut best_family)?;
    }

    // hill climb around the best candidate so far
    let mut sigma = 0.3;
    while evals < budget {
        let base = best_field.as_ref().expect("search found a candidate");
        let scale = base.norm_l2();
        let mut probe = base.clone();
        let noise = random_decay_field(domain, &eigenvalues, 2.0, &mut rng);
        let nn = noise.norm_l2();
        probe.axpy(Complex64::new(sigma * scale / nn, 0.0), &noise)?;
        evals += 1;
        let r = gn_ratio(&probe, m, ell)?;
        if r > best {
            best = r;
            best_field = Some(probe);
            best_family = "hill_climb".into();
        } else {
            sigma = (sigma * 0.85).max(0.01);
        }
    }

    Ok(GnEstimate {
        c_raw: best,
        c_safe: best * safety_factor,
        evaluations: evals,
        best_family,
    })
}

// ---------------------------------------------------------------------------
// critical source designer
// ---------------------------------------------------------------------------

/// Summary of a successful critical-source design.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalDesign {
    pub delta: f64,
    pub eps_star: f64,
    /// Largest H1 budget compatible with the smallness condition.
    pub k_max: f64,
    /// H1 budget actually used when sizing the amplitude (>= k_max).
    pub k_design: f64,
    pub amplitude: f64,
    pub exponent: f64,
    /// H1 norm of the initial state.
    pub h1_initial: f64,
    /// A-priori bound for the H1 norm along the run.
    pub h1_bound: f64,
    /// Mass threshold `x_star = k_max^2` from the comparison construction.
    pub xstar: f64,
    pub t0: f64,
}

/// Designs a critically decaying source `f(t, x) = amp (t0 - t)_+^p phi(x)`
/// that forces extinction exactly at `t0`, for one-dimensional boxes with
/// first-order regularity. Fails with a suggested rescaling of the initial
/// state when its H1 norm exceeds the admissible budget.
pub fn design_critical_source(
    u0: &ComplexField,
    damping: &DampingCoefficient,
    t0: f64,
    c_gn: f64,
    profile: Profile,
) -> Result<(SourceSpec, CriticalDesign)> {
    let domain = u0.domain();
    if domain.dims() != 1 {
        return Err(Error::invalid(
            "the critical source designer handles one-dimensional boxes only",
        ));
    }
    let m = damping.m();
    if m >= 1.0 {
        return Err(Error::invalid(
            "critical decay needs a sublinear exponent m < 1",
        ));
    }
    if !(t0 > 0.0 && t0.is_finite() && c_gn > 0.0) {
        return Err(Error::invalid("designer needs t0 > 0 and C > 0"));
    }
    let im_a = damping.a().im;
    let (n, ell) = (1u32, 1u32);
    let delta = delta_exponent(n, m, ell);
    let eps = epsilon_star(im_a, c_gn, delta)?;
    // the norm decays like (t0 - t)^p with p = (2 delta - 1) / (2 (1 - delta))
    let p = (2.0 * delta - 1.0) / (2.0 * (1.0 - delta));

    // largest H1 budget satisfying the smallness condition with equality
    let k_max = (im_a / c_gn * delta * (1.0 - delta) * t0).powf(1.0 / (1.0 - m));
    let a_h1 = norm_h1(u0);

    // forcing contributes at most B1 / k_design to the H1 norm
    let bound = profile.clone();
    let probe = SourceSpec::CriticalDecay { t0, amplitude: 1.0, exponent: p, profile: bound };
    let shape = probe.bind(domain)?;
    let h1_ratio = norm_h1(shape.spatial());
    let b1 = eps.sqrt() * h1_ratio * t0.powf(p + 1.0) / (p + 1.0);

    if a_h1 >= k_max {
        let rescale = 0.5 * k_max / a_h1;
        return Err(Error::DesignInfeasible {
            detail: format!(
                "initial H1 norm {a_h1:.6e} exceeds the admissible budget {k_max:.6e}"
            ),
            rescale,
        });
    }
    let k_design = k_max.max(b1 / (k_max - a_h1)) * 1.05;
    let amplitude = eps.sqrt() / k_design;
    let h1_bound = a_h1 + b1 / k_design;

    let spec = SourceSpec::CriticalDecay { t0, amplitude, exponent: p, profile };
    let design = CriticalDesign {
        delta,
        eps_star: eps,
        k_max,
        k_design,
        amplitude,
        exponent: p,
        h1_initial: a_h1,
        h1_bound,
        xstar: k_max * k_max,
        t0,
    };
    Ok((spec, design))
}

/// Coefficient of the comparison inequality realized by a design:
/// `alpha = Im(a) C^-1 K^(-N(1-m)/(2l))` evaluated at the certified budget.
pub fn comparison_alpha(im_a: f64, c_gn: f64, k: f64, n: u32, m: f64, ell: u32) -> f64 {
    let tl = 2.0 * ell as f64;
    im_a / c_gn * k.powf(-(n as f64) * (1.0 - m) / tl)
}

// ---------------------------------------------------------------------------
// decay envelopes without extinction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayRegime {
    /// Borderline case `N = 2 ell`: exponential mass decay.
    ExpNEq2l,
    /// Supercritical case `N > 2 ell`: algebraic mass decay.
    AlgebraicNGt2l,
}

/// Verdict of a decay-envelope check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayVerdict {
    pub pass: bool,
    /// Smallest envelope constant that makes the bound hold on the samples.
    pub c_min: f64,
}

/// Checks `mass(t) <= envelope_C(t - t0)` for all samples past `t0` and
/// reports the smallest admissible constant. In the exponential regime the
/// envelope is `mass(t0) exp(-2 Im(a) (t - t0) / C)`; in the algebraic
/// regime it is the supercritical comparison solution with
/// `alpha = Im(a) / C`.
pub fn decay_envelope_verdict(
    times: &[f64],
    mass: &[f64],
    t0: f64,
    im_a: f64,
    delta: f64,
    regime: DecayRegime,
    c: f64,
) -> Result<DecayVerdict> {
    if times.len() != mass.len() || times.is_empty() {
        return Err(Error::invalid("envelope check needs matching nonempty samples"));
    }
    if !(im_a > 0.0 && c > 0.0) {
        return Err(Error::invalid("envelope check needs Im(a) > 0 and C > 0"));
    }
    match regime {
        DecayRegime::ExpNEq2l => {
            if (delta - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "exponential regime requires delta = 1, got {delta}"
                )));
            }
        }
        DecayRegime::AlgebraicNGt2l => {
            if delta <= 1.0 {
                return Err(Error::invalid(format!(
                    "algebraic regime requires delta > 1, got {delta}"
                )));
            }
        }
    }
    let start = times
        .iter()
        .position(|&t| t >= t0 - 1e-12)
        .ok_or_else(|| Error::invalid("no samples at or after t0"))?;
    let y0 = mass[start];
    if y0 == 0.0 {
        let all_zero = mass[start..].iter().all(|&y| y == 0.0);
        return Ok(DecayVerdict { pass: all_zero, c_min: 0.0 });
    }
    let mut c_min = 0.0f64;
    for (&t, &y) in times[start..].iter().zip(&mass[start..]) {
        let s = t - t0;
        if s <= 0.0 || y <= 0.0 {
            continue;
        }
        if y >= y0 {
            c_min = f64::INFINITY;
            continue;
        }
        let needed = match regime {
            DecayRegime::ExpNEq2l => 2.0 * im_a * s / (y0 / y).ln(),
            DecayRegime::AlgebraicNGt2l => {
                let dm = delta - 1.0;
                2.0 * im_a * dm * y0.powf(dm) * s / ((y0 / y).powf(dm) - 1.0)
            }
        };
        c_min = c_min.max(needed);
    }
    Ok(DecayVerdict { pass: c >= c_min * (1.0 - 1e-12), c_min })
}

/// Verdict of the long-time vanishing check: once the source is off the
/// mass must never increase, and the final mass must sit below a fraction of
/// the peak.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LongtimeVerdict {
    pub nonincreasing_after_t0: bool,
    /// Largest relative mass uptick seen after `t0`.
    pub max_uptick: f64,
    pub peak_mass: f64,
    pub final_mass: f64,
    pub pass: bool,
}

pub fn longtime_vanishing_check(
    rows: &[LedgerRow],
    t0: f64,
    final_fraction: f64,
) -> Result<LongtimeVerdict> {
    if rows.is_empty() {
        return Err(Error::invalid("vanishing check needs ledger rows"));
    }
    if final_fraction <= 0.0 || final_fraction.is_nan() {
        return Err(Error::invalid("final fraction must be positive"));
    }
    let peak = rows.iter().fold(0.0f64, |a, r| a.max(r.mass));
    let final_mass = rows.last().unwrap().mass;
    let mut max_uptick = 0.0f64;
    let mut prev: Option<f64> = None;
    for r in rows.iter().filter(|r| r.t >= t0) {
        if let Some(p) = prev {
            if r.mass > p {
                let denom = p.max(peak * 1e-30);
                max_uptick = max_uptick.max((r.mass - p) / denom);
            }
        }
        prev = Some(r.mass);
    }
    let nonincreasing = max_uptick <= 1e-10;
    let pass = nonincreasing && final_mass <= final_fraction * peak;
    Ok(LongtimeVerdict {
        nonincreasing_after_t0: nonincreasing,
        max_uptick,
        peak_mass: peak,
        final_mass,
        pass,
    })
}

/// Largest admissible starting mass for a design, `x_star` of the realized
/// comparison inequality.
pub fn design_mass_threshold(
    im_a: f64,
    c_gn: f64,
    k: f64,
    n: u32,
    m: f64,
    ell: u32,
    t0: f64,
) -> Result<f64> {
    let alpha = comparison_alpha(im_a, c_gn, k, n, m, ell);
    xstar(alpha, delta_exponent(n, m, ell), t0)
}
