//! Scalar damping kernel `g(z) = |z|^(m-1) z`, its regularization, the
//! pointwise inequalities that make `-i a g` accretive, and the exact flow of
//! the damping sub-equation used by the split-step integrator.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::ComplexField;

/// Smallest value fed to `ln` when a damping step lands exactly on the
/// extinction boundary; keeps the phase increment finite for that step.
const LOG_FLOOR: f64 = 1e-300;

/// Damping coefficient `a` together with the damping exponent `m`.
///
/// Construction enforces `0 < m <= 1`, `Im(a) > 0`, and the dominance
/// condition `2 sqrt(m) Im(a) >= (1 - m) |Re(a)|`, which is what makes the
/// pairing `Re(-i a (g(u) - g(v)) conj(u - v))` nonnegative pointwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingCoefficient {
    a: Complex64,
    m: f64,
}

impl DampingCoefficient {
    pub fn new(a: Complex64, m: f64) -> Result<Self> {
        if !(a.re.is_finite() && a.im.is_finite() && m.is_finite()) {
            return Err(Error::invalid("damping coefficient must be finite"));
        }
        if !(m > 0.0 && m <= 1.0) {
            return Err(Error::invalid(format!(
                "damping exponent m must lie in (0, 1], got {m}"
            )));
        }
        if a.im <= 0.0 {
            return Err(Error::Inadmissible(format!(
                "Im(a) must be positive, got {}",
                a.im
            )));
        }
        let lhs = 2.0 * m.sqrt() * a.im;
        let rhs = (1.0 - m) * a.re.abs();
        if lhs < rhs {
            return Err(Error::Inadmissible(format!(
                "2 sqrt(m) Im(a) = {lhs:.6e} < (1 - m) |Re(a)| = {rhs:.6e}"
            )));
        }
        Ok(Self { a, m })
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Largest `|Re(a)|` admissible for the given `Im(a)` and `m`; handy for
    /// constructing boundary cases in tests.
    pub fn max_admissible_re(im: f64, m: f64) -> f64 {
        if m >= 1.0 {
            return f64::INFINITY;
        }
        let lhs = 2.0 * m.sqrt() * im;
        let mut r = lhs / (1.0 - m);
        // the division can round up; step down to the largest value the
        // admissibility check accepts
        while (1.0 - m) * r > lhs && r > 0.0 {
            r = f64::from_bits(r.to_bits() - 1);
        }
        r
    }
}

/// Regularization parameter, restricted to (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationEps(f64);

impl RegularizationEps {
    pub fn new(eps: f64) -> Result<Self> {
        if eps > 0.0 && eps < 1.0 {
            Ok(Self(eps))
        } else {
            Err(Error::invalid(format!(
                "regularization eps must lie in (0, 1), got {eps}"
            )))
        }
    }

    pub fn get(&self) -> f64 {
        self.0
    }
}

/// The damping kernel `g(z) = |z|^(m-1) z`, with `g(0) = 0`. Unchecked hot
/// path shared by the checked operation and the integrator.
pub(crate) fn g(z: Complex64, m: f64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z * r.powf(m - 1.0)
    }
}

/// Checked evaluation of `g(z) = |z|^(m-1) z`, `g(0) = 0`.
pub fn g_apply(z: Complex64, m: f64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::invalid("g_apply: non-finite input"));
    }
    if !(m > 0.0 && m <= 1.0) {
        return Err(Error::invalid(format!("g_apply: m out of (0, 1]: {m}")));
    }
    Ok(g(z, m))
}

/// Regularized kernel `g_eps(z) = (|z|^2 + eps)^(-(1-m)/2) z`.
///
/// Globally Lipschitz and satisfies `|g_eps(z)| <= |g(z)|` pointwise, with
/// convergence to `g` as eps decreases to 0.
pub fn g_eps_apply(z: Complex64, m: f64, eps: RegularizationEps) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::invalid("g_eps_apply: non-finite input"));
    }
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::invalid(format!(
            "g_eps_apply: m out of (0, 1): {m}"
        )));
    }
    Ok(z * (z.norm_sqr() + eps.get()).powf(-(1.0 - m) / 2.0))
}

/// Real and imaginary parts of `(g(z1) - g(z2)) conj(z1 - z2)`.
///
/// The real part is nonnegative and dominates the imaginary part through
/// `2 sqrt(m) |im| <= (1 - m) re`.
pub fn monotonicity_gap(z1: Complex64, z2: Complex64, m: f64) -> (f64, f64) {
    let p = (g(z1, m) - g(z2, m)) * (z1 - z2).conj();
    (p.re, p.im)
}

/// Checks the Holder bound `|g(z1) - g(z2)| <= 3 |z1 - z2|^m` up to a
/// rounding-level tolerance. True for every pair of finite inputs.
pub fn holder_bound_check(z1: Complex64, z2: Complex64, m: f64) -> bool {
    let lhs = (g(z1, m) - g(z2, m)).norm();
    let rhs = 3.0 * (z1 - z2).norm().powf(m);
    lhs <= rhs + (1e-12 * rhs).max(1e-300)
}

/// Discrete pairing `Re(-i a integral (g(u) - g(v)) conj(u - v) dx)`.
///
/// Nonnegative (up to rounding) for every admissible coefficient; this is the
/// accretivity that makes the damping flow contractive in L2.
pub fn accretivity_pairing(
    u: &ComplexField,
    v: &ComplexField,
    c: &DampingCoefficient,
) -> Result<f64> {
    if u.domain() != v.domain() {
        return Err(Error::ShapeMismatch(
            "accretivity pairing needs fields on the same grid".into(),
        ));
    }
    let m = c.m();
    let minus_ia = Complex64::new(0.0, -1.0) * c.a();
    let mut acc = 0.0;
    for (&zu, &zv) in u.data().iter().zip(v.data()) {
        let p = (g(zu, m) - g(zv, m)) * (zu - zv).conj();
        acc += (minus_ia * p).re;
    }
    Ok(acc * u.domain().cell_volume())
}

/// Exact flow of the damping sub-equation `i z' + a |z|^(m-1) z = 0` over a
/// time `dt >= 0`.
///
/// In polar form `z = rho exp(i theta)` the modulus and phase decouple:
/// `rho' = -Im(a) rho^m` and `theta' = Re(a) rho^(m-1)`. For `m < 1` the
/// modulus hits zero at `rho0^(1-m) / ((1-m) Im(a))` and stays there; the
/// returned value is exactly zero at and past that time.
pub fn pointwise_damping_flow(z0: Complex64, c: &DampingCoefficient, dt: f64) -> Complex64 {
    debug_assert!(dt >= 0.0);
    let rho0 = z0.norm();
    if rho0 == 0.0 || dt == 0.0 {
        return if rho0 == 0.0 { Complex64::new(0.0, 0.0) } else { z0 };
    }
    let (re_a, im_a) = (c.a().re, c.a().im);
    let m = c.m();
    if m == 1.0 {
        let scale = (-im_a * dt).exp();
        let rot = Complex64::from_polar(1.0, re_a * dt);
        return z0 * scale * rot;
    }
    let om = 1.0 - m;
    let s0 = rho0.powf(om);
    let s = s0 - om * im_a * dt;
    if s <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let rho = s.powf(1.0 / om);
    let dtheta = if re_a == 0.0 {
        0.0
    } else {
        -(re_a / (om * im_a)) * (s / s0).max(LOG_FLOOR).ln()
    };
    Complex64::from_polar(rho, z0.arg() + dtheta)
}

/// Time at which the exact damping flow annihilates a value of modulus
/// `rho0` (`None` for `m = 1`, which only decays exponentially).
pub fn damping_extinction_time(rho0: f64, c: &DampingCoefficient) -> Option<f64> {
    if c.m() >= 1.0 {
        return None;
    }
    let om = 1.0 - c.m();
    Some(rho0.powf(om) / (om * c.a().im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxDomain;
    use proptest::prelude::*;

    fn tol(scale: f64) -> f64 {
        (1e-12 * scale.max(1.0)).max(1e-300)
    }

    fn admissible(re_frac: f64, im: f64, m: f64) -> DampingCoefficient {
        // re_frac in [-1, 1] sweeps Re(a) across the admissible band,
        // including both boundary points at +-1
        let re = re_frac * DampingCoefficient::max_admissible_re(im, m).min(1e6);
        DampingCoefficient::new(Complex64::new(re, im), m).unwrap()
    }

    #[test]
    fn constructor_validates() {
        assert!(DampingCoefficient::new(Complex64::new(0.0, 1.0), 0.5).is_ok());
        assert!(DampingCoefficient::new(Complex64::new(0.0, 1.0), 1.0).is_ok());
        // Im(a) <= 0 rejected even for m = 1
        assert!(DampingCoefficient::new(Complex64::new(0.0, 0.0), 1.0).is_err());
        assert!(DampingCoefficient::new(Complex64::new(1.0, -1.0), 0.5).is_err());
        // m outside (0, 1]
        assert!(DampingCoefficient::new(Complex64::new(0.0, 1.0), 0.0).is_err());
        assert!(DampingCoefficient::new(Complex64::new(0.0, 1.0), 1.5).is_err());
        // dominance violated: m = 1/2 needs |Re(a)| <= 2 sqrt(2) Im(a)
        let lim = DampingCoefficient::max_admissible_re(1.0, 0.5);
        assert!(DampingCoefficient::new(Complex64::new(lim * 1.001, 1.0), 0.5).is_err());
        assert!(DampingCoefficient::new(Complex64::new(lim * 0.999, 1.0), 0.5).is_ok());
        assert!(DampingCoefficient::new(Complex64::new(-lim * 0.999, 1.0), 0.5).is_ok());
    }

    #[test]
    fn eps_validates() {
        assert!(RegularizationEps::new(0.5).is_ok());
        assert!(RegularizationEps::new(0.0).is_err());
        assert!(RegularizationEps::new(1.0).is_err());
        assert!(RegularizationEps::new(-0.1).is_err());
    }

    #[test]
    fn kernel_basics() {
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(g_apply(zero, 0.5).unwrap(), zero);
        assert_eq!(
            g_apply(Complex64::new(1.0, 0.0), 0.5).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        // |4|^(m-1) * 4 = 2 at m = 1/2
        let g4 = g_apply(Complex64::new(4.0, 0.0), 0.5).unwrap();
        assert!((g4 - Complex64::new(2.0, 0.0)).norm() < 1e-15);

        let z = Complex64::new(0.3, -0.4);
        for &m in &[0.1, 0.5, 0.9, 1.0] {
            let gm = g_apply(z, m).unwrap();
            assert!((gm.norm() - z.norm().powf(m)).abs() < tol(1.0));
            // g preserves the phase of z
            assert!((gm.arg() - z.arg()).abs() < 1e-12);
        }
        // m = 1 is the identity
        assert_eq!(g_apply(z, 1.0).unwrap(), z);
        // tiny magnitudes stay finite
        assert!(g(Complex64::new(1e-300, 0.0), 0.5).norm().is_finite());
        // rejected inputs
        assert!(g_apply(Complex64::new(f64::NAN, 0.0), 0.5).is_err());
        assert!(g_apply(Complex64::new(f64::INFINITY, 0.0), 0.5).is_err());
        assert!(g_apply(z, 0.0).is_err());
    }

    #[test]
    fn regularized_kernel_bounds() {
        let one = Complex64::new(1.0, 0.0);
        // (1 + eps)^(-1/4) with eps near 1: spot check against 2^(-1/4)
        let e = RegularizationEps::new(0.999999).unwrap();
        let ge = g_eps_apply(one, 0.5, e).unwrap();
        assert!((ge.norm() - 2f64.powf(-0.25)).abs() < 1e-6);

        let z = Complex64::new(0.7, 0.2);
        for &m in &[0.25, 0.5, 0.75] {
            let mut prev = 0.0;
            for &eps in &[1e-2, 1e-6, 1e-12] {
                let ge = g_eps_apply(z, m, RegularizationEps::new(eps).unwrap()).unwrap();
                assert!(ge.norm() <= g(z, m).norm() + tol(1.0));
                // shrinking eps increases |g_eps| toward |g|
                assert!(ge.norm() >= prev);
                prev = ge.norm();
            }
            // eps -> 0 limit recovers g
            let ge = g_eps_apply(z, m, RegularizationEps::new(1e-15).unwrap()).unwrap();
            assert!((ge - g(z, m)).norm() < 1e-12);
        }
        assert!(g_eps_apply(z, 1.0, RegularizationEps::new(0.5).unwrap()).is_err());
        let nan = Complex64::new(f64::NAN, 0.0);
        assert!(g_eps_apply(nan, 0.5, RegularizationEps::new(0.5).unwrap()).is_err());
    }

    #[test]
    fn scalar_power_holder_step() {
        // |t^m - s^m| <= |t - s|^m on a deterministic grid of pairs
        for &m in &[0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
            for i in 0..60 {
                for j in 0..60 {
                    let t = 0.07 * i as f64;
                    let s = 0.11 * j as f64;
                    let lhs = (t.powf(m) - s.powf(m)).abs();
                    let rhs = (t - s).abs().powf(m);
                    assert!(lhs <= rhs + tol(rhs), "m={m} t={t} s={s}");
                }
            }
        }
    }

    #[test]
    fn flow_spot_values() {
        // a = i, m = 1/2, z = 1: modulus obeys (1 - dt/2)^2, no rotation
        let c = DampingCoefficient::new(Complex64::new(0.0, 1.0), 0.5).unwrap();
        let z = Complex64::new(1.0, 0.0);
        let w = pointwise_damping_flow(z, &c, 1.0);
        assert!((w.re - 0.25).abs() < 1e-15 && w.im == 0.0);
        // extinction exactly at dt = 2 and beyond
        assert_eq!(pointwise_damping_flow(z, &c, 2.0), Complex64::new(0.0, 0.0));
        assert_eq!(pointwise_damping_flow(z, &c, 3.0), Complex64::new(0.0, 0.0));
        assert_eq!(damping_extinction_time(1.0, &c), Some(2.0));

        // a = 1 + i, m = 1/2, dt = 1/2: rho = 0.5625, dtheta = -2 ln(3/4)
        let c = DampingCoefficient::new(Complex64::new(1.0, 1.0), 0.5).unwrap();
        let w = pointwise_damping_flow(z, &c, 0.5);
        assert!((w.re - 0.471_934_244_316_679_2).abs() < 1e-15);
        assert!((w.im - 0.306_078_942_498_900_1).abs() < 1e-15);

        // m = 1: pure exponential decay with linear phase
        let c = DampingCoefficient::new(Complex64::new(2.0, 1.0), 1.0).unwrap();
        let w = pointwise_damping_flow(z, &c, 0.7);
        assert!((w.norm() - (-0.7f64).exp()).abs() < 1e-15);
        assert!((w.arg() - 1.4).abs() < 1e-12);
        // m = 1, a = i, dt = 1 on z = 1: e^{-1}
        let c = DampingCoefficient::new(Complex64::new(0.0, 1.0), 1.0).unwrap();
        let w = pointwise_damping_flow(z, &c, 1.0);
        assert!((w.re - (-1f64).exp()).abs() < 1e-15 && w.im.abs() < 1e-15);
    }

    #[test]
    fn flow_semigroup_property() {
        let cases = [
            (Complex64::new(0.0, 1.0), 0.5),
            (Complex64::new(1.0, 1.0), 0.5),
            (Complex64::new(-0.5, 0.8), 0.7),
            (Complex64::new(0.3, 0.6), 1.0),
        ];
        for &(a, m) in &cases {
            let c = DampingCoefficient::new(a, m).unwrap();
            // time pairs chosen so some compositions straddle extinction
            for &(s, t) in &[(0.1, 0.2), (0.5, 0.7), (0.05, 1.3), (1.0, 3.0)] {
                for &z in &[
                    Complex64::new(1.0, 0.0),
                    Complex64::new(-0.4, 0.9),
                    Complex64::new(0.01, -0.02),
                ] {
                    let two = pointwise_damping_flow(pointwise_damping_flow(z, &c, s), &c, t);
                    let one = pointwise_damping_flow(z, &c, s + t);
                    assert!(
                        (two - one).norm() <= 1e-12 * one.norm().max(1e-12),
                        "a={a} m={m} s={s} t={t} z={z}: {two} vs {one}"
                    );
                }
            }
        }
    }

    /// Classical RK4 on z' = i a g(z); the independent oracle for the
    /// closed-form flow.
    fn flow_rk4(z0: Complex64, c: &DampingCoefficient, dt: f64, steps: usize) -> Complex64 {
        let rhs = |z: Complex64| Complex64::new(0.0, 1.0) * c.a() * g(z, c.m());
        let h = dt / steps as f64;
        let mut z = z0;
        for _ in 0..steps {
            let k1 = rhs(z);
            let k2 = rhs(z + 0.5 * h * k1);
            let k3 = rhs(z + 0.5 * h * k2);
            let k4 = rhs(z + h * k3);
            z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        z
    }

    #[test]
    fn flow_matches_rk4_before_extinction() {
        let cases = [
            (Complex64::new(0.0, 1.0), 0.5),
            (Complex64::new(1.0, 1.0), 0.5),
            (Complex64::new(-2.0, 1.5), 0.8),
            (Complex64::new(0.5, 2.0), 0.3),
            (Complex64::new(1.0, 2.0), 1.0),
        ];
        for &(a, m) in &cases {
            let c = DampingCoefficient::new(a, m).unwrap();
            for &z0 in &[Complex64::new(1.0, 0.0), Complex64::new(-0.6, 0.8)] {
                // stay at half the extinction time so g remains smooth
                let horizon = damping_extinction_time(z0.norm(), &c)
                    .map(|t| 0.5 * t)
                    .unwrap_or(1.0);
                let exact = pointwise_damping_flow(z0, &c, horizon);
                let oracle = flow_rk4(z0, &c, horizon, 4000);
                assert!(
                    (exact - oracle).norm() < 1e-8,
                    "a={a} m={m} z0={z0}: exact {exact} oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn accretivity_on_boundary_coefficient() {
        let domain = BoxDomain::new(&[std::f64::consts::PI], &[32]).unwrap();
        let u = ComplexField::from_fn(&domain, |x| {
            Complex64::new((x[0]).sin(), 0.3 * (2.0 * x[0]).sin())
        });
        let v = ComplexField::from_fn(&domain, |x| {
            Complex64::new(0.2 * (3.0 * x[0]).sin(), -(x[0]).sin())
        });
        let zero = ComplexField::zeros(&domain);
        for &m in &[0.3, 0.5, 0.9] {
            for &frac in &[-1.0, -0.5, 0.0, 0.5, 1.0] {
                let c = admissible(frac, 1.0, m);
                let p = accretivity_pairing(&u, &v, &c).unwrap();
                assert!(p >= -tol(p.abs()), "m={m} frac={frac}: pairing {p}");
                let p0 = accretivity_pairing(&u, &zero, &c).unwrap();
                assert!(p0 >= -tol(p0.abs()));
                assert!(accretivity_pairing(&u, &u, &c).unwrap().abs() <= tol(1.0));
            }
        }
        // mismatched grids are rejected
        let other = BoxDomain::new(&[1.0], &[16]).unwrap();
        let w = ComplexField::zeros(&other);
        assert!(accretivity_pairing(&u, &w, &admissible(0.0, 1.0, 0.5)).is_err());
    }

    proptest! {
        #[test]
        fn monotonicity_dominance(
            re1 in -3.0f64..3.0, im1 in -3.0f64..3.0,
            re2 in -3.0f64..3.0, im2 in -3.0f64..3.0,
            m in 0.05f64..1.0,
        ) {
            let z1 = Complex64::new(re1, im1);
            let z2 = Complex64::new(re2, im2);
            let (re, im) = monotonicity_gap(z1, z2, m);
            let scale = (z1.norm() + z2.norm()).powf(m) * (z1 - z2).norm();
            prop_assert!(re >= -tol(scale));
            prop_assert!(2.0 * m.sqrt() * im.abs() <= (1.0 - m) * re + tol(scale));
        }

        #[test]
        fn holder_constant_three(
            re1 in -5.0f64..5.0, im1 in -5.0f64..5.0,
            re2 in -5.0f64..5.0, im2 in -5.0f64..5.0,
            m in 0.05f64..=1.0,
        ) {
            let z1 = Complex64::new(re1, im1);
            let z2 = Complex64::new(re2, im2);
            prop_assert!(holder_bound_check(z1, z2, m));
        }

        #[test]
        fn flow_modulus_never_negative(
            re in -1.0f64..1.0, im in -1.0f64..1.0,
            m in 0.1f64..0.95,
            dt in 0.0f64..10.0,
        ) {
            let c = DampingCoefficient::new(Complex64::new(0.0, 1.0), m).unwrap();
            let z = Complex64::new(re, im);
            let w = pointwise_damping_flow(z, &c, dt);
            prop_assert!(w.norm() <= z.norm() + 1e-15);
            if let Some(text) = damping_extinction_time(z.norm(), &c) {
                if dt >= text {
                    prop_assert_eq!(w, Complex64::new(0.0, 0.0));
                }
            }
        }
    }
}
