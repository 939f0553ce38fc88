//! External forcing terms. A source is a separable product
//! `f(t, x) = c(t) phi(x)` with `phi` fixed and normalized in L2, so the
//! instantaneous L2 norm of the forcing is exactly `|c(t)|`. Supported time
//! profiles: identically zero, a smooth bump with compact support, a
//! power-law decay that switches off at a cutoff, and a tabulated curve.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{BoxDomain, ComplexField};

/// Spatial shape of a separable source.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// Product of sine modes, one 1-based index per axis.
    SineMode { modes: Vec<usize> },
    /// Gaussian bump `exp(-|x - center|^2 / (2 width^2))`. Keep the width
    /// small against the distance to the boundary, where the grid enforces
    /// homogeneous Dirichlet values.
    Gaussian { center: Vec<f64>, width: f64 },
}

/// Separable forcing specification.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Zero,
    /// `c(t) = amplitude * sin^2(pi t / t0)` for `0 <= t <= t0`, zero after.
    CompactSupport { t0: f64, amplitude: f64, profile: Profile },
    /// `c(t) = amplitude * (t0 - t)_+^exponent`, identically zero from `t0`.
    CriticalDecay { t0: f64, amplitude: f64, exponent: f64, profile: Profile },
    /// Piecewise-linear interpolation of `(times, values)`, zero outside the
    /// tabulated range.
    Table { times: Vec<f64>, values: Vec<f64>, profile: Profile },
}

impl SourceSpec {
    fn validate(&self) -> Result<()> {
        let check_t0 = |t0: f64| -> Result<()> {
            if t0.is_finite() && t0 > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("source cutoff must be positive, got {t0}")))
            }
        };
        match self {
            SourceSpec::Zero => Ok(()),
            SourceSpec::CompactSupport { t0, amplitude, .. } => {
                check_t0(*t0)?;
                if !amplitude.is_finite() {
                    return Err(Error::invalid("source amplitude must be finite"));
                }
                Ok(())
            }
            SourceSpec::CriticalDecay { t0, amplitude, exponent, .. } => {
                check_t0(*t0)?;
                if !amplitude.is_finite() {
                    return Err(Error::invalid("source amplitude must be finite"));
                }
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(Error::invalid(format!(
                        "decay exponent must be positive, got {exponent}"
                    )));
                }
                Ok(())
            }
            SourceSpec::Table { times, values, .. } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(Error::invalid("source table needs matching nonempty columns"));
                }
                if !times.windows(2).all(|w| w[1] > w[0]) {
                    return Err(Error::invalid("source table times must be strictly increasing"));
                }
                if times.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(Error::invalid("source table entries must be finite"));
                }
                Ok(())
            }
        }
    }

    fn profile(&self) -> Option<&Profile> {
        match self {
            SourceSpec::Zero => None,
            SourceSpec::CompactSupport { profile, .. }
            | SourceSpec::CriticalDecay { profile, .. }
            | SourceSpec::Table { profile, .. } => Some(profile),
        }
    }

    /// Scalar time profile `c(t)`.
    pub fn amplitude_at(&self, t: f64) -> f64 {
        match self {
            SourceSpec::Zero => 0.0,
            SourceSpec::CompactSupport { t0, amplitude, .. } => {
                if t <= 0.0 || t >= *t0 {
                    0.0
                } else {
                    let s = (std::f64::consts::PI * t / t0).sin();
                    amplitude * s * s
                }
            }
            SourceSpec::CriticalDecay { t0, amplitude, exponent, .. } => {
                let rem = (t0 - t).max(0.0);
                amplitude * rem.powf(*exponent)
            }
            SourceSpec::Table { times, values, .. } => {
                if t < times[0] || t > *times.last().unwrap() {
                    return 0.0;
                }
                let j = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
                    Ok(j) => return values[j],
                    Err(j) => j,
                };
                let (ta, tb) = (times[j - 1], times[j]);
                let w = (t - ta) / (tb - ta);
                values[j - 1] * (1.0 - w) + values[j] * w
            }
        }
    }

    /// A time after which the source is identically zero.
    pub fn support_end(&self) -> f64 {
        match self {
            SourceSpec::Zero => 0.0,
            SourceSpec::CompactSupport { t0, .. } => *t0,
            SourceSpec::CriticalDecay { t0, .. } => *t0,
            SourceSpec::Table { times, .. } => *times.last().unwrap(),
        }
    }

    /// True when `c` vanishes on `[t, inf)`.
    pub fn is_zero_after(&self, t: f64) -> bool {
        t >= self.support_end()
    }

    /// Evaluates the spatial shape on a grid and normalizes it in L2.
    pub fn bind(&self, domain: &BoxDomain) -> Result<BoundSource> {
        self.validate()?;
        let spatial = match self.profile() {
            None => ComplexField::zeros(domain),
            Some(Profile::SineMode { modes }) => {
                if modes.len() != domain.dims() {
                    return Err(Error::invalid(format!(
                        "profile has {} mode indices for a {}-dimensional box",
                        modes.len(),
                        domain.dims()
                    )));
                }
                if modes.contains(&0) {
                    return Err(Error::invalid("sine mode indices are 1-based"));
                }
                let lengths = domain.lengths().to_vec();
                let modes = modes.clone();
                let mut field = ComplexField::from_fn(domain, |x| {
                    let mut v = 1.0;
                    for (d, &xi) in x.iter().enumerate() {
                        v *= (modes[d] as f64 * std::f64::consts::PI * xi / lengths[d]).sin();
                    }
                    Complex64::new(v, 0.0)
                });
                normalize(&mut field)?;
                field
            }
            Some(Profile::Gaussian { center, width }) => {
                if center.len() != domain.dims() {
                    return Err(Error::invalid(format!(
                        "profile center has {} coordinates for a {}-dimensional box",
                        center.len(),
                        domain.dims()
                    )));
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::invalid(format!("width must be positive, got {width}")));
                }
                let center = center.clone();
                let width = *width;
                let mut field = ComplexField::from_fn(domain, |x| {
                    let r2: f64 = x
                        .iter()
                        .zip(&center)
                        .map(|(xi, ci)| (xi - ci) * (xi - ci))
                        .sum();
                    Complex64::new((-r2 / (2.0 * width * width)).exp(), 0.0)
                });
                normalize(&mut field)?;
                field
            }
        };
        Ok(BoundSource { spec: self.clone(), spatial })
    }
}

fn normalize(field: &mut ComplexField) -> Result<()> {
    let n = field.norm_l2();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::invalid("source profile has zero or non-finite norm"));
    }
    field.scale(Complex64::new(1.0 / n, 0.0));
    Ok(())
}

/// A source evaluated on a concrete grid. The spatial factor has unit L2
/// norm, so `amplitude_at(t)` is the L2 norm of `f(t, .)`.
#[derive(Debug, Clone)]
pub struct BoundSource {
    spec: SourceSpec,
    spatial: ComplexField,
}

impl BoundSource {
    pub fn spec(&self) -> &SourceSpec {
        &self.spec
    }

    pub fn spatial(&self) -> &ComplexField {
        &self.spatial
    }

    pub fn amplitude_at(&self, t: f64) -> f64 {
        self.spec.amplitude_at(t)
    }

    pub fn is_zero_after(&self, t: f64) -> bool {
        self.spec.is_zero_after(t)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.spec, SourceSpec::Zero)
    }

    /// Adds `coeff * c(t) * phi` to `target`.
    pub fn accumulate(&self, t: f64, coeff: Complex64, target: &mut ComplexField) -> Result<()> {
        if self.is_zero() {
            return Ok(());
        }
        let c = self.amplitude_at(t);
        if c == 0.0 {
            return Ok(());
        }
        target.axpy(coeff * c, &self.spatial)
    }
}
