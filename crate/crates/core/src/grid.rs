//! Tensor-product grids on open boxes (0,L1)x...x(0,LN), N in {1,2,3}, with
//! homogeneous Dirichlet data, sine-basis spectral transforms, the discrete
//! Laplacian, and the norm toolkit used by the analysis layer.
//!
//! Interior nodes are x_j = (j+1) h along each axis with h = L/(n+1); the
//! boundary values are identically zero and never stored. The sine basis
//! sin(k pi x / L), k = 1..n, diagonalizes the Laplacian, and the uniform
//! cell-volume quadrature is exact on products of represented modes, which
//! makes the discrete Parseval identity exact up to rounding.

use std::collections::HashMap;
use std::io::{BufRead, Read as IoRead, Write as IoWrite};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 8;
pub const MAX_DIMS: usize = 3;

// ---------------------------------------------------------------------------
// domain
// ---------------------------------------------------------------------------

/// Open box with per-axis lengths and interior point counts.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lengths: Vec<f64>,
    points: Vec<usize>,
}

impl BoxDomain {
    pub fn new(lengths: &[f64], points: &[usize]) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > MAX_DIMS {
            return Err(Error::invalid(format!(
                "domain must have 1 to {MAX_DIMS} axes, got {}",
                lengths.len()
            )));
        }
        if lengths.len() != points.len() {
            return Err(Error::invalid(format!(
                "lengths ({}) and points ({}) must agree",
                lengths.len(),
                points.len()
            )));
        }
        for &l in lengths {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::invalid(format!("axis length must be positive and finite, got {l}")));
            }
        }
        for &n in points {
            if n < MIN_POINTS {
                return Err(Error::invalid(format!(
                    "need at least {MIN_POINTS} interior points per axis, got {n}"
                )));
            }
        }
        Ok(Self {
            lengths: lengths.to_vec(),
            points: points.to_vec(),
        })
    }

    pub fn dims(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn total_points(&self) -> usize {
        self.points.iter().product()
    }

    /// |Omega|, the measure of the box.
    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Quadrature weight of one interior cell, prod of L_d/(n_d+1).
    pub fn cell_volume(&self) -> f64 {
        self.lengths
            .iter()
            .zip(&self.points)
            .map(|(&l, &n)| l / (n + 1) as f64)
            .product()
    }

    /// Parseval weight prod of L_d/2 tying coefficient sums to integrals.
    pub fn spectral_weight(&self) -> f64 {
        self.lengths.iter().map(|&l| l / 2.0).product()
    }

    pub fn grid_step(&self, axis: usize) -> f64 {
        self.lengths[axis] / (self.points[axis] + 1) as f64
    }

    /// Coordinates of the interior nodes along one axis.
    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        let h = self.grid_step(axis);
        (1..=self.points[axis]).map(|j| j as f64 * h).collect()
    }

    /// Dirichlet Laplacian eigenvalues (k pi / L)^2 along one axis, k = 1..n.
    pub fn axis_eigenvalues(&self, axis: usize) -> Vec<f64> {
        let l = self.lengths[axis];
        (1..=self.points[axis])
            .map(|k| {
                let w = k as f64 * std::f64::consts::PI / l;
                w * w
            })
            .collect()
    }

    /// Full eigenvalue table in row-major mode order: lambda_k = sum over
    /// axes of (k_d pi / L_d)^2 with k_d = 1..n_d.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = (0..self.dims()).map(|d| self.axis_eigenvalues(d)).collect();
        let mut out = Vec::with_capacity(self.total_points());
        match self.dims() {
            1 => out.extend_from_slice(&per_axis[0]),
            2 => {
                for &a in &per_axis[0] {
                    for &b in &per_axis[1] {
                        out.push(a + b);
                    }
                }
            }
            _ => {
                for &a in &per_axis[0] {
                    for &b in &per_axis[1] {
                        for &c in &per_axis[2] {
                            out.push(a + b + c);
                        }
                    }
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// fields
// ---------------------------------------------------------------------------

/// Complex state on the interior nodes, row-major over axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    domain: BoxDomain,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(domain: &BoxDomain) -> Self {
        Self {
            domain: domain.clone(),
            data: vec![Complex64::new(0.0, 0.0); domain.total_points()],
        }
    }

    pub fn from_data(domain: &BoxDomain, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != domain.total_points() {
            return Err(Error::ShapeMismatch(format!(
                "field data length {} does not match grid size {}",
                data.len(),
                domain.total_points()
            )));
        }
        Ok(Self {
            domain: domain.clone(),
            data,
        })
    }

    /// Samples a function of the node coordinates.
    pub fn from_fn<F>(domain: &BoxDomain, mut f: F) -> Self
    where
        F: FnMut(&[f64]) -> Complex64,
    {
        let coords: Vec<Vec<f64>> = (0..domain.dims()).map(|d| domain.axis_coords(d)).collect();
        let mut data = Vec::with_capacity(domain.total_points());
        match domain.dims() {
            1 => {
                for &x in &coords[0] {
                    data.push(f(&[x]));
                }
            }
            2 => {
                for &x in &coords[0] {
                    for &y in &coords[1] {
                        data.push(f(&[x, y]));
                    }
                }
            }
            _ => {
                for &x in &coords[0] {
                    for &y in &coords[1] {
                        for &z in &coords[2] {
                            data.push(f(&[x, y, z]));
                        }
                    }
                }
            }
        }
        Self {
            domain: domain.clone(),
            data,
        }
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn scale(&mut self, c: Complex64) {
        for z in &mut self.data {
            *z *= c;
        }
    }

    /// self += alpha * other.
    pub fn axpy(&mut self, alpha: Complex64, other: &ComplexField) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::ShapeMismatch("axpy on mismatched grids".into()));
        }
        for (z, &w) in self.data.iter_mut().zip(&other.data) {
            *z += alpha * w;
        }
        Ok(())
    }

    /// Quadrature inner product integral(u conj(v)) dx.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        if self.domain != other.domain {
            return Err(Error::ShapeMismatch("inner product on mismatched grids".into()));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (&z, &w) in self.data.iter().zip(&other.data) {
            acc += z * w.conj();
        }
        Ok(acc * self.domain.cell_volume())
    }

    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self.data.iter().map(|z| z.norm_sqr()).sum();
        (s * self.domain.cell_volume()).sqrt()
    }
}

/// Sine coefficients of a field, row-major over modes (k_d = 1..n_d).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    domain: BoxDomain,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(domain: &BoxDomain) -> Self {
        Self {
            domain: domain.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); domain.total_points()],
        }
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
}

// ---------------------------------------------------------------------------
// sine transform (DST-I via FFT of the odd extension)
// ---------------------------------------------------------------------------

type PlanMap = HashMap<usize, Arc<dyn Fft<f64>>>;

static PLAN_CACHE: Lazy<Mutex<PlanMap>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn plan_for(len: usize) -> Arc<dyn Fft<f64>> {
    let mut cache = PLAN_CACHE.lock().expect("fft plan cache poisoned");
    cache
        .entry(len)
        .or_insert_with(|| FftPlanner::new().plan_fft_forward(len))
        .clone()
}

/// Unnormalized DST-I along `axis`: line[k-1] <- sum_j line[j-1] sin(jk pi/(n+1)),
/// then multiplied by `scale`. Applying it twice multiplies by (n+1)/2.
fn dst_axis(data: &mut [Complex64], shape: &[usize], axis: usize, scale: f64) {
    let n = shape[axis];
    let ext_len = 2 * (n + 1);
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let plan = plan_for(ext_len);
    let mut ext = vec![Complex64::new(0.0, 0.0); ext_len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    let half_i = Complex64::new(0.0, 0.5);
    for o in 0..outer {
        for i in 0..stride {
            let base = o * n * stride + i;
            ext[0] = Complex64::new(0.0, 0.0);
            ext[n + 1] = Complex64::new(0.0, 0.0);
            for j in 1..=n {
                let v = data[base + (j - 1) * stride];
                ext[j] = v;
                ext[ext_len - j] = -v;
            }
            plan.process_with_scratch(&mut ext, &mut scratch);
            for k in 1..=n {
                data[base + (k - 1) * stride] = half_i * ext[k] * scale;
            }
        }
    }
}

/// Forward transform onto the sine basis: u(x) = sum_k c_k prod sin(k_d pi x_d / L_d).
pub fn sine_transform(u: &ComplexField) -> SpectralField {
    let shape = u.domain.points().to_vec();
    let mut data = u.data.clone();
    for axis in 0..shape.len() {
        let scale = 2.0 / (shape[axis] + 1) as f64;
        dst_axis(&mut data, &shape, axis, scale);
    }
    SpectralField {
        domain: u.domain.clone(),
        coeffs: data,
    }
}

/// Inverse of `sine_transform`, exact up to rounding.
pub fn inverse_sine_transform(c: &SpectralField) -> ComplexField {
    let shape = c.domain.points().to_vec();
    let mut data = c.coeffs.clone();
    for axis in 0..shape.len() {
        dst_axis(&mut data, &shape, axis, 1.0);
    }
    ComplexField {
        domain: c.domain.clone(),
        data,
    }
}

// ---------------------------------------------------------------------------
// operators and norms
// ---------------------------------------------------------------------------

/// Spectral Dirichlet Laplacian: coefficient k is multiplied by -lambda_k.
pub fn laplacian_apply(u: &ComplexField) -> ComplexField {
    let mut c = sine_transform(u);
    for (z, lam) in c.coeffs.iter_mut().zip(u.domain.eigenvalues()) {
        *z *= -lam;
    }
    inverse_sine_transform(&c)
}

/// L^p norm by uniform cell-volume quadrature over the interior nodes.
pub fn norm_lp(u: &ComplexField, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("norm_lp needs p >= 1, got {p}")));
    }
    let sum: f64 = if p == 2.0 {
        u.data.iter().map(|z| z.norm_sqr()).sum()
    } else {
        u.data.iter().map(|z| z.norm().powf(p)).sum()
    };
    Ok((sum * u.domain.cell_volume()).powf(1.0 / p))
}

/// Squared spectral functionals of a coefficient vector: L2, gradient,
/// H^1, H^2 and Laplacian, all with the Parseval weight applied.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpectralNorms {
    pub l2_sq: f64,
    pub grad_sq: f64,
    pub h1_sq: f64,
    pub h2_sq: f64,
    pub lap_sq: f64,
}

pub fn spectral_norms_with(c: &SpectralField, eigenvalues: &[f64]) -> SpectralNorms {
    let mut n = SpectralNorms::default();
    for (z, &lam) in c.coeffs.iter().zip(eigenvalues) {
        let a = z.norm_sqr();
        n.l2_sq += a;
        n.grad_sq += lam * a;
        n.h1_sq += (1.0 + lam) * a;
        n.h2_sq += (1.0 + lam) * (1.0 + lam) * a;
        n.lap_sq += lam * lam * a;
    }
    let w = c.domain.spectral_weight();
    n.l2_sq *= w;
    n.grad_sq *= w;
    n.h1_sq *= w;
    n.h2_sq *= w;
    n.lap_sq *= w;
    n
}

pub fn spectral_norms(c: &SpectralField) -> SpectralNorms {
    spectral_norms_with(c, &c.domain.eigenvalues())
}

/// H^1 norm: (1 + lambda) multipliers, i.e. (L2^2 + grad^2)^(1/2).
pub fn norm_h1(u: &ComplexField) -> f64 {
    spectral_norms(&sine_transform(u)).h1_sq.sqrt()
}

/// H^2 norm: (1 + lambda)^2 multipliers.
pub fn norm_h2(u: &ComplexField) -> f64 {
    spectral_norms(&sine_transform(u)).h2_sq.sqrt()
}

/// H^ell norm for ell in {1, 2}.
pub fn norm_hl(u: &ComplexField, ell: u32) -> Result<f64> {
    match ell {
        1 => Ok(norm_h1(u)),
        2 => Ok(norm_h2(u)),
        _ => Err(Error::invalid(format!("norm_hl supports ell in {{1, 2}}, got {ell}"))),
    }
}

/// Gradient seminorm from the spectral side.
pub fn norm_grad(u: &ComplexField) -> f64 {
    spectral_norms(&sine_transform(u)).grad_sq.sqrt()
}

/// Interpolation ratio ||v||_{L2}^e1 / (||v||_{L^{m+1}}^{m+1} ||v||_{H^ell}^e2)
/// with e1 = ((2l+N)+m(2l-N))/(2l) and e2 = N(1-m)/(2l). Scale invariant;
/// identically 1 at m = 1.
pub fn gn_ratio(v: &ComplexField, m: f64, ell: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::invalid(format!("gn_ratio needs m in [0, 1], got {m}")));
    }
    if m == 1.0 {
        // exponent algebra collapses: e1 = 2, e2 = 0, denominator = L2^2
        return Ok(1.0);
    }
    let n = v.domain.dims() as f64;
    let tl = 2.0 * ell as f64;
    let l2 = v.norm_l2();
    if l2 == 0.0 {
        return Err(Error::invalid("gn_ratio of the zero field"));
    }
    let e1 = ((tl + n) + m * (tl - n)) / tl;
    let e2 = n * (1.0 - m) / tl;
    let lmp1 = norm_lp(v, m + 1.0)?;
    let hl = norm_hl(v, ell)?;
    Ok(l2.powf(e1) / (lmp1.powf(m + 1.0) * hl.powf(e2)))
}

/// Checks ||grad u||^2 <= ||u|| ||Lap u|| (Cauchy-Schwarz in coefficient
/// space, hence exact here up to rounding).
pub fn gradient_interpolation_check(u: &ComplexField) -> bool {
    let n = spectral_norms(&sine_transform(u));
    let lhs = n.grad_sq;
    let rhs = (n.l2_sq * n.lap_sq).sqrt();
    lhs <= rhs + 1e-12 * rhs.max(1.0)
}

// ---------------------------------------------------------------------------
// snapshot serialization
// ---------------------------------------------------------------------------

impl ComplexField {
    /// CSV snapshot: three header lines (dims, lengths, points), a column
    /// header, then one re,im row per node in row-major order.
    pub fn write_csv<W: IoWrite>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "dims,{}", self.domain.dims())?;
        let lens: Vec<String> = self.domain.lengths.iter().map(|l| format!("{l:?}")).collect();
        writeln!(w, "lengths,{}", lens.join(","))?;
        let pts: Vec<String> = self.domain.points.iter().map(|p| p.to_string()).collect();
        writeln!(w, "points,{}", pts.join(","))?;
        writeln!(w, "re,im")?;
        for z in &self.data {
            writeln!(w, "{:?},{:?}", z.re, z.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next_line = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()
                .map_err(|e| Error::invalid(format!("snapshot read failed: {e}")))?
                .ok_or_else(|| Error::invalid(format!("snapshot truncated before {what}")))
        };
        let dims_line = next_line("dims")?;
        let dims: usize = dims_line
            .strip_prefix("dims,")
            .ok_or_else(|| Error::invalid("snapshot missing dims header"))?
            .trim()
            .parse()
            .map_err(|e| Error::invalid(format!("bad dims: {e}")))?;
        let lens_line = next_line("lengths")?;
        let lengths = parse_csv_floats(
            lens_line
                .strip_prefix("lengths,")
                .ok_or_else(|| Error::invalid("snapshot missing lengths header"))?,
        )?;
        let pts_line = next_line("points")?;
        let points: Vec<usize> = pts_line
            .strip_prefix("points,")
            .ok_or_else(|| Error::invalid("snapshot missing points header"))?
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::invalid(format!("bad points: {e}")))?;
        if lengths.len() != dims || points.len() != dims {
            return Err(Error::invalid("snapshot header dimensions disagree"));
        }
        let domain = BoxDomain::new(&lengths, &points)?;
        let header = next_line("column header")?;
        if header.trim() != "re,im" {
            return Err(Error::invalid("snapshot missing re,im column header"));
        }
        let mut data = Vec::with_capacity(domain.total_points());
        for line in lines {
            let line = line.map_err(|e| Error::invalid(format!("snapshot read failed: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let vals = parse_csv_floats(&line)?;
            if vals.len() != 2 {
                return Err(Error::invalid(format!("snapshot row must be re,im: {line}")));
            }
            data.push(Complex64::new(vals[0], vals[1]));
        }
        ComplexField::from_data(&domain, data)
    }

    /// Raw little-endian snapshot: u64 dims, f64 lengths, u64 points, then
    /// f64 re/im pairs in row-major order.
    pub fn write_raw<W: IoWrite>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.domain.dims() as u64).to_le_bytes())?;
        for &l in &self.domain.lengths {
            w.write_all(&l.to_le_bytes())?;
        }
        for &p in &self.domain.points {
            w.write_all(&(p as u64).to_le_bytes())?;
        }
        for z in &self.data {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_raw<R: IoRead>(mut r: R) -> Result<Self> {
        let mut u64buf = [0u8; 8];
        let mut read_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut u64buf)
                .map_err(|e| Error::invalid(format!("snapshot read failed: {e}")))?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let dims = read_u64(&mut r)? as usize;
        if dims == 0 || dims > MAX_DIMS {
            return Err(Error::invalid(format!("snapshot dims out of range: {dims}")));
        }
        let mut f64buf = [0u8; 8];
        let mut read_f64 = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut f64buf)
                .map_err(|e| Error::invalid(format!("snapshot read failed: {e}")))?;
            Ok(f64::from_le_bytes(f64buf))
        };
        let mut lengths = Vec::with_capacity(dims);
        for _ in 0..dims {
            lengths.push(read_f64(&mut r)?);
        }
        let mut u64buf2 = [0u8; 8];
        let mut points = Vec::with_capacity(dims);
        for _ in 0..dims {
            r.read_exact(&mut u64buf2)
                .map_err(|e| Error::invalid(format!("snapshot read failed: {e}")))?;
            points.push(u64::from_le_bytes(u64buf2) as usize);
        }
        let domain = BoxDomain::new(&lengths, &points)?;
        let total = domain.total_points();
        let mut data = Vec::with_capacity(total);
        for _ in 0..total {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            data.push(Complex64::new(re, im));
        }
        ComplexField::from_data(&domain, data)
    }
}

fn parse_csv_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::invalid(format!("bad float list '{s}': {e}")))
}
