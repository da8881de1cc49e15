//! Spatial grid, Fourier transforms, Sobolev norms, differentiation and
//! mollification.
//!
//! Conventions used throughout the crate:
//!
//! * The line is truncated to a periodic window `[x0, x0 + L)` sampled at
//!   `n` equispaced points; all integrals are periodic rectangle sums
//!   (spectrally accurate for smooth integrands that are flat at the seam).
//! * The Fourier transform is unitary: `f^(xi) = (2 pi)^(-1/2) Int e^(-i x xi) f(x) dx`.
//!   Discretely `f^(xi_k) = dx (2 pi)^(-1/2) F_k e^(-i xi_k x0)` where `F` is the
//!   unnormalized forward DFT, `xi_k = 2 pi m_k / L` and `m_k` the signed mode index.
//! * Weighted Sobolev norms: `|f|_{H^s_tau}^2 = Int (tau^2 + xi^2)^s |f^|^2 dxi`,
//!   discretized with `dxi = 2 pi / L`. At `s = 0` this reproduces the L2 norm
//!   exactly (discrete Parseval).

use crate::error::{GpError, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::{Arc, Mutex, OnceLock};

pub type C64 = Complex64;

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_6;

/// Uniform periodic grid on `[x0, x0 + length)` with `n` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    length: f64,
    n: usize,
    x0: f64,
}

/// Construct a grid, validating the power-of-two sample count.
pub fn make_grid(length: f64, n: usize, x0: f64) -> Result<Grid> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(GpError::Grid(format!("length must be positive, got {length}")));
    }
    if n < 8 || !n.is_power_of_two() {
        return Err(GpError::Grid(format!(
            "sample count must be a power of two >= 8, got {n}"
        )));
    }
    if !x0.is_finite() {
        return Err(GpError::Grid(format!("x0 must be finite, got {x0}")));
    }
    Ok(Grid { length, n, x0 })
}

impl Grid {
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Sample position of index `j`.
    pub fn x(&self, j: usize) -> f64 {
        self.x0 + self.dx() * j as f64
    }

    /// All sample positions.
    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Signed mode index of DFT bin `k` (Nyquist reported as +n/2).
    pub fn mode(&self, k: usize) -> i64 {
        if k <= self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Wavenumber of DFT bin `k`: `2 pi m_k / length`.
    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.mode(k) as f64 / self.length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.wavenumber(k)).collect()
    }

    /// Wavenumber spacing `dxi = 2 pi / length`.
    pub fn dxi(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    /// Grid with the same spacing covering `[x0, x0 + 2 length)`.
    pub fn doubled(&self) -> Grid {
        Grid {
            length: 2.0 * self.length,
            n: 2 * self.n,
            x0: self.x0,
        }
    }
}

#[allow(clippy::type_complexity)]
fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Complex samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub grid: Grid,
    pub values: Vec<C64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(GpError::Grid(format!(
                "value count {} does not match grid n {}",
                values.len(),
                grid.n()
            )));
        }
        Ok(SampledFunction { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> C64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.x(j))).collect();
        SampledFunction {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_real_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    pub fn constant(grid: &Grid, c: C64) -> Self {
        SampledFunction {
            grid: grid.clone(),
            values: vec![c; grid.n()],
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, C64::new(0.0, 0.0))
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    /// Unnormalized forward DFT.
    pub fn raw_spectrum(&self) -> Vec<C64> {
        let mut buf = self.values.clone();
        let (fwd, _) = plans(buf.len());
        fwd.process(&mut buf);
        buf
    }

    /// In-place unnormalized forward DFT on a bare buffer (stepping loops).
    pub(crate) fn fft_forward_inplace(buf: &mut [C64]) {
        let (fwd, _) = plans(buf.len());
        fwd.process(buf);
    }

    /// In-place inverse DFT with the 1/n normalization.
    pub(crate) fn fft_inverse_inplace(buf: &mut [C64]) {
        let (_, inv) = plans(buf.len());
        inv.process(buf);
        let s = 1.0 / buf.len() as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }

    /// Reconstruct samples from an unnormalized spectrum (inverse DFT / n).
    pub fn from_raw_spectrum(grid: &Grid, mut spectrum: Vec<C64>) -> Result<Self> {
        if spectrum.len() != grid.n() {
            return Err(GpError::Grid(format!(
                "spectrum length {} does not match grid n {}",
                spectrum.len(),
                grid.n()
            )));
        }
        let (_, inv) = plans(spectrum.len());
        inv.process(&mut spectrum);
        let scale = 1.0 / grid.n() as f64;
        for v in spectrum.iter_mut() {
            *v *= scale;
        }
        Ok(SampledFunction {
            grid: grid.clone(),
            values: spectrum,
        })
    }

    /// Samples of the continuum Fourier transform at the grid wavenumbers,
    /// unitary convention (includes the `e^(-i xi x0)` offset phase).
    pub fn hat(&self) -> Vec<C64> {
        let spec = self.raw_spectrum();
        let scale = self.grid.dx() / SQRT_2PI;
        (0..self.n())
            .map(|k| {
                let xi = self.grid.wavenumber(k);
                let phase = C64::from_polar(1.0, -xi * self.grid.x0());
                spec[k] * scale * phase
            })
            .collect()
    }

    /// Apply a wavenumber-dependent multiplier in Fourier space.
    pub fn fourier_multiplier(&self, m: impl Fn(f64) -> C64) -> Self {
        let mut spec = self.raw_spectrum();
        for (k, v) in spec.iter_mut().enumerate() {
            *v *= m(self.grid.wavenumber(k));
        }
        Self::from_raw_spectrum(&self.grid, spec).expect("same grid")
    }

    /// Periodic quadrature of the samples (rectangle rule, `dx * sum`).
    pub fn integral(&self) -> C64 {
        let s: C64 = self.values.iter().sum();
        s * self.grid.dx()
    }

    /// L2 norm by quadrature.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.dx()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Cumulative trapezoid integral from `x0`; entry `j` approximates
    /// the integral over `[x0, x_j]`.
    pub fn cumulative_integral(&self) -> Vec<C64> {
        let dx = self.grid.dx();
        let mut out = Vec::with_capacity(self.n());
        let mut acc = C64::new(0.0, 0.0);
        out.push(acc);
        for j in 1..self.n() {
            acc += (self.values[j - 1] + self.values[j]) * (0.5 * dx);
            out.push(acc);
        }
        out
    }

    /// Zero-padded spectral interpolation onto a grid refined by `factor`
    /// (a power of two). Exact for band-limited data.
    pub fn upsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !factor.is_power_of_two() {
            return Err(GpError::Grid(format!(
                "upsample factor must be a power of two, got {factor}"
            )));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let n = self.n();
        let nn = n * factor;
        let spec = self.raw_spectrum();
        let mut padded = vec![C64::new(0.0, 0.0); nn];
        for k in 0..n {
            let m = self.grid.mode(k);
            if m.unsigned_abs() as usize == n / 2 {
                // Split the Nyquist coefficient symmetrically.
                let half = spec[k] * 0.5;
                padded[n / 2] += half;
                padded[nn - n / 2] += half;
            } else {
                let idx = if m >= 0 { m as usize } else { nn - (-m) as usize };
                padded[idx] = spec[k];
            }
        }
        let fine = make_grid(self.grid.length(), nn, self.grid.x0())?;
        let mut out = Self::from_raw_spectrum(&fine, padded)?;
        // from_raw_spectrum divides by nn; the source spectrum is scaled for n.
        let fix = factor as f64;
        for v in out.values.iter_mut() {
            *v *= fix;
        }
        Ok(out)
    }

    /// Fourier-multiplier derivative `(i xi)^order`. The Nyquist mode is
    /// zeroed for odd orders (its sign is ambiguous on the real axis).
    pub fn spectral_derivative(&self, order: u32) -> Self {
        let n = self.n();
        let mut spec = self.raw_spectrum();
        for (k, v) in spec.iter_mut().enumerate() {
            if order % 2 == 1 && 2 * k == n {
                *v = C64::new(0.0, 0.0);
            } else {
                let ik = C64::new(0.0, self.grid.wavenumber(k));
                *v *= ik.powu(order);
            }
        }
        Self::from_raw_spectrum(&self.grid, spec).expect("same grid")
    }

    /// Derivative for samples whose periodic extension may have a fold
    /// discontinuity (kink data such as tanh). The data are extended by
    /// reflection about the right edge, differentiated spectrally, and
    /// restricted. Requires edge-flat derivatives, which field construction
    /// guarantees; for seam-compatible data this reduces to the plain
    /// multiplier on the doubled window.
    pub fn derivative_kink_aware(&self, order: u32) -> Self {
        let doubled = self.reflect_double();
        let d = doubled.spectral_derivative(order);
        SampledFunction {
            grid: self.grid.clone(),
            values: d.values[..self.n()].to_vec(),
        }
    }

    /// Extend by reflection about the right edge onto the doubled grid:
    /// `g(x) = f(2 x_R - x)` for `x` in the second half, `x_R = x0 + L`.
    pub fn reflect_double(&self) -> Self {
        let n = self.n();
        let mut values = Vec::with_capacity(2 * n);
        values.extend_from_slice(&self.values);
        values.push(self.values[n - 1]);
        for j in 1..n {
            values.push(self.values[n - j]);
        }
        SampledFunction {
            grid: self.grid.doubled(),
            values,
        }
    }

    /// Restriction to the first half of a doubled grid.
    pub fn first_half(&self) -> Result<Self> {
        let n = self.n();
        if n % 2 != 0 {
            return Err(GpError::Grid("cannot halve an odd-length grid".into()));
        }
        let half = make_grid(self.grid.length() / 2.0, n / 2, self.grid.x0())?;
        Ok(SampledFunction {
            grid: half,
            values: self.values[..n / 2].to_vec(),
        })
    }

    /// Gaussian mollification: Fourier multiplier `e^(-(eps xi)^2 / 2)`,
    /// i.e. convolution with a unit-mass Gaussian of width `eps`.
    pub fn mollify(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(GpError::Numerical(format!(
                "mollifier width must be positive, got {eps}"
            )));
        }
        Ok(self.fourier_multiplier(|xi| C64::new((-0.5 * (eps * xi).powi(2)).exp(), 0.0)))
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }
}

/// Weighted Sobolev norm `|f|_{H^s_tau}` discretized as
/// `(sum_k (tau^2 + xi_k^2)^s |f^_k|^2 dxi)^(1/2)`.
pub fn sobolev_norm(f: &SampledFunction, s: f64, tau: f64) -> Result<f64> {
    let v = sobolev_norm_sq(f, s, tau)?;
    Ok(v.sqrt())
}

/// Squared weighted Sobolev norm; see [`sobolev_norm`].
pub fn sobolev_norm_sq(f: &SampledFunction, s: f64, tau: f64) -> Result<f64> {
    if !(tau >= 2.0) {
        return Err(GpError::Numerical(format!(
            "sobolev_norm requires tau >= 2, got {tau}"
        )));
    }
    let spec = f.raw_spectrum();
    // |f^_k|^2 dxi = (dx/n) |F_k|^2, so the s = 0 case telescopes to the
    // exact discrete Parseval identity dx * sum |f_j|^2.
    let scale = f.grid.dx() / f.grid.n() as f64;
    let mut acc = 0.0;
    for (k, v) in spec.iter().enumerate() {
        let xi = f.grid.wavenumber(k);
        acc += (tau * tau + xi * xi).powf(s) * v.norm_sqr();
    }
    let out = acc * scale;
    if !out.is_finite() {
        return Err(GpError::Numerical("sobolev_norm produced a non-finite value".into()));
    }
    Ok(out)
}

/// Weighted Sobolev inner product `<f, g>_{H^s_tau}` (linear in `f`,
/// conjugate-linear in `g`).
pub fn sobolev_inner(f: &SampledFunction, g: &SampledFunction, s: f64, tau: f64) -> Result<C64> {
    if f.grid != g.grid {
        return Err(GpError::Grid("sobolev_inner requires a common grid".into()));
    }
    if !(tau >= 2.0) {
        return Err(GpError::Numerical(format!(
            "sobolev_inner requires tau >= 2, got {tau}"
        )));
    }
    let sf = f.raw_spectrum();
    let sg = g.raw_spectrum();
    let scale = f.grid.dx() / f.grid.n() as f64;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..sf.len() {
        let xi = f.grid.wavenumber(k);
        acc += sf[k] * sg[k].conj() * (tau * tau + xi * xi).powf(s);
    }
    Ok(acc * scale)
}

/// Write a field snapshot in the `gpfield v1` text format.
pub fn write_field(f: &SampledFunction, out: &mut impl Write) -> Result<()> {
    let mut buf = String::new();
    writeln!(
        buf,
        "# gpfield v1 L={:e} n={} x0={:e}",
        f.grid.length(),
        f.grid.n(),
        f.grid.x0()
    )
    .expect("string write");
    for (j, v) in f.values.iter().enumerate() {
        writeln!(buf, "{:e} {:e} {:e}", f.grid.x(j), v.re, v.im).expect("string write");
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

fn parse_f64(tok: &str, what: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| GpError::Parse(format!("invalid {what}: {tok:?}")))
}

/// Read a field snapshot in the `gpfield v1` text format. Rejects sample
/// counts that disagree with the header.
pub fn read_field(input: &mut impl BufRead) -> Result<SampledFunction> {
    let mut header = String::new();
    input.read_line(&mut header)?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 6 || toks[0] != "#" || toks[1] != "gpfield" || toks[2] != "v1" {
        return Err(GpError::Parse(format!(
            "bad header, expected '# gpfield v1 L=<float> n=<int> x0=<float>', got {:?}",
            header.trim_end()
        )));
    }
    let length = parse_f64(
        toks[3]
            .strip_prefix("L=")
            .ok_or_else(|| GpError::Parse(format!("expected L=<float>, got {:?}", toks[3])))?,
        "L",
    )?;
    let n: usize = toks[4]
        .strip_prefix("n=")
        .ok_or_else(|| GpError::Parse(format!("expected n=<int>, got {:?}", toks[4])))
        .and_then(|t| {
            t.parse::<usize>()
                .map_err(|_| GpError::Parse(format!("invalid n: {t:?}")))
        })?;
    let x0 = parse_f64(
        toks[5]
            .strip_prefix("x0=")
            .ok_or_else(|| GpError::Parse(format!("expected x0=<float>, got {:?}", toks[5])))?,
        "x0",
    )?;
    let grid = make_grid(length, n, x0)?;
    let mut values = Vec::with_capacity(n);
    let mut line = String::new();
    loop {
        line.clear();
        let read = input.read_line(&mut line)?;
        if read == 0 {
            break;
        }
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let cols: Vec<&str> = t.split_whitespace().collect();
        if cols.len() != 3 {
            return Err(GpError::Parse(format!(
                "expected 'x re im' on data line {}, got {t:?}",
                values.len() + 2
            )));
        }
        if values.len() == n {
            return Err(GpError::Parse(format!(
                "more than the declared n={n} data lines"
            )));
        }
        let x = parse_f64(cols[0], "x")?;
        let re = parse_f64(cols[1], "re")?;
        let im = parse_f64(cols[2], "im")?;
        let expected = grid.x(values.len());
        if (x - expected).abs() > 1e-6 * grid.dx().max(1.0) {
            return Err(GpError::Parse(format!(
                "x column mismatch at line {}: got {x}, expected {expected}",
                values.len() + 2
            )));
        }
        values.push(C64::new(re, im));
    }
    if values.len() != n {
        return Err(GpError::Parse(format!(
            "declared n={n} but found {} data lines",
            values.len()
        )));
    }
    SampledFunction::new(grid, values)
}
