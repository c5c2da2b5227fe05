//! Trap, two-body kernel `U`, three-body kernel `W`, their mean-field
//! rescalings `U_N(x) = N^α U(N^α x)` and `W_N(x, y) = N^{2β} W(N^β x, N^β y)`,
//! and checks of the kernel hypotheses.
//!
//! Sampled kernels are stored in periodic offset layout: entry `d` of a
//! sampled `U_N` holds the value at offset `d·dx` (wrapped into `[-L, L)`),
//! which is what the FFT convolutions consume.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::par::{self, Exec};

/// `|x|^s` confinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Trap {
    exponent: f64,
}

impl Trap {
    pub fn new(exponent: f64) -> Result<Trap> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "trap exponent s must be positive, got {exponent}"
            )));
        }
        Ok(Trap { exponent })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn value(&self, x: f64) -> f64 {
        x.abs().powf(self.exponent)
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.x().iter().map(|&x| self.value(x)).collect()
    }
}

/// What to do when a scaled kernel is narrower than four grid spacings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ResolutionPolicy {
    #[default]
    Reject,
    /// Replace the kernel by the discrete delta (unit mass in the origin cell).
    DeltaOverride,
}

#[derive(Debug, Clone, PartialEq)]
enum Profile1D {
    Gaussian { sigma: f64 },
    Tabulated { xs: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
enum Profile2D {
    Gaussian { sigma: f64 },
    Tabulated { xs: Vec<f64>, ys: Vec<f64>, values: Vec<f64> },
}

fn linear_interp(xs: &[f64], values: &[f64], x: f64) -> f64 {
    if x < xs[0] || x > xs[xs.len() - 1] {
        return 0.0;
    }
    let i = match xs.partition_point(|&p| p <= x) {
        0 => 0,
        i if i >= xs.len() => xs.len() - 2,
        i => i - 1,
    };
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    values[i] * (1.0 - t) + values[i + 1] * t
}

fn trapezoid(xs: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (0..xs.len() - 1)
        .map(|i| 0.5 * (f(i) + f(i + 1)) * (xs[i + 1] - xs[i]))
        .sum()
}

fn check_axis(xs: &[f64], name: &str) -> Result<()> {
    if xs.len() < 2 {
        return Err(Error::InvalidKernel(format!("{name}: need at least two samples")));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidKernel(format!("{name}: abscissae must be strictly increasing")));
    }
    Ok(())
}

/// Two-body interaction `a U`, scaled as `U_N(x) = N^α U(N^α x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyKernel {
    profile: Profile1D,
    strength: f64,
    scale_exponent: f64,
    /// `∫U` before renormalization.
    original_mass: f64,
}

impl TwoBodyKernel {
    /// Normalized Gaussian of standard deviation `sigma`.
    pub fn gaussian(sigma: f64, strength: f64, scale_exponent: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidKernel(format!("sigma must be positive, got {sigma}")));
        }
        check_exponent(scale_exponent, "alpha")?;
        Ok(TwoBodyKernel {
            profile: Profile1D::Gaussian { sigma },
            strength,
            scale_exponent,
            original_mass: 1.0,
        })
    }

    /// Piecewise-linear profile through `(xs, values)`, renormalized to unit mass.
    pub fn tabulated(xs: Vec<f64>, values: Vec<f64>, strength: f64, scale_exponent: f64) -> Result<Self> {
        check_axis(&xs, "two-body table")?;
        check_exponent(scale_exponent, "alpha")?;
        if xs.len() != values.len() {
            return Err(Error::InvalidKernel("column length mismatch".into()));
        }
        let mass = trapezoid(&xs, |i| values[i]);
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidKernel(format!("kernel mass must be positive, got {mass}")));
        }
        let values = values.into_iter().map(|v| v / mass).collect();
        Ok(TwoBodyKernel {
            profile: Profile1D::Tabulated { xs, values },
            strength,
            scale_exponent,
            original_mass: mass,
        })
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn scale_exponent(&self) -> f64 {
        self.scale_exponent
    }

    pub fn with_strength(mut self, strength: f64) -> Self {
        self.strength = strength;
        self
    }

    pub fn with_scale_exponent(mut self, alpha: f64) -> Self {
        self.scale_exponent = alpha;
        self
    }

    pub fn original_mass(&self) -> f64 {
        self.original_mass
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.profile, Profile1D::Gaussian { .. })
    }

    /// Normalized profile `U(x)`.
    pub fn value(&self, x: f64) -> f64 {
        match &self.profile {
            Profile1D::Gaussian { sigma } => {
                (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
            }
            Profile1D::Tabulated { xs, values } => linear_interp(xs, values, x),
        }
    }

    /// Characteristic width: `σ` for the Gaussian, RMS width for tables.
    pub fn width(&self) -> f64 {
        match &self.profile {
            Profile1D::Gaussian { sigma } => *sigma,
            Profile1D::Tabulated { xs, .. } => {
                trapezoid(xs, |i| xs[i] * xs[i] * self.value(xs[i])).sqrt()
            }
        }
    }

    /// `∫|x| U(x) dx`.
    pub fn first_moment(&self) -> f64 {
        match &self.profile {
            Profile1D::Gaussian { sigma } => sigma * (2.0 / PI).sqrt(),
            Profile1D::Tabulated { xs, values } => trapezoid(xs, |i| xs[i].abs() * values[i]),
        }
    }

    /// `U_N` scale factor `N^α`.
    pub fn scale(&self, n: f64) -> f64 {
        n.powf(self.scale_exponent)
    }

    fn support_radius(&self) -> f64 {
        match &self.profile {
            Profile1D::Gaussian { sigma } => 12.0 * sigma,
            Profile1D::Tabulated { xs, .. } => xs[0].abs().max(xs[xs.len() - 1].abs()),
        }
    }

    /// `∫|x| U_N(x) dx` by composite Gauss–Legendre quadrature of the
    /// rescaled profile itself (no change of variables).
    pub fn scaled_first_moment(&self, n: f64) -> f64 {
        let scale = self.scale(n);
        let r = self.support_radius() / scale;
        panel_nodes(-r, r, 32)
            .into_iter()
            .map(|(x, w)| w * x.abs() * scale * self.value(scale * x))
            .sum()
    }
}

/// Composite 20-point Gauss–Legendre nodes on `[lo, hi]`, split at zero.
fn panel_nodes(lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
    let rule = crate::gns::gauss_legendre(20);
    let mut out = Vec::with_capacity(2 * panels * rule.len());
    for (a, b) in [(lo, 0.0), (0.0, hi)] {
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            out.extend(rule.iter().map(|(t, w)| (mid + 0.5 * h * t, 0.5 * h * w)));
        }
    }
    out
}

/// Three-body interaction `b W`, scaled as `W_N(x, y) = N^{2β} W(N^β x, N^β y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeBodyKernel {
    profile: Profile2D,
    strength: f64,
    scale_exponent: f64,
    original_mass: f64,
}

impl ThreeBodyKernel {
    /// `W(u, v) ∝ exp(-(u² + v² + (u - v)²) / (2σ²))`, invariant under the
    /// full permutation group of three particles.
    pub fn gaussian(sigma: f64, strength: f64, scale_exponent: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidKernel(format!("sigma must be positive, got {sigma}")));
        }
        check_exponent(scale_exponent, "beta")?;
        if strength < 0.0 {
            return Err(Error::InvalidKernel(format!(
                "three-body strength must be nonnegative, got {strength}"
            )));
        }
        Ok(ThreeBodyKernel {
            profile: Profile2D::Gaussian { sigma },
            strength,
            scale_exponent,
            original_mass: 1.0,
        })
    }

    /// Bilinear profile on the rectilinear table `values[i * ys.len() + j] = W(xs[i], ys[j])`,
    /// renormalized to unit mass.
    pub fn tabulated(
        xs: Vec<f64>,
        ys: Vec<f64>,
        values: Vec<f64>,
        strength: f64,
        scale_exponent: f64,
    ) -> Result<Self> {
        check_axis(&xs, "three-body table x")?;
        check_axis(&ys, "three-body table y")?;
        check_exponent(scale_exponent, "beta")?;
        if values.len() != xs.len() * ys.len() {
            return Err(Error::InvalidKernel(format!(
                "expected {} table entries, got {}",
                xs.len() * ys.len(),
                values.len()
            )));
        }
        let ny = ys.len();
        let mass = trapezoid(&xs, |i| trapezoid(&ys, |j| values[i * ny + j]));
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidKernel(format!("kernel mass must be positive, got {mass}")));
        }
        let values = values.into_iter().map(|v| v / mass).collect();
        Ok(ThreeBodyKernel {
            profile: Profile2D::Tabulated { xs, ys, values },
            strength,
            scale_exponent,
            original_mass: mass,
        })
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn scale_exponent(&self) -> f64 {
        self.scale_exponent
    }

    pub fn with_strength(mut self, strength: f64) -> Self {
        self.strength = strength;
        self
    }

    pub fn with_scale_exponent(mut self, beta: f64) -> Self {
        self.scale_exponent = beta;
        self
    }

    pub fn original_mass(&self) -> f64 {
        self.original_mass
    }

    pub fn value(&self, u: f64, v: f64) -> f64 {
        match &self.profile {
            Profile2D::Gaussian { sigma } => {
                let q = (u * u + v * v + (u - v) * (u - v)) / (2.0 * sigma * sigma);
                3f64.sqrt() / (2.0 * PI * sigma * sigma) * (-q).exp()
            }
            Profile2D::Tabulated { xs, ys, values } => {
                if u < xs[0] || u > xs[xs.len() - 1] || v < ys[0] || v > ys[ys.len() - 1] {
                    return 0.0;
                }
                let ny = ys.len();
                let i = xs.partition_point(|&p| p <= u).clamp(1, xs.len() - 1) - 1;
                let j = ys.partition_point(|&p| p <= v).clamp(1, ny - 1) - 1;
                let tu = (u - xs[i]) / (xs[i + 1] - xs[i]);
                let tv = (v - ys[j]) / (ys[j + 1] - ys[j]);
                let w = |a: usize, b: usize| values[a * ny + b];
                w(i, j) * (1.0 - tu) * (1.0 - tv)
                    + w(i + 1, j) * tu * (1.0 - tv)
                    + w(i, j + 1) * (1.0 - tu) * tv
                    + w(i + 1, j + 1) * tu * tv
            }
        }
    }

    /// Characteristic width: `σ` for the Gaussian, `(∬u²W)^{1/2}` for tables.
    pub fn width(&self) -> f64 {
        match &self.profile {
            Profile2D::Gaussian { sigma } => *sigma,
            Profile2D::Tabulated { xs, ys, values } => {
                let ny = ys.len();
                trapezoid(xs, |i| trapezoid(ys, |j| xs[i] * xs[i] * values[i * ny + j])).sqrt()
            }
        }
    }

    /// Radius beyond which the profile is treated as zero.
    fn support_radius(&self) -> f64 {
        match &self.profile {
            // On the boundary of [-r, r]² the exponent is at least 3r²/(4σ²).
            Profile2D::Gaussian { sigma } => 8.0 * sigma,
            Profile2D::Tabulated { xs, ys, .. } => xs[0]
                .abs()
                .max(xs[xs.len() - 1].abs())
                .max(ys[0].abs())
                .max(ys[ys.len() - 1].abs()),
        }
    }

    /// `∬|x| W(x, y) dx dy`.
    pub fn first_moment(&self) -> f64 {
        match &self.profile {
            // The marginal in x is centred normal with variance 2σ²/3.
            Profile2D::Gaussian { sigma } => sigma * (2.0 / 3.0f64).sqrt() * (2.0 / PI).sqrt(),
            Profile2D::Tabulated { xs, ys, values } => {
                let ny = ys.len();
                trapezoid(xs, |i| trapezoid(ys, |j| xs[i].abs() * values[i * ny + j]))
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match &self.profile {
            Profile2D::Gaussian { sigma } => 3f64.sqrt() / (2.0 * PI * sigma * sigma),
            Profile2D::Tabulated { values, .. } => values.iter().cloned().fold(0.0, f64::max),
        }
    }

    pub fn scale(&self, n: f64) -> f64 {
        n.powf(self.scale_exponent)
    }

    /// `∬|x| W_N(x, y) dx dy` by tensor Gauss–Legendre quadrature of the
    /// rescaled profile itself.
    pub fn scaled_first_moment(&self, n: f64) -> f64 {
        let scale = self.scale(n);
        let r = self.support_radius() / scale;
        let nodes = panel_nodes(-r, r, 16);
        let scale2 = scale * scale;
        nodes
            .iter()
            .map(|&(x, wx)| {
                wx * x.abs()
                    * nodes
                        .iter()
                        .map(|&(y, wy)| wy * scale2 * self.value(scale * x, scale * y))
                        .sum::<f64>()
            })
            .sum()
    }
}

fn check_exponent(e: f64, name: &str) -> Result<()> {
    if !(e > 0.0 && e.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scale exponent {name} must be positive, got {e}"
        )));
    }
    Ok(())
}

fn offset(grid: &Grid, d: usize) -> f64 {
    let m = grid.points();
    let signed = if d < m / 2 { d as isize } else { d as isize - m as isize };
    signed as f64 * grid.dx()
}

/// `U_N` sampled on a grid, with its Fourier multiplier.
#[derive(Debug, Clone)]
pub struct SampledTwoBody {
    grid: Arc<Grid>,
    samples: Vec<f64>,
    multiplier: Vec<Complex64>,
    is_delta: bool,
    scale: f64,
}

impl SampledTwoBody {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Samples in periodic offset layout.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Samples reordered to match `grid.x()`.
    pub fn centered(&self) -> Vec<f64> {
        let m = self.grid.points();
        (0..m).map(|j| self.samples[(j + m / 2) % m]).collect()
    }

    pub fn is_delta(&self) -> bool {
        self.is_delta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mass(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.grid.dx()
    }

    /// `∫|x| U_N(x) dx` on the grid.
    pub fn first_moment(&self) -> f64 {
        self.samples
            .iter()
            .enumerate()
            .map(|(d, v)| offset(&self.grid, d).abs() * v)
            .sum::<f64>()
            * self.grid.dx()
    }

    /// `(U_N ⋆ f)(x_m) = Σ_j U_N(x_m - x_j) f_j dx`.
    pub fn convolve(&self, f: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.forward(&mut buf);
        for (b, m) in buf.iter_mut().zip(&self.multiplier) {
            *b *= m;
        }
        self.grid.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// Samples `U_N` on `grid`, renormalizing the discrete mass to one.
pub fn scaled_two_body(
    kernel: &TwoBodyKernel,
    n: f64,
    grid: &Arc<Grid>,
    policy: ResolutionPolicy,
) -> Result<SampledTwoBody> {
    if !(n > 0.0) {
        return Err(Error::InvalidParameter(format!("particle number must be positive, got {n}")));
    }
    let scale = kernel.scale(n);
    let width = kernel.width() / scale;
    let min_width = 4.0 * grid.dx();
    let m = grid.points();
    let (samples, is_delta) = if width < min_width {
        match policy {
            ResolutionPolicy::Reject => return Err(Error::UnderResolved { width, min_width }),
            ResolutionPolicy::DeltaOverride => {
                let mut s = vec![0.0; m];
                s[0] = 1.0 / grid.dx();
                (s, true)
            }
        }
    } else {
        let mut s: Vec<f64> = (0..m)
            .map(|d| scale * kernel.value(scale * offset(grid, d)))
            .collect();
        let mass = s.iter().sum::<f64>() * grid.dx();
        if !(mass > 0.0) {
            return Err(Error::InvalidKernel("sampled kernel has zero mass".into()));
        }
        for v in s.iter_mut() {
            *v /= mass;
        }
        (s, false)
    };
    let mut multiplier = grid.forward_real(&samples);
    for v in multiplier.iter_mut() {
        *v *= grid.dx();
    }
    Ok(SampledTwoBody {
        grid: grid.clone(),
        samples,
        multiplier,
        is_delta,
        scale,
    })
}

/// Route used to evaluate the three-body diagonal convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ThreeBodyRoute {
    /// Real-space sum over the kernel support, `O(M S²)`.
    Direct,
    /// Band-limited Fourier sum `Ĝ(k) = Σ Ŵ(k₁, k - k₁) f̂(k₁) ĝ(k - k₁)`.
    #[default]
    Spectral,
}

/// Kernel spectrum restricted to the modes `-band..=band` (or every mode).
#[derive(Debug)]
struct KernelSpectrum {
    band: usize,
    full: bool,
    width: usize,
    values: Vec<Complex64>,
}

impl KernelSpectrum {
    #[inline]
    fn index(&self, m: isize, points: usize) -> usize {
        if self.full {
            m.rem_euclid(points as isize) as usize
        } else {
            (m + self.band as isize) as usize
        }
    }

    #[inline]
    fn get(&self, a: isize, b: isize, points: usize) -> Complex64 {
        self.values[self.index(a, points) * self.width + self.index(b, points)]
    }

    fn covers(&self, band: usize) -> bool {
        self.full || self.band >= band
    }
}

/// Relative threshold below which Fourier coefficients are treated as zero
/// by the band-limited convolution.
pub const SPECTRAL_CUTOFF: f64 = 1e-14;

/// `W_N` sampled on the tensor grid around the origin.
#[derive(Debug)]
pub struct SampledThreeBody {
    grid: Arc<Grid>,
    half_support: usize,
    samples: Vec<f64>,
    is_delta: bool,
    scale: f64,
    /// Width of a Gaussian profile after scaling; its spectrum is known in
    /// closed form, which avoids the `O(S² B)` partial transform.
    gaussian_sigma: Option<f64>,
    spectrum: RwLock<Option<Arc<KernelSpectrum>>>,
}

impl SampledThreeBody {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn is_delta(&self) -> bool {
        self.is_delta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Support half-width in grid cells.
    pub fn half_support(&self) -> usize {
        self.half_support
    }

    fn side(&self) -> usize {
        2 * self.half_support + 1
    }

    /// `W_N(i dx, j dx)` for `|i|, |j| ≤ half_support`.
    pub fn at(&self, i: isize, j: isize) -> f64 {
        let s = self.half_support as isize;
        if i.abs() > s || j.abs() > s {
            return 0.0;
        }
        self.samples[((i + s) as usize) * self.side() + (j + s) as usize]
    }

    pub fn mass(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.grid.dx() * self.grid.dx()
    }

    pub fn sup(&self) -> f64 {
        self.samples.iter().cloned().fold(0.0, f64::max)
    }

    /// `∬|x| W_N(x, y) dx dy` on the grid.
    pub fn first_moment(&self) -> f64 {
        let s = self.half_support as isize;
        let dx = self.grid.dx();
        let mut acc = 0.0;
        for i in -s..=s {
            for j in -s..=s {
                acc += (i as f64 * dx).abs() * self.at(i, j);
            }
        }
        acc * dx * dx
    }

    /// `G[f, g](x) = ∬ W_N(u, v) f(x - u) g(x - v) du dv` for real samples.
    pub fn apply(&self, f: &[f64], g: &[f64], route: ThreeBodyRoute) -> Vec<f64> {
        self.apply_with(Exec::default(), f, g, route)
    }

    pub fn apply_with(&self, exec: Exec, f: &[f64], g: &[f64], route: ThreeBodyRoute) -> Vec<f64> {
        match route {
            ThreeBodyRoute::Direct => self.apply_direct(exec, f, g),
            ThreeBodyRoute::Spectral => self.apply_spectral(exec, f, g),
        }
    }

    fn apply_direct(&self, exec: Exec, f: &[f64], g: &[f64]) -> Vec<f64> {
        let m = self.grid.points();
        let s = self.half_support as isize;
        let side = self.side();
        let dx2 = self.grid.dx() * self.grid.dx();
        let wrap = |t: isize| t.rem_euclid(m as isize) as usize;
        par::map_range(exec, m, |x| {
            let x = x as isize;
            let mut acc = 0.0;
            for i in -s..=s {
                let fi = f[wrap(x - i)];
                if fi == 0.0 {
                    continue;
                }
                let row = &self.samples[((i + s) as usize) * side..((i + s) as usize + 1) * side];
                let mut inner = 0.0;
                for (jj, w) in row.iter().enumerate() {
                    inner += w * g[wrap(x - (jj as isize - s))];
                }
                acc += fi * inner;
            }
            acc * dx2
        })
    }

    fn band_of(&self, spectrum: &[Complex64]) -> Option<usize> {
        let m = self.grid.points();
        let peak = spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return None;
        }
        let cut = SPECTRAL_CUTOFF * peak;
        let mut band = 0;
        for (j, c) in spectrum.iter().enumerate() {
            if c.norm() > cut {
                let signed = if j <= m / 2 { j } else { m - j };
                band = band.max(signed);
            }
        }
        Some(band)
    }

    fn spectrum_for(&self, exec: Exec, band: usize) -> Arc<KernelSpectrum> {
        if let Some(cached) = self.spectrum.read().expect("spectrum cache poisoned").as_ref() {
            if cached.covers(band) {
                return cached.clone();
            }
        }
        let mut guard = self.spectrum.write().expect("spectrum cache poisoned");
        if let Some(cached) = guard.as_ref() {
            if cached.covers(band) {
                return cached.clone();
            }
        }
        let previous = guard.as_ref().map(|c| c.band).unwrap_or(0);
        let band = band.max(previous).div_ceil(16) * 16;
        let spectrum = Arc::new(self.compute_spectrum(exec, band));
        *guard = Some(spectrum.clone());
        spectrum
    }

    fn compute_spectrum(&self, exec: Exec, band: usize) -> KernelSpectrum {
        let m = self.grid.points();
        let full = 2 * band + 1 >= m;
        let modes: Vec<isize> = if full {
            (0..m as isize)
                .map(|j| if j < m as isize / 2 { j } else { j - m as isize })
                .collect()
        } else {
            (-(band as isize)..=band as isize).collect()
        };
        let nb = modes.len();
        let idx = |mode: isize| -> usize {
            if full {
                mode.rem_euclid(m as isize) as usize
            } else {
                (mode + band as isize) as usize
            }
        };
        if let Some(sigma) = self.gaussian_sigma {
            let dk = self.grid.dk();
            let c = sigma * sigma / 3.0;
            let mut values = vec![Complex64::new(0.0, 0.0); nb * nb];
            for &ma in &modes {
                let ka = ma as f64 * dk;
                for &mb in &modes {
                    let kb = mb as f64 * dk;
                    values[idx(ma) * nb + idx(mb)] =
                        Complex64::new((-c * (ka * ka + ka * kb + kb * kb)).exp(), 0.0);
                }
            }
            return KernelSpectrum {
                band,
                full,
                width: nb,
                values,
            };
        }
        let twiddle: Vec<Complex64> = (0..m)
            .map(|t| Complex64::from_polar(1.0, -2.0 * PI * t as f64 / m as f64))
            .collect();
        let tw = |mode: isize, i: isize| twiddle[(mode * i).rem_euclid(m as isize) as usize];
        let s = self.half_support as isize;
        let side = self.side();
        // Transform along the second axis: partial[i][b].
        let partial: Vec<Vec<Complex64>> = par::map_range(exec, side, |ii| {
            let row = &self.samples[ii * side..(ii + 1) * side];
            modes
                .iter()
                .map(|&mb| {
                    row.iter()
                        .enumerate()
                        .map(|(jj, &w)| w * tw(mb, jj as isize - s))
                        .sum::<Complex64>()
                })
                .collect()
        });
        let dx2 = self.grid.dx() * self.grid.dx();
        let rows: Vec<Vec<Complex64>> = par::map_range(exec, nb, |a| {
            let ma = modes[a];
            let mut out = vec![Complex64::new(0.0, 0.0); nb];
            for (ii, prow) in partial.iter().enumerate() {
                let t = tw(ma, ii as isize - s);
                for (o, p) in out.iter_mut().zip(prow) {
                    *o += t * p;
                }
            }
            for o in out.iter_mut() {
                *o *= dx2;
            }
            out
        });
        // Store in the accessor layout.
        let mut values = vec![Complex64::new(0.0, 0.0); nb * nb];
        for (a, row) in rows.iter().enumerate() {
            let ia = idx(modes[a]);
            for (b, v) in row.iter().enumerate() {
                values[ia * nb + idx(modes[b])] = *v;
            }
        }
        KernelSpectrum {
            band,
            full,
            width: nb,
            values,
        }
    }

    fn apply_spectral(&self, exec: Exec, f: &[f64], g: &[f64]) -> Vec<f64> {
        let m = self.grid.points();
        let fh = self.grid.forward_real(f);
        let gh = self.grid.forward_real(g);
        let (bf, bg) = match (self.band_of(&fh), self.band_of(&gh)) {
            (Some(a), Some(b)) => (a, b),
            _ => return vec![0.0; m],
        };
        // A Gaussian spectrum bounds the useful modes on its own: for fixed
        // `a`, |Ŵ(a, b)| peaks at exp(-σ²k_a²/4).
        let (bf, bg) = match self.gaussian_sigma {
            Some(sigma) => {
                let kcut = 2.0 * (1.0 / SPECTRAL_CUTOFF).ln().sqrt() / sigma;
                let kband = (kcut / self.grid.dk()).ceil() as usize;
                (bf.min(kband), bg.min(kband))
            }
            None => (bf, bg),
        };
        let band = bf.max(bg);
        let spec = self.spectrum_for(exec, band);
        let mi = m as isize;
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        let wrap = |t: isize| t.rem_euclid(mi) as usize;
        if 2 * band + 1 >= m {
            let lo = -(mi / 2);
            let hi = mi / 2 - 1;
            let acc = par::map_range(exec, m, |k| {
                let k = k as isize;
                let mut s = Complex64::new(0.0, 0.0);
                for a in lo..=hi {
                    let b = {
                        let t = (k - a).rem_euclid(mi);
                        if t >= mi / 2 { t - mi } else { t }
                    };
                    s += spec.get(a, b, m) * fh[wrap(a)] * gh[wrap(b)];
                }
                s
            });
            out.copy_from_slice(&acc);
        } else {
            let (bf, bg) = (bf as isize, bg as isize);
            let kmax = bf + bg;
            let acc = par::map_range(exec, (2 * kmax + 1) as usize, |kk| {
                let k = kk as isize - kmax;
                let lo = (-bf).max(k - bg);
                let hi = bf.min(k + bg);
                let mut s = Complex64::new(0.0, 0.0);
                for a in lo..=hi {
                    let b = k - a;
                    s += spec.get(a, b, m) * fh[wrap(a)] * gh[wrap(b)];
                }
                s
            });
            for (kk, v) in acc.into_iter().enumerate() {
                out[wrap(kk as isize - kmax)] += v;
            }
        }
        let scale = 1.0 / m as f64;
        for v in out.iter_mut() {
            *v *= scale;
        }
        self.grid.inverse(&mut out);
        out.into_iter().map(|c| c.re).collect()
    }
}

/// Samples `W_N` on the tensor grid, renormalizing the discrete mass to one.
pub fn scaled_three_body(
    kernel: &ThreeBodyKernel,
    n: f64,
    grid: &Arc<Grid>,
    policy: ResolutionPolicy,
) -> Result<SampledThreeBody> {
    if !(n > 0.0) {
        return Err(Error::InvalidParameter(format!("particle number must be positive, got {n}")));
    }
    let scale = kernel.scale(n);
    let width = kernel.width() / scale;
    let min_width = 4.0 * grid.dx();
    let dx = grid.dx();
    let (half_support, samples, is_delta) = if width < min_width {
        match policy {
            ResolutionPolicy::Reject => return Err(Error::UnderResolved { width, min_width }),
            ResolutionPolicy::DeltaOverride => (0, vec![1.0 / (dx * dx)], true),
        }
    } else {
        let radius = kernel.support_radius() / scale;
        let s = ((radius / dx).ceil() as usize).min(grid.points() / 2 - 1);
        let side = 2 * s + 1;
        let si = s as isize;
        let scale2 = scale * scale;
        let mut samples: Vec<f64> = par::map_range(Exec::default(), side * side, |idx| {
            let i = (idx / side) as isize - si;
            let j = (idx % side) as isize - si;
            scale2 * kernel.value(scale * i as f64 * dx, scale * j as f64 * dx)
        });
        let mass = samples.iter().sum::<f64>() * dx * dx;
        if !(mass > 0.0) {
            return Err(Error::InvalidKernel("sampled kernel has zero mass".into()));
        }
        for v in samples.iter_mut() {
            *v /= mass;
        }
        (s, samples, false)
    };
    let gaussian_sigma = match kernel.profile {
        Profile2D::Gaussian { sigma } if !is_delta => Some(sigma / scale),
        _ => None,
    };
    Ok(SampledThreeBody {
        grid: grid.clone(),
        half_support,
        samples,
        is_delta,
        scale,
        gaussian_sigma,
        spectrum: RwLock::new(None),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub kernel: String,
    pub checks: Vec<HypothesisCheck>,
    /// Set when the loaded profile had to be rescaled to unit mass.
    pub renormalized: bool,
    pub original_mass: f64,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &str, passed: bool, value: f64, note: impl Into<String>) -> HypothesisCheck {
    HypothesisCheck {
        name: name.into(),
        passed,
        value,
        note: note.into(),
    }
}

const SYMMETRY_TOL: f64 = 1e-12;

/// Verifies `0 ≤ U = U(-·) ∈ L¹ ∩ L²`, `∫U = 1` and `xU ∈ L¹` by quadrature.
pub fn validate_two_body(kernel: &TwoBodyKernel) -> HypothesisReport {
    let r = 12.0 * kernel.width();
    let n = 24_001;
    let h = 2.0 * r / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| -r + i as f64 * h).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| kernel.value(x)).collect();
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let asym = xs
        .iter()
        .map(|&x| (kernel.value(x) - kernel.value(-x)).abs())
        .fold(0.0, f64::max);
    let nodes = panel_nodes(-r, r, 64);
    let quad = |f: &dyn Fn(f64) -> f64| nodes.iter().map(|&(x, w)| w * f(x)).sum::<f64>();
    let mass = quad(&|x| kernel.value(x));
    let l2 = quad(&|x| kernel.value(x).powi(2));
    let moment = quad(&|x| x.abs() * kernel.value(x));
    let edge = vals[0].max(vals[n - 1]);
    let renormalized = (kernel.original_mass() - 1.0).abs() > 1e-12;
    HypothesisReport {
        kernel: "two_body".into(),
        checks: vec![
            check("nonnegative", min >= 0.0, min, "min U over sample points"),
            check("symmetric", asym <= SYMMETRY_TOL, asym, "max |U(x) - U(-x)|"),
            check(
                "normalized",
                (mass - 1.0).abs() < 1e-8,
                mass,
                if renormalized {
                    format!("renormalized from mass {}", kernel.original_mass())
                } else {
                    "unit mass as given".into()
                },
            ),
            check("L1_and_L2", l2.is_finite() && mass.is_finite(), l2, "∫U²"),
            check(
                "first_moment_finite",
                moment.is_finite() && edge < 1e-12 * vals.iter().cloned().fold(0.0, f64::max),
                moment,
                "∫|x|U; requires decay inside the quadrature window",
            ),
        ],
        renormalized,
        original_mass: kernel.original_mass(),
    }
}

/// Verifies nonnegativity, boundedness, unit mass, the swap and three-fold
/// permutation symmetries, and `xW ∈ L¹`.
pub fn validate_three_body(kernel: &ThreeBodyKernel) -> HypothesisReport {
    let r = kernel.support_radius();
    let n = 401;
    let h = 2.0 * r / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| -r + i as f64 * h).collect();
    let mut min = f64::INFINITY;
    let mut sup: f64 = 0.0;
    let mut swap: f64 = 0.0;
    let mut cyclic: f64 = 0.0;
    // Symmetry is probed on a coarser lattice to keep the cost down.
    let probe: Vec<f64> = (0..41).map(|i| -0.5 * r + i as f64 * r / 40.0).collect();
    for &u in &probe {
        for &v in &probe {
            let w = kernel.value(u, v);
            swap = swap.max((w - kernel.value(v, u)).abs());
            cyclic = cyclic
                .max((w - kernel.value(-u, v - u)).abs())
                .max((w - kernel.value(v - u, -u)).abs());
        }
    }
    for &u in &xs {
        for &v in &xs {
            let w = kernel.value(u, v);
            min = min.min(w);
            sup = sup.max(w);
        }
    }
    let nodes = panel_nodes(-r, r, 16);
    let mut mass = 0.0;
    let mut moment = 0.0;
    for &(u, wu) in &nodes {
        let inner: f64 = nodes.iter().map(|&(v, wv)| wv * kernel.value(u, v)).sum();
        mass += wu * inner;
        moment += wu * u.abs() * inner;
    }
    let renormalized = (kernel.original_mass() - 1.0).abs() > 1e-12;
    HypothesisReport {
        kernel: "three_body".into(),
        checks: vec![
            check("nonnegative", min >= 0.0, min, "min W over sample points"),
            check("bounded", sup.is_finite(), sup, "sup W"),
            check(
                "normalized",
                (mass - 1.0).abs() < 1e-6,
                mass,
                if renormalized {
                    format!("renormalized from mass {}", kernel.original_mass())
                } else {
                    "unit mass as given".into()
                },
            ),
            check("swap_symmetric", swap <= SYMMETRY_TOL, swap, "max |W(u,v) - W(v,u)|"),
            check(
                "permutation_symmetric",
                cyclic <= SYMMETRY_TOL,
                cyclic,
                "max |W(u,v) - W(-u,v-u)|, |W(u,v) - W(v-u,-u)|",
            ),
            check("first_moment_finite", moment.is_finite(), moment, "∬|x|W"),
        ],
        renormalized,
        original_mass: kernel.original_mass(),
    }
}

/// A kernel read from disk.
#[derive(Debug, Clone)]
pub enum KernelFile {
    TwoBody(TwoBodyKernel),
    ThreeBody(ThreeBodyKernel),
}

/// Parses the columnar kernel format.
///
/// The first line is a header `# gnslab-kernel kind=two_body` or
/// `# gnslab-kernel kind=three_body`, optionally followed by further
/// `key=value` metadata. Remaining `#` lines are comments. Data rows are
/// whitespace-separated `x U(x)` or `x y W(x,y)`; three-body rows must cover
/// a full rectilinear tensor grid. Profiles are renormalized to unit mass.
/// Strength and scale exponent are supplied by the caller.
pub fn parse_kernel(text: &str, strength: f64, scale_exponent: f64) -> Result<KernelFile> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty kernel file".into()))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("first line must be a '# gnslab-kernel' header".into()))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("gnslab-kernel") {
        return Err(Error::Parse("header must start with 'gnslab-kernel'".into()));
    }
    let kind = tokens
        .find_map(|t| t.strip_prefix("kind="))
        .ok_or_else(|| Error::Parse("header is missing kind=".into()))?
        .to_string();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    match kind.as_str() {
        "two_body" => {
            if rows.iter().any(|r| r.len() != 2) {
                return Err(Error::Parse("two_body rows must have two columns".into()));
            }
            let xs = rows.iter().map(|r| r[0]).collect();
            let vs = rows.iter().map(|r| r[1]).collect();
            Ok(KernelFile::TwoBody(TwoBodyKernel::tabulated(xs, vs, strength, scale_exponent)?))
        }
        "three_body" => {
            if rows.iter().any(|r| r.len() != 3) {
                return Err(Error::Parse("three_body rows must have three columns".into()));
            }
            let mut xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let mut ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
            xs.sort_by(|a, b| a.total_cmp(b));
            xs.dedup();
            ys.sort_by(|a, b| a.total_cmp(b));
            ys.dedup();
            if xs.len() * ys.len() != rows.len() {
                return Err(Error::Parse(format!(
                    "three_body rows do not form a tensor grid ({} x {} != {})",
                    xs.len(),
                    ys.len(),
                    rows.len()
                )));
            }
            let mut values = vec![f64::NAN; xs.len() * ys.len()];
            for r in &rows {
                let i = xs.partition_point(|&p| p < r[0]);
                let j = ys.partition_point(|&p| p < r[1]);
                values[i * ys.len() + j] = r[2];
            }
            if values.iter().any(|v| v.is_nan()) {
                return Err(Error::Parse("three_body table has duplicate or missing points".into()));
            }
            Ok(KernelFile::ThreeBody(ThreeBodyKernel::tabulated(
                xs,
                ys,
                values,
                strength,
                scale_exponent,
            )?))
        }
        other => Err(Error::Parse(format!("unknown kernel kind '{other}'"))),
    }
}

pub fn load_kernel(path: &Path, strength: f64, scale_exponent: f64) -> Result<KernelFile> {
    let text = fs::read_to_string(path)?;
    parse_kernel(&text, strength, scale_exponent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<Grid> {
        Grid::new(20.0, 2048).unwrap()
    }

    #[test]
    fn trap_rejects_nonpositive_exponent() {
        assert!(Trap::new(0.0).is_err());
        assert_eq!(Trap::new(2.0).unwrap().value(-3.0), 9.0);
    }

    #[test]
    fn two_body_identity_scale() {
        let g = grid();
        let k = TwoBodyKernel::gaussian(1.0, 1.0, 0.5).unwrap();
        let s = scaled_two_body(&k, 1.0, &g, ResolutionPolicy::Reject).unwrap();
        for (v, &x) in s.centered().iter().zip(g.x()) {
            assert!((v - k.value(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn two_body_scaling() {
        let g = grid();
        let k = TwoBodyKernel::gaussian(1.0, 1.0, 0.5).unwrap();
        let s1 = scaled_two_body(&k, 1.0, &g, ResolutionPolicy::Reject).unwrap();
        let s = scaled_two_body(&k, 100.0, &g, ResolutionPolicy::Reject).unwrap();
        assert!((s.mass() - 1.0).abs() < 1e-10);
        assert!((s.samples()[0] / s1.samples()[0] - 10.0).abs() < 1e-10);
        let want = 0.1 * k.first_moment();
        let rel = (k.scaled_first_moment(100.0) - want).abs() / want;
        assert!(rel < 1e-10, "{rel}");
        // The grid moment carries an O(dx²) error from the kink of |x|.
        assert!((s.first_moment() - want).abs() / want < 1e-2);
    }

    #[test]
    fn two_body_resolution_guard() {
        let g = grid();
        let k = TwoBodyKernel::gaussian(1.0, 1.0, 0.5).unwrap();
        assert!(matches!(
            scaled_two_body(&k, 1e4, &g, ResolutionPolicy::Reject),
            Err(Error::UnderResolved { .. })
        ));
        let d = scaled_two_body(&k, 1e4, &g, ResolutionPolicy::DeltaOverride).unwrap();
        assert!(d.is_delta());
        assert!((d.mass() - 1.0).abs() < 1e-14);
        let f: Vec<f64> = g.x().iter().map(|x| (-x * x).exp()).collect();
        let c = d.convolve(&f);
        for (a, b) in c.iter().zip(&f) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn three_body_identity_and_mass() {
        let g = grid();
        let k = ThreeBodyKernel::gaussian(1.0, 1.0, 0.3).unwrap();
        let w1 = scaled_three_body(&k, 1.0, &g, ResolutionPolicy::Reject).unwrap();
        let dx = g.dx();
        for (i, j) in [(0, 0), (10, -3), (-40, 25), (100, 100)] {
            let want = k.value(i as f64 * dx, j as f64 * dx);
            assert!((w1.at(i, j) - want).abs() < 1e-12 * k.sup());
        }
        for n in [10.0, 100.0, 1000.0] {
            let w = scaled_three_body(&k, n, &g, ResolutionPolicy::Reject).unwrap();
            assert!((w.mass() - 1.0).abs() < 1e-8);
            let rel = (w.sup() - k.scale(n).powi(2) * k.sup()).abs() / w.sup();
            assert!(rel < 1e-10, "n={n}: {rel}");
            let m = k.first_moment() / k.scale(n);
            assert!((k.scaled_first_moment(n) - m).abs() / m < 1e-9);
            assert!((w.first_moment() - m).abs() / m < 1e-2);
        }
    }

    #[test]
    fn gaussian_three_body_is_permutation_symmetric() {
        let k = ThreeBodyKernel::gaussian(0.7, 1.0, 0.5).unwrap();
        for &(u, v) in &[(0.3, -1.2), (2.0, 0.1), (-0.4, -0.9), (1.5, 1.5)] {
            let w = k.value(u, v);
            assert!((w - k.value(v, u)).abs() < 1e-15);
            assert!((w - k.value(-u, v - u)).abs() < 1e-15);
            assert!((w - k.value(v - u, -u)).abs() < 1e-15);
        }
    }

    #[test]
    fn default_kernels_pass_validation() {
        let u = TwoBodyKernel::gaussian(1.0, 1.0, 0.5).unwrap();
        let r = validate_two_body(&u);
        assert!(r.all_passed(), "{r:?}");
        assert!((r.check("first_moment_finite").unwrap().value - u.first_moment()).abs() < 1e-6);
        let w = ThreeBodyKernel::gaussian(1.0, 1.0, 0.5).unwrap();
        let r = validate_three_body(&w);
        assert!(r.all_passed(), "{r:?}");
        assert!((r.check("first_moment_finite").unwrap().value - w.first_moment()).abs() < 1e-6);
    }

    #[test]
    fn indicator_fails_symmetry() {
        let xs: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
        let ys = xs.clone();
        let values: Vec<f64> = xs
            .iter()
            .flat_map(|&u| ys.iter().map(move |_| if u > 0.0 { 1.0 } else { 0.0 }))
            .collect();
        let k = ThreeBodyKernel::tabulated(xs, ys, values, 1.0, 0.5).unwrap();
        let r = validate_three_body(&k);
        assert!(!r.check("swap_symmetric").unwrap().passed);
        assert!(!r.all_passed());
    }

    #[test]
    fn renormalization_is_flagged() {
        let xs: Vec<f64> = (0..2001).map(|i| -10.0 + 0.01 * i as f64).collect();
        let vs: Vec<f64> = xs
            .iter()
            .map(|x| 2.0 * (-x * x / 2.0).exp() / (2.0 * PI).sqrt())
            .collect();
        let k = TwoBodyKernel::tabulated(xs, vs, 1.0, 0.5).unwrap();
        assert!((k.original_mass() - 2.0).abs() < 1e-6);
        let r = validate_two_body(&k);
        assert!(r.renormalized);
        assert!(r.check("normalized").unwrap().passed);
    }

    #[test]
    fn kernel_file_roundtrip() {
        let mut text = String::from("# gnslab-kernel kind=two_body source=test\n# x U\n");
        for i in 0..=400 {
            let x = -8.0 + 0.04 * i as f64;
            text.push_str(&format!("{x} {}\n", (-x * x / 2.0).exp()));
        }
        let KernelFile::TwoBody(k) = parse_kernel(&text, 1.0, 0.5).unwrap() else {
            panic!("expected two-body kernel");
        };
        assert!((k.original_mass() - (2.0 * PI).sqrt()).abs() < 1e-3);
        assert!((k.value(0.0) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-3);

        let mut text = String::from("# gnslab-kernel kind=three_body\n");
        for i in 0..=20 {
            for j in 0..=20 {
                let (u, v) = (-4.0 + 0.4 * i as f64, -4.0 + 0.4 * j as f64);
                text.push_str(&format!("{u} {v} {}\n", (-(u * u + v * v + (u - v) * (u - v)) / 2.0).exp()));
            }
        }
        let KernelFile::ThreeBody(w) = parse_kernel(&text, 1.0, 0.5).unwrap() else {
            panic!("expected three-body kernel");
        };
        assert!(validate_three_body(&w).check("swap_symmetric").unwrap().passed);

        assert!(parse_kernel("x y\n1 2\n", 1.0, 0.5).is_err());
        assert!(parse_kernel("# gnslab-kernel kind=three_body\n0 0 1\n0 1 1\n1 0 1\n", 1.0, 0.5).is_err());
    }

    #[test]
    fn direct_and_spectral_routes_agree() {
        let g = Grid::new(10.0, 256).unwrap();
        let k = ThreeBodyKernel::gaussian(1.0, 1.0, 0.5).unwrap();
        let w = scaled_three_body(&k, 9.0, &g, ResolutionPolicy::Reject).unwrap();
        let f: Vec<f64> = g.x().iter().map(|x| (-x * x).exp()).collect();
        let h: Vec<f64> = g.x().iter().map(|x| (-(x - 0.5) * (x - 0.5) / 2.0).exp() * (1.0 + x)).collect();
        let d = w.apply(&f, &h, ThreeBodyRoute::Direct);
        let s = w.apply(&f, &h, ThreeBodyRoute::Spectral);
        let peak = d.iter().cloned().fold(0.0, |a: f64, b| a.max(b.abs()));
        for (a, b) in d.iter().zip(&s) {
            assert!((a - b).abs() < 1e-9 * peak, "{a} vs {b}");
        }
        // Symmetric in the two inputs.
        let s2 = w.apply(&h, &f, ThreeBodyRoute::Spectral);
        for (a, b) in s.iter().zip(&s2) {
            assert!((a - b).abs() < 1e-12 * peak);
        }
    }

    fn tabulated_w() -> ThreeBodyKernel {
        let xs: Vec<f64> = (0..=60).map(|i| -6.0 + 0.2 * i as f64).collect();
        let values = xs
            .iter()
            .flat_map(|&u| xs.iter().map(move |&v| (-(u * u + v * v + (u - v) * (u - v)) / 4.0).exp()))
            .collect();
        ThreeBodyKernel::tabulated(xs.clone(), xs, values, 1.0, 0.5).unwrap()
    }

    #[test]
    fn tabulated_spectral_route_matches_direct() {
        let g = Grid::new(8.0, 128).unwrap();
        let w = scaled_three_body(&tabulated_w(), 1.0, &g, ResolutionPolicy::Reject).unwrap();
        let f: Vec<f64> = g.x().iter().map(|x| (-x * x / 2.0).exp()).collect();
        let h: Vec<f64> = g.x().iter().map(|x| 1.0 / (1.0 + x * x)).collect();
        let d = w.apply(&f, &h, ThreeBodyRoute::Direct);
        let s = w.apply(&f, &h, ThreeBodyRoute::Spectral);
        for (a, b) in d.iter().zip(&s) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn full_band_spectral_route_matches_direct() {
        // White-noise inputs force the full-band branch.
        let g = Grid::new(8.0, 64).unwrap();
        let k = tabulated_w();
        let w = scaled_three_body(&k, 1.0, &g, ResolutionPolicy::Reject).unwrap();
        let f: Vec<f64> = (0..64).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let h: Vec<f64> = (0..64).map(|i| ((i * 104729) % 11) as f64 - 5.0).collect();
        let d = w.apply(&f, &h, ThreeBodyRoute::Direct);
        let s = w.apply(&f, &h, ThreeBodyRoute::Spectral);
        for (a, b) in d.iter().zip(&s) {
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }
}
