//! Uniform periodic grid on `[-L, L)` with FFT-based spectral calculus.

use std::f64::consts::PI;
use std::fmt;
use std::iter::Sum;
use std::ops::Mul;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic grid with `points` samples on `[-half_width, half_width)`.
pub struct Grid {
    half_width: f64,
    points: usize,
    dx: f64,
    x: Vec<f64>,
    k: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("half_width", &self.half_width)
            .field("points", &self.points)
            .field("dx", &self.dx)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.half_width == other.half_width
    }
}

impl Grid {
    /// Builds a grid. `points` must be a power of two and at least 16.
    pub fn new(half_width: f64, points: usize) -> Result<Arc<Grid>> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= 16, got {points}"
            )));
        }
        let dx = 2.0 * half_width / points as f64;
        let x = (0..points).map(|j| -half_width + j as f64 * dx).collect();
        let dk = PI / half_width;
        let k = (0..points)
            .map(|j| {
                if j < points / 2 {
                    j as f64 * dk
                } else {
                    (j as f64 - points as f64) * dk
                }
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(points);
        let ifft = planner.plan_fft_inverse(points);
        Ok(Arc::new(Grid {
            half_width,
            points,
            dx,
            x,
            k,
            fft,
            ifft,
        }))
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Sample positions `x_j = -L + j dx`.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Angular wavenumbers in standard FFT ordering.
    pub fn k(&self) -> &[f64] {
        &self.k
    }

    /// Nyquist wavenumber `π / dx`.
    pub fn k_max(&self) -> f64 {
        PI / self.dx
    }

    /// Spacing of the wavenumber lattice, `π / L`.
    pub fn dk(&self) -> f64 {
        PI / self.half_width
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.fft.process(buf);
    }

    /// Inverse transform in place, including the `1/M` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.ifft.process(buf);
        let scale = 1.0 / self.points as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    /// Forward transform of real samples.
    pub fn forward_real(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Applies a diagonal Fourier multiplier to complex samples.
    pub fn apply_multiplier<F>(&self, samples: &[Complex64], multiplier: F) -> Vec<Complex64>
    where
        F: Fn(usize, f64) -> Complex64,
    {
        let mut buf = samples.to_vec();
        self.forward(&mut buf);
        for (j, v) in buf.iter_mut().enumerate() {
            *v *= multiplier(j, self.k[j]);
        }
        self.inverse(&mut buf);
        buf
    }

    /// Index of the Nyquist mode.
    pub fn nyquist_index(&self) -> usize {
        self.points / 2
    }

    /// Maps a signed offset to a periodic index.
    pub fn wrap(&self, offset: isize) -> usize {
        offset.rem_euclid(self.points as isize) as usize
    }
}

/// Σ f(x_j) dx, the uniform-weight rule.
pub fn quadrature<T>(f: &[T], grid: &Grid) -> Result<T>
where
    T: Copy + Sum<T> + Mul<f64, Output = T>,
{
    if f.len() != grid.points() {
        return Err(Error::LengthMismatch {
            expected: grid.points(),
            got: f.len(),
        });
    }
    Ok(f.iter().copied().sum::<T>() * grid.dx())
}

/// Complex wavefunction sampled on a [`Grid`] with its L² mass cached.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
    mass: f64,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Field> {
        if values.len() != grid.points() {
            return Err(Error::LengthMismatch {
                expected: grid.points(),
                got: values.len(),
            });
        }
        let mass = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dx();
        Ok(Field { grid, values, mass })
    }

    pub fn from_real(grid: Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        Field::new(grid, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Arc<Grid>, f: F) -> Field {
        let values = grid.x().iter().map(|&x| f(x)).collect();
        Field::new(grid, values).expect("length matches grid by construction")
    }

    pub fn from_real_fn<F: Fn(f64) -> f64>(grid: Arc<Grid>, f: F) -> Field {
        Field::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn zeros(grid: Arc<Grid>) -> Field {
        let n = grid.points();
        Field {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
            mass: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Cached `Σ |u_j|² dx`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn norm(&self) -> f64 {
        self.mass.sqrt()
    }

    /// Mass recomputed from the samples.
    pub fn recompute_mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Mass evaluated in Fourier space (Parseval).
    pub fn spectral_mass(&self) -> f64 {
        let mut buf = self.values.clone();
        self.grid.forward(&mut buf);
        buf.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx() / self.grid.points() as f64
    }

    /// `|u|²` samples.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn scaled(&self, factor: Complex64) -> Field {
        let values = self.values.iter().map(|v| v * factor).collect();
        Field::new(self.grid.clone(), values).expect("same length")
    }

    /// `⟨self, other⟩ = Σ conj(u) v dx`.
    pub fn inner(&self, other: &Field) -> Complex64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.dx()
    }

    /// `∫ |u|^p dx`.
    pub fn lp_power(&self, p: f64) -> f64 {
        self.values.iter().map(|v| v.norm().powf(p)).sum::<f64>() * self.grid.dx()
    }

    /// `‖u - v‖₂`.
    pub fn l2_distance(&self, other: &Field) -> f64 {
        (self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * self.grid.dx())
        .sqrt()
    }

    /// `‖u - v‖_{H¹} = (‖u - v‖₂² + ‖u' - v'‖₂²)^{1/2}`.
    pub fn h1_distance(&self, other: &Field) -> f64 {
        let diff: Vec<Complex64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        let diff = Field::new(self.grid.clone(), diff).expect("same length");
        let d = spectral_derivative(&diff);
        (diff.mass() + d.mass()).sqrt()
    }

    /// `‖u'‖₂²` via the spectral derivative.
    pub fn kinetic(&self) -> f64 {
        spectral_derivative(self).mass()
    }

    /// Translates the field by `shift` (new(x) = old(x - shift)) with a Fourier phase.
    pub fn translated(&self, shift: f64) -> Field {
        let nyq = self.grid.nyquist_index();
        let values = self.grid.apply_multiplier(&self.values, |j, k| {
            if j == nyq {
                Complex64::new((k * shift).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, -k * shift)
            }
        });
        Field::new(self.grid.clone(), values).expect("same length")
    }

    /// Mass centroid `∫ x |u|² / ∫ |u|²`.
    pub fn centroid(&self) -> f64 {
        let num: f64 = self
            .values
            .iter()
            .zip(self.grid.x())
            .map(|(v, x)| v.norm_sqr() * x)
            .sum::<f64>()
            * self.grid.dx();
        num / self.mass
    }
}

/// Spectral first derivative. The Nyquist coefficient is dropped, so the
/// result is exact for band-limited inputs.
pub fn spectral_derivative(u: &Field) -> Field {
    let grid = u.grid();
    let nyq = grid.nyquist_index();
    let values = grid.apply_multiplier(u.values(), |j, k| {
        if j == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k)
        }
    });
    Field::new(grid.clone(), values).expect("same length")
}

/// Spectral second derivative, multiplier `-k²`.
pub fn spectral_laplacian(u: &Field) -> Field {
    let grid = u.grid();
    let values = grid.apply_multiplier(u.values(), |_, k| Complex64::new(-k * k, 0.0));
    Field::new(grid.clone(), values).expect("same length")
}

/// Rescales `u` to unit mass.
pub fn normalize(u: &Field) -> Result<Field> {
    let mass = u.recompute_mass();
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::DegenerateField(format!(
            "cannot normalize a field with mass {mass}"
        )));
    }
    Ok(u.scaled(Complex64::new(1.0 / mass.sqrt(), 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gns::q0;

    fn default_grid() -> Arc<Grid> {
        Grid::new(20.0, 2048).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = default_grid();
        assert_eq!(g.dx() * g.points() as f64, 40.0);
        assert!((g.k_max() - PI / g.dx()).abs() < 1e-12);
        assert_eq!(g.k()[g.nyquist_index()].abs(), g.k_max());
        assert!(Grid::new(20.0, 8).is_err());
        assert!(Grid::new(20.0, 1000).is_err());
        assert!(Grid::new(-1.0, 64).is_err());
    }

    #[test]
    fn quadrature_cases() {
        let g = Grid::new(20.0, 1024).unwrap();
        let zero = vec![0.0; 1024];
        assert_eq!(quadrature(&zero, &g).unwrap(), 0.0);
        let gauss: Vec<f64> = g.x().iter().map(|x| (-x * x).exp()).collect();
        assert!((quadrature(&gauss, &g).unwrap() - PI.sqrt()).abs() < 1e-12);
        assert!(matches!(
            quadrature(&gauss[..10], &g),
            Err(Error::LengthMismatch { .. })
        ));

        let g = default_grid();
        let q2: Vec<f64> = g.x().iter().map(|&x| q0(x).powi(2)).collect();
        assert!((quadrature(&q2, &g).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn derivative_cases() {
        let g = default_grid();
        let l = g.half_width();
        let u = Field::from_real_fn(g.clone(), |x| (PI * x / l).sin());
        let du = spectral_derivative(&u);
        for (v, x) in du.values().iter().zip(g.x()) {
            assert!((v.re - PI / l * (PI * x / l).cos()).abs() < 1e-12);
            assert!(v.im.abs() < 1e-12);
        }
        let c = Field::from_real_fn(g.clone(), |_| 3.0);
        assert!(spectral_derivative(&c).values().iter().all(|v| v.norm() < 1e-12));

        let q = Field::from_real_fn(g, q0);
        assert!((q.kinetic() - PI * PI / 8.0).abs() < 1e-8);
    }

    #[test]
    fn normalize_cases() {
        let g = default_grid();
        let q = Field::from_real_fn(g.clone(), q0);
        let twice = q.scaled(Complex64::new(2.0, 0.0));
        let back = normalize(&twice).unwrap();
        assert!(back.l2_distance(&q) < 1e-12);
        assert!((back.mass() - 1.0).abs() < 1e-13);

        let unit = normalize(&q).unwrap();
        let again = normalize(&unit).unwrap();
        assert!(again.l2_distance(&unit) < 1e-14);

        let gauss = Field::from_real_fn(g.clone(), |x| (-x * x).exp());
        let n = normalize(&gauss).unwrap();
        let c = (PI / 2.0).powf(0.25);
        for (v, x) in n.values().iter().zip(g.x()) {
            assert!((v.re - (-x * x).exp() / c).abs() < 1e-12);
        }

        assert!(matches!(
            normalize(&Field::zeros(g)),
            Err(Error::DegenerateField(_))
        ));
    }

    #[test]
    fn translation_moves_centroid() {
        let g = default_grid();
        let u = normalize(&Field::from_real_fn(g, |x| (-x * x).exp())).unwrap();
        let t = u.translated(0.37);
        assert!((t.centroid() - 0.37).abs() < 1e-10);
        assert!((t.mass() - 1.0).abs() < 1e-12);
    }
}
