//! Uniform periodic grid on `[-L, L)` and real-valued fields sampled on it.
//!
//! Spectral operations (derivatives, multipliers, dealiased products) go through
//! the complex FFT plans cached on the [`Grid`]. Fields are immutable values; every
//! operation returns a new field.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct GridInner {
    n: usize,
    half_width: f64,
    dx: f64,
    x: Vec<f64>,
    k: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Periodic mesh `x_j = -L + j·dx`, `dx = 2L/n`, with its wavenumber table.
///
/// Cloning is cheap; clones share the FFT plans.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.inner.n)
            .field("half_width", &self.inner.half_width)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n
                && self.inner.half_width.to_bits() == other.inner.half_width.to_bits())
    }
}

impl Grid {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two >= 16, got {n}"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half width L must be positive, got {half_width}"
            )));
        }
        let dx = 2.0 * half_width / n as f64;
        let x = (0..n).map(|j| -half_width + j as f64 * dx).collect();
        let scale = std::f64::consts::PI / half_width;
        let k = (0..n).map(|j| scale * signed_index(j, n) as f64).collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner {
                n,
                half_width,
                dx,
                x,
                k,
                forward,
                inverse,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Half width `L` of the periodic box.
    pub fn half_width(&self) -> f64 {
        self.inner.half_width
    }

    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    pub fn x(&self) -> &[f64] {
        &self.inner.x
    }

    /// Angular wavenumbers in FFT order; the Nyquist entry carries `-n/2`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.k
    }

    pub fn signed_index(&self, j: usize) -> i64 {
        signed_index(j, self.inner.n)
    }

    pub fn nyquist_index(&self) -> usize {
        self.inner.n / 2
    }

    /// Whether mode `j` survives the two-thirds dealiasing filter.
    pub fn is_resolved_mode(&self, j: usize) -> bool {
        3 * self.signed_index(j).unsigned_abs() < self.inner.n as u64
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.inner.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT normalized by `1/n`, keeping the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inner.inverse.process(&mut spectrum);
        let norm = 1.0 / self.inner.n as f64;
        spectrum.into_iter().map(|c| c.re * norm).collect()
    }
}

fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Builds a [`Grid`] with `n` points on `[-L, L)`.
pub fn make_grid(n: usize, half_width: f64) -> Result<Grid> {
    Grid::new(n, half_width)
}

/// Real samples of a function on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidArgument(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.n()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Pointwise product without dealiasing.
    pub fn pointwise_mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.forward(&self.values)
    }

    pub fn from_spectrum(grid: &Grid, spectrum: Vec<Complex64>) -> Field {
        Field {
            grid: grid.clone(),
            values: grid.inverse_real(spectrum),
        }
    }

    /// Applies the Fourier multiplier `symbol(k, j)` to every mode.
    pub fn apply_multiplier(&self, symbol: impl Fn(f64, usize) -> Complex64) -> Field {
        let k = self.grid.wavenumbers();
        let mut spec = self.spectrum();
        for (j, c) in spec.iter_mut().enumerate() {
            *c *= symbol(k[j], j);
        }
        Field::from_spectrum(&self.grid, spec)
    }

    /// Zeros the top third of the modes.
    pub fn dealiased(&self) -> Field {
        let grid = self.grid.clone();
        self.apply_multiplier(move |_, j| {
            if grid.is_resolved_mode(j) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

fn assert_same_grid(a: &Field, b: &Field) {
    assert!(a.grid == b.grid, "fields live on different grids");
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        assert_same_grid(self, rhs);
        self.zip_with(rhs, |a, b| a + b).expect("same grid")
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        assert_same_grid(self, rhs);
        self.zip_with(rhs, |a, b| a - b).expect("same grid")
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, c: f64) -> Field {
        self.map(|v| c * v)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|v| -v)
    }
}

/// Samples `f` at the grid nodes, rejecting non-finite values.
pub fn sample(grid: &Grid, f: impl Fn(f64) -> f64) -> Result<Field> {
    let mut values = Vec::with_capacity(grid.n());
    for &x in grid.x() {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteSample { x });
        }
        values.push(v);
    }
    Field::new(grid, values)
}

/// Spectral derivative of order 1, 2 or 3.
pub fn derivative(field: &Field, order: u32) -> Result<Field> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "derivative order must be 1, 2 or 3, got {order}"
        )));
    }
    Ok(spectral_derivative(field, order))
}

/// Spectral derivative of any order: multiplies mode `k` by `(ik)^order`.
///
/// The Nyquist mode is zeroed for odd orders.
pub fn spectral_derivative(field: &Field, order: u32) -> Field {
    if order == 0 {
        return field.clone();
    }
    let nyquist = field.grid().nyquist_index();
    let i_pow = match order % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    field.apply_multiplier(|k, j| {
        if order % 2 == 1 && j == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            i_pow * k.powi(order as i32)
        }
    })
}

/// Product of two fields with the two-thirds rule applied before and after
/// the pointwise multiplication.
pub fn dealiased_product(a: &Field, b: &Field) -> Result<Field> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(a.dealiased().pointwise_mul(&b.dealiased())?.dealiased())
}

/// Discrete `L^p` norm (rectangle rule); `p = f64::INFINITY` gives the grid max.
///
/// # Panics
/// If `p < 1` or `p` is NaN.
pub fn lp_norm(field: &Field, p: f64) -> f64 {
    assert!(p >= 1.0, "norm order must lie in [1, inf], got {p}");
    lp_of_values(field.values(), field.grid().dx(), p)
}

pub(crate) fn lp_of_values(values: &[f64], dx: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 1.0 {
        return values.iter().map(|v| v.abs()).sum::<f64>() * dx;
    }
    if p == 2.0 {
        return (values.iter().map(|v| v * v).sum::<f64>() * dx).sqrt();
    }
    // Scale by the max to keep |v|^p representable.
    let m = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = values.iter().map(|v| (v.abs() / m).powf(p)).sum();
    m * (s * dx).powf(1.0 / p)
}

/// `sqrt(||f||_2^2 + ||f_x||_2^2)`.
pub fn h1_norm(field: &Field) -> f64 {
    let l2 = lp_norm(field, 2.0);
    let dl2 = lp_norm(&spectral_derivative(field, 1), 2.0);
    l2.hypot(dl2)
}

/// Natural cubic spline through `(points, values)`, evaluated at the grid nodes.
pub fn interpolate_onto(points: &[f64], values: &[f64], grid: &Grid) -> Result<Field> {
    if points.len() != values.len() {
        return Err(Error::Interpolation(format!(
            "{} points but {} values",
            points.len(),
            values.len()
        )));
    }
    if points.len() < 2 {
        return Err(Error::Interpolation("need at least two points".into()));
    }
    if let Some(w) = points.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Interpolation(format!(
            "points not strictly increasing at index {}",
            w + 1
        )));
    }
    let lo = grid.x()[0];
    let hi = grid.x()[grid.n() - 1];
    let tol = 1e-12 * grid.half_width();
    if points[0] > lo + tol || points[points.len() - 1] < hi - tol {
        return Err(Error::Interpolation(format!(
            "points cover [{}, {}] but the grid spans [{lo}, {hi}]",
            points[0],
            points[points.len() - 1]
        )));
    }
    let spline = NaturalSpline::new(points, values);
    let samples = grid.x().iter().map(|&x| spline.eval(x)).collect();
    Field::new(grid, samples)
}

struct NaturalSpline<'a> {
    x: &'a [f64],
    y: &'a [f64],
    m: Vec<f64>,
}

impl<'a> NaturalSpline<'a> {
    fn new(x: &'a [f64], y: &'a [f64]) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the second-derivative system, m[0] = m[n-1] = 0.
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let a = h0 / 6.0;
                let b = (h0 + h1) / 3.0;
                let cc = h1 / 6.0;
                let r = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
                let denom = b - a * c[i - 1];
                c[i] = cc / denom;
                d[i] = (r - a * d[i - 1]) / denom;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Self { x, y, m }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}
