//! Helmholtz operators `(1 - ∂x²)^{±1}`, `P₂ = ∂x(1 - ∂x²)^{-1}`, and a direct
//! quadrature against the Green's kernel `G(x) = ½e^{-|x|}`.
//!
//! Production paths use Fourier multipliers. [`green_convolve_direct`] is an
//! independent O(n²) route kept as an oracle for the multipliers.

use rustfft::num_complex::Complex64;

use crate::grid::{Field, Grid};
use crate::quadrature::gauss_legendre;

const IMAGE_TAIL_TOL: f64 = 1e-15;

/// Half-width of the local interpolation stencil (10 nodes per cell).
const STENCIL_HALF: i64 = 5;
const GAUSS_POINTS: usize = 12;

/// Line kernel `G(x) = ½e^{-|x|}`.
pub fn green_kernel(x: f64) -> f64 {
    0.5 * (-x.abs()).exp()
}

/// `Σ_m G(x + 2Lm)`, summed until the remaining images fall below 1e-15.
pub fn periodized_green_kernel(x: f64, half_width: f64) -> f64 {
    let period = 2.0 * half_width;
    let mut s = x.rem_euclid(period);
    if s > half_width {
        s = period - s;
    }
    let ratio = (-period).exp();
    let mut sum = green_kernel(s);
    let mut m = 1.0;
    loop {
        let near = 0.5 * (-(period * m - s)).exp();
        let far = 0.5 * (-(period * m + s)).exp();
        sum += near + far;
        // remaining images form a geometric series with ratio e^{-2L}
        let tail = (near + far) * ratio / (1.0 - ratio);
        if tail < IMAGE_TAIL_TOL * sum.max(1e-300) || near == 0.0 {
            break;
        }
        m += 1.0;
    }
    sum
}

/// `(1 - ∂x²)^{-1} f`, Fourier multiplier `1/(1+k²)`.
pub fn helmholtz_inverse(f: &Field) -> Field {
    f.apply_multiplier(|k, _| Complex64::new(1.0 / (1.0 + k * k), 0.0))
}

/// `(1 - ∂x²) f`, Fourier multiplier `1+k²`.
pub fn helmholtz_forward(f: &Field) -> Field {
    f.apply_multiplier(|k, _| Complex64::new(1.0 + k * k, 0.0))
}

/// `∂x(1 - ∂x²)^{-1} f`, Fourier multiplier `ik/(1+k²)` with the Nyquist mode zeroed.
pub fn p2_apply(f: &Field) -> Field {
    let nyquist = f.grid().nyquist_index();
    f.apply_multiplier(|k, j| {
        if j == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k / (1.0 + k * k))
        }
    })
}

/// Convolution weights `W_m` with `(G_per ⋆ f)(x_i) ≈ Σ_m W_m f(x_i - m·dx)`.
///
/// Product integration: on every cell `[s_j, s_j + dx]` of `[0, 2L]` the shifted
/// data `s ↦ f(x - s)` is replaced by its degree-9 Lagrange interpolant on the
/// ten surrounding nodes (periodic wrap), and the kernel times interpolant is
/// integrated by Gauss-Legendre. The kernel kink lies on cell boundaries, so
/// each cell integrand is smooth.
fn convolution_weights(grid: &Grid) -> Vec<f64> {
    let n = grid.n();
    let dx = grid.dx();
    let l = grid.half_width();
    let offsets: Vec<i64> = (1 - STENCIL_HALF..=STENCIL_HALF).collect();
    let (gx, gw) = gauss_legendre(GAUSS_POINTS);
    // Gauss nodes on [0, 1] and Lagrange basis values there
    let t: Vec<f64> = gx.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let basis: Vec<Vec<f64>> = t
        .iter()
        .map(|&tq| {
            offsets
                .iter()
                .map(|&oi| {
                    offsets
                        .iter()
                        .filter(|&&oj| oj != oi)
                        .map(|&oj| (tq - oj as f64) / (oi - oj) as f64)
                        .product()
                })
                .collect()
        })
        .collect();
    let mut weights = vec![0.0; n];
    for j in 0..n {
        let s0 = j as f64 * dx;
        for (q, &tq) in t.iter().enumerate() {
            let kq = 0.5 * gw[q] * dx * periodized_green_kernel(s0 + tq * dx, l);
            for (i, &o) in offsets.iter().enumerate() {
                let m = (j as i64 + o).rem_euclid(n as i64) as usize;
                weights[m] += kq * basis[q][i];
            }
        }
    }
    weights
}

/// Direct quadrature of `∫ G_per(x - y) f(y) dy` over one period at every node.
pub fn green_convolve_direct(f: &Field) -> Field {
    let grid = f.grid();
    let n = grid.n();
    let weights = convolution_weights(grid);
    let values = f.values();
    let out = (0..n)
        .map(|i| {
            weights
                .iter()
                .enumerate()
                .map(|(m, w)| w * values[(i + n - m) % n])
                .sum()
        })
        .collect();
    Field::new(grid, out).expect("length preserved")
}
