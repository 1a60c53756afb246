//! Thin FFT helpers shared by the spectral operators.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::grid::Grid1D;

pub fn forward(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

/// Inverse transform including the `1/n` factor.
pub fn inverse(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(buf.len()).process(buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
}

/// Multiplies every Fourier mode by `multiplier(k)`.
pub fn apply_multiplier<F>(grid: &Grid1D, values: &[Complex64], multiplier: F) -> Vec<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let mut buf = values.to_vec();
    forward(&mut buf);
    for (v, k) in buf.iter_mut().zip(grid.wavenumbers()) {
        *v *= multiplier(k);
    }
    inverse(&mut buf);
    buf
}

/// `-i d/dx` on the periodic grid. The Nyquist mode is dropped so the
/// discrete operator stays hermitian.
pub fn momentum(grid: &Grid1D, values: &[Complex64]) -> Vec<Complex64> {
    let nyquist = grid.len() / 2;
    let mut buf = values.to_vec();
    forward(&mut buf);
    for (i, (v, k)) in buf.iter_mut().zip(grid.wavenumbers()).enumerate() {
        if i == nyquist {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= k;
        }
    }
    inverse(&mut buf);
    buf
}

/// Band-limited translation: returns `f(x - shift)`.
pub fn translate(grid: &Grid1D, values: &[Complex64], shift: f64) -> Vec<Complex64> {
    apply_multiplier(grid, values, |k| Complex64::from_polar(1.0, -k * shift))
}

/// Left-Riemann inner product `sum conj(a) b dx`.
pub fn inner(a: &[Complex64], b: &[Complex64], dx: f64) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * dx
}

pub fn norm_sqr(a: &[Complex64], dx: f64) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: &Grid1D, c: f64) -> Vec<Complex64> {
        grid.points()
            .map(|x| Complex64::new((-(x - c) * (x - c)).exp(), 0.0))
            .collect()
    }

    #[test]
    fn translation_matches_shifted_sample() {
        let g = Grid1D::new(-16.0, 16.0, 256).unwrap();
        let f = gaussian(&g, 0.0);
        let shifted = translate(&g, &f, 1.3);
        let want = gaussian(&g, 1.3);
        for (a, b) in shifted.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn momentum_of_plane_wave() {
        let g = Grid1D::new(0.0, 2.0 * std::f64::consts::PI, 64).unwrap();
        let f: Vec<_> = g.points().map(|x| Complex64::from_polar(1.0, 3.0 * x)).collect();
        let p = momentum(&g, &f);
        for (a, b) in p.iter().zip(&f) {
            assert!((a - 3.0 * b).norm() < 1e-12);
        }
    }
}
