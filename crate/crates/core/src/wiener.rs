//! Brownian paths on `[0, 1]` and the stochastic transform
//! `T(ψ) = ∫ ψ(s) dz(s)` with its isometry `E|T(ψ)|² = ∫|ψ|² ds`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stats::{domain, MeanEstimate, RngStream};

/// Smallest allowed grid exponent.
pub const MIN_EXPONENT: u32 = 6;
const OFF_GRID_TOL: f64 = 1e-9;

/// Dyadic grid `s_j = j / 2^p`, `j = 0..=2^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicGrid {
    p: u32,
}

impl DyadicGrid {
    pub fn new(p: u32) -> Result<Self> {
        if !(MIN_EXPONENT..=24).contains(&p) {
            return Err(Error::param("p", format!("grid exponent {p} outside {MIN_EXPONENT}..=24")));
        }
        Ok(Self { p })
    }

    pub fn exponent(&self) -> u32 {
        self.p
    }

    pub fn steps(&self) -> usize {
        1 << self.p
    }

    pub fn ds(&self) -> f64 {
        1.0 / self.steps() as f64
    }

    pub fn s(&self, j: usize) -> f64 {
        j as f64 * self.ds()
    }

    /// Index of `s`, which must lie on the grid.
    pub fn index(&self, s: f64) -> Result<usize> {
        let f = s * self.steps() as f64;
        let j = f.round();
        if !s.is_finite() || (f - j).abs() > OFF_GRID_TOL || j < 0.0 || j > self.steps() as f64 {
            return Err(Error::OffGrid(s));
        }
        Ok(j as usize)
    }
}

/// A real Brownian path sampled on a dyadic grid, `x(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub grid: DyadicGrid,
    pub values: Vec<f64>,
}

impl BrownianPath {
    pub fn at(&self, s: f64) -> Result<f64> {
        Ok(self.values[self.grid.index(s)?])
    }
}

/// `z = (x + i y) / √2` from two independent Brownian paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBrownianPath {
    pub grid: DyadicGrid,
    pub values: Vec<Complex64>,
}

/// `ψ(s_j)` on a dyadic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub grid: DyadicGrid,
    pub values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: DyadicGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.steps() + 1 {
            return Err(Error::GridMismatch(format!(
                "{} samples for {} grid points",
                values.len(),
                grid.steps() + 1
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("sampled function"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: DyadicGrid, f: F) -> Result<Self> {
        Self::new(grid, (0..=grid.steps()).map(|j| f(grid.s(j))).collect())
    }

    /// `∫₀¹ |ψ|² ds` by the left-endpoint rule.
    pub fn norm_sqr(&self) -> f64 {
        let n = self.grid.steps();
        self.values[..n].iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.ds()
    }

    /// `⟨self, other⟩ = ∫ conj(ψ₁) ψ₂ ds`, left endpoint.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("functions on different grids".into()));
        }
        let n = self.grid.steps();
        Ok(self.values[..n]
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.ds())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

/// Trigonometric polynomial `Σ_{|m|≤K} c_m e^{2πims}` with standard complex
/// Gaussian coefficients, drawn from stream `id` of `seed`.
pub fn random_band_limited(grid: DyadicGrid, max_mode: u32, seed: u64, id: u64) -> Result<SampledFunction> {
    let mut rng = RngStream::in_domain(seed, domain::FUNCTIONS, id).rng();
    let modes: Vec<(f64, Complex64)> = (-(max_mode as i64)..=max_mode as i64)
        .map(|m| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            (m as f64, Complex64::new(re, im) / std::f64::consts::SQRT_2)
        })
        .collect();
    SampledFunction::from_fn(grid, |s| {
        modes
            .iter()
            .map(|(m, c)| c * Complex64::from_polar(1.0, std::f64::consts::TAU * m * s))
            .sum()
    })
}

fn increments(grid: DyadicGrid, stream: RngStream) -> impl Iterator<Item = f64> {
    let mut rng = stream.rng();
    let sd = grid.ds().sqrt();
    (0..grid.steps()).map(move |_| sd * rng.sample::<f64, _>(StandardNormal))
}

fn path_from(grid: DyadicGrid, stream: RngStream) -> BrownianPath {
    let mut values = Vec::with_capacity(grid.steps() + 1);
    values.push(0.0);
    let mut x = 0.0;
    for dx in increments(grid, stream) {
        x += dx;
        values.push(x);
    }
    BrownianPath { grid, values }
}

/// Path `i` uses stream `i` of the `x` domain of `seed`.
pub fn sample_brownian(p: u32, n_paths: usize, seed: u64) -> Result<Vec<BrownianPath>> {
    let grid = DyadicGrid::new(p)?;
    if n_paths == 0 {
        return Err(Error::param("n_paths", "must be at least 1"));
    }
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| path_from(grid, RngStream::in_domain(seed, domain::PATHS_X, i as u64)))
        .collect())
}

/// Complex path `i`: real part from stream `i` of the `x` domain, imaginary
/// part from stream `i` of the `y` domain.
pub fn complex_path(grid: DyadicGrid, seed: u64, index: u64) -> ComplexBrownianPath {
    let x = path_from(grid, RngStream::in_domain(seed, domain::PATHS_X, index));
    let y = path_from(grid, RngStream::in_domain(seed, domain::PATHS_Y, index));
    let values = x
        .values
        .iter()
        .zip(&y.values)
        .map(|(a, b)| Complex64::new(*a, *b) / std::f64::consts::SQRT_2)
        .collect();
    ComplexBrownianPath { grid, values }
}

pub fn sample_complex_brownian(p: u32, n_paths: usize, seed: u64) -> Result<Vec<ComplexBrownianPath>> {
    let grid = DyadicGrid::new(p)?;
    if n_paths == 0 {
        return Err(Error::param("n_paths", "must be at least 1"));
    }
    Ok((0..n_paths)
        .into_par_iter()
        .map(|i| complex_path(grid, seed, i as u64))
        .collect())
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl From<MeanEstimate> for Estimate {
    fn from(m: MeanEstimate) -> Self {
        Self {
            value: m.mean,
            stderr: m.stderr(),
        }
    }
}

/// `E[x(s) x(s')]` over `paths`; both points must be on the grid.
pub fn covariance_estimate(paths: &[BrownianPath], s: f64, s_prime: f64) -> Result<Estimate> {
    if paths.len() < 100 {
        return Err(Error::param("paths", format!("{} < 100 paths", paths.len())));
    }
    let grid = paths[0].grid;
    if paths.iter().any(|p| p.grid != grid) {
        return Err(Error::GridMismatch("paths on different grids".into()));
    }
    let (i, j) = (grid.index(s)?, grid.index(s_prime)?);
    let products: Vec<f64> = paths.iter().map(|p| p.values[i] * p.values[j]).collect();
    Ok(MeanEstimate::from_slice(&products).into())
}

/// Left-endpoint sum `Σ_j ψ(s_j) (z(s_{j+1}) - z(s_j))`.
pub fn stochastic_transform(psi: &SampledFunction, z: &ComplexBrownianPath) -> Result<Complex64> {
    if psi.grid != z.grid {
        return Err(Error::GridMismatch("function and path on different grids".into()));
    }
    Ok(psi
        .values
        .iter()
        .zip(z.values.windows(2))
        .map(|(f, w)| f * (w[1] - w[0]))
        .sum())
}

/// Transforms of several functions along one path generated on the fly.
fn transforms_along(functions: &[&SampledFunction], grid: DyadicGrid, seed: u64, index: u64) -> Vec<Complex64> {
    let dx = increments(grid, RngStream::in_domain(seed, domain::PATHS_X, index));
    let dy = increments(grid, RngStream::in_domain(seed, domain::PATHS_Y, index));
    let mut out = vec![Complex64::new(0.0, 0.0); functions.len()];
    for (j, (a, b)) in dx.zip(dy).enumerate() {
        let dz = Complex64::new(a, b) / std::f64::consts::SQRT_2;
        for (o, f) in out.iter_mut().zip(functions) {
            *o += f.values[j] * dz;
        }
    }
    out
}

/// Quadrature and Monte Carlo sides of `∫|ψ|² ds = E|T(ψ)|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitarityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

/// Paths are generated one at a time from their own streams and never
/// stored; path `i` is the same path [`complex_path`] returns.
pub fn unitarity_check(psi: &SampledFunction, n_paths: usize, seed: u64) -> Result<UnitarityReport> {
    if n_paths < 1000 {
        return Err(Error::param("n_paths", format!("{n_paths} < 1000")));
    }
    let squares: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| transforms_along(&[psi], psi.grid, seed, i as u64)[0].norm_sqr())
        .collect();
    let est = MeanEstimate::from_slice(&squares);
    Ok(UnitarityReport {
        lhs: psi.norm_sqr(),
        rhs: est.mean,
        stderr: est.stderr(),
        n_paths,
    })
}

/// [`unitarity_check`] for several functions sharing the same paths, so the
/// paths are generated once.
pub fn unitarity_batch(functions: &[SampledFunction], n_paths: usize, seed: u64) -> Result<Vec<UnitarityReport>> {
    let first = functions.first().ok_or(Error::Empty("functions"))?;
    if functions.iter().any(|f| f.grid != first.grid) {
        return Err(Error::GridMismatch("functions on different grids".into()));
    }
    if n_paths < 1000 {
        return Err(Error::param("n_paths", format!("{n_paths} < 1000")));
    }
    let refs: Vec<&SampledFunction> = functions.iter().collect();
    let squares: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            transforms_along(&refs, first.grid, seed, i as u64)
                .iter()
                .map(|t| t.norm_sqr())
                .collect()
        })
        .collect();
    Ok(functions
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let mut est = MeanEstimate::default();
            squares.iter().for_each(|row| est.push(row[k]));
            UnitarityReport {
                lhs: f.norm_sqr(),
                rhs: est.mean,
                stderr: est.stderr(),
                n_paths,
            }
        })
        .collect())
}

/// `E[T(ψ₁) conj(T(ψ₂))]` with per-component standard errors; the isometry
/// gives `∫ ψ₁ conj(ψ₂) ds`.
pub fn cross_moment(psi1: &SampledFunction, psi2: &SampledFunction, n_paths: usize, seed: u64) -> Result<(Complex64, Complex64)> {
    if psi1.grid != psi2.grid {
        return Err(Error::GridMismatch("functions on different grids".into()));
    }
    if n_paths < 2 {
        return Err(Error::param("n_paths", "need at least 2 paths"));
    }
    let products: Vec<Complex64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let t = transforms_along(&[psi1, psi2], psi1.grid, seed, i as u64);
            t[0] * t[1].conj()
        })
        .collect();
    let re = MeanEstimate::from_slice(&products.iter().map(|c| c.re).collect::<Vec<_>>());
    let im = MeanEstimate::from_slice(&products.iter().map(|c| c.im).collect::<Vec<_>>());
    Ok((Complex64::new(re.mean, im.mean), Complex64::new(re.stderr(), im.stderr())))
}
