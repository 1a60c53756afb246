//! The N-trial stochastic wave function.
//!
//! Each trial places `n` solitons at random centers with random overall
//! phases. The one-particle auxiliary functions of all trials are summed
//! coherently into `Ψ_N(x_1..x_n) = N^{-1/2} Σ_j Π_k φ_j^{(k)}(x_k)`, whose
//! coarse-grained modulus squared is compared against the center density.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::soliton::{pair_moments, FieldPair, SolitonProfile};
use crate::spectral;
use crate::stats::{domain, MeanEstimate, PiecewiseCdf, RngStream};

/// Largest configuration-space grid `build_psi_n` will allocate.
pub const MAX_CONFIG_POINTS: usize = 1 << 24;
/// Overlap threshold standing in for disjoint supports.
pub const OVERLAP_THRESHOLD: f64 = 1e-6;
const MAX_ATTEMPTS: usize = 1000;

/// Probability density of soliton centers, piecewise constant on the
/// cells of a one-particle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterDistribution {
    grid: Grid1D,
    density: Vec<f64>,
    cdf: PiecewiseCdf,
}

impl CenterDistribution {
    /// Normalizes `density` to unit integral.
    pub fn from_density(grid: Grid1D, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} density samples on a {}-point grid",
                density.len(),
                grid.len()
            )));
        }
        if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::param("density", "must be finite and non-negative"));
        }
        let dx = grid.dx();
        let total: f64 = density.iter().sum::<f64>() * dx;
        if total <= 0.0 {
            return Err(Error::param("density", "has zero mass"));
        }
        let density: Vec<f64> = density.iter().map(|d| d / total).collect();
        let cdf = PiecewiseCdf::from_masses(grid.x_min() - 0.5 * dx, dx, &density)?;
        Ok(Self { grid, density, cdf })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Grid1D, f: F) -> Result<Self> {
        Self::from_density(grid, grid.points().map(f).collect())
    }

    pub fn uniform(grid: Grid1D, lo: f64, hi: f64) -> Result<Self> {
        Self::from_fn(grid, |x| if x >= lo && x <= hi { 1.0 } else { 0.0 })
    }

    pub fn gaussian(grid: Grid1D, mean: f64, sd: f64) -> Result<Self> {
        Self::mixture(grid, &[(1.0, mean, sd)])
    }

    /// Weighted Gaussian mixture `(weight, mean, sd)`.
    pub fn mixture(grid: Grid1D, components: &[(f64, f64, f64)]) -> Result<Self> {
        if components.iter().any(|(w, _, s)| *w < 0.0 || *s <= 0.0) {
            return Err(Error::param("components", "weights must be >= 0 and widths > 0"));
        }
        Self::from_fn(grid, |x| {
            components
                .iter()
                .map(|(w, m, s)| w * (-0.5 * ((x - m) / s).powi(2)).exp() / ((2.0 * PI).sqrt() * s))
                .sum()
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    /// Density at `x` (value of the cell containing it).
    pub fn value_at(&self, x: f64) -> f64 {
        self.grid.nearest_index(x).map_or(0.0, |i| self.density[i])
    }

    /// Inverse CDF, linear inside each cell.
    pub fn quantile(&self, u: f64) -> f64 {
        self.cdf.quantile(u)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Probability of the grid cells `[first, first + len)`.
    pub fn mass_of_points(&self, first: usize, len: usize) -> f64 {
        self.cdf.mass_of_cells(first, len)
    }

    pub fn mean(&self) -> f64 {
        self.grid.points().zip(&self.density).map(|(x, d)| x * d).sum::<f64>() * self.grid.dx()
    }
}

/// One particle of a trial: its field pair on a window of the host grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleField {
    /// Host-grid index of the first window sample.
    pub offset: usize,
    pub pair: FieldPair,
    aux: Vec<Complex64>,
}

impl ParticleField {
    pub fn new(offset: usize, pair: FieldPair) -> Self {
        let aux = pair.aux();
        Self { offset, pair, aux }
    }

    /// Auxiliary function on the window.
    pub fn aux(&self) -> &[Complex64] {
        &self.aux
    }

    fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.aux.len()
    }

    /// Auxiliary function embedded into a full host-grid vector.
    pub fn embedded(&self, n_points: usize) -> Vec<Complex64> {
        let mut full = vec![Complex64::new(0.0, 0.0); n_points];
        full[self.range()].copy_from_slice(&self.aux);
        full
    }
}

/// One observation: centers, phases and per-particle fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub centers: Vec<f64>,
    pub phases: Vec<f64>,
    pub particles: Vec<ParticleField>,
}

impl Trial {
    pub fn new(centers: Vec<f64>, phases: Vec<f64>, particles: Vec<ParticleField>) -> Result<Self> {
        if centers.len() != phases.len() || centers.len() != particles.len() || centers.is_empty() {
            return Err(Error::param(
                "trial",
                "centers, phases and fields must have the same nonzero length",
            ));
        }
        Ok(Self {
            centers,
            phases,
            particles,
        })
    }

    /// Solitons of `profile` at `centers` with overall phases `phases`,
    /// sampled on `grid` over a window of the profile's support.
    pub fn from_profile(profile: &SolitonProfile, grid: &Grid1D, centers: &[f64], phases: &[f64]) -> Result<Self> {
        let radius = profile.support_radius(0.0);
        let dx = grid.dx();
        let particles = centers
            .iter()
            .zip(phases)
            .map(|(&c, &alpha)| {
                let first = (((c - radius) - grid.x_min()) / dx).floor().max(0.0) as usize;
                let last = ((((c + radius) - grid.x_min()) / dx).ceil().max(0.0) as usize).min(grid.len() - 1);
                if first > last {
                    return Err(Error::param("centers", format!("soliton at {c} lies outside the grid")));
                }
                let pair = profile.quantum_pair((first..=last).map(|i| grid.x(i)), dx, c, alpha)?;
                Ok(ParticleField::new(first, pair))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(centers.to_vec(), phases.to_vec(), particles)
    }

    pub fn n_particles(&self) -> usize {
        self.particles.len()
    }

    /// Largest `∫|φ^{(k)}||φ^{(k')}| dx` over particle pairs.
    pub fn max_overlap(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, pa) in self.particles.iter().enumerate() {
            for pb in &self.particles[a + 1..] {
                let lo = pa.offset.max(pb.offset);
                let hi = pa.range().end.min(pb.range().end);
                let s: f64 = (lo..hi)
                    .map(|i| pa.aux[i - pa.offset].norm() * pb.aux[i - pb.offset].norm())
                    .sum();
                worst = worst.max(s * pa.pair.dx);
            }
        }
        worst
    }
}

/// Draws `n_trials` trials with centers i.i.d. from `dist` and phases
/// uniform on `[0, 2π)`. Trial `j` uses its own random stream, so results do
/// not depend on the thread count. Multi-particle trials are redrawn until
/// the particles' overlap is below [`OVERLAP_THRESHOLD`].
pub fn sample_trials(
    dist: &CenterDistribution,
    profile: &SolitonProfile,
    n_particles: usize,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<Trial>> {
    if n_particles == 0 {
        return Err(Error::param("n_particles", "must be at least 1"));
    }
    if n_trials == 0 {
        return Err(Error::param("n_trials", "must be at least 1"));
    }
    (0..n_trials)
        .into_par_iter()
        .map(|j| {
            let mut rng = RngStream::in_domain(seed, domain::TRIALS, j as u64).rng();
            for _ in 0..MAX_ATTEMPTS {
                let centers: Vec<f64> = (0..n_particles).map(|_| dist.sample(&mut rng)).collect();
                let phases: Vec<f64> = (0..n_particles).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
                let trial = Trial::from_profile(profile, dist.grid(), &centers, &phases)?;
                if n_particles == 1 || trial.max_overlap() < OVERLAP_THRESHOLD {
                    return Ok(trial);
                }
            }
            Err(Error::DensityTooConcentrated)
        })
        .collect()
}

/// `Ψ_N` sampled on the tensor grid `grid^n`, particle 1 on the slowest axis.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticWaveFunction {
    pub n_particles: usize,
    pub n_trials: usize,
    pub grid: Grid1D,
    pub values: Vec<Complex64>,
}

impl StochasticWaveFunction {
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx().powi(self.n_particles as i32)
    }

    /// Value at the multi-index `idx`.
    pub fn at(&self, idx: &[usize]) -> Complex64 {
        let n = self.grid.len();
        self.values[idx.iter().fold(0, |acc, &i| acc * n + i)]
    }
}

/// Evaluates `Ψ_N = N^{-1/2} Σ_j Π_k φ_j^{(k)}(x_k)` on `grid^n`.
///
/// Trials are added serially in index order.
pub fn build_psi_n(trials: &[Trial], grid: &Grid1D) -> Result<StochasticWaveFunction> {
    let first = trials.first().ok_or(Error::Empty("trials"))?;
    let n = first.n_particles();
    if trials.iter().any(|t| t.n_particles() != n) {
        return Err(Error::param("trials", "all trials must have the same particle count"));
    }
    let n_points = grid.len();
    let total = n_points
        .checked_pow(n as u32)
        .filter(|&t| t <= MAX_CONFIG_POINTS)
        .ok_or_else(|| {
            Error::param(
                "n_particles",
                format!("{n_points}^{n} grid points exceed {MAX_CONFIG_POINTS}"),
            )
        })?;
    if trials.iter().flat_map(|t| &t.particles).any(|p| p.range().end > n_points) {
        return Err(Error::GridMismatch("particle window exceeds the grid".into()));
    }
    let mut values = vec![Complex64::new(0.0, 0.0); total];
    for trial in trials {
        add_product(&mut values, n_points, &trial.particles, 0, Complex64::new(1.0, 0.0));
    }
    let scale = 1.0 / (trials.len() as f64).sqrt();
    values.iter_mut().for_each(|v| *v *= scale);
    Ok(StochasticWaveFunction {
        n_particles: n,
        n_trials: trials.len(),
        grid: *grid,
        values,
    })
}

/// Adds `factor * Π_k aux_k(x_k)` into the row-major tensor starting at
/// flat prefix `prefix`.
fn add_product(values: &mut [Complex64], n_points: usize, particles: &[ParticleField], prefix: usize, factor: Complex64) {
    let (head, rest) = particles.split_first().expect("non-empty");
    for (i, a) in head.range().zip(&head.aux) {
        let idx = prefix * n_points + i;
        if rest.is_empty() {
            values[idx] += factor * a;
        } else {
            add_product(values, n_points, rest, idx, factor * a);
        }
    }
}

/// Coarse-graining cell: `cell_size` is `Δ∨`, `v0` the proper size `l0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseGrainSpec {
    cell_size: f64,
    v0: f64,
}

impl CoarseGrainSpec {
    pub fn new(cell_size: f64, v0: f64) -> Result<Self> {
        if !(cell_size.is_finite() && v0.is_finite() && v0 > 0.0) {
            return Err(Error::param("v0", "must be finite and positive"));
        }
        if cell_size < 10.0 * v0 * (1.0 - 1e-12) {
            return Err(Error::param(
                "cell_size",
                format!("{cell_size} is below 10 v0 = {}", 10.0 * v0),
            ));
        }
        Ok(Self { cell_size, v0 })
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    /// Grid points per cell; the cell must be a whole number of at least 8 spacings.
    pub fn points_per_cell(&self, grid: &Grid1D) -> Result<usize> {
        let ratio = self.cell_size / grid.dx();
        let k = ratio.round();
        if (ratio - k).abs() > 1e-9 * ratio {
            return Err(Error::param(
                "cell_size",
                format!("{} is not a multiple of dx = {}", self.cell_size, grid.dx()),
            ));
        }
        if k < 8.0 {
            return Err(Error::param("cell_size", format!("cell holds {k} grid points, need 8")));
        }
        Ok(k as usize)
    }
}

/// Cell-averaged `|Ψ_N|²` on the tensor of one-particle cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseDensity {
    pub n_particles: usize,
    pub cell_size: f64,
    pub points_per_cell: usize,
    /// One-particle cell centers.
    pub centers: Vec<f64>,
    /// `ρ_N` per cell, row-major over `centers^n`.
    pub values: Vec<f64>,
}

impl CoarseDensity {
    /// `ρ_N` on the diagonal cells `(c, c, ..., c)`.
    pub fn diagonal(&self) -> Vec<f64> {
        let m = self.centers.len();
        let step: usize = (0..self.n_particles).map(|p| m.pow(p as u32)).sum();
        (0..m).map(|c| self.values[c * step]).collect()
    }

    /// `ρ_N Δ∨^n`, the probability mass of each cell.
    pub fn masses(&self) -> Vec<f64> {
        let vol = self.cell_size.powi(self.n_particles as i32);
        self.values.iter().map(|r| r * vol).collect()
    }
}

/// `ρ_N(cell) = Δ∨^{-n} ∫_cell |Ψ_N|² d^n x`. Cells start at the first grid
/// point; a partial cell at the end of the grid is dropped.
pub fn coarse_density(psi: &StochasticWaveFunction, spec: &CoarseGrainSpec) -> Result<CoarseDensity> {
    let grid = psi.grid;
    let k = spec.points_per_cell(&grid)?;
    let n_points = grid.len();
    let m = n_points / k;
    let n = psi.n_particles;
    let dx = grid.dx();
    let mut values = vec![0.0; m.pow(n as u32)];
    for (flat, v) in psi.values.iter().enumerate() {
        let mut rem = flat;
        let mut cell = 0;
        let mut stride = 1;
        let mut inside = true;
        for _ in 0..n {
            let i = rem % n_points;
            rem /= n_points;
            let c = i / k;
            if c >= m {
                inside = false;
                break;
            }
            cell += c * stride;
            stride *= m;
        }
        if inside {
            values[cell] += v.norm_sqr();
        }
    }
    let scale = dx.powi(n as i32) / spec.cell_size.powi(n as i32);
    values.iter_mut().for_each(|v| *v *= scale);
    let centers = (0..m).map(|c| grid.x(c * k) + 0.5 * (k - 1) as f64 * dx).collect();
    Ok(CoarseDensity {
        n_particles: n,
        cell_size: spec.cell_size,
        points_per_cell: k,
        centers,
        values,
    })
}

/// Generator `M̂_A` of a one-particle observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableGenerator {
    /// Multiplication by `x`.
    Position,
    /// `-i d/dx`, by spectral differentiation.
    Momentum,
}

impl ObservableGenerator {
    /// Applies the generator to a function on the full periodic grid.
    pub fn apply(&self, grid: &Grid1D, values: &[Complex64]) -> Vec<Complex64> {
        match self {
            Self::Position => values.iter().zip(grid.points()).map(|(v, x)| v * x).collect(),
            Self::Momentum => spectral::momentum(grid, values),
        }
    }
}

/// A Monte Carlo average with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    /// Largest imaginary residue seen in a per-trial value.
    pub max_imag: f64,
}

const HERMITIAN_TOL: f64 = 1e-8;

/// `E(A) = N^{-1} Σ_j Σ_k ⟨φ_j^{(k)}, M̂ φ_j^{(k)}⟩`.
pub fn expectation_field(trials: &[Trial], generator: ObservableGenerator, grid: &Grid1D) -> Result<Expectation> {
    if trials.is_empty() {
        return Err(Error::Empty("trials"));
    }
    let n_points = grid.len();
    let dx = grid.dx();
    let per_trial: Vec<Complex64> = trials
        .par_iter()
        .map(|t| {
            t.particles
                .iter()
                .map(|p| match generator {
                    ObservableGenerator::Position => p
                        .range()
                        .zip(&p.aux)
                        .map(|(i, a)| a.norm_sqr() * grid.x(i))
                        .sum::<f64>()
                        .into(),
                    ObservableGenerator::Momentum => {
                        let full = p.embedded(n_points);
                        spectral::inner(&full, &generator.apply(grid, &full), 1.0)
                    }
                })
                .sum::<Complex64>()
                * dx
        })
        .collect();
    let max_imag = per_trial.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if max_imag > HERMITIAN_TOL {
        return Err(Error::NotHermitian(max_imag));
    }
    let mut est = MeanEstimate::default();
    per_trial.iter().for_each(|v| est.push(v.re));
    Ok(Expectation {
        value: est.mean,
        stderr: est.stderr(),
        n: est.n,
        max_imag,
    })
}

/// Applies `Σ_k M̂^{(k)}` to `Ψ_N`.
fn apply_total(psi: &StochasticWaveFunction, generator: ObservableGenerator) -> Vec<Complex64> {
    let n_points = psi.grid.len();
    let n = psi.n_particles;
    let mut out = vec![Complex64::new(0.0, 0.0); psi.values.len()];
    let mut line = vec![Complex64::new(0.0, 0.0); n_points];
    for axis in 0..n {
        let stride = n_points.pow((n - 1 - axis) as u32);
        let block = stride * n_points;
        for outer in (0..psi.values.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (i, l) in line.iter_mut().enumerate() {
                    *l = psi.values[base + i * stride];
                }
                let applied = generator.apply(&psi.grid, &line);
                for (i, a) in applied.iter().enumerate() {
                    out[base + i * stride] += a;
                }
            }
        }
    }
    out
}

/// `⟨Ψ_N|Â|Ψ_N⟩ / ⟨Ψ_N|Ψ_N⟩` with `Â = Σ_k M̂^{(k)}`.
pub fn expectation_operator(psi: &StochasticWaveFunction, generator: ObservableGenerator) -> Result<f64> {
    let den: f64 = psi.values.iter().map(|v| v.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::NullField);
    }
    let applied = apply_total(psi, generator);
    let num = spectral::inner(&psi.values, &applied, 1.0);
    if num.im.abs() > HERMITIAN_TOL * den.max(num.re.abs()) {
        return Err(Error::NotHermitian(num.im / den));
    }
    Ok(num.re / den)
}

/// Per-phase amplitude factors and `ν` of one-quantum solitons of
/// `profile` on `grid`, for pointwise evaluation of auxiliary functions.
///
/// The raw aux norm is a quadratic form in `(cos α, sin α)`, so three
/// phases determine it for all `α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxScale {
    pub nu: f64,
    norms: [f64; 3],
}

impl AuxScale {
    pub fn new(profile: &SolitonProfile, grid: &Grid1D) -> Result<Self> {
        let center = 0.5 * (grid.x_min() + grid.x_max());
        let nu = profile.quantum_nu();
        let norm = |alpha: f64| {
            let (phi, pi) = profile.real_field(grid.points(), center, alpha);
            let (p, q, c) = pair_moments(&phi, &pi, grid.dx());
            0.5 * (nu * nu * p + q / (nu * nu)) + c
        };
        let norms = [norm(0.0), norm(0.5 * PI), norm(0.25 * PI)];
        if norms.iter().any(|n| *n <= 0.0) {
            return Err(Error::NullField);
        }
        Ok(Self { nu, norms })
    }

    /// Factor making the soliton with phase `alpha` unit-normalized.
    pub fn amplitude(&self, alpha: f64) -> f64 {
        let [a, b, h] = self.norms;
        let (s, c) = alpha.sin_cos();
        1.0 / (a * c * c + b * s * s + (2.0 * h - a - b) * s * c).sqrt()
    }
}

/// Auxiliary function of a one-quantum soliton at `center` with phase
/// `phase`, at `x`.
pub fn aux_at(profile: &SolitonProfile, scale: &AuxScale, center: f64, phase: f64, x: f64) -> Complex64 {
    let (phi, pi) = profile.real_field(std::iter::once(x), center, phase);
    scale.amplitude(phase) * (scale.nu * phi[0] + Complex64::new(0.0, 1.0) * pi[0] / scale.nu) / SQRT_2
}

/// Replica samples of `Ψ_N` at probe points.
#[derive(Debug, Clone, PartialEq)]
pub struct CltSamples {
    pub probes: Vec<f64>,
    /// `values[p][r]`: replica `r` at probe `p`.
    pub values: Vec<Vec<Complex64>>,
}

impl CltSamples {
    pub fn mean_intensity(&self, probe: usize) -> MeanEstimate {
        MeanEstimate::from_slice(&self.values[probe].iter().map(|v| v.norm_sqr()).collect::<Vec<_>>())
    }
}

/// `R` independent one-particle ensembles of `N` trials each, returning
/// `Ψ_N` at every probe point for every replica.
pub fn clt_replicas(
    dist: &CenterDistribution,
    profile: &SolitonProfile,
    n_trials: usize,
    replicas: usize,
    probes: &[f64],
    seed: u64,
) -> Result<CltSamples> {
    if replicas < 500 {
        return Err(Error::param("replicas", format!("{replicas} < 500")));
    }
    if n_trials == 0 {
        return Err(Error::param("n_trials", "must be at least 1"));
    }
    let threshold = 0.01 * dist.max_density();
    if let Some(&bad) = probes.iter().find(|&&x| dist.value_at(x) <= threshold) {
        return Err(Error::param(
            "probe_points",
            format!("density at {bad} is below 1% of its maximum"),
        ));
    }
    let aux_scale = AuxScale::new(profile, dist.grid())?;
    let scale = 1.0 / (n_trials as f64).sqrt();
    let per_replica: Vec<Vec<Complex64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::in_domain(seed, domain::REPLICAS, r as u64).rng();
            let mut acc = vec![Complex64::new(0.0, 0.0); probes.len()];
            for _ in 0..n_trials {
                let c = dist.sample(&mut rng);
                let alpha = rng.random::<f64>() * 2.0 * PI;
                for (a, &x) in acc.iter_mut().zip(probes) {
                    *a += aux_at(profile, &aux_scale, c, alpha, x);
                }
            }
            acc.iter().map(|a| a * scale).collect()
        })
        .collect();
    let values = (0..probes.len())
        .map(|p| per_replica.iter().map(|r| r[p]).collect())
        .collect();
    Ok(CltSamples {
        probes: probes.to_vec(),
        values,
    })
}
