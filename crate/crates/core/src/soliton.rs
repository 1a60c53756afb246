//! Soliton profiles and the lattice reconstruction of a de Broglie wave.
//!
//! A profile is a positive-frequency packet
//! `u(t, x) = ∫ dk g(k) exp(-i(ω(k) t - k x))`, `ω(k) = sqrt(k² + m²)`,
//! with a Gaussian spectral density `g` of width `spectral_width` centered
//! on the on-shell momentum `m γ v`. Summing copies of `u` over a chain of
//! nodes with spacing `a` keeps only the momenta `2πj/a`, so a packet whose
//! spectrum sits inside a single Brillouin zone sums to a plane wave.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ensure_finite, Error, Result};
use crate::grid::Grid1D;
use crate::spectral;

/// Half-width of the quadrature window in units of `spectral_width`.
const SPECTRAL_HALF_WIDTH: f64 = 8.0;
/// Beyond this many envelope widths the profile is treated as zero.
const SUPPORT_WIDTHS: f64 = 9.5;
/// Spectral support used for Brillouin-zone checks, in units of `spectral_width`.
const ZONE_WIDTHS: f64 = 6.0;

/// Parameters of `A exp(-iωt + ikx)` on the mass shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveParams {
    pub amplitude: Complex64,
    pub omega: f64,
    pub k: f64,
    pub mass: f64,
}

impl PlaneWaveParams {
    /// On-shell wave with momentum `k`; `omega` follows from the dispersion relation.
    pub fn on_shell(amplitude: Complex64, k: f64, mass: f64) -> Result<Self> {
        ensure_finite("plane wave", &[amplitude.re, amplitude.im, k, mass])?;
        if mass <= 0.0 {
            return Err(Error::param("mass", "must be positive"));
        }
        Ok(Self {
            amplitude,
            omega: (k * k + mass * mass).sqrt(),
            k,
            mass,
        })
    }

    pub fn dispersion_defect(&self) -> f64 {
        (self.omega * self.omega - self.k * self.k - self.mass * self.mass).abs() / (self.mass * self.mass)
    }

    pub fn eval(&self, t: f64, x: f64) -> Complex64 {
        self.amplitude * Complex64::from_polar(1.0, -self.omega * t + self.k * x)
    }
}

/// Discretized spectral integral at a fixed time: `u(t, x) = Σ c_q e^{i k_q x}`.
#[derive(Debug, Clone)]
struct SpectralSum {
    k_first: f64,
    dk: f64,
    coeffs: Vec<Complex64>,
    /// `-i ω_q c_q`, the time derivative.
    dt_coeffs: Vec<Complex64>,
    center: f64,
    radius: f64,
}

impl SpectralSum {
    fn eval_pair(&self, x: f64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        if (x - self.center).abs() > self.radius {
            return (zero, zero);
        }
        let step = Complex64::from_polar(1.0, self.dk * x);
        let mut phase = Complex64::from_polar(1.0, self.k_first * x);
        let (mut u, mut ut) = (zero, zero);
        for (c, ct) in self.coeffs.iter().zip(&self.dt_coeffs) {
            u += c * phase;
            ut += ct * phase;
            phase *= step;
        }
        (u, ut)
    }

    fn eval(&self, x: f64) -> Complex64 {
        if (x - self.center).abs() > self.radius {
            return Complex64::new(0.0, 0.0);
        }
        let step = Complex64::from_polar(1.0, self.dk * x);
        let mut phase = Complex64::from_polar(1.0, self.k_first * x);
        let mut u = Complex64::new(0.0, 0.0);
        for c in &self.coeffs {
            u += c * phase;
            phase *= step;
        }
        u
    }
}

/// The etalon one-particle field `u(t, x)` centered at the origin at `t = 0`.
#[derive(Debug, Clone)]
pub struct SolitonProfile {
    mass: f64,
    velocity: f64,
    spectral_width: f64,
    grid: Grid1D,
    rest: SpectralSum,
    nu: f64,
}

/// Builds the on-shell Gaussian spectral packet.
///
/// Rejects non-finite input, `m <= 0`, `|v| >= 1`, a non-positive spectral
/// width, and grids shorter than `20 l0`.
pub fn make_profile(m: f64, v: f64, spectral_width: f64, grid: Grid1D) -> Result<SolitonProfile> {
    ensure_finite("profile", &[m, v, spectral_width])?;
    if m <= 0.0 {
        return Err(Error::param("m", "mass must be positive"));
    }
    if v.abs() >= 1.0 {
        return Err(Error::param("v", "speed must be below 1"));
    }
    if spectral_width <= 0.0 {
        return Err(Error::param("spectral_width", "must be positive"));
    }
    if grid.extent() < 20.0 / m {
        return Err(Error::GridTooSmall(format!(
            "extent {} cannot hold 20 l0 = {}",
            grid.extent(),
            20.0 / m
        )));
    }
    let mut profile = SolitonProfile {
        mass: m,
        velocity: v,
        spectral_width,
        grid,
        rest: SpectralSum {
            k_first: 0.0,
            dk: 0.0,
            coeffs: Vec::new(),
            dt_coeffs: Vec::new(),
            center: 0.0,
            radius: 0.0,
        },
        nu: 1.0,
    };
    profile.rest = profile.spectral_sum(0.0);
    profile.nu = profile.phase_averaged_nu();
    Ok(profile)
}

impl SolitonProfile {
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Characteristic size `l0 = 1/m`.
    pub fn l0(&self) -> f64 {
        1.0 / self.mass
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    pub fn spectral_width(&self) -> f64 {
        self.spectral_width
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn gamma(&self) -> f64 {
        1.0 / (1.0 - self.velocity * self.velocity).sqrt()
    }

    /// On-shell momentum `m γ v` at the spectral peak.
    pub fn central_momentum(&self) -> f64 {
        self.mass * self.gamma() * self.velocity
    }

    pub fn central_energy(&self) -> f64 {
        self.mass * self.gamma()
    }

    /// `1/e` half-width of `|u|` at time `t`, including dispersive spreading.
    pub fn envelope_width(&self, t: f64) -> f64 {
        let w0 = 1.0 / self.spectral_width;
        let spread = self.spectral_width * t / self.mass;
        (w0 * w0 + spread * spread).sqrt()
    }

    /// Distance from the packet center beyond which `u` is set to zero.
    pub fn support_radius(&self, t: f64) -> f64 {
        SUPPORT_WIDTHS * self.envelope_width(t)
    }

    /// Spectral density, normalized to unit integral.
    pub fn spectral_density(&self, k: f64) -> f64 {
        let s = self.spectral_width;
        let d = (k - self.central_momentum()) / s;
        (-0.5 * d * d).exp() / ((2.0 * PI).sqrt() * s)
    }

    fn spectral_sum(&self, t: f64) -> SpectralSum {
        let s = self.spectral_width;
        let radius = self.support_radius(t);
        // The trapezoid rule periodizes u with period 2π/dk; keep copies
        // at least two support radii away.
        let span = 2.0 * SPECTRAL_HALF_WIDTH * s;
        let min_nodes = (span * 2.2 * radius / PI).ceil() as usize + 1;
        let n = min_nodes.max(129) | 1;
        let dk = span / (n - 1) as f64;
        let k_first = self.central_momentum() - SPECTRAL_HALF_WIDTH * s;
        let mut coeffs = Vec::with_capacity(n);
        let mut dt_coeffs = Vec::with_capacity(n);
        for q in 0..n {
            let k = k_first + q as f64 * dk;
            let omega = (k * k + self.mass * self.mass).sqrt();
            let weight = if q == 0 || q == n - 1 { 0.5 * dk } else { dk };
            let c = Complex64::from_polar(weight * self.spectral_density(k), -omega * t);
            coeffs.push(c);
            dt_coeffs.push(Complex64::new(0.0, -omega) * c);
        }
        SpectralSum {
            k_first,
            dk,
            coeffs,
            dt_coeffs,
            center: self.velocity * t,
            radius,
        }
    }

    /// `u(t, x)` for the packet centered at the origin at `t = 0`.
    pub fn eval(&self, t: f64, x: f64) -> Complex64 {
        if t == 0.0 {
            self.rest.eval(x)
        } else {
            self.spectral_sum(t).eval(x)
        }
    }

    /// `u(t, x_i)` on the profile grid.
    pub fn sample(&self, t: f64) -> Vec<Complex64> {
        let sum = self.spectral_sum(t);
        self.grid.points().map(|x| sum.eval(x)).collect()
    }

    /// `(u, ∂u/∂t)` at `t = 0`.
    pub fn eval_with_rate(&self, x: f64) -> (Complex64, Complex64) {
        self.rest.eval_pair(x)
    }

    /// The real field `φ = Re(e^{iα} u(0, x - c))` and its momentum
    /// `π = ∂φ/∂t` at the samples `xs`.
    pub fn real_field(&self, xs: impl Iterator<Item = f64>, center: f64, phase: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let rot = Complex64::from_polar(1.0, phase);
        xs.map(|x| {
            let (u, ut) = self.rest.eval_pair(x - center);
            (Complex64::new((rot * u).re, 0.0), Complex64::new((rot * ut).re, 0.0))
        })
        .unzip()
    }

    /// Normalized field pair of a soliton at `center` with overall phase `phase`.
    pub fn field_pair(&self, center: f64, phase: f64) -> Result<FieldPair> {
        let (phi, pi) = self.real_field(self.grid.points(), center, phase);
        normalize_pair(&phi, &pi, self.grid.dx())
    }

    /// The profile's normalization constant `ν² = sqrt(Q̄/P̄)`, where `P̄` and
    /// `Q̄` are `∫|φ|²` and `∫|π|²` averaged over the overall phase. Equals
    /// `sqrt(ω)` for a narrowband packet.
    pub fn quantum_nu(&self) -> f64 {
        self.nu
    }

    fn phase_averaged_nu(&self) -> f64 {
        let dx = self.grid.dx();
        let moments = |phase: f64| {
            let (phi, pi) = self.real_field(self.grid.points(), 0.0, phase);
            let (p, q, _) = pair_moments(&phi, &pi, dx);
            (p, q)
        };
        let (p0, q0) = moments(0.0);
        let (p1, q1) = moments(0.5 * PI);
        ((q0 + q1) / (p0 + p1)).powf(0.25)
    }

    /// Field pair of a soliton at `center` with overall phase `phase` on the
    /// samples `xs`, using [`quantum_nu`](Self::quantum_nu) and rescaled by
    /// [`one_quantum_pair`].
    pub fn quantum_pair(&self, xs: impl Iterator<Item = f64>, dx: f64, center: f64, phase: f64) -> Result<FieldPair> {
        let (phi, pi) = self.real_field(xs, center, phase);
        one_quantum_pair(&phi, &pi, dx, self.nu)
    }
}

/// A field, its conjugate momentum, and the constant `ν` that makes the
/// auxiliary function `(ν φ + i π / ν) / √2` unit-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub phi: Vec<Complex64>,
    pub pi: Vec<Complex64>,
    pub nu: f64,
    pub dx: f64,
}

impl FieldPair {
    pub fn aux(&self) -> Vec<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        self.phi
            .iter()
            .zip(&self.pi)
            .map(|(f, p)| (self.nu * f + i * p / self.nu) / SQRT_2)
            .collect()
    }

    pub fn aux_norm(&self) -> f64 {
        spectral::norm_sqr(&self.aux(), self.dx)
    }

    pub fn negated(&self) -> Self {
        Self {
            phi: self.phi.iter().map(|v| -v).collect(),
            pi: self.pi.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }
}

/// Integrals entering the norm of the auxiliary function:
/// `∫|νφ + iπ/ν|²/2 = (ν² P + Q/ν² + 2C) / 2`.
pub(crate) fn pair_moments(phi: &[Complex64], pi: &[Complex64], dx: f64) -> (f64, f64, f64) {
    let p = spectral::norm_sqr(phi, dx);
    let q = spectral::norm_sqr(pi, dx);
    let c = -phi.iter().zip(pi).map(|(f, g)| (f.conj() * g).im).sum::<f64>() * dx;
    (p, q, c)
}

/// Chooses `ν` so that the auxiliary function has unit norm.
///
/// With `u = ν²` the condition is `P u² - 2(1 - C) u + Q = 0`. When both
/// roots are admissible the one on the dominant side is taken: the larger
/// root if `P >= Q`, the smaller otherwise.
pub fn normalize_pair(phi: &[Complex64], pi: &[Complex64], dx: f64) -> Result<FieldPair> {
    if phi.len() != pi.len() {
        return Err(Error::GridMismatch(format!(
            "phi has {} samples, pi has {}",
            phi.len(),
            pi.len()
        )));
    }
    if phi.iter().chain(pi).any(|v| !v.re.is_finite() || !v.im.is_finite()) || !dx.is_finite() {
        return Err(Error::NonFinite("field pair"));
    }
    let (p, q, c) = pair_moments(phi, pi, dx);
    if p == 0.0 && q == 0.0 {
        return Err(Error::NullField);
    }
    let b = 1.0 - c;
    let disc = b * b - p * q;
    if b <= 0.0 || disc < 0.0 {
        return Err(Error::NoNormalization(format!("P = {p}, Q = {q}, C = {c}")));
    }
    let u = if q == 0.0 {
        2.0 * b / p
    } else if p == 0.0 {
        q / (2.0 * b)
    } else if p >= q {
        (b + disc.sqrt()) / p
    } else {
        q / (b + disc.sqrt())
    };
    Ok(FieldPair {
        phi: phi.to_vec(),
        pi: pi.to_vec(),
        nu: u.sqrt(),
        dx,
    })
}

/// Rescales `(φ, π)` so that the auxiliary function built with the given
/// `ν` has unit norm: one quantum per soliton.
pub fn one_quantum_pair(phi: &[Complex64], pi: &[Complex64], dx: f64, nu: f64) -> Result<FieldPair> {
    if phi.len() != pi.len() {
        return Err(Error::GridMismatch(format!(
            "phi has {} samples, pi has {}",
            phi.len(),
            pi.len()
        )));
    }
    if phi.iter().chain(pi).any(|v| !v.re.is_finite() || !v.im.is_finite()) || !dx.is_finite() {
        return Err(Error::NonFinite("field pair"));
    }
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::param("nu", "must be finite and positive"));
    }
    let (p, q, c) = pair_moments(phi, pi, dx);
    let norm = 0.5 * (nu * nu * p + q / (nu * nu)) + c;
    if norm <= 0.0 {
        return Err(Error::NullField);
    }
    let kappa = 1.0 / norm.sqrt();
    Ok(FieldPair {
        phi: phi.iter().map(|v| v * kappa).collect(),
        pi: pi.iter().map(|v| v * kappa).collect(),
        nu,
        dx,
    })
}

/// Rejects spacings that do not satisfy `a >= 10 l0`.
pub fn check_lattice_spacing(a: f64, l0: f64) -> Result<()> {
    if !a.is_finite() || a < 10.0 * l0 {
        Err(Error::LatticeSpacing { a, l0 })
    } else {
        Ok(())
    }
}

/// Spacing `2πj/k0` commensurate with the profile momentum, the smallest
/// one not below `min_spacing`. For a profile at rest returns `min_spacing`.
pub fn commensurate_spacing(profile: &SolitonProfile, min_spacing: f64) -> f64 {
    let k0 = profile.central_momentum().abs();
    if k0 == 0.0 {
        return min_spacing;
    }
    let period = 2.0 * PI / k0;
    (min_spacing / period).ceil().max(1.0) * period
}

/// `Σ_d u(t, x + d)` over the nodes `d = j a`, `|j| <= (n_nodes - 1)/2`,
/// evaluated on `window`.
///
/// Besides `a >= 10 l0` the packet spectrum must sit inside one Brillouin
/// zone of the chain (`±6` spectral widths around a reciprocal vector
/// `2πj/a`), otherwise the sum is not a single plane wave.
pub fn lattice_sum(profile: &SolitonProfile, a: f64, n_nodes: usize, t: f64, window: &Grid1D) -> Result<Vec<Complex64>> {
    ensure_finite("lattice", &[a, t])?;
    check_lattice_spacing(a, profile.l0())?;
    if n_nodes % 2 == 0 {
        return Err(Error::param("n_nodes", "must be odd"));
    }
    if (n_nodes as f64) * a < 4.0 * window.extent() {
        return Err(Error::param(
            "n_nodes",
            format!("chain length {} is shorter than 4x the window extent", n_nodes as f64 * a),
        ));
    }
    let k0 = profile.central_momentum();
    let reciprocal = 2.0 * PI / a;
    let zone_center = (k0 / reciprocal).round() * reciprocal;
    let half_support = ZONE_WIDTHS * profile.spectral_width();
    if (k0 - zone_center).abs() + half_support >= 0.5 * reciprocal {
        return Err(Error::BrillouinZone(format!(
            "support [{:.6}, {:.6}] is not inside ({:.6}, {:.6})",
            k0 - half_support,
            k0 + half_support,
            zone_center - 0.5 * reciprocal,
            zone_center + 0.5 * reciprocal
        )));
    }

    let sum = profile.spectral_sum(t);
    let half = (n_nodes / 2) as i64;
    let xs: Vec<f64> = window.points().collect();
    Ok(xs
        .par_iter()
        .map(|&x| {
            (-half..=half)
                .map(|j| sum.eval(x + j as f64 * a))
                .fold(Complex64::new(0.0, 0.0), |acc, v| acc + v)
        })
        .collect())
}

/// Relative L∞ deviation of a sampled field from its mean.
pub fn ripple(values: &[Complex64]) -> f64 {
    let mean = values.iter().sum::<Complex64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max) / mean.norm()
}

/// Complex samples on a tensor grid of times and positions, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl SpaceTimeField {
    pub fn new(times: Vec<f64>, positions: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if times.is_empty() || positions.is_empty() {
            return Err(Error::Empty("space-time samples"));
        }
        if values.len() != times.len() * positions.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} x {} samples",
                values.len(),
                times.len(),
                positions.len()
            )));
        }
        Ok(Self {
            times,
            positions,
            values,
        })
    }

    /// Samples `f(t, x)` on the tensor grid.
    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(times: Vec<f64>, positions: Vec<f64>, f: F) -> Result<Self> {
        let values = times
            .iter()
            .flat_map(|&t| positions.iter().map(move |&x| (t, x)))
            .map(|(t, x)| f(t, x))
            .collect();
        Self::new(times, positions, values)
    }

    fn at(&self, it: usize, ix: usize) -> Complex64 {
        self.values[it * self.positions.len() + ix]
    }
}

/// Least-squares fit of `A exp(-iωt + ikx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveFit {
    pub amplitude: Complex64,
    pub omega: f64,
    pub k: f64,
    /// `‖f - model‖ / ‖f‖` over all samples.
    pub residual: f64,
}

impl PlaneWaveFit {
    /// Mass implied by the fitted `(ω, k)`, if timelike.
    pub fn implied_mass(&self) -> Option<f64> {
        let m2 = self.omega * self.omega - self.k * self.k;
        (m2 > 0.0).then(|| m2.sqrt())
    }

    pub fn dispersion_defect(&self, mass: f64) -> f64 {
        (self.omega * self.omega - self.k * self.k - mass * mass).abs() / (mass * mass)
    }
}

fn uniform_step(xs: &[f64], name: &'static str) -> Result<f64> {
    if xs.len() < 2 {
        return Ok(0.0);
    }
    let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    let tol = 1e-9 * step.abs().max(f64::MIN_POSITIVE);
    if step == 0.0 || xs.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > tol) {
        return Err(Error::param(name, "samples must be uniformly spaced"));
    }
    Ok(step)
}

/// Projection `S(ω, k) = Σ f e^{iωτ - ikξ}` in centered coordinates, with
/// first and second derivatives.
struct Projection {
    s: Complex64,
    grad: [Complex64; 2],
    hess: [[Complex64; 2]; 2],
}

fn project(taus: &[f64], xis: &[f64], field: &SpaceTimeField, omega: f64, k: f64) -> Projection {
    let zero = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut out = Projection {
        s: zero,
        grad: [zero; 2],
        hess: [[zero; 2]; 2],
    };
    for (it, &tau) in taus.iter().enumerate() {
        for (ix, &xi) in xis.iter().enumerate() {
            let term = field.at(it, ix) * Complex64::from_polar(1.0, omega * tau - k * xi);
            out.s += term;
            out.grad[0] += i * tau * term;
            out.grad[1] += -i * xi * term;
            out.hess[0][0] += -tau * tau * term;
            out.hess[1][1] += -xi * xi * term;
            out.hess[0][1] += tau * xi * term;
        }
    }
    out.hess[1][0] = out.hess[0][1];
    out
}

/// Fits `A exp(-iωt + ikx)` to a tensor-grid field.
///
/// Phase increments between neighboring samples give the starting point,
/// so the true `|ω| dt` and `|k| dx` must stay below π. Newton iterations
/// on the periodogram `|S(ω, k)|²` then give the least-squares optimum.
/// An axis with a single sample keeps its parameter at zero.
pub fn plane_wave_fit(field: &SpaceTimeField) -> Result<PlaneWaveFit> {
    let n = field.values.len();
    if n < 16 {
        return Err(Error::param("field", format!("need at least 16 samples, got {n}")));
    }
    let energy: f64 = field.values.iter().map(|v| v.norm_sqr()).sum();
    if !energy.is_finite() {
        return Err(Error::NonFinite("field"));
    }
    if energy == 0.0 {
        return Err(Error::NullField);
    }
    let dt = uniform_step(&field.times, "times")?;
    let dx = uniform_step(&field.positions, "positions")?;
    let (nt, nx) = (field.times.len(), field.positions.len());

    let mut omega = 0.0;
    if nt > 1 {
        let mut acc = Complex64::new(0.0, 0.0);
        for it in 0..nt - 1 {
            for ix in 0..nx {
                acc += field.at(it, ix).conj() * field.at(it + 1, ix);
            }
        }
        omega = -acc.arg() / dt;
    }
    let mut k = 0.0;
    if nx > 1 {
        let mut acc = Complex64::new(0.0, 0.0);
        for it in 0..nt {
            for ix in 0..nx - 1 {
                acc += field.at(it, ix).conj() * field.at(it, ix + 1);
            }
        }
        k = acc.arg() / dx;
    }

    let t_mean = field.times.iter().sum::<f64>() / nt as f64;
    let x_mean = field.positions.iter().sum::<f64>() / nx as f64;
    let taus: Vec<f64> = field.times.iter().map(|t| t - t_mean).collect();
    let xis: Vec<f64> = field.positions.iter().map(|x| x - x_mean).collect();
    let active = [nt > 1, nx > 1];

    let mut proj = project(&taus, &xis, field, omega, k);
    for _ in 0..100 {
        let s_bar = proj.s.conj();
        let mut g = [0.0; 2];
        let mut h = [[0.0; 2]; 2];
        for a in 0..2 {
            g[a] = 2.0 * (s_bar * proj.grad[a]).re;
            for b in 0..2 {
                h[a][b] = 2.0 * (proj.grad[a].conj() * proj.grad[b] + s_bar * proj.hess[a][b]).re;
            }
        }
        let step = match active {
            [true, true] => {
                let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
                if det <= 0.0 || h[0][0] >= 0.0 {
                    break;
                }
                [
                    -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
                    -(-h[1][0] * g[0] + h[0][0] * g[1]) / det,
                ]
            }
            [true, false] if h[0][0] < 0.0 => [-g[0] / h[0][0], 0.0],
            [false, true] if h[1][1] < 0.0 => [0.0, -g[1] / h[1][1]],
            _ => break,
        };
        let current = proj.s.norm_sqr();
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial = project(&taus, &xis, field, omega + scale * step[0], k + scale * step[1]);
            if trial.s.norm_sqr() >= current {
                accepted = Some(trial);
                break;
            }
            scale *= 0.5;
        }
        let Some(next) = accepted else { break };
        omega += scale * step[0];
        k += scale * step[1];
        proj = next;
        let t_span = taus.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let x_span = xis.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if (scale * step[0]).abs() * t_span < 1e-15 && (scale * step[1]).abs() * x_span < 1e-15 {
            break;
        }
    }

    let centered_amp = proj.s / n as f64;
    let amplitude = centered_amp * Complex64::from_polar(1.0, omega * t_mean - k * x_mean);
    let mut resid = 0.0;
    for (it, &t) in field.times.iter().enumerate() {
        for (ix, &x) in field.positions.iter().enumerate() {
            let model = amplitude * Complex64::from_polar(1.0, -omega * t + k * x);
            resid += (field.at(it, ix) - model).norm_sqr();
        }
    }
    Ok(PlaneWaveFit {
        amplitude,
        omega,
        k,
        residual: (resid / energy).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(half: f64, n: usize) -> Grid1D {
        Grid1D::new(-half, half, n).unwrap()
    }

    fn second_moment_width(p: &SolitonProfile, t: f64) -> (f64, f64) {
        let u = p.sample(t);
        let g = p.grid();
        let mass: f64 = u.iter().map(|v| v.norm_sqr()).sum();
        let mean: f64 = u.iter().zip(g.points()).map(|(v, x)| v.norm_sqr() * x).sum::<f64>() / mass;
        let var: f64 = u
            .iter()
            .zip(g.points())
            .map(|(v, x)| v.norm_sqr() * (x - mean).powi(2))
            .sum::<f64>()
            / mass;
        (mean, var.sqrt())
    }

    #[test]
    fn rest_profile_is_centered_and_stationary() {
        let p = make_profile(1.0, 0.0, 0.1, grid(128.0, 1024)).unwrap();
        let (c0, w0) = second_moment_width(&p, 0.0);
        let (c4, _) = second_moment_width(&p, 4.0);
        assert!(c0.abs() < 1e-10);
        assert!(c4.abs() < 1e-10);
        // |u|² sd is 1 / (√2 σ)
        assert!((w0 - 1.0 / (2f64.sqrt() * 0.1)).abs() < 1e-6);
    }

    #[test]
    fn moving_profile_travels_at_group_velocity() {
        let p = make_profile(1.0, 0.5, 0.1, grid(128.0, 1024)).unwrap();
        let (c0, _) = second_moment_width(&p, 0.0);
        let (c4, _) = second_moment_width(&p, 4.0);
        assert!((c4 - c0 - 2.0).abs() < 0.04, "displacement {}", c4 - c0);
    }

    #[test]
    fn width_scales_as_l0() {
        let p1 = make_profile(1.0, 0.0, 0.1, grid(128.0, 2048)).unwrap();
        let p2 = make_profile(2.0, 0.0, 0.2, grid(128.0, 2048)).unwrap();
        let (_, w1) = second_moment_width(&p1, 0.0);
        let (_, w2) = second_moment_width(&p2, 0.0);
        assert!((w1 / w2 - 2.0).abs() < 0.1);
    }

    #[test]
    fn profile_decays_away_from_center() {
        let p = make_profile(1.0, 0.3, 0.1, grid(256.0, 2048)).unwrap();
        let peak = p.eval(0.0, 0.0).norm();
        let r = 7.0 * p.envelope_width(0.0);
        assert!(p.eval(0.0, r).norm() < 1e-10 * peak);
        assert!(p.eval(0.0, -r).norm() < 1e-10 * peak);
    }

    #[test]
    fn profile_rejects_bad_input() {
        let g = grid(64.0, 256);
        assert!(matches!(make_profile(f64::NAN, 0.0, 0.1, g), Err(Error::NonFinite(_))));
        assert!(make_profile(1.0, 1.0, 0.1, g).is_err());
        assert!(make_profile(-1.0, 0.0, 0.1, g).is_err());
        assert!(make_profile(1.0, 0.0, 0.0, g).is_err());
        assert!(matches!(make_profile(0.1, 0.0, 0.01, g), Err(Error::GridTooSmall(_))));
    }

    fn gaussian(g: &Grid1D, scale: f64) -> Vec<Complex64> {
        // ∫ exp(-x²) = √π, so scale² √π = target norm
        g.points()
            .map(|x| Complex64::new(scale * (-x * x / 2.0).exp(), 0.0))
            .collect()
    }

    #[test]
    fn normalize_phi_only_and_pi_only() {
        let g = grid(16.0, 256);
        let s = (2.0 / PI.sqrt()).sqrt();
        let f = gaussian(&g, s);
        let zero = vec![Complex64::new(0.0, 0.0); 256];
        let a = normalize_pair(&f, &zero, g.dx()).unwrap();
        assert!((a.nu - 1.0).abs() < 1e-12);
        let b = normalize_pair(&zero, &f, g.dx()).unwrap();
        assert!((b.nu - 1.0).abs() < 1e-12);
        assert!((b.aux_norm() - 1.0).abs() < 1e-12);
        assert_eq!(normalize_pair(&zero, &zero, g.dx()).unwrap_err(), Error::NullField);
    }

    #[test]
    fn normalize_matches_bisection() {
        let g = grid(16.0, 256);
        let phi: Vec<_> = g
            .points()
            .map(|x| Complex64::new(0.8 * (-x * x / 2.0).exp(), 0.1 * x * (-x * x).exp()))
            .collect();
        let pi: Vec<_> = g
            .points()
            .map(|x| Complex64::new(0.3 * (-(x - 0.5).powi(2)).exp(), -0.1 * (-x * x / 3.0).exp()))
            .collect();
        let pair = normalize_pair(&phi, &pi, g.dx()).unwrap();

        // Oracle: bisection on ν ↦ ∫|νφ + iπ/ν|²/2 - 1, on the side of the
        // minimum selected by P >= Q.
        let norm = |nu: f64| {
            let i = Complex64::new(0.0, 1.0);
            phi.iter()
                .zip(&pi)
                .map(|(f, p)| (nu * f + i * p / nu).norm_sqr())
                .sum::<f64>()
                * g.dx()
                / 2.0
                - 1.0
        };
        let (p, q) = (spectral::norm_sqr(&phi, g.dx()), spectral::norm_sqr(&pi, g.dx()));
        let nu_min = (q / p).powf(0.25);
        let (mut lo, mut hi) = if p >= q { (nu_min, 1e3) } else { (1e-3, nu_min) };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let f_mid = norm(mid);
            let f_lo = norm(lo);
            if (f_mid > 0.0) == (f_lo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((pair.nu - 0.5 * (lo + hi)).abs() < 1e-10);
        assert!((pair.aux_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_rejects_tight_spacing() {
        let p = make_profile(1.0, 0.0, 0.01, grid(1024.0, 4096)).unwrap();
        let w = Grid1D::new(-2.5, 2.5, 64).unwrap();
        assert_eq!(
            lattice_sum(&p, 5.0, 101, 0.0, &w).unwrap_err(),
            Error::LatticeSpacing { a: 5.0, l0: 1.0 }
        );
        assert!(matches!(
            lattice_sum(&p, 20.0, 100, 0.0, &w),
            Err(Error::InvalidParameter { .. })
        ));
        let broad = make_profile(1.0, 0.0, 0.1, grid(1024.0, 4096)).unwrap();
        assert!(matches!(
            lattice_sum(&broad, 20.0, 101, 0.0, &w),
            Err(Error::BrillouinZone(_))
        ));
    }

    #[test]
    fn fit_recovers_exact_plane_wave() {
        let amp = Complex64::new(2.0, 0.0);
        let times: Vec<f64> = (0..32).map(|i| i as f64 * 0.15).collect();
        let xs: Vec<f64> = (0..24).map(|i| -3.0 + i as f64 * 0.25).collect();
        let f = SpaceTimeField::from_fn(times, xs, |t, x| amp * Complex64::from_polar(1.0, -1.25 * t + 0.75 * x)).unwrap();
        let fit = plane_wave_fit(&f).unwrap();
        assert!((fit.amplitude - amp).norm() < 1e-10);
        assert!((fit.omega - 1.25).abs() < 1e-10);
        assert!((fit.k - 0.75).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_of_constant_field() {
        let c = Complex64::new(0.3, -0.2);
        let times: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let xs: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let f = SpaceTimeField::from_fn(times.clone(), xs.clone(), |_, _| c).unwrap();
        let fit = plane_wave_fit(&f).unwrap();
        assert!(fit.omega.abs() < 1e-12 && fit.k.abs() < 1e-12);
        assert!((fit.amplitude - c).norm() < 1e-15);
        assert!(fit.residual < 1e-13);

        let zero = SpaceTimeField::from_fn(times, xs, |_, _| Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(plane_wave_fit(&zero).unwrap_err(), Error::NullField);
    }

    #[test]
    fn ripple_of_constant_is_zero() {
        assert_eq!(ripple(&[Complex64::new(1.0, 1.0); 8]), 0.0);
    }
}
