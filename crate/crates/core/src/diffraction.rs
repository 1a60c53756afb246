//! Single-slit landing statistics.
//!
//! A plane (or wide) beam is cut by a hard slit, propagated to a screen with
//! the paraxial free propagator, and each soliton center is carried from its
//! impact parameter `b` to the landing point `x_L = Q⁻¹(P(b))`, the monotone
//! map between the transverse distributions at the slit (`P`) and at the
//! screen (`Q`).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::spectral;
use crate::stats::{chi_square_gof, domain, pearson, Histogram, PiecewiseCdf, RngStream, TestReport};

/// Largest allowed spectral power fraction above 0.9 of the Nyquist
/// wavenumber. A hard edge decays only as `1/k²`, so this cannot be tight.
pub const ALIAS_GUARD: f64 = 1e-2;
/// Minimum number of grid points across the slit.
pub const MIN_POINTS_ACROSS: usize = 16;
const TRIALS_PER_STREAM: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitSetup {
    pub width: f64,
    pub wavelength: f64,
    pub distance: f64,
    /// Width of the illuminated region in the slit plane.
    pub beam_extent: f64,
    pub n_trials: usize,
    pub grid: Grid1D,
}

impl SlitSetup {
    pub fn new(width: f64, wavelength: f64, distance: f64, beam_extent: f64, n_trials: usize, grid: Grid1D) -> Result<Self> {
        crate::error::ensure_finite("slit setup", &[width, wavelength, distance, beam_extent])?;
        if width <= 0.0 {
            return Err(Error::param("w", "slit width must be positive"));
        }
        if wavelength <= 0.0 {
            return Err(Error::param("lambda", "wavelength must be positive"));
        }
        if distance < 0.0 {
            return Err(Error::param("L", "screen distance must be non-negative"));
        }
        if beam_extent < width {
            return Err(Error::param("beam_extent", "beam must be at least as wide as the slit"));
        }
        Ok(Self {
            width,
            wavelength,
            distance,
            beam_extent,
            n_trials,
            grid,
        })
    }

    /// Setup on a centered grid with an odd number `points_across` of cells
    /// across the slit, so the slit edges fall on cell boundaries, and
    /// `n_points` samples.
    pub fn on_slit_grid(
        width: f64,
        wavelength: f64,
        distance: f64,
        n_trials: usize,
        points_across: usize,
        n_points: usize,
    ) -> Result<Self> {
        if points_across % 2 == 0 {
            return Err(Error::param("points_across", "must be odd"));
        }
        let grid = Grid1D::centered(width / points_across as f64, n_points)?;
        Self::new(width, wavelength, distance, grid.extent(), n_trials, grid)
    }

    /// Setup with 63 cells across the slit and a periodic domain about 100
    /// times wider than the larger of `w` and `λL/w`, so that replicas of the
    /// slit introduced by the discrete transform stay out of the pattern.
    pub fn auto(width: f64, wavelength: f64, distance: f64, n_trials: usize) -> Result<Self> {
        const ACROSS: usize = 63;
        let spread = (wavelength * distance / width).max(width);
        let needed = (100.0 * spread / width * ACROSS as f64).ceil() as usize;
        Self::on_slit_grid(
            width,
            wavelength,
            distance,
            n_trials,
            ACROSS,
            needed.next_power_of_two().max(1024),
        )
    }

    /// `F = w² / (λ L)`.
    pub fn fresnel_number(&self) -> f64 {
        self.width * self.width / (self.wavelength * self.distance)
    }

    /// Far-field angular spread on the screen, `λ L / w`.
    pub fn spread(&self) -> f64 {
        self.wavelength * self.distance / self.width
    }

    /// A screen window holding the geometric image, several far-field lobes
    /// and the near-field edge blur.
    pub fn default_screen_half_width(&self) -> f64 {
        0.5 * self.width + 3.0 * self.spread() + 4.0 * (self.wavelength * self.distance).sqrt()
    }

    fn inside(&self, x: f64) -> bool {
        x.abs() < 0.5 * self.width
    }
}

/// Transverse field just behind the slit, unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ApertureField {
    pub grid: Grid1D,
    pub values: Vec<Complex64>,
    /// Fraction of the incident power that passed the slit.
    pub transmitted_fraction: f64,
}

/// Multiplies `incident` by the slit indicator and renormalizes.
pub fn truncate_at_slit(incident: &[Complex64], setup: &SlitSetup) -> Result<ApertureField> {
    let grid = setup.grid;
    if incident.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} incident samples on a {}-point grid",
            incident.len(),
            grid.len()
        )));
    }
    if incident.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::NonFinite("incident field"));
    }
    let dx = grid.dx();
    if setup.width / dx < MIN_POINTS_ACROSS as f64 {
        return Err(Error::GridTooCoarse(format!(
            "{:.1} points across the slit, need {MIN_POINTS_ACROSS}",
            setup.width / dx
        )));
    }
    let total = spectral::norm_sqr(incident, dx);
    let mut values: Vec<Complex64> = incident
        .iter()
        .zip(grid.points())
        .map(|(v, x)| if setup.inside(x) { *v } else { Complex64::new(0.0, 0.0) })
        .collect();
    let passed = spectral::norm_sqr(&values, dx);
    if passed == 0.0 || total == 0.0 {
        return Err(Error::BeamMissesSlit);
    }
    let scale = 1.0 / passed.sqrt();
    values.iter_mut().for_each(|v| *v *= scale);
    Ok(ApertureField {
        grid,
        values,
        transmitted_fraction: passed / total,
    })
}

/// Transverse field on the screen.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenField {
    pub grid: Grid1D,
    pub values: Vec<Complex64>,
    pub distance: f64,
}

impl ScreenField {
    pub fn intensity(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }
}

/// Paraxial free propagation: mode `k_x` picks up `exp(-i k_x² L λ / 4π)`.
pub fn propagate_free(field: &ApertureField, distance: f64, setup: &SlitSetup) -> Result<ScreenField> {
    if !(distance.is_finite() && distance >= 0.0) {
        return Err(Error::param("distance", "must be finite and non-negative"));
    }
    let grid = field.grid;
    let mut spectrum = field.values.clone();
    spectral::forward(&mut spectrum);
    let ks = grid.wavenumbers();
    let k_cut = 0.9 * PI / grid.dx();
    let total: f64 = spectrum.iter().map(|c| c.norm_sqr()).sum();
    let high: f64 = spectrum
        .iter()
        .zip(&ks)
        .filter(|(_, k)| k.abs() > k_cut)
        .map(|(c, _)| c.norm_sqr())
        .sum();
    if high > ALIAS_GUARD * total {
        return Err(Error::GridTooCoarse(format!(
            "{:.2e} of the power lies above 0.9 Nyquist",
            high / total
        )));
    }
    let spread = setup.wavelength * distance / setup.width;
    if grid.extent() < 8.0 * spread.max(setup.width) {
        return Err(Error::GridTooSmall(format!(
            "extent {} < 8 x spread {}",
            grid.extent(),
            spread.max(setup.width)
        )));
    }
    if distance == 0.0 {
        return Ok(ScreenField {
            grid,
            values: field.values.clone(),
            distance,
        });
    }
    let c = distance * setup.wavelength / (4.0 * PI);
    for (v, k) in spectrum.iter_mut().zip(&ks) {
        *v *= Complex64::from_polar(1.0, -k * k * c);
    }
    spectral::inverse(&mut spectrum);
    Ok(ScreenField {
        grid,
        values: spectrum,
        distance,
    })
}

/// The monotone transport from slit to screen.
#[derive(Debug, Clone, PartialEq)]
pub struct Transport {
    slit: PiecewiseCdf,
    screen: PiecewiseCdf,
    half_width: f64,
}

impl Transport {
    pub fn new(aperture: &ApertureField, screen: &ScreenField, setup: &SlitSetup) -> Result<Self> {
        if aperture.grid != screen.grid {
            return Err(Error::GridMismatch("aperture and screen use different grids".into()));
        }
        let g = aperture.grid;
        let start = g.x_min() - 0.5 * g.dx();
        let mass = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).collect::<Vec<_>>();
        Ok(Self {
            slit: PiecewiseCdf::from_masses(start, g.dx(), &mass(&aperture.values))?,
            screen: PiecewiseCdf::from_masses(start, g.dx(), &mass(&screen.values))?,
            half_width: 0.5 * setup.width,
        })
    }

    /// `x_L = Q⁻¹(P(b))`.
    pub fn landing(&self, b: f64) -> Result<f64> {
        if !(b.abs() <= self.half_width) {
            return Err(Error::OutsideSupport(b));
        }
        Ok(self.screen.quantile(self.slit.cdf(b)))
    }

    pub fn screen_cdf(&self) -> &PiecewiseCdf {
        &self.screen
    }
}

/// `sinc²(π w x / λL)` on the setup grid, normalized so `Σ I dx = 1`.
pub fn fraunhofer_oracle(setup: &SlitSetup) -> Vec<f64> {
    let raw: Vec<f64> = setup.grid.points().map(|x| sinc_sqr(setup, x)).collect();
    let norm = raw.iter().sum::<f64>() * setup.grid.dx();
    raw.iter().map(|v| v / norm).collect()
}

fn sinc_sqr(setup: &SlitSetup, x: f64) -> f64 {
    let u = PI * x / setup.spread();
    if u == 0.0 {
        1.0
    } else {
        (u.sin() / u).powi(2)
    }
}

/// Bin probabilities `[underflow, bins..., overflow]` of the `sinc²` law on
/// the whole line (`∫ sinc²(π x / X) dx = X`), integrated by composite
/// Simpson over each bin.
pub fn fraunhofer_bin_probabilities(setup: &SlitSetup, hist: &Histogram) -> Vec<f64> {
    let norm = setup.spread();
    let integral = |a: f64, b: f64| {
        let n = 64;
        let h = (b - a) / n as f64;
        let mut s = sinc_sqr(setup, a) + sinc_sqr(setup, b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * sinc_sqr(setup, a + i as f64 * h);
        }
        s * h / 3.0 / norm
    };
    let mut probs: Vec<f64> = (0..hist.counts.len())
        .map(|b| {
            let (lo, hi) = hist.edges(b);
            integral(lo, hi)
        })
        .collect();
    let inside: f64 = probs.iter().sum();
    // the law is even, so the tails share the remainder
    let tail = 0.5 * (1.0 - inside).max(0.0);
    probs.insert(0, tail);
    probs.push(tail);
    probs
}

/// Bin probabilities `[underflow, bins..., overflow]` of the screen
/// distribution `Q`.
pub fn screen_bin_probabilities(transport: &Transport, hist: &Histogram) -> Vec<f64> {
    let q = transport.screen_cdf();
    let mut probs = vec![q.cdf(hist.lo)];
    probs.extend((0..hist.counts.len()).map(|b| {
        let (lo, hi) = hist.edges(b);
        q.cdf(hi) - q.cdf(lo)
    }));
    probs.push(1.0 - q.cdf(hist.hi));
    probs
}

/// Landings of all trials and their comparison with the oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub setup: SlitSetup,
    pub histogram: Histogram,
    /// `[underflow, bins..., overflow]` probabilities from `|screen field|²`.
    pub predicted: Vec<f64>,
    /// Same layout, from the `sinc²` law; absent at zero distance.
    pub fraunhofer: Option<Vec<f64>>,
    pub vs_propagated: TestReport,
    pub vs_fraunhofer: Option<TestReport>,
    pub screen: ScreenField,
}

impl ExperimentResult {
    /// Pearson correlation of the bin counts with the `sinc²` law.
    pub fn fraunhofer_correlation(&self) -> Option<f64> {
        let n = self.histogram.counts.len();
        let counts: Vec<f64> = self.histogram.counts.iter().map(|&c| c as f64).collect();
        self.fraunhofer.as_ref().map(|f| pearson(&counts, &f[1..=n]))
    }

    /// Pearson correlation of the expected bin masses `|screen field|²` with
    /// the `sinc²` law, free of sampling noise.
    pub fn predicted_fraunhofer_correlation(&self) -> Option<f64> {
        let n = self.histogram.counts.len();
        self.fraunhofer.as_ref().map(|f| pearson(&self.predicted[1..=n], &f[1..=n]))
    }

    /// Position of the first zero of the pattern, estimated from each side
    /// and averaged. The counts times `x²` behave as `sin²(π x / X)` near
    /// the zero, so a least-squares parabola through them is symmetric about
    /// it; the fit uses bins within a quarter spread of `±λL/w`.
    pub fn first_minimum(&self) -> Option<f64> {
        let x0 = self.setup.spread();
        let h = &self.histogram;
        let side = |sign: f64| -> Option<f64> {
            let pts: Vec<(f64, f64)> = (0..h.counts.len())
                .map(|b| (h.center(b) * sign, h.counts[b] as f64 * h.center(b).powi(2)))
                .filter(|(x, _)| (x - x0).abs() <= 0.25 * x0)
                .collect();
            let vertex = parabola_vertex(&pts)?;
            (vertex > 0.5 * x0 && vertex < 1.5 * x0).then_some(vertex)
        };
        Some(0.5 * (side(1.0)? + side(-1.0)?))
    }

    /// Local maxima of the propagated intensity strictly inside the
    /// geometric shadow edges.
    pub fn interior_maxima(&self) -> usize {
        let g = self.screen.grid;
        let i = self.screen.intensity();
        (1..i.len() - 1)
            .filter(|&j| self.setup.inside(g.x(j)) && i[j] > i[j - 1] && i[j] > i[j + 1])
            .count()
    }
}

/// Vertex of the least-squares parabola through `pts`.
fn parabola_vertex(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 3 {
        return None;
    }
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    // normal equations in centered coordinates
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for &(x, y) in pts {
        let u = x - xm;
        let mut p = 1.0;
        for (k, sk) in s.iter_mut().enumerate() {
            *sk += p;
            if k < 3 {
                t[k] += p * y;
            }
            p *= u;
        }
    }
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d == 0.0 {
        return None;
    }
    let replace = |col: usize| {
        let mut r = m;
        for (row, tv) in r.iter_mut().zip(t) {
            row[col] = tv;
        }
        det(r) / d
    };
    let (b, c) = (replace(1), replace(2));
    (c > 0.0).then(|| xm - b / (2.0 * c))
}

/// Uniform impact parameters over the slit; trial `i` draws from block
/// `i / 4096` of the impact stream family.
pub fn impact_parameters(setup: &SlitSetup, seed: u64) -> Vec<f64> {
    let n = setup.n_trials;
    let blocks = n.div_ceil(TRIALS_PER_STREAM);
    (0..blocks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let len = TRIALS_PER_STREAM.min(n - c * TRIALS_PER_STREAM);
            let mut rng = RngStream::in_domain(seed, domain::IMPACT, c as u64).rng();
            let w = setup.width;
            (0..len).map(move |_| (rng.random::<f64>() - 0.5) * w).collect::<Vec<_>>()
        })
        .collect()
}

/// Runs the slit experiment for `incident`, histogramming landings on
/// `[-half_width, half_width]` with `bins` bins.
pub fn run_experiment(
    setup: &SlitSetup,
    incident: &[Complex64],
    half_width: f64,
    bins: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    if setup.n_trials < 10_000 {
        return Err(Error::param("n_trials", format!("{} < 10000", setup.n_trials)));
    }
    let aperture = truncate_at_slit(incident, setup)?;
    let screen = propagate_free(&aperture, setup.distance, setup)?;
    let transport = Transport::new(&aperture, &screen, setup)?;
    let landings: Vec<f64> = impact_parameters(setup, seed)
        .par_iter()
        .map(|&b| transport.landing(b))
        .collect::<Result<_>>()?;
    let mut histogram = Histogram::new(-half_width, half_width, bins)?;
    landings.iter().for_each(|&x| histogram.add(x));
    let observed = histogram.with_tails();
    let predicted = screen_bin_probabilities(&transport, &histogram);
    let fraunhofer = (setup.distance > 0.0).then(|| fraunhofer_bin_probabilities(setup, &histogram));
    let vs_propagated = chi_square_gof(&observed, &predicted)?;
    let vs_fraunhofer = fraunhofer.as_ref().map(|f| chi_square_gof(&observed, f)).transpose()?;
    Ok(ExperimentResult {
        setup: *setup,
        histogram,
        predicted,
        fraunhofer,
        vs_propagated,
        vs_fraunhofer,
        screen,
    })
}

/// Unit-amplitude plane wave on the setup grid.
pub fn plane_wave(setup: &SlitSetup) -> Vec<Complex64> {
    vec![Complex64::new(1.0, 0.0); setup.grid.len()]
}

/// Gaussian beam whose intensity has standard deviation `sd`.
pub fn gaussian_beam(setup: &SlitSetup, center: f64, sd: f64) -> Vec<Complex64> {
    setup
        .grid
        .points()
        .map(|x| Complex64::new((-(x - center).powi(2) / (4.0 * sd * sd)).exp(), 0.0))
        .collect()
}
