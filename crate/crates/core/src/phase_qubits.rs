//! Random trial phases from soliton matching, and dichotomic channels
//! `f_s = sign cos(Φ + θ_s)` built on them.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::ensemble::{sample_trials, CenterDistribution, Trial};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::soliton::SolitonProfile;
use crate::spectral;
use crate::stats::{domain, RngStream};

/// Samples per random stream in the correlation estimators.
pub const CHUNK: usize = 4096;

/// Best-matching etalon shift for a trial field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchResult {
    pub d_hat: f64,
    /// `∫ conj(e(x - d̂)) φ(x) dx`.
    pub overlap: Complex64,
    /// `arg(overlap)` in `(-π, π]`.
    pub phase: f64,
}

/// Reference one-particle field, centered at the origin with zero phase,
/// sampled on a fixed grid together with its spectrum.
#[derive(Debug, Clone)]
pub struct Etalon {
    grid: Grid1D,
    values: Vec<Complex64>,
    spectrum: Vec<Complex64>,
}

impl Etalon {
    /// The auxiliary function of a one-quantum soliton of `profile`.
    pub fn from_profile(profile: &SolitonProfile, grid: Grid1D) -> Result<Self> {
        let pair = profile.quantum_pair(grid.points(), grid.dx(), 0.0, 0.0)?;
        Self::from_values(grid, pair.aux())
    }

    pub fn from_values(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} etalon samples on a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().all(|v| v.norm_sqr() == 0.0) {
            return Err(Error::NullField);
        }
        let mut spectrum = values.clone();
        spectral::forward(&mut spectrum);
        Ok(Self { grid, values, spectrum })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Etalon translated to `center` by spectral shift.
    pub fn shifted(&self, center: f64) -> Vec<Complex64> {
        spectral::translate(&self.grid, &self.values, center)
    }

    /// Finds `d` maximizing `|∫ conj(e(x - d)) φ(x) dx|`.
    ///
    /// All grid shifts are scored at once by FFT cross-correlation; the best
    /// one is refined by a parabolic fit and then Newton steps, evaluating the
    /// overlap at continuous shifts through the spectrum.
    pub fn match_center(&self, trial: &[Complex64]) -> Result<MatchResult> {
        let n = self.grid.len();
        if trial.len() != n {
            return Err(Error::GridMismatch(format!(
                "{} trial samples on a {n}-point grid",
                trial.len()
            )));
        }
        if trial.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("trial field"));
        }
        if trial.iter().all(|v| v.norm_sqr() == 0.0) {
            return Err(Error::NullField);
        }
        let dx = self.grid.dx();
        let mut cross = trial.to_vec();
        spectral::forward(&mut cross);
        for (c, e) in cross.iter_mut().zip(&self.spectrum) {
            *c *= e.conj();
        }
        let product = cross.clone();
        spectral::inverse(&mut cross);
        let mags: Vec<f64> = cross.iter().map(|c| c.norm() * dx).collect();
        let (lo, hi) = mags
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &m| (lo.min(m), hi.max(m)));
        if hi - lo < 1e-12 {
            return Err(Error::DegenerateMatching);
        }
        let best = mags.iter().enumerate().fold(0, |b, (i, &m)| if m > mags[b] { i } else { b });
        let signed = |j: usize| if j > n / 2 { j as f64 - n as f64 } else { j as f64 };

        let dk = std::f64::consts::TAU / self.grid.extent();
        // O(d), O'(d), O''(d) from the cross spectrum; the Nyquist term is dropped.
        let overlap_at = |d: f64| -> [Complex64; 3] {
            let w = Complex64::from_polar(1.0, dk * d);
            let mut acc = [Complex64::new(0.0, 0.0); 3];
            let mut add = |q: usize, k: f64, phase: Complex64| {
                let t = product[q] * phase;
                acc[0] += t;
                acc[1] += t * Complex64::new(0.0, k);
                acc[2] -= t * (k * k);
            };
            let mut phase = Complex64::new(1.0, 0.0);
            for q in 0..n / 2 {
                add(q, q as f64 * dk, phase);
                phase *= w;
            }
            let wi = w.conj();
            let mut phase = wi;
            for q in (n / 2 + 1..n).rev() {
                add(q, (q as f64 - n as f64) * dk, phase);
                phase *= wi;
            }
            acc.map(|v| v * dx / n as f64)
        };

        // Parabola through the three best grid scores, then Newton on
        // d|O|²/dd = 2 Re(conj(O) O').
        let at = |j: isize| mags[j.rem_euclid(n as isize) as usize].powi(2);
        let (fm, f0, fp) = (at(best as isize - 1), at(best as isize), at(best as isize + 1));
        let curv = fm - 2.0 * f0 + fp;
        let mut d = signed(best) * dx;
        if curv < 0.0 {
            d += (0.5 * (fm - fp) / curv).clamp(-0.5, 0.5) * dx;
        }
        for _ in 0..50 {
            let [o, o1, o2] = overlap_at(d);
            let g = (o.conj() * o1).re;
            let h = o1.norm_sqr() + (o.conj() * o2).re;
            if h >= 0.0 {
                break;
            }
            let step = (-g / h).clamp(-0.5 * dx, 0.5 * dx);
            d += step;
            if step.abs() < 1e-9 * dx {
                break;
            }
        }
        let overlap = overlap_at(d)[0];
        Ok(MatchResult {
            d_hat: d,
            overlap,
            phase: overlap.arg(),
        })
    }
}

/// Sum of the matched per-particle phases of one trial, wrapped to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomPhase {
    phi_total: f64,
}

impl RandomPhase {
    pub fn new(phi: f64) -> Self {
        Self {
            phi_total: wrap_phase(phi),
        }
    }

    pub fn value(&self) -> f64 {
        self.phi_total
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Angular distance `|Δθ|` wrapped into `[0, π]`.
pub fn angular_distance(delta: f64) -> f64 {
    let w = wrap_phase(delta);
    if w > PI {
        TAU - w
    } else {
        w
    }
}

/// `Φ_j = Σ_k arg ⟨e_k(· - d̂_k), φ_j^{(k)}⟩`. A single etalon is shared by
/// all particles; otherwise one etalon per particle is required.
pub fn trial_phase(trial: &Trial, etalons: &[Etalon]) -> Result<RandomPhase> {
    if etalons.is_empty() || (etalons.len() != 1 && etalons.len() != trial.n_particles()) {
        return Err(Error::param("etalons", "need one etalon, or one per particle"));
    }
    let mut total = 0.0;
    for (k, particle) in trial.particles.iter().enumerate() {
        let etalon = &etalons[k.min(etalons.len() - 1)];
        let n = etalon.grid().len();
        if particle.offset + particle.aux().len() > n {
            return Err(Error::GridMismatch("particle window exceeds the etalon grid".into()));
        }
        total += etalon.match_center(&particle.embedded(n))?.phase;
    }
    Ok(RandomPhase::new(total))
}

/// `sign cos(Φ + θ)`, with a zero cosine mapped to `+1`.
pub fn dichotomic_sample(phi: RandomPhase, theta: f64) -> i8 {
    if (phi.value() + theta).cos() >= 0.0 {
        1
    } else {
        -1
    }
}

/// Channel angles and sampling budget for the dichotomic functions.
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomicConfig {
    pub thetas: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl DichotomicConfig {
    pub fn new(thetas: Vec<f64>, n_samples: usize, seed: u64) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::param("thetas", "need at least one channel"));
        }
        if n_samples == 0 {
            return Err(Error::param("n_samples", "must be at least 1"));
        }
        Ok(Self { thetas, n_samples, seed })
    }

    /// Channel outputs for sample `index`, one per angle.
    pub fn channels(&self, phi: RandomPhase) -> Vec<i8> {
        self.thetas.iter().map(|&t| dichotomic_sample(phi, t)).collect()
    }
}

/// Where the trial phases `Φ_j` come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseSource {
    /// Fresh uniform phases from the counter-based generator.
    Uniform,
    /// Precomputed phases, e.g. from [`solitonic_phases`]; every phase is
    /// used once.
    Fixed(Vec<f64>),
}

/// A correlation estimate `E(f_1 f_2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Uniform phase of sample `i` in the stream family keyed by `seed`.
fn uniform_phases(seed: u64, n: usize) -> impl IndexedParallelIterator<Item = Vec<f64>> {
    let chunks = n.div_ceil(CHUNK);
    (0..chunks).into_par_iter().map(move |c| {
        let len = CHUNK.min(n - c * CHUNK);
        let mut rng = RngStream::in_domain(seed, domain::PHASES, c as u64).rng();
        (0..len).map(|_| rng.random::<f64>() * TAU).collect()
    })
}

/// Monte Carlo `E(f_1 f_2)` for channels `θ_1 = 0` and `θ_2 = |Δθ|`,
/// `|Δθ|` being the wrapped distance.
pub fn phase_correlation(config: &DichotomicConfig, source: &PhaseSource) -> Result<CorrelationEstimate> {
    if config.thetas.len() != 2 {
        return Err(Error::param("thetas", "phase correlation needs exactly two channels"));
    }
    let delta = angular_distance(config.thetas[1] - config.thetas[0]);
    let agree = |phi: f64| {
        let p = RandomPhase::new(phi);
        i64::from(dichotomic_sample(p, 0.0) * dichotomic_sample(p, delta))
    };
    let (sum, n) = match source {
        PhaseSource::Uniform => {
            if config.n_samples < 1000 {
                return Err(Error::param("n_samples", format!("{} < 1000", config.n_samples)));
            }
            let sums: Vec<i64> = uniform_phases(config.seed, config.n_samples)
                .map(|chunk| chunk.iter().map(|&phi| agree(phi)).sum())
                .collect();
            (sums.iter().sum::<i64>(), config.n_samples)
        }
        PhaseSource::Fixed(phases) => {
            if phases.is_empty() {
                return Err(Error::Empty("phases"));
            }
            (phases.par_iter().map(|&phi| agree(phi)).sum::<i64>(), phases.len())
        }
    };
    let value = sum as f64 / n as f64;
    let var = if n > 1 {
        (1.0 - value * value) * n as f64 / (n - 1) as f64
    } else {
        0.0
    };
    Ok(CorrelationEstimate {
        value,
        stderr: (var.max(0.0) / n as f64).sqrt(),
        n,
    })
}

/// Singlet spin correlation `-(a · b)` for unit vectors.
pub fn singlet_correlation(a: [f64; 3], b: [f64; 3]) -> Result<f64> {
    let norm = |v: [f64; 3]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm(a) - 1.0).abs() > 1e-10 || (norm(b) - 1.0).abs() > 1e-10 {
        return Err(Error::param("a, b", "must be unit vectors"));
    }
    Ok(-(a[0] * b[0] + a[1] * b[1] + a[2] * b[2]))
}

/// The line `1 - (2/π)|Δθ|` with wrapped `|Δθ|`.
pub fn linear_law(delta: f64) -> f64 {
    1.0 - 2.0 / PI * angular_distance(delta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationRow {
    pub delta_theta: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// `1 - (2/π)|Δθ|`.
    pub linear: f64,
    /// `-cos Δθ`, the singlet law at `a · b = cos Δθ`.
    pub singlet: f64,
}

/// Correlation estimates over `delta_thetas`, next to both closed forms.
/// Every row reuses the same phases.
pub fn correlation_curve(delta_thetas: &[f64], n_samples: usize, seed: u64, source: &PhaseSource) -> Result<Vec<CorrelationRow>> {
    delta_thetas
        .iter()
        .map(|&dt| {
            let cfg = DichotomicConfig::new(vec![0.0, dt], n_samples, seed)?;
            let est = phase_correlation(&cfg, source)?;
            Ok(CorrelationRow {
                delta_theta: dt,
                estimate: est.value,
                stderr: est.stderr,
                linear: linear_law(dt),
                singlet: -dt.cos(),
            })
        })
        .collect()
}

/// Phases `Φ_j` of `n_trials` random trials, recovered by matching every
/// particle against `etalon`.
pub fn solitonic_phases(
    dist: &CenterDistribution,
    profile: &SolitonProfile,
    etalon: &Etalon,
    n_particles: usize,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if etalon.grid() != dist.grid() {
        return Err(Error::GridMismatch(
            "etalon and center distribution use different grids".into(),
        ));
    }
    let trials = sample_trials(dist, profile, n_particles, n_trials, seed)?;
    trials
        .par_iter()
        .map(|t| trial_phase(t, std::slice::from_ref(etalon)).map(|p| p.value()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::make_profile;

    fn narrow() -> (SolitonProfile, Grid1D) {
        let g = Grid1D::centered(2.0, 1024).unwrap();
        (make_profile(1.0, 0.0, 0.02, Grid1D::centered(2.0, 1024).unwrap()).unwrap(), g)
    }

    fn broad() -> (Etalon, Grid1D) {
        let g = Grid1D::centered(0.1, 512).unwrap();
        let p = make_profile(1.0, 0.0, 0.7, g).unwrap();
        (Etalon::from_profile(&p, g).unwrap(), g)
    }

    #[test]
    fn self_match_recovers_shift() {
        let (e, g) = broad();
        let trial = e.shifted(1.7);
        let m = e.match_center(&trial).unwrap();
        assert!((m.d_hat - 1.7).abs() < 1e-3 * g.dx(), "{}", m.d_hat);
        assert!(m.phase.abs() < 1e-6);
        assert!(
            (m.overlap.norm() - spectral::norm_sqr(e.values(), g.dx())).abs() < 1e-8,
            "{} {}",
            m.overlap.norm(),
            spectral::norm_sqr(e.values(), g.dx())
        );
    }

    #[test]
    fn phase_factor_passes_through() {
        let (e, g) = broad();
        let rot = Complex64::from_polar(1.0, 0.9);
        let trial: Vec<_> = e.shifted(-3.33).iter().map(|v| v * rot).collect();
        let m = e.match_center(&trial).unwrap();
        assert!((m.phase - 0.9).abs() < 1e-6);
        assert!((m.d_hat + 3.33).abs() < 1e-3 * g.dx());
    }

    #[test]
    fn noisy_match_agrees_with_dense_search() {
        use rand::SeedableRng;
        let (e, g) = broad();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let peak = e.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let trial: Vec<_> = e
            .shifted(0.77)
            .iter()
            .map(|v| v + 0.05 * peak * Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let m = e.match_center(&trial).unwrap();
        // brute force: direct overlap with spectrally shifted etalons
        let best = (-200..=200)
            .map(|i| 0.77 + i as f64 * 0.005)
            .map(|d| (d, spectral::inner(&e.shifted(d), &trial, g.dx()).norm()))
            .fold((0.0, 0.0), |b, c| if c.1 > b.1 { c } else { b });
        assert!((m.d_hat - best.0).abs() < g.dx());
    }

    #[test]
    fn flat_objective_is_degenerate() {
        let g = Grid1D::centered(0.1, 64).unwrap();
        let e = Etalon::from_values(g, vec![Complex64::new(1.0, 0.0); 64]).unwrap();
        let err = e.match_center(&vec![Complex64::new(0.5, 0.0); 64]).unwrap_err();
        assert!(matches!(err, Error::DegenerateMatching));
        assert!(matches!(
            e.match_center(&vec![Complex64::new(0.0, 0.0); 64]),
            Err(Error::NullField)
        ));
    }

    #[test]
    fn match_is_translation_equivariant() {
        let (e, g) = broad();
        let a = e.match_center(&e.shifted(0.4)).unwrap();
        let b = e.match_center(&e.shifted(0.4 + 2.25)).unwrap();
        assert!((b.d_hat - a.d_hat - 2.25).abs() < 2e-3 * g.dx());
        assert!((a.overlap.norm() - b.overlap.norm()).abs() < 1e-8);
    }

    #[test]
    fn trial_phase_wraps() {
        let (p, g) = narrow();
        let e = Etalon::from_profile(&p, g).unwrap();
        let one = Trial::from_profile(&p, &g, &[10.0], &[2.0]).unwrap();
        let v = trial_phase(&one, std::slice::from_ref(&e)).unwrap().value();
        assert!((v - 2.0).abs() < 1e-3, "{v}");
        let two = Trial::from_profile(&p, &g, &[-500.0, 500.0], &[2.0, 5.0]).unwrap();
        let phi = trial_phase(&two, std::slice::from_ref(&e)).unwrap().value();
        assert!((phi - (7.0 - TAU)).abs() < 2e-3, "{phi}");
    }

    #[test]
    fn dichotomic_examples() {
        assert_eq!(dichotomic_sample(RandomPhase::new(0.0), 0.0), 1);
        assert_eq!(dichotomic_sample(RandomPhase::new(0.0), PI), -1);
        assert_eq!(dichotomic_sample(RandomPhase::new(PI / 3.0), PI / 3.0), -1);
        assert_eq!(RandomPhase::new(-0.5).value(), TAU - 0.5);
    }

    #[test]
    fn correlation_endpoints_and_line() {
        let rows = correlation_curve(&[0.0, PI / 4.0, PI / 2.0, PI], 100_000, 3, &PhaseSource::Uniform).unwrap();
        assert_eq!(rows[0].estimate, 1.0);
        assert_eq!(rows[3].estimate, -1.0);
        for r in &rows {
            assert!((r.estimate - r.linear).abs() < 4.0 * r.stderr.max(1e-3), "{r:?}");
        }
        assert!((rows[1].singlet + (PI / 4.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn correlation_is_even() {
        let a = phase_correlation(
            &DichotomicConfig::new(vec![0.0, 1.1], 5000, 8).unwrap(),
            &PhaseSource::Uniform,
        )
        .unwrap();
        let b = phase_correlation(
            &DichotomicConfig::new(vec![0.0, -1.1], 5000, 8).unwrap(),
            &PhaseSource::Uniform,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn singlet_examples() {
        assert_eq!(singlet_correlation([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]).unwrap(), -1.0);
        assert_eq!(singlet_correlation([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap(), 0.0);
        let c = singlet_correlation([1.0, 0.0, 0.0], [0.5, 0.75f64.sqrt(), 0.0]).unwrap();
        assert!((c + 0.5).abs() < 1e-15);
        assert!(singlet_correlation([1.0, 1.0, 0.0], [1.0, 0.0, 0.0]).is_err());
    }
}
