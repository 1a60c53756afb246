//! Random streams and goodness-of-fit tests.
//!
//! Every random quantity in the crate is drawn from an [`RngStream`], a
//! ChaCha8 keystream addressed by `(seed, stream id, word counter)`. Work
//! items (trials, paths, sample blocks) own distinct stream ids or counter
//! ranges, so the values they see do not depend on how work is scheduled
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

/// Well-known domain tags so experiments never share a stream by accident.
pub mod domain {
    pub const TRIALS: u64 = 0x7472_6961_6c73;
    pub const PHASES: u64 = 0x7068_6173_6573;
    pub const PATHS_X: u64 = 0x7061_7468_5f78;
    pub const PATHS_Y: u64 = 0x7061_7468_5f79;
    pub const IMPACT: u64 = 0x696d_7061_6374;
    pub const REPLICAS: u64 = 0x7265_706c_6963;
    pub const FUNCTIONS: u64 = 0x6675_6e63_7473;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a domain tag into a master seed.
pub fn domain_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    id: u64,
}

impl RngStream {
    pub fn new(seed: u64, id: u64) -> Self {
        Self { seed, id }
    }

    /// Stream `id` inside the sub-space reserved for `tag`.
    pub fn in_domain(seed: u64, tag: u64, id: u64) -> Self {
        Self::new(domain_seed(seed, tag), id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.id);
        rng
    }

    /// Generator positioned at 32-bit word `word` of this stream.
    pub fn rng_at(&self, word: u128) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_word_pos(word);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    /// Degrees of freedom for chi-square reports, zero otherwise.
    pub dof: usize,
}

/// Pearson chi-square goodness of fit.
///
/// `observed` may hold non-integer weights. Adjacent bins are merged until
/// every expected count reaches 5; a short tail is folded into the last bin.
pub fn chi_square_gof(observed: &[f64], expected_probs: &[f64]) -> Result<TestReport> {
    if observed.len() != expected_probs.len() {
        return Err(Error::param("expected_probs", "length differs from observed"));
    }
    if observed.iter().chain(expected_probs).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::param("observed", "counts and probabilities must be finite and >= 0"));
    }
    let total_p: f64 = expected_probs.iter().sum();
    if (total_p - 1.0).abs() > 1e-6 {
        return Err(Error::param("expected_probs", format!("sum to {total_p}, not 1")));
    }
    let n: f64 = observed.iter().sum();
    if n <= 0.0 {
        return Err(Error::Empty("observed"));
    }

    let mut merged: Vec<(f64, f64)> = Vec::new();
    let (mut acc_o, mut acc_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected_probs) {
        acc_o += o;
        acc_e += n * p / total_p;
        if acc_e >= 5.0 {
            merged.push((acc_o, acc_e));
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += acc_o;
                last.1 += acc_e;
            }
            None => merged.push((acc_o, acc_e)),
        }
    }
    if merged.len() < 2 {
        return Err(Error::TooFewBins(merged.len()));
    }

    let statistic: f64 = merged.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = merged.len() - 1;
    let p_value = if statistic <= 0.0 {
        1.0
    } else {
        gamma_ur(dof as f64 / 2.0, statistic / 2.0).clamp(0.0, 1.0)
    };
    Ok(TestReport {
        statistic,
        p_value,
        n: n.round() as usize,
        dof,
    })
}

/// Asymptotic Kolmogorov survival function `Q(lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sided one-sample KS test against `cdf`.
pub fn ks_test<F>(samples: &[f64], cdf: F) -> Result<TestReport>
where
    F: Fn(f64) -> f64,
{
    if samples.len() < 8 {
        return Err(Error::param("samples", "KS test needs at least 8 samples"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok(TestReport {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
        n: sorted.len(),
        dof: 0,
    })
}

/// KS test of normality against a Gaussian with the sample's own mean and
/// standard deviation.
pub fn ks_normal_fitted(samples: &[f64]) -> Result<TestReport> {
    let est = MeanEstimate::from_slice(samples);
    let sd = est.sd();
    if !(sd > 0.0) {
        return Err(Error::param("samples", "zero variance"));
    }
    let normal = Normal::new(est.mean, sd).map_err(|e| Error::param("samples", e.to_string()))?;
    ks_test(samples, |x| normal.cdf(x))
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanEstimate {
    pub n: usize,
    pub mean: f64,
    m2: f64,
}

impl MeanEstimate {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut est = Self::default();
        xs.iter().for_each(|&x| est.push(x));
        est
    }

    /// Chan's parallel combination. Callers merge partials in a fixed order.
    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Self { n, mean, m2 }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Fixed-range histogram with under/overflow tallies.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(hi > lo) || bins == 0 {
            return Err(Error::param("bins", "need hi > lo and at least one bin"));
        }
        Ok(Self {
            lo,
            hi,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn center(&self, bin: usize) -> f64 {
        self.lo + (bin as f64 + 0.5) * self.width()
    }

    pub fn edges(&self, bin: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + bin as f64 * w, self.lo + (bin + 1) as f64 * w)
    }

    pub fn add(&mut self, x: f64) {
        if x < self.lo {
            self.underflow += 1;
        } else if x >= self.hi {
            self.overflow += 1;
        } else {
            let last = self.counts.len() - 1;
            let bin = ((x - self.lo) / self.width()) as usize;
            self.counts[bin.min(last)] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }

    /// Counts in the layout `[underflow, bins..., overflow]`.
    pub fn with_tails(&self) -> Vec<f64> {
        std::iter::once(self.underflow)
            .chain(self.counts.iter().copied())
            .chain(std::iter::once(self.overflow))
            .map(|c| c as f64)
            .collect()
    }
}

/// CDF of a density that is constant on consecutive cells of width `dx`
/// starting at `start`; linear inside each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseCdf {
    start: f64,
    dx: f64,
    /// Values at the cell edges, `cdf[0] = 0`, last = 1.
    cdf: Vec<f64>,
}

impl PiecewiseCdf {
    /// Normalizes the non-negative cell `masses`.
    pub fn from_masses(start: f64, dx: f64, masses: &[f64]) -> Result<Self> {
        if masses.is_empty() || !(dx > 0.0) || !start.is_finite() {
            return Err(Error::param("masses", "need at least one cell of positive width"));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::param("masses", "must be finite and non-negative"));
        }
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return Err(Error::param("masses", "has zero total"));
        }
        let mut cdf = Vec::with_capacity(masses.len() + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for m in masses {
            acc += m / total;
            cdf.push(acc);
        }
        let last = cdf.len() - 1;
        cdf[last] = 1.0;
        Ok(Self { start, dx, cdf })
    }

    pub fn cells(&self) -> usize {
        self.cdf.len() - 1
    }

    pub fn support(&self) -> (f64, f64) {
        (self.start, self.start + self.cells() as f64 * self.dx)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let f = (x - self.start) / self.dx;
        if f <= 0.0 {
            return 0.0;
        }
        let i = f.floor() as usize;
        if i >= self.cells() {
            return 1.0;
        }
        let t = f - i as f64;
        self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])
    }

    /// Generalized inverse `inf{x : F(x) >= u}`; `u = 0` maps to the left
    /// edge of the first cell with mass.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if u == 0.0 {
            let edge = self.cdf.partition_point(|&c| c <= 0.0) - 1;
            return self.start + edge as f64 * self.dx;
        }
        let edge = self.cdf.partition_point(|&c| c < u).min(self.cells());
        let (lo, hi) = (self.cdf[edge - 1], self.cdf[edge]);
        let frac = if hi > lo { (u - lo) / (hi - lo) } else { 1.0 };
        self.start + (edge as f64 - 1.0 + frac) * self.dx
    }

    /// Probability of cells `[first, first + len)`.
    pub fn mass_of_cells(&self, first: usize, len: usize) -> f64 {
        let end = (first + len).min(self.cells());
        self.cdf[end] - self.cdf[first.min(end)]
    }
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn piecewise_cdf_round_trip() {
        let c = PiecewiseCdf::from_masses(-1.0, 0.5, &[1.0, 0.0, 3.0, 4.0]).unwrap();
        assert_eq!(c.support(), (-1.0, 1.0));
        assert_eq!(c.cdf(-2.0), 0.0);
        assert_eq!(c.cdf(5.0), 1.0);
        assert!((c.cdf(-0.75) - 1.0 / 16.0).abs() < 1e-15);
        for u in [0.01, 0.2, 0.5, 0.93] {
            assert!((c.cdf(c.quantile(u)) - u).abs() < 1e-12);
        }
        // a flat stretch maps to its left end
        assert_eq!(c.quantile(0.125), -0.5);
        assert_eq!(c.quantile(0.0), -1.0);
        assert_eq!(c.quantile(1.0), 1.0);
        assert!((c.mass_of_cells(2, 2) - 7.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn proportional_counts_give_zero_statistic() {
        let r = chi_square_gof(&[25.0, 50.0, 25.0], &[0.25, 0.5, 0.25]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.dof, 2);
    }

    #[test]
    fn two_bin_hand_computation() {
        let r = chi_square_gof(&[60.0, 40.0], &[0.5, 0.5]).unwrap();
        assert!((r.statistic - 4.0).abs() < 1e-12);
        // P(chi2_1 > 4) = erfc(sqrt(2)) = 0.0455002638...
        assert!((r.p_value - 0.045_500_263_896_358_4).abs() < 1e-9);
    }

    #[test]
    fn sparse_tail_bin_is_merged() {
        // n = 100: expected counts 49, 49, 1, 1 -> last two fold into bin 2.
        let r = chi_square_gof(&[49.0, 49.0, 1.0, 1.0], &[0.49, 0.49, 0.01, 0.01]).unwrap();
        assert_eq!(r.dof, 1);
        let err = chi_square_gof(&[3.0, 1.0], &[0.5, 0.5]).unwrap_err();
        assert_eq!(err, Error::TooFewBins(1));
    }

    #[test]
    fn ks_null_calibration() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut passes = 0;
        for seed in 0..100 {
            let mut rng = RngStream::new(seed, 0).rng();
            let xs: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
            if ks_test(&xs, |x| normal.cdf(x)).unwrap().p_value > 0.01 {
                passes += 1;
            }
        }
        assert!(passes >= 98, "{passes}/100");
    }

    #[test]
    fn ks_detects_unit_shift() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        let xs: Vec<f64> = (0..10_000).map(|_| 1.0 + rng.sample::<f64, _>(StandardNormal)).collect();
        assert!(ks_test(&xs, |x| normal.cdf(x)).unwrap().p_value < 1e-6);
    }

    #[test]
    fn ks_point_mass() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x0 = 0.7;
        let r = ks_test(&[x0; 16], |x| normal.cdf(x)).unwrap();
        let f = normal.cdf(x0);
        assert!((r.statistic - f.max(1.0 - f)).abs() < 1e-15);
    }

    #[test]
    fn ks_rejects_nan() {
        let mut xs = vec![0.0; 10];
        xs[3] = f64::NAN;
        assert_eq!(ks_test(&xs, |x| x).unwrap_err(), Error::NonFinite("samples"));
    }

    #[test]
    fn streams_are_reproducible_and_uncorrelated() {
        let a: Vec<f64> = {
            let mut r = RngStream::new(11, 1).rng();
            (0..1_000_000).map(|_| r.random::<f64>() - 0.5).collect()
        };
        let b: Vec<f64> = {
            let mut r = RngStream::new(11, 2).rng();
            (0..1_000_000).map(|_| r.random::<f64>() - 0.5).collect()
        };
        let again: Vec<f64> = {
            let mut r = RngStream::new(11, 1).rng();
            (0..1000).map(|_| r.random::<f64>() - 0.5).collect()
        };
        assert_eq!(&a[..1000], &again[..]);
        assert!(pearson(&a, &b).abs() < 4.0 / 1000.0);
    }

    #[test]
    fn counter_positioning_matches_sequential() {
        let s = RngStream::new(5, 9);
        let mut seq = s.rng();
        let seq_vals: Vec<u64> = (0..100).map(|_| seq.random()).collect();
        let mut jumped = s.rng_at(2 * 60);
        assert_eq!(jumped.random::<u64>(), seq_vals[60]);
    }

    #[test]
    fn welford_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let whole = MeanEstimate::from_slice(&xs);
        let parts = MeanEstimate::from_slice(&xs[..313]).merge(&MeanEstimate::from_slice(&xs[313..]));
        assert!((whole.mean - parts.mean).abs() < 1e-14);
        assert!((whole.variance() - parts.variance()).abs() < 1e-13);
    }
}
