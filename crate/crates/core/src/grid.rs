use crate::error::{ensure_finite, Error, Result};

/// Uniform periodic grid on `[x_min, x_max)` with a power-of-two number of
/// points. Sample `i` sits at `x_min + i * dx` and represents the cell
/// `[x_i - dx/2, x_i + dx/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid1D {
    pub const MIN_POINTS: usize = 64;

    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        ensure_finite("grid bounds", &[x_min, x_max])?;
        if x_max <= x_min {
            return Err(Error::param("x_max", "must exceed x_min"));
        }
        if !n_points.is_power_of_two() || n_points < Self::MIN_POINTS {
            return Err(Error::param(
                "n_points",
                format!("{n_points} is not a power of two >= {}", Self::MIN_POINTS),
            ));
        }
        Ok(Self { x_min, x_max, n_points })
    }

    /// Grid centered on the origin: `x_i = (i - n/2) * dx`.
    pub fn centered(dx: f64, n_points: usize) -> Result<Self> {
        let half = dx * (n_points / 2) as f64;
        Self::new(-half, half, n_points)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn extent(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * std::f64::consts::PI / self.extent();
        (0..n)
            .map(|i| {
                let j = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
                j * dk
            })
            .collect()
    }

    /// Index of the sample nearest to `x`, if inside the grid.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let f = ((x - self.x_min) / self.dx()).round();
        if f >= 0.0 && f < self.n_points as f64 {
            Some(f as usize)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid1D::new(0.0, 1.0, 63).is_err());
        assert!(Grid1D::new(0.0, 1.0, 96).is_err());
        assert!(Grid1D::new(1.0, 0.0, 64).is_err());
        assert!(Grid1D::new(0.0, f64::NAN, 64).is_err());
    }

    #[test]
    fn spacing_and_wavenumbers() {
        let g = Grid1D::new(-4.0, 4.0, 64).unwrap();
        assert_eq!(g.dx(), 0.125);
        assert_eq!(g.x(32), 0.0);
        let k = g.wavenumbers();
        assert_eq!(k[0], 0.0);
        assert!((k[1] - 2.0 * std::f64::consts::PI / 8.0).abs() < 1e-15);
        assert!(k[63] < 0.0);
        let c = Grid1D::centered(0.5, 64).unwrap();
        assert_eq!(c.x(32), 0.0);
        assert_eq!(c.nearest_index(0.26), Some(33));
        assert_eq!(c.nearest_index(100.0), None);
    }
}
