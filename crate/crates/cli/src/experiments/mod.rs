//! One module per subcommand. Each `run` returns typed results; `outcome`
//! renders them to CSV and SVG.

pub mod born;
pub mod clt;
pub mod diffraction;
pub mod lattice;
pub mod observable;
pub mod qubit;
pub mod wiener;

use std::f64::consts::FRAC_1_SQRT_2;

use solqm_core::soliton::{make_profile, SolitonProfile};
use solqm_core::{Grid1D, Result};

/// Host grid of spacing `l0/2` centered on the origin and covering
/// `[-half_extent, half_extent]`, with a size-`l0` rest soliton.
pub(crate) fn ensemble_setup(l0: f64, half_extent: f64) -> Result<(Grid1D, SolitonProfile)> {
    if !(l0 > 0.0 && l0.is_finite()) {
        return Err(solqm_core::Error::InvalidParameter {
            name: "l0",
            reason: format!("{l0} is not a positive size"),
        });
    }
    let dx = 0.5 * l0;
    let n = ((2.0 * half_extent / dx).ceil() as usize)
        .next_power_of_two()
        .max(Grid1D::MIN_POINTS);
    let host = Grid1D::centered(dx, n)?;
    let m = 1.0 / l0;
    let profile_points = ((30.0 * l0 / dx).ceil() as usize).next_power_of_two().max(256);
    let profile = make_profile(m, 0.0, m * FRAC_1_SQRT_2, Grid1D::centered(dx, profile_points)?)?;
    Ok((host, profile))
}
