//! Transition densities of the limiting lineage motions, recovered from
//! their Fourier symbols. Brownian closes; stable indices invert the
//! characteristic function numerically, which keeps the density honest with
//! respect to whatever symbol constant the kernel carries.

use crate::kernels::{quad, KernelSpec};
use crate::{Error, Result};

/// Density at distance `r` from the start point after time `t`.
pub fn stable_density(spec: &KernelSpec, t: f64, r: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", "time must be positive"));
    }
    if !(r >= 0.0) {
        return Err(Error::invalid("r", "radius must be nonnegative"));
    }
    let dd = spec.d.get() as f64;
    if spec.is_brownian() {
        let v = spec.coefficient * t; // sigma^2 t
        return Ok(
            (2.0 * std::f64::consts::PI * v).powf(-0.5 * dd) * (-r * r / (2.0 * v)).exp()
        );
    }
    if spec.d.get() > 3 {
        return Err(Error::unsupported(
            "stable_density",
            "numerical inversion is implemented for d <= 3",
        ));
    }
    quad::inverse_radial_ft(&|s| (-t * spec.symbol(s)).exp(), spec.d, r, 0.0, 1e-11)
}
