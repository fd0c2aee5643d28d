//! Pairings against probe functions: plain L2 products, Riesz-weighted
//! products for long-range regimes, the identity-by-descent function F
//! recovered from its Fourier form, and the variance constant of the
//! fluctuation limit.
//!
//! F solves 2 mu F + 2 Psi F = gamma h in Fourier variables, where Psi is the
//! lineage symbol and h is a point mass for beta >= d or the Riesz kernel
//! |x|^{-beta} for beta < d. Everything here truncates integrals using the
//! probes' decay tags, so oscillatory probes are rejected up front.

use crate::geometry::{Dimension, Point};
use crate::kernels::testfn::{Decay, TestFunction};
use crate::kernels::{quad, riesz_constant, KernelSpec};
use crate::{Error, Result};
use std::cell::Cell;

fn support(phi: &TestFunction) -> Result<(Point, f64)> {
    match phi.decay {
        Decay::Compact { center, radius } | Decay::Rapid { center, radius } => {
            Ok((center, radius))
        }
        Decay::Oscillatory => Err(Error::unsupported(
            "pairing",
            "oscillatory probes cannot be paired",
        )),
    }
}

/// int phi(x) psi(x) dx over the overlap of the two supports, d <= 3 by
/// nested adaptive quadrature.
pub fn l2_pairing(phi: &TestFunction, psi: &TestFunction) -> Result<f64> {
    if phi.d != psi.d {
        return Err(Error::invalid("psi", "probe dimensions differ"));
    }
    let d = phi.d.get() as usize;
    if d > 3 {
        return Err(Error::unsupported("l2_pairing", "pairings cover d <= 3"));
    }
    let (ca, ra) = support(phi)?;
    let (cb, rb) = support(psi)?;
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for i in 0..d {
        lo[i] = (ca[i] - ra).max(cb[i] - rb);
        hi[i] = (ca[i] + ra).min(cb[i] + rb);
        if lo[i] >= hi[i] {
            return Ok(0.0);
        }
    }
    let f = |x: &Point| phi.value(x) * psi.value(x);
    match d {
        1 => quad::adaptive_gk(&mut |x0: f64| f(&[x0, 0.0, 0.0]), lo[0], hi[0], 1e-12, 1e-10),
        2 => {
            let failed = Cell::new(false);
            let v = quad::adaptive_gk(
                &mut |x0: f64| {
                    quad::adaptive_gk(
                        &mut |x1: f64| f(&[x0, x1, 0.0]),
                        lo[1],
                        hi[1],
                        1e-12,
                        1e-11,
                    )
                    .unwrap_or_else(|_| {
                        failed.set(true);
                        0.0
                    })
                },
                lo[0],
                hi[0],
                1e-10,
                1e-9,
            )?;
            if failed.get() {
                return Err(Error::Quadrature {
                    context: "l2_pairing",
                    achieved: f64::NAN,
                    requested: 1e-10,
                });
            }
            Ok(v)
        }
        _ => {
            let failed = Cell::new(false);
            let v = quad::adaptive_gk(
                &mut |x0: f64| {
                    quad::adaptive_gk(
                        &mut |x1: f64| {
                            quad::adaptive_gk(
                                &mut |x2: f64| f(&[x0, x1, x2]),
                                lo[2],
                                hi[2],
                                1e-12,
                                1e-11,
                            )
                            .unwrap_or_else(|_| {
                                failed.set(true);
                                0.0
                            })
                        },
                        lo[1],
                        hi[1],
                        1e-11,
                        1e-10,
                    )
                    .unwrap_or_else(|_| {
                        failed.set(true);
                        0.0
                    })
                },
                lo[0],
                hi[0],
                1e-9,
                1e-8,
            )?;
            if failed.get() {
                return Err(Error::Quadrature {
                    context: "l2_pairing",
                    achieved: f64::NAN,
                    requested: 1e-9,
                });
            }
            Ok(v)
        }
    }
}

/// Cross-correlation C(u) = int phi(y + u) psi(y) dy on the line.
fn cross_correlation(phi: &TestFunction, psi: &TestFunction, u: f64) -> Result<f64> {
    let (ca, ra) = support(phi)?;
    let (cb, rb) = support(psi)?;
    let lo = (cb[0] - rb).max(ca[0] - ra - u);
    let hi = (cb[0] + rb).min(ca[0] + ra - u);
    if lo >= hi {
        return Ok(0.0);
    }
    quad::adaptive_gk(
        &mut |y: f64| phi.at1(y + u) * psi.at1(y),
        lo,
        hi,
        1e-12,
        1e-10,
    )
}

/// <phi, h_beta * psi>: the plain L2 pairing for beta >= d, the Riesz-kernel
/// pairing int int phi(x) |x-y|^{-beta} psi(y) for beta < d (one dimension).
pub fn k_beta_pairing(
    d: Dimension,
    beta: f64,
    phi: &TestFunction,
    psi: &TestFunction,
) -> Result<f64> {
    if phi.d != d || psi.d != d {
        return Err(Error::invalid("phi", "probe dimension differs from pairing"));
    }
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", "tail exponent must be positive"));
    }
    let dd = d.get() as f64;
    if beta >= dd {
        return l2_pairing(phi, psi);
    }
    if d.get() != 1 {
        return Err(Error::unsupported(
            "k_beta_pairing",
            "the Riesz-weighted pairing is implemented in one dimension",
        ));
    }
    let (ca, ra) = support(phi)?;
    let (cb, rb) = support(psi)?;
    let umax = (ca[0] - cb[0]).abs() + ra + rb;
    // u = v^q absorbs the |u|^{-beta} endpoint into a flat integrand
    let q = 1.0 / (1.0 - beta);
    let failed = Cell::new(false);
    let both = |u: f64| -> f64 {
        cross_correlation(phi, psi, u).unwrap_or_else(|_| {
            failed.set(true);
            0.0
        }) + cross_correlation(phi, psi, -u).unwrap_or_else(|_| {
            failed.set(true);
            0.0
        })
    };
    let v = quad::adaptive_gk(
        &mut |w: f64| q * both(w.powf(q)),
        0.0,
        umax.powf(1.0 / q),
        1e-9,
        1e-8,
    )?;
    if failed.get() {
        return Err(Error::Quadrature {
            context: "k_beta_pairing",
            achieved: f64::NAN,
            requested: 1e-9,
        });
    }
    Ok(v)
}

/// Identity-by-descent function at separation r: the inverse transform of
/// gamma h_beta / (2 mu + 2 Psi).
pub fn wm_function(
    spec: &KernelSpec,
    mu: f64,
    gamma: f64,
    beta: f64,
    r: f64,
) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::invalid("mu", "mutation rate must be positive"));
    }
    if !(gamma > 0.0 && beta > 0.0) {
        return Err(Error::invalid("gamma", "pair constants must be positive"));
    }
    let dd = spec.d.get() as f64;
    let tol = 1e-10 * (gamma / (2.0 * mu)).max(1.0);
    if beta >= dd {
        quad::inverse_radial_ft(
            &|s| gamma / (2.0 * mu + 2.0 * spec.symbol(s)),
            spec.d,
            r,
            0.0,
            tol,
        )
    } else {
        let rz = riesz_constant(spec.d, beta)?;
        quad::inverse_radial_ft(
            &|s| gamma * rz * s.powf(beta - dd) / (2.0 * mu + 2.0 * spec.symbol(s)),
            spec.d,
            r,
            beta - dd,
            tol,
        )
    }
}

/// <phi, F * psi> on the line: correlate the probes, then integrate the
/// correlation against F.
pub fn wm_pairing(
    spec: &KernelSpec,
    mu: f64,
    gamma: f64,
    beta: f64,
    phi: &TestFunction,
    psi: &TestFunction,
) -> Result<f64> {
    if spec.d.get() != 1 || phi.d.get() != 1 || psi.d.get() != 1 {
        return Err(Error::unsupported(
            "wm_pairing",
            "the paired identity functional is implemented in one dimension",
        ));
    }
    let (ca, ra) = support(phi)?;
    let (cb, rb) = support(psi)?;
    let sep = ca[0] - cb[0];
    let reach = ra + rb;
    let (ulo, uhi) = (sep - reach, sep + reach);
    if uhi <= ulo {
        return Ok(0.0);
    }
    // |u| over the correlation support; start at the gap if the supports are
    // disjoint so F is only sampled where the correlation lives
    let start = if ulo > 0.0 {
        ulo
    } else if uhi < 0.0 {
        -uhi
    } else {
        0.0
    };
    let end = uhi.abs().max(ulo.abs());
    let failed = Cell::new(false);
    let v = quad::adaptive_gk(
        &mut |u: f64| {
            let c = cross_correlation(phi, psi, u).unwrap_or_else(|_| {
                failed.set(true);
                0.0
            }) + cross_correlation(phi, psi, -u).unwrap_or_else(|_| {
                failed.set(true);
                0.0
            });
            if c == 0.0 {
                0.0
            } else {
                c * wm_function(spec, mu, gamma, beta, u).unwrap_or_else(|_| {
                    failed.set(true);
                    0.0
                })
            }
        },
        start,
        end,
        1e-7,
        1e-6,
    )?;
    if failed.get() {
        return Err(Error::Quadrature {
            context: "wm_pairing",
            achieved: f64::NAN,
            requested: 1e-7,
        });
    }
    Ok(v)
}

/// Variance constant of the rescaled allele-frequency fluctuations tested
/// against phi in space and an indicator window of type space:
/// gamma <phi, h_beta * phi> (int psi^2 - (int psi)^2).
pub fn q_pairing(
    d: Dimension,
    beta: f64,
    gamma: f64,
    phi: &TestFunction,
    type_window: (f64, f64),
) -> Result<f64> {
    let (lo, hi) = type_window;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::invalid(
            "type_window",
            "the type window must be a nonempty subinterval of [0, 1]",
        ));
    }
    let len = hi - lo;
    let spatial = k_beta_pairing(d, beta, phi, phi)?;
    Ok(gamma * spatial * len * (1.0 - len))
}
