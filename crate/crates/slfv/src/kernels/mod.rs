//! The analytic layer: Fourier symbols of the limiting lineage motions,
//! generator application, stable transition densities, and the pairings that
//! enter the identity-by-descent predictions.

pub mod bessel;
pub mod generator;
pub mod pairing;
pub(crate) mod quad;
pub mod stable;
pub mod testfn;

use crate::geometry::Dimension;
use crate::{Error, Result};
use statrs::function::beta::beta as beta_fn;
use statrs::function::gamma::gamma;

/// Limiting motion of a single ancestral lineage: an isotropic alpha-stable
/// process driven by ball averages (alpha < 2), or Brownian motion (alpha = 2).
/// The Fourier multiplier is `symbol(s) = scale * s^alpha` with
/// `scale = zeta * kappa` in the stable case and `sigma2 / 2` in the
/// Brownian case.
#[derive(Debug, Clone, Copy)]
pub struct KernelSpec {
    pub d: Dimension,
    pub alpha: f64,
    /// zeta (jump intensity) for alpha < 2, sigma^2 for alpha = 2.
    pub coefficient: f64,
    symbol_scale: f64,
}

impl KernelSpec {
    pub fn stable(d: Dimension, alpha: f64, zeta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::invalid("alpha", "stable index must lie in (0, 2)"));
        }
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(Error::invalid("zeta", "jump intensity must be positive"));
        }
        let kappa = symbol_constant(d, alpha)?;
        Ok(KernelSpec {
            d,
            alpha,
            coefficient: zeta,
            symbol_scale: zeta * kappa,
        })
    }

    pub fn brownian(d: Dimension, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid("sigma2", "diffusivity must be positive"));
        }
        Ok(KernelSpec {
            d,
            alpha: 2.0,
            coefficient: sigma2,
            symbol_scale: 0.5 * sigma2,
        })
    }

    pub fn is_brownian(&self) -> bool {
        self.alpha == 2.0
    }

    /// Fourier multiplier at radial frequency s >= 0.
    pub fn symbol(&self, s: f64) -> f64 {
        self.symbol_scale * s.powf(self.alpha)
    }
}

/// kappa_{d,alpha} = int_0^inf (1 - m_d(s)) s^{-1-alpha} ds where m_d is the
/// characteristic function of the uniform law on the unit ball. Evaluated in
/// closed form: the one-dimensional cosine integral constant times the
/// angular moment E|w_1|^alpha of a uniform direction, which reduces to a
/// beta function.
pub fn symbol_constant(d: Dimension, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::invalid("alpha", "stable index must lie in (0, 2)"));
    }
    // C_alpha = int_0^inf (1 - cos v) v^{-1-alpha} dv, written so the
    // removable singularity at alpha = 1 never produces 0/0
    let t = alpha - 1.0;
    let half_pi_t = 0.5 * std::f64::consts::PI * t;
    let ratio = if t.abs() < 1e-8 {
        0.5 * std::f64::consts::PI * (1.0 - half_pi_t * half_pi_t / 6.0)
    } else {
        half_pi_t.sin() / t
    };
    let c_alpha = ratio * gamma(2.0 - alpha) / alpha;
    let dd = d.get() as f64;
    let c_d = gamma(0.5 * dd + 1.0)
        / (std::f64::consts::PI.sqrt() * gamma(0.5 * (dd + 1.0)));
    let angular = c_d * beta_fn(0.5 * (alpha + 1.0), 0.5 * (dd + 1.0));
    Ok(c_alpha * angular)
}

/// Fourier transform constant of the Riesz kernel: |x|^{-beta} on R^d has
/// transform r_{d,beta} |xi|^{beta-d}, valid for 0 < beta < d.
pub fn riesz_constant(d: Dimension, beta: f64) -> Result<f64> {
    let dd = d.get() as f64;
    if !(beta > 0.0 && beta < dd) {
        return Err(Error::invalid(
            "beta",
            "Riesz transform needs 0 < beta < d",
        ));
    }
    Ok(std::f64::consts::PI.powf(0.5 * dd) * 2f64.powf(dd - beta)
        * gamma(0.5 * (dd - beta))
        / gamma(0.5 * beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    // independent route: direct quadrature of the defining integral, series
    // head below s0 and Euler-accelerated oscillatory panels past s0
    fn symbol_constant_by_quadrature(d: Dimension, alpha: f64) -> f64 {
        let s0 = bessel::ball_cf_zero(d, 1);
        // head: (1 - m_d(s)) s^{-1-alpha}, substitution s = v^q flattens the
        // s^{1-alpha} vanishing at the origin
        let q = 1.0 / (2.0 - alpha);
        let head = quad::adaptive_gk(
            &mut |v: f64| {
                let s = v.powf(q);
                bessel::one_minus_ball_cf(d, s) * s.powf(-1.0 - alpha) * q * v.powf(q - 1.0)
            },
            0.0,
            s0.powf(1.0 / q),
            1e-12,
            1e-11,
        )
        .unwrap();
        // tail: int_{s0}^inf s^{-1-alpha} ds - int_{s0}^inf m_d(s) s^{-1-alpha} ds
        let osc = quad::alternating_panel_sum(
            |k| {
                quad::adaptive_gk(
                    &mut |s: f64| bessel::ball_cf(d, s) * s.powf(-1.0 - alpha),
                    bessel::ball_cf_zero(d, k + 1),
                    bessel::ball_cf_zero(d, k + 2),
                    1e-13,
                    1e-10,
                )
            },
            1e-12,
        )
        .unwrap();
        head + s0.powf(-alpha) / alpha - osc
    }

    #[test]
    fn symbol_constant_known_values() {
        let cases = [
            (1, 1.0, std::f64::consts::FRAC_PI_4),
            (1, 0.5, 1.6710855164),
            (1, 1.3, 0.6569730091),
            (1, 1.5, 0.6684342066),
            (2, 0.5, 1.5295641520),
            (2, 1.0, 2.0 / 3.0),
            (2, 1.5, 0.5313267911),
            (3, 0.5, 1.4323590141),
            (3, 1.0, 0.5890486225),
            (3, 1.5, 0.4456228044),
        ];
        for (d, alpha, want) in cases {
            let got = symbol_constant(Dimension::new(d).unwrap(), alpha).unwrap();
            assert!(
                (got - want).abs() < 1e-9,
                "d={d} alpha={alpha}: got {got} want {want}"
            );
        }
    }

    #[test]
    fn symbol_constant_matches_direct_quadrature() {
        for d in [1u32, 2, 3] {
            let d = Dimension::new(d).unwrap();
            for alpha in [0.6, 1.0, 1.4, 1.9] {
                let closed = symbol_constant(d, alpha).unwrap();
                let direct = symbol_constant_by_quadrature(d, alpha);
                assert!(
                    (closed - direct).abs() < 1e-8 * closed,
                    "d={} alpha={alpha}: closed {closed} direct {direct}",
                    d.get()
                );
            }
        }
    }

    #[test]
    fn symbol_constant_is_continuous_at_one() {
        let d = Dimension::new(2).unwrap();
        let at = symbol_constant(d, 1.0).unwrap();
        let below = symbol_constant(d, 1.0 - 1e-9).unwrap();
        let above = symbol_constant(d, 1.0 + 1e-9).unwrap();
        assert!((at - below).abs() < 1e-8);
        assert!((at - above).abs() < 1e-8);
    }

    #[test]
    fn riesz_constant_values() {
        // d=1, beta=1/2: pi^{1/2} 2^{1/2} Gamma(1/4)/Gamma(1/4) = sqrt(2 pi)
        let got = riesz_constant(Dimension::new(1).unwrap(), 0.5).unwrap();
        assert!((got - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        // d=2, beta=1: pi 2 Gamma(1/2)/Gamma(1/2) = 2 pi
        let got = riesz_constant(Dimension::new(2).unwrap(), 1.0).unwrap();
        assert!((got - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(riesz_constant(Dimension::new(2).unwrap(), 2.0).is_err());
    }

    #[test]
    fn kernel_spec_symbols() {
        let d = Dimension::new(1).unwrap();
        let stable = KernelSpec::stable(d, 1.0, 2.0).unwrap();
        // zeta kappa s^alpha = 2 * pi/4 * s
        assert!((stable.symbol(3.0) - 2.0 * std::f64::consts::FRAC_PI_4 * 3.0).abs() < 1e-12);
        let bm = KernelSpec::brownian(d, 0.8).unwrap();
        assert!((bm.symbol(3.0) - 0.4 * 9.0).abs() < 1e-12);
        assert!(KernelSpec::stable(d, 2.0, 1.0).is_err());
        assert!(KernelSpec::brownian(d, 0.0).is_err());
    }
}
