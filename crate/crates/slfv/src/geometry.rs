//! Euclidean geometry used everywhere else: ball volumes, two-ball
//! intersection (lens) volumes, the two tail constants built from lens
//! integrals, and uniform sampling from balls.

use crate::kernels::quad;
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Spatial dimension, validated at construction. Analytic routines accept any
/// d >= 1; samplers and simulators are restricted to d <= 3 at their entry
/// points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Dimension(u32);

impl Dimension {
    pub fn new(d: u32) -> Result<Self> {
        if d >= 1 {
            Ok(Dimension(d))
        } else {
            Err(Error::invalid("d", "dimension must be at least 1"))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for Dimension {
    type Error = Error;
    fn try_from(d: u32) -> Result<Self> {
        Dimension::new(d)
    }
}

impl From<Dimension> for u32 {
    fn from(d: Dimension) -> u32 {
        d.0
    }
}

/// Points carry three coordinates regardless of dimension; coordinates past
/// the active dimension stay zero.
pub type Point = [f64; 3];

pub fn distance(d: Dimension, a: &Point, b: &Point) -> f64 {
    let mut s = 0.0;
    for i in 0..d.get() as usize {
        let dx = a[i] - b[i];
        s += dx * dx;
    }
    s.sqrt()
}

/// Volume of the unit ball via V_d = V_{d-2} * 2 pi / d.
pub fn unit_ball_volume(d: Dimension) -> f64 {
    let mut v = if d.get().is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut k = if d.get().is_multiple_of(2) { 2 } else { 3 };
    while k <= d.get() {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

pub fn ball_volume(d: Dimension, r: f64) -> f64 {
    unit_ball_volume(d) * r.powi(d.get() as i32)
}

/// Volume of the intersection of two balls of equal radius `r` whose centers
/// are distance `s` apart. Closed forms for d <= 3, regularized incomplete
/// beta otherwise.
pub fn lens_volume(d: Dimension, r: f64, s: f64) -> f64 {
    assert!(r > 0.0 && s >= 0.0);
    if s >= 2.0 * r {
        return 0.0;
    }
    match d.get() {
        1 => 2.0 * r - s,
        2 => {
            2.0 * r * r * (s / (2.0 * r)).acos() - 0.5 * s * (4.0 * r * r - s * s).sqrt()
        }
        3 => {
            let a = 2.0 * r - s;
            std::f64::consts::PI * a * a * (4.0 * r + s) / 12.0
        }
        dd => {
            let x = 1.0 - (s / (2.0 * r)) * (s / (2.0 * r));
            let i = statrs::function::beta::beta_reg((dd as f64 + 1.0) / 2.0, 0.5, x);
            ball_volume(d, r) * i
        }
    }
}

/// Ball volume minus the unit-separation lens, computed without subtracting
/// nearly equal quantities so it stays accurate for r in the thousands where
/// the deficit is a vanishing fraction of the ball.
fn lens_deficit(d: Dimension, r: f64) -> f64 {
    if r <= 0.5 {
        return ball_volume(d, r);
    }
    if d.get() == 1 {
        return 1.0;
    }
    let x = 1.0 / (4.0 * r * r);
    let i = statrs::function::beta::beta_reg(0.5, (d.get() as f64 + 1.0) / 2.0, x);
    ball_volume(d, r) * i
}

/// int_{1/2}^inf lens(r) / (V_d r^d)^2 * r^{-1-alpha} dr, restricted to the
/// stable range alpha in (0, 2) where the limit theory uses it.
pub fn c1_constant(d: Dimension, alpha: f64) -> Result<f64> {
    if alpha >= 2.0 {
        return Err(Error::invalid(
            "alpha",
            "C1 is only defined for stable indices below 2",
        ));
    }
    c1_integral(d, alpha)
}

fn c1_integral(d: Dimension, alpha: f64) -> Result<f64> {
    if alpha <= 0.0 {
        return Err(Error::invalid("alpha", "tail exponent must be positive"));
    }
    let vd = unit_ball_volume(d);
    let mut f = |r: f64| {
        let b = vd * r.powi(d.get() as i32);
        lens_volume(d, r, 1.0) / (b * b) * r.powf(-1.0 - alpha)
    };
    let head = quad::adaptive_gk(&mut f, 0.5, 2.0, 1e-13, 1e-11)?;
    let tail = quad::power_tail(&mut f, 2.0, 1e-12)?;
    Ok(head + tail)
}

/// int_{1/2}^inf lens(r) * r^{-1-d-beta} dr for beta > 0. The tail splits
/// lens = ball - deficit; the ball part integrates in closed form and the
/// deficit part decays a full power faster, so the sum converges quickly even
/// for small beta.
pub fn c2_constant(d: Dimension, beta: f64) -> Result<f64> {
    if beta >= d.get() as f64 {
        return Err(Error::invalid(
            "beta",
            "C2 is only used for long-range coalescence, beta < d",
        ));
    }
    c2_integral(d, beta)
}

fn c2_integral(d: Dimension, beta: f64) -> Result<f64> {
    if beta <= 0.0 {
        return Err(Error::invalid("beta", "tail exponent must be positive"));
    }
    let dd = d.get() as f64;
    let mut head_f = |r: f64| lens_volume(d, r, 1.0) * r.powf(-1.0 - dd - beta);
    let head = quad::adaptive_gk(&mut head_f, 0.5, 2.0, 1e-13, 1e-11)?;
    let ball_part = unit_ball_volume(d) * 2f64.powf(-beta) / beta;
    let mut deficit_f = |r: f64| lens_deficit(d, r) * r.powf(-1.0 - dd - beta);
    let deficit_part = quad::power_tail(&mut deficit_f, 2.0, 1e-12)?;
    Ok(head + ball_part - deficit_part)
}

/// Uniform sample from the ball of radius `r` around `center` (d <= 3).
/// d = 1 inverts the cdf directly; d = 2, 3 reject from the bounding cube
/// (acceptance pi/4 and pi/6).
pub fn sample_uniform_ball<R: Rng + ?Sized>(
    d: Dimension,
    center: &Point,
    r: f64,
    rng: &mut R,
) -> Point {
    let dd = d.get() as usize;
    assert!(dd <= 3, "samplers only support d <= 3");
    let mut p = [0.0; 3];
    if dd == 1 {
        p[0] = center[0] + r * (2.0 * rng.random::<f64>() - 1.0);
        return p;
    }
    loop {
        let mut n2 = 0.0;
        for slot in p.iter_mut().take(dd) {
            let x = 2.0 * rng.random::<f64>() - 1.0;
            *slot = x;
            n2 += x * x;
        }
        if n2 <= 1.0 {
            for (slot, c) in p.iter_mut().zip(center.iter()).take(dd) {
                *slot = c + r * *slot;
            }
            return p;
        }
    }
}
