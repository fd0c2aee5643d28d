//! Probe functions bundled with the closed-form companions the generator and
//! pairing routines need: Laplacians for small-jump Taylor heads, running
//! antiderivatives for exact one-dimensional ball averages, and decay tags
//! that tell integrators where to truncate.

use crate::geometry::{distance, Dimension, Point};
use crate::kernels::bessel;
use statrs::function::erf::erf;

type SpaceFn = Box<dyn Fn(&Point) -> f64 + Send + Sync>;
type BallAvgFn = Box<dyn Fn(&Point, f64) -> f64 + Send + Sync>;
type LineFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// How fast the function falls off. Integration routines truncate at the
/// stated radius; `Oscillatory` functions are accepted only by symbol probes.
#[derive(Debug, Clone, Copy)]
pub enum Decay {
    /// identically zero outside the ball
    Compact { center: Point, radius: f64 },
    /// below 1e-20 of peak outside the ball
    Rapid { center: Point, radius: f64 },
    Oscillatory,
}

pub struct TestFunction {
    pub d: Dimension,
    pub decay: Decay,
    length_scale: f64,
    value: SpaceFn,
    laplacian: Option<SpaceFn>,
    bilaplacian: Option<SpaceFn>,
    ball_average: Option<BallAvgFn>,
    antider1: Option<LineFn>,
    antider2: Option<LineFn>,
    oscillation: Option<f64>,
}

impl TestFunction {
    pub fn value(&self, x: &Point) -> f64 {
        (self.value)(x)
    }

    /// Convenience for d = 1.
    pub fn at1(&self, x: f64) -> f64 {
        (self.value)(&[x, 0.0, 0.0])
    }

    /// Characteristic width; generator heads Taylor-expand below a small
    /// fraction of this.
    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn laplacian_at(&self, x: &Point) -> Option<f64> {
        self.laplacian.as_ref().map(|f| f(x))
    }

    pub fn bilaplacian_at(&self, x: &Point) -> Option<f64> {
        self.bilaplacian.as_ref().map(|f| f(x))
    }

    pub fn oscillation(&self) -> Option<f64> {
        self.oscillation
    }

    /// Average over the ball B(x, r), via a closed form when one is attached,
    /// else through the first antiderivative in d = 1.
    pub fn ball_average_at(&self, x: &Point, r: f64) -> Option<f64> {
        assert!(r > 0.0);
        if let Some(f) = &self.ball_average {
            return Some(f(x, r));
        }
        if self.d.get() == 1 {
            if let Some(p) = &self.antider1 {
                return Some((p(x[0] + r) - p(x[0] - r)) / (2.0 * r));
            }
        }
        None
    }

    /// Average of phi(z + w) over z in B(x, r2), w in B(0, r1); d = 1 only,
    /// exact through the second antiderivative.
    pub fn double_ball_average_at(&self, x: &Point, r1: f64, r2: f64) -> Option<f64> {
        assert!(r1 >= 0.0 && r2 > 0.0);
        if r1 == 0.0 {
            return self.ball_average_at(x, r2);
        }
        if self.d.get() != 1 {
            return None;
        }
        let p2 = self.antider2.as_ref()?;
        let s = p2(x[0] + r1 + r2) - p2(x[0] + r1 - r2) - p2(x[0] - r1 + r2)
            + p2(x[0] - r1 - r2);
        Some(s / (4.0 * r1 * r2))
    }

    /// Isotropic Gaussian A exp(-|x-c|^2 / (2 w^2)). In one dimension it
    /// carries exact ball averages through the error function.
    pub fn gaussian(d: Dimension, center: Point, width: f64, amplitude: f64) -> Self {
        assert!(width > 0.0);
        let dd = d.get() as f64;
        let (c, w, a) = (center, width, amplitude);
        let value: SpaceFn = Box::new(move |x: &Point| {
            let v = distance(d, x, &c) / w;
            a * (-0.5 * v * v).exp()
        });
        let laplacian: SpaceFn = Box::new(move |x: &Point| {
            let v = distance(d, x, &c) / w;
            a / (w * w) * (v * v - dd) * (-0.5 * v * v).exp()
        });
        let bilaplacian: SpaceFn = Box::new(move |x: &Point| {
            let v2 = {
                let v = distance(d, x, &c) / w;
                v * v
            };
            a / w.powi(4) * (v2 * v2 - 2.0 * (dd + 2.0) * v2 + dd * (dd + 2.0))
                * (-0.5 * v2).exp()
        });
        let (antider1, antider2, ball_average) = if d.get() == 1 {
            let c0 = c[0];
            let p1: LineFn = Box::new(move |y: f64| {
                let u = (y - c0) / (std::f64::consts::SQRT_2 * w);
                a * w * (std::f64::consts::PI / 2.0).sqrt() * erf(u)
            });
            let p2: LineFn = Box::new(move |y: f64| {
                let u = (y - c0) / (std::f64::consts::SQRT_2 * w);
                a * w * w * std::f64::consts::PI.sqrt()
                    * (u * erf(u) + ((-u * u).exp() - 1.0) / std::f64::consts::PI.sqrt())
            });
            let avg: BallAvgFn = Box::new(move |x: &Point, r: f64| {
                let u = x[0] - c0;
                if r < 1e-3 * w {
                    // Taylor head; the erf difference loses digits here
                    let v2 = (u / w) * (u / w);
                    let f = a * (-0.5 * v2).exp();
                    let d2 = f / (w * w) * (v2 - 1.0);
                    let d4 = f / w.powi(4) * (v2 * v2 - 6.0 * v2 + 3.0);
                    f + r * r / 6.0 * d2 + r.powi(4) / 120.0 * d4
                } else {
                    let s = std::f64::consts::SQRT_2 * w;
                    let hi = (u + r) / s;
                    let lo = (u - r) / s;
                    a * w * (std::f64::consts::PI / 2.0).sqrt() * (erf(hi) - erf(lo))
                        / (2.0 * r)
                }
            });
            (Some(p1), Some(p2), Some(avg))
        } else {
            (None, None, None)
        };
        TestFunction {
            d,
            decay: Decay::Rapid {
                center: c,
                radius: 10.0 * w,
            },
            length_scale: w,
            value,
            laplacian: Some(laplacian),
            bilaplacian: Some(bilaplacian),
            ball_average,
            antider1,
            antider2,
            oscillation: None,
        }
    }

    /// cos(xi . x); its ball average is the ball characteristic function, so
    /// it diagonalizes every generator here. d <= 3.
    pub fn plane_wave(d: Dimension, xi: Point) -> Self {
        assert!(d.get() <= 3, "plane waves need the d <= 3 ball transform");
        let s = {
            let mut n = 0.0;
            for c in xi.iter().take(d.get() as usize) {
                n += c * c;
            }
            n.sqrt()
        };
        assert!(s > 0.0, "zero frequency is not a probe");
        let phase = move |x: &Point| {
            let mut p = 0.0;
            for i in 0..d.get() as usize {
                p += xi[i] * x[i];
            }
            p
        };
        let value: SpaceFn = Box::new(move |x: &Point| phase(x).cos());
        let laplacian: SpaceFn = Box::new(move |x: &Point| -s * s * phase(x).cos());
        let bilaplacian: SpaceFn = Box::new(move |x: &Point| s.powi(4) * phase(x).cos());
        let avg: BallAvgFn =
            Box::new(move |x: &Point, r: f64| bessel::ball_cf(d, s * r) * phase(x).cos());
        let (antider1, antider2) = if d.get() == 1 {
            let k = xi[0];
            let p1: LineFn = Box::new(move |y: f64| (k * y).sin() / k);
            let p2: LineFn = Box::new(move |y: f64| -(k * y).cos() / (k * k));
            (Some(p1), Some(p2))
        } else {
            (None, None)
        };
        TestFunction {
            d,
            decay: Decay::Oscillatory,
            length_scale: 1.0 / s,
            value,
            laplacian: Some(laplacian),
            bilaplacian: Some(bilaplacian),
            ball_average: Some(avg),
            antider1,
            antider2,
            oscillation: Some(s),
        }
    }

    /// Indicator of [lo, hi] on the line, with exact averages.
    pub fn indicator_interval(lo: f64, hi: f64) -> Self {
        assert!(hi > lo);
        let d = Dimension::new(1).expect("1 is a dimension");
        let value: SpaceFn =
            Box::new(move |x: &Point| if x[0] >= lo && x[0] <= hi { 1.0 } else { 0.0 });
        let avg: BallAvgFn = Box::new(move |x: &Point, r: f64| {
            let cover = (x[0] + r).min(hi) - (x[0] - r).max(lo);
            cover.max(0.0) / (2.0 * r)
        });
        let p1: LineFn = Box::new(move |y: f64| y.clamp(lo, hi) - lo);
        let p2: LineFn = Box::new(move |y: f64| {
            if y <= lo {
                0.0
            } else if y <= hi {
                0.5 * (y - lo) * (y - lo)
            } else {
                0.5 * (hi - lo) * (hi - lo) + (hi - lo) * (y - hi)
            }
        });
        TestFunction {
            d,
            decay: Decay::Compact {
                center: [0.5 * (lo + hi), 0.0, 0.0],
                radius: 0.5 * (hi - lo),
            },
            length_scale: hi - lo,
            value,
            laplacian: None,
            bilaplacian: None,
            ball_average: Some(avg),
            antider1: Some(p1),
            antider2: Some(p2),
            oscillation: None,
        }
    }

    /// Smooth bump supported on B(center, radius) with peak `amplitude`:
    /// A exp(1 - 1/(1 - |x-c|^2/R^2)).
    pub fn bump(d: Dimension, center: Point, radius: f64, amplitude: f64) -> Self {
        assert!(radius > 0.0);
        let value: SpaceFn = Box::new(move |x: &Point| {
            let t = {
                let v = distance(d, x, &center) / radius;
                v * v
            };
            if t >= 1.0 {
                0.0
            } else {
                amplitude * (1.0 - 1.0 / (1.0 - t)).exp()
            }
        });
        TestFunction {
            d,
            decay: Decay::Compact {
                center,
                radius,
            },
            length_scale: radius,
            value,
            laplacian: None,
            bilaplacian: None,
            ball_average: None,
            antider1: None,
            antider2: None,
            oscillation: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::quad;

    fn dim(d: u32) -> Dimension {
        Dimension::new(d).unwrap()
    }

    fn fd_laplacian(f: &TestFunction, x: &Point, h: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..f.d.get() as usize {
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += h;
            xm[i] -= h;
            acc += (f.value(&xp) - 2.0 * f.value(x) + f.value(&xm)) / (h * h);
        }
        acc
    }

    #[test]
    fn gaussian_derivatives_match_finite_differences() {
        for d in [1, 2, 3] {
            let f = TestFunction::gaussian(dim(d), [0.3, -0.2, 0.1], 1.3, 0.7);
            for x in [[0.0, 0.0, 0.0], [1.0, 0.5, -0.4]] {
                let fd = fd_laplacian(&f, &x, 1e-4);
                let lap = f.laplacian_at(&x).unwrap();
                assert!((fd - lap).abs() < 1e-6, "d={d}: {fd} vs {lap}");
            }
        }
        // bilaplacian through a second difference of the closed laplacian
        let f = TestFunction::gaussian(dim(2), [0.0, 0.0, 0.0], 0.9, 1.0);
        let x = [0.4, -0.7, 0.0];
        let h = 1e-4;
        let mut fd = 0.0;
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            fd += (f.laplacian_at(&xp).unwrap() - 2.0 * f.laplacian_at(&x).unwrap()
                + f.laplacian_at(&xm).unwrap())
                / (h * h);
        }
        let bl = f.bilaplacian_at(&x).unwrap();
        assert!((fd - bl).abs() < 1e-4 * bl.abs().max(1.0), "{fd} vs {bl}");
    }

    #[test]
    fn gaussian_ball_average_matches_quadrature() {
        let f = TestFunction::gaussian(dim(1), [0.5, 0.0, 0.0], 1.1, 2.0);
        for (x0, r) in [(0.0, 0.7), (1.4, 2.5), (-2.0, 0.05)] {
            let x = [x0, 0.0, 0.0];
            let want = quad::adaptive_gk(
                &mut |y: f64| f.at1(y),
                x0 - r,
                x0 + r,
                1e-13,
                1e-12,
            )
            .unwrap()
                / (2.0 * r);
            let got = f.ball_average_at(&x, r).unwrap();
            // the closed form goes through erf, whose library accuracy is
            // around 1e-11 relative
            assert!((got - want).abs() < 1e-9, "x={x0} r={r}: {got} vs {want}");
        }
        // tiny radius goes through the Taylor branch and stays near the value
        let got = f.ball_average_at(&[0.2, 0.0, 0.0], 1e-7).unwrap();
        assert!((got - f.at1(0.2)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_double_average_matches_iterated_quadrature() {
        let f = TestFunction::gaussian(dim(1), [0.0, 0.0, 0.0], 1.0, 1.0);
        let (x0, r1, r2) = (0.3, 0.8, 1.7);
        let want = quad::adaptive_gk(
            &mut |z: f64| {
                quad::adaptive_gk(&mut |y: f64| f.at1(y), z - r1, z + r1, 1e-13, 1e-12)
                    .unwrap()
                    / (2.0 * r1)
            },
            x0 - r2,
            x0 + r2,
            1e-12,
            1e-11,
        )
        .unwrap()
            / (2.0 * r2);
        let got = f
            .double_ball_average_at(&[x0, 0.0, 0.0], r1, r2)
            .unwrap();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn plane_wave_average_is_ball_transform() {
        // d = 2: average cos(xi . y) over a disc around x by iterated
        // quadrature and compare with the closed form
        let xi = [1.3, -0.6, 0.0];
        let f = TestFunction::plane_wave(dim(2), xi);
        let x = [0.7, 0.4, 0.0];
        let r = 1.9;
        let area = std::f64::consts::PI * r * r;
        let want = quad::adaptive_gk(
            &mut |y0: f64| {
                let half = (r * r - (y0 - x[0]) * (y0 - x[0])).max(0.0).sqrt();
                quad::adaptive_gk(
                    &mut |y1: f64| f.value(&[y0, y1, 0.0]),
                    x[1] - half,
                    x[1] + half,
                    1e-12,
                    1e-11,
                )
                .unwrap()
            },
            x[0] - r,
            x[0] + r,
            1e-10,
            1e-9,
        )
        .unwrap()
            / area;
        let got = f.ball_average_at(&x, r).unwrap();
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        // and the d = 1 antiderivative route agrees with the closed form
        let f1 = TestFunction::plane_wave(dim(1), [0.9, 0.0, 0.0]);
        let got = f1.double_ball_average_at(&[0.4, 0.0, 0.0], 0.5, 1.2).unwrap();
        let want = bessel::ball_cf(dim(1), 0.9 * 0.5) * bessel::ball_cf(dim(1), 0.9 * 1.2)
            * (0.9f64 * 0.4).cos();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn indicator_averages_are_exact() {
        let f = TestFunction::indicator_interval(-1.0, 2.0);
        assert_eq!(f.at1(0.0), 1.0);
        assert_eq!(f.at1(2.5), 0.0);
        // window [1, 4] covers [1, 2] of the support
        let got = f.ball_average_at(&[2.5, 0.0, 0.0], 1.5).unwrap();
        assert!((got - 1.0 / 3.0).abs() < 1e-14);
        // away from the kinks the indicator is locally constant, so the
        // double average at radii below the gap to the nearest kink is exact;
        // h must stay large enough that the 1/(4 r1 r2) division does not
        // amplify rounding in the antiderivative differences
        for y in [-1.5, 0.3, 1.9, 2.4] {
            let h = 1e-3;
            let d1 = (f.double_ball_average_at(&[y, 0.0, 0.0], h, h).unwrap()
                - f.at1(y))
            .abs();
            assert!(d1 < 1e-8, "y={y}: {d1}");
        }
    }

    #[test]
    fn bump_support_and_peak() {
        let f = TestFunction::bump(dim(2), [1.0, 1.0, 0.0], 2.0, 3.0);
        assert_eq!(f.value(&[3.5, 1.0, 0.0]), 0.0);
        assert!((f.value(&[1.0, 1.0, 0.0]) - 3.0).abs() < 1e-14);
        let near_edge = f.value(&[2.95, 1.0, 0.0]);
        assert!(near_edge > 0.0 && near_edge < 1e-7);
    }
}
