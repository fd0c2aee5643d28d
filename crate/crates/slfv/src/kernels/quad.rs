//! Quadrature plumbing shared by the analytic modules: an adaptive
//! Gauss-Kronrod integrator, an Euler-accelerated alternating panel sum for
//! oscillatory tails, and a radial inverse Fourier transform for d <= 3.

use crate::geometry::Dimension;
use crate::kernels::bessel;
use crate::{Error, Result};
use std::collections::BinaryHeap;

/// 15-point Kronrod abscissae on [-1, 1] (positive half; symmetric).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
/// Embedded 7-point Gauss weights, matching XGK indices 1, 3, 5, 7.
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let (fl, fr) = if x == 0.0 {
            let v = f(mid);
            (v, 0.0)
        } else {
            (f(mid - half * x), f(mid + half * x))
        };
        let s = fl + fr;
        kronrod += wk * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        } else if x == 0.0 {
            // center node belongs to both rules
            gauss += WG[3] * fl;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half.abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err
            .partial_cmp(&other.err)
            .unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Integrate f over [a, b], bisecting the segment with the largest error
/// estimate until the summed estimate meets `max(abs_tol, rel_tol*|I|)`.
pub(crate) fn adaptive_gk(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(f, a, b);
    if !v.is_finite() {
        return Err(Error::Quadrature {
            context: "adaptive_gk",
            achieved: f64::INFINITY,
            requested: abs_tol,
        });
    }
    let mut total = v;
    let mut total_err = e;
    heap.push(Segment {
        a,
        b,
        value: v,
        err: e,
    });
    let max_segments = 20_000;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= max_segments {
            return Err(Error::Quadrature {
                context: "adaptive_gk",
                achieved: total_err,
                requested: abs_tol.max(rel_tol * total.abs()),
            });
        }
        let worst = heap.pop().expect("heap cannot be empty");
        // Segment too narrow to split further: accept its estimate as-is.
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            total_err -= worst.err;
            continue;
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::Quadrature {
                context: "adaptive_gk",
                achieved: f64::INFINITY,
                requested: abs_tol,
            });
        }
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
        });
    }
    Ok(total)
}

/// Sum sum_k panel(k) for panels that eventually alternate in sign and decay,
/// using iterated averaging of the partial sums. Converges for slowly decaying
/// oscillatory tails where direct truncation would need millions of panels.
pub(crate) fn alternating_panel_sum(
    mut panel: impl FnMut(usize) -> Result<f64>,
    abs_tol: f64,
) -> Result<f64> {
    const MAX_DEPTH: usize = 14;
    const MAX_PANELS: usize = 4_000;
    let mut table: Vec<f64> = Vec::new();
    let mut prev_est = f64::NAN;
    let mut stable = 0;
    for k in 0..MAX_PANELS {
        let t = panel(k)?;
        let mut row = Vec::with_capacity(table.len() + 1);
        row.push(if table.is_empty() { t } else { table[0] + t });
        for j in 1..=table.len().min(MAX_DEPTH) {
            let v = 0.5 * (table[j - 1] + row[j - 1]);
            row.push(v);
        }
        table = row;
        let est = *table.last().expect("row is nonempty");
        // Terms already negligible: the raw sum is the answer, and the
        // averaged diagonal would lag it by a fraction of the last terms.
        if t.abs() < 1e-2 * abs_tol && k > 2 {
            return Ok(table[0]);
        }
        // Otherwise accept once three consecutive accelerated estimates
        // agree; the raw terms may still be large, which is the point of the
        // acceleration.
        if k >= 6 && (est - prev_est).abs() < abs_tol {
            stable += 1;
            if stable >= 2 {
                return Ok(est);
            }
        } else {
            stable = 0;
        }
        prev_est = est;
    }
    Err(Error::Quadrature {
        context: "alternating_panel_sum",
        achieved: f64::NAN,
        requested: abs_tol,
    })
}

/// Integrate f over [start, inf) for integrands that decay at least like a
/// power, by doubling panels and bounding the remainder with the measured
/// decay ratio.
pub(crate) fn power_tail(
    f: &mut dyn FnMut(f64) -> f64,
    start: f64,
    abs_tol: f64,
) -> Result<f64> {
    let mut a = start;
    let mut total = 0.0;
    let mut prev = f64::NAN;
    for _ in 0..70 {
        let b = 2.0 * a;
        let v = adaptive_gk(f, a, b, 0.1 * abs_tol, 1e-10)?;
        total += v;
        if !prev.is_nan() {
            let ratio = (v.abs() / prev.abs().max(1e-300)).min(0.9);
            let bound = v.abs() * ratio / (1.0 - ratio);
            if bound < abs_tol && v.abs() < abs_tol {
                return Ok(total);
            }
        }
        prev = v;
        a = b;
    }
    Err(Error::Quadrature {
        context: "power_tail",
        achieved: f64::NAN,
        requested: abs_tol,
    })
}

/// Radial inverse Fourier transform in dimension d <= 3:
/// (2 pi)^{-d} int_{R^d} w(|xi|) exp(-i xi . x) dxi evaluated at |x| = r.
///
/// `head_power` declares the algebraic behavior w(s) ~ s^p as s -> 0 (p = 0
/// for regular data); the head integral is regularized by substitution. The
/// oscillatory remainder is summed between consecutive zeros of the radial
/// kernel with Euler acceleration, so slowly decaying data (power-law symbols)
/// converge without extreme truncation radii.
pub(crate) fn inverse_radial_ft(
    w: &dyn Fn(f64) -> f64,
    d: Dimension,
    r: f64,
    head_power: f64,
    abs_tol: f64,
) -> Result<f64> {
    use std::f64::consts::PI;
    assert!(r >= 0.0, "radius must be nonnegative");
    let dd = d.get();
    let mut g = |s: f64| -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        match dd {
            1 => w(s) * (s * r).cos() / PI,
            2 => w(s) * bessel::j0(s * r) * s / (2.0 * PI),
            3 => {
                let sr = s * r;
                let sinc = if sr.abs() < 1e-8 { 1.0 } else { sr.sin() / sr };
                w(s) * sinc * s * s / (2.0 * PI * PI)
            }
            _ => unreachable!("inverse_radial_ft is only used for d <= 3"),
        }
    };

    // zero anchors of the oscillating factor, as a function of k >= 1
    let zero = |k: usize| -> f64 {
        match dd {
            1 => (k as f64 - 0.5) * PI / r,
            2 => bessel::j0_zero(k) / r,
            3 => k as f64 * PI / r,
            _ => unreachable!(),
        }
    };

    let head_end = if r > 0.0 { zero(1) } else { 1.0 };
    let net = head_power + dd as f64 - 1.0;
    assert!(net > -1.0, "head exponent must be integrable");
    let head = if head_power != 0.0 {
        // s = v^q turns s^net ds into dv up to a constant factor
        let q = 1.0 / (1.0 + net);
        let vmax = head_end.powf(1.0 / q);
        adaptive_gk(
            &mut |v: f64| {
                let s = v.powf(q);
                g(s) * q * v.powf(q - 1.0)
            },
            0.0,
            vmax,
            0.1 * abs_tol,
            1e-10,
        )?
    } else {
        adaptive_gk(&mut g, 0.0, head_end, 0.1 * abs_tol, 1e-10)?
    };

    let tail = if r > 0.0 {
        alternating_panel_sum(
            |k| adaptive_gk(&mut g, zero(k + 1), zero(k + 2), 0.02 * abs_tol, 1e-9),
            0.5 * abs_tol,
        )?
    } else {
        power_tail(&mut g, head_end, 0.5 * abs_tol)?
    };
    Ok(head + tail)
}
