//! Bessel functions J0, J1 and their zeros, plus the normalized Fourier
//! transform of the uniform ball indicator.
//!
//! Accuracy target is ~1e-11 absolute, which keeps Bessel error well below the
//! tolerances requested from the oscillatory quadratures built on top.

use crate::geometry::Dimension;

const SERIES_CUTOFF: f64 = 16.0;

/// Hankel asymptotic coefficients a_k(nu) = prod_{j<k} (4nu^2-(2j+1)^2) / (k! 8^k).
const A0: [f64; 11] = [
    1.0,
    -0.125,
    0.0703125,
    -0.0732421875,
    0.112152099609375,
    -0.22710800170898438,
    0.5725014209747314,
    -1.7277275025844574,
    6.074042001273483,
    -24.380529699556064,
    110.01714026924674,
];
const A1: [f64; 11] = [
    1.0,
    0.375,
    -0.1171875,
    0.1025390625,
    -0.144195556640625,
    0.2775764465332031,
    -0.6765925884246826,
    1.9935317337512804,
    -6.883914268109947,
    27.248827311268542,
    -121.59789187654587,
];

fn series_jn(n: u32, x: f64) -> f64 {
    // J_n(x) = sum_k (-1)^k (x/2)^{2k+n} / (k! (k+n)!)
    let half = 0.5 * x;
    let mut term = if n == 0 { 1.0 } else { half };
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= -half * half / (k * (k + n as f64));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) || k > 60.0 {
            return sum;
        }
        k += 1.0;
    }
}

fn asymptotic_jn(a: &[f64; 11], omega: f64, x: f64) -> f64 {
    let x2 = x * x;
    let even = a[0] - a[2] / x2 + a[4] / (x2 * x2) - a[6] / (x2 * x2 * x2)
        + a[8] / (x2 * x2 * x2 * x2)
        - a[10] / (x2 * x2 * x2 * x2 * x2);
    let odd = a[1] / x - a[3] / (x * x2) + a[5] / (x * x2 * x2) - a[7] / (x * x2 * x2 * x2)
        + a[9] / (x * x2 * x2 * x2 * x2);
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (omega.cos() * even - omega.sin() * odd)
}

pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_CUTOFF {
        series_jn(0, x)
    } else {
        asymptotic_jn(&A0, x - std::f64::consts::FRAC_PI_4, x)
    }
}

pub fn j1(x: f64) -> f64 {
    let s = x.signum();
    let x = x.abs();
    if x < SERIES_CUTOFF {
        s * series_jn(1, x)
    } else {
        s * asymptotic_jn(&A1, x - 3.0 * std::f64::consts::FRAC_PI_4, x)
    }
}

const J0_ZEROS: [f64; 20] = [
    2.404825557695772,
    5.520078110286311,
    8.653727912911013,
    11.791534439014281,
    14.930917708487787,
    18.071063967910924,
    21.211636629879258,
    24.352471530749302,
    27.493479132040253,
    30.634606468431976,
    33.775820213573567,
    36.917098353664045,
    40.058425764628240,
    43.199791713176730,
    46.341188371661815,
    49.482609897397815,
    52.624051841114998,
    55.765510755019982,
    58.906983926080940,
    62.048469190227166,
];

const J1_ZEROS: [f64; 20] = [
    3.831705970207512,
    7.015586669815619,
    10.173468135062722,
    13.323691936314223,
    16.470630050877634,
    19.615858510468243,
    22.760084380592772,
    25.903672087618382,
    29.046828534916855,
    32.189679910974405,
    35.332307550083861,
    38.474766234771614,
    41.617094212814450,
    44.759318997652819,
    47.901460887185451,
    51.043535183571514,
    54.185553641061318,
    57.327525437901009,
    60.469457845347492,
    63.611356698481231,
];

fn mcmahon(beta: f64, mu: f64) -> f64 {
    // McMahon expansion for large zeros of J_nu, mu = 4 nu^2.
    let e = 8.0 * beta;
    beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e * e * e)
}

/// k-th positive zero of J0 (k >= 1).
pub fn j0_zero(k: usize) -> f64 {
    debug_assert!(k >= 1);
    if k <= J0_ZEROS.len() {
        J0_ZEROS[k - 1]
    } else {
        mcmahon((k as f64 - 0.25) * std::f64::consts::PI, 0.0)
    }
}

/// k-th positive zero of J1 (k >= 1).
pub fn j1_zero(k: usize) -> f64 {
    debug_assert!(k >= 1);
    if k <= J1_ZEROS.len() {
        J1_ZEROS[k - 1]
    } else {
        mcmahon((k as f64 + 0.25) * std::f64::consts::PI, 4.0)
    }
}

/// Characteristic function of the uniform distribution on the unit ball in
/// dimension d, evaluated at radial frequency s: the average of cos(s <e,y>).
pub fn ball_cf(d: Dimension, s: f64) -> f64 {
    let s = s.abs();
    if s < 1e-4 {
        // 1 - s^2/(2(d+2)) + s^4/(8(d+2)(d+4))
        let dd = d.get() as f64;
        return 1.0 - s * s / (2.0 * (dd + 2.0)) + s.powi(4) / (8.0 * (dd + 2.0) * (dd + 4.0));
    }
    match d.get() {
        1 => s.sin() / s,
        2 => 2.0 * j1(s) / s,
        3 => 3.0 * (s.sin() - s * s.cos()) / (s * s * s),
        _ => unreachable!("ball_cf is only used for d <= 3"),
    }
}

/// 1 - ball_cf(d, s) without cancellation: the alternating series in (s/2)^2
/// for s <= 1 (any d), the direct difference beyond. Relative accuracy is
/// preserved down to s = 0 where the direct difference would lose all digits.
pub fn one_minus_ball_cf(d: Dimension, s: f64) -> f64 {
    let s = s.abs();
    if s > 1.0 {
        if d.get() <= 3 {
            return 1.0 - ball_cf(d, s);
        }
        // fall through: the series still converges, just more slowly
        if s > 8.0 {
            unreachable!("one_minus_ball_cf beyond s = 8 needs d <= 3");
        }
    }
    let dd = d.get() as f64;
    let q = 0.25 * s * s;
    let mut term = q / (0.5 * dd + 1.0);
    let mut sum = term;
    for k in 1..60 {
        term *= -q / ((k as f64 + 1.0) * (0.5 * dd + k as f64 + 1.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// k-th positive zero of `ball_cf(d, .)` (k >= 1), exact for the tabulated
/// range and asymptotic beyond; used to anchor oscillatory quadrature panels.
pub fn ball_cf_zero(d: Dimension, k: usize) -> f64 {
    debug_assert!(k >= 1);
    match d.get() {
        1 => k as f64 * std::f64::consts::PI,
        2 => j1_zero(k),
        // zeros of tan s = s; rapidly approached by (k + 1/2)pi - 1/((k+1/2)pi)
        3 => {
            let b = (k as f64 + 0.5) * std::f64::consts::PI;
            let mut s = b - 1.0 / b;
            // two Newton steps on f(s) = sin s - s cos s
            for _ in 0..2 {
                let f = s.sin() - s * s.cos();
                let fp = s * s.sin();
                s -= f / fp;
            }
            s
        }
        _ => unreachable!("ball_cf_zero is only used for d <= 3"),
    }
}
