//! Parameter bookkeeping for the two event-intensity families: validation of
//! the raw exponents, the derived limit quantities (stable index alpha,
//! coalescence exponent beta, noise level gamma, lineage diffusivity), the
//! scaling schedule (u_N, mu_N, eta_N), and exponent checks for schedules of
//! the form delta_N = N^{-theta}.

use crate::geometry::{c1_constant, c2_constant, unit_ball_volume, Dimension};
use crate::kernels::KernelSpec;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tail structure of the event intensity. In the one-tail family the parent
/// search radius is slaved to the replacement radius through r1 = r2^b and
/// the impact decays as u = u_N r2^{-c}; in the two-tails family r1 and r2
/// carry independent Pareto tails with impact u = u_N r1^{-c1} r2^{-c2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tails {
    One { a: f64, b: f64, c: f64 },
    Two { a1: f64, a2: f64, c1: f64, c2: f64 },
}

/// Validated model parameters. Construction rejects exponent combinations
/// sitting exactly on the Brownian boundary (see `one_tail`, `two_tails`);
/// everything downstream may assume the derived stable index is unambiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRegime", into = "RawRegime")]
pub struct RegimeParams {
    pub d: Dimension,
    pub u0: f64,
    pub mu: f64,
    pub tails: Tails,
}

fn require_finite(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, "must be finite"))
    }
}

impl RegimeParams {
    fn common(d: Dimension, u0: f64, mu: f64) -> Result<()> {
        require_finite("u0", u0)?;
        if !(u0 > 0.0 && u0 <= 1.0) {
            return Err(Error::invalid("u0", "impact scale must lie in (0, 1]"));
        }
        require_finite("mu", mu)?;
        // mu = 0 is allowed: the hazard oracle for the pair dual runs without
        // mutation; evaluators that need mu > 0 check at their own boundary
        if mu < 0.0 {
            return Err(Error::invalid("mu", "mutation rate cannot be negative"));
        }
        let _ = d;
        Ok(())
    }

    pub fn one_tail(d: Dimension, u0: f64, mu: f64, a: f64, b: f64, c: f64) -> Result<Self> {
        Self::common(d, u0, mu)?;
        for (field, v) in [("a", a), ("b", b), ("c", c)] {
            require_finite(field, v)?;
        }
        if a <= 0.0 {
            return Err(Error::invalid("a", "tail exponent must be positive"));
        }
        if b < 0.0 {
            return Err(Error::invalid("b", "radius power cannot be negative"));
        }
        if c < 0.0 {
            return Err(Error::invalid("c", "impact decay cannot be negative"));
        }
        // alpha = min(a, a/b, 2) must not be decided by an exact equality:
        // a = 2 matters only when a/b >= 2 (that is b <= 1), and a/b = 2 only
        // when a >= 2
        if a == 2.0 && b <= 1.0 {
            return Err(Error::boundary(
                "a",
                "a = 2 sits on the Brownian boundary; use a strictly above or below 2",
            ));
        }
        if b > 0.0 && a == 2.0 * b && a >= 2.0 {
            return Err(Error::boundary(
                "b",
                "a = 2b sits on the Brownian boundary for the parent radius",
            ));
        }
        Ok(RegimeParams {
            d,
            u0,
            mu,
            tails: Tails::One { a, b, c },
        })
    }

    /// Stable index of the limiting motion: min(a, a/b, 2) with a/b read as
    /// infinity at b = 0, or min(a1, a2, 2).
    pub fn stable_index(&self) -> f64 {
        match self.tails {
            Tails::One { a, b, .. } => {
                let ab = if b == 0.0 { f64::INFINITY } else { a / b };
                a.min(ab).min(2.0)
            }
            Tails::Two { a1, a2, .. } => a1.min(a2).min(2.0),
        }
    }

    pub fn two_tails(
        d: Dimension,
        u0: f64,
        mu: f64,
        a1: f64,
        a2: f64,
        c1: f64,
        c2: f64,
    ) -> Result<Self> {
        Self::common(d, u0, mu)?;
        for (field, v) in [("a1", a1), ("a2", a2), ("c1", c1), ("c2", c2)] {
            require_finite(field, v)?;
        }
        if a1 <= 0.0 {
            return Err(Error::invalid("a1", "tail exponent must be positive"));
        }
        if a2 <= 0.0 {
            return Err(Error::invalid("a2", "tail exponent must be positive"));
        }
        if c1 < 0.0 || c2 < 0.0 {
            return Err(Error::invalid("c1", "impact decay cannot be negative"));
        }
        if a1 == 2.0 {
            return Err(Error::boundary("a1", "a1 = 2 sits on the Brownian boundary"));
        }
        if a2 == 2.0 {
            return Err(Error::boundary("a2", "a2 = 2 sits on the Brownian boundary"));
        }
        Ok(RegimeParams {
            d,
            u0,
            mu,
            tails: Tails::Two { a1, a2, c1, c2 },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coalescence {
    Local,
    LongRange,
}

/// The limit quantities. Exactly one of `sigma2` (alpha = 2) and `zeta`
/// (alpha < 2) is present; `coalescence` records which branch of the noise
/// correlation applies (diagonal for beta >= d, Riesz for beta < d).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDerived", into = "RawDerived")]
pub struct DerivedParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma2: Option<f64>,
    pub zeta: Option<f64>,
    pub coalescence: Coalescence,
}

impl DerivedParams {
    /// sigma^2 or zeta, whichever is present.
    pub fn diffusivity(&self) -> f64 {
        self.sigma2.or(self.zeta).expect("validated at construction")
    }

    /// The lineage-motion kernel this parameter set induces.
    pub fn kernel_spec(&self, d: Dimension) -> Result<KernelSpec> {
        if self.alpha == 2.0 {
            KernelSpec::brownian(d, self.diffusivity())
        } else {
            KernelSpec::stable(d, self.alpha, self.diffusivity())
        }
    }
}

/// Limit quantities from the raw exponents.
///
/// One-tail: alpha = min(a, a/b, 2) with a/b read as infinity when b = 0, and
/// beta = a + c. Two-tails: alpha = min(a1, a2, 2) and beta = a2 + c2. gamma
/// follows the three-way branch on beta vs d, with the lens-tail constant C2
/// supplying the long-range value.
///
/// The diffusivity for one-tail b = 1 deserves a note: at b = 1 both radii of
/// a jump coincide, so the limiting jump measure is the radius-mixture of
/// *two-fold* uniform-ball convolutions rather than single balls. Matching
/// Levy measures gives zeta = u0 V1^2 (d + alpha) C1_{d,alpha}, which equals
/// u0 V1 kappa~/kappa where kappa~ uses 1 - m_d(s)^2 in place of 1 - m_d(s).
/// The b != 1 cells are unaffected because there one radius dominates the
/// tail.
pub fn derive_params(p: &RegimeParams) -> Result<DerivedParams> {
    let d = p.d.get() as f64;
    let v1 = unit_ball_volume(p.d);
    let u0 = p.u0;
    let (alpha, beta, gamma, sigma2, zeta) = match p.tails {
        Tails::One { a, b, c } => {
            let alpha = p.stable_index();
            let beta = a + c;
            let gamma = if beta > d {
                u0 * u0 * v1 * v1 / (beta - d)
            } else if beta == d {
                u0 * u0 * v1 * v1
            } else {
                u0 * u0 * c2_constant(p.d, beta)?
            };
            if alpha == 2.0 {
                let s2 = u0 * v1 / (d + 2.0) * (1.0 / (a - 2.0 * b) + 1.0 / (a - 2.0));
                (alpha, beta, gamma, Some(s2), None)
            } else if b == 1.0 {
                let z = u0 * v1 * v1 * (d + alpha) * c1_constant(p.d, alpha)?;
                (alpha, beta, gamma, None, Some(z))
            } else {
                (alpha, beta, gamma, None, Some(u0 * v1 / b.max(1.0)))
            }
        }
        Tails::Two { a1, a2, c1, c2 } => {
            let alpha = p.stable_index();
            let beta = a2 + c2;
            let gamma = if beta > d {
                u0 * u0 * v1 * v1 / ((a1 + c1) * (beta - d))
            } else if beta == d {
                u0 * u0 * v1 * v1 / (a1 + c1)
            } else {
                u0 * u0 * c2_constant(p.d, beta)? / (a1 + c1)
            };
            if alpha == 2.0 {
                let s2 =
                    u0 * v1 / (d + 2.0) * (1.0 / ((a1 - 2.0) * a2) + 1.0 / (a1 * (a2 - 2.0)));
                (alpha, beta, gamma, Some(s2), None)
            } else if a1 == a2 {
                (alpha, beta, gamma, None, Some(u0 * v1 * (1.0 / a1 + 1.0 / a2)))
            } else {
                (alpha, beta, gamma, None, Some(u0 * v1 / a1.max(a2)))
            }
        }
    };
    let coalescence = if beta >= d {
        Coalescence::Local
    } else {
        Coalescence::LongRange
    };
    Ok(DerivedParams {
        alpha,
        beta,
        gamma,
        sigma2,
        zeta,
        coalescence,
    })
}

/// Magnitude of the identity-by-descent probability at resolution delta:
/// delta^{alpha-beta} below the critical dimension, delta^{alpha-d} above,
/// with a 1/log(1/delta) correction exactly at beta = d.
pub fn eta_n(dp: &DerivedParams, p: &RegimeParams, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("delta", "resolution must lie in (0, 1)"));
    }
    let d = p.d.get() as f64;
    Ok(if dp.beta < d {
        delta.powf(dp.alpha - dp.beta)
    } else if dp.beta == d {
        delta.powf(dp.alpha - d) / (1.0 / delta).ln()
    } else {
        delta.powf(dp.alpha - d)
    })
}

/// Validity of the two asymptotic hypotheses along delta_N = N^{-theta}:
/// the law-of-large-numbers scale N eta_N must diverge, and the fluctuation
/// error sqrt(eta_N / N) delta_N^{min(d,c)} must vanish. Both reduce to sign
/// checks on the exponent of N; log corrections (present only at beta = d)
/// are strictly slower than any power and only matter when an exponent is
/// exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityReport {
    pub lln_ok: bool,
    pub clt_ok: bool,
    /// exponent of N in N eta_N
    pub lln_exponent: f64,
    /// exponent of N in sqrt(eta_N / N) delta_N^{min(d,c)}
    pub clt_exponent: f64,
}

pub(crate) fn asymptotic_flags(lln_exp: f64, clt_exp: f64, log_case: bool) -> (bool, bool) {
    // at lln_exp = 0 the product tends to a constant (no log) or decays
    // (1/log); neither diverges. At clt_exp = 0 the extra (log N)^{-1/2}
    // still drives the error to zero, but only in the log case.
    let lln_ok = lln_exp > 0.0;
    let clt_ok = clt_exp < 0.0 || (clt_exp == 0.0 && log_case);
    (lln_ok, clt_ok)
}

pub fn check_asymptotics(p: &RegimeParams, theta: f64) -> Result<ValidityReport> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", "schedule exponent must be positive"));
    }
    let dp = derive_params(p)?;
    let d = p.d.get() as f64;
    let e_eta = if dp.beta < d {
        dp.alpha - dp.beta
    } else {
        dp.alpha - d
    };
    let log_case = dp.beta == d;
    let c_decay = match p.tails {
        Tails::One { c, .. } => c,
        Tails::Two { c2, .. } => c2,
    };
    let lln_exponent = 1.0 - theta * e_eta;
    let clt_exponent = -(theta * e_eta + 1.0) / 2.0 - theta * d.min(c_decay);
    let (lln_ok, clt_ok) = asymptotic_flags(lln_exponent, clt_exponent, log_case);
    Ok(ValidityReport {
        lln_ok,
        clt_ok,
        lln_exponent,
        clt_exponent,
    })
}

/// One point of the scaling schedule. `u_n = u0/N`, `mu_n = delta^alpha mu/N`,
/// `eta` per `eta_n`; `theta` is set only when the point was generated from a
/// delta_N = N^{-theta} family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct ScalingSchedule {
    pub n: u64,
    pub delta: f64,
    pub u_n: f64,
    pub mu_n: f64,
    pub eta: f64,
    pub theta: Option<f64>,
}

impl ScalingSchedule {
    /// Unrescaled model time per unit of rescaled time, N / delta^alpha.
    pub fn time_dilation(&self, alpha: f64) -> f64 {
        self.n as f64 / self.delta.powf(alpha)
    }

    /// Unrescaled distance per unit of rescaled distance.
    pub fn space_scale(&self) -> f64 {
        1.0 / self.delta
    }

    pub fn n_eta(&self) -> f64 {
        self.n as f64 * self.eta
    }
}

pub fn rescaled_rates(
    p: &RegimeParams,
    dp: &DerivedParams,
    n: u64,
    delta: f64,
) -> Result<ScalingSchedule> {
    if n == 0 {
        return Err(Error::invalid("N", "population scale must be at least 1"));
    }
    let eta = eta_n(dp, p, delta)?;
    Ok(ScalingSchedule {
        n,
        delta,
        u_n: p.u0 / n as f64,
        mu_n: delta.powf(dp.alpha) * p.mu / n as f64,
        eta,
        theta: None,
    })
}

/// Schedule point on the delta_N = N^{-theta} family. Needs N >= 2 so that
/// delta < 1.
pub fn schedule_from_theta(
    p: &RegimeParams,
    dp: &DerivedParams,
    n: u64,
    theta: f64,
) -> Result<ScalingSchedule> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", "schedule exponent must be positive"));
    }
    if n < 2 {
        return Err(Error::invalid("N", "the N^{-theta} family needs N >= 2"));
    }
    let delta = (n as f64).powf(-theta);
    let mut sched = rescaled_rates(p, dp, n, delta)?;
    sched.theta = Some(theta);
    Ok(sched)
}

/// Rate at which a single dual lineage is hit by events, per unit unrescaled
/// time and per unit of u0 (the u_N = u0/N thinning and the time dilation are
/// applied by the simulator): integrating u V_{r2} against the intensity
/// gives u0 V1 / a for one tail and u0 V1 / (a1 a2) for two.
pub fn lineage_jump_rate(p: &RegimeParams) -> f64 {
    let v1 = unit_ball_volume(p.d);
    match p.tails {
        Tails::One { a, .. } => p.u0 * v1 / a,
        Tails::Two { a1, a2, .. } => p.u0 * v1 / (a1 * a2),
    }
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegime {
    kind: String,
    d: Dimension,
    u0: f64,
    mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c2: Option<f64>,
}

impl TryFrom<RawRegime> for RegimeParams {
    type Error = Error;
    fn try_from(r: RawRegime) -> Result<Self> {
        fn take(v: Option<f64>, name: &'static str) -> Result<f64> {
            v.ok_or_else(|| Error::invalid(name, "required for this regime kind"))
        }
        fn absent(v: Option<f64>, name: &'static str) -> Result<()> {
            if v.is_some() {
                Err(Error::invalid(name, "not a field of this regime kind"))
            } else {
                Ok(())
            }
        }
        match r.kind.as_str() {
            "one_tail" => {
                for (v, n) in [(r.a1, "a1"), (r.a2, "a2"), (r.c1, "c1"), (r.c2, "c2")] {
                    absent(v, n)?;
                }
                RegimeParams::one_tail(
                    r.d,
                    r.u0,
                    r.mu,
                    take(r.a, "a")?,
                    take(r.b, "b")?,
                    take(r.c, "c")?,
                )
            }
            "two_tails" => {
                for (v, n) in [(r.a, "a"), (r.b, "b"), (r.c, "c")] {
                    absent(v, n)?;
                }
                RegimeParams::two_tails(
                    r.d,
                    r.u0,
                    r.mu,
                    take(r.a1, "a1")?,
                    take(r.a2, "a2")?,
                    take(r.c1, "c1")?,
                    take(r.c2, "c2")?,
                )
            }
            _ => Err(Error::invalid(
                "kind",
                "expected \"one_tail\" or \"two_tails\"",
            )),
        }
    }
}

impl From<RegimeParams> for RawRegime {
    fn from(p: RegimeParams) -> RawRegime {
        let (kind, a, b, c, a1, a2, c1, c2) = match p.tails {
            Tails::One { a, b, c } => ("one_tail", Some(a), Some(b), Some(c), None, None, None, None),
            Tails::Two { a1, a2, c1, c2 } => (
                "two_tails",
                None,
                None,
                None,
                Some(a1),
                Some(a2),
                Some(c1),
                Some(c2),
            ),
        };
        RawRegime {
            kind: kind.to_owned(),
            d: p.d,
            u0: p.u0,
            mu: p.mu,
            a,
            b,
            c,
            a1,
            a2,
            c1,
            c2,
        }
    }
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDerived {
    alpha: f64,
    beta: f64,
    gamma: f64,
    sigma2: Option<f64>,
    zeta: Option<f64>,
    coalescence: Coalescence,
}

impl TryFrom<RawDerived> for DerivedParams {
    type Error = Error;
    fn try_from(r: RawDerived) -> Result<Self> {
        if !(r.alpha > 0.0 && r.alpha <= 2.0) {
            return Err(Error::invalid("alpha", "stable index must lie in (0, 2]"));
        }
        if !(r.beta > 0.0 && r.beta.is_finite()) {
            return Err(Error::invalid("beta", "coalescence exponent must be positive"));
        }
        if !(r.gamma > 0.0 && r.gamma.is_finite()) {
            return Err(Error::invalid("gamma", "noise level must be positive"));
        }
        match (r.alpha == 2.0, r.sigma2, r.zeta) {
            (true, Some(s2), None) if s2 > 0.0 => {}
            (false, None, Some(z)) if z > 0.0 => {}
            _ => {
                return Err(Error::invalid(
                    "sigma2",
                    "exactly one positive diffusivity must be present: sigma2 for alpha = 2, zeta for alpha < 2",
                ))
            }
        }
        Ok(DerivedParams {
            alpha: r.alpha,
            beta: r.beta,
            gamma: r.gamma,
            sigma2: r.sigma2,
            zeta: r.zeta,
            coalescence: r.coalescence,
        })
    }
}

impl From<DerivedParams> for RawDerived {
    fn from(p: DerivedParams) -> RawDerived {
        RawDerived {
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
            sigma2: p.sigma2,
            zeta: p.zeta,
            coalescence: p.coalescence,
        }
    }
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    #[serde(rename = "N")]
    n: u64,
    delta: f64,
    #[serde(rename = "uN")]
    u_n: f64,
    #[serde(rename = "muN")]
    mu_n: f64,
    #[serde(rename = "etaN")]
    eta: f64,
    theta: Option<f64>,
}

impl TryFrom<RawSchedule> for ScalingSchedule {
    type Error = Error;
    fn try_from(r: RawSchedule) -> Result<Self> {
        if r.n == 0 {
            return Err(Error::invalid("N", "population scale must be at least 1"));
        }
        if !(r.delta > 0.0 && r.delta < 1.0) {
            return Err(Error::invalid("delta", "resolution must lie in (0, 1)"));
        }
        if !(r.u_n > 0.0 && r.u_n <= 1.0) {
            return Err(Error::invalid("uN", "impact must lie in (0, 1]"));
        }
        if !(r.mu_n >= 0.0 && r.mu_n.is_finite()) {
            return Err(Error::invalid("muN", "mutation rate cannot be negative"));
        }
        if !(r.eta > 0.0 && r.eta.is_finite()) {
            return Err(Error::invalid("etaN", "magnitude must be positive"));
        }
        if let Some(t) = r.theta {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid("theta", "schedule exponent must be positive"));
            }
        }
        Ok(ScalingSchedule {
            n: r.n,
            delta: r.delta,
            u_n: r.u_n,
            mu_n: r.mu_n,
            eta: r.eta,
            theta: r.theta,
        })
    }
}

impl From<ScalingSchedule> for RawSchedule {
    fn from(s: ScalingSchedule) -> RawSchedule {
        RawSchedule {
            n: s.n,
            delta: s.delta,
            u_n: s.u_n,
            mu_n: s.mu_n,
            eta: s.eta,
            theta: s.theta,
        }
    }
}
