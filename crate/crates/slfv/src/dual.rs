//! Backward-in-time pair dual. Two ancestral lineages sit in unrescaled
//! coordinates; reproduction events relocate a marked lineage to the event's
//! parent, coalesce the pair when both are marked, and independent
//! exponential clocks kill either lineage at the mutation rate. The scaling
//! schedule enters only at the boundary: u_N and mu_N parameterize the event
//! stream, and horizons given in rescaled time are stretched by N/delta^alpha.
//!
//! Events are produced by thinning. Proposals arrive at the per-lineage
//! marked-event rate summed over both lineages (impact folded into the rate,
//! radii size-biased accordingly), a proposal picks one lineage and plants
//! the event center uniformly in its replacement ball, and the outcome split
//! corrects for double counting where the balls overlap: when the center
//! covers both lineages the proposal resolves to
//! (coalesce, relocate 1, relocate 2, nothing) with probabilities
//! (u/2, (1-u)/2, (1-u)/2, u/2), which reproduces the target rates
//! u^2 and u(1-u) per event exactly; a center covering one lineage always
//! relocates it.

use crate::geometry::{distance, sample_uniform_ball, unit_ball_volume, Point};
use crate::kernels::quad;
use crate::regimes::{RegimeParams, ScalingSchedule, Tails};
use crate::rng::{replicate_of, RngStream};
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairStatus {
    BothAlive,
    /// carries the unrescaled model time of the joint mark
    Coalesced(f64),
    /// carries the unrescaled model time of the first mutation
    Killed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualPairState {
    pub x1: Point,
    pub x2: Point,
    pub status: PairStatus,
    /// unrescaled model time
    pub clock: f64,
}

impl DualPairState {
    pub fn new(x1: Point, x2: Point) -> Self {
        DualPairState {
            x1,
            x2,
            status: PairStatus::BothAlive,
            clock: 0.0,
        }
    }

    pub fn is_terminal(&self) -> bool {
        !matches!(self.status, PairStatus::BothAlive)
    }
}

/// One reproduction event as seen by the pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EventDraw {
    pub r1: f64,
    pub r2: f64,
    pub u: f64,
    pub center: Point,
    pub parent: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalOutcome {
    Coalesce,
    /// index of the relocated lineage (0 or 1)
    Relocate(usize),
    Nothing,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepTrace {
    Kill,
    Proposal {
        draw: EventDraw,
        outcome: ProposalOutcome,
    },
}

/// Radii of one marked event. Size-biasing by u V_{r2} turns both intensity
/// families into unit-Pareto draws: one tail gives r2 ~ Pareto(a) with
/// r1 = r2^b, two tails give independent Pareto(a1) and Pareto(a2).
pub fn sample_radius_pair<R: Rng + ?Sized>(rng: &mut R, p: &RegimeParams) -> (f64, f64) {
    match p.tails {
        Tails::One { a, b, .. } => {
            let r2 = pareto(rng, a);
            let r1 = if b == 1.0 {
                r2
            } else if b == 0.0 {
                1.0
            } else {
                r2.powf(b)
            };
            (r1, r2)
        }
        Tails::Two { a1, a2, .. } => (pareto(rng, a1), pareto(rng, a2)),
    }
}

fn pareto<R: Rng + ?Sized>(rng: &mut R, a: f64) -> f64 {
    (1.0 - rng.random::<f64>()).powf(-1.0 / a)
}

fn impact(p: &RegimeParams, u_n: f64, r1: f64, r2: f64) -> f64 {
    match p.tails {
        Tails::One { c, .. } => {
            if c == 0.0 {
                u_n
            } else {
                u_n * r2.powf(-c)
            }
        }
        Tails::Two { c1, c2, .. } => u_n * r1.powf(-c1) * r2.powf(-c2),
    }
}

/// Thinning bound: twice the per-lineage marked-event rate, expressed per
/// unit of rescaled time. Uniform in the separation `h`, which makes it a
/// valid proposal rate for every pair geometry.
pub fn pair_event_rate(p: &RegimeParams, sched: &ScalingSchedule, h: f64) -> f64 {
    debug_assert!(h >= 0.0);
    let denom = match p.tails {
        Tails::One { a, .. } => a,
        Tails::Two { a1, a2, .. } => a1 * a2,
    };
    2.0 * sched.u_n * unit_ball_volume(p.d) / denom * sched.time_dilation(p.stable_index())
}

struct StepRates {
    /// proposal rate per unit unrescaled time
    lam: f64,
    /// mutation kill rate for the pair per unit unrescaled time
    kill: f64,
    u_n: f64,
}

impl StepRates {
    fn new(p: &RegimeParams, sched: &ScalingSchedule) -> Self {
        let lam = pair_event_rate(p, sched, 0.0) / sched.time_dilation(p.stable_index());
        StepRates {
            lam,
            kill: 2.0 * sched.mu_n,
            u_n: sched.u_n,
        }
    }
}

fn step_inner(
    rng: &mut RngStream,
    state: &DualPairState,
    p: &RegimeParams,
    rates: &StepRates,
) -> (DualPairState, StepTrace) {
    let total = rates.lam + rates.kill;
    let mut next = state.clone();
    next.clock += -(1.0 - rng.random::<f64>()).ln() / total;
    if rates.kill > 0.0 && rng.random::<f64>() * total < rates.kill {
        next.status = PairStatus::Killed(next.clock);
        return (next, StepTrace::Kill);
    }
    let (r1, r2) = sample_radius_pair(rng, p);
    let u = impact(p, rates.u_n, r1, r2);
    let pick = usize::from(rng.random::<f64>() >= 0.5);
    let (xi, xo) = if pick == 0 {
        (&state.x1, &state.x2)
    } else {
        (&state.x2, &state.x1)
    };
    let center = sample_uniform_ball(p.d, xi, r2, rng);
    let outcome = if distance(p.d, &center, xo) <= r2 {
        // both lineages in the replacement ball: fold the 1/2 union
        // correction and the independent u-marks into one split
        let w = rng.random::<f64>();
        if w < 0.5 * u {
            ProposalOutcome::Coalesce
        } else if w < 0.5 {
            ProposalOutcome::Relocate(0)
        } else if w < 1.0 - 0.5 * u {
            ProposalOutcome::Relocate(1)
        } else {
            ProposalOutcome::Nothing
        }
    } else {
        ProposalOutcome::Relocate(pick)
    };
    let parent = sample_uniform_ball(p.d, &center, r1, rng);
    match outcome {
        ProposalOutcome::Coalesce => {
            next.x1 = parent;
            next.x2 = parent;
            next.status = PairStatus::Coalesced(next.clock);
        }
        ProposalOutcome::Relocate(0) => next.x1 = parent,
        ProposalOutcome::Relocate(_) => next.x2 = parent,
        ProposalOutcome::Nothing => {}
    }
    let draw = EventDraw {
        r1,
        r2,
        u,
        center,
        parent,
    };
    (next, StepTrace::Proposal { draw, outcome })
}

pub fn step_pair_traced(
    rng: &mut RngStream,
    state: &DualPairState,
    p: &RegimeParams,
    sched: &ScalingSchedule,
) -> Result<(DualPairState, StepTrace)> {
    if state.is_terminal() {
        return Err(Error::invalid("state", "cannot step a terminal pair state"));
    }
    Ok(step_inner(rng, state, p, &StepRates::new(p, sched)))
}

pub fn step_pair(
    rng: &mut RngStream,
    state: &DualPairState,
    p: &RegimeParams,
    sched: &ScalingSchedule,
) -> Result<DualPairState> {
    step_pair_traced(rng, state, p, sched).map(|(s, _)| s)
}

/// Run a pair from (x1, x2) until coalescence, mutation, or the horizon.
/// `t_max` is in rescaled time units; the returned state's clock is
/// unrescaled and capped at t_max N/delta^alpha.
pub fn run_pair(
    rng: &mut RngStream,
    x1: Point,
    x2: Point,
    t_max: f64,
    p: &RegimeParams,
    sched: &ScalingSchedule,
) -> Result<DualPairState> {
    run_pair_logged(rng, x1, x2, t_max, p, sched).map(|(s, _)| s)
}

/// As `run_pair`, also counting the reproduction events that moved the pair
/// (relocations and the coalescence itself; kills and vacuous proposals are
/// not events of the pair).
pub fn run_pair_logged(
    rng: &mut RngStream,
    x1: Point,
    x2: Point,
    t_max: f64,
    p: &RegimeParams,
    sched: &ScalingSchedule,
) -> Result<(DualPairState, u64)> {
    if !(t_max >= 0.0) {
        return Err(Error::invalid("t_max", "horizon must be non-negative"));
    }
    let horizon = t_max * sched.time_dilation(p.stable_index());
    let rates = StepRates::new(p, sched);
    let mut state = DualPairState::new(x1, x2);
    let mut n_events = 0u64;
    while !state.is_terminal() {
        let (next, trace) = step_inner(rng, &state, p, &rates);
        if next.clock > horizon {
            state.clock = horizon;
            break;
        }
        if matches!(
            trace,
            StepTrace::Proposal {
                outcome: ProposalOutcome::Coalesce | ProposalOutcome::Relocate(_),
                ..
            }
        ) {
            n_events += 1;
        }
        state = next;
    }
    Ok((state, n_events))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Coal,
    Killed,
    Survived,
}

impl TrialOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrialOutcome::Coal => "coal",
            TrialOutcome::Killed => "killed",
            TrialOutcome::Survived => "survived",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub rep: u64,
    pub outcome: TrialOutcome,
    /// rescaled units, present only for coalesced replicates
    pub coal_time: Option<f64>,
    pub n_events: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reps: u64,
}

/// One identity-by-descent replicate: draw rescaled start positions from the
/// two sampling densities, stretch space by 1/delta, run to the horizon.
/// Coalescence is the only success: a killed pair carries a fresh mutation
/// and under a diffuse initial condition two lineages that never met are
/// identical with probability zero.
pub fn ibd_trial<F, G>(
    rng: &mut RngStream,
    phi: &F,
    psi: &G,
    t: f64,
    p: &RegimeParams,
    sched: &ScalingSchedule,
) -> Result<(TrialOutcome, Option<f64>, u64)>
where
    F: Fn(&mut RngStream) -> Point + ?Sized,
    G: Fn(&mut RngStream) -> Point + ?Sized,
{
    let scale = sched.space_scale();
    let mut x1 = phi(rng);
    let mut x2 = psi(rng);
    for i in 0..p.d.get() as usize {
        x1[i] *= scale;
        x2[i] *= scale;
    }
    let (state, n_events) = run_pair_logged(rng, x1, x2, t, p, sched)?;
    Ok(match state.status {
        PairStatus::Coalesced(tau) => (
            TrialOutcome::Coal,
            Some(tau / sched.time_dilation(p.stable_index())),
            n_events,
        ),
        PairStatus::Killed(_) => (TrialOutcome::Killed, None, n_events),
        PairStatus::BothAlive => (TrialOutcome::Survived, None, n_events),
    })
}

fn binomial_scaled(successes: u64, reps: u64, scale: f64) -> EstimateWithCI {
    let n = reps as f64;
    let p_hat = successes as f64 / n;
    let se = (p_hat * (1.0 - p_hat) / n).sqrt();
    EstimateWithCI {
        estimate: scale * p_hat,
        std_error: scale * se,
        ci_low: scale * (p_hat - 1.96 * se).max(0.0),
        ci_high: scale * (p_hat + 1.96 * se).min(1.0),
        reps,
    }
}

/// Monte Carlo estimator of N eta_N P(identity by descent) for samples drawn
/// from `phi` and `psi`. Replicate `rep` runs on a stream derived from
/// (`base`, rep) only, so the result does not depend on the worker count;
/// aggregation is a success count.
pub fn estimate_ibd<F, G>(
    base: &RngStream,
    phi: &F,
    psi: &G,
    t: f64,
    p: &RegimeParams,
    sched: &ScalingSchedule,
    reps: u64,
) -> Result<EstimateWithCI>
where
    F: Fn(&mut RngStream) -> Point + Sync + ?Sized,
    G: Fn(&mut RngStream) -> Point + Sync + ?Sized,
{
    if reps == 0 {
        return Err(Error::invalid("reps", "at least one replicate is required"));
    }
    let flags: Result<Vec<bool>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_of(base, rep);
            ibd_trial(&mut rng, phi, psi, t, p, sched).map(|(o, _, _)| o == TrialOutcome::Coal)
        })
        .collect();
    let successes = flags?.iter().filter(|&&b| b).count() as u64;
    Ok(binomial_scaled(successes, reps, sched.n_eta()))
}

/// As `estimate_ibd`, keeping the per-replicate records for logging.
pub fn estimate_ibd_logged<F, G>(
    base: &RngStream,
    phi: &F,
    psi: &G,
    t: f64,
    p: &RegimeParams,
    sched: &ScalingSchedule,
    reps: u64,
) -> Result<(EstimateWithCI, Vec<TrialRecord>)>
where
    F: Fn(&mut RngStream) -> Point + Sync + ?Sized,
    G: Fn(&mut RngStream) -> Point + Sync + ?Sized,
{
    if reps == 0 {
        return Err(Error::invalid("reps", "at least one replicate is required"));
    }
    let records: Result<Vec<TrialRecord>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_of(base, rep);
            ibd_trial(&mut rng, phi, psi, t, p, sched).map(|(outcome, coal_time, n_events)| {
                TrialRecord {
                    rep,
                    outcome,
                    coal_time,
                    n_events,
                }
            })
        })
        .collect();
    let records = records?;
    let successes = records
        .iter()
        .filter(|r| r.outcome == TrialOutcome::Coal)
        .count() as u64;
    Ok((binomial_scaled(successes, reps, sched.n_eta()), records))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HazardEstimate {
    /// per unit unrescaled time
    pub hazard: f64,
    pub std_error: f64,
    pub coalescences: u64,
    pub reps: u64,
}

/// Empirical coalescence hazard of a coincident pair: each replicate starts
/// both lineages at the origin and waits for the first observable transition
/// (coalescence, a separating relocation, or a kill). While coincident the
/// transition rates are constant, so the competing-risks estimator
/// (coalescence count) / (total waiting time) is the maximum-likelihood
/// hazard, with standard error sqrt(count) / time.
pub fn coincident_hazard(
    base: &RngStream,
    p: &RegimeParams,
    sched: &ScalingSchedule,
    reps: u64,
) -> Result<HazardEstimate> {
    if reps == 0 {
        return Err(Error::invalid("reps", "at least one replicate is required"));
    }
    let rates = StepRates::new(p, sched);
    let trials: Vec<(f64, bool)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_of(base, rep);
            let mut state = DualPairState::new([0.0; 3], [0.0; 3]);
            loop {
                let (next, trace) = step_inner(&mut rng, &state, p, &rates);
                match trace {
                    StepTrace::Kill => return (next.clock, false),
                    StepTrace::Proposal {
                        outcome: ProposalOutcome::Coalesce,
                        ..
                    } => return (next.clock, true),
                    StepTrace::Proposal {
                        outcome: ProposalOutcome::Relocate(_),
                        ..
                    } => return (next.clock, false),
                    StepTrace::Proposal {
                        outcome: ProposalOutcome::Nothing,
                        ..
                    } => state = next,
                }
            }
        })
        .collect();
    // replicate order is fixed by the indexed collect, so this sum is
    // bit-stable across worker counts
    let mut total_time = 0.0;
    let mut coalescences = 0u64;
    for &(t, coal) in &trials {
        total_time += t;
        if coal {
            coalescences += 1;
        }
    }
    let hazard = coalescences as f64 / total_time;
    let std_error = (coalescences.max(1) as f64).sqrt() / total_time;
    Ok(HazardEstimate {
        hazard,
        std_error,
        coalescences,
        reps,
    })
}

/// Rate at which one event jointly marks both members of a coincident pair,
/// per unit unrescaled time: the impact-squared, ball-volume-weighted mass of
/// the event intensity, computed by quadrature.
pub fn coincident_coal_rate(p: &RegimeParams, sched: &ScalingSchedule) -> Result<f64> {
    let v1 = unit_ball_volume(p.d);
    let d = p.d.get() as f64;
    let u2 = sched.u_n * sched.u_n;
    match p.tails {
        Tails::One { a, c, .. } => {
            let mut f = |r: f64| r.powf(-2.0 * c + d - 1.0 - d - a + c);
            Ok(u2 * v1 * quad::power_tail(&mut f, 1.0, 1e-12)?)
        }
        Tails::Two { a1, a2, c1, c2 } => {
            let mut f1 = |r: f64| r.powf(-2.0 * c1 - 1.0 - a1 + c1);
            let mut f2 = |r: f64| r.powf(-2.0 * c2 + d - 1.0 - d - a2 + c2);
            let i1 = quad::power_tail(&mut f1, 1.0, 1e-12)?;
            let i2 = quad::power_tail(&mut f2, 1.0, 1e-12)?;
            Ok(u2 * v1 * i1 * i2)
        }
    }
}
