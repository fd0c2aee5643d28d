//! Forward-in-time simulation on a torus in rescaled coordinates. The field
//! discretizes space into a regular grid; each event replaces a proportion u
//! of every cell whose center lies in the replacement ball with the parent's
//! type. Two cell payloads are supported: a two-allele frequency in [0, 1],
//! and a full atomic measure on type space [0, 1] kept as a weighted atom
//! list over a uniform background.
//!
//! Events carry the unrescaled radius laws truncated at L/2 (an event larger
//! than the torus is ill-defined under wrapping); the truncated tail mass is
//! part of the reported event rate, so the Poisson stream is exact for the
//! truncated model. Atomic cells apply three tricks that keep per-event cost
//! O(1): a shared scale factor absorbs the (1-u) rescalings, mutation decay
//! toward the uniform background is folded in lazily when a cell is next
//! touched, and atoms whose weight falls below 1e-7 are pruned into the
//! background.

use crate::geometry::{sample_uniform_ball, Dimension, Point};
use crate::kernels::testfn::TestFunction;
use crate::regimes::{RegimeParams, ScalingSchedule, Tails};
use crate::rng::{replicate_of, RngStream};
use crate::{dual::EstimateWithCI, Error, Result};
use rand::Rng;
use rayon::prelude::*;
use std::collections::VecDeque;

const PRUNE_THRESHOLD: f64 = 1e-7;
const RENORM_EVERY: u32 = 4096;
const SCALE_FLOOR: f64 = 1e-140;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    TwoAllele,
    Atomic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// every cell starts as the uniform measure on type space (frequency 1/2
    /// in two-allele mode)
    UniformLebesgue,
    /// type 0 inside the ball, type 1 outside
    TwoAlleleBall { center: Point, radius: f64 },
    ConstantFrequency(f64),
}

#[derive(Debug, Clone, Copy)]
struct Atom {
    k: f64,
    /// stored weight; the owning cell's scale multiplies it
    w: f64,
}

#[derive(Debug, Clone)]
struct AtomicCell {
    /// oldest atom at the front
    atoms: VecDeque<Atom>,
    scale: f64,
    background: f64,
    /// rescaled time up to which decay has been materialized
    last_update: f64,
    ops: u32,
    /// running mass on the field's tracked type window, if one is set;
    /// follows the exact dynamics, so it ignores atom pruning
    window: f64,
}

impl AtomicCell {
    fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum::<f64>() * self.scale
    }

    fn materialize(&mut self, now: f64, mu: f64, tracked_len: Option<f64>) {
        if mu > 0.0 && now > self.last_update {
            let f = (-mu * (now - self.last_update)).exp();
            self.scale *= f;
            self.background = f * self.background + (1.0 - f);
            if let Some(len) = tracked_len {
                self.window = f * self.window + (1.0 - f) * len;
            }
        }
        self.last_update = now;
    }

    /// decayed mass the cell assigns to [lo, hi], without mutating state
    fn window_mass(&self, now: f64, mu: f64, lo: f64, hi: f64) -> f64 {
        let f = if mu > 0.0 && now > self.last_update {
            (-mu * (now - self.last_update)).exp()
        } else {
            1.0
        };
        let mut atom_part = 0.0;
        for a in &self.atoms {
            if a.k >= lo && a.k <= hi {
                atom_part += a.w;
            }
        }
        let bg = f * self.background + (1.0 - f);
        atom_part * self.scale * f + bg * (hi - lo)
    }

    fn total_mass(&self) -> f64 {
        self.atom_mass() + self.background
    }

    fn replace(&mut self, u: f64, k: f64, tracked: Option<(f64, f64)>) {
        if let Some((lo, hi)) = tracked {
            let psi = f64::from(lo <= k && k <= hi);
            self.window = (1.0 - u) * self.window + u * psi;
        }
        if u == 1.0 {
            self.atoms.clear();
            self.scale = 1.0;
            self.background = 0.0;
            self.atoms.push_back(Atom { k, w: 1.0 });
            return;
        }
        self.scale *= 1.0 - u;
        self.background *= 1.0 - u;
        self.atoms.push_back(Atom {
            k,
            w: u / self.scale,
        });
        while let Some(front) = self.atoms.front() {
            let true_w = front.w * self.scale;
            if true_w < PRUNE_THRESHOLD {
                self.background += true_w;
                self.atoms.pop_front();
            } else {
                break;
            }
        }
        self.ops += 1;
        if self.ops.is_multiple_of(RENORM_EVERY) {
            let total = self.total_mass();
            self.scale /= total;
            self.background /= total;
        }
        if self.scale < SCALE_FLOOR {
            for a in &mut self.atoms {
                a.w *= self.scale;
            }
            self.scale = 1.0;
        }
    }

    /// type of a parent sampled from this cell's measure
    fn draw_type(&self, rng: &mut RngStream) -> f64 {
        let v = rng.random::<f64>() * self.total_mass();
        if v >= self.background {
            // newest atoms carry the most weight; walk from the back
            let mut acc = self.background;
            for a in self.atoms.iter().rev() {
                acc += a.w * self.scale;
                if v < acc {
                    return a.k;
                }
            }
        }
        rng.random::<f64>()
    }
}

#[derive(Debug, Clone)]
enum CellStore {
    TwoAllele(Vec<f64>),
    Atomic(Vec<AtomicCell>),
}

#[derive(Debug, Clone)]
pub struct AlleleField {
    pub d: Dimension,
    pub l: f64,
    /// cells per axis
    pub grid: usize,
    /// mutation rate toward the uniform background, per rescaled time
    pub mu: f64,
    /// rescaled time
    pub time: f64,
    /// type window whose mass every atomic cell maintains incrementally
    tracked: Option<(f64, f64)>,
    cells: CellStore,
}

pub fn new_field(
    mode: Mode,
    d: Dimension,
    l: f64,
    grid: usize,
    init: &Init,
    mu: f64,
) -> Result<AlleleField> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::invalid("L", "torus side must be positive"));
    }
    if grid < 8 {
        return Err(Error::invalid("grid", "at least 8 cells per axis"));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::invalid("mu", "mutation rate cannot be negative"));
    }
    if mode == Mode::TwoAllele && mu > 0.0 {
        return Err(Error::unsupported(
            "mutation",
            "two-allele fields model pure reproduction; use the atomic mode",
        ));
    }
    if let Init::TwoAlleleBall { radius, .. } = init {
        if !(*radius > 0.0 && *radius <= l / 2.0) {
            return Err(Error::invalid("radius", "initial ball must fit in the torus"));
        }
    }
    if let Init::ConstantFrequency(w) = init {
        if !(0.0..=1.0).contains(w) {
            return Err(Error::invalid("w", "frequency must lie in [0, 1]"));
        }
    }
    let n_cells = grid.pow(d.get());
    let mut field = AlleleField {
        d,
        l,
        grid,
        mu,
        time: 0.0,
        tracked: None,
        cells: match mode {
            Mode::TwoAllele => CellStore::TwoAllele(vec![0.0; n_cells]),
            Mode::Atomic => CellStore::Atomic(vec![
                AtomicCell {
                    atoms: VecDeque::new(),
                    scale: 1.0,
                    background: 0.0,
                    last_update: 0.0,
                    ops: 0,
                    window: 0.0,
                };
                n_cells
            ]),
        },
    };
    for idx in 0..n_cells {
        let center = field.cell_center(idx);
        let w = match init {
            Init::UniformLebesgue => 0.5,
            Init::ConstantFrequency(w) => *w,
            Init::TwoAlleleBall { center: c, radius } => {
                if field.torus_distance(&center, c) <= *radius {
                    0.0
                } else {
                    1.0
                }
            }
        };
        match &mut field.cells {
            CellStore::TwoAllele(cells) => cells[idx] = w,
            CellStore::Atomic(cells) => {
                let cell = &mut cells[idx];
                match init {
                    Init::UniformLebesgue => cell.background = 1.0,
                    _ => {
                        if w > 0.0 {
                            cell.atoms.push_back(Atom { k: 1.0, w });
                        }
                        if w < 1.0 {
                            cell.atoms.push_back(Atom { k: 0.0, w: 1.0 - w });
                        }
                    }
                }
            }
        }
    }
    Ok(field)
}

impl AlleleField {
    pub fn mode(&self) -> Mode {
        match self.cells {
            CellStore::TwoAllele(_) => Mode::TwoAllele,
            CellStore::Atomic(_) => Mode::Atomic,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.grid.pow(self.d.get())
    }

    pub fn cell_width(&self) -> f64 {
        self.l / self.grid as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_width().powi(self.d.get() as i32)
    }

    pub fn cell_center(&self, idx: usize) -> Point {
        let h = self.cell_width();
        let mut p = [0.0; 3];
        let mut rest = idx;
        for axis in p.iter_mut().take(self.d.get() as usize) {
            *axis = (rest % self.grid) as f64 * h + 0.5 * h;
            rest /= self.grid;
        }
        p
    }

    pub fn cell_of(&self, x: &Point) -> usize {
        let h = self.cell_width();
        let mut idx = 0;
        for axis in (0..self.d.get() as usize).rev() {
            let mut i = (x[axis] / h).floor() as isize;
            i = i.rem_euclid(self.grid as isize);
            idx = idx * self.grid + i as usize;
        }
        idx
    }

    fn axis_distance(&self, a: f64, b: f64) -> f64 {
        let dx = (a - b).abs();
        dx.min(self.l - dx)
    }

    pub fn torus_distance(&self, a: &Point, b: &Point) -> f64 {
        let mut s = 0.0;
        for axis in 0..self.d.get() as usize {
            let dx = self.axis_distance(a[axis], b[axis]);
            s += dx * dx;
        }
        s.sqrt()
    }

    fn wrap(&self, x: f64) -> f64 {
        let mut v = x % self.l;
        if v < 0.0 {
            v += self.l;
        }
        v
    }

    /// two-allele frequency of a cell
    pub fn frequency(&self, idx: usize) -> f64 {
        match &self.cells {
            CellStore::TwoAllele(cells) => cells[idx],
            CellStore::Atomic(_) => panic!("frequency is a two-allele accessor"),
        }
    }

    pub fn mean_frequency(&self) -> f64 {
        match &self.cells {
            CellStore::TwoAllele(cells) => cells.iter().sum::<f64>() / cells.len() as f64,
            CellStore::Atomic(_) => panic!("mean_frequency is a two-allele accessor"),
        }
    }

    /// Maintain the mass of [lo, hi] incrementally in every atomic cell, so
    /// reads of that window cost O(1) instead of a walk over the atom list.
    /// The running value follows the exact event and decay arithmetic; it is
    /// unaffected by the pruning of negligible atoms, which perturbs walked
    /// masses by up to the prune threshold per discarded atom.
    pub fn track_window(&mut self, lo: f64, hi: f64) -> Result<()> {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::invalid("window", "need 0 <= lo < hi <= 1"));
        }
        if let CellStore::Atomic(cells) = &mut self.cells {
            for cell in cells.iter_mut() {
                cell.window = cell.window_mass(self.time, self.mu, lo, hi);
            }
        }
        self.tracked = Some((lo, hi));
        Ok(())
    }

    /// mass the cell's (decayed) measure gives the type window [lo, hi]
    pub fn window_mass(&self, idx: usize, lo: f64, hi: f64) -> f64 {
        match &self.cells {
            CellStore::TwoAllele(cells) => {
                let w = cells[idx];
                let mut m = 0.0;
                if lo <= 0.0 && 0.0 <= hi {
                    m += 1.0 - w;
                }
                if lo <= 1.0 && 1.0 <= hi {
                    m += w;
                }
                m
            }
            CellStore::Atomic(cells) => {
                if self.tracked == Some((lo, hi)) {
                    let cell = &cells[idx];
                    let f = if self.mu > 0.0 && self.time > cell.last_update {
                        (-self.mu * (self.time - cell.last_update)).exp()
                    } else {
                        1.0
                    };
                    f * cell.window + (1.0 - f) * (hi - lo)
                } else {
                    cells[idx].window_mass(self.time, self.mu, lo, hi)
                }
            }
        }
    }

    pub fn atom_count(&self, idx: usize) -> usize {
        match &self.cells {
            CellStore::TwoAllele(_) => 0,
            CellStore::Atomic(cells) => cells[idx].atoms.len(),
        }
    }

    pub fn cell_total_mass(&self, idx: usize) -> f64 {
        match &self.cells {
            CellStore::TwoAllele(_) => 1.0,
            CellStore::Atomic(cells) => cells[idx].total_mass(),
        }
    }
}

/// One reproduction event in rescaled torus coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardEvent {
    /// rescaled time
    pub time: f64,
    pub center: Point,
    /// parent-search radius, rescaled
    pub r1: f64,
    /// replacement radius, rescaled
    pub r2: f64,
    pub u: f64,
    /// type drawn from the pre-event field at the parent position
    pub parent_type: f64,
}

fn truncated_pareto(rng: &mut RngStream, q: f64, r_max: f64) -> f64 {
    let u = rng.random::<f64>();
    if q == 0.0 {
        r_max.powf(u)
    } else {
        (1.0 - u * (1.0 - r_max.powf(-q))).powf(-1.0 / q)
    }
}

fn tail_mass(q: f64, r_max: f64) -> f64 {
    if q == 0.0 {
        r_max.ln()
    } else {
        (1.0 - r_max.powf(-q)) / q
    }
}

/// Total event rate on the torus per unit of rescaled time: the truncated
/// intensity mass times the unrescaled torus volume and the time dilation.
pub fn event_rate(p: &RegimeParams, sched: &ScalingSchedule, l: f64) -> Result<f64> {
    let d = p.d.get() as f64;
    let r_max = l / (2.0 * sched.delta);
    if r_max < 1.0 {
        return Err(Error::invalid(
            "L",
            "torus smaller than the minimal event diameter at this resolution",
        ));
    }
    let mass = match p.tails {
        Tails::One { a, c, .. } => tail_mass(d + a - c, r_max),
        Tails::Two { a1, a2, c1, c2 } => tail_mass(a1 - c1, r_max) * tail_mass(d + a2 - c2, r_max),
    };
    let volume = (l / sched.delta).powf(d);
    Ok(sched.time_dilation(p.stable_index()) * volume * mass)
}

/// Draw the next event's geometry and parent from the current field state.
/// The parent position is uniform in the search ball around the center; its
/// type comes from the (decayed) cell measure, Bernoulli(frequency) in
/// two-allele mode.
pub fn sample_forward_event(
    rng: &mut RngStream,
    field: &mut AlleleField,
    p: &RegimeParams,
    sched: &ScalingSchedule,
) -> Result<ForwardEvent> {
    let d = p.d.get() as f64;
    let delta = sched.delta;
    let r_max = field.l / (2.0 * delta);
    if r_max < 1.0 {
        return Err(Error::invalid(
            "L",
            "torus smaller than the minimal event diameter at this resolution",
        ));
    }
    let (ru1, ru2) = match p.tails {
        Tails::One { a, b, c } => {
            let r2 = truncated_pareto(rng, d + a - c, r_max);
            let r1 = if b == 1.0 { r2 } else { r2.powf(b).min(r_max) };
            (r1, r2)
        }
        Tails::Two { a1, a2, c1, c2 } => (
            truncated_pareto(rng, a1 - c1, r_max),
            truncated_pareto(rng, d + a2 - c2, r_max),
        ),
    };
    let u = match p.tails {
        Tails::One { c, .. } => {
            if c == 0.0 {
                sched.u_n
            } else {
                sched.u_n * ru2.powf(-c)
            }
        }
        Tails::Two { c1, c2, .. } => sched.u_n * ru1.powf(-c1) * ru2.powf(-c2),
    };
    let mut center = [0.0; 3];
    for axis in center.iter_mut().take(p.d.get() as usize) {
        *axis = rng.random::<f64>() * field.l;
    }
    let (r1, r2) = (ru1 * delta, ru2 * delta);
    let mut parent_pos = sample_uniform_ball(p.d, &center, r1, rng);
    for axis in parent_pos.iter_mut().take(p.d.get() as usize) {
        *axis = field.wrap(*axis);
    }
    let parent_idx = field.cell_of(&parent_pos);
    let now = field.time;
    let mu = field.mu;
    let tracked_len = field.tracked.map(|(lo, hi)| hi - lo);
    let parent_type = match &mut field.cells {
        CellStore::TwoAllele(cells) => {
            if rng.random::<f64>() < cells[parent_idx] {
                1.0
            } else {
                0.0
            }
        }
        CellStore::Atomic(cells) => {
            let cell = &mut cells[parent_idx];
            cell.materialize(now, mu, tracked_len);
            cell.draw_type(rng)
        }
    };
    Ok(ForwardEvent {
        time: field.time,
        center,
        r1,
        r2,
        u,
        parent_type,
    })
}

/// Apply one event: every cell with center in the replacement ball becomes
/// the convex combination (1-u) old + u delta_{parent type}.
pub fn apply_event(field: &mut AlleleField, ev: &ForwardEvent) -> Result<()> {
    apply_event_weighted(field, ev, None).map(|_| ())
}

/// As `apply_event`; when a probe is attached, also returns the jump of the
/// fluctuation pairing: sum over covered cells of
/// u phi(cell) (psi(parent type) - cell window mass) x cell volume,
/// with the window masses read before the update.
pub fn apply_event_weighted(
    field: &mut AlleleField,
    ev: &ForwardEvent,
    probe: Option<(&[f64], (f64, f64))>,
) -> Result<f64> {
    let half = field.l / 2.0;
    if !(ev.r2 > 0.0 && ev.r2 <= half * (1.0 + 1e-12)) || !(ev.r1 > 0.0 && ev.r1 <= half * (1.0 + 1e-12)) {
        return Err(Error::invalid(
            "radius",
            "event radii must lie in (0, L/2] on the torus",
        ));
    }
    if !(ev.u > 0.0 && ev.u <= 1.0) {
        return Err(Error::invalid("u", "impact must lie in (0, 1]"));
    }
    if !(0.0..=1.0).contains(&ev.parent_type) {
        return Err(Error::invalid("parent_type", "types live in [0, 1]"));
    }
    if ev.time > field.time {
        field.time = ev.time;
    }
    let now = field.time;
    let mu = field.mu;
    let vol = field.cell_volume();
    let tracked = field.tracked;
    let tracked_len = tracked.map(|(lo, hi)| hi - lo);
    let mut jump = 0.0;
    // the borrow of cells blocks field methods, so enumerate via a clone of
    // the geometry-only parts
    let geometry = GridGeometry::of(field);
    match &mut field.cells {
        CellStore::TwoAllele(cells) => {
            geometry.for_each_covered(&ev.center, ev.r2, |idx| {
                if let Some((phi, (lo, hi))) = probe {
                    let w = cells[idx];
                    let mut q = 0.0;
                    if lo <= 0.0 && 0.0 <= hi {
                        q += 1.0 - w;
                    }
                    if lo <= 1.0 && 1.0 <= hi {
                        q += w;
                    }
                    let psi_k = f64::from(lo <= ev.parent_type && ev.parent_type <= hi);
                    jump += ev.u * phi[idx] * (psi_k - q) * vol;
                }
                cells[idx] = (1.0 - ev.u) * cells[idx] + ev.u * ev.parent_type;
            });
        }
        CellStore::Atomic(cells) => {
            geometry.for_each_covered(&ev.center, ev.r2, |idx| {
                let cell = &mut cells[idx];
                cell.materialize(now, mu, tracked_len);
                if let Some((phi, (lo, hi))) = probe {
                    let q = if tracked == Some((lo, hi)) {
                        cell.window
                    } else {
                        cell.window_mass(now, mu, lo, hi)
                    };
                    let psi_k = f64::from(lo <= ev.parent_type && ev.parent_type <= hi);
                    jump += ev.u * phi[idx] * (psi_k - q) * vol;
                }
                cell.replace(ev.u, ev.parent_type, tracked);
            });
        }
    }
    Ok(jump)
}

/// Covered-cell enumeration detached from the cell storage borrow.
struct GridGeometry {
    d: usize,
    l: f64,
    grid: usize,
}

impl GridGeometry {
    fn of(field: &AlleleField) -> Self {
        GridGeometry {
            d: field.d.get() as usize,
            l: field.l,
            grid: field.grid,
        }
    }

    fn for_each_covered(&self, center: &Point, r: f64, mut f: impl FnMut(usize)) {
        let h = self.l / self.grid as f64;
        let g = self.grid as isize;
        let mut lo = [0isize; 3];
        let mut len = [1isize; 3];
        for axis in 0..self.d {
            let k0 = ((center[axis] - r) / h).floor() as isize;
            let k1 = ((center[axis] + r) / h).floor() as isize;
            let n = k1 - k0 + 1;
            if n >= g {
                lo[axis] = 0;
                len[axis] = g;
            } else {
                lo[axis] = k0;
                len[axis] = n;
            }
        }
        let mut offs = [0isize; 3];
        loop {
            let mut idx = 0usize;
            let mut dist2 = 0.0;
            for axis in (0..self.d).rev() {
                let i = (lo[axis] + offs[axis]).rem_euclid(g) as usize;
                idx = idx * self.grid + i;
                let c = i as f64 * h + 0.5 * h;
                let dx = (c - center[axis]).abs();
                let dx = dx.min(self.l - dx);
                dist2 += dx * dx;
            }
            if dist2.sqrt() <= r {
                f(idx);
            }
            let mut axis = 0;
            loop {
                if axis == self.d {
                    return;
                }
                offs[axis] += 1;
                if offs[axis] < len[axis] {
                    break;
                }
                offs[axis] = 0;
                axis += 1;
            }
        }
    }
}

type ObserverCallback<'a> = Box<dyn FnMut(f64, &AlleleField) + 'a>;

/// Scheduled field probe; fires at each requested time in order.
pub struct Observer<'a> {
    times: Vec<f64>,
    next: usize,
    callback: ObserverCallback<'a>,
}

impl<'a> Observer<'a> {
    pub fn new(mut times: Vec<f64>, callback: impl FnMut(f64, &AlleleField) + 'a) -> Self {
        times.sort_by(f64::total_cmp);
        Observer {
            times,
            next: 0,
            callback: Box::new(callback),
        }
    }
}

/// Drive the field with the Poisson event stream until `t_end` (rescaled).
/// Returns the number of applied events.
pub fn run_forward(
    rng: &mut RngStream,
    field: &mut AlleleField,
    p: &RegimeParams,
    sched: &ScalingSchedule,
    t_end: f64,
    observers: &mut [Observer],
) -> Result<u64> {
    if !(t_end >= field.time) {
        return Err(Error::invalid("t_end", "horizon precedes the field time"));
    }
    let rate = event_rate(p, sched, field.l)?;
    let mut n_events = 0u64;
    loop {
        let holding = if rate > 0.0 {
            -(1.0 - rng.random::<f64>()).ln() / rate
        } else {
            f64::INFINITY
        };
        let t_next = field.time + holding;
        let stop = t_next > t_end;
        let fire_until = if stop { t_end } else { t_next };
        loop {
            // fire pending probes in global time order across observers
            let mut best: Option<(usize, f64)> = None;
            for (i, obs) in observers.iter().enumerate() {
                if obs.next < obs.times.len() {
                    let t = obs.times[obs.next];
                    if t <= fire_until && best.is_none_or(|(_, bt)| t < bt) {
                        best = Some((i, t));
                    }
                }
            }
            let Some((i, t_obs)) = best else { break };
            let obs = &mut observers[i];
            obs.next += 1;
            if t_obs > field.time {
                field.time = t_obs;
            }
            (obs.callback)(t_obs, field);
        }
        if stop {
            field.time = t_end;
            return Ok(n_events);
        }
        field.time = t_next;
        let ev = sample_forward_event(rng, field, p, sched)?;
        apply_event(field, &ev)?;
        n_events += 1;
    }
}

/// sqrt(N eta_N) (<rho, phi x psi> - <Lebesgue, phi x psi>) with the spatial
/// integral on the grid and psi the indicator of the type window.
pub fn fluctuation_projection(
    field: &AlleleField,
    sched: &ScalingSchedule,
    phi: &TestFunction,
    window: (f64, f64),
) -> Result<f64> {
    let (lo, hi) = window;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::invalid(
            "window",
            "the type window must be a nonempty subinterval of [0, 1]",
        ));
    }
    let len = hi - lo;
    let vol = field.cell_volume();
    let mut acc = 0.0;
    for idx in 0..field.cell_count() {
        let phi_c = phi.value(&field.cell_center(idx));
        if phi_c != 0.0 {
            acc += phi_c * (field.window_mass(idx, lo, hi) - len) * vol;
        }
    }
    Ok(sched.n_eta().sqrt() * acc)
}

#[allow(clippy::too_many_arguments)]
fn qv_replicate(
    rng: &mut RngStream,
    p: &RegimeParams,
    sched: &ScalingSchedule,
    l: f64,
    grid: usize,
    phi_grid: &[f64],
    window: (f64, f64),
    t_end: f64,
) -> Result<f64> {
    let mut field = new_field(Mode::Atomic, p.d, l, grid, &Init::UniformLebesgue, p.mu)?;
    field.track_window(window.0, window.1)?;
    let rate = event_rate(p, sched, l)?;
    let scale = sched.n_eta().sqrt();
    let mut qv = 0.0;
    loop {
        let holding = if rate > 0.0 {
            -(1.0 - rng.random::<f64>()).ln() / rate
        } else {
            f64::INFINITY
        };
        let t_next = field.time + holding;
        if t_next > t_end {
            return Ok(qv);
        }
        field.time = t_next;
        let ev = sample_forward_event(rng, &mut field, p, sched)?;
        let jump = apply_event_weighted(&mut field, &ev, Some((phi_grid, window)))?;
        let z = scale * jump;
        qv += z * z;
    }
}

/// Mean accumulated squared fluctuation jump per unit time,
/// sum (Delta <Z, phi x psi>)^2 / t, over independent replicates started
/// from the uniform measure. The limit target is the pairing constant
/// gamma <phi, K_beta phi> |window| (1 - |window|).
#[allow(clippy::too_many_arguments)]
pub fn empirical_qv(
    base: &RngStream,
    p: &RegimeParams,
    sched: &ScalingSchedule,
    l: f64,
    grid: usize,
    phi: &TestFunction,
    window: (f64, f64),
    t_end: f64,
    reps: u64,
) -> Result<EstimateWithCI> {
    if reps == 0 {
        return Err(Error::invalid("reps", "at least one replicate is required"));
    }
    if !(t_end > 0.0) {
        return Err(Error::invalid("t_end", "horizon must be positive"));
    }
    let (lo, hi) = window;
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::invalid(
            "window",
            "the type window must be a nonempty subinterval of [0, 1]",
        ));
    }
    let probe_field = new_field(Mode::Atomic, p.d, l, grid, &Init::UniformLebesgue, 0.0)?;
    let phi_grid: Vec<f64> = (0..probe_field.cell_count())
        .map(|idx| phi.value(&probe_field.cell_center(idx)))
        .collect();
    let values: Result<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_of(base, rep);
            qv_replicate(&mut rng, p, sched, l, grid, &phi_grid, window, t_end)
                .map(|qv| qv / t_end)
        })
        .collect();
    let values = values?;
    // fixed replicate order keeps the mean bit-stable across worker counts
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let se = (var / n).sqrt();
    Ok(EstimateWithCI {
        estimate: mean,
        std_error: se,
        ci_low: mean - 1.96 * se,
        ci_high: mean + 1.96 * se,
        reps,
    })
}
