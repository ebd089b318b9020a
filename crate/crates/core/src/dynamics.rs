//! Trajectories and the entanglement observables computed along them: death time, crossing
//! count and the long-time limit.
//!
//! Death detection works on the PT margin m(t), the smallest partial-transpose eigenvalue.
//! Two-qubit partial transposes have at most one negative eigenvalue, so the negativity is
//! max(0, −m). A sample is *entangled* when m < −ε_death, *separable* when m > ε_death and
//! lies in the undecided band otherwise. Crossings are counted with hysteresis across the band.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{self, AsymptoticSet, ChannelError, ChannelSpec, NumericPropagator};
use crate::linalg::{self, CMatrix4};
use crate::state::{DensityMatrix, Tolerances, XState};

/// Relative slack on the persistence test n(T) ≥ n(T/2).
const PERSISTENCE_SLACK: f64 = 1e-9;
const ASYMPTOTE_CHANGE: f64 = 1e-10;
const ASYMPTOTE_MEMBERSHIP: f64 = 1e-8;
const MAX_DOUBLINGS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("{what} = {value} must be finite and positive")]
    InvalidTime { what: &'static str, value: f64 },
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("no convergence after {doublings} horizon doublings (last change {change:e})")]
    NoConvergence { doublings: usize, change: f64 },
    #[error("limit state is {distance:e} away from the channel's asymptotic set")]
    NotInAsymptoticSet { distance: f64 },
    #[error("cannot read trajectory CSV: {0}")]
    Csv(String),
    #[error("cannot read death report: {0}")]
    Json(String),
}

/// Entanglement and physicality diagnostics of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub negativity: f64,
    pub min_pt_eig: f64,
    pub min_eig: f64,
    pub trace: f64,
    /// (a, b, c, d), reported for X-form trajectories only.
    pub populations: Option<[f64; 4]>,
    pub abs_w: f64,
    pub abs_z: f64,
}

impl Diagnostics {
    pub fn of(rho: &DensityMatrix) -> Self {
        let pt = linalg::jacobi_eigenvalues(&crate::entanglement::partial_transpose(rho));
        Self {
            negativity: pt.iter().filter(|&&v| v < 0.0).fold(0.0, |acc, v| acc - v),
            min_pt_eig: pt[0],
            min_eig: rho.min_eigenvalue(),
            trace: rho.trace(),
            populations: None,
            abs_w: rho.get(0, 3).norm(),
            abs_z: rho.get(1, 2).norm(),
        }
    }

    /// Closed-form diagnostics from the two blocks of an X state.
    pub fn of_x(x: &XState) -> Self {
        let low_w = crate::state::block_min_eigenvalue(x.b(), x.c(), x.w().norm());
        let low_z = crate::state::block_min_eigenvalue(x.a(), x.d(), x.z().norm());
        Self {
            negativity: (-low_w).max(0.0) + (-low_z).max(0.0),
            min_pt_eig: low_w.min(low_z),
            min_eig: x.min_eigenvalue(),
            trace: x.a() + x.b() + x.c() + x.d(),
            populations: Some(x.populations()),
            abs_w: x.w().norm(),
            abs_z: x.z().norm(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Entangled,
    Band,
    Separable,
}

fn side(margin: f64, eps: f64) -> Side {
    if margin < -eps {
        Side::Entangled
    } else if margin > eps {
        Side::Separable
    } else {
        Side::Band
    }
}

#[derive(Debug, Clone)]
struct Source {
    rho0: DensityMatrix,
    x0: Option<XState>,
    channel: ChannelSpec,
    dt: f64,
}

impl Source {
    fn evolve(&self, t: f64, tol: &Tolerances) -> Result<DensityMatrix, DynamicsError> {
        match &self.x0 {
            Some(x) => Ok(channels::propagate_x_closed(x, &self.channel, t)?.embed()),
            None => Ok(channels::propagate_numeric(
                &self.rho0,
                &self.channel,
                t,
                self.dt,
                tol,
            )?),
        }
    }
}

/// Time-ordered samples of one evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
    diagnostics: Vec<Diagnostics>,
    source: Option<Source>,
}

impl Trajectory {
    /// Builds a trajectory from explicit samples; times must start at 0 and increase strictly.
    pub fn from_states(times: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self, DynamicsError> {
        if times.len() != states.len() {
            return Err(DynamicsError::InvalidTrajectory(format!(
                "{} times but {} states",
                times.len(),
                states.len()
            )));
        }
        if times.first() != Some(&0.0) {
            return Err(DynamicsError::InvalidTrajectory(
                "times must start at 0".into(),
            ));
        }
        if !times.windows(2).all(|p| p[1] > p[0]) || !times.iter().all(|t| t.is_finite()) {
            return Err(DynamicsError::InvalidTrajectory(
                "times must be finite and strictly increasing".into(),
            ));
        }
        let diagnostics = states.iter().map(Diagnostics::of).collect();
        Ok(Self {
            times,
            states,
            diagnostics,
            source: None,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn diagnostics(&self) -> &[Diagnostics] {
        &self.diagnostics
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn samples(&self) -> Vec<Sample> {
        self.times
            .iter()
            .zip(&self.diagnostics)
            .map(|(&t, &d)| Sample::new(t, d))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        write_samples_csv(&self.samples(), out)
    }
}

/// One CSV row: `t,negativity,min_pt_eig,min_eig,a,b,c,d,abs_w,abs_z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub negativity: f64,
    pub min_pt_eig: f64,
    pub min_eig: f64,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub d: Option<f64>,
    pub abs_w: f64,
    pub abs_z: f64,
}

impl Sample {
    fn new(t: f64, d: Diagnostics) -> Self {
        let p = d.populations;
        Self {
            t,
            negativity: d.negativity,
            min_pt_eig: d.min_pt_eig,
            min_eig: d.min_eig,
            a: p.map(|p| p[0]),
            b: p.map(|p| p[1]),
            c: p.map(|p| p[2]),
            d: p.map(|p| p[3]),
            abs_w: d.abs_w,
            abs_z: d.abs_z,
        }
    }
}

pub fn write_samples_csv<W: Write>(samples: &[Sample], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples_csv<R: Read>(input: R) -> Result<Vec<Sample>, DynamicsError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<Result<Vec<Sample>, _>>()
        .map_err(|e| DynamicsError::Csv(e.to_string()))
}

fn check_positive(what: &'static str, value: f64) -> Result<(), DynamicsError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(DynamicsError::InvalidTime { what, value })
    }
}

/// The time grid 0, dt, 2dt, …, horizon (last step possibly partial).
fn time_grid(horizon: f64, dt: f64) -> Vec<f64> {
    let mut times = vec![0.0];
    let mut n = 0usize;
    for h in channels::step_sizes(horizon, dt) {
        n += 1;
        // Index-based times avoid accumulated rounding; the final sample lands on the horizon.
        let t = if h < dt {
            horizon
        } else {
            (n as f64 * dt).min(horizon)
        };
        times.push(t);
    }
    if let Some(last) = times.last_mut() {
        *last = horizon;
    }
    times
}

/// Evolves `rho0` to `horizon` on a grid of step `dt`, keeping every `sample_every`-th grid
/// point and the final one. X-form inputs under catalog channels use the closed form.
pub fn simulate(
    rho0: &DensityMatrix,
    ch: &ChannelSpec,
    horizon: f64,
    dt: f64,
    sample_every: usize,
    tol: &Tolerances,
) -> Result<Trajectory, DynamicsError> {
    check_positive("horizon", horizon)?;
    check_positive("dt", dt)?;
    ch.validate()?;
    let sample_every = sample_every.max(1);
    let grid = time_grid(horizon, dt);
    let keep = |n: usize| n.is_multiple_of(sample_every) || n + 1 == grid.len();

    let x0 = if ch.is_catalog() {
        rho0.project_x(tol).ok()
    } else {
        None
    };
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut diagnostics = Vec::new();

    match &x0 {
        Some(x) => {
            for (n, &t) in grid.iter().enumerate().filter(|(n, _)| keep(*n)) {
                let xt = if n == 0 {
                    *x
                } else {
                    channels::propagate_x_closed(x, ch, t)?
                };
                times.push(t);
                states.push(xt.embed());
                diagnostics.push(Diagnostics::of_x(&xt));
            }
        }
        None => {
            let prop = NumericPropagator::new(ch, dt)?;
            let mut raw = *rho0.entries();
            for n in 0..grid.len() {
                if n > 0 {
                    raw = prop.advance_raw(&raw, grid[n] - grid[n - 1]);
                }
                if keep(n) {
                    let rho = if n == 0 {
                        rho0.clone()
                    } else {
                        channels::finalize(&raw, tol)?
                    };
                    times.push(grid[n]);
                    diagnostics.push(Diagnostics::of(&rho));
                    states.push(rho);
                }
            }
        }
    }
    Ok(Trajectory {
        times,
        states,
        diagnostics,
        source: Some(Source {
            rho0: rho0.clone(),
            x0,
            channel: ch.clone(),
            dt,
        }),
    })
}

/// Times at which the trajectory crosses between the entangled and separable sides of the
/// ε_death band. With a known source each crossing is located by bisection on the true
/// evolution; otherwise the margin is interpolated linearly.
pub fn crossing_times(traj: &Trajectory, tol: &Tolerances) -> Result<Vec<f64>, DynamicsError> {
    let eps = tol.death;
    let mut out = Vec::new();
    let mut anchor: Option<(usize, Side)> = None;
    for (n, d) in traj.diagnostics.iter().enumerate() {
        let s = side(d.min_pt_eig, eps);
        if s == Side::Band {
            continue;
        }
        match anchor {
            Some((i, prev)) if prev != s => {
                out.push(locate_crossing(traj, i, n, tol)?);
                anchor = Some((n, s));
            }
            Some((_, _)) => anchor = Some((n, s)),
            None => anchor = Some((n, s)),
        }
    }
    Ok(out)
}

pub fn crossing_count(traj: &Trajectory, tol: &Tolerances) -> Result<usize, DynamicsError> {
    Ok(crossing_times(traj, tol)?.len())
}

fn locate_crossing(
    traj: &Trajectory,
    i: usize,
    j: usize,
    tol: &Tolerances,
) -> Result<f64, DynamicsError> {
    let eps = tol.death;
    let (t0, t1) = (traj.times[i], traj.times[j]);
    let start_entangled = traj.diagnostics[i].min_pt_eig < -eps;
    match &traj.source {
        Some(src) => {
            let entangled_at = |t: f64| -> Result<bool, DynamicsError> {
                Ok(crate::entanglement::min_pt_eigenvalue(&src.evolve(t, tol)?) < -eps)
            };
            let delta = 1e-9 / src.channel.rate();
            let (mut lo, mut hi) = (t0, t1);
            while hi - lo > delta {
                let mid = 0.5 * (lo + hi);
                if entangled_at(mid)? == start_entangled {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(hi)
        }
        None => {
            let (m0, m1) = (
                traj.diagnostics[i].min_pt_eig,
                traj.diagnostics[j].min_pt_eig,
            );
            let level = if start_entangled { -eps } else { eps };
            Ok(t0 + (t1 - t0) * (level - m0) / (m1 - m0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeathVerdict {
    FiniteDeath { t_star: f64 },
    AsymptoticDeath,
    PersistentEntanglement,
    NeverEntangled,
}

impl DeathVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            DeathVerdict::FiniteDeath { .. } => "finite",
            DeathVerdict::AsymptoticDeath => "asymptotic",
            DeathVerdict::PersistentEntanglement => "persistent",
            DeathVerdict::NeverEntangled => "never_entangled",
        }
    }

    pub fn t_star(&self) -> Option<f64> {
        match self {
            DeathVerdict::FiniteDeath { t_star } => Some(*t_star),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeathReport {
    pub verdict: DeathVerdict,
    pub horizon: f64,
    pub crossings: usize,
    pub epsilon_death: f64,
}

#[derive(Serialize, Deserialize)]
struct DeathReportJson {
    verdict: String,
    t_star: Option<f64>,
    horizon: f64,
    crossings: usize,
    epsilon_death: f64,
}

impl DeathReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&DeathReportJson {
            verdict: self.verdict.as_str().to_owned(),
            t_star: self.verdict.t_star(),
            horizon: self.horizon,
            crossings: self.crossings,
            epsilon_death: self.epsilon_death,
        })
        .expect("death report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DynamicsError> {
        let raw: DeathReportJson =
            serde_json::from_str(text).map_err(|e| DynamicsError::Json(e.to_string()))?;
        let verdict = match (raw.verdict.as_str(), raw.t_star) {
            ("finite", Some(t_star)) => DeathVerdict::FiniteDeath { t_star },
            ("asymptotic", None) => DeathVerdict::AsymptoticDeath,
            ("persistent", None) => DeathVerdict::PersistentEntanglement,
            ("never_entangled", None) => DeathVerdict::NeverEntangled,
            (v, t) => {
                return Err(DynamicsError::Json(format!(
                    "verdict {v:?} with t_star {t:?}"
                )))
            }
        };
        Ok(Self {
            verdict,
            horizon: raw.horizon,
            crossings: raw.crossings,
            epsilon_death: raw.epsilon_death,
        })
    }
}

/// PT margin along a grid, with exact re-evaluation inside grid cells for bisection.
enum MarginPath {
    Closed {
        x0: XState,
        channel: ChannelSpec,
    },
    Numeric {
        prop: NumericPropagator,
        states: Vec<CMatrix4>,
    },
}

impl MarginPath {
    fn scan(
        rho0: &DensityMatrix,
        ch: &ChannelSpec,
        grid: &[f64],
        dt: f64,
        tol: &Tolerances,
    ) -> Result<(Self, Vec<f64>), DynamicsError> {
        if ch.is_catalog() {
            if let Ok(x0) = rho0.project_x(tol) {
                let mut margins = Vec::with_capacity(grid.len());
                for &t in grid {
                    margins.push(channels::propagate_x_closed(&x0, ch, t)?.min_pt_eigenvalue());
                }
                return Ok((
                    MarginPath::Closed {
                        x0,
                        channel: ch.clone(),
                    },
                    margins,
                ));
            }
        }
        let prop = NumericPropagator::new(ch, dt)?;
        let mut states = Vec::with_capacity(grid.len());
        let mut margins = Vec::with_capacity(grid.len());
        let mut raw = *rho0.entries();
        for n in 0..grid.len() {
            if n > 0 {
                raw = prop.advance_raw(&raw, grid[n] - grid[n - 1]);
                // Validates physicality at every grid point.
                channels::finalize(&raw, tol)?;
            }
            margins.push(pt_margin(&raw));
            states.push(raw);
        }
        Ok((MarginPath::Numeric { prop, states }, margins))
    }

    /// Margin at time `t` inside the grid cell starting at index `cell`.
    fn margin_in_cell(&self, grid: &[f64], cell: usize, t: f64) -> Result<f64, DynamicsError> {
        match self {
            MarginPath::Closed { x0, channel } => {
                Ok(channels::propagate_x_closed(x0, channel, t)?.min_pt_eigenvalue())
            }
            MarginPath::Numeric { prop, states } => {
                Ok(pt_margin(&prop.advance_raw(&states[cell], t - grid[cell])))
            }
        }
    }
}

fn pt_margin(m: &CMatrix4) -> f64 {
    linalg::jacobi_eigenvalues(&crate::entanglement::partial_transpose_matrix(m))[0]
}

/// Death report for an X state, with default grid step 1e−3/rate.
pub fn death_time(
    x0: &XState,
    ch: &ChannelSpec,
    horizon: f64,
    tol: &Tolerances,
) -> Result<DeathReport, DynamicsError> {
    ch.validate()?;
    death_time_with(&x0.embed(), ch, horizon, ch.default_dt(), tol)
}

/// Death report for any state and channel on a grid of step `dt`.
pub fn death_time_with(
    rho0: &DensityMatrix,
    ch: &ChannelSpec,
    horizon: f64,
    dt: f64,
    tol: &Tolerances,
) -> Result<DeathReport, DynamicsError> {
    check_positive("horizon", horizon)?;
    check_positive("dt", dt)?;
    ch.validate()?;
    let eps = tol.death;
    let grid = time_grid(horizon, dt);
    let (path, margins) = MarginPath::scan(rho0, ch, &grid, dt, tol)?;
    let sides: Vec<Side> = margins.iter().map(|&m| side(m, eps)).collect();
    let crossings = count_transitions(&sides);
    let report = |verdict| DeathReport {
        verdict,
        horizon,
        crossings,
        epsilon_death: eps,
    };

    let Some(last_e) = sides.iter().rposition(|&s| s == Side::Entangled) else {
        return Ok(report(DeathVerdict::NeverEntangled));
    };
    let last = grid.len() - 1;
    let negativity = |m: f64| (-m).max(0.0);
    let trend = (
        negativity(margins[0]),
        negativity(margins[last / 2]),
        negativity(margins[last]),
    );

    if last_e == last {
        let (n0, n_half, n_end) = trend;
        return if n_end >= n_half * (1.0 - PERSISTENCE_SLACK) {
            Ok(report(DeathVerdict::PersistentEntanglement))
        } else if n_end < n_half && n_half < n0 {
            Ok(report(DeathVerdict::AsymptoticDeath))
        } else {
            Err(DynamicsError::Inconclusive(format!(
                "negativity {n0:e} → {n_half:e} → {n_end:e} at t = 0, {}, {}",
                grid[last / 2],
                grid[last]
            )))
        };
    }

    if sides[last_e..].contains(&Side::Separable) {
        let delta = 1e-9 / ch.rate();
        let (mut lo, mut hi) = (grid[last_e], grid[last_e + 1]);
        while hi - lo > delta {
            let mid = 0.5 * (lo + hi);
            if path.margin_in_cell(&grid, last_e, mid)? < -eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok(report(DeathVerdict::FiniteDeath { t_star: hi }));
    }

    // Negativity faded below ε_death without the state ever becoming strictly separable.
    let (n0, n_half, n_end) = trend;
    if n_end <= n_half && n_half < n0 {
        Ok(report(DeathVerdict::AsymptoticDeath))
    } else {
        Err(DynamicsError::Inconclusive(format!(
            "negativity fades into the ε_death band at t = {} without a separable sample",
            grid[last_e + 1]
        )))
    }
}

fn count_transitions(sides: &[Side]) -> usize {
    let mut prev = None;
    let mut count = 0;
    for &s in sides.iter().filter(|&&s| s != Side::Band) {
        if prev.is_some_and(|p| p != s) {
            count += 1;
        }
        prev = Some(s);
    }
    count
}

/// Long-time limit by horizon doubling, checked against `asymptotic_set(ch)` when that set is
/// known.
pub fn estimate_asymptote(
    rho0: &DensityMatrix,
    ch: &ChannelSpec,
    tol: &Tolerances,
) -> Result<DensityMatrix, DynamicsError> {
    ch.validate()?;
    let x0 = if ch.is_catalog() {
        rho0.project_x(tol).ok()
    } else {
        None
    };
    let evolve = |rho: &DensityMatrix, t: f64| -> Result<DensityMatrix, DynamicsError> {
        match &x0 {
            Some(_) => {
                let x = rho.project_x(tol).map_err(ChannelError::from)?;
                Ok(channels::propagate_x_closed(&x, ch, t)?.embed())
            }
            None => Ok(channels::propagate_numeric(
                rho,
                ch,
                t,
                ch.default_dt(),
                tol,
            )?),
        }
    };

    let mut span = 1.0 / ch.rate();
    let mut current = evolve(rho0, span)?;
    let mut change = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        let next = evolve(&current, span)?;
        change = linalg::max_abs_diff(next.entries(), current.entries());
        current = next;
        span *= 2.0;
        if change < ASYMPTOTE_CHANGE {
            return check_membership(current, ch);
        }
    }
    Err(DynamicsError::NoConvergence {
        doublings: MAX_DOUBLINGS,
        change,
    })
}

fn check_membership(
    limit: DensityMatrix,
    ch: &ChannelSpec,
) -> Result<DensityMatrix, DynamicsError> {
    let set = match channels::asymptotic_set(ch) {
        Ok(set) => set,
        Err(ChannelError::UnsupportedChannel(_)) => return Ok(limit),
        Err(e) => return Err(e.into()),
    };
    if set.contains(&limit, ASYMPTOTE_MEMBERSHIP) {
        return Ok(limit);
    }
    let distance = match &set {
        AsymptoticSet::SinglePoint(p) => linalg::max_abs_diff(p.entries(), limit.entries()),
        _ => f64::NAN,
    };
    Err(DynamicsError::NotInAsymptoticSet { distance })
}
