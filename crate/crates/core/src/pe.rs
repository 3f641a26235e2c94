//! Persistence of excitation of sampled matrix and direction signals.
//!
//! A PSD signal `Σ(t)` is PE with window `T` and level `μ` when every window
//! average `(1/T) ∫_t^{t+T} Σ` dominates `μ I`. Here the integral is the
//! trapezoidal rule on the given grid (exact for the piecewise-linear
//! interpolant), and window starts sweep every sample.

use crate::error::{Error, Result};
use crate::geometry::{bearing, projector, Mat3, UnitVec3};
use crate::graph::{validate_leader_follower, AgentId, Digraph};
use crate::linalg::{max_eigen3, min_eigen3};
use crate::trajectory::DesiredTrajectory;

const PSD_TOL: f64 = 1e-9;

/// Default sample step (s) for formation checks.
pub const DEFAULT_PE_DT: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct SampledMatrixSignal {
    times: Vec<f64>,
    values: Vec<Mat3>,
}

impl SampledMatrixSignal {
    pub fn new(times: Vec<f64>, values: Vec<Mat3>) -> Result<Self> {
        check_grid(&times, values.len())?;
        for (k, m) in values.iter().enumerate() {
            if (m - m.transpose()).abs().max() > PSD_TOL || min_eigen3(m) < -PSD_TOL {
                return Err(Error::invalid(format!("sample {k} is not symmetric PSD")));
            }
        }
        Ok(SampledMatrixSignal { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Mat3] {
        &self.values
    }

    /// Sample-wise sum of two signals on the same grid.
    pub fn add(&self, other: &SampledMatrixSignal) -> Result<SampledMatrixSignal> {
        if self.times != other.times {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(SampledMatrixSignal { times: self.times.clone(), values })
    }

    /// Every `stride`-th sample (the last sample is always kept when it falls
    /// on the stride).
    pub fn decimate(&self, stride: usize) -> SampledMatrixSignal {
        let stride = stride.max(1);
        SampledMatrixSignal {
            times: self.times.iter().step_by(stride).copied().collect(),
            values: self.values.iter().step_by(stride).copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledDirectionSignal {
    times: Vec<f64>,
    values: Vec<UnitVec3>,
}

impl SampledDirectionSignal {
    pub fn new(times: Vec<f64>, values: Vec<UnitVec3>) -> Result<Self> {
        check_grid(&times, values.len())?;
        Ok(SampledDirectionSignal { times, values })
    }

    pub fn from_fn(times: Vec<f64>, f: impl Fn(f64) -> UnitVec3) -> Result<Self> {
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[UnitVec3] {
        &self.values
    }

    pub fn projectors(&self) -> SampledMatrixSignal {
        SampledMatrixSignal { times: self.times.clone(), values: self.values.iter().map(projector).collect() }
    }
}

fn check_grid(times: &[f64], len: usize) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::invalid("a sampled signal needs at least 2 samples"));
    }
    if times.len() != len {
        return Err(Error::invalid(format!("{} times but {} values", times.len(), len)));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("sample times must be finite and strictly increasing"));
    }
    Ok(())
}

/// Uniform grid `0, dt, ..., n dt` with `n = round(horizon / dt)`.
pub fn uniform_grid(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(Error::invalid(format!("need horizon > 0 and dt > 0 (got {horizon}, {dt})")));
    }
    let n = (horizon / dt).round() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

/// Running trapezoidal integral of a piecewise-linear matrix signal.
struct CumulativeIntegral<'a> {
    signal: &'a SampledMatrixSignal,
    at_samples: Vec<Mat3>,
}

impl<'a> CumulativeIntegral<'a> {
    fn new(signal: &'a SampledMatrixSignal) -> Self {
        let mut at_samples = Vec::with_capacity(signal.times.len());
        let mut acc = Mat3::zeros();
        at_samples.push(acc);
        for k in 1..signal.times.len() {
            let h = signal.times[k] - signal.times[k - 1];
            acc += (signal.values[k - 1] + signal.values[k]) * (0.5 * h);
            at_samples.push(acc);
        }
        CumulativeIntegral { signal, at_samples }
    }

    /// Integral from the first sample to `t`, where `t` lies in segment
    /// `[times[k], times[k+1]]`.
    fn at(&self, k: usize, t: f64) -> Mat3 {
        let times = &self.signal.times;
        if k + 1 >= times.len() || t == times[k] {
            return self.at_samples[k.min(times.len() - 1)];
        }
        let h = times[k + 1] - times[k];
        let s = t - times[k];
        let a = self.signal.values[k];
        let b = self.signal.values[k + 1];
        self.at_samples[k] + (a + (b - a) * (0.5 * s / h)) * s
    }
}

/// Minimum over window starts of `λ_min((1/T) ∫_t^{t+T} Σ)`.
pub fn pe_margin(signal: &SampledMatrixSignal, window: f64) -> Result<f64> {
    Ok(window_minima(signal, window)?.into_iter().fold(f64::INFINITY, f64::min))
}

/// `λ_min` of each admissible window average, one entry per start sample.
pub fn window_minima(signal: &SampledMatrixSignal, window: f64) -> Result<Vec<f64>> {
    if !(window > 0.0) {
        return Err(Error::invalid(format!("window must be positive, got {window}")));
    }
    let times = &signal.times;
    let last = *times.last().unwrap();
    let span = last - times[0];
    // tolerate round-off when the span equals the window
    let slack = 1e-12 * window.max(1.0);
    if span + slack < window {
        return Err(Error::SpanTooShort { span, window });
    }
    let integral = CumulativeIntegral::new(signal);
    let mut out = Vec::new();
    let mut seg = 0usize;
    for (k, &start) in times.iter().enumerate() {
        let end = start + window;
        if end > last + slack {
            break;
        }
        let end = end.min(last);
        while seg + 1 < times.len() - 1 && times[seg + 1] <= end {
            seg += 1;
        }
        let avg = (integral.at(seg, end) - integral.at_samples[k]) / window;
        out.push(min_eigen3(&avg));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentPe {
    pub agent: AgentId,
    pub mu_star: f64,
    pub is_pe: bool,
    /// Best non-collinearity margin over neighbor pairs (agents with two or
    /// more neighbors only).
    pub epsilon1: Option<f64>,
    /// Largest `λ_max` of the summed projector over the samples.
    pub lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PEReport {
    pub window_t: f64,
    pub mu_requested: f64,
    pub mu_star: f64,
    pub is_pe: bool,
    pub per_agent: Vec<AgentPe>,
    pub epsilon1: Option<f64>,
    /// Richardson-style estimate of the quadrature error in `mu_star`, from a
    /// rerun on the grid with every other sample dropped.
    pub quadrature_error: Option<f64>,
}

pub fn direction_is_pe(bearings: &SampledDirectionSignal, window: f64, mu: f64) -> Result<PEReport> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::invalid(format!("direction PE level must lie in (0, 1), got {mu}")));
    }
    let mu_star = pe_margin(&bearings.projectors(), window)?;
    Ok(PEReport {
        window_t: window,
        mu_requested: mu,
        mu_star,
        is_pe: mu_star >= mu,
        per_agent: Vec::new(),
        epsilon1: None,
        quadrature_error: None,
    })
}

/// `1 - max_t |y_i(t)^T y_j(t)|`.
pub fn noncollinearity_margin(y_i: &SampledDirectionSignal, y_j: &SampledDirectionSignal) -> Result<f64> {
    if y_i.times != y_j.times {
        return Err(Error::GridMismatch);
    }
    let worst = y_i.values.iter().zip(&y_j.values).map(|(a, b)| a.dot(b).abs()).fold(0.0, f64::max);
    Ok(1.0 - worst)
}

/// Samples each follower's summed desired-bearing projector on a uniform grid
/// and measures its PE margin.
pub fn formation_is_bearing_pe(
    graph: &Digraph,
    desired: &DesiredTrajectory,
    window: f64,
    mu: f64,
    horizon: f64,
    dt: f64,
) -> Result<PEReport> {
    let report = validate_leader_follower(graph);
    if !report.is_leader_follower {
        let why = report.failure_witness.map(|w| w.to_string()).unwrap_or_default();
        return Err(Error::NotLeaderFollower(why));
    }
    if !(mu > 0.0) {
        return Err(Error::invalid(format!("PE level must be positive, got {mu}")));
    }
    let grid = uniform_grid(horizon, dt)?;
    let bearings = desired_bearings(graph, desired, &grid)?;

    let mut per_agent = Vec::new();
    let mut quadrature_error: f64 = 0.0;
    for i in graph.agents().filter(|&i| graph.neighbor_count(i) > 0) {
        let signals: Vec<&SampledDirectionSignal> =
            graph.neighbors(i).iter().map(|&j| &bearings[&(i, j)]).collect();
        let summed = summed_projectors(&signals);
        let mu_star = pe_margin(&summed, window)?;
        if grid.len() >= 5 {
            if let Ok(coarse) = pe_margin(&summed.decimate(2), window) {
                quadrature_error = quadrature_error.max((mu_star - coarse).abs() / 3.0);
            }
        }
        let mut epsilon1 = None;
        for (a, ya) in signals.iter().enumerate() {
            for yb in &signals[a + 1..] {
                let e = noncollinearity_margin(ya, yb)?;
                epsilon1 = Some(epsilon1.map_or(e, |best: f64| best.max(e)));
            }
        }
        let lambda_max = summed.values.iter().map(max_eigen3).fold(0.0, f64::max);
        per_agent.push(AgentPe { agent: i, mu_star, is_pe: mu_star >= mu, epsilon1, lambda_max });
    }
    let mu_star = per_agent.iter().map(|a| a.mu_star).fold(f64::INFINITY, f64::min);
    let epsilon1 = per_agent.iter().filter_map(|a| a.epsilon1).reduce(f64::min);
    Ok(PEReport {
        window_t: window,
        mu_requested: mu,
        mu_star,
        is_pe: per_agent.iter().all(|a| a.is_pe),
        per_agent,
        epsilon1,
        quadrature_error: Some(quadrature_error),
    })
}

/// Desired bearing signals `g*_ij` for every edge, sampled on `grid`.
pub fn desired_bearings(
    graph: &Digraph,
    desired: &DesiredTrajectory,
    grid: &[f64],
) -> Result<std::collections::BTreeMap<(AgentId, AgentId), SampledDirectionSignal>> {
    if desired.agent_count() != graph.agent_count() {
        return Err(Error::invalid(format!(
            "desired trajectory has {} agents, graph has {}",
            desired.agent_count(),
            graph.agent_count()
        )));
    }
    let mut out = std::collections::BTreeMap::new();
    for &(i, j) in graph.edges() {
        let mut values = Vec::with_capacity(grid.len());
        for &t in grid {
            let pi = desired.state(i.index(), t).p;
            let pj = desired.state(j.index(), t).p;
            let g = bearing(&pi, &pj).ok_or(Error::BearingUndefinedAt { i, j, t })?;
            values.push(g);
        }
        out.insert((i, j), SampledDirectionSignal { times: grid.to_vec(), values });
    }
    Ok(out)
}

fn summed_projectors(signals: &[&SampledDirectionSignal]) -> SampledMatrixSignal {
    let times = signals[0].times.clone();
    let values = (0..times.len()).map(|k| signals.iter().map(|s| projector(&s.values[k])).sum()).collect();
    SampledMatrixSignal { times, values }
}
