//! Distributed position observer driven by bearing and velocity measurements.
//!
//! Each follower integrates `p̂̇_i = v_i − K Σ_j π_{g_ij} (p̂_i − p̂_j)`; the
//! leader's estimate is its true position.

use crate::error::{Error, Result};
use crate::geometry::{bearing, projector, Mat3, Vec3};
use crate::graph::{AgentId, Digraph};
use crate::integrator::Rk4;
use crate::linalg::min_eigen3;
use crate::sim::{closed_loop_rhs, pack, unpack, AgentState, Scenario};

/// Symmetric positive-definite observer gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverGain(Mat3);

impl ObserverGain {
    pub fn new(k: Mat3) -> Result<Self> {
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observer gain has non-finite entries"));
        }
        let asym = (k - k.transpose()).abs().max();
        if asym > 1e-12 * k.abs().max().max(1.0) {
            return Err(Error::invalid(format!("observer gain is not symmetric (asymmetry {asym:e})")));
        }
        let lmin = min_eigen3(&(0.5 * (k + k.transpose())));
        if !(lmin > 0.0) {
            return Err(Error::invalid(format!("observer gain is not positive definite (min eigenvalue {lmin})")));
        }
        Ok(ObserverGain(k))
    }

    pub fn identity() -> Self {
        ObserverGain(Mat3::identity())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }
}

impl Default for ObserverGain {
    fn default() -> Self {
        Self::identity()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub p_hat: Vec<Vec3>,
    pub gain: ObserverGain,
}

/// Estimate derivatives for every agent. `truth` holds the true `(p_i, v_i)`;
/// the leader's estimate is read from `truth`, not from `state`.
pub fn observer_rhs(state: &ObserverState, truth: &[AgentState], graph: &Digraph, leader: AgentId) -> Result<Vec<Vec3>> {
    observer_rhs_at(state, truth, graph, leader, 0.0)
}

fn observer_rhs_at(state: &ObserverState, truth: &[AgentState], graph: &Digraph, leader: AgentId, t: f64) -> Result<Vec<Vec3>> {
    let n = graph.agent_count();
    if state.p_hat.len() != n || truth.len() != n {
        return Err(Error::invalid(format!(
            "expected {n} estimates and states, got {} and {}",
            state.p_hat.len(),
            truth.len()
        )));
    }
    let est = |a: AgentId| if a == leader { truth[a.index()].p } else { state.p_hat[a.index()] };
    let k = state.gain.matrix();
    let mut out = Vec::with_capacity(n);
    for i in graph.agents() {
        let mut d = truth[i.index()].v;
        if i != leader {
            let mut corr = Vec3::zeros();
            for &j in graph.neighbors(i) {
                let g = bearing(&truth[i.index()].p, &truth[j.index()].p).ok_or(Error::BearingUndefinedAt { i, j, t })?;
                corr += projector(&g) * (est(i) - est(j));
            }
            d -= k * corr;
        }
        out.push(d);
    }
    Ok(out)
}

/// Source of the true agent motion the observer is fed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObserverTruth {
    /// Agents move exactly along the desired trajectory.
    #[default]
    Desired,
    /// Agents follow the closed-loop controller from the scenario's initial state.
    ClosedLoop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverConfig {
    pub gain: ObserverGain,
    pub p_hat0: Vec<Vec3>,
    pub duration: f64,
    pub truth: ObserverTruth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverLog {
    pub times: Vec<f64>,
    /// `estimates[k][a]` is agent `a`'s estimate at `times[k]`.
    pub estimates: Vec<Vec<Vec3>>,
    /// `errors[k][a] = ‖p̂_a − p_a‖` at `times[k]`.
    pub errors: Vec<Vec<f64>>,
}

impl ObserverLog {
    pub fn error_series(&self, agent: AgentId) -> Vec<(f64, f64)> {
        self.times.iter().zip(&self.errors).map(|(&t, e)| (t, e[agent.index()])).collect()
    }
}

pub fn run_observer(scenario: &Scenario, config: &ObserverConfig) -> Result<ObserverLog> {
    let n = scenario.agent_count();
    if config.p_hat0.len() != n {
        return Err(Error::invalid(format!("expected {n} initial estimates, got {}", config.p_hat0.len())));
    }
    if !(config.duration > 0.0 && config.duration.is_finite()) {
        return Err(Error::invalid(format!("observer duration must be positive, got {}", config.duration)));
    }
    let dt = scenario.dt;
    let steps = (config.duration / dt).round() as usize;
    let leader = scenario.leader();
    let graph = &scenario.graph;

    let desired_truth = |t: f64| -> Vec<AgentState> {
        scenario.desired.states(t).into_iter().map(|d| AgentState::new(d.p, d.v)).collect()
    };
    let closed = config.truth == ObserverTruth::ClosedLoop;
    // packed state: [closed-loop agents (6n) if any] ++ estimates (3n)
    let off = if closed { 6 * n } else { 0 };
    let mut x = if closed { pack(&scenario.initial) } else { Vec::new() };
    x.extend(config.p_hat0.iter().flat_map(|p| [p.x, p.y, p.z]));

    let rhs = |t: f64, xx: &[f64], dx: &mut [f64]| -> Result<()> {
        let truth = if closed {
            closed_loop_rhs(scenario, t, &xx[..off], &mut dx[..off])?;
            unpack(&xx[..off])
        } else {
            desired_truth(t)
        };
        let state = ObserverState { p_hat: estimates(&xx[off..]), gain: config.gain };
        let d = observer_rhs_at(&state, &truth, graph, leader, t)?;
        for (a, da) in d.iter().enumerate() {
            dx[off + 3 * a..off + 3 * a + 3].copy_from_slice(da.as_slice());
        }
        Ok(())
    };

    let mut log = ObserverLog {
        times: Vec::with_capacity(steps + 1),
        estimates: Vec::with_capacity(steps + 1),
        errors: Vec::with_capacity(steps + 1),
    };
    let mut rk = Rk4::new(x.len());
    for k in 0..=steps {
        let t = k as f64 * dt;
        let truth = if closed { unpack(&x[..off]) } else { desired_truth(t) };
        let mut est = estimates(&x[off..]);
        est[leader.index()] = truth[leader.index()].p;
        if let Some(a) = est.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite { agent: AgentId::from_index(a), t });
        }
        log.errors.push(est.iter().zip(&truth).map(|(e, s)| (e - s.p).norm()).collect());
        log.estimates.push(est);
        log.times.push(t);
        if k < steps {
            rk.step(t, dt, &mut x, &rhs)?;
        }
    }
    Ok(log)
}

fn estimates(x: &[f64]) -> Vec<Vec3> {
    x.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Negated slope of `ln(value)` against `t`, in 1/s.
    pub rate: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub const DEFAULT_SKIP_FRACTION: f64 = 0.1;

/// Least-squares fit of `ln(value) = a − rate·t` after dropping the first
/// `skip_fraction` of the samples.
pub fn fit_exponential_rate(series: &[(f64, f64)], skip_fraction: f64) -> Result<RateFit> {
    if !(0.0..1.0).contains(&skip_fraction) {
        return Err(Error::invalid(format!("skip fraction must lie in [0, 1), got {skip_fraction}")));
    }
    let start = (series.len() as f64 * skip_fraction).floor() as usize;
    let window = &series[start..];
    if window.len() < 10 {
        return Err(Error::invalid(format!("need at least 10 points to fit a rate, got {}", window.len())));
    }
    if let Some(&(t, v)) = window.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::invalid(format!("cannot fit a rate through nonpositive value {v} at t = {t}")));
    }
    let len = window.len() as f64;
    let mean_t = window.iter().map(|s| s.0).sum::<f64>() / len;
    let mean_y = window.iter().map(|s| s.1.ln()).sum::<f64>() / len;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, v) in window {
        let (dt, dy) = (t - mean_t, v.ln() - mean_y);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if !(stt > 0.0) {
        return Err(Error::invalid("sample times are all equal"));
    }
    let slope = sty / stt;
    let r_squared = if syy <= f64::EPSILON * len * mean_y.abs().max(1.0) {
        1.0
    } else {
        (sty * sty / (stt * syy)).min(1.0)
    };
    Ok(RateFit { rate: if syy == 0.0 { 0.0 } else { -slope }, r_squared, points: window.len() })
}

/// Prefix of `series` before the value first drops below `floor`; fitting
/// past that point would fit round-off rather than the decay.
pub fn above_floor(series: &[(f64, f64)], floor: f64) -> &[(f64, f64)] {
    let end = series.iter().position(|&(_, v)| v < floor).unwrap_or(series.len());
    &series[..end]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::Gains;
    use crate::graph::build_digraph;
    use crate::presets;
    use crate::sim::Scenario;
    use crate::trajectory::DesiredTrajectory;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn id(k: usize) -> AgentId {
        AgentId::new(k).unwrap()
    }

    fn static_pair() -> Scenario {
        let g = build_digraph(2, &[(2, 1)]).unwrap();
        let pos = vec![Vec3::zeros(), Vec3::new(0.0, 0.0, -1.0)];
        let init = pos.iter().map(|p| AgentState::new(*p, Vec3::zeros())).collect();
        Scenario::new(g, DesiredTrajectory::Static { positions: pos }, vec![Gains::new(3.0, 10.0); 2], init, 1e-2, 10.0, 1e-3)
            .unwrap()
    }

    #[test]
    fn gain_validation() {
        assert!(ObserverGain::new(Mat3::identity() * 2.0).is_ok());
        assert!(ObserverGain::new(Mat3::new(1.0, 2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)).is_err());
        assert!(ObserverGain::new(Mat3::from_diagonal(&Vec3::new(1.0, 0.0, 1.0))).is_err());
        assert!(ObserverGain::new(Mat3::from_diagonal(&Vec3::new(1.0, -1.0, 1.0))).is_err());
    }

    #[test]
    fn zero_error_gives_velocity() {
        let scn = presets::pyramid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth: Vec<AgentState> = scn.initial.clone();
        let a = Mat3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let gain = ObserverGain::new(a * a.transpose() + Mat3::identity()).unwrap();
        let state = ObserverState { p_hat: truth.iter().map(|s| s.p).collect(), gain };
        let d = observer_rhs(&state, &truth, &scn.graph, scn.leader()).unwrap();
        for (di, s) in d.iter().zip(&truth) {
            assert!((di - s.v).norm() < 1e-14);
        }
    }

    #[test]
    fn hand_example_and_unobservable_direction() {
        let g = build_digraph(2, &[(2, 1)]).unwrap();
        // g_21 = (0, 0, 1)
        let truth = vec![AgentState::new(Vec3::zeros(), Vec3::zeros()), AgentState::new(Vec3::new(0.0, 0.0, -1.0), Vec3::zeros())];
        let p_hat = vec![Vec3::zeros(), truth[1].p + Vec3::new(1.0, 0.0, 1.0)];
        let d = observer_rhs(&ObserverState { p_hat, gain: ObserverGain::identity() }, &truth, &g, id(1)).unwrap();
        assert_eq!(d[1], Vec3::new(-1.0, 0.0, 0.0));

        let p_hat = vec![Vec3::zeros(), truth[1].p + Vec3::new(0.0, 0.0, 2.5)];
        let d = observer_rhs(&ObserverState { p_hat, gain: ObserverGain::identity() }, &truth, &g, id(1)).unwrap();
        assert_eq!(d[1], Vec3::zeros());
    }

    #[test]
    fn undefined_bearing_is_named() {
        let g = build_digraph(2, &[(2, 1)]).unwrap();
        let truth = vec![AgentState::new(Vec3::zeros(), Vec3::zeros()); 2];
        let state = ObserverState { p_hat: vec![Vec3::zeros(); 2], gain: ObserverGain::identity() };
        assert_eq!(
            observer_rhs(&state, &truth, &g, id(1)),
            Err(Error::BearingUndefinedAt { i: id(2), j: id(1), t: 0.0 })
        );
    }

    #[test]
    fn static_pair_keeps_parallel_component() {
        let scn = static_pair();
        let p_hat0 = vec![Vec3::zeros(), Vec3::new(0.7, -0.4, 0.3) + Vec3::new(0.0, 0.0, -1.0)];
        let cfg = ObserverConfig { gain: ObserverGain::identity(), p_hat0, duration: 10.0, truth: ObserverTruth::Desired };
        let log = run_observer(&scn, &cfg).unwrap();
        let g = Vec3::new(0.0, 0.0, 1.0);
        let mut last_perp = f64::INFINITY;
        for (est, _) in log.estimates.iter().zip(&log.times) {
            let err = est[1] - Vec3::new(0.0, 0.0, -1.0);
            assert!((err.dot(&g) - 0.3).abs() < 1e-6);
            let perp = (err - g * err.dot(&g)).norm();
            assert!(perp <= last_perp);
            last_perp = perp;
        }
        assert!(log.errors.iter().all(|e| e[0] == 0.0));
    }

    #[test]
    fn equilibrium_is_invariant() {
        let scn = presets::pyramid().with_timing(1e-2, 5.0).unwrap();
        for truth in [ObserverTruth::Desired, ObserverTruth::ClosedLoop] {
            let p_hat0 = match truth {
                ObserverTruth::Desired => scn.desired.states(0.0).iter().map(|d| d.p).collect(),
                ObserverTruth::ClosedLoop => scn.initial.iter().map(|s| s.p).collect(),
            };
            let cfg = ObserverConfig { gain: ObserverGain::identity(), p_hat0, duration: 5.0, truth };
            let log = run_observer(&scn, &cfg).unwrap();
            let worst = log.errors.iter().flatten().cloned().fold(0.0, f64::max);
            assert!(worst < 1e-10, "{truth:?}: {worst}");
        }
    }

    #[test]
    fn first_follower_ignores_downstream_agents() {
        let full = presets::pyramid().with_timing(1e-2, 20.0).unwrap();
        let shape = presets::pyramid_shape()[..3].to_vec();
        let reduced = Scenario::new(
            build_digraph(3, &[(2, 1), (3, 2)]).unwrap(),
            crate::trajectory::rotating_rigid_trajectory(shape, crate::geometry::UnitVec3::z(), presets::PYRAMID_PERIOD).unwrap(),
            full.gains[..3].to_vec(),
            full.initial[..3].to_vec(),
            full.dt,
            full.t_end,
            full.separation_guard,
        )
        .unwrap();
        let p_hat0 = vec![Vec3::zeros(), Vec3::new(1.0, 2.0, 3.0), Vec3::new(-1.0, 0.5, 2.0), Vec3::new(4.0, 4.0, 4.0)];
        for truth in [ObserverTruth::Desired, ObserverTruth::ClosedLoop] {
            let a = run_observer(&full, &ObserverConfig { gain: ObserverGain::identity(), p_hat0: p_hat0.clone(), duration: 20.0, truth }).unwrap();
            let b = run_observer(&reduced, &ObserverConfig { gain: ObserverGain::identity(), p_hat0: p_hat0[..3].to_vec(), duration: 20.0, truth })
                .unwrap();
            for (ea, eb) in a.estimates.iter().zip(&b.estimates) {
                assert_eq!(ea[..3], eb[..]);
            }
        }
    }

    #[test]
    fn rate_fit_examples() {
        let exact: Vec<_> = (0..=500).map(|k| k as f64 * 0.01).map(|t| (t, (-2.0 * t).exp())).collect();
        let fit = fit_exponential_rate(&exact, 0.1).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-6);
        assert!(fit.r_squared > 0.999999);

        let flat: Vec<_> = (0..50).map(|k| (k as f64, 4.2)).collect();
        let fit = fit_exponential_rate(&flat, 0.1).unwrap();
        assert_eq!(fit.rate, 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noisy: Vec<_> = (0..=1000)
            .map(|k| k as f64 * 0.01)
            .map(|t| (t, 3.0 * (-0.5 * t).exp() + rng.gen_range(-1e-9..1e-9)))
            .collect();
        assert!((fit_exponential_rate(&noisy, 0.1).unwrap().rate - 0.5).abs() < 1e-4);

        let bad = vec![(0.0, 1.0); 5];
        assert!(fit_exponential_rate(&bad, 0.0).is_err());
        let mut neg = exact.clone();
        neg[300].1 = 0.0;
        assert!(fit_exponential_rate(&neg, 0.1).is_err());
    }

    #[test]
    fn floor_truncation() {
        let s = vec![(0.0, 1.0), (1.0, 1e-3), (2.0, 1e-12), (3.0, 1e-3)];
        assert_eq!(above_floor(&s, 1e-10).len(), 2);
        assert_eq!(above_floor(&s, 0.0).len(), 4);
    }
}
