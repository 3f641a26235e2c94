//! Closed-loop simulation of double-integrator agents under the bearing
//! formation controller.

use crate::controller::{control_input, lyapunov_matrix, require_admissible, Gains, NeighborTerm};
use crate::error::{Error, Result};
use crate::geometry::{relative_state, Vec3};
use crate::graph::{validate_leader_follower, AgentId, Digraph};
use crate::integrator::Rk4;
use crate::linalg::Mat6;
use crate::trajectory::{DesiredState, DesiredTrajectory};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_END: f64 = 30.0;
pub const DEFAULT_SEPARATION_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub p: Vec3,
    pub v: Vec3,
}

impl AgentState {
    pub fn new(p: Vec3, v: Vec3) -> Self {
        AgentState { p, v }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: Digraph,
    pub desired: DesiredTrajectory,
    /// One entry per agent; the leader's entry is not used by the control law.
    pub gains: Vec<Gains>,
    pub initial: Vec<AgentState>,
    pub dt: f64,
    pub t_end: f64,
    pub separation_guard: f64,
    leader: AgentId,
}

impl Scenario {
    /// Validates the graph structure, per-follower gain bounds, integration
    /// settings and bearing definedness at `t = 0`.
    pub fn new(
        graph: Digraph,
        desired: DesiredTrajectory,
        gains: Vec<Gains>,
        initial: Vec<AgentState>,
        dt: f64,
        t_end: f64,
        separation_guard: f64,
    ) -> Result<Self> {
        let n = graph.agent_count();
        let report = validate_leader_follower(&graph);
        let leader = match report.leader {
            Some(l) if report.is_leader_follower => l,
            _ => {
                let why = report.failure_witness.map(|w| w.to_string()).unwrap_or_default();
                return Err(Error::NotLeaderFollower(why));
            }
        };
        if desired.agent_count() != n || gains.len() != n || initial.len() != n {
            return Err(Error::invalid(format!(
                "agent count mismatch: graph {n}, desired {}, gains {}, initial {}",
                desired.agent_count(),
                gains.len(),
                initial.len()
            )));
        }
        for i in graph.agents().filter(|&i| i != leader) {
            require_admissible(graph.neighbor_count(i), gains[i.index()])
                .map_err(|e| Error::InadmissibleGains(format!("{} (agent {i})", strip_prefix(&e))))?;
        }
        if !(dt > 0.0 && dt.is_finite()) || !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::invalid(format!("need dt > 0 and t_end > 0 (got {dt}, {t_end})")));
        }
        if !(separation_guard > 0.0) {
            return Err(Error::invalid(format!("separation guard must be positive, got {separation_guard}")));
        }
        for &(i, j) in graph.edges() {
            let (a, b) = (&initial[i.index()], &initial[j.index()]);
            let rel = relative_state((i, j), &a.p, &a.v, &b.p, &b.v)?;
            if rel.dist < separation_guard {
                return Err(Error::BearingUndefined { i, j, dist: rel.dist });
            }
        }
        Ok(Scenario { graph, desired, gains, initial, dt, t_end, separation_guard, leader })
    }

    pub fn leader(&self) -> AgentId {
        self.leader
    }

    pub fn agent_count(&self) -> usize {
        self.graph.agent_count()
    }

    pub fn step_count(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Copy with new integration settings (re-validated).
    pub fn with_timing(&self, dt: f64, t_end: f64) -> Result<Self> {
        Scenario::new(
            self.graph.clone(),
            self.desired.clone(),
            self.gains.clone(),
            self.initial.clone(),
            dt,
            t_end,
            self.separation_guard,
        )
    }

    /// Initial state equal to the desired state at `t = 0`.
    pub fn at_equilibrium(&self) -> Result<Self> {
        let initial = (0..self.agent_count())
            .map(|a| {
                let d = self.desired.state(a, 0.0);
                AgentState::new(d.p, d.v)
            })
            .collect();
        Scenario::new(
            self.graph.clone(),
            self.desired.clone(),
            self.gains.clone(),
            initial,
            self.dt,
            self.t_end,
            self.separation_guard,
        )
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::InadmissibleGains(msg) => msg.clone(),
        other => other.to_string(),
    }
}

/// Relative position and velocity errors `(p̃_ij, ṽ_ij)`.
pub fn edge_error(states: &[AgentState], desired: &[DesiredState], i: AgentId, j: AgentId) -> (Vec3, Vec3) {
    let (si, sj) = (&states[i.index()], &states[j.index()]);
    let (di, dj) = (&desired[i.index()], &desired[j.index()]);
    ((sj.p - si.p) - (dj.p - di.p), (sj.v - si.v) - (dj.v - di.v))
}

fn stacked(p: &Vec3, v: &Vec3) -> nalgebra::SVector<f64, 6> {
    nalgebra::SVector::<f64, 6>::new(p.x, p.y, p.z, v.x, v.y, v.z)
}

/// `x̃ᵀ P x̃` for the stacked error.
pub fn lyapunov_value(p_mat: &Mat6, p_err: &Vec3, v_err: &Vec3) -> f64 {
    let x = stacked(p_err, v_err);
    x.dot(&(p_mat * x))
}

/// Control inputs of every agent at time `t` for the given states.
pub fn controls(scenario: &Scenario, t: f64, states: &[AgentState], desired: &[DesiredState]) -> Result<Vec<Vec3>> {
    let g = &scenario.graph;
    let mut out = Vec::with_capacity(states.len());
    let mut terms = Vec::new();
    for i in g.agents() {
        terms.clear();
        for &j in g.neighbors(i) {
            let (a, b) = (&states[i.index()], &states[j.index()]);
            let measured = relative_state((i, j), &a.p, &a.v, &b.p, &b.v)
                .map_err(|_| Error::BearingUndefinedAt { i, j, t })?;
            terms.push(NeighborTerm {
                measured,
                desired_p: desired[j.index()].p - desired[i.index()].p,
                desired_v: desired[j.index()].v - desired[i.index()].v,
            });
        }
        out.push(control_input(&terms, scenario.gains[i.index()], &desired[i.index()].u));
    }
    Ok(out)
}

pub(crate) fn unpack(x: &[f64]) -> Vec<AgentState> {
    x.chunks_exact(6)
        .map(|c| AgentState::new(Vec3::new(c[0], c[1], c[2]), Vec3::new(c[3], c[4], c[5])))
        .collect()
}

pub(crate) fn pack(states: &[AgentState]) -> Vec<f64> {
    states.iter().flat_map(|s| [s.p.x, s.p.y, s.p.z, s.v.x, s.v.y, s.v.z]).collect()
}

/// Derivative of the packed closed-loop state `[p_1, v_1, p_2, v_2, ...]`.
pub(crate) fn closed_loop_rhs(scenario: &Scenario, t: f64, x: &[f64], dx: &mut [f64]) -> Result<()> {
    let states = unpack(x);
    let desired = scenario.desired.states(t);
    let u = controls(scenario, t, &states, &desired)?;
    for (k, (s, ui)) in states.iter().zip(&u).enumerate() {
        let o = 6 * k;
        dx[o..o + 3].copy_from_slice(s.v.as_slice());
        dx[o + 3..o + 6].copy_from_slice(ui.as_slice());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationViolation {
    pub t: f64,
    pub i: AgentId,
    pub j: AgentId,
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSeries {
    pub i: AgentId,
    pub j: AgentId,
    pub err_p: Vec<f64>,
    pub err_v: Vec<f64>,
    pub err_x: Vec<f64>,
    pub lyapunov: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub times: Vec<f64>,
    pub states: Vec<Vec<AgentState>>,
    pub controls: Vec<Vec<Vec3>>,
    /// One entry per graph edge, sorted by `(i, j)`.
    pub edges: Vec<EdgeSeries>,
    pub violation: Option<SeparationViolation>,
}

impl TrajectoryLog {
    pub fn edge(&self, i: AgentId, j: AgentId) -> Option<&EdgeSeries> {
        self.edges.iter().find(|e| e.i == i && e.j == j)
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub fn simulate(scenario: &Scenario) -> Result<TrajectoryLog> {
    let n = scenario.agent_count();
    let dt = scenario.dt;
    let steps = scenario.step_count();
    let edges = scenario.graph.sorted_edges();
    let p_mats: Vec<Mat6> = edges
        .iter()
        .map(|&(i, _)| lyapunov_matrix(scenario.gains[i.index()], scenario.graph.neighbor_count(i)))
        .collect();

    let mut log = TrajectoryLog {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        controls: Vec::with_capacity(steps + 1),
        edges: edges
            .iter()
            .map(|&(i, j)| EdgeSeries {
                i,
                j,
                err_p: Vec::with_capacity(steps + 1),
                err_v: Vec::with_capacity(steps + 1),
                err_x: Vec::with_capacity(steps + 1),
                lyapunov: Vec::with_capacity(steps + 1),
            })
            .collect(),
        violation: None,
    };

    let mut x = pack(&scenario.initial);
    let mut rk = Rk4::new(6 * n);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let states = unpack(&x);
        if let Some((agent, _)) = states.iter().enumerate().find(|(_, s)| !(s.p.iter().chain(s.v.iter()).all(|c| c.is_finite()))) {
            return Err(Error::NonFinite { agent: AgentId::from_index(agent), t });
        }
        if let Some(v) = separation_violation(scenario, t, &states) {
            log.violation = Some(v);
            break;
        }
        let desired = scenario.desired.states(t);
        let u = match controls(scenario, t, &states, &desired) {
            Ok(u) => u,
            Err(Error::BearingUndefinedAt { i, j, t }) => {
                let dist = (states[j.index()].p - states[i.index()].p).norm();
                log.violation = Some(SeparationViolation { t, i, j, dist });
                break;
            }
            Err(e) => return Err(e),
        };
        log.times.push(t);
        for ((series, &(i, j)), p_mat) in log.edges.iter_mut().zip(&edges).zip(&p_mats) {
            let (pe, ve) = edge_error(&states, &desired, i, j);
            series.err_p.push(pe.norm());
            series.err_v.push(ve.norm());
            series.err_x.push((pe.norm_squared() + ve.norm_squared()).sqrt());
            series.lyapunov.push(lyapunov_value(p_mat, &pe, &ve));
        }
        log.states.push(states);
        log.controls.push(u);
        if k == steps {
            break;
        }
        match rk.step(t, dt, &mut x, |tt, xx, dx| closed_loop_rhs(scenario, tt, xx, dx)) {
            Ok(()) => {}
            Err(Error::BearingUndefinedAt { i, j, t }) => {
                let s = unpack(&x);
                let dist = (s[j.index()].p - s[i.index()].p).norm();
                log.violation = Some(SeparationViolation { t, i, j, dist });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(log)
}

fn separation_violation(scenario: &Scenario, t: f64, states: &[AgentState]) -> Option<SeparationViolation> {
    scenario.graph.sorted_edges().into_iter().find_map(|(i, j)| {
        let dist = (states[j.index()].p - states[i.index()].p).norm();
        (dist < scenario.separation_guard).then_some(SeparationViolation { t, i, j, dist })
    })
}

fn check_edge(graph: &Digraph, edge: (AgentId, AgentId)) -> Result<()> {
    if graph.has_edge(edge.0, edge.1) {
        Ok(())
    } else {
        Err(Error::UnknownEdge(edge.0, edge.1))
    }
}

/// `(t, ‖x̃_ij(t)‖)` recomputed from the logged states.
pub fn error_series(log: &TrajectoryLog, desired: &DesiredTrajectory, graph: &Digraph, edge: (AgentId, AgentId)) -> Result<Vec<(f64, f64)>> {
    check_edge(graph, edge)?;
    let (i, j) = edge;
    Ok(log
        .times
        .iter()
        .zip(&log.states)
        .map(|(&t, states)| {
            let d = [desired.state(i.index(), t), desired.state(j.index(), t)];
            let (si, sj) = (&states[i.index()], &states[j.index()]);
            let pe = (sj.p - si.p) - (d[1].p - d[0].p);
            let ve = (sj.v - si.v) - (d[1].v - d[0].v);
            (t, (pe.norm_squared() + ve.norm_squared()).sqrt())
        })
        .collect())
}

/// `(t, x̃_ijᵀ P_i x̃_ij)` recomputed from the logged states.
pub fn lyapunov_series(
    log: &TrajectoryLog,
    desired: &DesiredTrajectory,
    graph: &Digraph,
    gains: &[Gains],
    edge: (AgentId, AgentId),
) -> Result<Vec<(f64, f64)>> {
    check_edge(graph, edge)?;
    let (i, j) = edge;
    let p_mat = lyapunov_matrix(gains[i.index()], graph.neighbor_count(i));
    Ok(log
        .times
        .iter()
        .zip(&log.states)
        .map(|(&t, states)| {
            let d = [desired.state(i.index(), t), desired.state(j.index(), t)];
            let (si, sj) = (&states[i.index()], &states[j.index()]);
            let pe = (sj.p - si.p) - (d[1].p - d[0].p);
            let ve = (sj.v - si.v) - (d[1].v - d[0].v);
            (t, lyapunov_value(&p_mat, &pe, &ve))
        })
        .collect())
}
