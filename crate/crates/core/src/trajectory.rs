//! Desired formation trajectories `p*_i(t)` with analytic first and second
//! derivatives.

use crate::error::{Error, Result};
use crate::geometry::{skew, Mat3, UnitVec3, Vec3};

/// Desired position, velocity and acceleration of one agent at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredState {
    pub p: Vec3,
    pub v: Vec3,
    pub u: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesiredTrajectory {
    /// `p*_i(t) = R(t)^T p*_i(0)` where `R(t)` rotates about `axis` by `t / period`.
    RotatingRigid { initial: Vec<Vec3>, axis: UnitVec3, period: f64 },
    Static { positions: Vec<Vec3> },
    Sampled(SampledTrajectory),
    /// Fixed similarity transform `x -> scale * rotation * x + translation`
    /// applied to another trajectory.
    Similarity { inner: Box<DesiredTrajectory>, rotation: Mat3, scale: f64, translation: Vec3 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    RotatingRigid,
    Static,
    Sampled,
    Similarity,
}

pub fn rotating_rigid_trajectory(initial_positions: Vec<Vec3>, axis: UnitVec3, period: f64) -> Result<DesiredTrajectory> {
    if !(period > 0.0) {
        return Err(Error::invalid(format!("rotation period must be positive, got {period}")));
    }
    Ok(DesiredTrajectory::RotatingRigid { initial: initial_positions, axis, period })
}

impl DesiredTrajectory {
    pub fn kind(&self) -> TrajectoryKind {
        match self {
            DesiredTrajectory::RotatingRigid { .. } => TrajectoryKind::RotatingRigid,
            DesiredTrajectory::Static { .. } => TrajectoryKind::Static,
            DesiredTrajectory::Sampled(_) => TrajectoryKind::Sampled,
            DesiredTrajectory::Similarity { .. } => TrajectoryKind::Similarity,
        }
    }

    pub fn agent_count(&self) -> usize {
        match self {
            DesiredTrajectory::RotatingRigid { initial, .. } => initial.len(),
            DesiredTrajectory::Static { positions } => positions.len(),
            DesiredTrajectory::Sampled(s) => s.agents.len(),
            DesiredTrajectory::Similarity { inner, .. } => inner.agent_count(),
        }
    }

    /// Desired state of the agent with 0-based index `agent` at time `t`.
    pub fn state(&self, agent: usize, t: f64) -> DesiredState {
        match self {
            DesiredTrajectory::RotatingRigid { initial, axis, period } => {
                let w = 1.0 / period;
                let theta = t * w;
                let (s, c) = theta.sin_cos();
                let k = skew(axis);
                let k2 = k * k;
                // R(t)^T = I - sin(θ) K + (1 - cos(θ)) K²
                let rt = Mat3::identity() - k * s + k2 * (1.0 - c);
                let drt = (-k * c + k2 * s) * w;
                let ddrt = (k * s + k2 * c) * (w * w);
                let p0 = initial[agent];
                DesiredState { p: rt * p0, v: drt * p0, u: ddrt * p0 }
            }
            DesiredTrajectory::Static { positions } => {
                DesiredState { p: positions[agent], v: Vec3::zeros(), u: Vec3::zeros() }
            }
            DesiredTrajectory::Sampled(s) => s.state(agent, t),
            DesiredTrajectory::Similarity { inner, rotation, scale, translation } => {
                let d = inner.state(agent, t);
                let m = rotation * *scale;
                DesiredState { p: m * d.p + translation, v: m * d.v, u: m * d.u }
            }
        }
    }

    pub fn states(&self, t: f64) -> Vec<DesiredState> {
        (0..self.agent_count()).map(|a| self.state(a, t)).collect()
    }

    pub fn with_similarity(self, rotation: Mat3, scale: f64, translation: Vec3) -> Result<DesiredTrajectory> {
        let orthogonal = (rotation.transpose() * rotation - Mat3::identity()).abs().max() < 1e-9;
        if !orthogonal || rotation.determinant() < 0.0 {
            return Err(Error::invalid("similarity rotation must be a proper rotation matrix"));
        }
        if !(scale > 0.0) {
            return Err(Error::invalid(format!("similarity scale must be positive, got {scale}")));
        }
        Ok(DesiredTrajectory::Similarity { inner: Box::new(self), rotation, scale, translation })
    }
}

/// Per-agent, per-coordinate natural cubic splines through sampled desired
/// positions. Velocity and acceleration are the spline's derivatives, so they
/// are consistent with the positions by construction. Outside the sample span
/// the end samples are held with zero velocity and acceleration.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory {
    times: Vec<f64>,
    agents: Vec<[CubicSpline; 3]>,
}

impl SampledTrajectory {
    /// `positions[a][k]` is the desired position of agent `a` at `times[k]`.
    pub fn new(times: Vec<f64>, positions: Vec<Vec<Vec3>>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::invalid("sampled trajectory needs at least 2 samples"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("sample times must be strictly increasing"));
        }
        let mut agents = Vec::with_capacity(positions.len());
        for (a, series) in positions.iter().enumerate() {
            if series.len() != times.len() {
                return Err(Error::invalid(format!(
                    "agent {} has {} samples, expected {}",
                    a + 1,
                    series.len(),
                    times.len()
                )));
            }
            let coord = |c: usize| CubicSpline::natural(&times, &series.iter().map(|p| p[c]).collect::<Vec<_>>());
            agents.push([coord(0), coord(1), coord(2)]);
        }
        Ok(SampledTrajectory { times, agents })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn state(&self, agent: usize, t: f64) -> DesiredState {
        let [x, y, z] = &self.agents[agent];
        let (px, vx, ax) = x.eval(&self.times, t);
        let (py, vy, ay) = y.eval(&self.times, t);
        let (pz, vz, az) = z.eval(&self.times, t);
        DesiredState { p: Vec3::new(px, py, pz), v: Vec3::new(vx, vy, vz), u: Vec3::new(ax, ay, az) }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct CubicSpline {
    values: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    fn natural(t: &[f64], y: &[f64]) -> Self {
        let n = t.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second derivatives.
            let mut diag = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            let mut upper = vec![0.0; n];
            for k in 1..n - 1 {
                let h0 = t[k] - t[k - 1];
                let h1 = t[k + 1] - t[k];
                let lower = h0 / 6.0;
                diag[k] = (h0 + h1) / 3.0;
                upper[k] = h1 / 6.0;
                rhs[k] = (y[k + 1] - y[k]) / h1 - (y[k] - y[k - 1]) / h0;
                if k > 1 {
                    let w = lower / diag[k - 1];
                    diag[k] -= w * upper[k - 1];
                    rhs[k] -= w * rhs[k - 1];
                }
            }
            for k in (1..n - 1).rev() {
                let next = if k + 1 < n - 1 { second[k + 1] } else { 0.0 };
                second[k] = (rhs[k] - upper[k] * next) / diag[k];
            }
        }
        CubicSpline { values: y.to_vec(), second }
    }

    fn eval(&self, t: &[f64], at: f64) -> (f64, f64, f64) {
        let n = t.len();
        if at <= t[0] {
            return (self.values[0], 0.0, 0.0);
        }
        if at >= t[n - 1] {
            return (self.values[n - 1], 0.0, 0.0);
        }
        let k = t.partition_point(|&s| s <= at) - 1;
        let h = t[k + 1] - t[k];
        let a = (t[k + 1] - at) / h;
        let b = (at - t[k]) / h;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.second[k], self.second[k + 1]);
        let p = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let v = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let acc = a * m0 + b * m1;
        (p, v, acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    pub(crate) fn pyramid() -> DesiredTrajectory {
        let s3 = 3f64.sqrt();
        rotating_rigid_trajectory(
            vec![Vec3::zeros(), Vec3::new(0.0, 1.0, 0.0), Vec3::new(s3 / 2.0, 0.5, 0.0), Vec3::new(0.5, s3 / 2.0, 1.0)],
            UnitVec3::z(),
            2.5,
        )
        .unwrap()
    }

    #[test]
    fn rotation_matches_explicit_matrix() {
        let d = pyramid();
        for &t in &[0.0, 0.7, 3.0, 11.0] {
            let (s, c) = (t / 2.5f64).sin_cos();
            let rt = Mat3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0);
            for a in 0..4 {
                let want = rt * d.state(a, 0.0).p;
                assert!((d.state(a, t).p - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn initial_state_and_norms() {
        let d = pyramid();
        assert_eq!(d.state(1, 0.0).p, Vec3::new(0.0, 1.0, 0.0));
        // d/dt R^T p at t=0 for the z axis is w (p_y, -p_x, 0)
        assert!((d.state(1, 0.0).v - Vec3::new(0.4, 0.0, 0.0)).norm() < 1e-15);
        for a in 0..4 {
            let n0 = d.state(a, 0.0).p.norm();
            for k in 0..50 {
                assert!((d.state(a, k as f64 * 0.37).p.norm() - n0).abs() < 1e-13);
            }
        }
        assert_eq!(d.state(0, 5.0).p, Vec3::zeros());
        assert!(rotating_rigid_trajectory(vec![], UnitVec3::z(), 0.0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let axis = UnitVec3::normalize(Vec3::new(0.3, -0.5, 0.8)).unwrap();
        let d = rotating_rigid_trajectory(vec![Vec3::new(1.0, 2.0, -0.5)], axis, 1.7).unwrap();
        let h = 1e-5;
        for &t in &[0.0, 1.3, 4.2] {
            let s = d.state(0, t);
            let fd_v = (d.state(0, t + h).p - d.state(0, t - h).p) / (2.0 * h);
            let fd_u = (d.state(0, t + h).v - d.state(0, t - h).v) / (2.0 * h);
            assert!((s.v - fd_v).norm() < 1e-8);
            assert!((s.u - fd_u).norm() < 1e-8);
        }
    }

    #[test]
    fn sampled_spline_tracks_smooth_signal() {
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let pos: Vec<Vec3> = times.iter().map(|&t| Vec3::new(t.sin(), t.cos(), 0.5 * t)).collect();
        let s = SampledTrajectory::new(times, vec![pos]).unwrap();
        let d = DesiredTrajectory::Sampled(s);
        for &t in &[1.0, 2.345, 7.5] {
            let st = d.state(0, t);
            assert!((st.p - Vec3::new(t.sin(), t.cos(), 0.5 * t)).norm() < 1e-5);
            assert!((st.v - Vec3::new(t.cos(), -t.sin(), 0.5)).norm() < 1e-3);
            // derivative consistency with the spline's own positions
            let h = 1e-6;
            let fd = (d.state(0, t + h).p - d.state(0, t - h).p) / (2.0 * h);
            assert!((fd - st.v).norm() < 1e-6);
        }
    }

    #[test]
    fn similarity_preserves_bearings_up_to_rotation() {
        let rot = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let d = pyramid().with_similarity(rot, 2.0, Vec3::new(1.0, -3.0, 2.0)).unwrap();
        let base = pyramid();
        let t = 2.0 * PI;
        let g = (d.state(2, t).p - d.state(1, t).p).normalize();
        let g0 = (base.state(2, t).p - base.state(1, t).p).normalize();
        assert!((g - rot * g0).norm() < 1e-14);
        assert!(pyramid().with_similarity(Mat3::identity() * 2.0, 1.0, Vec3::zeros()).is_err());
    }
}
