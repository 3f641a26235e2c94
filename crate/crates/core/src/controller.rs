//! Bearing and relative-velocity formation control law for double
//! integrators, its gain conditions, and the matrices used to analyze the
//! closed loop.

use crate::error::{Error, Result};
use crate::geometry::{projector, Mat3, RelState, UnitVec3, Vec3};
use crate::linalg::{block6, Mat6};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub kp: f64,
    pub kd: f64,
}

impl Gains {
    pub fn new(kp: f64, kd: f64) -> Self {
        Gains { kp, kd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainVerdict {
    pub admissible: bool,
    /// `kd - 1/m`
    pub kd_slack: f64,
    /// `4/m - 4/(kd² m³) - kp`
    pub kp_slack: f64,
    /// The upper bound on `kp`, `4/m - 4/(kd² m³)`.
    pub kp_bound: f64,
}

/// Gain conditions for an agent with `m` neighbors:
/// `kd > 1/m` and `kp < 4/m - 4/(kd² m³)`.
pub fn check_gains(m: usize, gains: Gains) -> Result<GainVerdict> {
    if m == 0 {
        return Err(Error::invalid("gain conditions need at least one neighbor"));
    }
    if !(gains.kp > 0.0 && gains.kd > 0.0) {
        return Err(Error::NonpositiveGain { kp: gains.kp, kd: gains.kd });
    }
    let m = m as f64;
    let kp_bound = 4.0 / m - 4.0 / (gains.kd * gains.kd * m * m * m);
    let kd_slack = gains.kd - 1.0 / m;
    let kp_slack = kp_bound - gains.kp;
    Ok(GainVerdict { admissible: kd_slack > 0.0 && kp_slack > 0.0, kd_slack, kp_slack, kp_bound })
}

/// Like [`check_gains`] but turns an inadmissible verdict into an error whose
/// message names the violated bound.
pub fn require_admissible(m: usize, gains: Gains) -> Result<GainVerdict> {
    let v = check_gains(m, gains)?;
    if v.kd_slack <= 0.0 {
        return Err(Error::InadmissibleGains(format!("kd = {} ≤ 1/m = {}", gains.kd, 1.0 / m as f64)));
    }
    if v.kp_slack <= 0.0 {
        return Err(Error::InadmissibleGains(format!("{} ≥ {}", gains.kp, v.kp_bound)));
    }
    Ok(v)
}

/// What agent `i` knows about one neighbor `j`: the measured relative state
/// and the desired relative position and velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborTerm {
    pub measured: RelState,
    pub desired_p: Vec3,
    pub desired_v: Vec3,
}

/// `u_i = Σ_j [ -kp π_{g_ij} p*_ij + kd (v_ij - v*_ij) ] + u*_i`.
/// With no neighbors (the leader) this is just `u*_i`.
pub fn control_input(neighbors: &[NeighborTerm], gains: Gains, u_star: &Vec3) -> Vec3 {
    let mut u = *u_star;
    for n in neighbors {
        let v_err = n.measured.v - n.desired_v;
        u += -gains.kp * (projector(&n.measured.bearing) * n.desired_p) + gains.kd * v_err;
    }
    u
}

/// Constants of the closed-loop matrices for an agent with `m` neighbors:
/// `c1 = kd - 1/(kd m²)`, `c2 = kp/2`, `c3 = kp/(kd m)`, `c4 = kp`,
/// `c5 = kd m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub m: usize,
}

impl BlockConstants {
    pub fn from_gains(gains: Gains, m: usize) -> Self {
        let mf = m as f64;
        let kdm = gains.kd * mf;
        BlockConstants {
            c1: gains.kd - 1.0 / (gains.kd * mf * mf),
            c2: gains.kp / 2.0,
            c3: gains.kp / kdm,
            c4: gains.kp,
            c5: kdm,
            m,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisMatrices {
    pub a: Mat6,
    pub p: Mat6,
    pub q: Mat6,
    pub sigma: Mat6,
}

/// `P_i = ½ [[I, I/(kd m)], [I/(kd m), I]]`.
pub fn lyapunov_matrix(gains: Gains, m: usize) -> Mat6 {
    let off = Mat3::identity() / (gains.kd * m as f64);
    block6(&Mat3::identity(), &off, &off, &Mat3::identity()) * 0.5
}

/// Builds `A_i(g_i)`, `P_i`, `Q_i(g_i)` and `Σ_i(g*_i)` from the current and
/// desired bearings to the agent's neighbors.
pub fn build_analysis_matrices(current: &[UnitVec3], desired: &[UnitVec3], gains: Gains) -> Result<AnalysisMatrices> {
    let m = current.len();
    if m == 0 || desired.len() != m {
        return Err(Error::invalid(format!(
            "need matching nonempty bearing sets (current {}, desired {})",
            m,
            desired.len()
        )));
    }
    require_admissible(m, gains)?;
    let c = BlockConstants::from_gains(gains, m);
    let eye = Mat3::identity();
    let sum_pi: Mat3 = current.iter().map(projector).sum();
    let sum_pi_star: Mat3 = desired.iter().map(projector).sum();

    let a = block6(&Mat3::zeros(), &(-eye), &(sum_pi * c.c4), &(eye * c.c5));
    let p = lyapunov_matrix(gains, m);
    let q = block6(&(sum_pi * c.c3), &(sum_pi * c.c2), &(sum_pi * c.c2), &(eye * (m as f64 * c.c1)));
    let sigma = block6(&sum_pi_star, &Mat3::zeros(), &Mat3::zeros(), &eye);
    Ok(AnalysisMatrices { a, p, q, sigma })
}
