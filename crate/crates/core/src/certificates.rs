//! Closed-form constants that certify exponential convergence of the
//! formation errors.
//!
//! The chain for one follower is:
//!
//! 1. `λ_M = (c3 c1 - c2²)/(c3 + c1)` bounds the 2x2 block pencil of `Q_i`
//!    from below, and `γ = λ_M · min α²` turns `Q_i` into a multiple of the
//!    desired-bearing matrix `Σ_i` ([`gamma_bound`]).
//! 2. `c = (l_A / l_Q) m` makes `c Q - AᵀA ⪰ 0`, i.e. the Lyapunov decrease
//!    dominates the vector field ([`cascade_constant`]).
//! 3. With the PE window `T` and level `μ` of `Σ_i`, `σ` and the envelope
//!    `sqrt(λ2 / (λ1 (1 - σ))) ‖x(0)‖ exp(-σ t / 2T)` follow ([`es_rate`]).
//! 4. Along a cascade, per-follower rates combine as
//!    `c_i = ½ min(c_{i-1}, b_i)` ([`cascade_rates`]).

use crate::controller::{check_gains, lyapunov_matrix, BlockConstants, Gains};
use crate::error::{Error, Result};
use crate::graph::{topological_numbering, AgentId, Digraph};
use crate::linalg::{max_eigen6, min_eigen6, sym_eigen2, Mat6};
use crate::pe::{formation_is_bearing_pe, uniform_grid};
use crate::sim::{edge_error, Scenario};
use nalgebra::Matrix2;

/// `(c3 c1 - c2²) / (c3 + c1)`; requires `c1 c3 > c2²`.
pub fn lambda_m(c1: f64, c2: f64, c3: f64) -> Result<f64> {
    if !(c1 > 0.0 && c2 > 0.0 && c3 > 0.0) {
        return Err(Error::invalid(format!("constants must be positive (c1 = {c1}, c2 = {c2}, c3 = {c3})")));
    }
    let det = c3 * c1 - c2 * c2;
    if !(det > 0.0) {
        return Err(Error::Hypothesis(format!("c1 c3 = {} must exceed c2² = {}", c1 * c3, c2 * c2)));
    }
    Ok(det / (c3 + c1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaCertificate {
    pub lambda_m: f64,
    pub alpha_min_sq: f64,
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub min_pstar: f64,
    pub max_pstar: f64,
    pub x0_norm: f64,
    pub lambda_min_p: f64,
    pub lambda_max_p: f64,
}

/// `γ = λ_M · α²_min` with
/// `α²_min = min‖p*‖² / (sqrt(λ_max(P)/λ_min(P)) ‖x̃(0)‖ + max‖p*‖)²`.
pub fn gamma_bound(gains: Gains, m: usize, min_pstar: f64, max_pstar: f64, x0_norm: f64, p: &Mat6) -> Result<GammaCertificate> {
    let verdict = check_gains(m, gains)?;
    if !verdict.admissible {
        return Err(Error::InadmissibleGains(format!("{} ≥ {}", gains.kp, verdict.kp_bound)));
    }
    if !(min_pstar > 0.0) || max_pstar < min_pstar {
        return Err(Error::invalid(format!(
            "need 0 < min‖p*‖ ≤ max‖p*‖ (got {min_pstar}, {max_pstar})"
        )));
    }
    if !(x0_norm >= 0.0) {
        return Err(Error::invalid(format!("initial error norm must be nonnegative, got {x0_norm}")));
    }
    let c = BlockConstants::from_gains(gains, m);
    let lm = lambda_m(c.c1, c.c2, c.c3)?;
    let lambda_min_p = min_eigen6(p);
    let lambda_max_p = max_eigen6(p);
    if !(lambda_min_p > 0.0) {
        return Err(Error::invalid("P must be positive definite"));
    }
    let spread = (lambda_max_p / lambda_min_p).sqrt() * x0_norm + max_pstar;
    let alpha_min_sq = (min_pstar / spread).powi(2);
    Ok(GammaCertificate {
        lambda_m: lm,
        alpha_min_sq,
        gamma: lm * alpha_min_sq,
        c1: c.c1,
        c2: c.c2,
        c3: c.c3,
        min_pstar,
        max_pstar,
        x0_norm,
        lambda_min_p,
        lambda_max_p,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeCertificate {
    pub c: f64,
    pub l_q: f64,
    pub l_a: f64,
    pub m: usize,
}

/// `c = (l_A / l_Q) m` with `l_Q = λ_min([[c3, c2], [c2, c1]])` and
/// `l_A = λ_max([[c4², c5 c4], [c5 c4, c5² + 1]])`.
///
/// The bound needs `l_Q > 0`, i.e. `c1 c3 > c2²`; that is the condition
/// checked here.
pub fn cascade_constant(c1: f64, c2: f64, c3: f64, c4: f64, c5: f64, m: usize) -> Result<CascadeCertificate> {
    if [c1, c2, c3, c4, c5].iter().any(|c| !(*c > 0.0)) || m == 0 {
        return Err(Error::invalid("constants must be positive and m ≥ 1"));
    }
    if !(c1 * c3 > c2 * c2) {
        return Err(Error::Hypothesis(format!("c1 c3 = {} must exceed c2² = {}", c1 * c3, c2 * c2)));
    }
    let l_q = sym_eigen2(&Matrix2::new(c3, c2, c2, c1))[0];
    let l_a = sym_eigen2(&Matrix2::new(c4 * c4, c5 * c4, c5 * c4, c5 * c5 + 1.0))[1];
    Ok(CascadeCertificate { c: l_a / l_q * m as f64, l_q, l_a, m })
}

pub fn cascade_constant_for(gains: Gains, m: usize) -> Result<CascadeCertificate> {
    let c = BlockConstants::from_gains(gains, m);
    cascade_constant(c.c1, c.c2, c.c3, c.c4, c.c5, m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateCertificate {
    pub window_t: f64,
    pub mu: f64,
    pub gamma: f64,
    pub c: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_sigma: f64,
    pub rho: f64,
    pub sigma: f64,
    /// `σ / 2T`, decay rate of the state norm.
    pub rate: f64,
    /// `sqrt(λ2 / (λ1 (1 - σ)))`
    pub envelope_coeff: f64,
}

impl RateCertificate {
    /// Upper bound on `‖x(t)‖` given `‖x(0)‖`.
    pub fn envelope(&self, x0_norm: f64, t: f64) -> f64 {
        self.envelope_coeff * x0_norm * (-self.rate * t).exp()
    }
}

pub fn es_rate(window_t: f64, mu: f64, gamma: f64, c: f64, lambda1: f64, lambda2: f64, lambda_sigma: f64) -> Result<RateCertificate> {
    let inputs = [window_t, mu, gamma, c, lambda1, lambda2, lambda_sigma];
    if inputs.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid(format!("rate inputs must be positive and finite: {inputs:?}")));
    }
    if lambda1 > lambda2 {
        return Err(Error::invalid(format!("λ1 = {lambda1} exceeds λ2 = {lambda2}")));
    }
    let rho = lambda2 / (mu * window_t * gamma);
    let sigma = 1.0 / (1.0 + rho) / (1.0 + rho * c * window_t * window_t * gamma * lambda_sigma);
    Ok(RateCertificate {
        window_t,
        mu,
        gamma,
        c,
        lambda1,
        lambda2,
        lambda_sigma,
        rho,
        sigma,
        rate: sigma / (2.0 * window_t),
        envelope_coeff: (lambda2 / (lambda1 * (1.0 - sigma))).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeRates {
    /// Followers in cascade order (the topological numbering).
    pub followers: Vec<AgentId>,
    pub b: Vec<f64>,
    pub c_rates: Vec<f64>,
}

/// `c_2 = b_2`, `c_i = ½ min(c_{i-1}, b_i)` along the follower order given by
/// the topological numbering of `graph`. `b` is indexed like the followers
/// in that order.
pub fn cascade_rates(b: &[f64], graph: &Digraph) -> Result<CascadeRates> {
    let ordering = topological_numbering(graph)?;
    let followers: Vec<AgentId> = ordering.originals()[1..].to_vec();
    if b.len() != followers.len() {
        return Err(Error::invalid(format!("expected {} follower rates, got {}", followers.len(), b.len())));
    }
    if let Some(bad) = b.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::invalid(format!("rates must be positive, got {bad}")));
    }
    let mut c_rates: Vec<f64> = Vec::with_capacity(b.len());
    for (k, &bi) in b.iter().enumerate() {
        let ci = if k == 0 { bi } else { 0.5 * c_rates[k - 1].min(bi) };
        c_rates.push(ci);
    }
    Ok(CascadeRates { followers, b: b.to_vec(), c_rates })
}

/// Full per-follower chain from gains and trajectory statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerCertificate {
    pub agent: AgentId,
    pub m: usize,
    pub gamma: GammaCertificate,
    pub cascade: CascadeCertificate,
    pub rate: RateCertificate,
}

/// Inputs gathered from a scenario for one follower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerInputs {
    pub gains: Gains,
    pub m: usize,
    pub min_pstar: f64,
    pub max_pstar: f64,
    pub x0_norm: f64,
    pub window_t: f64,
    pub mu: f64,
    pub lambda_sigma: f64,
}

pub fn follower_certificate(agent: AgentId, inputs: &FollowerInputs) -> Result<FollowerCertificate> {
    let p = lyapunov_matrix(inputs.gains, inputs.m);
    let gamma = gamma_bound(inputs.gains, inputs.m, inputs.min_pstar, inputs.max_pstar, inputs.x0_norm, &p)?;
    let cascade = cascade_constant_for(inputs.gains, inputs.m)?;
    let rate = es_rate(
        inputs.window_t,
        inputs.mu,
        gamma.gamma,
        cascade.c,
        gamma.lambda_min_p,
        gamma.lambda_max_p,
        inputs.lambda_sigma,
    )?;
    Ok(FollowerCertificate { agent, m: inputs.m, gamma, cascade, rate })
}

/// Certificates for every follower of a scenario plus the cascade rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioCertificates {
    pub followers: Vec<FollowerCertificate>,
    pub inputs: Vec<FollowerInputs>,
    pub cascade: CascadeRates,
}

/// Gathers per-follower inputs from the desired trajectory sampled on
/// `[0, horizon]` with step `dt`, and the scenario's initial errors.
/// `mu` for each follower is its measured PE margin over windows of length
/// `window_t`.
pub fn scenario_certificates(scenario: &Scenario, window_t: f64, horizon: f64, dt: f64) -> Result<ScenarioCertificates> {
    let graph = &scenario.graph;
    let pe = formation_is_bearing_pe(graph, &scenario.desired, window_t, f64::MIN_POSITIVE, horizon, dt)?;
    let grid = uniform_grid(horizon, dt)?;
    let samples: Vec<_> = grid.iter().map(|&t| scenario.desired.states(t)).collect();
    let desired0 = scenario.desired.states(0.0);
    let order = topological_numbering(graph)?;

    let mut followers = Vec::new();
    let mut inputs = Vec::new();
    for &i in &order.originals()[1..] {
        let agent_pe = pe
            .per_agent
            .iter()
            .find(|a| a.agent == i)
            .ok_or_else(|| Error::invalid(format!("no PE data for agent {i}")))?;
        let (mut min_pstar, mut max_pstar) = (f64::INFINITY, 0.0f64);
        for d in &samples {
            for &j in graph.neighbors(i) {
                let r = (d[j.index()].p - d[i.index()].p).norm();
                min_pstar = min_pstar.min(r);
                max_pstar = max_pstar.max(r);
            }
        }
        let x0_norm = graph
            .neighbors(i)
            .iter()
            .map(|&j| {
                let (pe, ve) = edge_error(&scenario.initial, &desired0, i, j);
                pe.norm_squared() + ve.norm_squared()
            })
            .sum::<f64>()
            .sqrt();
        let inp = FollowerInputs {
            gains: scenario.gains[i.index()],
            m: graph.neighbor_count(i),
            min_pstar,
            max_pstar,
            x0_norm,
            window_t,
            mu: agent_pe.mu_star,
            lambda_sigma: agent_pe.lambda_max.max(1.0),
        };
        followers.push(follower_certificate(i, &inp)?);
        inputs.push(inp);
    }
    let b: Vec<f64> = followers.iter().map(|f| f.rate.rate).collect();
    let cascade = cascade_rates(&b, graph)?;
    Ok(ScenarioCertificates { followers, inputs, cascade })
}
