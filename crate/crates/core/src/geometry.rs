//! Bearings, projectors and relative states in R^3.

use std::ops::Deref;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::graph::AgentId;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Minimum distance (m) at which a bearing is considered defined.
pub const SEPARATION_EPS: f64 = 1e-6;

const UNIT_TOL: f64 = 1e-12;

/// A direction on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    /// Wraps `v` after checking that it already has unit norm.
    pub fn new(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if (n - 1.0).abs() > UNIT_TOL || !n.is_finite() {
            return Err(Error::invalid(format!("vector {v:?} has norm {n}, expected 1")));
        }
        Ok(UnitVec3(v))
    }

    /// Normalizes `v`; `None` when `v` is shorter than `SEPARATION_EPS`.
    pub fn normalize(v: Vec3) -> Option<Self> {
        let n = v.norm();
        (n > SEPARATION_EPS && n.is_finite()).then(|| UnitVec3(v / n))
    }

    pub fn x() -> Self {
        UnitVec3(Vec3::x())
    }

    pub fn y() -> Self {
        UnitVec3(Vec3::y())
    }

    pub fn z() -> Self {
        UnitVec3(Vec3::z())
    }

    pub fn into_inner(self) -> Vec3 {
        self.0
    }
}

impl Deref for UnitVec3 {
    type Target = Vec3;

    fn deref(&self) -> &Vec3 {
        &self.0
    }
}

/// Orthogonal projector onto the plane normal to `y`: `I - y y^T`.
pub fn projector(y: &UnitVec3) -> Mat3 {
    Mat3::identity() - y.0 * y.0.transpose()
}

/// Cross-product matrix: `skew(v) * x == v.cross(x)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Relative quantities of agent `j` as seen from agent `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelState {
    /// `p_j - p_i`
    pub p: Vec3,
    /// `v_j - v_i`
    pub v: Vec3,
    pub bearing: UnitVec3,
    pub dist: f64,
}

pub fn relative_state(pair: (AgentId, AgentId), p_i: &Vec3, v_i: &Vec3, p_j: &Vec3, v_j: &Vec3) -> Result<RelState> {
    let p = p_j - p_i;
    let dist = p.norm();
    if !(dist > SEPARATION_EPS) {
        return Err(Error::BearingUndefined { i: pair.0, j: pair.1, dist });
    }
    Ok(RelState { p, v: v_j - v_i, bearing: UnitVec3(p / dist), dist })
}

/// Bearing from `from` to `to`, or `None` when the points (nearly) coincide.
pub fn bearing(from: &Vec3, to: &Vec3) -> Option<UnitVec3> {
    UnitVec3::normalize(to - from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigen3;
    use proptest::prelude::*;

    fn id(k: usize) -> AgentId {
        AgentId::new(k).unwrap()
    }

    #[test]
    fn projector_examples() {
        assert_eq!(projector(&UnitVec3::z()), Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 0.0)));
        assert_eq!(projector(&UnitVec3::x()) * Vec3::new(0.0, 3.0, 4.0), Vec3::new(0.0, 3.0, 4.0));
        let y = UnitVec3::normalize(Vec3::new(1.0, 1.0, 0.0)).unwrap();
        let want = Mat3::new(0.5, -0.5, 0.0, -0.5, 0.5, 0.0, 0.0, 0.0, 1.0);
        assert!((projector(&y) - want).abs().max() < 1e-15);
    }

    #[test]
    fn skew_examples() {
        assert_eq!(skew(&Vec3::zeros()), Mat3::zeros());
        assert_eq!(skew(&Vec3::z()) * Vec3::x(), Vec3::y());
        let s = skew(&Vec3::y());
        assert_eq!(-(s * s), Mat3::from_diagonal(&Vec3::new(1.0, 0.0, 1.0)));
        assert_eq!(-(s * s), projector(&UnitVec3::y()));
    }

    #[test]
    fn relative_state_examples() {
        let o = Vec3::zeros();
        let r = relative_state((id(1), id(2)), &o, &o, &Vec3::new(0.0, 2.0, 0.0), &o).unwrap();
        assert_eq!(*r.bearing, Vec3::y());
        assert_eq!(r.dist, 2.0);

        let err = relative_state((id(3), id(4)), &o, &o, &o, &o).unwrap_err();
        assert!(matches!(err, Error::BearingUndefined { i, j, .. } if i == id(3) && j == id(4)));

        let r = relative_state((id(1), id(2)), &Vec3::repeat(1.0), &o, &Vec3::repeat(2.0), &o).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((*r.bearing - Vec3::repeat(s)).norm() < 1e-15);
        assert!((r.dist - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unit_constructor_rejects_non_unit() {
        assert!(UnitVec3::new(Vec3::new(1.0, 1.0, 0.0)).is_err());
        assert!(UnitVec3::new(Vec3::z()).is_ok());
        assert!(UnitVec3::normalize(Vec3::repeat(1e-9)).is_none());
    }

    fn unit() -> impl Strategy<Value = UnitVec3> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter_map("degenerate", |(a, b, c)| UnitVec3::normalize(Vec3::new(a, b, c)).filter(|_| Vec3::new(a, b, c).norm() > 1e-3))
    }

    fn point() -> impl Strategy<Value = Vec3> {
        (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b, c)| Vec3::new(a, b, c))
    }

    proptest! {
        #[test]
        fn projector_is_symmetric_idempotent_psd(y in unit()) {
            let p = projector(&y);
            prop_assert!((p - p.transpose()).abs().max() < 1e-15);
            prop_assert!((p * p - p).abs().max() < 1e-12);
            prop_assert!((p * *y).norm() < 1e-12);
            let e = sym_eigen3(&p);
            prop_assert!(e[0].abs() < 1e-10 && (e[1] - 1.0).abs() < 1e-10 && (e[2] - 1.0).abs() < 1e-10);
        }

        #[test]
        fn skew_is_cross_product(v in point(), x in point(), y in unit()) {
            let s = skew(&v);
            prop_assert!((s * x - v.cross(&x)).norm() < 1e-12);
            prop_assert_eq!(s.transpose(), -s);
            let k = skew(&y);
            prop_assert!((-(k * k) - projector(&y)).abs().max() < 1e-12);
        }

        #[test]
        fn relative_state_is_antisymmetric(pi in point(), pj in point(), vi in point(), vj in point()) {
            prop_assume!((pi - pj).norm() > 1e-3);
            let a = relative_state((id(1), id(2)), &pi, &vi, &pj, &vj).unwrap();
            let b = relative_state((id(2), id(1)), &pj, &vj, &pi, &vi).unwrap();
            prop_assert!((*a.bearing + *b.bearing).norm() < 1e-14);
            prop_assert_eq!(a.p, -b.p);
            prop_assert!((a.bearing.norm() - 1.0).abs() < 1e-12);
            prop_assert!((*a.bearing * a.dist - a.p).norm() < 1e-9);
        }
    }
}
