//! Small symmetric eigenvalue kernels.
//!
//! 2x2 and 3x3 use closed forms; 6x6 uses a cyclic Jacobi sweep. Everything is
//! deterministic and allocation-free.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, SMatrix, Vector3};

pub type Mat6 = SMatrix<f64, 6, 6>;

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn sym_eigen2(m: &Matrix2<f64>) -> [f64; 2] {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let r = half_diff.hypot(b);
    [mean - r, mean + r]
}

/// Eigenvalues of a symmetric 3x3 matrix, ascending.
///
/// The trigonometric solution of the characteristic cubic gives the most
/// isolated eigenvalue to full precision; the remaining pair comes from the
/// 2x2 restriction to that eigenvector's orthogonal complement, which keeps
/// nearly repeated eigenvalues accurate.
pub fn sym_eigen3(m: &Matrix3<f64>) -> [f64; 3] {
    let a = 0.5 * (m + m.transpose());
    let p1 = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
    if p1 == 0.0 {
        return sorted3([a[(0, 0)], a[(1, 1)], a[(2, 2)]]);
    }
    let q = a.trace() / 3.0;
    let p2 = (a[(0, 0)] - q).powi(2) + (a[(1, 1)] - q).powi(2) + (a[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p <= f64::EPSILON * q.abs() {
        return [q; 3];
    }
    let b = (a - Matrix3::identity() * q) / p;
    let r = (0.5 * b.determinant()).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    // r >= 0: the largest root is isolated; otherwise the smallest is
    let isolated = if r >= 0.0 { q + 2.0 * p * phi.cos() } else { q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos() };

    let shifted = a - Matrix3::identity() * isolated;
    let rows = [shifted.row(0).transpose(), shifted.row(1).transpose(), shifted.row(2).transpose()];
    let v = [rows[0].cross(&rows[1]), rows[0].cross(&rows[2]), rows[1].cross(&rows[2])]
        .into_iter()
        .max_by(|x, y| x.norm_squared().total_cmp(&y.norm_squared()))
        .unwrap();
    let vn = v.norm();
    if vn == 0.0 || !vn.is_finite() {
        let largest = q + 2.0 * p * phi.cos();
        let smallest = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
        return [smallest, 3.0 * q - largest - smallest, largest];
    }
    let v = v / vn;
    let helper = if v.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let w1 = v.cross(&helper).normalize();
    let w2 = v.cross(&w1);
    let restricted = Matrix2::new(
        w1.dot(&(a * w1)),
        w1.dot(&(a * w2)),
        w2.dot(&(a * w1)),
        w2.dot(&(a * w2)),
    );
    let [lo, hi] = sym_eigen2(&restricted);
    sorted3([isolated, lo, hi])
}

fn sorted3(mut d: [f64; 3]) -> [f64; 3] {
    d.sort_by(f64::total_cmp);
    d
}

pub fn min_eigen3(m: &Matrix3<f64>) -> f64 {
    sym_eigen3(m)[0]
}

pub fn max_eigen3(m: &Matrix3<f64>) -> f64 {
    sym_eigen3(m)[2]
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigenvalues of a symmetric 6x6 matrix, ascending, by cyclic Jacobi
/// rotations. Sweeps stop once the off-diagonal mass is at machine precision
/// relative to the Frobenius norm.
pub fn sym_eigen6(m: &Mat6) -> [f64; 6] {
    let mut a = 0.5 * (m + m.transpose());
    let scale = a.norm();
    if scale == 0.0 {
        return [0.0; 6];
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..6 {
            for q in (p + 1)..6 {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= f64::EPSILON * scale {
            break;
        }
        for p in 0..6 {
            for q in (p + 1)..6 {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..6 {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..6 {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut d = [0.0; 6];
    for (k, slot) in d.iter_mut().enumerate() {
        *slot = a[(k, k)];
    }
    d.sort_by(f64::total_cmp);
    d
}

pub fn min_eigen6(m: &Mat6) -> f64 {
    sym_eigen6(m)[0]
}

pub fn max_eigen6(m: &Mat6) -> f64 {
    sym_eigen6(m)[5]
}

/// Assemble a 6x6 matrix from four 3x3 blocks.
pub fn block6(tl: &Matrix3<f64>, tr: &Matrix3<f64>, bl: &Matrix3<f64>, br: &Matrix3<f64>) -> Mat6 {
    let mut out = Mat6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(tl);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(tr);
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(bl);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(br);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sorted(v: impl Iterator<Item = f64>) -> Vec<f64> {
        let mut v: Vec<f64> = v.collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn eigen2_matches_hand_values() {
        let e = sym_eigen2(&Matrix2::new(1.0, 0.5, 0.5, 1.0));
        assert!((e[0] - 0.5).abs() < 1e-15 && (e[1] - 1.5).abs() < 1e-15);
        let e = sym_eigen2(&Matrix2::new(1.0, 2.0, 2.0, 5.0));
        assert!((e[1] - (3.0 + 2.0 * 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn eigen3_handles_diagonal_and_repeated() {
        assert_eq!(sym_eigen3(&Matrix3::from_diagonal(&nalgebra::Vector3::new(3.0, -1.0, 2.0))), [-1.0, 2.0, 3.0]);
        let y = nalgebra::Vector3::new(1.0, 1.0, 0.0).normalize();
        let pi = Matrix3::identity() - y * y.transpose();
        let e = sym_eigen3(&pi);
        assert!(e[0].abs() < 1e-14, "{e:?}");
        assert!((e[1] - 1.0).abs() < 1e-14 && (e[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigen3_and_eigen6_agree_with_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let r = Matrix3::from_fn(|_, _| rng.gen_range(-3.0..3.0));
            let s = r + r.transpose();
            let want = sorted(SymmetricEigen::new(s).eigenvalues.iter().copied());
            let got = sym_eigen3(&s);
            for k in 0..3 {
                assert!((got[k] - want[k]).abs() < 1e-11, "{got:?} vs {want:?}");
            }

            let r6 = Mat6::from_fn(|_, _| rng.gen_range(-10.0..10.0));
            let s6 = r6 + r6.transpose();
            let want = sorted(SymmetricEigen::new(s6).eigenvalues.iter().copied());
            let got = sym_eigen6(&s6);
            for k in 0..6 {
                assert!((got[k] - want[k]).abs() < 1e-10, "{got:?} vs {want:?}");
            }
        }
    }
}
