//! Projection onto the contact-point variables `y = V z` along an invariant modal subspace.

use crate::error::{ensure, Error, Result};
use crate::system::FirstOrderSystem;
use nalgebra::{DMatrix, DVector, Matrix2};

/// `m = e_s / n_s`, `V = diag(n^T, n^T)`, `W = diag(m, m)`, `A = V R W`.
#[derive(Clone, Debug)]
pub struct Projection {
    /// Support mode (0-based).
    pub support: usize,
    pub m: DVector<f64>,
    pub v: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub a: Matrix2<f64>,
}

/// Default projection supported on the first mode.
pub fn build_projection(sys: &FirstOrderSystem) -> Result<Projection> {
    build_projection_with_support(sys, 0)
}

pub fn build_projection_with_support(sys: &FirstOrderSystem, support: usize) -> Result<Projection> {
    let m_modes = sys.modes();
    ensure(support < m_modes, "support", || format!("mode {} is outside 1..={m_modes}", support + 1))?;
    let n = sys.tip_values();
    if n[support] == 0.0 {
        return Err(Error::ZeroSupport { mode: support + 1 });
    }
    let mut m = DVector::zeros(m_modes);
    m[support] = 1.0 / n[support];
    let mut v = DMatrix::zeros(2, 2 * m_modes);
    let mut w = DMatrix::zeros(2 * m_modes, 2);
    for k in 0..m_modes {
        v[(0, k)] = n[k];
        v[(1, m_modes + k)] = n[k];
        w[(k, 0)] = m[k];
        w[(m_modes + k, 1)] = m[k];
    }
    let a_dyn = &v * &sys.r * &w;
    let a = Matrix2::new(a_dyn[(0, 0)], a_dyn[(0, 1)], a_dyn[(1, 0)], a_dyn[(1, 1)]);
    Ok(Projection { support, m, v, w, a })
}

impl Projection {
    /// `S = W V`.
    pub fn s_matrix(&self) -> DMatrix<f64> {
        &self.w * &self.v
    }

    /// `Q = I - W V`.
    pub fn q_matrix(&self) -> DMatrix<f64> {
        let dim = self.w.nrows();
        DMatrix::identity(dim, dim) - self.s_matrix()
    }

    /// `Q z` without forming `Q`.
    pub fn apply_q(&self, z: &DVector<f64>) -> DVector<f64> {
        z - &self.w * (&self.v * z)
    }

    pub fn vw(&self) -> DMatrix<f64> {
        &self.v * &self.w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{string_structure, ModalStructure, ModelTag};
    use crate::system::{assemble_first_order, InitialCondition};
    use approx::assert_relative_eq;

    #[test]
    fn single_mode_is_fully_resolved() {
        let ms = ModalStructure::new(vec![3.0], vec![0.1], vec![0.7], ModelTag::String, 1.0).unwrap();
        let sys = assemble_first_order(&ms, None, &InitialCondition::rest()).unwrap();
        let p = build_projection(&sys).unwrap();
        assert!((p.s_matrix() - DMatrix::identity(2, 2)).amax() < 1e-15);
        assert!(p.q_matrix().amax() < 1e-15);
    }

    #[test]
    fn reduced_matrix_is_support_oscillator() {
        let ms = string_structure(5, 1.3, 0.05).unwrap();
        let sys = assemble_first_order(&ms, None, &InitialCondition::rest()).unwrap();
        let p = build_projection(&sys).unwrap();
        let w1 = ms.omegas[0];
        assert_eq!(p.a[(0, 0)], 0.0);
        assert_relative_eq!(p.a[(0, 1)], 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.a[(1, 0)], -w1 * w1, max_relative = 1e-14);
        assert_relative_eq!(p.a[(1, 1)], -2.0 * 0.05 * w1, max_relative = 1e-14);
        assert!((p.vw() - DMatrix::identity(2, 2)).amax() < 1e-15);
    }

    #[test]
    fn zero_support_value_rejected() {
        let ms = ModalStructure::new(vec![1.0, 2.0], vec![0.0; 2], vec![0.0, 1.0], ModelTag::String, 1.0).unwrap();
        let sys = assemble_first_order(&ms, None, &InitialCondition::rest()).unwrap();
        assert!(matches!(build_projection(&sys), Err(Error::ZeroSupport { mode: 1 })));
        assert!(build_projection_with_support(&sys, 1).is_ok());
    }
}
