//! Chebyshev collocation of the clamped Timoshenko beam with a tip shear load.
//!
//! Unknowns are the interior nodal values of deflection `u` and rotation `phi`.
//! The clamp `u(0) = phi(0) = 0` is imposed by dropping those nodes. The tip
//! rotation follows from its end condition and the tip deflection from the shear
//! row `u'(1) - phi(1) = f`.

use crate::chebyshev;
use crate::error::{ensure, Error, Result};
use crate::structure::{ModalStructure, ModelTag};
use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Relative eigenvalue tolerance below which imaginary or negative parts are noise.
const SPECTRUM_TOL: f64 = 1e-8;
/// Relative frequency drift under refinement accepted for a resolved mode.
const RESOLUTION_TOL: f64 = 1e-3;

/// Rotation condition at the loaded end.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TipRotation {
    /// `phi(1) = 0`: rotation held at the end.
    #[default]
    Clamped,
    /// `phi'(1) = 0`: moment-free end of a cantilever.
    Free,
}

/// Semidiscrete operator `x'' = -K x + b f` for `x = (u_interior, phi_interior)`.
#[derive(Clone, Debug)]
pub struct CollocationOperator {
    pub n_points: usize,
    pub beta: f64,
    pub gamma: f64,
    pub tip_rotation: TipRotation,
    pub stiffness: DMatrix<f64>,
    /// Column `b` injecting the tip shear `f = u'(1) - phi(1)`.
    pub force_influence: DVector<f64>,
    /// Row reading the tip deflection `u(1)` of an unloaded state.
    pub tip_extractor: DVector<f64>,
    /// Tip deflection per unit tip shear at fixed interior values.
    pub tip_force_gain: f64,
    /// Row giving the tip rotation `phi(1)`.
    tip_rotation_row: DVector<f64>,
    d1: DMatrix<f64>,
    weights: DVector<f64>,
}

/// Collocation with the default end condition `phi(1) = 0`.
pub fn timoshenko_collocation(n_points: usize, beta: f64, gamma: f64) -> Result<CollocationOperator> {
    timoshenko_collocation_with(n_points, beta, gamma, TipRotation::Clamped)
}

pub fn timoshenko_collocation_with(n_points: usize, beta: f64, gamma: f64, tip_rotation: TipRotation) -> Result<CollocationOperator> {
    ensure(n_points >= 8, "n_points", || format!("{n_points} collocation points cannot resolve the boundary rows; use at least 8"))?;
    ensure(beta > 0.0 && beta.is_finite(), "beta", || format!("{beta} must be positive"))?;
    ensure(gamma > 0.0 && gamma.is_finite(), "gamma", || format!("{gamma} must be positive"))?;

    let n = n_points;
    let p = n - 2;
    let tip = n - 1;
    let d1 = chebyshev::diff_matrix(n);
    let d2 = &d1 * &d1;
    let bg = beta * gamma;
    let b2g = beta * beta * gamma;

    // phi(1) = cphi . x, from phi'(1) = 0 or phi(1) = 0.
    let mut cphi = DVector::zeros(2 * p);
    if tip_rotation == TipRotation::Free {
        for c in 0..p {
            cphi[p + c] = -d1[(tip, c + 1)] / d1[(tip, tip)];
        }
    }
    // u(1) = cu . x + fu f, from u'(1) - phi(1) = f with u(0) = 0.
    let fu = 1.0 / d1[(tip, tip)];
    let mut cu = &cphi * fu;
    for c in 0..p {
        cu[c] -= d1[(tip, c + 1)] * fu;
    }

    // Nodal maps x -> u and x -> phi on all points, and the nodal tip-load column.
    let mut pu = DMatrix::zeros(n, 2 * p);
    let mut pphi = DMatrix::zeros(n, 2 * p);
    for c in 0..p {
        pu[(c + 1, c)] = 1.0;
        pphi[(c + 1, p + c)] = 1.0;
    }
    pu.set_row(tip, &cu.transpose());
    pphi.set_row(tip, &cphi.transpose());
    let mut qu = DVector::zeros(n);
    qu[tip] = fu;

    let du = &d1 * &pu;
    let dphi = &d1 * &pphi;
    let ddu = &d2 * &pu;
    let ddphi = &d2 * &pphi;
    let (dqu, ddqu) = (&d1 * &qu, &d2 * &qu);

    let mut k = DMatrix::zeros(2 * p, 2 * p);
    let mut b = DVector::zeros(2 * p);
    for r in 0..p {
        let i = r + 1;
        for c in 0..2 * p {
            k[(r, c)] = -bg * (ddu[(i, c)] - dphi[(i, c)]);
            k[(p + r, c)] = -beta * ddphi[(i, c)] - b2g * (du[(i, c)] - pphi[(i, c)]);
        }
        b[r] = bg * ddqu[i];
        b[p + r] = b2g * dqu[i];
    }

    Ok(CollocationOperator {
        n_points,
        beta,
        gamma,
        tip_rotation,
        stiffness: k,
        force_influence: b,
        tip_extractor: cu,
        tip_force_gain: fu,
        tip_rotation_row: cphi,
        d1,
        weights: chebyshev::quadrature_weights(n),
    })
}

impl CollocationOperator {
    pub fn interior_count(&self) -> usize {
        self.n_points - 2
    }

    /// Nodal `(u, phi)` on all points, including the eliminated boundary values.
    pub fn reconstruct(&self, x: &DVector<f64>, tip_shear: f64) -> (DVector<f64>, DVector<f64>) {
        let p = self.interior_count();
        let mut u = DVector::zeros(self.n_points);
        let mut phi = DVector::zeros(self.n_points);
        u.rows_mut(1, p).copy_from(&x.rows(0, p));
        phi.rows_mut(1, p).copy_from(&x.rows(p, p));
        u[self.n_points - 1] = self.tip_extractor.dot(x) + self.tip_force_gain * tip_shear;
        phi[self.n_points - 1] = self.tip_rotation_row.dot(x);
        (u, phi)
    }

    /// Tip deflection `u(1)`.
    pub fn tip_displacement(&self, x: &DVector<f64>, tip_shear: f64) -> f64 {
        self.tip_extractor.dot(x) + self.tip_force_gain * tip_shear
    }

    /// Residual `x'' + K x - b f` of the semidiscrete equations.
    pub fn residual(&self, x: &DVector<f64>, xdd: &DVector<f64>, tip_shear: f64) -> DVector<f64> {
        xdd + &self.stiffness * x - &self.force_influence * tip_shear
    }

    /// Kinetic-energy inner product `int u^2 + phi^2 / beta` of a nodal state.
    pub fn mass_norm_sq(&self, x: &DVector<f64>) -> f64 {
        let (u, phi) = self.reconstruct(x, 0.0);
        (0..self.n_points)
            .map(|j| self.weights[j] * (u[j] * u[j] + phi[j] * phi[j] / self.beta))
            .sum()
    }

    fn root_curvature(&self, x: &DVector<f64>) -> f64 {
        let (u, _) = self.reconstruct(x, 0.0);
        let du = &self.d1 * u;
        self.d1.row(0).dot(&du.transpose())
    }

    /// Physical tip shear force per unit of `u'(1) - phi(1)`.
    pub fn shear_stiffness(&self) -> f64 {
        self.beta * self.gamma
    }
}

/// Complete eigensystem of `K`, sorted by real part.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<Complex<f64>>,
    /// Right eigenvectors as columns.
    pub vectors: DMatrix<Complex<f64>>,
}

impl Eigensystem {
    /// `V diag(values) V^-1`, for checking the decomposition.
    pub fn recompose(&self) -> Option<DMatrix<Complex<f64>>> {
        let inv = self.vectors.clone().try_inverse()?;
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(self.values.clone()));
        Some(&self.vectors * lambda * inv)
    }
}

fn sorted_eigenvalues(k: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let mut vals: Vec<Complex<f64>> = k.complex_eigenvalues().iter().cloned().collect();
    vals.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    vals
}

fn start_vector(dim: usize) -> DVector<f64> {
    // Fixed, non-symmetric pattern so that no eigenvector is orthogonal to it by symmetry.
    DVector::from_fn(dim, |i, _| 1.0 + ((i * 7919) % 101) as f64 / 101.0)
}

fn inverse_iteration_real(k: &DMatrix<f64>, lambda: f64) -> Result<DVector<f64>> {
    let dim = k.nrows();
    let scale = k.amax().max(1.0);
    let shift = lambda + 1e-11 * lambda.abs().max(scale * 1e-6);
    let lu = (k - DMatrix::identity(dim, dim) * shift).lu();
    let mut v = start_vector(dim);
    for _ in 0..3 {
        v = lu
            .solve(&v)
            .ok_or_else(|| Error::Discretization(format!("inverse iteration failed at eigenvalue {lambda:e}")))?;
        v /= v.norm();
    }
    Ok(v)
}

fn inverse_iteration_complex(k: &DMatrix<f64>, lambda: Complex<f64>) -> Result<DVector<Complex<f64>>> {
    let dim = k.nrows();
    let scale = k.amax().max(1.0);
    let shift = lambda + Complex::new(1e-11 * lambda.norm().max(scale * 1e-6), 0.0);
    let kc = k.map(|v| Complex::new(v, 0.0));
    let lu = (kc - DMatrix::identity(dim, dim) * shift).lu();
    let mut v = start_vector(dim).map(|x| Complex::new(x, 0.0));
    for _ in 0..3 {
        v = lu
            .solve(&v)
            .ok_or_else(|| Error::Discretization(format!("inverse iteration failed at eigenvalue {lambda}")))?;
        let nrm = v.norm();
        v /= Complex::new(nrm, 0.0);
    }
    Ok(v)
}

/// Eigenvalues and right eigenvectors of the stiffness.
pub fn eigensystem(op: &CollocationOperator) -> Result<Eigensystem> {
    let k = &op.stiffness;
    let values = sorted_eigenvalues(k);
    let dim = k.nrows();
    let mut vectors = DMatrix::zeros(dim, dim);
    let tol = SPECTRUM_TOL * values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (c, lam) in values.iter().enumerate() {
        let v = if lam.im.abs() <= tol {
            inverse_iteration_real(k, lam.re)?.map(|x| Complex::new(x, 0.0))
        } else {
            inverse_iteration_complex(k, *lam)?
        };
        vectors.set_column(c, &v);
    }
    Ok(Eigensystem { values, vectors })
}

/// Leading frequencies that move by less than the resolution tolerance under 1.5x refinement.
pub fn resolved_mode_count(op: &CollocationOperator) -> Result<usize> {
    let refined = timoshenko_collocation_with((3 * op.n_points).div_ceil(2), op.beta, op.gamma, op.tip_rotation)?;
    let coarse = sorted_eigenvalues(&op.stiffness);
    let fine = sorted_eigenvalues(&refined.stiffness);
    let scale = coarse.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut count = 0;
    for (a, b) in coarse.iter().zip(fine.iter()) {
        let real = a.im.abs() <= SPECTRUM_TOL * scale && a.re > 0.0 && b.re > 0.0;
        if !real || ((a.re.sqrt() - b.re.sqrt()) / b.re.sqrt()).abs() >= RESOLUTION_TOL {
            break;
        }
        count += 1;
    }
    Ok(count.max(1))
}

/// Converts the collocation operator to mass-normalized modal form with uniform damping.
///
/// Tip values act on the physical shear force `beta gamma (u'(1) - phi(1))`, so they
/// both extract the tip deflection and inject the contact force. Complex or negative
/// eigenvalues are tolerated only above the resolved part of the spectrum and dropped.
pub fn to_modal(op: &CollocationOperator, damping: f64) -> Result<ModalStructure> {
    ensure((0.0..1.0).contains(&damping), "damping", || format!("{damping} is outside [0, 1)"))?;
    let eig = eigensystem(op)?;
    let resolved = resolved_mode_count(op)?;
    let scale = eig.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tol = SPECTRUM_TOL * scale;

    let mut modes: Vec<(f64, f64)> = Vec::new();
    for (idx, lam) in eig.values.iter().enumerate() {
        let spurious = lam.im.abs() > tol || lam.re < -tol || lam.re <= 0.0;
        if spurious {
            if idx < resolved {
                return Err(Error::Discretization(format!(
                    "eigenvalue {lam} of the collocated stiffness is not real positive within the resolved spectrum"
                )));
            }
            continue;
        }
        let mut v: DVector<f64> = eig.vectors.column(idx).map(|z| z.re);
        v /= op.mass_norm_sq(&v).sqrt();
        let curvature = op.root_curvature(&v);
        let tip = op.tip_extractor.dot(&v);
        let sign = if curvature.abs() > 1e-12 * v.amax() { curvature.signum() } else { tip.signum() };
        if sign < 0.0 {
            v.neg_mut();
        }
        modes.push((lam.re.sqrt(), op.tip_extractor.dot(&v)));
    }
    modes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = modes.len();
    let mut ms = ModalStructure::new(
        modes.iter().map(|m| m.0).collect(),
        vec![damping; m],
        modes.iter().map(|m| m.1).collect(),
        ModelTag::Timoshenko,
        1.0,
    )?;
    ms.resolved_modes = resolved.min(m);
    Ok(ms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn too_few_points_rejected() {
        assert!(matches!(timoshenko_collocation(7, 4800.0, 0.25), Err(Error::Invalid { .. })));
        assert!(timoshenko_collocation(8, 4800.0, 0.25).is_ok());
        assert!(timoshenko_collocation(20, -1.0, 0.25).is_err());
    }

    #[test]
    fn equilibrium_has_zero_residual() {
        let op = timoshenko_collocation(20, 4800.0, 0.25).unwrap();
        let z = DVector::zeros(36);
        assert_eq!(op.residual(&z, &z, 0.0).amax(), 0.0);
    }

    #[test]
    fn boundary_values_are_exact() {
        let x = DVector::from_fn(20, |i, _| (i as f64 * 0.37).sin());
        for rot in [TipRotation::Free, TipRotation::Clamped] {
            let op = timoshenko_collocation_with(12, 4800.0, 0.25, rot).unwrap();
            let (u, phi) = op.reconstruct(&x, 0.3);
            assert_eq!(u[0], 0.0);
            assert_eq!(phi[0], 0.0);
            let dphi_tip = op.d1.row(11).dot(&phi.transpose());
            match rot {
                TipRotation::Clamped => assert_eq!(phi[11], 0.0),
                TipRotation::Free => assert!(dphi_tip.abs() < 1e-9),
            }
            // The eliminated tip value satisfies the shear row exactly.
            let du_tip = op.d1.row(11).dot(&u.transpose());
            assert_relative_eq!(du_tip - phi[11], 0.3, epsilon = 1e-9);
        }
    }

    #[test]
    fn lowest_frequency_converges() {
        let w20 = to_modal(&timoshenko_collocation(20, 4800.0, 0.25).unwrap(), 0.1).unwrap().omegas[0];
        let w40 = to_modal(&timoshenko_collocation(40, 4800.0, 0.25).unwrap(), 0.1).unwrap().omegas[0];
        assert!(((w20 - w40) / w40).abs() < 5e-3);
    }

    #[test]
    fn slender_limits_match_bending_beams() {
        // Slender-beam limits: cantilever (1.8751^2) and clamped-sliding (2.3650^2).
        let op = timoshenko_collocation_with(30, 1e6, 0.25, TipRotation::Free).unwrap();
        let free = to_modal(&op, 0.0).unwrap();
        assert_relative_eq!(free.omegas[0], 1.875_104_07f64.powi(2), max_relative = 1e-3);
        let sliding = to_modal(&timoshenko_collocation(30, 1e6, 0.25).unwrap(), 0.0).unwrap();
        assert_relative_eq!(sliding.omegas[0], 2.365_020_37f64.powi(2), max_relative = 1e-3);
    }

    #[test]
    fn modal_dampings_uniform() {
        let ms = to_modal(&timoshenko_collocation(16, 4800.0, 0.25).unwrap(), 0.1).unwrap();
        assert!(ms.dampings.iter().all(|d| *d == 0.1));
        assert!(ms.omegas.iter().all(|w| *w > 0.0));
        assert_eq!(ms.nominal_alpha, 1.0);
    }
}
