//! First-order modal system `z' = R z + (0, n) f_c + f_e(t)`.

use crate::error::{ensure, Error, Result};
use crate::oscillator::Oscillator;
use crate::structure::ModalStructure;
use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// External load `amplitude cos(frequency t)` acting on one mode (1-based index).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicForcing {
    pub mode: usize,
    pub amplitude: f64,
    pub frequency: f64,
}

/// Initial amplitudes of one mode (1-based), scaled so the mode shape has unit contact value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub mode: usize,
    pub displacement: f64,
    pub velocity: f64,
}

impl InitialCondition {
    pub fn rest() -> Self {
        InitialCondition { mode: 1, displacement: 0.0, velocity: 0.0 }
    }
}

#[derive(Clone, Debug)]
pub struct FirstOrderSystem {
    pub modal: ModalStructure,
    pub r: DMatrix<f64>,
    pub influence: DVector<f64>,
    pub forcing: Option<HarmonicForcing>,
    pub initial_state: DVector<f64>,
    oscillators: Vec<Oscillator>,
    /// Per-mode steady harmonic amplitude (zero for unforced modes).
    harmonic: Vec<Complex<f64>>,
}

pub fn assemble_first_order(
    ms: &ModalStructure,
    forcing: Option<HarmonicForcing>,
    ic: &InitialCondition,
) -> Result<FirstOrderSystem> {
    ms.validate()?;
    let m = ms.len();
    let mut r = DMatrix::zeros(2 * m, 2 * m);
    for k in 0..m {
        let w = ms.omegas[k];
        r[(k, m + k)] = 1.0;
        r[(m + k, k)] = -w * w;
        r[(m + k, m + k)] = -2.0 * ms.dampings[k] * w;
    }
    let mut influence = DVector::zeros(2 * m);
    for k in 0..m {
        influence[m + k] = ms.tip_values[k];
    }
    let oscillators: Vec<Oscillator> =
        ms.omegas.iter().zip(&ms.dampings).map(|(w, d)| Oscillator::new(*w, *d)).collect();

    let mut harmonic = vec![Complex::new(0.0, 0.0); m];
    if let Some(f) = forcing {
        ensure(f.mode >= 1 && f.mode <= m, "forcing.mode", || format!("{} is outside 1..={m}", f.mode))?;
        ensure(f.amplitude.is_finite() && f.frequency.is_finite(), "forcing", || "non-finite forcing".into())?;
        harmonic[f.mode - 1] = oscillators[f.mode - 1]
            .harmonic_amplitude(f.amplitude, f.frequency)
            .ok_or(Error::Resonance { mode: f.mode })?;
    }

    let mut initial_state = DVector::zeros(2 * m);
    if ic.displacement != 0.0 || ic.velocity != 0.0 {
        ensure(ic.mode >= 1 && ic.mode <= m, "ic.mode", || format!("{} is outside 1..={m}", ic.mode))?;
        let n = ms.tip_values[ic.mode - 1];
        ensure(n != 0.0, "ic.mode", || format!("mode {} has a zero contact value", ic.mode))?;
        initial_state[ic.mode - 1] = ic.displacement / n;
        initial_state[m + ic.mode - 1] = ic.velocity / n;
    }

    Ok(FirstOrderSystem { modal: ms.clone(), r, influence, forcing, initial_state, oscillators, harmonic })
}

impl FirstOrderSystem {
    pub fn modes(&self) -> usize {
        self.modal.len()
    }

    pub fn oscillators(&self) -> &[Oscillator] {
        &self.oscillators
    }

    pub fn tip_values(&self) -> &[f64] {
        &self.modal.tip_values
    }

    /// Steady harmonic response of mode `k` at time `t`.
    pub(crate) fn particular(&self, k: usize, t: f64) -> (f64, f64) {
        let amp = self.harmonic[k];
        if amp.re == 0.0 && amp.im == 0.0 {
            return (0.0, 0.0);
        }
        let nu = self.forcing.map(|f| f.frequency).unwrap_or(0.0);
        let phase = Complex::new(0.0, nu * t).exp();
        let x = amp * phase;
        let v = amp * Complex::new(0.0, nu) * phase;
        (x.re, v.re)
    }

    /// Modal displacements and velocities with no contact force, in closed form.
    pub fn free_response(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.modes();
        let mut x = vec![0.0; m];
        let mut v = vec![0.0; m];
        for k in 0..m {
            let (xp0, vp0) = self.particular(k, 0.0);
            let (xp, vp) = self.particular(k, t);
            let (xh, vh) =
                self.oscillators[k].propagate(self.initial_state[k] - xp0, self.initial_state[m + k] - vp0, t);
            x[k] = xh + xp;
            v[k] = vh + vp;
        }
        (x, v)
    }

    /// External load vector at time `t` in first-order form.
    pub fn external_load(&self, t: f64) -> DVector<f64> {
        let m = self.modes();
        let mut f = DVector::zeros(2 * m);
        if let Some(h) = self.forcing {
            f[m + h.mode - 1] = h.amplitude * (h.frequency * t).cos();
        }
        f
    }

    /// Right-hand side of the full system under a given contact force.
    pub fn rhs(&self, z: &DVector<f64>, contact_force: f64, t: f64) -> DVector<f64> {
        &self.r * z + &self.influence * contact_force + self.external_load(t)
    }

    /// Contact-point displacement and velocity `(n.x, n.v)` of a full state.
    pub fn resolve(&self, z: &DVector<f64>) -> [f64; 2] {
        let m = self.modes();
        let n = &self.modal.tip_values;
        let mut y = [0.0; 2];
        for k in 0..m {
            y[0] += n[k] * z[k];
            y[1] += n[k] * z[m + k];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::ModelTag;
    use approx::assert_relative_eq;

    fn single(w: f64, d: f64) -> ModalStructure {
        ModalStructure::new(vec![w], vec![d], vec![1.3], ModelTag::String, 1.0).unwrap()
    }

    #[test]
    fn single_mode_block_matrix() {
        let sys = assemble_first_order(&single(2.0, 0.0), None, &InitialCondition::rest()).unwrap();
        assert_eq!(sys.r, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, 0.0]));
        assert_eq!(sys.influence[0], 0.0);
        assert_eq!(sys.influence[1], 1.3);
    }

    #[test]
    fn initial_condition_is_tip_normalized() {
        let ic = InitialCondition { mode: 1, displacement: 1.056, velocity: 1.056 };
        let sys = assemble_first_order(&single(2.0, 0.1), None, &ic).unwrap();
        assert_relative_eq!(sys.initial_state[0] * 1.3, 1.056);
        assert_relative_eq!(sys.resolve(&sys.initial_state)[1], 1.056);
    }

    #[test]
    fn forcing_mode_out_of_range() {
        let f = HarmonicForcing { mode: 2, amplitude: 1.0, frequency: 1.0 };
        assert!(assemble_first_order(&single(2.0, 0.1), Some(f), &InitialCondition::rest()).is_err());
    }

    #[test]
    fn undamped_resonance_rejected() {
        let f = HarmonicForcing { mode: 1, amplitude: 1.0, frequency: 2.0 };
        let err = assemble_first_order(&single(2.0, 0.0), Some(f), &InitialCondition::rest()).unwrap_err();
        assert!(matches!(err, Error::Resonance { mode: 1 }));
    }

    #[test]
    fn free_response_starts_at_initial_state() {
        let f = HarmonicForcing { mode: 1, amplitude: 3.0, frequency: 5.0 };
        let ic = InitialCondition { mode: 1, displacement: 0.4, velocity: -0.2 };
        let sys = assemble_first_order(&single(2.0, 0.1), Some(f), &ic).unwrap();
        let (x, v) = sys.free_response(0.0);
        assert_relative_eq!(x[0], sys.initial_state[0], epsilon = 1e-15);
        assert_relative_eq!(v[0], sys.initial_state[1], epsilon = 1e-15);
    }
}
