use nalgebra::Complex;

/// Closed forms for the damped oscillator `x'' + 2 D w x' + w^2 x = u(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Oscillator {
    pub omega: f64,
    pub damping: f64,
    decay: f64,
    damped: f64,
}

impl Oscillator {
    pub fn new(omega: f64, damping: f64) -> Self {
        Oscillator {
            omega,
            damping,
            decay: damping * omega,
            damped: omega * (1.0 - damping * damping).sqrt(),
        }
    }

    /// Envelope decay rate `D w`.
    pub fn decay(&self) -> f64 {
        self.decay
    }

    /// Damped angular frequency `w sqrt(1 - D^2)`.
    pub fn damped(&self) -> f64 {
        self.damped
    }

    fn sin_over_wd(&self, t: f64) -> f64 {
        let x = self.damped * t;
        if x.abs() < 1e-4 {
            t * (1.0 - x * x / 6.0)
        } else {
            x.sin() / self.damped
        }
    }

    /// Fundamental pair `(c, s)`: responses to unit initial displacement and unit initial velocity.
    pub fn basis(&self, t: f64) -> (f64, f64) {
        let e = (-self.decay * t).exp();
        let sn = self.sin_over_wd(t);
        let c = e * ((self.damped * t).cos() + self.decay * sn);
        (c, e * sn)
    }

    /// Impulse response `s(t)`.
    pub fn impulse(&self, t: f64) -> f64 {
        self.basis(t).1
    }

    /// Time derivative of the impulse response.
    pub fn impulse_rate(&self, t: f64) -> f64 {
        let (c, s) = self.basis(t);
        c - 2.0 * self.decay * s
    }

    /// Unit step response `X(t) = (1 - c(t)) / w^2`, free of cancellation at small `w t`.
    pub fn step(&self, t: f64) -> f64 {
        if self.omega * t < 0.5 {
            self.step_series(t)
        } else {
            (1.0 - self.basis(t).0) / (self.omega * self.omega)
        }
    }

    fn step_series(&self, t: f64) -> f64 {
        let w2 = self.omega * self.omega;
        let two_a = 2.0 * self.decay;
        // Taylor coefficients obey d[n+2] = -2a d[n+1] - w^2 d[n] with d0 = d1 = 0, d2 = 1.
        let (mut d_prev, mut d_cur) = (0.0, 1.0);
        let mut power = t * t / 2.0;
        let mut sum = power;
        for n in 2..60 {
            let d_next = -two_a * d_cur - w2 * d_prev;
            power *= t / (n + 1) as f64;
            let term = d_next * power;
            sum += term;
            d_prev = d_cur;
            d_cur = d_next;
            if term.abs() <= 1e-18 * sum.abs() && n > 4 {
                break;
            }
        }
        sum
    }

    /// Homogeneous propagation of `(x, v)` over `t`.
    pub fn propagate(&self, x: f64, v: f64, t: f64) -> (f64, f64) {
        let (c, s) = self.basis(t);
        let w2 = self.omega * self.omega;
        (c * x + s * v, -w2 * s * x + (c - 2.0 * self.decay * s) * v)
    }

    /// Propagation of `(x, v)` over `t` under a constant load `u`.
    pub fn propagate_loaded(&self, x: f64, v: f64, u: f64, t: f64) -> (f64, f64) {
        let (xh, vh) = self.propagate(x, v, t);
        (xh + u * self.step(t), vh + u * self.impulse(t))
    }

    /// Complex amplitude `X` of the steady response `Re(X e^{i nu t})` to `amp cos(nu t)`.
    /// Returns `None` at undamped resonance.
    pub fn harmonic_amplitude(&self, amp: f64, nu: f64) -> Option<Complex<f64>> {
        let den = Complex::new(self.omega * self.omega - nu * nu, 2.0 * self.decay * nu);
        if den.norm() <= 1e-12 * (self.omega * self.omega).max(nu * nu).max(1.0) {
            None
        } else {
            Some(Complex::new(amp, 0.0) / den)
        }
    }

    /// Exponential envelope bound for `|s(t)|`, `|s'(t)|`: returns `(B_s, B_ds)` with
    /// `|s(t)| <= B_s e^{-a t}` and `|s'(t)| <= B_ds e^{-a t}`.
    pub fn envelope(&self) -> (f64, f64) {
        (1.0 / self.damped, 1.0 + self.decay / self.damped)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn basis_matches_initial_values() {
        let o = Oscillator::new(3.0, 0.2);
        let (c, s) = o.basis(0.0);
        assert_eq!((c, s), (1.0, 0.0));
        assert_eq!(o.propagate(1.5, -2.0, 0.0), (1.5, -2.0));
    }

    #[test]
    fn step_series_joins_closed_form() {
        let o = Oscillator::new(7.0, 0.1);
        let t = 0.5 / 7.0;
        let closed = (1.0 - o.basis(t).0) / 49.0;
        assert_relative_eq!(o.step_series(t), closed, max_relative = 1e-12);
    }

    #[test]
    fn step_is_accurate_at_tiny_times() {
        let o = Oscillator::new(1e3, 0.1);
        let t = 1e-9;
        let expected = 0.5 * t * t * (1.0 - 2.0 / 3.0 * 0.1 * 1e3 * t);
        assert_relative_eq!(o.step(t), expected, max_relative = 1e-12);
    }

    #[test]
    fn propagate_satisfies_equation_of_motion() {
        let o = Oscillator::new(2.5, 0.3);
        let (x0, v0, t, h) = (0.7, -1.1, 0.9, 1e-5);
        let xp = o.propagate(x0, v0, t + h).0;
        let xm = o.propagate(x0, v0, t - h).0;
        let (x, v) = o.propagate(x0, v0, t);
        let acc = (xp - 2.0 * x + xm) / (h * h);
        let residual = acc + 2.0 * 0.3 * 2.5 * v + 2.5 * 2.5 * x;
        assert!(residual.abs() < 1e-4, "{residual}");
    }

    #[test]
    fn loaded_propagation_settles_at_static_deflection() {
        let o = Oscillator::new(4.0, 0.5);
        let (x, v) = o.propagate_loaded(0.0, 0.0, 3.2, 60.0);
        assert_relative_eq!(x, 3.2 / 16.0, max_relative = 1e-12);
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn undamped_resonance_has_no_amplitude() {
        assert!(Oscillator::new(13.0, 0.0).harmonic_amplitude(1.0, 13.0).is_none());
        assert!(Oscillator::new(13.0, 0.1).harmonic_amplitude(1.0, 13.0).is_some());
    }
}
