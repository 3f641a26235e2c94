//! Classical fixed-step fourth-order Runge-Kutta.

/// Reusable RK4 stepper over a flat state vector. Stage buffers are kept
/// between steps so a run does not allocate per step.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 { k1: vec![0.0; dim], k2: vec![0.0; dim], k3: vec![0.0; dim], k4: vec![0.0; dim], stage: vec![0.0; dim] }
    }

    /// Advances `x` from `t` to `t + dt`. `rhs(t, x, dx)` writes the
    /// derivative into `dx`; its first error aborts the step and leaves `x`
    /// untouched.
    pub fn step<E, F>(&mut self, t: f64, dt: f64, x: &mut [f64], mut rhs: F) -> Result<(), E>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    {
        let half = 0.5 * dt;
        rhs(t, x, &mut self.k1)?;
        for ((s, xi), k) in self.stage.iter_mut().zip(x.iter()).zip(&self.k1) {
            *s = xi + half * k;
        }
        rhs(t + half, &self.stage, &mut self.k2)?;
        for ((s, xi), k) in self.stage.iter_mut().zip(x.iter()).zip(&self.k2) {
            *s = xi + half * k;
        }
        rhs(t + half, &self.stage, &mut self.k3)?;
        for ((s, xi), k) in self.stage.iter_mut().zip(x.iter()).zip(&self.k3) {
            *s = xi + dt * k;
        }
        rhs(t + dt, &self.stage, &mut self.k4)?;
        let sixth = dt / 6.0;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, x: &[f64], dx: &mut [f64]) -> Result<(), ()> {
        dx[0] = x[1];
        dx[1] = -x[0];
        Ok(())
    }

    fn final_error(dt: f64) -> f64 {
        let mut rk = Rk4::new(2);
        let mut x = vec![1.0, 0.0];
        let steps = (2.0 / dt).round() as usize;
        for k in 0..steps {
            rk.step(k as f64 * dt, dt, &mut x, oscillator).unwrap();
        }
        ((x[0] - 2f64.cos()).powi(2) + (x[1] + 2f64.sin()).powi(2)).sqrt()
    }

    #[test]
    fn fourth_order_convergence() {
        let ratio = final_error(0.1) / final_error(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn error_leaves_state_untouched() {
        let mut rk = Rk4::new(1);
        let mut x = vec![3.0];
        let mut calls = 0;
        let r = rk.step(0.0, 0.1, &mut x, |_, _, dx: &mut [f64]| {
            calls += 1;
            dx[0] = 1.0;
            if calls == 3 {
                Err("boom")
            } else {
                Ok(())
            }
        });
        assert_eq!(r, Err("boom"));
        assert_eq!(x, vec![3.0]);
    }

    #[test]
    fn time_dependent_rhs_exact_for_cubic() {
        // x' = 4 t^3 integrates exactly under RK4 (Simpson weights)
        let mut rk = Rk4::new(1);
        let mut x = vec![0.0];
        let dt = 0.25;
        for k in 0..8 {
            rk.step(k as f64 * dt, dt, &mut x, |t, _, dx: &mut [f64]| -> Result<(), ()> {
                dx[0] = 4.0 * t * t * t;
                Ok(())
            })
            .unwrap();
        }
        assert!((x[0] - 16.0).abs() < 1e-12);
    }
}
