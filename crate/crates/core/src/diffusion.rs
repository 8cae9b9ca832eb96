//! Noise schedules and the deterministic (η = 0) DDIM update shared by the
//! guided depth loop and the inversion machinery.

use crate::error::{Error, Result};
use crate::grid::Field;

/// `alpha_bars[t]` for t = 0..=T with `alpha_bars[0] = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl DiffusionSchedule {
    /// `steps` linearly spaced betas from `beta_start` to `beta_end`.
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("schedule needs at least one step".into()));
        }
        let betas: Vec<f64> = (0..steps)
            .map(|i| {
                if steps == 1 {
                    beta_start
                } else {
                    beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64
                }
            })
            .collect();
        Self::from_betas(betas)
    }

    /// `steps` evenly strided timesteps of a `train_steps` linear schedule, so
    /// that different step counts discretize the same process.
    pub fn strided(train_steps: usize, beta_start: f64, beta_end: f64, steps: usize) -> Result<Self> {
        if steps == 0 || steps > train_steps {
            return Err(Error::Config(format!("cannot stride {train_steps} training steps into {steps}")));
        }
        let base = Self::linear(train_steps, beta_start, beta_end)?;
        let alpha_bars: Vec<f64> = (0..=steps).map(|k| base.alpha_bars[k * train_steps / steps]).collect();
        let betas = alpha_bars.windows(2).map(|w| 1.0 - w[1] / w[0]).collect();
        Self::from_betas(betas)
    }

    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
            return Err(Error::Config("betas must lie strictly inside (0, 1)".into()));
        }
        let mut alpha_bars = Vec::with_capacity(betas.len() + 1);
        alpha_bars.push(1.0);
        for b in &betas {
            let prev = *alpha_bars.last().expect("non-empty");
            alpha_bars.push(prev * (1.0 - b));
        }
        Ok(DiffusionSchedule { betas, alpha_bars })
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn beta(&self, t: usize) -> Result<f64> {
        self.check(t)?;
        if t == 0 {
            return Err(Error::Timestep { t, steps: self.steps() });
        }
        Ok(self.betas[t - 1])
    }

    pub fn alpha_bar(&self, t: usize) -> Result<f64> {
        self.check(t)?;
        Ok(self.alpha_bars[t])
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    fn check(&self, t: usize) -> Result<()> {
        if t > self.steps() {
            Err(Error::Timestep { t, steps: self.steps() })
        } else {
            Ok(())
        }
    }
}

/// `x̂₀ = (x_t − √(1−ᾱ_t) ε̂) / √ᾱ_t`.
pub fn predicted_clean(x_t: &Field, eps_hat: &Field, t: usize, sched: &DiffusionSchedule) -> Result<Field> {
    let ab = sched.alpha_bar(t)?;
    if !(ab > 0.0) {
        return Err(Error::Timestep { t, steps: sched.steps() });
    }
    let (sa, sb) = (ab.sqrt(), (1.0 - ab).sqrt());
    x_t.zip_map(eps_hat, |&x, &e| (x - sb * e) / sa)
}

/// Deterministic DDIM move of `x` from step `from` to step `to` with noise estimate `eps`.
pub fn ddim_move(x: &Field, eps: &Field, from: usize, to: usize, sched: &DiffusionSchedule) -> Result<Field> {
    let x0 = predicted_clean(x, eps, from, sched)?;
    let ab = sched.alpha_bar(to)?;
    let (sa, sb) = (ab.sqrt(), (1.0 - ab).sqrt());
    x0.zip_map(eps, |&c, &e| sa * c + sb * e)
}

/// One denoising step `t → t−1`.
pub fn ddim_step(x_t: &Field, eps: &Field, t: usize, sched: &DiffusionSchedule) -> Result<Field> {
    if t == 0 {
        return Err(Error::Timestep { t, steps: sched.steps() });
    }
    ddim_move(x_t, eps, t, t - 1, sched)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn linear_schedule_shape() {
        let s = DiffusionSchedule::linear(50, 1e-4, 2e-2).unwrap();
        assert_eq!(s.alpha_bars().len(), 51);
        assert_eq!(s.alpha_bar(0).unwrap(), 1.0);
        assert!(s.alpha_bars().windows(2).all(|w| w[1] < w[0]));
        assert!((s.beta(50).unwrap() - 2e-2).abs() < 1e-15);
        let direct: f64 = (0..50).map(|i| 1.0 - (1e-4 + (2e-2 - 1e-4) * i as f64 / 49.0)).product();
        assert!((s.alpha_bar(50).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn strided_matches_training_schedule() {
        let base = DiffusionSchedule::linear(1000, 1e-4, 2e-2).unwrap();
        let s = DiffusionSchedule::strided(1000, 1e-4, 2e-2, 200).unwrap();
        assert_eq!(s.steps(), 200);
        for k in [0, 1, 57, 200] {
            let rel = (s.alpha_bar(k).unwrap() - base.alpha_bar(5 * k).unwrap()).abs() / base.alpha_bar(5 * k).unwrap();
            assert!(rel < 1e-12);
        }
    }

    #[test]
    fn predicted_clean_inverts_forward() {
        let s = DiffusionSchedule::linear(10, 1e-3, 5e-2).unwrap();
        let x = Grid::from_vec(3, 1, vec![0.5, -0.25, 1.0]).unwrap();
        let e = Grid::from_vec(3, 1, vec![0.125, 2.0, -1.5]).unwrap();
        let ab = s.alpha_bar(7).unwrap();
        let xt = x.zip_map(&e, |a, b| ab.sqrt() * a + (1.0 - ab).sqrt() * b).unwrap();
        let back = predicted_clean(&xt, &e, 7, &s).unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-14);
        }
        let same = predicted_clean(&x, &Grid::filled(3, 1, 0.0), 0, &s).unwrap();
        assert_eq!(same, x);
    }

    #[test]
    fn out_of_range_timestep() {
        let s = DiffusionSchedule::linear(5, 1e-3, 5e-2).unwrap();
        assert!(s.alpha_bar(6).is_err());
        assert!(ddim_step(&Grid::filled(1, 1, 0.0), &Grid::filled(1, 1, 0.0), 0, &s).is_err());
    }
}
