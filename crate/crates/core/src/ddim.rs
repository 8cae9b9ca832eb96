//! SDEdit-style partial noising: deterministic DDIM inversion of an image to
//! an intermediate timestep and denoising back, with toy score models that
//! make the recursion checkable in closed form.

use serde::{Deserialize, Serialize};

pub use crate::diffusion::DiffusionSchedule;

use crate::diffusion::{ddim_move, ddim_step};
use crate::error::{Error, Result};
use crate::grid::{Field, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdeditParams {
    pub total_steps: usize,
    pub strength: f64,
}

impl Default for SdeditParams {
    fn default() -> Self {
        SdeditParams { total_steps: 1000, strength: 0.85 }
    }
}

impl SdeditParams {
    pub fn t_inv(&self) -> Result<usize> {
        compute_t_inv(self.total_steps, self.strength)
    }
}

/// `floor(T·(1 − s))`. A relative slack of 1e-9 keeps products such as
/// 10·(1 − 0.8) = 1.9999999999999996 from flooring to 1.
pub fn compute_t_inv(total_steps: usize, strength: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::Strength(strength));
    }
    if total_steps == 0 {
        return Err(Error::Config("total_steps must be >= 1".into()));
    }
    let raw = total_steps as f64 * (1.0 - strength);
    Ok(((raw + 1e-9 * raw.max(1.0)).floor() as usize).min(total_steps))
}

/// Noise predictor driving inversion and denoising; must be deterministic.
pub trait ScoreModel: Sync {
    fn predict_noise(&self, x: &Field, t: usize, cond: Option<&RgbImage>) -> Result<Field>;
}

/// Predicts zero noise, so every DDIM move is a pure rescaling.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroModel;

impl ScoreModel for ZeroModel {
    fn predict_noise(&self, x: &Field, _t: usize, _cond: Option<&RgbImage>) -> Result<Field> {
        Ok(x.map(|_| 0.0))
    }
}

/// `ε̂(x, t) = coeffs[t] · x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearToyModel {
    pub coeffs: Vec<f64>,
}

impl ScoreModel for LinearToyModel {
    fn predict_noise(&self, x: &Field, t: usize, _cond: Option<&RgbImage>) -> Result<Field> {
        let c = *self.coeffs.get(t).ok_or(Error::Timestep { t, steps: self.coeffs.len().saturating_sub(1) })?;
        Ok(x.map(|v| c * v))
    }
}

/// Exact noise predictor for i.i.d. `N(0, σ²)` pixels:
/// `ε̂ = √(1−ᾱ_t)·x / (ᾱ_t σ² + 1 − ᾱ_t)`.
#[derive(Debug, Clone)]
pub struct GaussianToyModel {
    sigma2: f64,
    sched: DiffusionSchedule,
}

impl GaussianToyModel {
    pub fn new(sigma: f64, sched: &DiffusionSchedule) -> Self {
        GaussianToyModel { sigma2: sigma * sigma, sched: sched.clone() }
    }

    /// The equivalent per-step linear coefficients.
    pub fn coeffs(&self) -> Vec<f64> {
        self.sched.alpha_bars().iter().map(|&ab| (1.0 - ab).sqrt() / (ab * self.sigma2 + 1.0 - ab)).collect()
    }
}

impl ScoreModel for GaussianToyModel {
    fn predict_noise(&self, x: &Field, t: usize, _cond: Option<&RgbImage>) -> Result<Field> {
        let ab = self.sched.alpha_bar(t)?;
        let c = (1.0 - ab).sqrt() / (ab * self.sigma2 + 1.0 - ab);
        Ok(x.map(|v| c * v))
    }
}

fn predict(model: &dyn ScoreModel, x: &Field, t: usize, cond: Option<&RgbImage>) -> Result<Field> {
    let eps = model.predict_noise(x, t, cond)?;
    if eps.dims() != x.dims() {
        return Err(Error::Prior(format!("model returned {:?} for a {:?} state", eps.dims(), x.dims())));
    }
    Ok(eps)
}

/// Runs the DDIM recursion upward from `x0` to step `t_inv`. The noise at
/// step t+1 is approximated by the prediction at step t.
pub fn ddim_invert(x0: &Field, t_inv: usize, model: &dyn ScoreModel, sched: &DiffusionSchedule) -> Result<Field> {
    if t_inv > sched.steps() {
        return Err(Error::Timestep { t: t_inv, steps: sched.steps() });
    }
    let mut x = x0.clone();
    for t in 0..t_inv {
        let eps = predict(model, &x, t, None)?;
        x = ddim_move(&x, &eps, t, t + 1, sched)?;
    }
    Ok(x)
}

/// Deterministic DDIM steps from `t_start` down to 0.
pub fn ddim_denoise(
    x_t: &Field,
    t_start: usize,
    model: &dyn ScoreModel,
    cond: Option<&RgbImage>,
    sched: &DiffusionSchedule,
) -> Result<Field> {
    if t_start > sched.steps() {
        return Err(Error::Timestep { t: t_start, steps: sched.steps() });
    }
    let mut x = x_t.clone();
    for t in (1..=t_start).rev() {
        let eps = predict(model, &x, t, cond)?;
        x = ddim_step(&x, &eps, t, sched)?;
    }
    Ok(x)
}
