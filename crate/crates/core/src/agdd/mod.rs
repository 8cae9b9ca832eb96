//! Adaptive guided depth diffusion.
//!
//! A depth prior denoises from pure noise toward a depth map of the scene.
//! At every timestep its noise estimate is refined by gradient steps on a
//! Huber loss against the incomplete depth over a guide region around the
//! unseen mask, so the generated depth agrees with its surroundings while the
//! unseen interior is filled by the prior.

mod oracle;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use crate::diffusion::{predicted_clean, DiffusionSchedule};
pub use oracle::{ramp_bias, OracleBuilder, OraclePrior, TentFamily};

use crate::diffusion::ddim_step;
use crate::error::{Error, Result};
use crate::grid::{check_dims, BinaryMask, DepthMap, Field, Grid, RgbImage};
use crate::morphology;
use crate::warpmask::BBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuideRegionMode {
    /// Bounding box of U grown by the margin, minus U.
    #[default]
    BboxMinusU,
    /// U dilated by the margin, minus U.
    DilateMinusU,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgddConfig {
    pub alpha: f64,
    pub inner_iters: usize,
    /// Huber threshold in normalized depth units.
    pub delta: f64,
    pub bbox_margin: usize,
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub seed: u64,
    pub guide_region_mode: GuideRegionMode,
}

impl Default for AgddConfig {
    fn default() -> Self {
        AgddConfig {
            alpha: 1.0,
            inner_iters: 8,
            delta: 0.1,
            bbox_margin: 16,
            steps: 50,
            beta_start: 1e-4,
            beta_end: 2e-2,
            seed: 0,
            guide_region_mode: GuideRegionMode::BboxMinusU,
        }
    }
}

impl AgddConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("agdd: {m}")));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be a finite value >= 0");
        }
        if self.inner_iters == 0 {
            return bad("inner_iters must be >= 1");
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad("delta must be > 0");
        }
        if self.steps == 0 {
            return bad("steps must be >= 1");
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<DiffusionSchedule> {
        DiffusionSchedule::linear(self.steps, self.beta_start, self.beta_end)
    }
}

/// Affine map between raw depth and the prior's [-1, 1] range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    /// Raw depth mapped to -1.
    pub lo: f64,
    /// Raw depth mapped to +1.
    pub hi: f64,
}

impl NormalizationParams {
    pub fn normalize(&self, raw: f64) -> f64 {
        2.0 * (raw - self.lo) / (self.hi - self.lo) - 1.0
    }

    pub fn unnormalize(&self, n: f64) -> f64 {
        self.lo + (n + 1.0) * (self.hi - self.lo) / 2.0
    }

    /// Clamped normalized field; invalid pixels become 0.
    pub fn apply(&self, d: &DepthMap) -> Field {
        d.grid().map(|&v| if v > 0.0 { self.normalize(v as f64).clamp(-1.0, 1.0) } else { 0.0 })
    }
}

/// Linear-interpolation percentile of sorted data, `p` in [0, 100].
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + f * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Sends the 2nd and 98th percentiles of valid depth to -1 and +1 and clamps.
pub fn normalize_depth(d: &DepthMap) -> Result<(Field, NormalizationParams)> {
    let mut valid: Vec<f64> = d.grid().data().iter().filter(|&&v| v > 0.0).map(|&v| v as f64).collect();
    if valid.is_empty() {
        return Err(Error::DegenerateDepth("no valid depth".into()));
    }
    valid.sort_by(f64::total_cmp);
    let (lo, hi) = (percentile(&valid, 2.0), percentile(&valid, 98.0));
    if !(hi > lo) {
        return Err(Error::DegenerateDepth(format!("2nd and 98th percentiles coincide at {lo}")));
    }
    let params = NormalizationParams { lo, hi };
    Ok((params.apply(d), params))
}

/// Pixels inside `b` and outside `u`.
pub fn guide_mask(u: &BinaryMask, b: &BBox) -> BinaryMask {
    BinaryMask::from_fn(u.width(), u.height(), |x, y| b.contains(x, y) && !u.at(x, y))
}

/// Guide region for a non-empty unseen mask.
pub fn guide_region(u: &BinaryMask, margin: usize, mode: GuideRegionMode) -> Result<BinaryMask> {
    let b = BBox::of(u).ok_or(Error::EmptyMask)?;
    Ok(match mode {
        GuideRegionMode::BboxMinusU => guide_mask(u, &b.expand(margin, u.width(), u.height())),
        GuideRegionMode::DilateMinusU => morphology::dilate(u, margin).minus(u)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Quadratic below the threshold, linear above.
    Adaptive,
    /// Plain ½r².
    L2,
}

/// Huber loss summed over the guide mask and its gradient in `d_est`.
pub fn adaptive_loss(d_est: &Field, d_inc: &Field, m_guide: &BinaryMask, delta: f64) -> Result<(f64, Field)> {
    guidance_loss(LossKind::Adaptive, d_est, d_inc, m_guide, delta)
}

pub fn l2_loss(d_est: &Field, d_inc: &Field, m_guide: &BinaryMask) -> Result<(f64, Field)> {
    guidance_loss(LossKind::L2, d_est, d_inc, m_guide, f64::INFINITY)
}

pub fn guidance_loss(kind: LossKind, d_est: &Field, d_inc: &Field, m_guide: &BinaryMask, delta: f64) -> Result<(f64, Field)> {
    d_est.check_same(d_inc)?;
    d_est.check_same(m_guide.grid())?;
    if !(delta > 0.0) {
        return Err(Error::Config(format!("delta must be > 0, got {delta}")));
    }
    let mut loss = 0.0;
    let mut grad = Grid::filled(d_est.width(), d_est.height(), 0.0);
    for (i, ((&e, &g), &m)) in d_est.data().iter().zip(d_inc.data()).zip(m_guide.grid().data()).enumerate() {
        if !m {
            continue;
        }
        let r = e - g;
        let (l, dl) = match kind {
            LossKind::Adaptive if r.abs() >= delta => (delta * r.abs() - 0.5 * delta * delta, delta * r.signum()),
            _ => (0.5 * r * r, r),
        };
        loss += l;
        grad.data_mut()[i] = dl;
    }
    Ok((loss, grad))
}

/// Diffusion prior over normalized depth.
pub trait DepthPrior: Sync {
    /// Noise estimate for state `d_t` at step `t`; must preserve shape.
    fn predict_noise(&self, d_t: &Field, t: usize, cond: Option<&RgbImage>) -> Result<Field>;

    fn decode(&self, clean: &Field) -> Result<Field> {
        Ok(clean.clone())
    }

    /// Vector-Jacobian product of [`DepthPrior::decode`] at `clean`.
    fn decode_vjp(&self, _clean: &Field, upstream: &Field) -> Result<Field> {
        Ok(upstream.clone())
    }
}

/// Losses seen during one outer step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepTrace {
    pub t: usize,
    /// Loss of the prior's unrefined estimate.
    pub initial_loss: f64,
    /// Loss after the last inner update.
    pub final_loss: f64,
}

/// Everything one guided step needs besides the state.
pub struct Guidance<'a> {
    pub d_inc: &'a Field,
    pub guide: &'a BinaryMask,
    pub loss: LossKind,
    pub cond: Option<&'a RgbImage>,
}

fn shape_checked(out: Field, like: &Field) -> Result<Field> {
    if out.dims() != like.dims() {
        return Err(Error::Prior(format!("prior returned {:?} for a {:?} state", out.dims(), like.dims())));
    }
    Ok(out)
}

/// One outer step `t → t−1` with `cfg.inner_iters` refinements of the noise estimate.
pub fn guided_step(
    d_t: &Field,
    t: usize,
    prior: &dyn DepthPrior,
    g: &Guidance<'_>,
    cfg: &AgddConfig,
    sched: &DiffusionSchedule,
) -> Result<(Field, StepTrace)> {
    let ab = sched.alpha_bar(t)?;
    let chain = -(1.0 - ab).sqrt() / ab.sqrt();
    let mut eps = shape_checked(prior.predict_noise(d_t, t, g.cond)?, d_t)?;

    let eval = |eps: &Field| -> Result<(f64, Field, Field)> {
        let clean = predicted_clean(d_t, eps, t, sched)?;
        let decoded = prior.decode(&clean)?;
        let (l, grad) = guidance_loss(g.loss, &decoded, g.d_inc, g.guide, cfg.delta)?;
        Ok((l, grad, clean))
    };

    let mut initial = None;
    for _ in 0..cfg.inner_iters {
        let (l, grad, clean) = eval(&eps)?;
        initial.get_or_insert(l);
        if cfg.alpha == 0.0 {
            break;
        }
        let upstream = prior.decode_vjp(&clean, &grad)?;
        for (e, u) in eps.data_mut().iter_mut().zip(upstream.data()) {
            *e -= cfg.alpha * chain * u;
        }
    }
    let (final_loss, _, _) = eval(&eps)?;
    let next = ddim_step(d_t, &eps, t, sched)?;
    Ok((next, StepTrace { t, initial_loss: initial.unwrap_or(final_loss), final_loss }))
}

/// Adaptive-loss step on normalized fields.
#[allow(clippy::too_many_arguments)]
pub fn agdd_step(
    d_t: &Field,
    t: usize,
    prior: &dyn DepthPrior,
    d_inc_normalized: &Field,
    m_guide: &BinaryMask,
    cfg: &AgddConfig,
    sched: &DiffusionSchedule,
    cond: Option<&RgbImage>,
) -> Result<(Field, StepTrace)> {
    let g = Guidance { d_inc: d_inc_normalized, guide: m_guide, loss: LossKind::Adaptive, cond };
    guided_step(d_t, t, prior, &g, cfg, sched)
}

/// Unit Gaussian field drawn row-major from a ChaCha8 stream.
pub fn initial_noise(width: usize, height: usize, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Grid::from_fn(width, height, |_, _| StandardNormal.sample(&mut rng))
}

#[derive(Debug, Clone)]
pub struct AgddOutput {
    /// Decoded, unnormalized depth; non-positive values are marked invalid.
    pub depth: DepthMap,
    pub normalized: Field,
    pub params: NormalizationParams,
    pub guide: BinaryMask,
    pub trace: Vec<StepTrace>,
}

/// Inputs of one alignment run.
pub struct RunInputs<'a> {
    pub d_incomplete: &'a DepthMap,
    pub unseen: &'a BinaryMask,
    pub cond: Option<&'a RgbImage>,
}

pub fn run_guided(
    prior: &dyn DepthPrior,
    inputs: &RunInputs<'_>,
    loss: LossKind,
    cfg: &AgddConfig,
    sched: &DiffusionSchedule,
    seed: u64,
) -> Result<AgddOutput> {
    cfg.validate()?;
    check_dims(inputs.d_incomplete.dims(), inputs.unseen.dims())?;
    if inputs.unseen.is_empty() {
        return Err(Error::EmptyMask);
    }
    let (d_inc, params) = normalize_depth(inputs.d_incomplete)?;
    let guide = guide_region(inputs.unseen, cfg.bbox_margin, cfg.guide_region_mode)?.and(&inputs.d_incomplete.valid_mask())?;
    let (w, h) = inputs.d_incomplete.dims();
    let g = Guidance { d_inc: &d_inc, guide: &guide, loss, cond: inputs.cond };

    let mut d = initial_noise(w, h, seed);
    let mut trace = Vec::with_capacity(sched.steps());
    for t in (1..=sched.steps()).rev() {
        let (next, rec) = guided_step(&d, t, prior, &g, cfg, sched)?;
        d = next;
        trace.push(rec);
    }
    let normalized = shape_checked(prior.decode(&d)?, &d)?;
    let depth = DepthMap::from_field_clamped(&normalized.map(|&n| params.unnormalize(n)));
    Ok(AgddOutput { depth, normalized, params, guide, trace })
}

/// Guided run with the adaptive loss, from `seed`'s noise, over `T = sched.steps()` steps.
pub fn agdd_run(
    prior: &dyn DepthPrior,
    d_incomplete: &DepthMap,
    u: &BinaryMask,
    cfg: &AgddConfig,
    sched: &DiffusionSchedule,
    seed: u64,
) -> Result<AgddOutput> {
    run_guided(prior, &RunInputs { d_incomplete, unseen: u, cond: None }, LossKind::Adaptive, cfg, sched, seed)
}

/// Same loop as [`agdd_run`] with a plain quadratic loss.
pub fn l2_guided_run(
    prior: &dyn DepthPrior,
    d_incomplete: &DepthMap,
    u: &BinaryMask,
    cfg: &AgddConfig,
    sched: &DiffusionSchedule,
    seed: u64,
) -> Result<AgddOutput> {
    run_guided(prior, &RunInputs { d_incomplete, unseen: u, cond: None }, LossKind::L2, cfg, sched, seed)
}

/// Least-squares `(γ, β)` minimizing Σ (γ·d_est + β − d_inc)² over `mask`;
/// returns them with the aligned map (invalid `d_est` pixels stay invalid).
pub fn scale_shift_align(d_est: &DepthMap, d_inc: &DepthMap, mask: &BinaryMask) -> Result<(f64, f64, DepthMap)> {
    check_dims(d_est.dims(), d_inc.dims())?;
    check_dims(d_est.dims(), mask.dims())?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (x, y) in mask.pixels() {
        if !d_est.is_valid(x, y) || !d_inc.is_valid(x, y) {
            return Err(Error::InvalidDepthOnMask(x, y));
        }
        xs.push(d_est.at(x, y) as f64);
        ys.push(d_inc.at(x, y) as f64);
    }
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::Singular(format!("{} masked pixel(s)", xs.len())));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 1e-12 * xs.iter().map(|x| x * x).sum::<f64>()) {
        return Err(Error::Singular("estimate is constant on the mask".into()));
    }
    let gamma = sxy / sxx;
    let beta = my - gamma * mx;
    let aligned = d_est.grid().map(|&v| if v > 0.0 { gamma * v as f64 + beta } else { 0.0 });
    Ok((gamma, beta, DepthMap::from_field_clamped(&aligned)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(v: f64) -> Field {
        Grid::filled(1, 1, v)
    }

    #[test]
    fn huber_examples() {
        let m = BinaryMask::from_fn(1, 1, |_, _| true);
        let (l, g) = adaptive_loss(&single(0.5), &single(0.0), &m, 1.0).unwrap();
        assert_eq!((l, g[(0, 0)]), (0.125, 0.5));
        let (l, g) = adaptive_loss(&single(3.0), &single(0.0), &m, 1.0).unwrap();
        assert_eq!((l, g[(0, 0)]), (2.5, 1.0));
        let (l, g) = adaptive_loss(&single(-3.0), &single(0.0), &m, 1.0).unwrap();
        assert_eq!((l, g[(0, 0)]), (2.5, -1.0));
        let (l, g) = adaptive_loss(&single(7.0), &single(0.0), &BinaryMask::empty(1, 1), 1.0).unwrap();
        assert_eq!((l, g[(0, 0)]), (0.0, 0.0));
    }

    #[test]
    fn guide_mask_counts() {
        let b = BBox { x_min: 2, y_min: 2, x_max: 8, y_max: 8 };
        let u = BinaryMask::from_fn(12, 12, |x, y| (4..=6).contains(&x) && (4..=6).contains(&y));
        assert_eq!(guide_mask(&u, &b).count(), 40);
        let full = b.to_mask(12, 12);
        assert!(guide_mask(&full, &b).is_empty());
        assert_eq!(guide_mask(&BinaryMask::empty(12, 12), &b), full);
    }

    #[test]
    fn dilate_mode_is_ring() {
        let mut u = BinaryMask::empty(9, 9);
        u.set(4, 4, true);
        let g = guide_region(&u, 1, GuideRegionMode::DilateMinusU).unwrap();
        assert_eq!(g.count(), 4);
        assert!(guide_region(&BinaryMask::empty(3, 3), 1, GuideRegionMode::BboxMinusU).is_err());
    }

    #[test]
    fn two_value_depth_normalizes_exactly() {
        let d = DepthMap::new(Grid::from_fn(10, 10, |x, _| if x < 5 { 1.0 } else { 3.0 })).unwrap();
        let (n, p) = normalize_depth(&d).unwrap();
        assert_eq!((p.lo, p.hi), (1.0, 3.0));
        assert_eq!(n[(0, 0)], -1.0);
        assert_eq!(n[(9, 0)], 1.0);
    }

    #[test]
    fn constant_depth_is_degenerate() {
        let d = DepthMap::new(Grid::filled(4, 4, 2.0)).unwrap();
        assert!(matches!(normalize_depth(&d), Err(Error::DegenerateDepth(_))));
        assert!(matches!(normalize_depth(&DepthMap::zeros(2, 2)), Err(Error::DegenerateDepth(_))));
    }

    #[test]
    fn scale_shift_singular() {
        let d = DepthMap::new(Grid::filled(3, 3, 2.0)).unwrap();
        let m = BinaryMask::from_fn(3, 3, |_, _| true);
        assert!(matches!(scale_shift_align(&d, &d, &m), Err(Error::Singular(_))));
    }

    #[test]
    fn noise_is_seeded() {
        assert_eq!(initial_noise(5, 4, 7), initial_noise(5, 4, 7));
        assert_ne!(initial_noise(5, 4, 7), initial_noise(5, 4, 8));
    }
}
