//! Inverts a field to the SDEdit timestep and denoises it back with the exact
//! Gaussian score model, for a few step counts.

use scene_inpaint::ddim::{self, DiffusionSchedule, GaussianToyModel, SdeditParams};
use scene_inpaint::Grid;

fn main() -> scene_inpaint::Result<()> {
    let x0 = Grid::from_fn(32, 32, |x, y| ((x as f64 * 0.3).sin() + (y as f64 * 0.2).cos()) * 0.7);
    for steps in [25, 50, 100, 200, 1000] {
        let params = SdeditParams { total_steps: steps, strength: 0.85 };
        let t_inv = params.t_inv()?;
        let sched = DiffusionSchedule::strided(1000, 1e-4, 2e-2, steps)?;
        let model = GaussianToyModel::new(1.0, &sched);
        let xt = ddim::ddim_invert(&x0, t_inv, &model, &sched)?;
        let back = ddim::ddim_denoise(&xt, t_inv, &model, None, &sched)?;
        let err = back.data().iter().zip(x0.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("T = {steps:>4}  t_inv = {t_inv:>3}  max round-trip error {err:.2e}");
    }
    Ok(())
}
