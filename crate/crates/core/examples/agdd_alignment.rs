//! Aligns a scaled and shifted depth prior to incomplete depth with outliers,
//! comparing the adaptive guidance with plain L2 guidance and a global scale-shift fit.

use scene_inpaint::agdd::{self, AgddConfig, OraclePrior};
use scene_inpaint::metrics;
use scene_inpaint::synth::{self, SceneSpec};

fn main() -> scene_inpaint::Result<()> {
    let scene = SceneSpec::default_ring();
    let views = scene.views()?;
    let v = &views[0];
    let truth = synth::render_depth(v, &scene, false);
    let u = synth::gt_unseen(v, &views, &scene);
    // Every tenth guide pixel is pushed far back, as a stray depth estimate would be.
    let clean_guide = truth.without(&u)?;
    let mut k = 0;
    let d_guide = scene_inpaint::DepthMap::from_field_clamped(&clean_guide.grid().map(|&d| {
        k += (d > 0.0) as usize;
        if d > 0.0 && k % 10 == 0 { 3.0 * d as f64 } else { d as f64 }
    }));

    let cfg = AgddConfig::default();
    let sched = cfg.schedule()?;
    let (_, params) = agdd::normalize_depth(&d_guide)?;
    let seed = 7;
    let prior = OraclePrior::from_depth(&truth, &params).distortion(2.0, 0.5).build(&sched, seed)?;

    let hub = agdd::agdd_run(&prior, &d_guide, &u, &cfg, &sched, seed)?;
    let l2 = agdd::l2_guided_run(&prior, &d_guide, &u, &cfg, &sched, seed)?;
    let free = agdd::agdd_run(&prior, &d_guide, &u, &AgddConfig { alpha: 0.0, ..cfg.clone() }, &sched, seed)?;
    let fit = hub.guide.and(&free.depth.valid_mask())?;
    let (g, b, shifted) = agdd::scale_shift_align(&free.depth, &d_guide, &fit)?;

    println!("unseen {} px, guide {} px", u.count(), hub.guide.count());
    for (name, d) in [("unguided", &free.depth), ("scale-shift", &shifted), ("l2", &l2.depth), ("adaptive", &hub.depth)] {
        println!("{name:>12}: MAD on unseen {:.4}", metrics::mad(d, &truth, &u)?);
    }
    println!("scale-shift fit gamma {g:.3} beta {b:.3}");
    let (first, last) = (hub.trace.first().unwrap(), hub.trace.last().unwrap());
    println!("guidance loss {:.4} at t={} -> {:.6} at t={}", first.initial_loss, first.t, last.final_loss, last.t);
    Ok(())
}
