//! Lifts the true hidden ground under the box into world points and writes them as PLY.

use scene_inpaint::synth::{self, SceneSpec};
use scene_inpaint::unproject;

fn main() -> scene_inpaint::Result<()> {
    let scene = SceneSpec::default_ring();
    let views = scene.views()?;
    let v = &views[0];
    let depth = synth::render_depth(v, &scene, false);
    let rgb = synth::render_rgb(v, &scene, false);
    let u = synth::gt_unseen(v, &views, &scene);
    let pts = unproject::init_points(&rgb, &depth, &u, &v.intrinsics, &v.pose)?;

    // The hidden region is ground, so every point should sit on z = 0.
    let worst = pts.iter().map(|p| p.position[2].abs()).fold(0.0, f64::max);
    println!("{} points, max |z| {worst:.2e}", pts.len());
    let path = std::env::temp_dir().join("unseen_points.ply");
    unproject::export_ply(&pts, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
