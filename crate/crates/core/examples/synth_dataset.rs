//! Renders the default ring scene and prints per-view mask sizes.
//!
//! cargo run --release --example synth_dataset -- /tmp/ring

use std::path::PathBuf;

use scene_inpaint::synth::{self, SceneSpec};

fn main() -> scene_inpaint::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("ring"));
    let scene = SceneSpec::default_ring();
    let views = synth::write_dataset(&scene, &out)?;
    for v in &views {
        let obj = synth::object_mask(v, &scene);
        let hidden = synth::gt_unseen(v, &views, &scene);
        println!("{:>8}  object {:>5} px  never seen {:>4} px", v.id, obj.count(), hidden.count());
    }
    println!("wrote {} views to {}", views.len(), out.display());
    Ok(())
}
