//! Round-trips depth, masks, colors and points through the on-disk formats.

use scene_inpaint::io;
use scene_inpaint::synth::{self, SceneSpec};
use scene_inpaint::unproject::{Point, PointSet};

fn main() -> scene_inpaint::Result<()> {
    let scene = SceneSpec::default_ring();
    let v = &scene.views()?[0];
    let depth = synth::render_depth(v, &scene, true);
    let mask = synth::object_mask(v, &scene);
    let rgb = synth::render_rgb(v, &scene, true);

    let pfm = io::encode_pfm(&depth);
    println!("PFM {} bytes, bit exact: {}", pfm.len(), io::decode_pfm(&pfm)? == depth);
    let gray = io::mask_to_gray(&mask);
    let pgm = io::encode_pgm(&gray);
    println!("PGM {} bytes, exact: {}", pgm.len(), io::decode_pgm(&pgm)? == gray);
    let ppm = io::encode_ppm(&rgb);
    println!("PPM {} bytes, exact: {}", ppm.len(), io::decode_ppm(&ppm)? == rgb);

    let set = PointSet::from_points(vec![Point { position: [1.0 / 3.0, -2.5e-7, 1234.5678], color: [255, 128, 0] }]);
    let ply = io::encode_ply(&set);
    print!("{}", String::from_utf8_lossy(&ply));

    match io::decode_pfm(b"Pf\n4 4\n-1.0\n") {
        Err(e) => println!("truncated PFM: {e}"),
        Ok(_) => println!("truncated PFM unexpectedly decoded"),
    }
    Ok(())
}
