//! Warps every view's removal region into view 0 and compares the voted
//! unseen mask with the analytic one.

use scene_inpaint::metrics;
use scene_inpaint::synth::{self, SceneSpec};
use scene_inpaint::warpmask::{self, VoteAverage};
use scene_inpaint::relative_transform;

fn main() -> scene_inpaint::Result<()> {
    let scene = SceneSpec::default_ring();
    let views = scene.views()?;
    let removals = views
        .iter()
        .map(|v| {
            let full = synth::render_depth(v, &scene, true);
            let inc = synth::render_depth(v, &scene, false);
            warpmask::removal_region(&full, &inc, warpmask::default_eps_d(&full)?)
        })
        .collect::<scene_inpaint::Result<Vec<_>>>()?;

    let vn = &views[0];
    let d_inc = synth::render_depth(vn, &scene, false);
    let traversals = views
        .iter()
        .zip(&removals)
        .map(|(vi, r)| warpmask::traverse_removal_detailed(r, &d_inc, &relative_transform(&vn.pose, &vi.pose), &vn.intrinsics, &vi.intrinsics))
        .collect::<scene_inpaint::Result<Vec<_>>>()?;
    let votes = warpmask::mean_votes(&traversals, VoteAverage::AllViews)?;

    for theta in [0.5, 0.8, 0.95, 1.0] {
        let contour = warpmask::threshold_contour(&votes, &removals[0], theta)?;
        let bbox = warpmask::bbox_prompt(&contour, 0)?;
        let unseen = warpmask::refine_unseen_fallback(&votes, &removals[0], &bbox, theta, 2)?;
        let iou = metrics::iou(&unseen, &synth::gt_unseen(vn, &views, &scene))?;
        println!("theta {theta:.2}: contour {:>4} px, bbox {:?}, IoU {iou:.3}", contour.count(), bbox.to_array());
    }
    Ok(())
}
