//! Runs the full staged pipeline on a fresh synthetic dataset and prints the
//! aggregate metrics from the report.

use scene_inpaint::config::PipelineConfig;
use scene_inpaint::pipeline::{self, RunOptions};
use scene_inpaint::synth::SceneSpec;

fn main() -> scene_inpaint::Result<()> {
    let root = std::env::temp_dir().join("scene_inpaint_eval");
    let dataset = root.join("dataset");
    pipeline::cmd_synth(&SceneSpec::default_ring(), &dataset)?;
    // Clean renders stand in for predictions, so PSNR hits its cap.
    let cfg = PipelineConfig {
        dataset: dataset.clone(),
        output: root.join("out"),
        eval: scene_inpaint::config::EvalConfig { predictions: Some(dataset.join("rgb_clean")) },
        ..Default::default()
    };
    for (stage, status) in pipeline::cmd_pipeline(&cfg, RunOptions::default())? {
        println!("{stage:>10}: {status:?}");
    }
    let lay = pipeline::Layout::new(&cfg.output);
    let ds = pipeline::Dataset::open(&dataset)?;
    let report = pipeline::evaluate(&cfg, &ds, &lay)?;
    for a in &report.aggregate {
        println!("{:>16} [{:>7}] {:>10.4} over {} px", a.metric, a.mask, a.value, a.pixels);
    }
    Ok(())
}
