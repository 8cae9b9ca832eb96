use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use scene_inpaint::agdd::AgddConfig;
use scene_inpaint::config::PipelineConfig;
use scene_inpaint::pipeline::{self, Layout, RunOptions, StageStatus};
use scene_inpaint::synth::{CameraSpec, Role, SceneSpec};
use scene_inpaint::{io, Error};

fn dataset() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        pipeline::cmd_synth(&SceneSpec::default_ring(), tmp.path()).unwrap();
        tmp
    })
    .path()
}

fn config(out: &Path) -> PipelineConfig {
    PipelineConfig { dataset: dataset().into(), output: out.into(), ..Default::default() }
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

#[test]
fn synth_writes_a_complete_dataset_and_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let views = pipeline::cmd_synth(&SceneSpec::default_ring(), tmp.path()).unwrap();
    assert_eq!(views.len(), 8);
    for dir in ["depth", "depth_incomplete"] {
        assert_eq!(files_under(&tmp.path().join(dir)).len(), 8);
    }
    for dir in ["masks", "gt_unseen", "rgb", "rgb_clean"] {
        assert_eq!(files_under(&tmp.path().join(dir)).len(), 8);
    }
    assert_eq!(io::cameras_read(tmp.path().join("cameras.json")).unwrap().len(), 8);

    let files = files_under(tmp.path());
    let before: Vec<Vec<u8>> = files.iter().map(|p| std::fs::read(p).unwrap()).collect();
    pipeline::cmd_synth(&SceneSpec::default_ring(), tmp.path()).unwrap();
    let after: Vec<Vec<u8>> = files.iter().map(|p| std::fs::read(p).unwrap()).collect();
    assert!(before == after);
}

#[test]
fn scene_without_an_object_is_rejected() {
    let mut scene = SceneSpec::default_ring();
    scene.primitives.retain(|p| p.role != Role::Object);
    let tmp = tempfile::tempdir().unwrap();
    let e = pipeline::cmd_synth(&scene, tmp.path()).unwrap_err();
    assert!(matches!(e, Error::Scene(_)));
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn fresh_run_then_cache_then_force() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path());
    let ran = pipeline::cmd_pipeline(&cfg, RunOptions::default()).unwrap();
    assert!(ran.iter().all(|(_, s)| *s == StageStatus::Ran));
    assert_eq!(ran.iter().map(|(n, _)| *n).collect::<Vec<_>>(), pipeline::STAGES);

    let lay = Layout::new(tmp.path());
    let id = &io::cameras_read(dataset().join("cameras.json")).unwrap()[0].id;
    for p in [lay.unseen_mask(id), lay.aligned(id), lay.points(id), lay.report()] {
        assert!(p.exists(), "{} missing", p.display());
    }

    let again = pipeline::cmd_pipeline(&cfg, RunOptions::default()).unwrap();
    assert!(again.iter().all(|(_, s)| *s == StageStatus::Cached));
    let forced = pipeline::cmd_pipeline(&cfg, RunOptions { force: true }).unwrap();
    assert!(forced.iter().all(|(_, s)| *s == StageStatus::Ran));

    // The loss falls by an order of magnitude over the run.
    let csv = std::fs::read_to_string(lay.loss_trace()).unwrap();
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), cfg.agdd.steps);
    assert!(rows.last().unwrap()[2] < 0.1 * rows[0][1]);
}

#[test]
fn corrupt_guide_depth_fails_in_align() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path());
    pipeline::cmd_unseen(&cfg, RunOptions::default()).unwrap();
    let id = io::cameras_read(dataset().join("cameras.json")).unwrap()[0].id.clone();
    std::fs::write(Layout::new(tmp.path()).guide_depth(&id), b"Pf\n128 128\n-1.0\n").unwrap();
    let e = pipeline::cmd_pipeline(&cfg, RunOptions::default()).unwrap_err();
    match &e {
        Error::Stage { stage, source } => {
            assert_eq!(*stage, "align");
            assert!(matches!(**source, Error::Parse(_)), "{source}");
        }
        other => panic!("unexpected {other}"),
    }
    assert_eq!(e.exit_code(), 3);
}

#[test]
fn external_masks_are_copied_verbatim() {
    let tmp = tempfile::tempdir().unwrap();
    let ext = tmp.path().join("ext");
    std::fs::create_dir_all(&ext).unwrap();
    let views = io::cameras_read(dataset().join("cameras.json")).unwrap();
    for v in &views {
        std::fs::copy(dataset().join("gt_unseen").join(format!("{}.pgm", v.id)), ext.join(format!("{}.pgm", v.id))).unwrap();
    }
    let cfg = PipelineConfig { external_masks: Some(ext.clone()), ..config(&tmp.path().join("out")) };
    pipeline::cmd_unseen(&cfg, RunOptions::default()).unwrap();
    let lay = Layout::new(&cfg.output);
    for v in &views {
        let want = std::fs::read(ext.join(format!("{}.pgm", v.id))).unwrap();
        assert_eq!(std::fs::read(lay.unseen_mask(&v.id)).unwrap(), want);
    }
}

#[test]
fn single_view_unseen_is_the_removal_region() {
    let tmp = tempfile::tempdir().unwrap();
    let mut scene = SceneSpec::default_ring();
    if let CameraSpec::Ring { count, .. } = &mut scene.cameras {
        *count = 1;
    }
    let data = tmp.path().join("data");
    let views = pipeline::cmd_synth(&scene, &data).unwrap();
    let cfg = PipelineConfig { dataset: data.clone(), output: tmp.path().join("out"), ..Default::default() };
    pipeline::cmd_unseen(&cfg, RunOptions::default()).unwrap();
    let id = &views[0].id;
    let removal = io::pgm_read_mask(tmp.path().join("out/unseen/removal").join(format!("{id}.pgm"))).unwrap();
    let unseen = io::pgm_read_mask(Layout::new(&cfg.output).unseen_mask(id)).unwrap();
    // With nothing else to look from, every removed pixel stays hidden.
    assert!(!removal.is_empty());
    assert_eq!(unseen, removal);
}

#[test]
fn zero_step_size_aligned_equals_unguided() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig { agdd: AgddConfig { alpha: 0.0, ..Default::default() }, ..config(tmp.path()) };
    pipeline::cmd_unseen(&cfg, RunOptions::default()).unwrap();
    pipeline::cmd_align(&cfg, RunOptions::default()).unwrap();
    let id = &io::cameras_read(dataset().join("cameras.json")).unwrap()[0].id;
    let lay = Layout::new(tmp.path());
    assert_eq!(std::fs::read(lay.aligned(id)).unwrap(), std::fs::read(lay.unguided(id)).unwrap());
}

fn cli(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_scene-inpaint")).args(args).output().unwrap();
    out.status.code().unwrap()
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, br#"{"theta": 2.0}"#).unwrap();
    assert_eq!(cli(&["unseen", "--config", bad.to_str().unwrap()]), 2);
    std::fs::write(&bad, b"{ not json").unwrap();
    assert_eq!(cli(&["pipeline", "--config", bad.to_str().unwrap()]), 2);
    assert_eq!(cli(&["align", "--bogus-flag"]), 2);

    let missing = tmp.path().join("missing.json");
    let cfg = PipelineConfig { dataset: tmp.path().join("nowhere"), output: tmp.path().join("out"), ..Default::default() };
    std::fs::write(&missing, cfg.to_json()).unwrap();
    assert_eq!(cli(&["unseen", "--config", missing.to_str().unwrap()]), 3);

    let out = tmp.path().join("synth");
    assert_eq!(cli(&["synth", "--out", out.to_str().unwrap()]), 0);
    assert!(out.join("cameras.json").exists());
}
