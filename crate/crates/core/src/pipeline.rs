//! Staged workflow behind the command line: unseen masks, depth alignment,
//! point lifting and evaluation, each cached under the output directory by a
//! content hash of its inputs and configuration.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::agdd::{self, AgddConfig, OraclePrior};
use crate::camera::{relative_transform, View};
use crate::config::{PipelineConfig, PriorKind};
use crate::error::{Error, Result};
use crate::grid::{check_dims, BinaryMask, DepthMap, RgbImage};
use crate::io;
use crate::metrics::{self, MetricReport};
use crate::synth::{self, SceneSpec};
use crate::unproject;
use crate::warpmask::{self, VoteGrid};

pub const STAGES: [&str; 4] = ["unseen", "align", "unproject", "eval"];
const KEY_FILE: &str = "stage.key";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    Cached,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Recompute even when the cache key matches.
    pub force: bool,
}

/// Reads a scene description; malformed JSON is a scene error.
pub fn load_scene(path: impl AsRef<Path>) -> Result<SceneSpec> {
    let path = path.as_ref();
    let bytes = io::read_file(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Scene(format!("{}: {e}", path.display())))
}

/// Renders `scene` into `out_dir`; rerunning with the same scene rewrites identical bytes.
pub fn cmd_synth(scene: &SceneSpec, out_dir: &Path) -> Result<Vec<View>> {
    let views = synth::write_dataset(scene, out_dir)?;
    log::info!("synth: wrote {} views to {}", views.len(), out_dir.display());
    Ok(views)
}

/// Runs `f` on a pool of `workers` threads (all logical cores when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(f)
}

/// Dataset directory as written by [`cmd_synth`].
pub struct Dataset {
    pub root: PathBuf,
    pub views: Vec<View>,
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Self> {
        let cams = root.join("cameras.json");
        require(&cams)?;
        let views = io::cameras_read(&cams)?;
        if views.is_empty() {
            return Err(Error::Config(format!("{} lists no views", cams.display())));
        }
        Ok(Dataset { root: root.to_path_buf(), views })
    }

    pub fn path(&self, dir: &str, view: &View, ext: &str) -> PathBuf {
        self.root.join(dir).join(format!("{}.{ext}", view.id))
    }

    pub fn cameras(&self) -> PathBuf {
        self.root.join("cameras.json")
    }
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Missing(path.display().to_string()))
    }
}

fn read_depth(path: &Path, view: &View) -> Result<DepthMap> {
    require(path)?;
    let d = io::pfm_read(path)?;
    check_dims(view.intrinsics.dims(), d.dims())?;
    Ok(d)
}

fn read_mask(path: &Path, view: &View) -> Result<BinaryMask> {
    require(path)?;
    let m = io::pgm_read_mask(path)?;
    check_dims(view.intrinsics.dims(), m.dims())?;
    Ok(m)
}

fn read_rgb(path: &Path, view: &View) -> Result<RgbImage> {
    require(path)?;
    let c = io::ppm_read(path)?;
    check_dims(view.intrinsics.dims(), c.dims())?;
    Ok(c)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    bytes.push(b'\n');
    io::write_file(path, &bytes)
}

/// Content hash of a stage's configuration section and input files. Paths
/// are left out so that relocated datasets and output trees keep their keys.
fn stage_key(stage: &str, section: &impl Serialize, inputs: &[PathBuf]) -> Result<String> {
    let mut h = Sha256::new();
    h.update(stage.as_bytes());
    h.update(serde_json::to_vec(section).map_err(|e| Error::Internal(e.to_string()))?);
    for p in inputs {
        if p.exists() {
            let bytes = io::read_file(p)?;
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(&bytes);
        } else {
            h.update(b"absent");
        }
    }
    Ok(hex::encode(h.finalize()))
}

fn cached(dir: &Path, key: &str, outputs: &[PathBuf], opts: RunOptions) -> bool {
    !opts.force
        && std::fs::read_to_string(dir.join(KEY_FILE)).is_ok_and(|k| k.trim() == key)
        && outputs.iter().all(|p| p.exists())
}

fn finish(dir: &Path, key: &str) -> Result<StageStatus> {
    io::write_file(&dir.join(KEY_FILE), format!("{key}\n").as_bytes())?;
    Ok(StageStatus::Ran)
}

fn listed_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if dir.is_dir() {
        for e in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let p = e.map_err(|e| Error::io(dir, e))?.path();
            if p.extension().is_some_and(|x| x == ext) {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Output locations of the staged workflow.
pub struct Layout {
    pub out: PathBuf,
}

impl Layout {
    pub fn new(out: &Path) -> Self {
        Layout { out: out.to_path_buf() }
    }

    pub fn stage(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn unseen_mask(&self, id: &str) -> PathBuf {
        self.out.join("unseen").join(format!("{id}.pgm"))
    }

    /// Incomplete depth with the unseen mask zeroed, consumed by alignment.
    pub fn guide_depth(&self, id: &str) -> PathBuf {
        self.out.join("unseen").join("incomplete").join(format!("{id}.pfm"))
    }

    pub fn aligned(&self, id: &str) -> PathBuf {
        self.out.join("align").join(format!("aligned_{id}.pfm"))
    }

    pub fn unguided(&self, id: &str) -> PathBuf {
        self.out.join("align").join(format!("unguided_{id}.pfm"))
    }

    pub fn scale_shift(&self, id: &str) -> PathBuf {
        self.out.join("align").join(format!("scale_shift_{id}.pfm"))
    }

    pub fn loss_trace(&self) -> PathBuf {
        self.out.join("align").join("loss_trace.csv")
    }

    pub fn points(&self, id: &str) -> PathBuf {
        self.out.join("unproject").join(format!("points_{id}.ply"))
    }

    pub fn report(&self) -> PathBuf {
        self.out.join("eval").join("report.json")
    }
}

/// Per-view products of the unseen stage.
pub struct UnseenView {
    pub removal: BinaryMask,
    pub votes: VoteGrid,
    pub contour: BinaryMask,
    pub bbox: Option<warpmask::BBox>,
    pub unseen: BinaryMask,
    /// Raw bytes of an ingested external mask without gray levels.
    pub external: Option<Vec<u8>>,
}

#[derive(Serialize)]
struct UnseenSection {
    theta: f64,
    eps_d: Option<f64>,
    vote_average: warpmask::VoteAverage,
    bbox_padding: usize,
    close_radius: usize,
    external_masks: bool,
}

/// Removal regions, vote aggregation, bbox prompts and unseen masks for every view.
pub fn compute_unseen(cfg: &PipelineConfig, ds: &Dataset) -> Result<Vec<UnseenView>> {
    let depths: Vec<(DepthMap, DepthMap)> = ds
        .views
        .par_iter()
        .map(|v| Ok((read_depth(&ds.path("depth", v, "pfm"), v)?, read_depth(&ds.path("depth_incomplete", v, "pfm"), v)?)))
        .collect::<Result<_>>()?;
    let removals: Vec<BinaryMask> = depths
        .par_iter()
        .map(|(full, inc)| {
            let eps = match cfg.eps_d {
                Some(e) => e,
                None => warpmask::default_eps_d(full)?,
            };
            warpmask::removal_region(full, inc, eps)
        })
        .collect::<Result<_>>()?;

    ds.views
        .par_iter()
        .enumerate()
        .map(|(n, vn)| {
            let d_inc = &depths[n].1;
            let traversals = ds
                .views
                .iter()
                .zip(&removals)
                .map(|(vi, r_i)| {
                    let t = relative_transform(&vn.pose, &vi.pose);
                    warpmask::traverse_removal_detailed(r_i, d_inc, &t, &vn.intrinsics, &vi.intrinsics)
                })
                .collect::<Result<Vec<_>>>()?;
            let votes = warpmask::mean_votes(&traversals, cfg.vote_average)?;
            let r_n = removals[n].clone();
            let contour = warpmask::threshold_contour(&votes, &r_n, cfg.theta)?;
            if !contour.is_subset_of(&r_n) {
                return Err(Error::Internal(format!("view {}: contour leaves the removal region", vn.id)));
            }
            let bbox = if contour.is_empty() { None } else { Some(warpmask::bbox_prompt(&contour, cfg.bbox_padding)?) };

            let external_path = cfg.external_masks.as_ref().map(|d| d.join(format!("{}.pgm", vn.id)));
            let (unseen, external) = match external_path.filter(|p| p.exists()) {
                Some(p) => {
                    let (w, h) = vn.intrinsics.dims();
                    let ing = warpmask::ingest_external_mask(&p, w, h)?;
                    let raw = if ing.gray_pixels == 0 { Some(io::read_file(&p)?) } else { None };
                    (ing.mask, raw)
                }
                None => {
                    let u = match &bbox {
                        Some(b) => warpmask::refine_unseen_fallback(&votes, &r_n, b, cfg.theta, cfg.close_radius)?,
                        None => {
                            log::warn!("view {}: no pixel reached the vote threshold, unseen mask is empty", vn.id);
                            BinaryMask::empty(r_n.width(), r_n.height())
                        }
                    };
                    (u, None)
                }
            };
            Ok(UnseenView { removal: r_n, votes, contour, bbox, unseen, external })
        })
        .collect()
}

pub fn cmd_unseen(cfg: &PipelineConfig, opts: RunOptions) -> Result<StageStatus> {
    let ds = Dataset::open(&cfg.dataset)?;
    let lay = Layout::new(&cfg.output);
    let dir = lay.stage("unseen");
    let mut inputs = vec![ds.cameras()];
    for v in &ds.views {
        inputs.push(ds.path("depth", v, "pfm"));
        inputs.push(ds.path("depth_incomplete", v, "pfm"));
    }
    if let Some(ext) = &cfg.external_masks {
        inputs.extend(listed_files(ext, "pgm")?);
    }
    let section = UnseenSection {
        theta: cfg.theta,
        eps_d: cfg.eps_d,
        vote_average: cfg.vote_average,
        bbox_padding: cfg.bbox_padding,
        close_radius: cfg.close_radius,
        external_masks: cfg.external_masks.is_some(),
    };
    let key = stage_key("unseen", &section, &inputs)?;
    let outputs: Vec<PathBuf> = ds.views.iter().flat_map(|v| [lay.unseen_mask(&v.id), lay.guide_depth(&v.id)]).collect();
    if cached(&dir, &key, &outputs, opts) {
        log::info!("unseen: cached");
        return Ok(StageStatus::Cached);
    }

    let results = compute_unseen(cfg, &ds)?;
    for (v, r) in ds.views.iter().zip(&results) {
        let id = &v.id;
        io::pgm_write_mask(dir.join("removal").join(format!("{id}.pgm")), &r.removal)?;
        io::pgm_write_mask(dir.join("contour").join(format!("{id}.pgm")), &r.contour)?;
        io::pfm_write(dir.join("votes").join(format!("{id}.pfm")), &DepthMap::from_field_clamped(r.votes.field()))?;
        if let Some(b) = &r.bbox {
            warpmask::write_bbox_prompt(&dir, id, b)?;
        }
        match &r.external {
            Some(raw) => io::write_file(&lay.unseen_mask(id), raw)?,
            None => io::pgm_write_mask(lay.unseen_mask(id), &r.unseen)?,
        }
        let d_inc = read_depth(&ds.path("depth_incomplete", v, "pfm"), v)?;
        io::pfm_write(lay.guide_depth(id), &d_inc.without(&r.unseen)?)?;
        log::info!("unseen: view {id}: removal {} px, contour {} px, unseen {} px", r.removal.count(), r.contour.count(), r.unseen.count());
    }
    finish(&dir, &key)
}

#[derive(Serialize)]
struct AlignSection<'a> {
    reference: &'a str,
    seed: u64,
    agdd: &'a AgddConfig,
    prior: &'a crate::config::PriorConfig,
}

#[derive(Serialize)]
struct AlignSummary {
    reference_view: String,
    seed: u64,
    normalization: agdd::NormalizationParams,
    unseen_pixels: usize,
    guide_pixels: usize,
    first_loss: f64,
    last_loss: f64,
    scale_shift: Option<[f64; 2]>,
    sdedit_total_steps: usize,
    sdedit_strength: f64,
    sdedit_t_inv: usize,
}

pub fn cmd_align(cfg: &PipelineConfig, opts: RunOptions) -> Result<StageStatus> {
    let ds = Dataset::open(&cfg.dataset)?;
    let lay = Layout::new(&cfg.output);
    let dir = lay.stage("align");
    let view = cfg.reference(&ds.views)?;
    let id = &view.id;
    let inputs = vec![ds.cameras(), lay.unseen_mask(id), lay.guide_depth(id), ds.path("depth_incomplete", view, "pfm")];
    let key = stage_key("align", &AlignSection { reference: id, seed: cfg.seed, agdd: &cfg.agdd, prior: &cfg.prior }, &inputs)?;
    let outputs = vec![lay.aligned(id), lay.loss_trace()];
    if cached(&dir, &key, &outputs, opts) {
        log::info!("align: cached");
        return Ok(StageStatus::Cached);
    }

    let u = read_mask(&lay.unseen_mask(id), view)?;
    let d_guide = read_depth(&lay.guide_depth(id), view)?;
    let sched = cfg.agdd.schedule()?;
    let (_, params) = agdd::normalize_depth(&d_guide)?;
    let prior = match cfg.prior.kind {
        PriorKind::Oracle => {
            let clean = read_depth(&ds.path("depth_incomplete", view, "pfm"), view)?;
            let mut b = OraclePrior::from_depth(&clean, &params).distortion(cfg.prior.gamma, cfg.prior.beta).tile(cfg.prior.tile).levels(cfg.prior.levels);
            if cfg.prior.bias_ramp != 0.0 {
                b = b.bias(agdd::ramp_bias(view.intrinsics.width, view.intrinsics.height, cfg.prior.bias_ramp));
            }
            b.build(&sched, cfg.seed)?
        }
    };

    let out = agdd::agdd_run(&prior, &d_guide, &u, &cfg.agdd, &sched, cfg.seed)?;
    let unguided = agdd::agdd_run(&prior, &d_guide, &u, &AgddConfig { alpha: 0.0, ..cfg.agdd.clone() }, &sched, cfg.seed)?;
    let fit_mask = out.guide.and(&unguided.depth.valid_mask())?;
    let scale_shift = match agdd::scale_shift_align(&unguided.depth, &d_guide, &fit_mask) {
        Ok((g, b, d)) => {
            io::pfm_write(lay.scale_shift(id), &d)?;
            Some([g, b])
        }
        Err(e) => {
            log::warn!("align: scale-shift baseline skipped: {e}");
            None
        }
    };
    io::pfm_write(lay.aligned(id), &out.depth)?;
    io::pfm_write(lay.unguided(id), &unguided.depth)?;

    let mut csv = String::from("t,initial_loss,final_loss\n");
    for s in &out.trace {
        csv.push_str(&format!("{},{},{}\n", s.t, s.initial_loss, s.final_loss));
    }
    io::write_file(&lay.loss_trace(), csv.as_bytes())?;

    let summary = AlignSummary {
        reference_view: id.clone(),
        seed: cfg.seed,
        normalization: out.params,
        unseen_pixels: u.count(),
        guide_pixels: out.guide.count(),
        first_loss: out.trace.first().map_or(0.0, |s| s.initial_loss),
        last_loss: out.trace.last().map_or(0.0, |s| s.final_loss),
        scale_shift,
        sdedit_total_steps: cfg.sdedit.total_steps,
        sdedit_strength: cfg.sdedit.strength,
        sdedit_t_inv: cfg.sdedit.t_inv()?,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    log::info!("align: view {id}: loss {:.4} -> {:.4} over {} steps", summary.first_loss, summary.last_loss, out.trace.len());
    finish(&dir, &key)
}

fn reference_rgb_path(cfg: &PipelineConfig, ds: &Dataset, view: &View) -> PathBuf {
    cfg.reference_rgb.clone().unwrap_or_else(|| ds.path("rgb_clean", view, "ppm"))
}

pub fn cmd_unproject(cfg: &PipelineConfig, opts: RunOptions) -> Result<StageStatus> {
    let ds = Dataset::open(&cfg.dataset)?;
    let lay = Layout::new(&cfg.output);
    let dir = lay.stage("unproject");
    let view = cfg.reference(&ds.views)?;
    let id = &view.id;
    let rgb_path = reference_rgb_path(cfg, &ds, view);
    let inputs = vec![ds.cameras(), lay.aligned(id), lay.unseen_mask(id), rgb_path.clone()];
    let key = stage_key("unproject", &id, &inputs)?;
    let outputs = vec![lay.points(id)];
    if cached(&dir, &key, &outputs, opts) {
        log::info!("unproject: cached");
        return Ok(StageStatus::Cached);
    }

    let d = read_depth(&lay.aligned(id), view)?;
    let u = read_mask(&lay.unseen_mask(id), view)?;
    let rgb = read_rgb(&rgb_path, view)?;
    let pts = unproject::init_points(&rgb, &d, &u, &view.intrinsics, &view.pose)?;
    unproject::export_ply(&pts, lay.points(id))?;
    log::info!("unproject: view {id}: {} points", pts.len());
    finish(&dir, &key)
}

fn eval_inputs(cfg: &PipelineConfig, ds: &Dataset, lay: &Layout, view: &View) -> Vec<PathBuf> {
    let id = &view.id;
    let mut inputs = vec![ds.cameras(), lay.aligned(id), lay.unguided(id), lay.scale_shift(id), ds.path("depth_incomplete", view, "pfm")];
    for v in &ds.views {
        inputs.push(lay.unseen_mask(&v.id));
        inputs.push(ds.path("gt_unseen", v, "pgm"));
        if let Some(p) = &cfg.eval.predictions {
            inputs.push(p.join(format!("{}.ppm", v.id)));
            inputs.push(ds.path("rgb_clean", v, "ppm"));
            inputs.push(ds.path("masks", v, "pgm"));
        }
    }
    inputs
}

fn depth_mad(report: &mut MetricReport, view: &str, name: &str, mask_name: &str, est: &Path, gt: &DepthMap, mask: &BinaryMask, v: &View) -> Result<()> {
    if !est.exists() {
        report.skip(view, name, format!("{} not found", est.display()));
        return Ok(());
    }
    let d = read_depth(est, v)?;
    let m = mask.and(&gt.valid_mask())?;
    if m.is_empty() {
        report.skip(view, name, format!("{mask_name} mask has no valid ground truth"));
        return Ok(());
    }
    match metrics::mad(&d, gt, &m) {
        Ok(val) => report.push(view, name, mask_name, val, m.count()),
        Err(e) => {
            report.skip(view, name, e.to_string());
            Ok(())
        }
    }
}

/// Builds the evaluation report from whatever stage outputs and ground truth exist.
pub fn evaluate(cfg: &PipelineConfig, ds: &Dataset, lay: &Layout) -> Result<MetricReport> {
    let mut report = MetricReport::new();
    let reference = cfg.reference(&ds.views)?;

    let per_view: Vec<(Option<(f64, usize)>, Option<String>)> = ds
        .views
        .par_iter()
        .map(|v| {
            let gt_path = ds.path("gt_unseen", v, "pgm");
            let est_path = lay.unseen_mask(&v.id);
            if !gt_path.exists() || !est_path.exists() {
                return Ok((None, Some("unseen mask or ground truth missing".into())));
            }
            let (gt, est) = (read_mask(&gt_path, v)?, read_mask(&est_path, v)?);
            let union = gt.or(&est)?.count();
            if union == 0 {
                return Ok((None, Some("both masks empty".into())));
            }
            Ok((Some((metrics::iou(&est, &gt)?, union)), None))
        })
        .collect::<Result<_>>()?;
    for (v, (rec, skip)) in ds.views.iter().zip(per_view) {
        if let Some((val, px)) = rec {
            report.push(&v.id, "iou", "unseen", val, px)?;
        }
        if let Some(reason) = skip {
            report.skip(&v.id, "iou", reason);
        }
    }

    let id = &reference.id;
    let gt_path = ds.path("depth_incomplete", reference, "pfm");
    let u_path = lay.unseen_mask(id);
    if gt_path.exists() && u_path.exists() {
        let gt = read_depth(&gt_path, reference)?;
        let u = read_mask(&u_path, reference)?;
        if u.is_empty() {
            report.skip(id, "mad", "unseen mask is empty");
        } else {
            let guide = agdd::guide_region(&u, cfg.agdd.bbox_margin, cfg.agdd.guide_region_mode)?;
            for (name, path) in [("mad_aligned", lay.aligned(id)), ("mad_unguided", lay.unguided(id)), ("mad_scale_shift", lay.scale_shift(id))] {
                depth_mad(&mut report, id, name, "unseen", &path, &gt, &u, reference)?;
                depth_mad(&mut report, id, name, "guide", &path, &gt, &guide, reference)?;
            }
        }
    } else {
        report.skip(id, "mad", "aligned inputs or ground truth missing");
    }

    if let Some(pred_dir) = &cfg.eval.predictions {
        for v in &ds.views {
            let pred = pred_dir.join(format!("{}.ppm", v.id));
            let (truth, obj) = (ds.path("rgb_clean", v, "ppm"), ds.path("masks", v, "pgm"));
            if !pred.exists() || !truth.exists() || !obj.exists() {
                report.skip(&v.id, "psnr", "prediction or ground truth missing");
                continue;
            }
            let (p, t, m) = (read_rgb(&pred, v)?, read_rgb(&truth, v)?, read_mask(&obj, v)?);
            if m.is_empty() {
                report.skip(&v.id, "psnr", "object mask is empty");
            } else {
                report.push(&v.id, "psnr", "object", metrics::psnr_masked(&p, &t, &m, 255.0)?, m.count())?;
            }
            if m.not().is_empty() {
                report.skip(&v.id, "psnr", "object mask covers the image");
            } else {
                report.push(&v.id, "psnr", "outside", metrics::psnr_outside_mask(&p, &t, &m, 255.0)?, m.not().count())?;
            }
            let sharp = metrics::variance_of_laplacian(&metrics::luma(&p))?;
            report.push(&v.id, "sharpness", "full", sharp, p.grid().len())?;
        }
    }
    report.finalize();
    Ok(report)
}

pub fn cmd_eval(cfg: &PipelineConfig, opts: RunOptions) -> Result<StageStatus> {
    let ds = Dataset::open(&cfg.dataset)?;
    let lay = Layout::new(&cfg.output);
    let dir = lay.stage("eval");
    let reference = cfg.reference(&ds.views)?;
    let key = stage_key("eval", &(&reference.id, &cfg.agdd, cfg.eval.predictions.is_some()), &eval_inputs(cfg, &ds, &lay, reference))?;
    if cached(&dir, &key, &[lay.report()], opts) {
        log::info!("eval: cached");
        return Ok(StageStatus::Cached);
    }
    let report = evaluate(cfg, &ds, &lay)?;
    write_json(&lay.report(), &report)?;
    for a in &report.aggregate {
        log::info!("eval: {} [{}] = {:.4} over {} px", a.metric, a.mask, a.value, a.pixels);
    }
    finish(&dir, &key)
}

/// Runs every stage in order; the first failure aborts with the stage name.
pub fn cmd_pipeline(cfg: &PipelineConfig, opts: RunOptions) -> Result<Vec<(&'static str, StageStatus)>> {
    type Stage = fn(&PipelineConfig, RunOptions) -> Result<StageStatus>;
    let stages: [(&'static str, Stage); 4] =
        [("unseen", cmd_unseen), ("align", cmd_align), ("unproject", cmd_unproject), ("eval", cmd_eval)];
    let mut done = Vec::new();
    for (name, f) in stages {
        let status = f(cfg, opts).map_err(|e| e.in_stage(name))?;
        done.push((name, status));
    }
    Ok(done)
}

