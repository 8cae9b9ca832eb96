//! A reference depth prior for testing and demos.
//!
//! The oracle knows a clean target (a normalized depth map, optionally
//! distorted by a global scale and shift plus a smooth bias) and the exact
//! noise the run starts from. Left alone it reproduces the DDIM trajectory
//! that ends at the target. When guidance pushes the state off that
//! trajectory, the part of the deviation that a locally affine correction of
//! the target can explain is taken as a change of the clean estimate; the
//! rest is treated as noise. Corrections are fitted on coarse tiles while
//! the state is noisy and on fine tiles near the end, so guidance around a
//! hole propagates into it. This mimics how a learned prior keeps its
//! structure while accepting scale and shift from the guidance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{initial_noise, DepthPrior, NormalizationParams};
use crate::diffusion::DiffusionSchedule;
use crate::error::{Error, Result};
use crate::grid::{check_dims, DepthMap, Field, Grid, RgbImage};

/// Span of bilinear tent functions `φ_j` and `φ_j · target` on a regular node grid.
#[derive(Debug, Clone)]
pub struct TentFamily {
    spacing: usize,
    nx: usize,
    target: Field,
    pinv: DMatrix<f64>,
}

impl TentFamily {
    pub fn new(target: Field, spacing: usize) -> Result<Self> {
        if spacing == 0 {
            return Err(Error::Config("tile spacing must be >= 1".into()));
        }
        let (w, h) = target.dims();
        let nodes = |n: usize| n.saturating_sub(1) / spacing + 2;
        let (nx, ny) = (nodes(w), nodes(h));
        let mut fam = TentFamily { spacing, nx, target, pinv: DMatrix::zeros(0, 0) };
        let cols = 2 * nx * ny;
        let mut gram = DMatrix::<f64>::zeros(cols, cols);
        for y in 0..h {
            for x in 0..w {
                let row = fam.row(x, y);
                for &(i, a) in &row {
                    for &(j, b) in &row {
                        gram[(i, j)] += a * b;
                    }
                }
            }
        }
        let eig = SymmetricEigen::new(gram);
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let inv = eig.eigenvalues.map(|l| if l > 1e-10 * lmax { 1.0 / l } else { 0.0 });
        fam.pinv = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
        Ok(fam)
    }

    pub fn columns(&self) -> usize {
        self.pinv.nrows()
    }

    /// Nonzero entries of the design-matrix row for pixel `(x, y)`.
    fn row(&self, x: usize, y: usize) -> [(usize, f64); 8] {
        let s = self.spacing as f64;
        let (jx, jy) = (x / self.spacing, y / self.spacing);
        let (fx, fy) = ((x % self.spacing) as f64 / s, (y % self.spacing) as f64 / s);
        let t = self.target[(x, y)];
        let mut out = [(0, 0.0); 8];
        let corners = [(0, 0, (1.0 - fx) * (1.0 - fy)), (1, 0, fx * (1.0 - fy)), (0, 1, (1.0 - fx) * fy), (1, 1, fx * fy)];
        for (k, (dx, dy, wgt)) in corners.into_iter().enumerate() {
            let node = (jy + dy) * self.nx + jx + dx;
            out[2 * k] = (2 * node, wgt);
            out[2 * k + 1] = (2 * node + 1, wgt * t);
        }
        out
    }

    /// Orthogonal projection of `e` onto the family.
    pub fn project(&self, e: &Field) -> Result<Field> {
        e.check_same(&self.target)?;
        let mut rhs = DVector::<f64>::zeros(self.columns());
        for (x, y, &v) in e.enumerate() {
            for (i, a) in self.row(x, y) {
                rhs[i] += a * v;
            }
        }
        let coef = &self.pinv * rhs;
        Ok(Grid::from_fn(e.width(), e.height(), |x, y| self.row(x, y).iter().map(|&(i, a)| a * coef[i]).sum()))
    }
}

/// Horizontal ramp from `-amplitude` at the left edge to `+amplitude` at the right.
pub fn ramp_bias(width: usize, height: usize, amplitude: f64) -> Field {
    let span = width.saturating_sub(1).max(1) as f64;
    Grid::from_fn(width, height, |x, _| amplitude * (2.0 * x as f64 / span - 1.0))
}

#[derive(Debug, Clone)]
pub struct OracleBuilder {
    clean: Field,
    gamma: f64,
    beta: f64,
    bias: Option<Field>,
    spacing: usize,
    levels: usize,
}

impl OracleBuilder {
    /// Target becomes `gamma · clean + beta`.
    pub fn distortion(mut self, gamma: f64, beta: f64) -> Self {
        self.gamma = gamma;
        self.beta = beta;
        self
    }

    /// Extra additive field on top of the distorted target.
    pub fn bias(mut self, bias: Field) -> Self {
        self.bias = Some(bias);
        self
    }

    /// Finest tile spacing, used over the last stretch of the schedule.
    pub fn tile(mut self, spacing: usize) -> Self {
        self.spacing = spacing;
        self
    }

    /// Number of tile scales; level k doubles the spacing k times and is used
    /// over the k-th noisiest fraction of the schedule.
    pub fn levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }

    /// Oracle whose reference noise is the run's initial noise for `seed`.
    pub fn build(self, sched: &DiffusionSchedule, seed: u64) -> Result<OraclePrior> {
        let (w, h) = self.clean.dims();
        self.build_with_reference(sched, initial_noise(w, h, seed))
    }

    pub fn build_with_reference(self, sched: &DiffusionSchedule, reference: Field) -> Result<OraclePrior> {
        check_dims(self.clean.dims(), reference.dims())?;
        let mut target = self.clean.map(|&c| self.gamma * c + self.beta);
        if let Some(b) = &self.bias {
            target = target.zip_map(b, |t, b| t + b)?;
        }
        if self.levels == 0 {
            return Err(Error::Config("oracle needs at least one tile level".into()));
        }
        let families = (0..self.levels)
            .map(|k| TentFamily::new(target.clone(), self.spacing << k))
            .collect::<Result<Vec<_>>>()?;
        Ok(OraclePrior { target, reference, families, sched: sched.clone() })
    }
}

#[derive(Debug, Clone)]
pub struct OraclePrior {
    target: Field,
    reference: Field,
    /// Finest first.
    families: Vec<TentFamily>,
    sched: DiffusionSchedule,
}

impl OraclePrior {
    /// Builder around a clean normalized map; identity distortion, tiles from
    /// 64 px (noisiest quarter of the schedule) down to 8 px.
    pub fn builder(clean: Field) -> OracleBuilder {
        OracleBuilder { clean, gamma: 1.0, beta: 0.0, bias: None, spacing: 8, levels: 4 }
    }

    /// Builder whose clean map is `depth` in the run's normalized units.
    pub fn from_depth(depth: &DepthMap, params: &NormalizationParams) -> OracleBuilder {
        Self::builder(params.apply(depth))
    }

    /// Clean estimate the unguided trajectory converges to.
    pub fn target(&self) -> &Field {
        &self.target
    }

    /// Tent family consulted at step `t`: coarse while noisy, fine near the end.
    pub fn family(&self, t: usize) -> &TentFamily {
        let n = self.families.len();
        let k = (n * t.saturating_sub(1) / self.sched.steps().max(1)).min(n - 1);
        &self.families[k]
    }
}

impl DepthPrior for OraclePrior {
    fn predict_noise(&self, d_t: &Field, t: usize, _cond: Option<&RgbImage>) -> Result<Field> {
        if d_t.dims() != self.target.dims() {
            return Err(Error::Prior(format!("oracle built for {:?}, got {:?}", self.target.dims(), d_t.dims())));
        }
        if t == 0 || t > self.sched.steps() {
            return Err(Error::Timestep { t, steps: self.sched.steps() });
        }
        let ab = self.sched.alpha_bar(t)?;
        let ab_end = self.sched.alpha_bar(self.sched.steps())?;
        let b = ((1.0 - ab) / (1.0 - ab_end)).sqrt();
        let a = ab.sqrt() - b * ab_end.sqrt();

        let dev = Grid::from_fn(d_t.width(), d_t.height(), |x, y| {
            d_t[(x, y)] - a * self.target[(x, y)] - b * self.reference[(x, y)]
        });
        let clean = if a > 1e-12 {
            let corr = self.family(t).project(&dev)?;
            self.target.zip_map(&corr, |&t, &c| t + c / a)?
        } else {
            self.target.clone()
        };
        let (sa, sb) = (ab.sqrt(), (1.0 - ab).sqrt());
        d_t.zip_map(&clean, |&d, &c| (d - sa * c) / sb)
    }
}
