//! Evaluation metrics and the JSON report they are collected into.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_dims, BinaryMask, DepthMap, Field, Grid, RgbImage};

/// Returned for identical inputs instead of infinity.
pub const PSNR_CAP: f64 = 99.0;

/// PSNR over mask pixels with the MSE averaged over the three channels.
pub fn psnr_masked(a: &RgbImage, b: &RgbImage, mask: &BinaryMask, max_val: f64) -> Result<f64> {
    check_dims(a.dims(), b.dims())?;
    check_dims(a.dims(), mask.dims())?;
    let n = mask.count();
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let mut sum = 0.0;
    for (x, y) in mask.pixels() {
        let (p, q) = (a.at(x, y), b.at(x, y));
        for c in 0..3 {
            let d = p[c] as f64 - q[c] as f64;
            sum += d * d;
        }
    }
    let mse = sum / (3 * n) as f64;
    Ok(psnr_from_mse(mse, max_val))
}

pub fn psnr_from_mse(mse: f64, max_val: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP
    } else {
        (10.0 * (max_val * max_val / mse).log10()).min(PSNR_CAP)
    }
}

/// PSNR over the complement of `object_mask`.
pub fn psnr_outside_mask(a: &RgbImage, b: &RgbImage, object_mask: &BinaryMask, max_val: f64) -> Result<f64> {
    let outside = object_mask.not();
    if outside.is_empty() {
        return Err(Error::FullMask);
    }
    psnr_masked(a, b, &outside, max_val)
}

/// Mean absolute depth difference over the mask.
pub fn mad(d_a: &DepthMap, d_b: &DepthMap, mask: &BinaryMask) -> Result<f64> {
    check_dims(d_a.dims(), d_b.dims())?;
    check_dims(d_a.dims(), mask.dims())?;
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut sum = 0.0;
    for (x, y) in mask.pixels() {
        if !d_a.is_valid(x, y) || !d_b.is_valid(x, y) {
            return Err(Error::InvalidDepthOnMask(x, y));
        }
        sum += (d_a.at(x, y) as f64 - d_b.at(x, y) as f64).abs();
    }
    Ok(sum / mask.count() as f64)
}

/// Population variance of the 4-neighbor Laplacian over interior pixels.
pub fn variance_of_laplacian(img: &Field) -> Result<f64> {
    let (w, h) = img.dims();
    if w < 3 || h < 3 {
        return Err(Error::TooSmall);
    }
    let mut resp = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            resp.push(img[(x, y - 1)] + img[(x - 1, y)] + img[(x + 1, y)] + img[(x, y + 1)] - 4.0 * img[(x, y)]);
        }
    }
    let n = resp.len() as f64;
    let mean = resp.iter().sum::<f64>() / n;
    Ok(resp.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n)
}

/// Rec. 601 luma.
pub fn luma(img: &RgbImage) -> Field {
    img.grid().map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
}

/// Intersection over union; two empty masks score 1.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let inter = a.and(b)?.count();
    let union = a.or(b)?.count();
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub view_id: String,
    pub metric: String,
    pub mask: String,
    pub value: f64,
    pub pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metric: String,
    pub mask: String,
    /// Pixel-weighted mean.
    pub value: f64,
    pub pixels: usize,
    pub views: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub view_id: String,
    pub metric: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub records: Vec<MetricRecord>,
    pub aggregate: Vec<Aggregate>,
    pub skipped: Vec<Skipped>,
    pub unavailable: Vec<String>,
}

impl MetricReport {
    pub fn new() -> Self {
        MetricReport { unavailable: vec!["lpips".into(), "ssim".into()], ..Default::default() }
    }

    pub fn push(&mut self, view_id: &str, metric: &str, mask: &str, value: f64, pixels: usize) -> Result<()> {
        if pixels == 0 {
            return Err(Error::EmptyMask);
        }
        self.records.push(MetricRecord { view_id: view_id.into(), metric: metric.into(), mask: mask.into(), value, pixels });
        Ok(())
    }

    pub fn skip(&mut self, view_id: &str, metric: &str, reason: impl Into<String>) {
        self.skipped.push(Skipped { view_id: view_id.into(), metric: metric.into(), reason: reason.into() });
    }

    /// Recomputes the aggregates, one per (metric, mask) pair in first-seen order.
    pub fn finalize(&mut self) {
        let mut keys: Vec<(String, String)> = Vec::new();
        for r in &self.records {
            let k = (r.metric.clone(), r.mask.clone());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        self.aggregate = keys
            .into_iter()
            .map(|(metric, mask)| {
                let rs: Vec<_> = self.records.iter().filter(|r| r.metric == metric && r.mask == mask).collect();
                let pixels: usize = rs.iter().map(|r| r.pixels).sum();
                let value = rs.iter().map(|r| r.value * r.pixels as f64).sum::<f64>() / pixels as f64;
                Aggregate { metric, mask, value, pixels, views: rs.len() }
            })
            .collect();
    }

    pub fn aggregate_of(&self, metric: &str, mask: &str) -> Option<&Aggregate> {
        self.aggregate.iter().find(|a| a.metric == metric && a.mask == mask)
    }
}

/// Grayscale field from an 8-bit image, handy for the sharpness metric.
pub fn gray_field(g: &Grid<u8>) -> Field {
    g.map(|&v| v as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_of_unit_mse() {
        let a = RgbImage::filled(4, 4, [10, 10, 10]);
        let b = RgbImage::filled(4, 4, [11, 11, 11]);
        let m = BinaryMask::from_fn(4, 4, |_, _| true);
        assert!((psnr_masked(&a, &b, &m, 255.0).unwrap() - 48.1308).abs() < 1e-3);
        assert_eq!(psnr_masked(&a, &a, &m, 255.0).unwrap(), PSNR_CAP);
        assert!(psnr_masked(&a, &b, &BinaryMask::empty(4, 4), 255.0).is_err());
        assert!(matches!(psnr_outside_mask(&a, &b, &m, 255.0), Err(Error::FullMask)));
    }

    #[test]
    fn ramp_has_no_laplacian() {
        let ramp = Grid::from_fn(6, 5, |x, y| 2.0 * x as f64 - y as f64);
        assert_eq!(variance_of_laplacian(&ramp).unwrap(), 0.0);
        assert!(matches!(variance_of_laplacian(&Grid::filled(2, 5, 0.0)), Err(Error::TooSmall)));
    }

    #[test]
    fn mad_of_offset() {
        let a = DepthMap::new(Grid::filled(3, 3, 1.0)).unwrap();
        let b = DepthMap::new(Grid::filled(3, 3, 1.5)).unwrap();
        let m = BinaryMask::from_fn(3, 3, |x, _| x > 0);
        assert_eq!(mad(&a, &b, &m).unwrap(), 0.5);
        assert!(matches!(mad(&a, &DepthMap::zeros(3, 3), &m), Err(Error::InvalidDepthOnMask(1, 0))));
    }

    #[test]
    fn aggregate_is_pixel_weighted() {
        let mut r = MetricReport::new();
        r.push("a", "mad", "unseen", 1.0, 10).unwrap();
        r.push("b", "mad", "unseen", 4.0, 30).unwrap();
        assert!(r.push("c", "mad", "unseen", 0.0, 0).is_err());
        r.finalize();
        let agg = r.aggregate_of("mad", "unseen").unwrap();
        assert_eq!((agg.value, agg.pixels, agg.views), (3.25, 40, 2));
    }
}
