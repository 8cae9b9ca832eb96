//! Dense row-major 2D grids and the typed views built on them.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Real-valued working grid (normalized depth, noise, votes).
pub type Field = Grid<f64>;

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Grid { width, height, data: vec![value; width * height] }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                found: (data.len(), 1),
            });
        }
        Ok(Grid { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Grid { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> Option<&T> {
        (x < self.width && y < self.height).then(|| &self.data[y * self.width + x])
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid { width: self.width, height: self.height, data: self.data.iter().map(f).collect() }
    }

    pub fn zip_map<U, V>(&self, other: &Grid<U>, mut f: impl FnMut(&T, &U) -> V) -> Result<Grid<V>> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect();
        Ok(Grid { width: self.width, height: self.height, data })
    }

    pub fn check_same<U>(&self, other: &Grid<U>) -> Result<()> {
        check_dims(self.dims(), other.dims())
    }

    /// `(x, y, &value)` in row-major order.
    pub fn enumerate(&self) -> impl Iterator<Item = (usize, usize, &T)> + '_ {
        let w = self.width;
        self.data.iter().enumerate().map(move |(i, v)| (i % w, i / w, v))
    }
}

pub fn check_dims(expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

impl<T> Index<(usize, usize)> for Grid<T> {
    type Output = T;
    fn index(&self, (x, y): (usize, usize)) -> &T {
        assert!(x < self.width && y < self.height, "({x}, {y}) outside {}x{}", self.width, self.height);
        &self.data[y * self.width + x]
    }
}

impl<T> IndexMut<(usize, usize)> for Grid<T> {
    fn index_mut(&mut self, (x, y): (usize, usize)) -> &mut T {
        assert!(x < self.width && y < self.height, "({x}, {y}) outside {}x{}", self.width, self.height);
        &mut self.data[y * self.width + x]
    }
}

/// Z-depth per pixel; 0 marks an invalid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap(Grid<f32>);

impl DepthMap {
    pub fn new(grid: Grid<f32>) -> Result<Self> {
        if let Some((x, y, v)) = grid.enumerate().find(|(_, _, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::DegenerateDepth(format!("value {v} at ({x}, {y}) is not a finite non-negative depth")));
        }
        Ok(DepthMap(grid))
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        DepthMap(Grid::filled(width, height, 0.0))
    }

    /// Converts from f64, sending negative and non-finite values to 0.
    pub fn from_field_clamped(field: &Field) -> Self {
        DepthMap(field.map(|&v| if v.is_finite() && v > 0.0 { v as f32 } else { 0.0 }))
    }

    pub fn grid(&self) -> &Grid<f32> {
        &self.0
    }

    pub fn into_grid(self) -> Grid<f32> {
        self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.0[(x, y)]
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.0[(x, y)] > 0.0
    }

    pub fn valid_mask(&self) -> BinaryMask {
        BinaryMask(self.0.map(|&v| v > 0.0))
    }

    pub fn to_field(&self) -> Field {
        self.0.map(|&v| v as f64)
    }

    /// Copy with every pixel set in `mask` marked invalid.
    pub fn without(&self, mask: &BinaryMask) -> Result<DepthMap> {
        Ok(DepthMap(self.0.zip_map(mask.grid(), |&d, &m| if m { 0.0 } else { d })?))
    }

    pub fn median_valid(&self) -> Option<f64> {
        let mut v: Vec<f32> = self.0.data().iter().copied().filter(|&d| d > 0.0).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f32::total_cmp);
        let n = v.len();
        Some(if n % 2 == 1 { v[n / 2] as f64 } else { (v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask(Grid<bool>);

impl BinaryMask {
    pub fn new(grid: Grid<bool>) -> Self {
        BinaryMask(grid)
    }

    pub fn empty(width: usize, height: usize) -> Self {
        BinaryMask(Grid::filled(width, height, false))
    }

    pub fn from_fn(width: usize, height: usize, f: impl FnMut(usize, usize) -> bool) -> Self {
        BinaryMask(Grid::from_fn(width, height, f))
    }

    pub fn grid(&self) -> &Grid<bool> {
        &self.0
    }

    pub fn grid_mut(&mut self) -> &mut Grid<bool> {
        &mut self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn at(&self, x: usize, y: usize) -> bool {
        self.0[(x, y)]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.0[(x, y)] = value;
    }

    pub fn count(&self) -> usize {
        self.0.data().iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.0.data().iter().any(|&b| b)
    }

    /// Set pixels as `(x, y)`, row-major.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.enumerate().filter(|(_, _, &b)| b).map(|(x, y, _)| (x, y))
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        Ok(BinaryMask(self.0.zip_map(&other.0, |&a, &b| a && b)?))
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        Ok(BinaryMask(self.0.zip_map(&other.0, |&a, &b| a || b)?))
    }

    pub fn minus(&self, other: &BinaryMask) -> Result<BinaryMask> {
        Ok(BinaryMask(self.0.zip_map(&other.0, |&a, &b| a && !b)?))
    }

    pub fn not(&self) -> BinaryMask {
        BinaryMask(self.0.map(|&a| !a))
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.0.data().iter().zip(other.0.data()).all(|(&a, &b)| !a || b)
    }
}

/// 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage(Grid<[u8; 3]>);

impl RgbImage {
    pub fn new(grid: Grid<[u8; 3]>) -> Self {
        RgbImage(grid)
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        RgbImage(Grid::filled(width, height, rgb))
    }

    pub fn grid(&self) -> &Grid<[u8; 3]> {
        &self.0
    }

    pub fn grid_mut(&mut self) -> &mut Grid<[u8; 3]> {
        &mut self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn at(&self, x: usize, y: usize) -> [u8; 3] {
        self.0[(x, y)]
    }
}
