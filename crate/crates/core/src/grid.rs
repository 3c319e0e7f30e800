//! Pixel grids: multi-channel score maps, superpixel label maps and
//! class-labeled instance maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Visits the 4-neighbors of pixel `idx` in increasing index order
/// (up, left, right, down).
#[inline]
pub(crate) fn for_each_neighbor4(idx: usize, height: usize, width: usize, mut f: impl FnMut(usize)) {
    let (r, c) = (idx / width, idx % width);
    if r > 0 {
        f(idx - width);
    }
    if c > 0 {
        f(idx - 1);
    }
    if c + 1 < width {
        f(idx + 1);
    }
    if r + 1 < height {
        f(idx + width);
    }
}

/// Dense H×W×C grid of finite scores, stored pixel-major with the channels
/// of one pixel contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreGrid {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<f32>,
}

impl ScoreGrid {
    pub fn new(height: usize, width: usize, channels: usize, values: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Dimension(format!(
                "score grid dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        let expected = height
            .checked_mul(width)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Error::Dimension("score grid size overflows".into()))?;
        if values.len() != expected {
            return Err(Error::Dimension(format!(
                "expected {expected} values for {height}x{width}x{channels}, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!("non-finite score at flat index {i}")));
        }
        Ok(Self { height, width, channels, values })
    }

    /// Single-channel grid from a closure over (row, col).
    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f32) -> Result<Self> {
        let values = (0..height * width).map(|i| f(i / width, i % width)).collect();
        Self::new(height, width, 1, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn num_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    #[inline]
    pub fn get(&self, pixel: usize, channel: usize) -> f32 {
        self.values[pixel * self.channels + channel]
    }

    /// All channel values of one pixel.
    #[inline]
    pub fn pixel(&self, pixel: usize) -> &[f32] {
        &self.values[pixel * self.channels..(pixel + 1) * self.channels]
    }

    /// Returns a copy with `offset` added to every value.
    pub fn offset(&self, offset: f32) -> Result<Self> {
        Self::new(
            self.height,
            self.width,
            self.channels,
            self.values.iter().map(|v| v + offset).collect(),
        )
    }
}

/// H×W grid of unsigned labels; the payload of `.lbm` files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelGrid {
    pub height: usize,
    pub width: usize,
    pub values: Vec<u32>,
}

impl LabelGrid {
    pub fn new(height: usize, width: usize, values: Vec<u32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!(
                "label grid dimensions must be positive, got {height}x{width}"
            )));
        }
        if values.len() != height * width {
            return Err(Error::Dimension(format!(
                "expected {} labels for {height}x{width}, got {}",
                height * width,
                values.len()
            )));
        }
        Ok(Self { height, width, values })
    }
}

/// Partition of the image into 4-connected, nonempty regions with dense
/// ids `0..num_regions`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperpixelMap {
    height: usize,
    width: usize,
    num_regions: usize,
    region_of: Vec<u32>,
}

impl SuperpixelMap {
    pub fn new(height: usize, width: usize, region_of: Vec<u32>) -> Result<Self> {
        let grid = LabelGrid::new(height, width, region_of)?;
        Self::from_label_grid(grid)
    }

    pub fn from_label_grid(grid: LabelGrid) -> Result<Self> {
        let LabelGrid { height, width, values } = grid;
        let num_regions = values.iter().map(|&r| r as usize + 1).max().unwrap_or(0);
        let mut sizes = vec![0usize; num_regions];
        for &r in &values {
            sizes[r as usize] += 1;
        }
        if let Some(r) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidValue(format!(
                "region ids are not dense: id {r} unused of {num_regions}"
            )));
        }
        // Each region must be a single 4-connected component.
        let components = connected_components(height, width, &values);
        let num_components = components.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
        if num_components != num_regions {
            return Err(Error::InvalidValue(format!(
                "{num_regions} regions but {num_components} 4-connected components"
            )));
        }
        Ok(Self { height, width, num_regions, region_of: values })
    }

    pub(crate) fn from_parts_unchecked(
        height: usize,
        width: usize,
        num_regions: usize,
        region_of: Vec<u32>,
    ) -> Self {
        Self { height, width, num_regions, region_of }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_regions(&self) -> usize {
        self.num_regions
    }

    pub fn num_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn region_of(&self) -> &[u32] {
        &self.region_of
    }

    #[inline]
    pub fn region(&self, pixel: usize) -> usize {
        self.region_of[pixel] as usize
    }

    pub fn region_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_regions];
        for &r in &self.region_of {
            sizes[r as usize] += 1;
        }
        sizes
    }

    pub fn to_label_grid(&self) -> LabelGrid {
        LabelGrid { height: self.height, width: self.width, values: self.region_of.clone() }
    }
}

/// Labels the 4-connected components of equal-valued pixels; component ids
/// are assigned in order of their first pixel (row-major).
pub fn connected_components(height: usize, width: usize, values: &[u32]) -> Vec<u32> {
    const UNSEEN: u32 = u32::MAX;
    let mut out = vec![UNSEEN; values.len()];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..values.len() {
        if out[start] != UNSEEN {
            continue;
        }
        out[start] = next;
        stack.push(start);
        while let Some(p) = stack.pop() {
            for_each_neighbor4(p, height, width, |q| {
                if out[q] == UNSEEN && values[q] == values[p] {
                    out[q] = next;
                    stack.push(q);
                }
            });
        }
        next += 1;
    }
    out
}

pub const MAX_INSTANCE_ID: u32 = (1 << 24) - 1;

/// Per-pixel (instance id, class label). Instance 0 with class 0 is
/// background.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMap {
    pub height: usize,
    pub width: usize,
    pub instance: Vec<u32>,
    pub class: Vec<u8>,
}

impl InstanceMap {
    pub fn new(height: usize, width: usize, instance: Vec<u32>, class: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension("instance map dimensions must be positive".into()));
        }
        if instance.len() != height * width || class.len() != height * width {
            return Err(Error::Dimension(format!(
                "instance map {height}x{width} needs {} entries per layer",
                height * width
            )));
        }
        if let Some(&id) = instance.iter().find(|&&id| id > MAX_INSTANCE_ID) {
            return Err(Error::InvalidValue(format!("instance id {id} exceeds 24 bits")));
        }
        Ok(Self { height, width, instance, class })
    }

    pub fn background(height: usize, width: usize) -> Self {
        let n = height * width;
        Self { height, width, instance: vec![0; n], class: vec![0; n] }
    }

    pub fn num_pixels(&self) -> usize {
        self.height * self.width
    }

    /// Distinct nonzero instance ids with their class, ascending by id.
    pub fn instances(&self) -> Vec<(u32, u8)> {
        let mut seen = std::collections::BTreeMap::new();
        for (&id, &cls) in self.instance.iter().zip(&self.class) {
            if id != 0 {
                seen.entry(id).or_insert(cls);
            }
        }
        seen.into_iter().collect()
    }

    /// Packs into `.lbm` payload: instance id in the low 24 bits, class in
    /// the high 8.
    pub fn to_label_grid(&self) -> LabelGrid {
        let values = self
            .instance
            .iter()
            .zip(&self.class)
            .map(|(&id, &cls)| pack_instance(id, cls as u32).expect("validated on construction"))
            .collect();
        LabelGrid { height: self.height, width: self.width, values }
    }

    pub fn from_label_grid(grid: &LabelGrid) -> Self {
        let (instance, class) = grid
            .values
            .iter()
            .map(|&v| {
                let (id, cls) = unpack_instance(v);
                (id, cls as u8)
            })
            .unzip();
        Self { height: grid.height, width: grid.width, instance, class }
    }
}

pub fn pack_instance(instance: u32, class: u32) -> Result<u32> {
    if instance > MAX_INSTANCE_ID {
        return Err(Error::InvalidValue(format!("instance id {instance} exceeds 24 bits")));
    }
    if class > 255 {
        return Err(Error::InvalidValue(format!("class {class} exceeds 8 bits")));
    }
    Ok(instance | (class << 24))
}

pub fn unpack_instance(value: u32) -> (u32, u32) {
    (value & MAX_INSTANCE_ID, value >> 24)
}
