//! Deterministic synthetic scene used by tests and the `synth` command.
//!
//! 96x96 depth in 8-bit disparity levels: a flat background, a raised
//! rectangle, a disc and a staircase that climbs one level per column. The
//! guide shows each object with its own brightness plus surface texture, so
//! it carries the depth edges without mirroring the depth values.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{DepthImage, GuideImage};
use crate::io::{write_depth, write_guide, ImageFormat};

pub const SCENE_SIZE: usize = 96;

/// Axis-aligned rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }
}

pub const BACKGROUND_DEPTH: f64 = 60.0;
pub const BOX: Rect = Rect {
    x0: 8,
    y0: 8,
    x1: 40,
    y1: 44,
};
pub const BOX_DEPTH: f64 = 150.0;
pub const DISC_CENTER: (f64, f64) = (70.0, 28.0);
pub const DISC_RADIUS: f64 = 16.0;
pub const DISC_DEPTH: f64 = 210.0;
/// Depth rises by exactly one level per column inside this region.
pub const STAIRCASE: Rect = Rect {
    x0: 16,
    y0: 56,
    x1: 80,
    y1: 88,
};
pub const STAIRCASE_BASE: f64 = 90.0;
/// A region of background far from every object edge.
pub const FLAT_PATCH: Rect = Rect {
    x0: 48,
    y0: 48,
    x1: 92,
    y1: 54,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Background,
    Box,
    Disc,
    Staircase,
}

fn region(x: usize, y: usize) -> Region {
    let (cx, cy) = DISC_CENTER;
    let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
    if STAIRCASE.contains(x, y) {
        Region::Staircase
    } else if BOX.contains(x, y) {
        Region::Box
    } else if dx * dx + dy * dy <= DISC_RADIUS * DISC_RADIUS {
        Region::Disc
    } else {
        Region::Background
    }
}

pub fn scene_depth() -> DepthImage {
    DepthImage::from_fn(SCENE_SIZE, SCENE_SIZE, |x, y| match region(x, y) {
        Region::Background => BACKGROUND_DEPTH,
        Region::Box => BOX_DEPTH,
        Region::Disc => DISC_DEPTH,
        Region::Staircase => STAIRCASE_BASE + (x - STAIRCASE.x0) as f64,
    })
}

pub fn scene_guide() -> GuideImage {
    let plane = DepthImage::from_fn(SCENE_SIZE, SCENE_SIZE, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        match region(x, y) {
            Region::Background => 0.30 + 0.04 * (2.0 * PI * (xf + 0.5 * yf) / 7.0).sin(),
            Region::Box => {
                let checker = ((x / 4) + (y / 4)) % 2 == 0;
                if checker {
                    0.78
                } else {
                    0.70
                }
            }
            Region::Disc => 0.55 + 0.03 * (2.0 * PI * yf / 5.0).cos(),
            // Shading only; the unit depth steps leave no intensity edge.
            Region::Staircase => 0.42 + 0.002 * (xf - STAIRCASE.x0 as f64),
        }
    });
    GuideImage::from_plane(plane).expect("finite guide")
}

/// Writes `<dir>/<name>/gt.pfm` and `<dir>/<name>/guide.png`.
pub fn write_scene(dir: &Path, name: &str) -> Result<()> {
    let scene_dir = dir.join(name);
    std::fs::create_dir_all(&scene_dir).map_err(|e| Error::io(&scene_dir, e))?;
    write_depth(&scene_depth(), &scene_dir.join("gt.pfm"), ImageFormat::Pfm)?;
    write_guide(
        &scene_guide(),
        &scene_dir.join("guide.png"),
        ImageFormat::Png,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staircase_has_unit_steps() {
        let d = scene_depth();
        let y = STAIRCASE.y0 + 3;
        for x in STAIRCASE.x0..STAIRCASE.x1 - 1 {
            assert_eq!(d.get(x + 1, y) - d.get(x, y), 1.0);
        }
    }

    #[test]
    fn flat_patch_is_background() {
        let d = scene_depth();
        for y in FLAT_PATCH.y0..FLAT_PATCH.y1 {
            for x in FLAT_PATCH.x0..FLAT_PATCH.x1 {
                assert_eq!(d.get(x, y), BACKGROUND_DEPTH);
            }
        }
    }

    #[test]
    fn guide_in_unit_range() {
        let g = scene_guide();
        assert!(g.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
