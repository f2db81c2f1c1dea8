//! Overlay placement on slides.
//!
//! detect boxes → rasterize onto a coarse grid → pick the best free
//! rectangle → size the text to it, falling back to a scrollable overlay.

mod detect;
mod grid;
mod select;

use image::{DynamicImage, Rgba, RgbaImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use detect::{binarize, detect_boxes_in, DetectConfig};
pub use grid::{rasterize, OccupancyGrid, MAX_GRID_CELLS};
pub use select::{region_order, select_free_region, FreeRegion, NoFreeRegion, DISTANCE_TIE};

use crate::geometry::Rect;
use crate::par::{self, Execution};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("slide image could not be decoded: {0}")]
    ImageUndecodable(String),
}

pub fn detect_content_boxes(slide_png: &[u8]) -> Result<Vec<Rect>, LayoutError> {
    let img = crate::imaging::decode(slide_png)
        .map_err(|e| LayoutError::ImageUndecodable(e.to_string()))?;
    Ok(detect_boxes_in(&img, &DetectConfig::default()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutConfig {
    pub cols: usize,
    pub rows: usize,
    pub min_cells: usize,
    /// Characters one cell holds at font scale 1.0.
    pub chars_per_cell: f64,
    /// Smallest font scale tried before the overlay turns scrollable.
    pub min_font_scale: f64,
    /// Areas that are always treated as occupied (e.g. the avatar viewport).
    pub reserved: Vec<Rect>,
    pub detect: DetectConfig,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            cols: 24,
            rows: 14,
            min_cells: 4,
            chars_per_cell: 6.0,
            min_font_scale: 0.75,
            reserved: Vec::new(),
            detect: DetectConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Placement {
    /// A free region meeting the size floor.
    Region,
    /// Nothing met the size floor; the largest free region is used.
    Relaxed,
    /// Grid fully occupied; the overlay covers the whole slide.
    Modal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OverlayPlan {
    pub region: FreeRegion,
    pub estimated_capacity_chars: usize,
    pub scrollable: bool,
    pub font_scale: f64,
    pub placement: Placement,
    pub response_chars: usize,
}

/// Characters a region of `cells` holds at `font_scale`; glyph area scales
/// with the square of the font size.
pub fn capacity_chars(cells: usize, font_scale: f64, chars_per_cell: f64) -> usize {
    (cells as f64 * chars_per_cell / (font_scale * font_scale) + 1e-9).floor() as usize
}

fn size_text(
    region: FreeRegion,
    placement: Placement,
    text: &str,
    cfg: &LayoutConfig,
) -> OverlayPlan {
    let len = text.chars().count();
    let full = capacity_chars(region.cell_count, 1.0, cfg.chars_per_cell);
    let (font_scale, capacity) = if len <= full {
        (1.0, full)
    } else {
        (
            cfg.min_font_scale,
            capacity_chars(region.cell_count, cfg.min_font_scale, cfg.chars_per_cell),
        )
    };
    OverlayPlan {
        region,
        estimated_capacity_chars: capacity,
        scrollable: len > capacity,
        font_scale,
        placement,
        response_chars: len,
    }
}

/// Plans an overlay given already-detected content boxes.
pub fn plan_from_boxes(
    boxes: &[Rect],
    anchor: (f64, f64),
    text: &str,
    cfg: &LayoutConfig,
) -> (OverlayPlan, OccupancyGrid) {
    let mut all: Vec<Rect> = boxes.to_vec();
    all.extend_from_slice(&cfg.reserved);
    let grid = rasterize(&all, cfg.cols, cfg.rows);
    let plan = match select_free_region(&grid, anchor, cfg.min_cells) {
        Ok(region) => size_text(region, Placement::Region, text, cfg),
        Err(_) => match select_free_region(&grid, anchor, 1) {
            Ok(region) => size_text(region, Placement::Relaxed, text, cfg),
            Err(_) => {
                let region = FreeRegion::from_cells(&grid, 0, 0, cfg.cols, cfg.rows, anchor);
                size_text(region, Placement::Modal, text, cfg)
            }
        },
    };
    (plan, grid)
}

pub fn plan_overlay_in(
    img: &DynamicImage,
    anchor: (f64, f64),
    text: &str,
    cfg: &LayoutConfig,
) -> OverlayPlan {
    let boxes = detect_boxes_in(img, &cfg.detect);
    plan_from_boxes(&boxes, anchor, text, cfg).0
}

pub fn plan_overlay(
    slide_png: &[u8],
    anchor: (f64, f64),
    text: &str,
    cfg: &LayoutConfig,
) -> Result<OverlayPlan, LayoutError> {
    let img = crate::imaging::decode(slide_png)
        .map_err(|e| LayoutError::ImageUndecodable(e.to_string()))?;
    Ok(plan_overlay_in(&img, anchor, text, cfg))
}

pub struct PlanInput<'a> {
    pub image: &'a DynamicImage,
    pub anchor: (f64, f64),
    pub text: &'a str,
}

/// Plans many overlays at once.
pub fn plan_batch(
    inputs: &[PlanInput<'_>],
    cfg: &LayoutConfig,
    exec: Execution,
) -> Vec<OverlayPlan> {
    par::map(exec, inputs, |i| {
        plan_overlay_in(i.image, i.anchor, i.text, cfg)
    })
}

/// Debug rendering: slide dimmed, occupied cells red, chosen region green.
pub fn render_debug(img: &DynamicImage, grid: &OccupancyGrid, region: &FreeRegion) -> RgbaImage {
    let mut out = img.to_rgba8();
    let (w, h) = out.dimensions();
    let (cw, ch) = grid.cell_size_px(w, h);
    for (x, y, px) in out.enumerate_pixels_mut() {
        let c = ((x as f64 / cw) as usize).min(grid.cols - 1);
        let r = ((y as f64 / ch) as usize).min(grid.rows - 1);
        let in_region = c >= region.col
            && c < region.col + region.width_cells
            && r >= region.row
            && r < region.row + region.height_cells;
        let tint: Option<[u8; 3]> = if in_region {
            Some([40, 200, 80])
        } else if grid.get(c, r) {
            Some([220, 50, 50])
        } else {
            None
        };
        if let Some(t) = tint {
            let Rgba([pr, pg, pb, pa]) = *px;
            *px = Rgba([
                ((pr as u16 + t[0] as u16) / 2) as u8,
                ((pg as u16 + t[1] as u16) / 2) as u8,
                ((pb as u16 + t[2] as u16) / 2) as u8,
                pa,
            ]);
        }
        let on_line = (x as f64 % cw) < 1.0 || (y as f64 % ch) < 1.0;
        if on_line {
            *px = Rgba([128, 128, 128, 255]);
        }
    }
    out
}
