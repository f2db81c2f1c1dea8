//! Largest free rectangle selection.
//!
//! Candidates come from the row-histogram sweep: for every bottom row and
//! every column, the block whose height is that column's run of free cells,
//! widened while neighbouring runs are at least as tall. Every maximal free
//! rectangle shows up among these, and a largest free rectangle is always
//! maximal, so the best candidate under [`region_order`] is the answer.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::grid::OccupancyGrid;
use crate::geometry::Rect;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FreeRegion {
    pub rect: Rect,
    pub col: usize,
    pub row: usize,
    pub width_cells: usize,
    pub height_cells: usize,
    pub cell_count: usize,
    pub distance_to_anchor: f64,
}

impl FreeRegion {
    pub fn from_cells(
        grid: &OccupancyGrid,
        col: usize,
        row: usize,
        w: usize,
        h: usize,
        anchor: (f64, f64),
    ) -> Self {
        let rect = grid.span_rect(col, row, w, h);
        let (cx, cy) = rect.center();
        FreeRegion {
            rect,
            col,
            row,
            width_cells: w,
            height_cells: h,
            cell_count: w * h,
            distance_to_anchor: ((cx - anchor.0).powi(2) + (cy - anchor.1).powi(2)).sqrt(),
        }
    }
}

/// Distances closer than this are ties.
pub const DISTANCE_TIE: f64 = 1e-12;

/// Total order, best first: more cells, then closer to the anchor, then
/// top-most, then left-most, then wider.
pub fn region_order(a: &FreeRegion, b: &FreeRegion) -> Ordering {
    b.cell_count
        .cmp(&a.cell_count)
        .then_with(|| {
            let d = a.distance_to_anchor - b.distance_to_anchor;
            if d.abs() <= DISTANCE_TIE {
                Ordering::Equal
            } else if d < 0.0 {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        })
        .then(a.row.cmp(&b.row))
        .then(a.col.cmp(&b.col))
        .then(b.width_cells.cmp(&a.width_cells))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no free region with at least {min_cells} cells")]
pub struct NoFreeRegion {
    pub min_cells: usize,
}

/// Calls `f(col, row, w, h)` for each histogram-sweep candidate.
fn for_each_candidate(grid: &OccupancyGrid, mut f: impl FnMut(usize, usize, usize, usize)) {
    let cols = grid.cols;
    let mut heights = vec![0usize; cols];
    let mut left = vec![0usize; cols];
    let mut right = vec![0usize; cols];
    let mut stack: Vec<usize> = Vec::with_capacity(cols);
    for row in 0..grid.rows {
        for (c, h) in heights.iter_mut().enumerate() {
            *h = if grid.get(c, row) { 0 } else { *h + 1 };
        }
        // Nearest strictly lower column on each side.
        stack.clear();
        for c in 0..cols {
            while stack.last().is_some_and(|&s| heights[s] >= heights[c]) {
                stack.pop();
            }
            left[c] = stack.last().map_or(0, |&s| s + 1);
            stack.push(c);
        }
        stack.clear();
        for c in (0..cols).rev() {
            while stack.last().is_some_and(|&s| heights[s] >= heights[c]) {
                stack.pop();
            }
            right[c] = stack.last().map_or(cols, |&s| s);
            stack.push(c);
        }
        for c in 0..cols {
            let h = heights[c];
            if h > 0 {
                f(left[c], row + 1 - h, right[c] - left[c], h);
            }
        }
    }
}

/// The best all-free rectangle with at least `min_cells` cells.
pub fn select_free_region(
    grid: &OccupancyGrid,
    anchor: (f64, f64),
    min_cells: usize,
) -> Result<FreeRegion, NoFreeRegion> {
    let mut best: Option<FreeRegion> = None;
    let mut best_count = 0;
    for_each_candidate(grid, |col, row, w, h| {
        if w * h < best_count {
            return;
        }
        let cand = FreeRegion::from_cells(grid, col, row, w, h, anchor);
        best_count = w * h;
        match &best {
            Some(b) if region_order(&cand, b) != Ordering::Less => {}
            _ => best = Some(cand),
        }
    });
    match best {
        Some(b) if b.cell_count >= min_cells.max(1) => Ok(b),
        _ => Err(NoFreeRegion { min_cells }),
    }
}
