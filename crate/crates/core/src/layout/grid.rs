use serde::{Deserialize, Serialize};

use crate::geometry::Rect;

/// Upper bound on `cols * rows`.
pub const MAX_GRID_CELLS: usize = 4096;

/// Low-resolution occupancy raster of a slide; `true` marks an occupied cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub cols: usize,
    pub rows: usize,
    /// Row-major.
    pub cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn empty(cols: usize, rows: usize) -> Self {
        assert!(cols >= 1 && rows >= 1, "grid needs at least one cell");
        assert!(
            cols * rows <= MAX_GRID_CELLS,
            "grid of {cols}x{rows} exceeds {MAX_GRID_CELLS} cells"
        );
        OccupancyGrid {
            cols,
            rows,
            cells: vec![false; cols * rows],
        }
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, col: usize, row: usize, occupied: bool) {
        self.cells[row * self.cols + col] = occupied;
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    pub fn is_full(&self) -> bool {
        self.cells.iter().all(|c| *c)
    }

    /// Normalized extent of a cell.
    pub fn cell_rect(&self, col: usize, row: usize) -> Rect {
        self.span_rect(col, row, 1, 1)
    }

    /// Normalized extent of a `w`×`h` block of cells starting at `(col, row)`.
    pub fn span_rect(&self, col: usize, row: usize, w: usize, h: usize) -> Rect {
        Rect::new(
            col as f64 / self.cols as f64,
            row as f64 / self.rows as f64,
            (col + w) as f64 / self.cols as f64,
            (row + h) as f64 / self.rows as f64,
        )
    }

    /// Pixel size of one cell for an image of the given size.
    pub fn cell_size_px(&self, width: u32, height: u32) -> (f64, f64) {
        (
            width as f64 / self.cols as f64,
            height as f64 / self.rows as f64,
        )
    }

    /// Text dump, one line per row: `#` occupied, `.` free.
    pub fn ascii(&self) -> Vec<String> {
        (0..self.rows)
            .map(|r| {
                (0..self.cols)
                    .map(|c| if self.get(c, r) { '#' } else { '.' })
                    .collect()
            })
            .collect()
    }
}

/// Marks every cell whose interior overlaps a box.
pub fn rasterize(boxes: &[Rect], cols: usize, rows: usize) -> OccupancyGrid {
    let mut grid = OccupancyGrid::empty(cols, rows);
    for b in boxes {
        if !b.is_proper() {
            continue;
        }
        let c0 = ((b.x0 * cols as f64).floor().max(0.0) as usize).min(cols - 1);
        let c1 = ((b.x1 * cols as f64).ceil().max(0.0) as usize).min(cols);
        let r0 = ((b.y0 * rows as f64).floor().max(0.0) as usize).min(rows - 1);
        let r1 = ((b.y1 * rows as f64).ceil().max(0.0) as usize).min(rows);
        for r in r0..r1 {
            for c in c0..c1 {
                if b.interiors_intersect(&grid.cell_rect(c, r)) {
                    grid.set(c, r, true);
                }
            }
        }
    }
    grid
}
