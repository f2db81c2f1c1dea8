//! Content box detection: grayscale, adaptive binarization, connected
//! components, per-component bounding boxes, gap-based merging.

use image::{DynamicImage, GrayImage};

use crate::geometry::Rect;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectConfig {
    /// Local-mean window side as a fraction of image width.
    pub window_frac: f64,
    /// Pixel is foreground when darker than `(1 - t)` times its local mean.
    pub threshold: f64,
    /// Minimum absolute darkness below the local mean, in gray levels.
    pub min_contrast: f64,
    /// Components smaller than this many pixels are noise.
    pub min_component_px: usize,
    /// Boxes closer than this fraction of image width are merged.
    pub merge_gap_frac: f64,
    /// Merged boxes whose ink (after closing by the merge gap) fills less
    /// than this share of their area are split by guillotine cuts.
    pub min_fill: f64,
    /// A cut is kept only if it removes at least this share of the area.
    pub min_cut_gain: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            window_frac: 1.0 / 8.0,
            threshold: 0.15,
            min_contrast: 8.0,
            min_component_px: 3,
            merge_gap_frac: 0.01,
            min_fill: 0.85,
            min_cut_gain: 0.15,
        }
    }
}

/// Pixel box with exclusive upper bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PxBox {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
}

impl PxBox {
    fn gap(&self, o: &PxBox) -> u32 {
        let gx = self.x0.max(o.x0).saturating_sub(self.x1.min(o.x1));
        let gy = self.y0.max(o.y0).saturating_sub(self.y1.min(o.y1));
        gx.max(gy)
    }

    fn union(&self, o: &PxBox) -> PxBox {
        PxBox {
            x0: self.x0.min(o.x0),
            y0: self.y0.min(o.y0),
            x1: self.x1.max(o.x1),
            y1: self.y1.max(o.y1),
        }
    }
}

/// Foreground mask via Bradley-Roth local-mean thresholding. Images that
/// are mostly dark are inverted first so content is always darker than
/// its surroundings.
pub fn binarize(gray: &GrayImage, cfg: &DetectConfig) -> Vec<bool> {
    let (w, h) = gray.dimensions();
    let (wu, hu) = (w as usize, h as usize);
    let total: u64 = gray.pixels().map(|p| p.0[0] as u64).sum();
    let invert = (wu * hu) > 0 && total < 128 * (wu * hu) as u64;
    let px = |x: usize, y: usize| {
        let v = gray.get_pixel(x as u32, y as u32).0[0];
        if invert {
            255 - v
        } else {
            v
        }
    };

    let mut integral = vec![0u64; (wu + 1) * (hu + 1)];
    for y in 0..hu {
        let mut row = 0u64;
        for x in 0..wu {
            row += px(x, y) as u64;
            integral[(y + 1) * (wu + 1) + x + 1] = integral[y * (wu + 1) + x + 1] + row;
        }
    }

    let half = ((w as f64 * cfg.window_frac) as usize / 2).max(1);
    let mut mask = vec![false; wu * hu];
    for y in 0..hu {
        let ya = y.saturating_sub(half);
        let yb = (y + half + 1).min(hu);
        for x in 0..wu {
            let xa = x.saturating_sub(half);
            let xb = (x + half + 1).min(wu);
            let sum = integral[yb * (wu + 1) + xb] + integral[ya * (wu + 1) + xa]
                - integral[ya * (wu + 1) + xb]
                - integral[yb * (wu + 1) + xa];
            let count = ((yb - ya) * (xb - xa)) as f64;
            let mean = sum as f64 / count;
            let p = px(x, y) as f64;
            mask[y * wu + x] = p < mean * (1.0 - cfg.threshold) && mean - p > cfg.min_contrast;
        }
    }
    mask
}

fn find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        parent[i as usize] = parent[parent[i as usize] as usize];
        i = parent[i as usize];
    }
    i
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb) as usize] = ra.min(rb);
    }
}

/// 8-connected component bounding boxes of a mask.
fn components(mask: &[bool], w: usize, h: usize, min_px: usize) -> Vec<PxBox> {
    let mut parent: Vec<u32> = (0..(w * h) as u32).collect();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !mask[i] {
                continue;
            }
            // Already-visited neighbours: W, NW, N, NE.
            if x > 0 && mask[i - 1] {
                union(&mut parent, i as u32, (i - 1) as u32);
            }
            if y > 0 {
                let up = i - w;
                if mask[up] {
                    union(&mut parent, i as u32, up as u32);
                }
                if x > 0 && mask[up - 1] {
                    union(&mut parent, i as u32, (up - 1) as u32);
                }
                if x + 1 < w && mask[up + 1] {
                    union(&mut parent, i as u32, (up + 1) as u32);
                }
            }
        }
    }
    let mut boxes: std::collections::BTreeMap<u32, (PxBox, usize)> = Default::default();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !mask[i] {
                continue;
            }
            let root = find(&mut parent, i as u32);
            let (x, y) = (x as u32, y as u32);
            boxes
                .entry(root)
                .and_modify(|(b, n)| {
                    *b = b.union(&PxBox {
                        x0: x,
                        y0: y,
                        x1: x + 1,
                        y1: y + 1,
                    });
                    *n += 1;
                })
                .or_insert((
                    PxBox {
                        x0: x,
                        y0: y,
                        x1: x + 1,
                        y1: y + 1,
                    },
                    1,
                ));
        }
    }
    boxes
        .into_values()
        .filter(|(_, n)| *n >= min_px)
        .map(|(b, _)| b)
        .collect()
}

fn merge_close(mut boxes: Vec<PxBox>, max_gap: u32) -> Vec<PxBox> {
    loop {
        let mut merged = false;
        let mut i = 0;
        while i < boxes.len() {
            let mut j = i + 1;
            while j < boxes.len() {
                if boxes[i].gap(&boxes[j]) < max_gap {
                    boxes[i] = boxes[i].union(&boxes[j]);
                    boxes.swap_remove(j);
                    merged = true;
                } else {
                    j += 1;
                }
            }
            i += 1;
        }
        if !merged {
            return boxes;
        }
    }
}

/// Mask closed by a square of half-side `r`: a pixel is set when any
/// foreground pixel lies within Chebyshev distance `r`.
struct Closed {
    w: usize,
    h: usize,
    r: usize,
    integral: Vec<u32>,
    closed: std::cell::OnceCell<Vec<bool>>,
}

impl Closed {
    fn new(mask: &[bool], w: usize, h: usize, r: usize) -> Self {
        let mut integral = vec![0u32; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0u32;
            for x in 0..w {
                row += mask[y * w + x] as u32;
                integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
            }
        }
        Closed {
            w,
            h,
            r,
            integral,
            closed: Default::default(),
        }
    }

    fn count(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u32 {
        let w = self.w + 1;
        self.integral[y1 * w + x1] + self.integral[y0 * w + x0]
            - self.integral[y0 * w + x1]
            - self.integral[y1 * w + x0]
    }

    /// Built on first use; solid content never needs it.
    fn at(&self, x: usize, y: usize) -> bool {
        let (w, h, r) = (self.w, self.h, self.r);
        let closed = self.closed.get_or_init(|| {
            (0..w * h)
                .map(|i| {
                    let (x, y) = (i % w, i / w);
                    let (xa, ya) = (x.saturating_sub(r), y.saturating_sub(r));
                    self.count(xa, ya, (x + r + 1).min(w), (y + r + 1).min(h)) > 0
                })
                .collect()
        });
        closed[y * w + x]
    }

    /// Tight box of the original foreground inside `b`.
    fn tighten(&self, b: PxBox) -> Option<PxBox> {
        let (x0, y0, x1, y1) = (b.x0 as usize, b.y0 as usize, b.x1 as usize, b.y1 as usize);
        if self.count(x0, y0, x1, y1) == 0 {
            return None;
        }
        let col = |x: usize| self.count(x, y0, x + 1, y1) > 0;
        let row = |y: usize| self.count(x0, y, x1, y + 1) > 0;
        let nx0 = (x0..x1).find(|&x| col(x))?;
        let nx1 = (x0..x1).rev().find(|&x| col(x))? + 1;
        let ny0 = (y0..y1).find(|&y| row(y))?;
        let ny1 = (y0..y1).rev().find(|&y| row(y))? + 1;
        Some(PxBox {
            x0: nx0 as u32,
            y0: ny0 as u32,
            x1: nx1 as u32,
            y1: ny1 as u32,
        })
    }
}

fn area(b: &PxBox) -> u64 {
    (b.x1 - b.x0) as u64 * (b.y1 - b.y0) as u64
}

/// Best single guillotine cut of `b` by total area of the two closed-mask
/// extents. Returns the two halves (untightened) and that total.
fn best_cut(c: &Closed, b: &PxBox) -> Option<(PxBox, PxBox, u64)> {
    let (bw, bh) = ((b.x1 - b.x0) as usize, (b.y1 - b.y0) as usize);
    // Per column and per row: first and last set closed pixel.
    let mut cols = vec![None::<(usize, usize)>; bw];
    let mut rows = vec![None::<(usize, usize)>; bh];
    for dy in 0..bh {
        for dx in 0..bw {
            if c.at(b.x0 as usize + dx, b.y0 as usize + dy) {
                let e = &mut cols[dx];
                *e = Some(e.map_or((dy, dy), |(a, z)| (a.min(dy), z.max(dy))));
                let e = &mut rows[dy];
                *e = Some(e.map_or((dx, dx), |(a, z)| (a.min(dx), z.max(dx))));
            }
        }
    }
    // Extent areas of every prefix and suffix of a profile: fwd[k] covers
    // lines [0, k), bwd[k] covers [k, n).
    fn sweep(p: &[Option<(usize, usize)>]) -> (Vec<u64>, Vec<u64>) {
        let n = p.len();
        let run = |order: &mut dyn Iterator<Item = usize>, out: &mut dyn FnMut(usize, u64)| {
            let (mut lo_i, mut hi_i, mut lo, mut hi) = (usize::MAX, 0usize, usize::MAX, 0usize);
            for i in order {
                if let Some((a, z)) = p[i] {
                    lo_i = lo_i.min(i);
                    hi_i = hi_i.max(i);
                    lo = lo.min(a);
                    hi = hi.max(z);
                }
                let ext = if lo_i == usize::MAX {
                    0
                } else {
                    ((hi_i - lo_i + 1) * (hi - lo + 1)) as u64
                };
                out(i, ext);
            }
        };
        let mut fwd = vec![0u64; n + 1];
        run(&mut (0..n), &mut |i, e| fwd[i + 1] = e);
        let mut bwd = vec![0u64; n + 1];
        run(&mut (0..n).rev(), &mut |i, e| bwd[i] = e);
        (fwd, bwd)
    }
    let mut best: Option<(PxBox, PxBox, u64)> = None;
    let (fx, bx) = sweep(&cols);
    for k in 1..bw {
        let total = fx[k] + bx[k];
        if best.as_ref().map_or(true, |(_, _, t)| total < *t) {
            let k = k as u32;
            best = Some((
                PxBox { x1: b.x0 + k, ..*b },
                PxBox { x0: b.x0 + k, ..*b },
                total,
            ));
        }
    }
    let (fy, by) = sweep(&rows);
    for k in 1..bh {
        let total = fy[k] + by[k];
        if best.as_ref().map_or(true, |(_, _, t)| total < *t) {
            let k = k as u32;
            best = Some((
                PxBox { y1: b.y0 + k, ..*b },
                PxBox { y0: b.y0 + k, ..*b },
                total,
            ));
        }
    }
    best
}

/// Splits sparse boxes so that overlapping or chained content does not
/// produce one box over mostly empty space. Pieces partition the input
/// box and are tightened to the original foreground, so every content
/// pixel stays covered.
fn refine(c: &Closed, b: PxBox, cfg: &DetectConfig, depth: u32, out: &mut Vec<PxBox>) {
    let Some(b) = c.tighten(b) else { return };
    let a = area(&b);
    let raw = c.count(b.x0 as usize, b.y0 as usize, b.x1 as usize, b.y1 as usize) as u64;
    if raw as f64 >= cfg.min_fill * a as f64 {
        out.push(b);
        return;
    }
    let mut ink = 0u64;
    for y in b.y0..b.y1 {
        for x in b.x0..b.x1 {
            ink += c.at(x as usize, y as usize) as u64;
        }
    }
    if depth == 0 || ink as f64 >= cfg.min_fill * a as f64 {
        out.push(b);
        return;
    }
    match best_cut(c, &b) {
        Some((l, r, total)) if (total as f64) <= (1.0 - cfg.min_cut_gain) * a as f64 => {
            refine(c, l, cfg, depth - 1, out);
            refine(c, r, cfg, depth - 1, out);
        }
        _ => out.push(b),
    }
}

/// Detected content boxes in normalized coordinates, largest first.
pub fn detect_boxes_in(img: &DynamicImage, cfg: &DetectConfig) -> Vec<Rect> {
    let gray = img.to_luma8();
    let (w, h) = gray.dimensions();
    if w == 0 || h == 0 {
        return Vec::new();
    }
    let mask = binarize(&gray, cfg);
    let comps = components(&mask, w as usize, h as usize, cfg.min_component_px);
    let max_gap = ((w as f64 * cfg.merge_gap_frac).ceil() as u32).max(1);
    let merged = merge_close(comps, max_gap);
    let closed = Closed::new(
        &mask,
        w as usize,
        h as usize,
        (max_gap as usize).div_ceil(2),
    );
    let mut pieces = Vec::with_capacity(merged.len());
    for b in merged {
        refine(&closed, b, cfg, 6, &mut pieces);
    }
    let mut rects: Vec<Rect> = pieces
        .into_iter()
        .map(|b| {
            Rect::new(
                b.x0 as f64 / w as f64,
                b.y0 as f64 / h as f64,
                b.x1 as f64 / w as f64,
                b.y1 as f64 / h as f64,
            )
        })
        .collect();
    rects.sort_by(|a, b| {
        b.area()
            .total_cmp(&a.area())
            .then(a.y0.total_cmp(&b.y0))
            .then(a.x0.total_cmp(&b.x0))
    });
    rects
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{blank, fill_rect};

    #[test]
    fn white_image_has_no_boxes() {
        let img = DynamicImage::ImageRgba8(blank(320, 180, [255, 255, 255, 255]));
        assert!(detect_boxes_in(&img, &DetectConfig::default()).is_empty());
    }

    #[test]
    fn black_square_is_found() {
        let mut img = blank(320, 180, [255, 255, 255, 255]);
        fill_rect(&mut img, &Rect::new(0.25, 0.25, 0.5, 0.5), [0, 0, 0, 255]);
        let boxes = detect_boxes_in(&DynamicImage::ImageRgba8(img), &DetectConfig::default());
        assert_eq!(boxes.len(), 1);
        let b = boxes[0];
        for (got, want) in b.to_array().iter().zip([0.25, 0.25, 0.5, 0.5]) {
            assert!((got - want).abs() < 0.01, "{b:?}");
        }
    }

    #[test]
    fn dark_slides_are_inverted() {
        let mut img = blank(320, 180, [0, 0, 0, 255]);
        fill_rect(
            &mut img,
            &Rect::new(0.6, 0.1, 0.9, 0.2),
            [255, 255, 255, 255],
        );
        let boxes = detect_boxes_in(&DynamicImage::ImageRgba8(img), &DetectConfig::default());
        assert_eq!(boxes.len(), 1);
        assert!((boxes[0].x0 - 0.6).abs() < 0.01);
    }

    #[test]
    fn nearby_boxes_merge() {
        let mut img = blank(400, 200, [255, 255, 255, 255]);
        fill_rect(&mut img, &Rect::new(0.1, 0.1, 0.2, 0.2), [0, 0, 0, 255]);
        // 0.005 * 400 = 2 px gap < 4 px threshold
        fill_rect(&mut img, &Rect::new(0.205, 0.1, 0.3, 0.2), [0, 0, 0, 255]);
        fill_rect(&mut img, &Rect::new(0.6, 0.6, 0.7, 0.7), [0, 0, 0, 255]);
        let boxes = detect_boxes_in(&DynamicImage::ImageRgba8(img), &DetectConfig::default());
        assert_eq!(boxes.len(), 2);
        assert!((boxes[0].x1 - 0.3).abs() < 0.01);
    }

    #[test]
    fn overlapping_blocks_leave_the_empty_corner_free() {
        // An L of two overlapping bars is one component; its bounding box
        // would swallow the empty lower right quadrant.
        let mut img = blank(320, 180, [255, 255, 255, 255]);
        fill_rect(&mut img, &Rect::new(0.05, 0.05, 0.95, 0.3), [0, 0, 0, 255]);
        fill_rect(&mut img, &Rect::new(0.05, 0.2, 0.3, 0.95), [0, 0, 0, 255]);
        let boxes = detect_boxes_in(&DynamicImage::ImageRgba8(img), &DetectConfig::default());
        let corner = Rect::new(0.4, 0.4, 0.9, 0.9);
        assert!(
            boxes.iter().all(|b| !b.interiors_intersect(&corner)),
            "{boxes:?}"
        );
        // Every ink pixel is still covered.
        for (x, y) in [(0.9, 0.1), (0.1, 0.9), (0.2, 0.25)] {
            assert!(boxes
                .iter()
                .any(|b| b.x0 <= x && x <= b.x1 && b.y0 <= y && y <= b.y1));
        }
    }
}
