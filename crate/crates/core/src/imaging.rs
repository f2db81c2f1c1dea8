//! Image helpers: loading, grayscale reduction, perceptual hashing and
//! region cropping.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbaImage};

use crate::geometry::Rect;

pub type ImageResult<T> = Result<T, image::ImageError>;

pub fn open(path: &Path) -> ImageResult<DynamicImage> {
    image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()
}

pub fn decode(bytes: &[u8]) -> ImageResult<DynamicImage> {
    image::load_from_memory(bytes)
}

pub fn encode_png(img: &DynamicImage) -> ImageResult<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

/// Rec. 601 luma.
pub fn to_gray(img: &DynamicImage) -> GrayImage {
    img.to_luma8()
}

/// Box-filter downsample of a grayscale image to `w`×`h` cell means.
pub fn cell_means(gray: &GrayImage, w: u32, h: u32) -> Vec<f64> {
    let (iw, ih) = gray.dimensions();
    let mut out = vec![0.0; (w * h) as usize];
    if iw == 0 || ih == 0 {
        return out;
    }
    for cy in 0..h {
        let y0 = (cy as u64 * ih as u64 / h as u64) as u32;
        let y1 = (((cy + 1) as u64 * ih as u64 / h as u64) as u32)
            .max(y0 + 1)
            .min(ih);
        for cx in 0..w {
            let x0 = (cx as u64 * iw as u64 / w as u64) as u32;
            let x1 = (((cx + 1) as u64 * iw as u64 / w as u64) as u32)
                .max(x0 + 1)
                .min(iw);
            let mut sum = 0u64;
            for y in y0..y1 {
                for x in x0..x1 {
                    sum += gray.get_pixel(x, y).0[0] as u64;
                }
            }
            let n = ((y1 - y0) * (x1 - x0)).max(1) as f64;
            out[(cy * w + cx) as usize] = sum as f64 / n;
        }
    }
    out
}

/// 64-bit average hash: 8×8 cell means, bit set where the cell is brighter
/// than the overall mean. Bit 63 is the top-left cell.
pub fn average_hash(img: &DynamicImage) -> u64 {
    let cells = cell_means(&to_gray(img), 8, 8);
    let mean = cells.iter().sum::<f64>() / cells.len() as f64;
    cells
        .iter()
        .fold(0u64, |acc, &c| (acc << 1) | u64::from(c > mean + 1e-9))
}

pub fn hamming(a: u64, b: u64) -> u32 {
    (a ^ b).count_ones()
}

/// True when every pixel has the same luma within `tolerance`.
pub fn is_uniform(img: &DynamicImage, tolerance: u8) -> bool {
    let gray = to_gray(img);
    let mut pixels = gray.pixels().map(|p| p.0[0]);
    let Some(first) = pixels.next() else {
        return true;
    };
    let (mut lo, mut hi) = (first, first);
    for p in pixels {
        lo = lo.min(p);
        hi = hi.max(p);
    }
    hi - lo <= tolerance
}

/// Crops a normalized rectangle; degenerate rectangles yield a 1×1 crop.
pub fn crop_normalized(img: &DynamicImage, rect: &Rect) -> DynamicImage {
    let (w, h) = (img.width(), img.height());
    let r = rect.clamp_unit();
    let x0 = ((r.x0 * w as f64).floor() as u32).min(w.saturating_sub(1));
    let y0 = ((r.y0 * h as f64).floor() as u32).min(h.saturating_sub(1));
    let x1 = ((r.x1 * w as f64).ceil() as u32).clamp(x0 + 1, w.max(x0 + 1));
    let y1 = ((r.y1 * h as f64).ceil() as u32).clamp(y0 + 1, h.max(y0 + 1));
    img.crop_imm(x0, y0, x1 - x0, y1 - y0)
}

pub fn blank(w: u32, h: u32, rgba: [u8; 4]) -> RgbaImage {
    RgbaImage::from_pixel(w, h, image::Rgba(rgba))
}

/// Fills a normalized rectangle on an RGBA canvas.
pub fn fill_rect(img: &mut RgbaImage, rect: &Rect, rgba: [u8; 4]) {
    let (w, h) = img.dimensions();
    let x0 = (rect.x0 * w as f64).round() as u32;
    let y0 = (rect.y0 * h as f64).round() as u32;
    let x1 = ((rect.x1 * w as f64).round() as u32).min(w);
    let y1 = ((rect.y1 * h as f64).round() as u32).min(h);
    for y in y0..y1 {
        for x in x0..x1 {
            img.put_pixel(x, y, image::Rgba(rgba));
        }
    }
}
