//! Video frame access and interval sampling.
//!
//! Animated GIFs are decoded in-process. Everything else goes through
//! `ffprobe`/`ffmpeg`, which must be on `PATH`.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::Command;

use image::codecs::gif::{GifDecoder, GifEncoder, Repeat};
use image::{AnimationDecoder, Delay, DynamicImage, Frame, RgbaImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::TIME_EPS;
use crate::imaging;
use crate::par::{self, Execution};

#[derive(Debug, Error)]
pub enum VideoError {
    #[error("video unreadable: {0}")]
    VideoUnreadable(String),
    #[error("frame extraction tool missing: {0}")]
    ExtractionToolMissing(String),
    #[error("sampling interval must be a positive number of seconds, got {0}")]
    BadInterval(f64),
    #[error("cannot write frame: {0}")]
    Io(#[from] std::io::Error),
}

pub trait VideoSource: Send + Sync {
    fn duration_sec(&self) -> f64;
    /// The frame on screen at `t` seconds.
    fn frame_at(&self, t: f64) -> Result<DynamicImage, VideoError>;
}

/// Fully decoded animated GIF.
pub struct GifVideo {
    /// Frame start times, ascending, first is 0.
    starts: Vec<f64>,
    frames: Vec<RgbaImage>,
    duration: f64,
}

impl GifVideo {
    pub fn open(path: &Path) -> Result<Self, VideoError> {
        let unreadable = |e: &dyn std::fmt::Display| {
            VideoError::VideoUnreadable(format!("{}: {e}", path.display()))
        };
        let file = File::open(path).map_err(|e| unreadable(&e))?;
        let decoder = GifDecoder::new(BufReader::new(file)).map_err(|e| unreadable(&e))?;
        let frames = decoder
            .into_frames()
            .collect_frames()
            .map_err(|e| unreadable(&e))?;
        let mut starts = Vec::with_capacity(frames.len());
        let mut images = Vec::with_capacity(frames.len());
        let mut t = 0.0;
        for f in frames {
            let (num, den) = f.delay().numer_denom_ms();
            starts.push(t);
            t += num as f64 / den as f64 / 1000.0;
            images.push(f.into_buffer());
        }
        if images.is_empty() || t <= 0.0 {
            return Err(VideoError::VideoUnreadable(format!(
                "{}: zero-length video",
                path.display()
            )));
        }
        Ok(GifVideo {
            starts,
            frames: images,
            duration: t,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }
}

impl VideoSource for GifVideo {
    fn duration_sec(&self) -> f64 {
        self.duration
    }

    fn frame_at(&self, t: f64) -> Result<DynamicImage, VideoError> {
        let i = self
            .starts
            .partition_point(|s| *s <= t + 1e-9)
            .saturating_sub(1);
        Ok(DynamicImage::ImageRgba8(self.frames[i].clone()))
    }
}

/// Any container ffmpeg understands.
pub struct FfmpegVideo {
    path: PathBuf,
    duration: f64,
}

fn run_tool(cmd: &mut Command, tool: &str) -> Result<Vec<u8>, VideoError> {
    let out = cmd.output().map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => VideoError::ExtractionToolMissing(tool.to_owned()),
        _ => VideoError::VideoUnreadable(format!("{tool}: {e}")),
    })?;
    if !out.status.success() {
        return Err(VideoError::VideoUnreadable(format!(
            "{tool} failed: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }
    Ok(out.stdout)
}

impl FfmpegVideo {
    pub fn open(path: &Path) -> Result<Self, VideoError> {
        if !path.is_file() {
            return Err(VideoError::VideoUnreadable(format!(
                "{}: no such file",
                path.display()
            )));
        }
        let out = run_tool(
            Command::new("ffprobe")
                .args([
                    "-v",
                    "error",
                    "-show_entries",
                    "format=duration",
                    "-of",
                    "csv=p=0",
                ])
                .arg(path),
            "ffprobe",
        )?;
        let duration: f64 = String::from_utf8_lossy(&out)
            .trim()
            .parse()
            .map_err(|_| VideoError::VideoUnreadable(format!("{}: no duration", path.display())))?;
        if duration <= 0.0 {
            return Err(VideoError::VideoUnreadable(format!(
                "{}: zero-length video",
                path.display()
            )));
        }
        Ok(FfmpegVideo {
            path: path.to_owned(),
            duration,
        })
    }
}

impl VideoSource for FfmpegVideo {
    fn duration_sec(&self) -> f64 {
        self.duration
    }

    fn frame_at(&self, t: f64) -> Result<DynamicImage, VideoError> {
        // Seeking to the exact end yields no frame; back off slightly.
        let t = t.min(self.duration - 0.05).max(0.0);
        let png = run_tool(
            Command::new("ffmpeg")
                .args(["-v", "error", "-ss", &format!("{t:.3}"), "-i"])
                .arg(&self.path)
                .args(["-frames:v", "1", "-f", "image2pipe", "-vcodec", "png", "-"]),
            "ffmpeg",
        )?;
        imaging::decode(&png).map_err(|e| VideoError::VideoUnreadable(e.to_string()))
    }
}

pub fn open_video(path: &Path) -> Result<Box<dyn VideoSource>, VideoError> {
    let mut magic = [0u8; 6];
    let is_gif = File::open(path)
        .and_then(|mut f| std::io::Read::read_exact(&mut f, &mut magic))
        .map(|_| &magic[..4] == b"GIF8")
        .unwrap_or(false);
    if is_gif {
        Ok(Box::new(GifVideo::open(path)?))
    } else {
        Ok(Box::new(FfmpegVideo::open(path)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FrameSample {
    pub timestamp_sec: f64,
    pub image_ref: PathBuf,
    pub perceptual_hash: u64,
}

/// `0, i, 2i, ...` up to the duration, plus the final instant when the
/// duration is not a multiple of the interval.
pub fn sample_times(duration: f64, interval: f64) -> Vec<f64> {
    let n = (duration / interval + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * interval).collect();
    if duration - times[n] > TIME_EPS {
        times.push(duration);
    }
    times
}

/// Writes one PNG per sample time into `out_dir` and hashes each frame.
pub fn sample_frames(
    video: &dyn VideoSource,
    interval: f64,
    out_dir: &Path,
    exec: Execution,
) -> Result<Vec<FrameSample>, VideoError> {
    if !(interval.is_finite() && interval > 0.0) {
        return Err(VideoError::BadInterval(interval));
    }
    let duration = video.duration_sec();
    if !(duration.is_finite() && duration > 0.0) {
        return Err(VideoError::VideoUnreadable("zero-length video".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let indexed: Vec<(usize, f64)> = sample_times(duration, interval)
        .into_iter()
        .enumerate()
        .collect();
    par::try_map(exec, &indexed, |&(i, t)| {
        let img = video.frame_at(t)?;
        let path = out_dir.join(format!("frame_{i:05}.png"));
        let png =
            imaging::encode_png(&img).map_err(|e| VideoError::VideoUnreadable(e.to_string()))?;
        std::fs::write(&path, png)?;
        Ok(FrameSample {
            timestamp_sec: t,
            image_ref: path,
            perceptual_hash: imaging::average_hash(&img),
        })
    })
}

/// Writes an animated GIF; each frame is shown for its paired duration.
pub fn write_gif(path: &Path, frames: &[(RgbaImage, f64)]) -> Result<(), VideoError> {
    let file = File::create(path)?;
    let mut enc = GifEncoder::new_with_speed(std::io::BufWriter::new(file), 30);
    enc.set_repeat(Repeat::Infinite)
        .map_err(|e| VideoError::VideoUnreadable(e.to_string()))?;
    for (img, secs) in frames {
        let delay = Delay::from_numer_denom_ms((secs * 1000.0).round() as u32, 1);
        enc.encode_frame(Frame::from_parts(img.clone(), 0, 0, delay))
            .map_err(|e| VideoError::VideoUnreadable(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn times_include_first_and_last() {
        assert_eq!(sample_times(600.0, 2.0).len(), 301);
        let t = sample_times(5.0, 2.0);
        assert_eq!(t, vec![0.0, 2.0, 4.0, 5.0]);
    }

    #[test]
    fn gif_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.gif");
        let white = imaging::blank(32, 18, [255, 255, 255, 255]);
        let black = imaging::blank(32, 18, [0, 0, 0, 255]);
        write_gif(&p, &[(white, 3.0), (black, 2.0)]).unwrap();
        let v = open_video(&p).unwrap();
        assert!((v.duration_sec() - 5.0).abs() < 1e-6);
        assert_eq!(
            v.frame_at(2.9).unwrap().to_rgba8().get_pixel(0, 0).0[0],
            255
        );
        assert_eq!(v.frame_at(3.0).unwrap().to_rgba8().get_pixel(0, 0).0[0], 0);
        assert_eq!(v.frame_at(5.0).unwrap().to_rgba8().get_pixel(0, 0).0[0], 0);
    }

    #[test]
    fn missing_or_bogus_input() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            open_video(&dir.path().join("nope.mp4")),
            Err(VideoError::VideoUnreadable(_))
        ));
        let junk = dir.path().join("junk.mp4");
        std::fs::write(&junk, b"not a video").unwrap();
        assert!(matches!(
            open_video(&junk),
            Err(VideoError::ExtractionToolMissing(_) | VideoError::VideoUnreadable(_))
        ));
    }

    #[test]
    fn bad_interval() {
        struct Still;
        impl VideoSource for Still {
            fn duration_sec(&self) -> f64 {
                1.0
            }
            fn frame_at(&self, _: f64) -> Result<DynamicImage, VideoError> {
                Ok(DynamicImage::ImageRgba8(imaging::blank(
                    4,
                    4,
                    [0, 0, 0, 255],
                )))
            }
        }
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            sample_frames(&Still, 0.0, dir.path(), Execution::Sequential),
            Err(VideoError::BadInterval(_))
        ));
    }
}
