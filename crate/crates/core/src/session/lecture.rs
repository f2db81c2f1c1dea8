use std::path::{Path, PathBuf};

use image::DynamicImage;

use crate::content::{self, ContentError, LectureBundle};
use crate::geometry::Rect;
use crate::layout::{detect_boxes_in, DetectConfig};
use crate::par::{self, Execution};

/// A loaded bundle plus its decoded slides and detected content boxes,
/// shared read-only by every session on it.
#[derive(Debug)]
pub struct Lecture {
    pub bundle: LectureBundle,
    pub dir: PathBuf,
    slides: Vec<DynamicImage>,
    boxes: Vec<Vec<Rect>>,
}

impl Lecture {
    pub fn load(dir: &Path, exec: Execution) -> Result<Self, ContentError> {
        let bundle = content::load_bundle(dir)?;
        let refs: Vec<(usize, &str)> = bundle
            .sections
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.slide_image_ref.as_str()))
            .collect();
        let slides = par::try_map(exec, &refs, |&(i, r)| {
            crate::imaging::open(&dir.join(r)).map_err(|e| {
                ContentError::violation(format!("sections[{i}].slideImageRef"), e.to_string())
            })
        })?;
        Ok(Self::from_parts(bundle, dir.to_owned(), slides, exec))
    }

    pub fn from_parts(
        bundle: LectureBundle,
        dir: PathBuf,
        slides: Vec<DynamicImage>,
        exec: Execution,
    ) -> Self {
        assert_eq!(bundle.sections.len(), slides.len(), "one slide per section");
        let cfg = DetectConfig::default();
        let boxes = par::map(exec, &slides, |s| detect_boxes_in(s, &cfg));
        Lecture {
            bundle,
            dir,
            slides,
            boxes,
        }
    }

    pub fn slide(&self, section: usize) -> &DynamicImage {
        &self.slides[section]
    }

    pub fn content_boxes(&self, section: usize) -> &[Rect] {
        &self.boxes[section]
    }
}
