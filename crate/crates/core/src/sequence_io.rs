//! Frame sequences on disk: OTB-style directories (`img/` plus
//! `groundtruth_rect.txt`), ground-truth/result files, confidence dumps and
//! overlay images.
//!
//! Rectangles in files are 1-based `x,y,w,h`; everything in memory is 0-based.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageReader, Rgb, RgbImage};

use crate::context_model::ConfidenceMap;
use crate::error::{Result, StcError};
use crate::spectral::RealGrid;
use crate::tracker::BoundingBox;

pub const GROUNDTRUTH_FILE: &str = "groundtruth_rect.txt";

/// Single-channel image with intensities in `[0, 255]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl Frame {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(StcError::invalid("frame dimensions must be positive"));
        }
        if pixels.len() != height * width {
            return Err(StcError::invalid(format!(
                "frame {height}x{width} needs {} pixels, got {}",
                height * width,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|p| !(0.0..=255.0).contains(*p)) {
            return Err(StcError::invalid(format!("pixel value {bad} outside [0, 255]")));
        }
        Ok(Self { height, width, pixels })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn to_grid(&self) -> RealGrid {
        RealGrid::from_parts_unchecked(self.height, self.width, self.pixels.clone())
    }

    pub fn from_gray_image(img: &GrayImage) -> Self {
        let (w, h) = img.dimensions();
        Self {
            height: h as usize,
            width: w as usize,
            pixels: img.as_raw().iter().map(|&p| f64::from(p)).collect(),
        }
    }

    /// Rounds to 8-bit for saving.
    pub fn to_gray_image(&self) -> GrayImage {
        let raw = self.pixels.iter().map(|&p| p.round().clamp(0.0, 255.0) as u8).collect();
        GrayImage::from_raw(self.width as u32, self.height as u32, raw).expect("buffer matches dimensions")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceManifest {
    pub name: String,
    pub frame_paths: Vec<PathBuf>,
    pub groundtruth: Option<Vec<BoundingBox>>,
}

impl SequenceManifest {
    pub fn len(&self) -> usize {
        self.frame_paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame_paths.is_empty()
    }

    pub fn load_frames(&self) -> Result<Vec<Frame>> {
        self.frame_paths.iter().map(|p| load_frame(p)).collect()
    }
}

/// Lists frames in `dir` matching `pattern` (which may include a
/// subdirectory, e.g. `img/*.jpg`), sorted lexicographically. Ground truth is
/// read from `groundtruth_rect.txt` next to the frames or in `dir`.
pub fn load_sequence(dir: &Path, pattern: &str) -> Result<SequenceManifest> {
    if !dir.is_dir() {
        return Err(StcError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("sequence directory {} does not exist", dir.display()),
        )));
    }
    let full = dir.join(pattern);
    let full = full
        .to_str()
        .ok_or_else(|| StcError::invalid(format!("non UTF-8 path {}", full.display())))?;
    let mut frame_paths: Vec<PathBuf> = glob::glob(full)
        .map_err(|e| StcError::invalid(format!("bad pattern `{pattern}`: {e}")))?
        .filter_map(|entry| entry.ok())
        .filter(|p| p.is_file())
        .collect();
    frame_paths.sort();
    if frame_paths.is_empty() {
        return Err(StcError::EmptySequence {
            dir: dir.to_path_buf(),
            pattern: pattern.to_string(),
        });
    }

    let mut candidates = Vec::new();
    if let Some(parent) = frame_paths[0].parent() {
        candidates.push(parent.join(GROUNDTRUTH_FILE));
    }
    candidates.push(dir.join(GROUNDTRUTH_FILE));
    let groundtruth = match candidates.iter().find(|p| p.is_file()) {
        Some(path) => {
            let boxes = parse_groundtruth(&fs::read_to_string(path)?)?;
            if boxes.len() != frame_paths.len() {
                return Err(StcError::GroundTruthMismatch {
                    frames: frame_paths.len(),
                    boxes: boxes.len(),
                });
            }
            Some(boxes)
        }
        None => None,
    };

    let name = dir
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "sequence".to_string());
    Ok(SequenceManifest {
        name,
        frame_paths,
        groundtruth,
    })
}

/// ITU-R 601 luma: `0.299 R + 0.587 G + 0.114 B`.
pub fn to_grayscale(r: &RealGrid, g: &RealGrid, b: &RealGrid) -> Result<Frame> {
    if r.dims() != g.dims() || r.dims() != b.dims() {
        return Err(StcError::invalid("color channels differ in size"));
    }
    let pixels = r
        .values()
        .iter()
        .zip(g.values())
        .zip(b.values())
        .map(|((&r, &g), &b)| 0.299 * r + 0.587 * g + 0.114 * b)
        .collect();
    Frame::new(r.height(), r.width(), pixels)
}

const SUPPORTED_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "bmp", "pgm"];

/// Decodes PNG, JPEG, BMP or PGM. Single-channel images are taken as is;
/// color images go through [`to_grayscale`].
pub fn load_frame(path: &Path) -> Result<Frame> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    if !SUPPORTED_EXTENSIONS.contains(&ext.as_str()) {
        return Err(StcError::UnsupportedFormat(path.to_path_buf()));
    }
    let img = ImageReader::open(path)?
        .with_guessed_format()?
        .decode()
        .map_err(|source| StcError::Image {
            path: path.to_path_buf(),
            source,
        })?;
    match img {
        DynamicImage::ImageLuma8(gray) => Ok(Frame::from_gray_image(&gray)),
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = (rgb.width() as usize, rgb.height() as usize);
            let channel = |k: usize| {
                RealGrid::new(h, w, rgb.pixels().map(|p| f64::from(p.0[k])).collect())
            };
            to_grayscale(&channel(0)?, &channel(1)?, &channel(2)?)
        }
    }
}

pub fn save_frame(frame: &Frame, path: &Path) -> Result<()> {
    frame.to_gray_image().save(path).map_err(|source| StcError::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses one `x,y,w,h` rectangle per non-empty line. Fields are separated
/// by commas (optionally padded with whitespace) or by tabs/spaces.
pub fn parse_groundtruth(contents: &str) -> Result<Vec<BoundingBox>> {
    let mut boxes = Vec::new();
    for (i, line) in contents.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        let err = |message: String| StcError::Parse {
            line: line_no,
            message,
        };
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        let mut v = [0.0; 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| err(format!("`{f}` is not a number")))?;
        }
        if v[2] <= 0.0 || v[3] <= 0.0 {
            return Err(err(format!("width and height must be positive, got {}x{}", v[2], v[3])));
        }
        boxes.push(BoundingBox::new(v[0] - 1.0, v[1] - 1.0, v[2], v[3]));
    }
    Ok(boxes)
}

/// One `x,y,w,h` line per box, 1-based, two decimals.
pub fn format_results(boxes: &[BoundingBox]) -> String {
    boxes
        .iter()
        .map(|b| format!("{:.2},{:.2},{:.2},{:.2}\n", b.x + 1.0, b.y + 1.0, b.w, b.h))
        .collect()
}

pub fn write_results(path: &Path, boxes: &[BoundingBox]) -> Result<()> {
    fs::write(path, format_results(boxes))?;
    Ok(())
}

/// Binary PGM of the min-max normalized map. Constant maps are written as
/// all zeros.
pub fn dump_confidence(map: &ConfidenceMap, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode_confidence_pgm(map))?;
    Ok(())
}

pub fn encode_confidence_pgm(map: &ConfidenceMap) -> Vec<u8> {
    let vals = map.grid.values();
    let (lo, hi) = vals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    let mut out = format!("P5\n{} {}\n255\n", map.grid.width(), map.grid.height()).into_bytes();
    out.extend(vals.iter().map(|&v| {
        if range > 0.0 {
            (255.0 * (v - lo) / range).round() as u8
        } else {
            0
        }
    }));
    out
}

/// Draws `bbox` as a one-pixel red outline over the frame and saves a PNG.
pub fn write_overlay(frame: &Frame, bbox: &BoundingBox, path: &Path) -> Result<()> {
    let gray = frame.to_gray_image();
    let mut rgb = RgbImage::from_fn(gray.width(), gray.height(), |x, y| {
        let v = gray.get_pixel(x, y).0[0];
        Rgb([v, v, v])
    });
    let (w, h) = (rgb.width() as i64, rgb.height() as i64);
    let x0 = bbox.x.round() as i64;
    let y0 = bbox.y.round() as i64;
    let x1 = (bbox.x + bbox.w).round() as i64 - 1;
    let y1 = (bbox.y + bbox.h).round() as i64 - 1;
    let red = Rgb([255, 0, 0]);
    let mut put = |x: i64, y: i64| {
        if (0..w).contains(&x) && (0..h).contains(&y) {
            rgb.put_pixel(x as u32, y as u32, red);
        }
    };
    for x in x0..=x1 {
        put(x, y0);
        put(x, y1);
    }
    for y in y0..=y1 {
        put(x0, y);
        put(x1, y);
    }
    rgb.save(path).map_err(|source| StcError::Image {
        path: path.to_path_buf(),
        source,
    })
}
