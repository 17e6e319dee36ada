//! Deterministic synthetic sequences with exact ground truth.
//!
//! A fixed pseudo-random textured patch is rendered over a static textured
//! background at each trajectory point. Fractional positions and scales are
//! handled by bilinear resampling of the patch texture. Pixel `i` covers
//! `[i, i + 1)`, so a patch centered at `cx` with width `w` covers the pixels
//! whose centers `i + 0.5` fall in `[cx - w/2, cx + w/2)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, StcError};
use crate::sequence_io::Frame;
use crate::tracker::BoundingBox;

/// Default occluder intensity, close to the mean of the rendered scene.
pub const NEUTRAL_OCCLUDER: f64 = 128.0;

pub const PRESETS: &[&str] = &["translation-100", "occlusion-60", "zoom-60"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub height: usize,
    pub width: usize,
}

/// Frames `start..=end` (0-based) have `fraction` of the patch covered from
/// its left edge inward by a flat rectangle of intensity `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionWindow {
    pub start: usize,
    pub end: usize,
    pub fraction: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub frame_size: Dims,
    pub patch_size: Dims,
    /// Per-frame patch centers `(x, y)`.
    pub trajectory: Vec<(f64, f64)>,
    /// Per-frame patch scale.
    pub scale_track: Vec<f64>,
    pub occlusion_windows: Vec<OcclusionWindow>,
    pub noise_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSequence {
    pub frames: Vec<Frame>,
    pub groundtruth: Vec<BoundingBox>,
}

impl SynthSpec {
    /// Spec with unit scale and no occlusion.
    pub fn new(frame_size: Dims, patch_size: Dims, trajectory: Vec<(f64, f64)>, noise_sigma: f64, seed: u64) -> Self {
        let n = trajectory.len();
        Self {
            frame_size,
            patch_size,
            trajectory,
            scale_track: vec![1.0; n],
            occlusion_windows: Vec::new(),
            noise_sigma,
            seed,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        let frame = Dims { height: 240, width: 320 };
        let patch = Dims { height: 40, width: 40 };
        match name {
            "translation-100" => {
                let traj = random_walk((160.0, 120.0), 100, 5.0, 11, (50.0, 270.0, 50.0, 190.0));
                Ok(Self::new(frame, patch, traj, 2.0, 7))
            }
            "occlusion-60" => {
                let traj = random_walk((160.0, 120.0), 60, 1.5, 23, (50.0, 270.0, 50.0, 190.0));
                let mut spec = Self::new(frame, patch, traj, 2.0, 5);
                spec.occlusion_windows.push(OcclusionWindow {
                    start: 20,
                    end: 35,
                    fraction: 0.5,
                    value: NEUTRAL_OCCLUDER,
                });
                Ok(spec)
            }
            "zoom-60" => {
                let traj = vec![(160.0, 120.0); 60];
                let mut spec = Self::new(frame, patch, traj, 1.0, 3);
                spec.scale_track = linear_ramp(1.0, 1.3, 60);
                Ok(spec)
            }
            other => Err(StcError::InvalidSpec(format!(
                "unknown preset `{other}`; available: {}",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.trajectory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectory.is_empty()
    }

    /// Ground-truth box for frame `t`.
    pub fn groundtruth_box(&self, t: usize) -> BoundingBox {
        let (cx, cy) = self.trajectory[t];
        let s = self.scale_track[t];
        BoundingBox::from_center(
            cx,
            cy,
            s * self.patch_size.width as f64,
            s * self.patch_size.height as f64,
        )
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(StcError::InvalidSpec(m));
        if self.frame_size.height == 0 || self.frame_size.width == 0 {
            return bad("frame size must be positive".into());
        }
        if self.patch_size.height == 0 || self.patch_size.width == 0 {
            return bad("patch size must be positive".into());
        }
        if self.trajectory.is_empty() {
            return bad("trajectory is empty".into());
        }
        if self.trajectory.len() != self.scale_track.len() {
            return bad(format!(
                "trajectory has {} points but scale track has {}",
                self.trajectory.len(),
                self.scale_track.len()
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise sigma must be non-negative, got {}", self.noise_sigma));
        }
        for occ in &self.occlusion_windows {
            if !(0.0..=0.9).contains(&occ.fraction) {
                return bad(format!("occlusion fraction {} outside [0, 0.9]", occ.fraction));
            }
            if !(0.0..=255.0).contains(&occ.value) {
                return bad(format!("occluder intensity {} outside [0, 255]", occ.value));
            }
            if occ.start > occ.end {
                return bad(format!("occlusion window {}..={} is empty", occ.start, occ.end));
            }
        }
        let (fw, fh) = (self.frame_size.width as f64, self.frame_size.height as f64);
        for t in 0..self.len() {
            let s = self.scale_track[t];
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("frame {t}: scale {s} must be positive"));
            }
            let b = self.groundtruth_box(t);
            if !(b.x.is_finite() && b.y.is_finite()) || b.x >= fw || b.y >= fh || b.x + b.w <= 0.0 || b.y + b.h <= 0.0 {
                return bad(format!("frame {t}: patch lies entirely outside the frame"));
            }
        }
        Ok(())
    }
}

/// Linearly spaced values from `from` to `to` inclusive.
pub fn linear_ramp(from: f64, to: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Random walk of `frames` points starting at `start`, each step of length
/// at most `max_step` in a uniform direction, reflected into
/// `(x_min, x_max, y_min, y_max)`.
pub fn random_walk(start: (f64, f64), frames: usize, max_step: f64, seed: u64, bounds: (f64, f64, f64, f64)) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x_min, x_max, y_min, y_max) = bounds;
    let reflect = |v: f64, lo: f64, hi: f64| {
        if v < lo {
            (2.0 * lo - v).min(hi)
        } else if v > hi {
            (2.0 * hi - v).max(lo)
        } else {
            v
        }
    };
    let mut pos = start;
    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        if t > 0 {
            let angle = rng.random::<f64>() * 2.0 * PI;
            let len = rng.random::<f64>() * max_step;
            pos = (
                reflect(pos.0 + len * angle.cos(), x_min, x_max),
                reflect(pos.1 + len * angle.sin(), y_min, y_max),
            );
        }
        out.push(pos);
    }
    out
}

/// Translation-only sequence; every scale must be 1.
pub fn gen_translation_sequence(spec: &SynthSpec) -> Result<SyntheticSequence> {
    if spec.scale_track.iter().any(|&s| s != 1.0) {
        return Err(StcError::InvalidSpec("translation sequences need a unit scale track".into()));
    }
    render(spec, false)
}

/// Patch rendered at `scale_track[t]` times its base size.
pub fn gen_zoom_sequence(spec: &SynthSpec) -> Result<SyntheticSequence> {
    if let Some(s) = spec.scale_track.iter().find(|s| !(0.5..=2.0).contains(*s)) {
        return Err(StcError::InvalidSpec(format!("zoom scale {s} outside [0.5, 2]")));
    }
    render(spec, false)
}

/// Like [`gen_zoom_sequence`] with the spec's occlusion windows drawn in.
pub fn gen_occlusion_sequence(spec: &SynthSpec) -> Result<SyntheticSequence> {
    render(spec, true)
}

struct Texture {
    height: usize,
    width: usize,
    texels: Vec<f64>,
}

impl Texture {
    /// Coarse random blobs plus fine random grain, values roughly in [40, 220].
    fn generate(size: Dims, rng: &mut ChaCha8Rng) -> Self {
        const CELLS: usize = 6;
        let coarse: Vec<f64> = (0..(CELLS + 1) * (CELLS + 1))
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let mut texels = Vec::with_capacity(size.height * size.width);
        for r in 0..size.height {
            for c in 0..size.width {
                let v = (r as f64 + 0.5) / size.height as f64 * CELLS as f64;
                let u = (c as f64 + 0.5) / size.width as f64 * CELLS as f64;
                let blob = bilinear(&coarse, CELLS + 1, CELLS + 1, v - 0.5, u - 0.5);
                let grain: f64 = rng.random_range(-1.0..1.0);
                texels.push(130.0 + 55.0 * blob + 30.0 * grain);
            }
        }
        Self {
            height: size.height,
            width: size.width,
            texels,
        }
    }

    /// Bilinear sample at texel coordinates (texel centers at integers).
    fn sample(&self, row: f64, col: f64) -> f64 {
        bilinear(&self.texels, self.height, self.width, row, col)
    }
}

fn bilinear(values: &[f64], height: usize, width: usize, row: f64, col: f64) -> f64 {
    let row = row.clamp(0.0, (height - 1) as f64);
    let col = col.clamp(0.0, (width - 1) as f64);
    let r0 = row.floor() as usize;
    let c0 = col.floor() as usize;
    let r1 = (r0 + 1).min(height - 1);
    let c1 = (c0 + 1).min(width - 1);
    let fr = row - r0 as f64;
    let fc = col - c0 as f64;
    let at = |r: usize, c: usize| values[r * width + c];
    (1.0 - fr) * ((1.0 - fc) * at(r0, c0) + fc * at(r0, c1)) + fr * ((1.0 - fc) * at(r1, c0) + fc * at(r1, c1))
}

/// Static background: a low-frequency gradient plus fixed speckle.
fn background(size: Dims, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let speckle = Normal::new(0.0, 4.0).expect("valid normal");
    let (h, w) = (size.height as f64, size.width as f64);
    let mut out = Vec::with_capacity(size.height * size.width);
    for r in 0..size.height {
        for c in 0..size.width {
            let y = r as f64 / h;
            let x = c as f64 / w;
            let base = 105.0 + 30.0 * x - 20.0 * y + 15.0 * (2.0 * PI * x).sin() * (PI * y).cos();
            out.push(base + speckle.sample(rng));
        }
    }
    out
}

/// Background of `spec` without any patch, before per-frame noise.
pub fn background_frame(spec: &SynthSpec) -> Result<Frame> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let _ = Texture::generate(spec.patch_size, &mut rng);
    let bg = background(spec.frame_size, &mut rng);
    Frame::new(
        spec.frame_size.height,
        spec.frame_size.width,
        bg.into_iter().map(|v| v.clamp(0.0, 255.0)).collect(),
    )
}

fn render(spec: &SynthSpec, with_occlusion: bool) -> Result<SyntheticSequence> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let texture = Texture::generate(spec.patch_size, &mut rng);
    let bg = background(spec.frame_size, &mut rng);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| StcError::InvalidSpec(e.to_string()))?;
    let (fh, fw) = (spec.frame_size.height, spec.frame_size.width);

    let mut frames = Vec::with_capacity(spec.len());
    let mut groundtruth = Vec::with_capacity(spec.len());
    for t in 0..spec.len() {
        let gt = spec.groundtruth_box(t);
        let scale = spec.scale_track[t];
        let mut pixels = bg.clone();

        let cols = pixel_span(gt.x, gt.w, fw);
        let rows = pixel_span(gt.y, gt.h, fh);
        for r in rows.clone() {
            let tr = (r as f64 + 0.5 - gt.y) / scale - 0.5;
            for c in cols.clone() {
                let tc = (c as f64 + 0.5 - gt.x) / scale - 0.5;
                pixels[r * fw + c] = texture.sample(tr, tc);
            }
        }

        if with_occlusion {
            for occ in spec.occlusion_windows.iter().filter(|o| (o.start..=o.end).contains(&t)) {
                let occ_cols = pixel_span(gt.x, occ.fraction * gt.w, fw);
                for r in rows.clone() {
                    for c in occ_cols.clone() {
                        pixels[r * fw + c] = occ.value;
                    }
                }
            }
        }

        if spec.noise_sigma > 0.0 {
            let mut frame_rng = ChaCha8Rng::seed_from_u64(spec.seed);
            frame_rng.set_stream(t as u64 + 1);
            for p in pixels.iter_mut() {
                *p += noise.sample(&mut frame_rng);
            }
        }
        for p in pixels.iter_mut() {
            *p = p.clamp(0.0, 255.0);
        }
        frames.push(Frame::new(fh, fw, pixels)?);
        groundtruth.push(gt);
    }
    Ok(SyntheticSequence { frames, groundtruth })
}

/// Pixels whose centers lie in `[start, start + len)`, clipped to `0..limit`.
fn pixel_span(start: f64, len: f64, limit: usize) -> std::ops::Range<usize> {
    let first = (start - 0.5).ceil().max(0.0);
    let end = (start + len - 0.5).ceil().clamp(0.0, limit as f64);
    let first = first.min(end);
    first as usize..end as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(traj: Vec<(f64, f64)>, noise: f64) -> SynthSpec {
        SynthSpec::new(Dims { height: 100, width: 120 }, Dims { height: 20, width: 24 }, traj, noise, 42)
    }

    #[test]
    fn groundtruth_follows_trajectory() {
        let seq = gen_translation_sequence(&small_spec(vec![(50.0, 50.0), (53.0, 52.0)], 2.0)).unwrap();
        let (a, b) = (seq.groundtruth[0].center(), seq.groundtruth[1].center());
        assert_eq!((b.0 - a.0, b.1 - a.1), (3.0, 2.0));
        assert_eq!(seq.groundtruth[0].w, 24.0);
        assert_eq!(seq.groundtruth[0].h, 20.0);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = small_spec(vec![(50.0, 50.0), (53.5, 52.25)], 3.0);
        assert_eq!(gen_translation_sequence(&spec).unwrap(), gen_translation_sequence(&spec).unwrap());
    }

    #[test]
    fn noiseless_static_frames_are_identical() {
        let seq = gen_translation_sequence(&small_spec(vec![(60.0, 40.0); 2], 0.0)).unwrap();
        assert_eq!(seq.frames[0], seq.frames[1]);
        let noisy = gen_translation_sequence(&small_spec(vec![(60.0, 40.0); 2], 2.0)).unwrap();
        assert_ne!(noisy.frames[0], noisy.frames[1]);
    }

    #[test]
    fn patch_fully_outside_is_rejected() {
        let spec = small_spec(vec![(50.0, 50.0), (-40.0, 50.0)], 0.0);
        assert!(matches!(gen_translation_sequence(&spec), Err(StcError::InvalidSpec(_))));
        // partially visible is fine
        assert!(gen_translation_sequence(&small_spec(vec![(0.0, 0.0)], 0.0)).is_ok());
    }

    #[test]
    fn unit_zoom_matches_translation() {
        let spec = small_spec(vec![(50.0, 50.0), (52.3, 49.1), (55.0, 47.5)], 1.5);
        assert_eq!(gen_zoom_sequence(&spec).unwrap(), gen_translation_sequence(&spec).unwrap());
    }

    #[test]
    fn zoom_scales_groundtruth() {
        let mut spec = small_spec(vec![(60.0, 50.0); 2], 0.0);
        spec.scale_track = vec![1.0, 1.1];
        let seq = gen_zoom_sequence(&spec).unwrap();
        assert!((seq.groundtruth[1].w - 1.1 * 24.0).abs() < 1e-12);
        assert!((seq.groundtruth[1].h - 1.1 * 20.0).abs() < 1e-12);
        assert!(gen_translation_sequence(&spec).is_err());
        spec.scale_track = vec![1.0, 2.5];
        assert!(gen_zoom_sequence(&spec).is_err());
    }

    #[test]
    fn occlusion_covers_left_half_in_window_only() {
        let mut spec = small_spec(vec![(60.0, 50.0); 25], 0.0);
        spec.occlusion_windows.push(OcclusionWindow {
            start: 10,
            end: 20,
            fraction: 0.5,
            value: 30.0,
        });
        let seq = gen_occlusion_sequence(&spec).unwrap();
        // patch spans x in [48, 72), y in [40, 60); left half is x in [48, 60)
        for (t, frame) in seq.frames.iter().enumerate() {
            let covered = (10..=20).contains(&t);
            for r in 40..60 {
                for c in 48..60 {
                    assert_eq!(frame.get(r, c) == 30.0, covered, "t={t} r={r} c={c}");
                }
                assert_ne!(frame.get(r, 65), 30.0);
            }
        }
        spec.occlusion_windows[0].fraction = 0.0;
        assert_eq!(
            gen_occlusion_sequence(&spec).unwrap(),
            gen_translation_sequence(&spec).unwrap()
        );
        spec.occlusion_windows[0].fraction = 0.95;
        assert!(gen_occlusion_sequence(&spec).is_err());
    }

    #[test]
    fn random_walk_respects_step_and_bounds() {
        let walk = random_walk((50.0, 50.0), 200, 5.0, 9, (30.0, 70.0, 30.0, 70.0));
        assert_eq!(walk.len(), 200);
        for w in walk.windows(2) {
            let step = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
            assert!(step <= 5.0 + 1e-9);
        }
        assert!(walk.iter().all(|&(x, y)| (30.0..=70.0).contains(&x) && (30.0..=70.0).contains(&y)));
    }

    #[test]
    fn presets_exist() {
        for name in PRESETS {
            let spec = SynthSpec::preset(name).unwrap();
            assert!(spec.validate().is_ok(), "{name}");
        }
        assert!(SynthSpec::preset("nope").is_err());
    }
}
