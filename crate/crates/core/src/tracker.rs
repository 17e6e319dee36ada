//! Frame-to-frame tracking state machine.
//!
//! Each [`Tracker::track`] call crops the context window around the previous
//! center, detects the new center at the confidence peak, updates the scale
//! estimate, then relearns the spatial context at the new center and blends
//! it into the spatio-temporal model. Detection and learning each run three
//! 2-D transforms.

use std::collections::VecDeque;

use crate::context_model::{
    build_confidence_target, build_context_prior, compute_confidence, learn_spatial_context, update_stc,
    ConfidenceMap, ConfidenceTarget, Pixel, SpatioTemporalModel,
};
use crate::error::{Result, StcError};
use crate::sequence_io::Frame;
use crate::spectral::{hamming2d, Fft2Plan, RealGrid};

/// Axis-aligned rectangle, top-left corner plus size, 0-based pixel units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self {
            x: cx - w / 2.0,
            y: cy - h / 2.0,
            w,
            h,
        }
    }

    /// `(x + w/2, y + h/2)`.
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerParams {
    /// Confidence target scale.
    pub alpha: f64,
    /// Confidence target shape.
    pub beta: f64,
    /// Spatio-temporal learning rate.
    pub rho: f64,
    /// Scale filter rate.
    pub lambda: f64,
    /// Depth of the per-frame scale estimate average.
    pub n_scale_frames: usize,
    /// Context window size relative to the initial box.
    pub window_ratio: f64,
    /// Relative deconvolution floor.
    pub epsilon: f64,
    /// Bounds applied to each per-frame scale estimate.
    pub scale_clamp: (f64, f64),
    pub initial_scale: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            alpha: 2.25,
            beta: 1.0,
            rho: 0.075,
            lambda: 0.25,
            n_scale_frames: 5,
            window_ratio: 2.0,
            epsilon: 1e-6,
            scale_clamp: (0.5, 2.0),
            initial_scale: 1.0,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("window_ratio", self.window_ratio),
            ("initial_scale", self.initial_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(StcError::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("rho", self.rho), ("lambda", self.lambda)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(StcError::invalid(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(StcError::invalid(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        if self.n_scale_frames == 0 {
            return Err(StcError::invalid("n_scale_frames must be at least 1"));
        }
        let (lo, hi) = self.scale_clamp;
        if !(lo > 0.0 && lo < 1.0 && hi > 1.0 && hi.is_finite()) {
            return Err(StcError::invalid(format!("scale_clamp must satisfy 0 < min < 1 < max, got ({lo}, {hi})")));
        }
        Ok(())
    }
}

/// Scale filter state.
///
/// `s` is the filtered per-frame scale factor and `sigma` the current
/// weight spread; `sigma` compounds `s` every time an update fires, so
/// `sigma / initial_sigma` is the accumulated target scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleState {
    pub s: f64,
    pub sigma: f64,
    pub initial_sigma: f64,
    pub history: VecDeque<f64>,
    pub prev_peak: Option<f64>,
}

impl ScaleState {
    pub fn new(sigma: f64, params: &TrackerParams) -> Self {
        Self {
            s: params.initial_scale,
            sigma,
            initial_sigma: sigma,
            history: VecDeque::with_capacity(params.n_scale_frames),
            prev_peak: None,
        }
    }

    /// Target size relative to the initial box.
    pub fn cumulative_scale(&self) -> f64 {
        self.sigma / self.initial_sigma
    }
}

/// One step of the scale filter.
///
/// Estimates `s' = sqrt(peak_t / prev_peak)` (clamped), keeps the last
/// `n_scale_frames` estimates, and once the buffer is full sets
/// `sigma <- s * sigma` followed by `s <- (1 - lambda) s + lambda mean(s')`.
pub fn update_scale(scale: &ScaleState, peak_t: f64, params: &TrackerParams) -> ScaleState {
    let peak_t = peak_t.max(0.0);
    let mut next = scale.clone();
    next.prev_peak = Some(peak_t);
    let prev = match scale.prev_peak {
        Some(p) if p > 0.0 => p,
        _ => return next,
    };

    let (lo, hi) = params.scale_clamp;
    let estimate = (peak_t / prev).sqrt().clamp(lo, hi);
    if next.history.len() == params.n_scale_frames {
        next.history.pop_front();
    }
    next.history.push_back(estimate);

    if next.history.len() == params.n_scale_frames {
        let mean = next.history.iter().sum::<f64>() / next.history.len() as f64;
        next.sigma = scale.s * scale.sigma;
        next.s = (1.0 - params.lambda) * scale.s + params.lambda * mean;
    }
    next
}

/// Context-window dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSize {
    pub height: usize,
    pub width: usize,
}

impl WindowSize {
    fn center(self) -> Pixel {
        Pixel::new(self.height / 2, self.width / 2)
    }
}

/// Crops `window_size` pixels centered at `round(center)`; `center` is
/// `(x, y)`. Out-of-frame samples replicate the nearest edge pixel.
pub fn crop_context_window(frame: &Frame, center: (f64, f64), window_size: WindowSize) -> Result<RealGrid> {
    if window_size.height == 0 || window_size.width == 0 {
        return Err(StcError::invalid("window size must be positive"));
    }
    let (x0, y0) = window_origin(center, window_size);
    let max_r = frame.height() as i64 - 1;
    let max_c = frame.width() as i64 - 1;
    let pixels = frame.pixels();
    let mut out = Vec::with_capacity(window_size.height * window_size.width);
    for r in 0..window_size.height as i64 {
        let fr = (y0 + r).clamp(0, max_r) as usize;
        let row = &pixels[fr * frame.width()..(fr + 1) * frame.width()];
        for c in 0..window_size.width as i64 {
            out.push(row[(x0 + c).clamp(0, max_c) as usize]);
        }
    }
    RealGrid::new(window_size.height, window_size.width, out)
}

fn window_origin(center: (f64, f64), size: WindowSize) -> (i64, i64) {
    let local = size.center();
    (
        center.0.round() as i64 - local.col as i64,
        center.1.round() as i64 - local.row as i64,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrackerWarning {
    /// The context prior was all zero (flat window); nothing was learned.
    DegeneratePrior,
    /// The confidence map was all zero; the center was not moved.
    LostConfidence,
    /// An inverse transform left a large imaginary part.
    ImaginaryResidue,
}

#[derive(Debug, Clone)]
pub struct TrackOutput {
    pub bbox: BoundingBox,
    pub confidence: ConfidenceMap,
    pub warnings: Vec<TrackerWarning>,
}

/// Single-target tracker state.
#[derive(Debug, Clone)]
pub struct Tracker {
    params: TrackerParams,
    center: (f64, f64),
    base_box: BoundingBox,
    window_size: WindowSize,
    frame_dims: (usize, usize),
    model: SpatioTemporalModel,
    scale: ScaleState,
    hamming: RealGrid,
    target: ConfidenceTarget,
    plan: Fft2Plan,
    frame_index: usize,
}

impl Tracker {
    /// Learns the first spatial context model around `bbox`.
    pub fn init(frame: &Frame, bbox: BoundingBox, params: TrackerParams) -> Result<(Self, Vec<TrackerWarning>)> {
        params.validate()?;
        if !(bbox.w >= 1.0 && bbox.h >= 1.0) {
            return Err(StcError::invalid(format!(
                "box must be at least 1x1 pixel, got {}x{}",
                bbox.w, bbox.h
            )));
        }
        let (fw, fh) = (frame.width() as f64, frame.height() as f64);
        if bbox.x >= fw || bbox.y >= fh || bbox.x + bbox.w <= 0.0 || bbox.y + bbox.h <= 0.0 {
            return Err(StcError::invalid("initial box does not intersect the frame"));
        }

        let window_size = WindowSize {
            height: ((params.window_ratio * bbox.h).round() as usize).max(1),
            width: ((params.window_ratio * bbox.w).round() as usize).max(1),
        };
        let local = window_size.center();
        let plan = Fft2Plan::new(window_size.height, window_size.width)?;
        let hamming = hamming2d(window_size.height, window_size.width)?;
        let target = build_confidence_target(window_size.height, window_size.width, local, params.alpha, params.beta)?;
        let sigma = (bbox.w + bbox.h) / 2.0;
        let center = bbox.center();

        let window = crop_context_window(frame, center, window_size)?;
        let prior = build_context_prior(&window, sigma, local, &hamming)?;
        let learned = learn_spatial_context(&plan, &prior, &target, params.epsilon)?;
        let mut warnings = Vec::new();
        if learned.degenerate_prior {
            warnings.push(TrackerWarning::DegeneratePrior);
        }
        if learned.imag_residue_warning {
            warnings.push(TrackerWarning::ImaginaryResidue);
        }
        let model = SpatioTemporalModel::from_spatial(&learned.model, params.rho)?;
        let scale = ScaleState::new(sigma, &params);

        Ok((
            Self {
                params,
                center,
                base_box: bbox,
                window_size,
                frame_dims: (frame.height(), frame.width()),
                model,
                scale,
                hamming,
                target,
                plan,
                frame_index: 1,
            },
            warnings,
        ))
    }

    pub fn track(&mut self, frame: &Frame) -> Result<TrackOutput> {
        if (frame.height(), frame.width()) != self.frame_dims {
            return Err(StcError::invalid(format!(
                "frame is {}x{}, tracker was initialized on {}x{}",
                frame.height(),
                frame.width(),
                self.frame_dims.0,
                self.frame_dims.1
            )));
        }
        let local = self.window_size.center();
        let mut warnings = Vec::new();

        // detection around the previous center
        let window = crop_context_window(frame, self.center, self.window_size)?;
        let prior = build_context_prior(&window, self.scale.sigma, local, &self.hamming)?;
        let confidence = compute_confidence(&self.plan, &self.model, &prior)?;
        if confidence.grid.values().iter().all(|&v| v == 0.0) {
            log::warn!("frame {}: confidence map is all zero, holding position", self.frame_index + 1);
            warnings.push(TrackerWarning::LostConfidence);
        } else {
            let dx = confidence.peak_location.col as f64 - local.col as f64;
            let dy = confidence.peak_location.row as f64 - local.row as f64;
            self.center = (self.center.0 + dx, self.center.1 + dy);
        }

        self.scale = update_scale(&self.scale, confidence.peak_value, &self.params);

        // learning at the new center
        let window = crop_context_window(frame, self.center, self.window_size)?;
        let prior = build_context_prior(&window, self.scale.sigma, local, &self.hamming)?;
        let learned = learn_spatial_context(&self.plan, &prior, &self.target, self.params.epsilon)?;
        if learned.degenerate_prior {
            warnings.push(TrackerWarning::DegeneratePrior);
        }
        if learned.imag_residue_warning {
            warnings.push(TrackerWarning::ImaginaryResidue);
        }
        self.model = update_stc(&self.model, &learned.model)?;
        self.frame_index += 1;

        Ok(TrackOutput {
            bbox: self.current_box(),
            confidence,
            warnings,
        })
    }

    /// Box at the current center, sized by the accumulated scale.
    pub fn current_box(&self) -> BoundingBox {
        let k = self.scale.cumulative_scale();
        BoundingBox::from_center(self.center.0, self.center.1, self.base_box.w * k, self.base_box.h * k)
    }

    pub fn params(&self) -> &TrackerParams {
        &self.params
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    pub fn base_box(&self) -> BoundingBox {
        self.base_box
    }

    pub fn window_size(&self) -> WindowSize {
        self.window_size
    }

    pub fn model(&self) -> &SpatioTemporalModel {
        &self.model
    }

    pub fn scale(&self) -> &ScaleState {
        &self.scale
    }

    pub fn hamming(&self) -> &RealGrid {
        &self.hamming
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    /// Total 2-D transforms run since init (init itself counts three).
    pub fn transforms_performed(&self) -> usize {
        self.plan.transforms_performed()
    }
}
