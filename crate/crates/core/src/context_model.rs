//! Context prior, confidence target, spatial context learning by spectral
//! deconvolution, temporal blending, and confidence-map detection.
//!
//! All grids live on the context window. Convolutions are circular: the
//! window is treated as periodic, matching the DFT, and the Hamming taper
//! applied to the prior keeps wraparound leakage small.

use rustfft::num_complex::Complex64;

use crate::error::{Result, StcError};
use crate::spectral::{ComplexGrid, Fft2Plan, RealGrid};

/// Integer cell position in window coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
}

impl Pixel {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    fn check_inside(self, dims: (usize, usize)) -> Result<()> {
        if self.row >= dims.0 || self.col >= dims.1 {
            return Err(StcError::invalid(format!(
                "center ({}, {}) lies outside a {}x{} grid",
                self.row, self.col, dims.0, dims.1
            )));
        }
        Ok(())
    }

    fn dist2(self, row: usize, col: usize) -> f64 {
        let dr = row as f64 - self.row as f64;
        let dc = col as f64 - self.col as f64;
        dr * dr + dc * dc
    }
}

/// Mean-subtracted, Hamming-tapered window intensities weighted by a
/// Gaussian focus of attention around the target center.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextPrior {
    pub grid: RealGrid,
    pub sigma: f64,
    pub center: Pixel,
}

/// Designed confidence map `exp(-(|x - center| / alpha)^beta)`, peak 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceTarget {
    pub grid: RealGrid,
    pub alpha: f64,
    pub beta: f64,
    pub center: Pixel,
}

/// Per-frame spatial context kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialContextModel {
    pub grid: RealGrid,
}

/// Temporally blended context kernel used for detection.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatioTemporalModel {
    pub grid: RealGrid,
    pub rho: f64,
    pub frames_absorbed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    pub grid: RealGrid,
    pub peak_value: f64,
    pub peak_location: Pixel,
}

/// Result of [`learn_spatial_context`].
#[derive(Debug, Clone)]
pub struct LearnedContext {
    pub model: SpatialContextModel,
    /// The prior carried no energy; the model is all zeros.
    pub degenerate_prior: bool,
    pub imag_residue_warning: bool,
}

fn check_same_dims(what: &str, a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(StcError::invalid(format!(
            "{what}: dimension mismatch {}x{} vs {}x{}",
            a.0, a.1, b.0, b.1
        )));
    }
    Ok(())
}

pub fn build_context_prior(
    window: &RealGrid,
    sigma: f64,
    center: Pixel,
    hamming: &RealGrid,
) -> Result<ContextPrior> {
    check_same_dims("context prior", window.dims(), hamming.dims())?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(StcError::invalid(format!("sigma must be positive, got {sigma}")));
    }
    center.check_inside(window.dims())?;

    let (h, w) = window.dims();
    let vals = window.values();
    let (lo, hi) = vals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    // a flat window is exactly zero after mean subtraction; don't let rounding in the mean leak through
    let mean = if lo == hi { lo } else { window.mean() };
    let inv_s2 = 1.0 / (sigma * sigma);

    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let weight = (-center.dist2(r, c) * inv_s2).exp();
            out.push((vals[i] - mean) * hamming.values()[i] * weight);
        }
    }
    Ok(ContextPrior {
        grid: RealGrid::from_parts_unchecked(h, w, out),
        sigma,
        center,
    })
}

pub fn build_confidence_target(
    height: usize,
    width: usize,
    center: Pixel,
    alpha: f64,
    beta: f64,
) -> Result<ConfidenceTarget> {
    if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
        return Err(StcError::invalid(format!(
            "alpha and beta must be positive, got {alpha}, {beta}"
        )));
    }
    if height == 0 || width == 0 {
        return Err(StcError::invalid("target grid must be non-empty"));
    }
    center.check_inside((height, width))?;
    let grid = RealGrid::from_fn(height, width, |r, c| {
        let d = center.dist2(r, c).sqrt();
        (-(d / alpha).powf(beta)).exp()
    })?;
    Ok(ConfidenceTarget {
        grid,
        alpha,
        beta,
        center,
    })
}

/// Deconvolves the target by the prior:
/// `ifft2(T * conj(P) / (|P|^2 + eps'))` with `eps' = epsilon * mean(|P|^2)`.
///
/// Three transforms run through `plan`.
pub fn learn_spatial_context(
    plan: &Fft2Plan,
    prior: &ContextPrior,
    target: &ConfidenceTarget,
    epsilon: f64,
) -> Result<LearnedContext> {
    check_same_dims("learn", prior.grid.dims(), target.grid.dims())?;
    check_same_dims("learn", prior.grid.dims(), plan.dims())?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(StcError::invalid(format!("epsilon must be non-negative, got {epsilon}")));
    }

    let target_spec = plan.forward(&target.grid)?;
    let prior_spec = plan.forward(&prior.grid)?;

    let n = prior_spec.values().len() as f64;
    let mean_power = prior_spec.values().iter().map(|p| p.norm_sqr()).sum::<f64>() / n;
    let floor = epsilon * mean_power;

    if mean_power == 0.0 {
        if epsilon == 0.0 {
            return Err(StcError::SingularDeconvolution);
        }
        log::warn!("context prior is all zero; spatial context model left at zero");
        let (h, w) = plan.dims();
        // the inverse transform still runs so the per-call transform budget is fixed
        let _ = plan.inverse(&ComplexGrid::from_parts_unchecked(h, w, vec![Complex64::new(0.0, 0.0); h * w]))?;
        return Ok(LearnedContext {
            model: SpatialContextModel {
                grid: RealGrid::zeros(h, w)?,
            },
            degenerate_prior: true,
            imag_residue_warning: false,
        });
    }

    let mut quotient = Vec::with_capacity(prior_spec.values().len());
    for (t, p) in target_spec.values().iter().zip(prior_spec.values()) {
        let denom = p.norm_sqr() + floor;
        if denom == 0.0 {
            return Err(StcError::SingularDeconvolution);
        }
        quotient.push(t * p.conj() / denom);
    }
    let (h, w) = plan.dims();
    let inv = plan.inverse(&ComplexGrid::from_parts_unchecked(h, w, quotient))?;
    Ok(LearnedContext {
        model: SpatialContextModel { grid: inv.grid },
        degenerate_prior: false,
        imag_residue_warning: inv.residue_warning,
    })
}

impl SpatioTemporalModel {
    /// Seeds the temporal model with the first frame's spatial model.
    pub fn from_spatial(hsc: &SpatialContextModel, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self {
            grid: hsc.grid.clone(),
            rho,
            frames_absorbed: 1,
        })
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(StcError::invalid(format!("rho must lie in (0, 1), got {rho}")));
    }
    Ok(())
}

/// `H' = (1 - rho) H + rho h`.
pub fn update_stc(model: &SpatioTemporalModel, hsc: &SpatialContextModel) -> Result<SpatioTemporalModel> {
    check_same_dims("update", model.grid.dims(), hsc.grid.dims())?;
    check_rho(model.rho)?;
    let rho = model.rho;
    let (h, w) = model.grid.dims();
    let values = model
        .grid
        .values()
        .iter()
        .zip(hsc.grid.values())
        .map(|(&m, &s)| (1.0 - rho) * m + rho * s)
        .collect();
    Ok(SpatioTemporalModel {
        grid: RealGrid::from_parts_unchecked(h, w, values),
        rho,
        frames_absorbed: model.frames_absorbed + 1,
    })
}

/// Circular convolution of the temporal model with the prior, computed in the
/// frequency domain (three transforms through `plan`).
pub fn compute_confidence(plan: &Fft2Plan, model: &SpatioTemporalModel, prior: &ContextPrior) -> Result<ConfidenceMap> {
    check_same_dims("confidence", model.grid.dims(), prior.grid.dims())?;
    check_same_dims("confidence", model.grid.dims(), plan.dims())?;
    let model_spec = plan.forward(&model.grid)?;
    let prior_spec = plan.forward(&prior.grid)?;
    let product = model_spec
        .values()
        .iter()
        .zip(prior_spec.values())
        .map(|(a, b)| a * b)
        .collect();
    let (h, w) = plan.dims();
    let inv = plan.inverse(&ComplexGrid::from_parts_unchecked(h, w, product))?;
    Ok(ConfidenceMap::from_grid(inv.grid))
}

impl ConfidenceMap {
    /// Locates the maximum; ties resolve to the first cell in row-major order.
    pub fn from_grid(grid: RealGrid) -> Self {
        let w = grid.width();
        let (idx, peak) = grid
            .values()
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        Self {
            peak_value: peak,
            peak_location: Pixel::new(idx / w, idx % w),
            grid,
        }
    }
}

/// Magnitude response `rho / |e^{j omega} - (1 - rho)|` of the temporal
/// blending recursion.
pub fn stc_filter_gain(omega: f64, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    // e^{jw} - (1 - rho) regrouped as (cos w - 1 + rho) + j sin w so that w = 0 gives exactly rho
    let denom = Complex64::new(omega.cos() - 1.0 + rho, omega.sin());
    Ok(rho / denom.norm())
}
