//! Two-dimensional DFT engine and window generation.
//!
//! Conventions: forward transforms are unnormalized (the DC bin holds the sum
//! of all samples) and inverse transforms carry the `1/(H*W)` factor, so
//! `ifft2(fft2(g)) == g`. Arbitrary sizes are transformed directly; nothing is
//! padded to a power of two.

use std::f64::consts::PI;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, StcError};

/// Relative threshold used by [`ifft2`] to flag a non-negligible imaginary
/// part in the inverse transform.
pub const DEFAULT_IMAG_RESIDUE_TOLERANCE: f64 = 1e-6;

/// Real-valued grid in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl RealGrid {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(height, width)?;
        if values.len() != height * width {
            return Err(StcError::invalid(format!(
                "grid {height}x{width} needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StcError::invalid("grid contains non-finite values"));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        Ok(Self {
            height,
            width,
            values: vec![0.0; height * width],
        })
    }

    /// Builds a grid by evaluating `f(row, col)` at every cell.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_dims(height, width)?;
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Self::new(height, width, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Element-wise map. The result must stay finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.height, self.width, self.values.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn from_parts_unchecked(height: usize, width: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        Self {
            height,
            width,
            values,
        }
    }
}

/// Complex-valued grid in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    height: usize,
    width: usize,
    values: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn new(height: usize, width: usize, values: Vec<Complex64>) -> Result<Self> {
        check_dims(height, width)?;
        if values.len() != height * width {
            return Err(StcError::invalid(format!(
                "grid {height}x{width} needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(StcError::invalid("spectrum contains non-finite values"));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.width + col]
    }

    pub(crate) fn from_parts_unchecked(height: usize, width: usize, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        Self {
            height,
            width,
            values,
        }
    }
}

/// Output of an inverse transform: the real part plus the largest discarded
/// imaginary magnitude.
#[derive(Debug, Clone)]
pub struct InverseFft {
    pub grid: RealGrid,
    pub max_imag_residue: f64,
    /// Set when the residue exceeds `tolerance * max|real part|`.
    pub residue_warning: bool,
}

fn check_dims(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(StcError::invalid(format!(
            "grid dimensions must be positive, got {height}x{width}"
        )));
    }
    Ok(())
}

/// Planned 2-D transforms for one fixed grid size.
///
/// Rows and columns are transformed with separate 1-D plans. Every call to
/// [`Fft2Plan::forward`], [`Fft2Plan::forward_complex`] or
/// [`Fft2Plan::inverse`] bumps a transform counter.
pub struct Fft2Plan {
    height: usize,
    width: usize,
    row_forward: Arc<dyn Fft<f64>>,
    row_inverse: Arc<dyn Fft<f64>>,
    col_forward: Arc<dyn Fft<f64>>,
    col_inverse: Arc<dyn Fft<f64>>,
    transforms: AtomicUsize,
}

impl fmt::Debug for Fft2Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2Plan")
            .field("height", &self.height)
            .field("width", &self.width)
            .field("transforms", &self.transforms_performed())
            .finish()
    }
}

impl Clone for Fft2Plan {
    fn clone(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            row_forward: Arc::clone(&self.row_forward),
            row_inverse: Arc::clone(&self.row_inverse),
            col_forward: Arc::clone(&self.col_forward),
            col_inverse: Arc::clone(&self.col_inverse),
            transforms: AtomicUsize::new(self.transforms_performed()),
        }
    }
}

impl Fft2Plan {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            height,
            width,
            row_forward: planner.plan_fft_forward(width),
            row_inverse: planner.plan_fft_inverse(width),
            col_forward: planner.plan_fft_forward(height),
            col_inverse: planner.plan_fft_inverse(height),
            transforms: AtomicUsize::new(0),
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Number of forward and inverse 2-D transforms run through this plan.
    pub fn transforms_performed(&self) -> usize {
        self.transforms.load(Ordering::Relaxed)
    }

    pub fn reset_counter(&self) {
        self.transforms.store(0, Ordering::Relaxed);
    }

    fn check(&self, dims: (usize, usize)) -> Result<()> {
        if dims != (self.height, self.width) {
            return Err(StcError::invalid(format!(
                "plan is {}x{}, grid is {}x{}",
                self.height, self.width, dims.0, dims.1
            )));
        }
        Ok(())
    }

    pub fn forward(&self, grid: &RealGrid) -> Result<ComplexGrid> {
        self.check(grid.dims())?;
        let mut buf: Vec<Complex64> = grid.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.run(&mut buf, &self.row_forward, &self.col_forward);
        Ok(ComplexGrid::from_parts_unchecked(self.height, self.width, buf))
    }

    pub fn forward_complex(&self, grid: &ComplexGrid) -> Result<ComplexGrid> {
        self.check(grid.dims())?;
        let mut buf = grid.values.clone();
        self.run(&mut buf, &self.row_forward, &self.col_forward);
        Ok(ComplexGrid::from_parts_unchecked(self.height, self.width, buf))
    }

    /// Normalized inverse transform returning the real part.
    pub fn inverse(&self, spectrum: &ComplexGrid) -> Result<InverseFft> {
        self.inverse_with_tolerance(spectrum, DEFAULT_IMAG_RESIDUE_TOLERANCE)
    }

    pub fn inverse_with_tolerance(&self, spectrum: &ComplexGrid, tolerance: f64) -> Result<InverseFft> {
        self.check(spectrum.dims())?;
        let mut buf = spectrum.values.clone();
        self.run(&mut buf, &self.row_inverse, &self.col_inverse);
        let scale = 1.0 / (self.height * self.width) as f64;
        let mut max_imag: f64 = 0.0;
        let mut max_real: f64 = 0.0;
        let values: Vec<f64> = buf
            .iter()
            .map(|c| {
                let re = c.re * scale;
                max_imag = max_imag.max((c.im * scale).abs());
                max_real = max_real.max(re.abs());
                re
            })
            .collect();
        let residue_warning = max_imag > tolerance * max_real;
        if residue_warning {
            log::warn!("inverse FFT imaginary residue {max_imag:e} exceeds {tolerance:e} x {max_real:e}");
        }
        Ok(InverseFft {
            grid: RealGrid::new(self.height, self.width, values)?,
            max_imag_residue: max_imag,
            residue_warning,
        })
    }

    fn run(&self, buf: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        self.transforms.fetch_add(1, Ordering::Relaxed);
        let (h, w) = (self.height, self.width);
        let scratch_len = rows
            .get_inplace_scratch_len()
            .max(cols.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];

        // rows are contiguous, so a single call handles all of them
        rows.process_with_scratch(buf, &mut scratch[..rows.get_inplace_scratch_len()]);

        let mut column = vec![Complex64::new(0.0, 0.0); h];
        for c in 0..w {
            for r in 0..h {
                column[r] = buf[r * w + c];
            }
            cols.process_with_scratch(&mut column, &mut scratch[..cols.get_inplace_scratch_len()]);
            for r in 0..h {
                buf[r * w + c] = column[r];
            }
        }
    }
}

/// Unnormalized forward 2-D DFT.
pub fn fft2(grid: &RealGrid) -> Result<ComplexGrid> {
    Fft2Plan::new(grid.height, grid.width)?.forward(grid)
}

/// Normalized inverse 2-D DFT; see [`InverseFft`].
pub fn ifft2(spectrum: &ComplexGrid) -> Result<InverseFft> {
    Fft2Plan::new(spectrum.height, spectrum.width)?.inverse(spectrum)
}

/// Symmetric 1-D Hamming window, `0.54 - 0.46 cos(2 pi k / (K - 1))`.
/// A length-1 window is `[1.0]`.
pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / denom).cos())
        .collect()
}

/// Separable 2-D Hamming window (outer product of the row and column windows).
pub fn hamming2d(height: usize, width: usize) -> Result<RealGrid> {
    check_dims(height, width)?;
    let rows = hamming(height);
    let cols = hamming(width);
    RealGrid::from_fn(height, width, |r, c| rows[r] * cols[c])
}
