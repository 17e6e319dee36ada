//! Center location error, overlap score and success rate.

use crate::error::{Result, StcError};
use crate::tracker::BoundingBox;

pub const SUCCESS_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub sequence_name: String,
    pub frames: usize,
    pub mean_cle: f64,
    pub success_rate: f64,
    pub fps: f64,
}

impl EvalSummary {
    pub const CSV_HEADER: &'static str = "name,frames,mean_cle,success_rate,fps";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.4},{:.4},{:.2}",
            self.sequence_name, self.frames, self.mean_cle, self.success_rate, self.fps
        )
    }
}

/// Euclidean distance between box centers, in pixels.
pub fn center_error(result: &BoundingBox, truth: &BoundingBox) -> f64 {
    let (ax, ay) = result.center();
    let (bx, by) = truth.center();
    (ax - bx).hypot(ay - by)
}

/// Intersection over union of two axis-aligned rectangles.
pub fn overlap_score(result: &BoundingBox, truth: &BoundingBox) -> f64 {
    let iw = (result.x + result.w).min(truth.x + truth.w) - result.x.max(truth.x);
    let ih = (result.y + result.h).min(truth.y + truth.h) - result.y.max(truth.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let edge_area = |b: &BoundingBox| ((b.x + b.w) - b.x) * ((b.y + b.h) - b.y);
    let union = edge_area(result) + edge_area(truth) - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

fn check_lengths(results: &[BoundingBox], truths: &[BoundingBox]) -> Result<()> {
    if results.len() != truths.len() {
        return Err(StcError::invalid(format!(
            "{} results vs {} ground-truth boxes",
            results.len(),
            truths.len()
        )));
    }
    if results.is_empty() {
        return Err(StcError::invalid("no frames to evaluate"));
    }
    Ok(())
}

/// Fraction of frames whose overlap is strictly above `threshold`.
pub fn success_rate(results: &[BoundingBox], truths: &[BoundingBox], threshold: f64) -> Result<f64> {
    check_lengths(results, truths)?;
    let hits = results
        .iter()
        .zip(truths)
        .filter(|(r, t)| overlap_score(r, t) > threshold)
        .count();
    Ok(hits as f64 / results.len() as f64)
}

pub fn mean_center_error(results: &[BoundingBox], truths: &[BoundingBox]) -> Result<f64> {
    check_lengths(results, truths)?;
    let total: f64 = results.iter().zip(truths).map(|(r, t)| center_error(r, t)).sum();
    Ok(total / results.len() as f64)
}

pub fn summarize(
    name: &str,
    results: &[BoundingBox],
    truths: &[BoundingBox],
    elapsed_seconds: f64,
) -> Result<EvalSummary> {
    if elapsed_seconds.is_nan() || elapsed_seconds <= 0.0 {
        return Err(StcError::invalid(format!("elapsed time must be positive, got {elapsed_seconds}")));
    }
    Ok(EvalSummary {
        sequence_name: name.to_string(),
        frames: results.len(),
        mean_cle: mean_center_error(results, truths)?,
        success_rate: success_rate(results, truths, SUCCESS_THRESHOLD)?,
        fps: results.len() as f64 / elapsed_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn b(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h)
    }

    #[test]
    fn center_error_cases() {
        let a = b(0.0, 0.0, 10.0, 10.0);
        assert_eq!(center_error(&a, &a), 0.0);
        assert_eq!(center_error(&a, &b(3.0, 4.0, 10.0, 10.0)), 5.0);
        assert_eq!(center_error(&a, &b(0.0, 7.5, 10.0, 10.0)), 7.5);
    }

    #[test]
    fn overlap_cases() {
        let a = b(0.0, 0.0, 2.0, 2.0);
        assert_eq!(overlap_score(&a, &a), 1.0);
        assert_eq!(overlap_score(&a, &b(5.0, 5.0, 1.0, 1.0)), 0.0);
        // touching edges share no area
        assert_eq!(overlap_score(&a, &b(2.0, 0.0, 2.0, 2.0)), 0.0);
        assert_abs_diff_eq!(overlap_score(&a, &b(1.0, 1.0, 2.0, 2.0)), 1.0 / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn success_is_strict() {
        // 2x1 over 2x2 with the same origin: IoU exactly 0.5
        let r = vec![b(0.0, 0.0, 2.0, 1.0); 3];
        let t = vec![b(0.0, 0.0, 2.0, 2.0); 3];
        assert_eq!(overlap_score(&r[0], &t[0]), 0.5);
        assert_eq!(success_rate(&r, &t, 0.5).unwrap(), 0.0);
        assert_eq!(success_rate(&t, &t, 0.5).unwrap(), 1.0);
        let far = vec![b(10.0, 10.0, 2.0, 2.0); 3];
        assert_eq!(success_rate(&far, &t, 0.5).unwrap(), 0.0);
        assert!(success_rate(&r[..2], &t, 0.5).is_err());
        assert!(success_rate(&[], &[], 0.5).is_err());
    }

    #[test]
    fn summary_values() {
        let t: Vec<_> = (0..10).map(|i| b(i as f64, 0.0, 5.0, 5.0)).collect();
        let s = summarize("seq", &t, &t, 0.05).unwrap();
        assert_eq!(s.mean_cle, 0.0);
        assert_eq!(s.success_rate, 1.0);
        assert_eq!(s.frames, 10);

        let r = vec![b(0.0, 0.0, 4.0, 4.0), b(10.0, 0.0, 4.0, 4.0)];
        let g = vec![b(0.0, 0.0, 4.0, 4.0), b(0.0, 0.0, 4.0, 4.0)];
        assert_eq!(summarize("two", &r, &g, 1.0).unwrap().mean_cle, 5.0);

        let t: Vec<_> = (0..100).map(|_| b(0.0, 0.0, 5.0, 5.0)).collect();
        assert_abs_diff_eq!(summarize("fps", &t, &t, 0.5).unwrap().fps, 200.0, epsilon = 1e-9);
        assert!(summarize("bad", &t, &t, 0.0).is_err());
    }

    #[test]
    fn csv_row_layout() {
        let s = EvalSummary {
            sequence_name: "david".into(),
            frames: 3,
            mean_cle: 1.5,
            success_rate: 1.0,
            fps: 250.0,
        };
        assert_eq!(s.csv_row(), "david,3,1.5000,1.0000,250.00");
        assert_eq!(EvalSummary::CSV_HEADER.split(',').count(), s.csv_row().split(',').count());
    }
}
