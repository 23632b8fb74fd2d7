use crate::error::{Error, Result};
use crate::nn::DenseMatrix;

/// 400 ms at a 10 ms hop.
pub const WINDOW_FRAMES: usize = 40;
/// 100 ms at a 10 ms hop.
pub const STEP_FRAMES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub frames: DenseMatrix,
    /// First frame of the window within the source sequence.
    pub start: usize,
    /// Set when the source was shorter than one window and was zero-padded.
    pub padded: bool,
}

/// Cuts `window`-frame subsequences every `step` frames. A trailing partial
/// window is dropped; a sequence shorter than `window` yields one zero-padded
/// window.
pub fn window_sequence(seq: &DenseMatrix, window: usize, step: usize) -> Result<Vec<Window>> {
    if seq.rows() == 0 {
        return Err(Error::EmptyInput("frame sequence"));
    }
    if window == 0 || step == 0 {
        return Err(Error::config("window and step must be positive"));
    }
    let d = seq.cols();
    if seq.rows() < window {
        let mut values = seq.values().to_vec();
        values.resize(window * d, 0.0);
        return Ok(vec![Window {
            frames: DenseMatrix::from_vec(window, d, values)?,
            start: 0,
            padded: true,
        }]);
    }
    let count = (seq.rows() - window) / step + 1;
    (0..count)
        .map(|w| {
            let start = w * step;
            let values = seq.values()[start * d..(start + window) * d].to_vec();
            Ok(Window {
                frames: DenseMatrix::from_vec(window, d, values)?,
                start,
                padded: false,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(t: usize) -> DenseMatrix {
        DenseMatrix::from_vec(t, 2, (0..2 * t).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn exact_length_gives_one_window() {
        let w = window_sequence(&seq(40), WINDOW_FRAMES, STEP_FRAMES).unwrap();
        assert_eq!(w.len(), 1);
        assert!(!w[0].padded);
    }

    #[test]
    fn hundred_frames_give_seven() {
        let w = window_sequence(&seq(100), WINDOW_FRAMES, STEP_FRAMES).unwrap();
        let starts: Vec<usize> = w.iter().map(|w| w.start).collect();
        assert_eq!(starts, vec![0, 10, 20, 30, 40, 50, 60]);
        assert_eq!(w[6].frames.row(0), &[120.0, 121.0]);
        assert_eq!(w[6].frames.rows(), 40);
    }

    #[test]
    fn short_sequence_is_padded() {
        let w = window_sequence(&seq(39), WINDOW_FRAMES, STEP_FRAMES).unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].padded);
        assert_eq!(w[0].frames.row(38), &[76.0, 77.0]);
        assert_eq!(w[0].frames.row(39), &[0.0, 0.0]);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(window_sequence(&DenseMatrix::zeros(0, 3), 40, 10).is_err());
    }
}
