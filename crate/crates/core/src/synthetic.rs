//! Deterministic synthetic test images.

use crate::image::Image;

/// Grayscale composite used throughout the tests and benchmarks: two
/// checkerboards that alias away under 4x degradation next to two smooth
/// ramps that survive it.
///
/// Quadrants: top-left a 1-pixel black/white checkerboard, bottom-right a
/// 2-pixel mid-contrast checkerboard, top-right a horizontal ramp and
/// bottom-left a diagonal ramp.
pub fn checker_ramp(height: usize, width: usize) -> Image {
    let (hh, hw) = (height / 2, width / 2);
    Image::from_fn(height, width, 1, |y, x, _| {
        let top = y < hh;
        let left = x < hw;
        match (top, left) {
            (true, true) => ((y + x) % 2) as f64,
            (false, false) => {
                if (y / 2 + x / 2) % 2 == 0 {
                    0.15
                } else {
                    0.85
                }
            }
            (true, false) => (x - hw) as f64 / (width - hw).max(2) as f64,
            (false, true) => ((y - hh) + x) as f64 / ((height - hh) + hw).max(2) as f64,
        }
    })
}
