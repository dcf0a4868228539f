//! Ink-density zoning features for grayscale line images.
//!
//! The image is binarised with Otsu's threshold (ink = intensity <= threshold),
//! split into a 4x4 grid of zones and summarised as 18 values: the ink
//! fraction of each zone in row-major order, the global ink fraction and the
//! global intensity standard deviation divided by 255.

use thiserror::Error;

pub const ZONES_PER_SIDE: usize = 4;
pub const FEATURE_DIMS: usize = ZONES_PER_SIDE * ZONES_PER_SIDE + 2;
/// Threshold used when the histogram has fewer than two distinct intensities.
pub const FALLBACK_THRESHOLD: u8 = 127;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageError {
    #[error("pixel buffer has {got} bytes, expected {width}x{height}")]
    SizeMismatch {
        width: usize,
        height: usize,
        got: usize,
    },
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width.checked_mul(height) != Some(pixels.len()) {
            return Err(ImageError::SizeMismatch {
                width,
                height,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Option<Self> {
        values.iter().all(|v| v.is_finite()).then_some(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Otsu's threshold over a 256-bin histogram. Returns the largest intensity
/// of the dark class; ties keep the lowest threshold.
pub fn otsu_threshold(pixels: &[u8]) -> u8 {
    let mut hist = [0u64; 256];
    for &p in pixels {
        hist[p as usize] += 1;
    }
    if hist.iter().filter(|&&h| h > 0).count() < 2 {
        return FALLBACK_THRESHOLD;
    }
    let total = pixels.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &h)| i as f64 * h as f64).sum();
    let mut w_dark = 0.0;
    let mut sum_dark = 0.0;
    let mut best = (f64::NEG_INFINITY, FALLBACK_THRESHOLD);
    for (t, &h) in hist.iter().enumerate().take(255) {
        w_dark += h as f64;
        sum_dark += t as f64 * h as f64;
        let w_light = total - w_dark;
        if w_dark == 0.0 || w_light == 0.0 {
            continue;
        }
        let m_dark = sum_dark / w_dark;
        let m_light = (sum_all - sum_dark) / w_light;
        let between = w_dark * w_light * (m_dark - m_light).powi(2);
        if between > best.0 {
            best = (between, t as u8);
        }
    }
    best.1
}

/// Zone boundaries along one axis; the last zone absorbs the remainder.
fn zone_bounds(len: usize) -> [(usize, usize); ZONES_PER_SIDE] {
    let base = len / ZONES_PER_SIDE;
    let mut out = [(0, 0); ZONES_PER_SIDE];
    for (i, slot) in out.iter_mut().enumerate() {
        let start = i * base;
        let end = if i + 1 == ZONES_PER_SIDE { len } else { start + base };
        *slot = (start, end);
    }
    out
}

/// Always returns [`FEATURE_DIMS`] values. An empty image yields all zeros.
pub fn extract_features(img: &GrayImage) -> FeatureVector {
    let px = img.pixels();
    if px.is_empty() {
        return FeatureVector(vec![0.0; FEATURE_DIMS]);
    }
    let t = otsu_threshold(px);
    let mut out = Vec::with_capacity(FEATURE_DIMS);
    let xs = zone_bounds(img.width());
    let ys = zone_bounds(img.height());
    for &(y0, y1) in &ys {
        for &(x0, x1) in &xs {
            let area = (y1 - y0) * (x1 - x0);
            if area == 0 {
                out.push(0.0);
                continue;
            }
            let ink = (y0..y1)
                .flat_map(|y| (x0..x1).map(move |x| (x, y)))
                .filter(|&(x, y)| img.get(x, y) <= t)
                .count();
            out.push(ink as f64 / area as f64);
        }
    }
    let n = px.len() as f64;
    out.push(px.iter().filter(|&&p| p <= t).count() as f64 / n);
    let mean = px.iter().map(|&p| p as f64).sum::<f64>() / n;
    let var = px.iter().map(|&p| (p as f64 - mean).powi(2)).sum::<f64>() / n;
    out.push(var.sqrt() / 255.0);
    FeatureVector(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_white_has_no_ink() {
        let img = GrayImage::new(8, 4, vec![255; 32]).unwrap();
        let f = extract_features(&img);
        assert_eq!(f.len(), FEATURE_DIMS);
        assert!(f.values()[..17].iter().all(|v| *v == 0.0));
        assert_eq!(f.values()[17], 0.0);
    }

    #[test]
    fn black_left_white_right() {
        let (w, h) = (8, 8);
        let px = (0..h)
            .flat_map(|_| (0..w).map(|x| if x < w / 2 { 0 } else { 255 }))
            .collect();
        let img = GrayImage::new(w, h, px).unwrap();
        let f = extract_features(&img);
        for row in 0..4 {
            let zones = &f.values()[row * 4..row * 4 + 4];
            assert_eq!(zones, &[1.0, 1.0, 0.0, 0.0]);
        }
        assert_eq!(f.values()[16], 0.5);
        assert!((f.values()[17] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn remainder_goes_to_last_zone() {
        assert_eq!(zone_bounds(10), [(0, 2), (2, 4), (4, 6), (6, 10)]);
        assert_eq!(zone_bounds(3), [(0, 0), (0, 0), (0, 0), (0, 3)]);
    }

    #[test]
    fn constant_and_empty_images_do_not_crash() {
        let black = GrayImage::new(3, 3, vec![0; 9]).unwrap();
        assert_eq!(otsu_threshold(black.pixels()), FALLBACK_THRESHOLD);
        assert_eq!(extract_features(&black).values()[16], 1.0);
        let empty = GrayImage::new(0, 0, vec![]).unwrap();
        assert_eq!(extract_features(&empty).len(), FEATURE_DIMS);
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
    }

    #[test]
    fn otsu_splits_bimodal_histogram() {
        let mut px = vec![20u8; 50];
        px.extend(vec![200u8; 50]);
        let t = otsu_threshold(&px);
        assert!((20..200).contains(&t));
        // every threshold in [20, 199] separates the modes equally; lowest wins
        assert_eq!(t, 20);
    }
}
