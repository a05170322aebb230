//! Deterministic synthetic images for benchmarks and metric checks.

use crate::pnm::ImageBuffer;

/// Diagonal ramp, `(r + c) mod 256`, identical across channels.
pub fn gradient(width: usize, height: usize, channels: usize) -> ImageBuffer {
    let mut px = Vec::with_capacity(width * height * channels);
    for r in 0..height {
        for c in 0..width {
            let v = ((r + c) % 256) as u8;
            px.extend(std::iter::repeat_n(v, channels));
        }
    }
    ImageBuffer::new(width, height, channels, px).expect("valid dimensions")
}

/// Smooth photograph-like RGB content: overlapping soft blobs over a shaded
/// background with mild texture. Adjacent pixels are strongly correlated and the
/// histogram is uneven.
pub fn natural(width: usize, height: usize) -> ImageBuffer {
    let blobs = [
        (0.30, 0.35, 0.18, [220.0, 150.0, 120.0]),
        (0.65, 0.40, 0.22, [90.0, 60.0, 140.0]),
        (0.50, 0.75, 0.25, [180.0, 110.0, 70.0]),
        (0.15, 0.80, 0.12, [40.0, 160.0, 90.0]),
    ];
    let mut px = Vec::with_capacity(width * height * 3);
    for r in 0..height {
        let v = r as f64 / height as f64;
        for c in 0..width {
            let u = c as f64 / width as f64;
            let mut rgb = [110.0 + 60.0 * v, 90.0 + 40.0 * u, 80.0 + 30.0 * (u * v)];
            for &(bu, bv, rad, col) in &blobs {
                let d2 = ((u - bu).powi(2) + (v - bv).powi(2)) / (rad * rad);
                let w = (-d2).exp();
                for k in 0..3 {
                    rgb[k] = rgb[k] * (1.0 - w) + col[k] * w;
                }
            }
            let tex = 6.0 * (u * 40.0).sin() * (v * 33.0).cos();
            for (k, ch) in rgb.iter().enumerate() {
                px.push((ch + tex * (1.0 + k as f64 * 0.2)).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    ImageBuffer::new(width, height, 3, px).expect("valid dimensions")
}
