//! Ciphertext quality metrics and the noise/cropping attack simulators.

use std::fmt;
use std::str::FromStr;

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::cipher::{Cipher, CipherKey};
use crate::error::{Error, Result};
use crate::pnm::ImageBuffer;

pub const DEFAULT_PAIR_SAMPLES: usize = 10_000;

pub fn histogram(img: &ImageBuffer, channel: usize) -> Result<[u64; 256]> {
    img.check_channel(channel)?;
    let mut counts = [0u64; 256];
    for &v in img.pixels().iter().skip(channel).step_by(img.channels()) {
        counts[v as usize] += 1;
    }
    Ok(counts)
}

/// Chi-square statistic of a histogram against the uniform distribution.
pub fn chi_square(counts: &[u64; 256]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / 256.0;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

pub fn shannon_entropy(img: &ImageBuffer, channel: usize) -> Result<f64> {
    let counts = histogram(img, channel)?;
    let total = (img.width() * img.height()) as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Horizontal,
    Vertical,
    Diagonal,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Horizontal, Direction::Vertical, Direction::Diagonal];

    fn offset(self) -> (usize, usize) {
        match self {
            Direction::Horizontal => (0, 1),
            Direction::Vertical => (1, 0),
            Direction::Diagonal => (1, 1),
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" | "h" => Ok(Direction::Horizontal),
            "V" | "v" => Ok(Direction::Vertical),
            "D" | "d" => Ok(Direction::Diagonal),
            _ => Err(Error::InvalidArgument(format!("unknown direction `{s}`, expected H, V or D"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    All,
    Random { count: usize, seed: u64 },
}

/// `Signed` keeps the sign of the covariance; `AbsCov` applies `|cov|` in the numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrelationForm {
    #[default]
    Signed,
    AbsCov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalCorrelation {
    pub horizontal: f64,
    pub vertical: f64,
    pub diagonal: f64,
}

#[derive(Default)]
struct PairSums {
    n: i128,
    sx: i128,
    sy: i128,
    sxx: i128,
    syy: i128,
    sxy: i128,
}

impl PairSums {
    fn add(&mut self, x: u8, y: u8) {
        let (x, y) = (x as i128, y as i128);
        self.n += 1;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
    }
}

/// Correlation of adjacent-pixel pairs in one channel. Sums are exact integers, so
/// the result does not depend on pair order.
pub fn adjacent_correlation(
    img: &ImageBuffer,
    channel: usize,
    direction: Direction,
    sampling: Sampling,
    form: CorrelationForm,
) -> Result<f64> {
    img.check_channel(channel)?;
    if img.width() < 2 || img.height() < 2 {
        return Err(Error::Image("correlation needs an image of at least 2x2".into()));
    }
    let (dr, dc) = direction.offset();
    let rows = img.height() - dr;
    let cols = img.width() - dc;
    let mut sums = PairSums::default();
    match sampling {
        Sampling::All => {
            for r in 0..rows {
                for c in 0..cols {
                    sums.add(img.get(r, c, channel), img.get(r + dr, c + dc, channel));
                }
            }
        }
        Sampling::Random { count, seed } => {
            let mut rng = SplitMix64::seed_from_u64(seed);
            for _ in 0..count {
                let r = below(&mut rng, rows as u64) as usize;
                let c = below(&mut rng, cols as u64) as usize;
                sums.add(img.get(r, c, channel), img.get(r + dr, c + dc, channel));
            }
        }
    }
    if sums.n < 2 {
        return Err(Error::Image("correlation needs at least 2 pixel pairs".into()));
    }
    let cov = sums.n * sums.sxy - sums.sx * sums.sy;
    let vx = sums.n * sums.sxx - sums.sx * sums.sx;
    let vy = sums.n * sums.syy - sums.sy * sums.sy;
    if vx == 0 || vy == 0 {
        return Err(Error::UndefinedCorrelation("constant pixel values"));
    }
    let cov = match form {
        CorrelationForm::Signed => cov,
        CorrelationForm::AbsCov => cov.abs(),
    };
    Ok((cov as f64 / (vx as f64 * vy as f64).sqrt()).clamp(-1.0, 1.0))
}

pub fn directional_correlation(
    img: &ImageBuffer,
    channel: usize,
    sampling: Sampling,
    form: CorrelationForm,
) -> Result<DirectionalCorrelation> {
    let f = |d| adjacent_correlation(img, channel, d, sampling, form);
    Ok(DirectionalCorrelation {
        horizontal: f(Direction::Horizontal)?,
        vertical: f(Direction::Vertical)?,
        diagonal: f(Direction::Diagonal)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffReport {
    pub npcr: f64,
    pub uaci: f64,
}

/// NPCR and UACI as fractions, averaged over channels.
pub fn npcr_uaci(c1: &ImageBuffer, c2: &ImageBuffer) -> Result<DiffReport> {
    if !c1.same_shape(c2) {
        return Err(Error::Image("images differ in shape".into()));
    }
    let ch = c1.channels();
    let mn = (c1.width() * c1.height()) as f64;
    let (mut npcr, mut uaci) = (0.0, 0.0);
    for k in 0..ch {
        let (mut changed, mut intensity) = (0u64, 0u64);
        for (a, b) in c1.pixels().iter().skip(k).step_by(ch).zip(c2.pixels().iter().skip(k).step_by(ch)) {
            changed += (a != b) as u64;
            intensity += a.abs_diff(*b) as u64;
        }
        npcr += changed as f64 / mn;
        uaci += intensity as f64 / 255.0 / mn;
    }
    Ok(DiffReport { npcr: npcr / ch as f64, uaci: uaci / ch as f64 })
}

/// One differential trial: the flipped byte offset and the resulting ciphertext gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffTrial {
    pub offset: usize,
    pub report: DiffReport,
}

/// Encrypts `img` and, per trial, a copy with the low bit of one random byte flipped.
pub fn differential_trials(img: &ImageBuffer, key: &CipherKey, trials: usize, seed: u64) -> Result<Vec<DiffTrial>> {
    let cipher = Cipher::for_image(key, img)?;
    let base = cipher.encrypt(img)?;
    let mut rng = NoiseRng::new(seed);
    (0..trials)
        .map(|_| {
            let offset = rng.below(img.pixels().len() as u64) as usize;
            let mut changed = img.clone();
            changed.pixels_mut()[offset] ^= 1;
            let report = npcr_uaci(&base, &cipher.encrypt(&changed)?)?;
            Ok(DiffTrial { offset, report })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Identical,
    Db(f64),
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Identical => f.write_str("identical"),
            Psnr::Db(v) => write!(f, "{}", crate::report::sig9(*v)),
        }
    }
}

pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<Psnr> {
    if !a.same_shape(b) {
        return Err(Error::Image("images differ in shape".into()));
    }
    let sse: u64 = a.pixels().iter().zip(b.pixels()).map(|(x, y)| (x.abs_diff(*y) as u64).pow(2)).sum();
    if sse == 0 {
        return Ok(Psnr::Identical);
    }
    let mse = sse as f64 / a.pixels().len() as f64;
    Ok(Psnr::Db(10.0 * (255.0f64 * 255.0 / mse).log10()))
}

/// SplitMix64 words turned into uniforms (53-bit) and normals (Box-Muller, both
/// deviates used in order).
pub struct NoiseRng {
    inner: SplitMix64,
    spare: Option<f64>,
}

impl NoiseRng {
    pub fn new(seed: u64) -> Self {
        Self { inner: SplitMix64::seed_from_u64(seed), spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        below(&mut self.inner, n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * t.sin());
        r * t.cos()
    }
}

// Rejection sampling avoids modulo bias.
fn below(rng: &mut SplitMix64, n: u64) -> u64 {
    let zone = u64::MAX - u64::MAX % n;
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % n;
        }
    }
}

fn requantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Sets `round(density * samples)` distinct samples to 0 or 255 with equal odds.
pub fn attack_salt_pepper(img: &ImageBuffer, density: f64, seed: u64) -> Result<ImageBuffer> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidArgument(format!("density {density} outside [0, 1]")));
    }
    let mut out = img.clone();
    let n = out.pixels().len();
    let hits = (density * n as f64).round() as usize;
    let mut rng = NoiseRng::new(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..hits {
        let j = i + rng.below((n - i) as u64) as usize;
        order.swap(i, j);
        let v = if rng.next_u64() >> 63 == 0 { 0 } else { 255 };
        out.pixels_mut()[order[i]] = v;
    }
    Ok(out)
}

/// Adds `mean + sqrt(variance) * n` on the `[0, 1]` scale.
pub fn attack_gaussian(img: &ImageBuffer, mean: f64, variance: f64, seed: u64) -> Result<ImageBuffer> {
    if variance < 0.0 || variance.is_nan() || !mean.is_finite() || !variance.is_finite() {
        return Err(Error::InvalidArgument("variance must be non-negative and finite".into()));
    }
    let sd = variance.sqrt();
    let mut rng = NoiseRng::new(seed);
    let mut out = img.clone();
    for p in out.pixels_mut() {
        let v = *p as f64 / 255.0 + mean + sd * rng.standard_normal();
        *p = requantize(v);
    }
    Ok(out)
}

/// `p + p * n` with `n ~ N(0, variance)` on the `[0, 1]` scale.
pub fn attack_speckle(img: &ImageBuffer, variance: f64, seed: u64) -> Result<ImageBuffer> {
    if variance < 0.0 || variance.is_nan() || !variance.is_finite() {
        return Err(Error::InvalidArgument("variance must be non-negative and finite".into()));
    }
    let sd = variance.sqrt();
    let mut rng = NoiseRng::new(seed);
    let mut out = img.clone();
    for p in out.pixels_mut() {
        let v = *p as f64 / 255.0;
        *p = requantize(v + v * sd * rng.standard_normal());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl FromStr for Rect {
    type Err = Error;

    /// `x,y,width,height`
    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<usize> = s
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad rectangle `{s}`"))))
            .collect::<Result<_>>()?;
        match v[..] {
            [x, y, width, height] => Ok(Rect { x, y, width, height }),
            _ => Err(Error::InvalidArgument(format!("rectangle needs x,y,width,height, got `{s}`"))),
        }
    }
}

pub fn attack_crop(img: &ImageBuffer, rect: Rect, fill: u8) -> Result<ImageBuffer> {
    if rect.x + rect.width > img.width() || rect.y + rect.height > img.height() {
        return Err(Error::InvalidArgument(format!(
            "rectangle {rect:?} exceeds {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let mut out = img.clone();
    for r in rect.y..rect.y + rect.height {
        for c in rect.x..rect.x + rect.width {
            for ch in 0..img.channels() {
                out.set(r, c, ch, fill);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp() -> ImageBuffer {
        ImageBuffer::new(16, 16, 1, (0..=255).collect()).unwrap()
    }

    fn gray(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> ImageBuffer {
        let px = (0..h).flat_map(|r| (0..w).map(move |c| (r, c))).map(|(r, c)| f(r, c)).collect();
        ImageBuffer::new(w, h, 1, px).unwrap()
    }

    #[test]
    fn histogram_cases() {
        let z = ImageBuffer::filled(4, 5, 1, 0).unwrap();
        let h = histogram(&z, 0).unwrap();
        assert_eq!(h[0], 20);
        assert_eq!(h.iter().sum::<u64>(), 20);
        assert!(histogram(&ramp(), 0).unwrap().iter().all(|&c| c == 1));
        assert!(histogram(&z, 1).is_err());
        assert_eq!(chi_square(&histogram(&ramp(), 0).unwrap()), 0.0);
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(shannon_entropy(&ImageBuffer::filled(3, 3, 1, 9).unwrap(), 0).unwrap(), 0.0);
        assert_eq!(shannon_entropy(&ramp(), 0).unwrap(), 8.0);
    }

    #[test]
    fn correlation_cases() {
        let cols = gray(8, 8, |r, _| (r * 30) as u8);
        let all = Sampling::All;
        assert_eq!(
            adjacent_correlation(&cols, 0, Direction::Horizontal, all, CorrelationForm::Signed).unwrap(),
            1.0
        );
        let checker = gray(8, 8, |r, c| if (r + c) % 2 == 0 { 0 } else { 255 });
        assert_eq!(
            adjacent_correlation(&checker, 0, Direction::Horizontal, all, CorrelationForm::AbsCov).unwrap(),
            1.0
        );
        assert_eq!(
            adjacent_correlation(&checker, 0, Direction::Horizontal, all, CorrelationForm::Signed).unwrap(),
            -1.0
        );
        let flat = ImageBuffer::filled(4, 4, 1, 3).unwrap();
        assert!(matches!(
            adjacent_correlation(&flat, 0, Direction::Vertical, all, CorrelationForm::Signed),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(adjacent_correlation(&gray(1, 4, |r, _| r as u8), 0, Direction::Vertical, all, CorrelationForm::Signed).is_err());
    }

    #[test]
    fn sampled_correlation_is_reproducible() {
        let img = crate::testimage::natural(64, 64);
        let s = Sampling::Random { count: 2000, seed: 5 };
        let a = adjacent_correlation(&img, 0, Direction::Diagonal, s, CorrelationForm::Signed).unwrap();
        let b = adjacent_correlation(&img, 0, Direction::Diagonal, s, CorrelationForm::Signed).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.8);
    }

    #[test]
    fn differential_extremes() {
        let z = ImageBuffer::filled(4, 4, 3, 0).unwrap();
        let f = ImageBuffer::filled(4, 4, 3, 255).unwrap();
        assert_eq!(npcr_uaci(&z, &z).unwrap(), DiffReport { npcr: 0.0, uaci: 0.0 });
        assert_eq!(npcr_uaci(&z, &f).unwrap(), DiffReport { npcr: 1.0, uaci: 1.0 });
        assert!(npcr_uaci(&z, &ImageBuffer::filled(4, 4, 1, 0).unwrap()).is_err());
    }

    #[test]
    fn psnr_cases() {
        let a = ImageBuffer::filled(256, 256, 1, 100).unwrap();
        let mut b = a.clone();
        b.pixels_mut()[77] = 101;
        let want = 10.0 * (255.0f64 * 255.0 * 65536.0).log10();
        match psnr(&a, &b).unwrap() {
            Psnr::Db(v) => assert!((v - want).abs() < 1e-9),
            Psnr::Identical => panic!("expected finite PSNR"),
        }
        assert_eq!(psnr(&a, &a).unwrap(), Psnr::Identical);
    }

    #[test]
    fn attacks_basic() {
        let img = crate::testimage::natural(32, 32);
        assert_eq!(attack_salt_pepper(&img, 0.0, 1).unwrap(), img);
        assert_eq!(attack_gaussian(&img, 0.0, 0.0, 1).unwrap(), img);
        assert_eq!(attack_speckle(&img, 0.0, 1).unwrap(), img);
        let full = Rect { x: 0, y: 0, width: 32, height: 32 };
        assert!(attack_crop(&img, full, 0).unwrap().pixels().iter().all(|&p| p == 0));
        assert!(attack_crop(&img, Rect { x: 1, ..full }, 0).is_err());
        assert!(attack_salt_pepper(&img, 1.5, 1).is_err());
        assert!(attack_gaussian(&img, 0.0, -1.0, 1).is_err());
        assert_eq!("1,2,3,4".parse::<Rect>().unwrap(), Rect { x: 1, y: 2, width: 3, height: 4 });
        assert!("1,2,3".parse::<Rect>().is_err());
    }

    #[test]
    fn salt_pepper_hits_exact_fraction() {
        let img = ImageBuffer::filled(40, 25, 1, 128).unwrap();
        let out = attack_salt_pepper(&img, 0.1, 9).unwrap();
        let hit = out.pixels().iter().filter(|&&p| p != 128).count();
        assert_eq!(hit, 100);
        assert!(out.pixels().iter().all(|&p| p == 128 || p == 0 || p == 255));
        assert_eq!(out, attack_salt_pepper(&img, 0.1, 9).unwrap());
        assert_ne!(out, attack_salt_pepper(&img, 0.1, 10).unwrap());
    }

    #[test]
    fn normal_deviates_have_unit_variance() {
        let mut rng = NoiseRng::new(42);
        let n = 200_000;
        let v: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01 && (var - 1.0).abs() < 0.02, "{mean} {var}");
    }

    fn small_image() -> impl Strategy<Value = ImageBuffer> {
        (2usize..12, 2usize..12, prop::bool::ANY).prop_flat_map(|(w, h, rgb)| {
            let ch = if rgb { 3 } else { 1 };
            prop::collection::vec(any::<u8>(), w * h * ch)
                .prop_map(move |px| ImageBuffer::new(w, h, ch, px).unwrap())
        })
    }

    proptest! {
        #[test]
        fn diff_metric_properties(a in small_image(), seed in any::<u64>()) {
            let b = attack_gaussian(&a, 0.0, 0.05, seed).unwrap();
            let ab = npcr_uaci(&a, &b).unwrap();
            let ba = npcr_uaci(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab.npcr) && (0.0..=1.0).contains(&ab.uaci));
            prop_assert_eq!(npcr_uaci(&a, &a).unwrap().npcr, 0.0);
        }

        #[test]
        fn entropy_bounded_and_permutation_invariant(a in small_image(), shift in any::<u8>()) {
            let h = shannon_entropy(&a, 0).unwrap();
            prop_assert!((0.0..=8.0).contains(&h));
            let mut b = a.clone();
            // x -> 167x + shift is a bijection on bytes
            for p in b.pixels_mut() {
                *p = p.wrapping_mul(167).wrapping_add(shift);
            }
            prop_assert!((shannon_entropy(&b, 0).unwrap() - h).abs() < 1e-12);
        }

        #[test]
        fn correlation_transpose_symmetry(a in small_image()) {
            let t = a.transpose();
            for form in [CorrelationForm::Signed, CorrelationForm::AbsCov] {
                let h = adjacent_correlation(&a, 0, Direction::Horizontal, Sampling::All, form);
                let v = adjacent_correlation(&t, 0, Direction::Vertical, Sampling::All, form);
                match (h, v) {
                    (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
                    (Err(_), Err(_)) => {}
                    other => prop_assert!(false, "{:?}", other),
                }
                let d1 = adjacent_correlation(&a, 0, Direction::Diagonal, Sampling::All, form).ok();
                let d2 = adjacent_correlation(&t, 0, Direction::Diagonal, Sampling::All, form).ok();
                prop_assert_eq!(d1, d2);
            }
        }

        #[test]
        fn attacks_deterministic(a in small_image(), seed in any::<u64>()) {
            prop_assert_eq!(attack_salt_pepper(&a, 0.3, seed).unwrap(), attack_salt_pepper(&a, 0.3, seed).unwrap());
            prop_assert_eq!(attack_gaussian(&a, 0.0, 0.01, seed).unwrap(), attack_gaussian(&a, 0.0, 0.01, seed).unwrap());
            prop_assert_eq!(attack_speckle(&a, 0.04, seed).unwrap(), attack_speckle(&a, 0.04, seed).unwrap());
        }
    }
}
