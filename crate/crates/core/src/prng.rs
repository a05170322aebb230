//! Bitstreams from single-precision tail bits of the orbit, and four frequency-class
//! randomness tests.

use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::neuron::{mhdnn_step, MhdnnParams, MhdnnState};
use crate::report::sig9;

pub const ALPHA: f64 = 0.01;
pub const TRANSIENT: usize = 1000;
pub const BLOCK_LEN: usize = 128;

/// Packed bits, most significant bit of each byte first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream {
    bytes: Vec<u8>,
    len: usize,
}

impl BitStream {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        let len = bytes.len() * 8;
        Self { bytes, len }
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let mut bytes = vec![0u8; s.len().div_ceil(8)];
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bytes[i / 8] |= 0x80 >> (i % 8),
                _ => return Err(Error::InvalidArgument(format!("bad bit character {c:?}"))),
            }
        }
        Ok(Self { bytes, len: s.len() })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bit(i))
    }

    pub fn ones(&self) -> usize {
        let full = self.len / 8;
        let mut n: usize = self.bytes[..full].iter().map(|b| b.count_ones() as usize).sum();
        for i in full * 8..self.len {
            n += self.bit(i) as usize;
        }
        n
    }
}

/// Which orbit coordinate feeds the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    X,
    Y,
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(Source::X),
            "Y" | "y" => Ok(Source::Y),
            _ => Err(Error::InvalidArgument(format!("unknown source `{s}`, expected X or Y"))),
        }
    }
}

/// Bits 25..=32 (counting from the sign bit as 1) of the binary32 rounding of `v`.
pub fn float32_tail_bits(v: f64) -> Result<u8> {
    if !v.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(((v as f32).to_bits() & 0xFF) as u8)
}

/// Emits `n_bits` from the chosen coordinate after a fixed transient.
pub fn generate(p: &MhdnnParams, s0: MhdnnState, n_bits: usize, source: Source) -> Result<BitStream> {
    if !n_bits.is_multiple_of(8) {
        return Err(Error::InvalidArgument(format!("n_bits must be a multiple of 8, got {n_bits}")));
    }
    let mut s = s0;
    for step in 1..=TRANSIENT {
        s = mhdnn_step(s, p);
        if s.is_divergent() {
            return Err(Error::Divergent { step });
        }
    }
    let n_bytes = n_bits / 8;
    let mut bytes = Vec::with_capacity(n_bytes);
    for k in 1..=n_bytes {
        s = mhdnn_step(s, p);
        if s.is_divergent() {
            return Err(Error::Divergent { step: TRANSIENT + k });
        }
        let v = match source {
            Source::X => s.x,
            Source::Y => s.y,
        };
        bytes.push(float32_tail_bits(v)?);
    }
    Ok(BitStream::from_bytes(bytes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub name: &'static str,
    pub statistic: f64,
    pub p_value: f64,
    pub passed: bool,
}

impl TestReport {
    fn new(name: &'static str, statistic: f64, p_value: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self { name, statistic, p_value, passed: p_value > ALPHA }
    }
}

pub fn reports_csv(reports: &[TestReport]) -> String {
    let mut out = String::from("test,statistic,p_value,pass\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.name,
            sig9(r.statistic),
            sig9(r.p_value),
            if r.passed { "Pass" } else { "Fail" }
        ));
    }
    out
}

fn require_len(bs: &BitStream, needed: usize) -> Result<()> {
    if bs.len() < needed {
        Err(Error::TooShort { needed, got: bs.len() })
    } else {
        Ok(())
    }
}

/// Frequency (monobit) test.
pub fn monobit(bs: &BitStream) -> Result<TestReport> {
    require_len(bs, 100)?;
    let n = bs.len() as f64;
    let sum = 2.0 * bs.ones() as f64 - n;
    let s_obs = sum.abs() / n.sqrt();
    Ok(TestReport::new("Frequency", s_obs, erfc(s_obs / 2f64.sqrt())))
}

/// Frequency within blocks of `block_len` bits, for any block length.
pub fn block_frequency_with(bs: &BitStream, block_len: usize) -> Result<TestReport> {
    if block_len == 0 {
        return Err(Error::InvalidArgument("block length must be positive".into()));
    }
    require_len(bs, block_len)?;
    let blocks = bs.len() / block_len;
    let chi2: f64 = 4.0
        * block_len as f64
        * (0..blocks)
            .map(|b| {
                let ones = (b * block_len..(b + 1) * block_len).filter(|&i| bs.bit(i)).count();
                let pi = ones as f64 / block_len as f64 - 0.5;
                pi * pi
            })
            .sum::<f64>();
    let p = gamma_ur(blocks as f64 / 2.0, chi2 / 2.0);
    Ok(TestReport::new("Block frequency", chi2, p))
}

/// Block frequency at M = 128.
pub fn block_frequency(bs: &BitStream) -> Result<TestReport> {
    require_len(bs, 128 * BLOCK_LEN)?;
    block_frequency_with(bs, BLOCK_LEN)
}

/// Runs test. Fails outright when the monobit prerequisite is not met.
pub fn runs(bs: &BitStream) -> Result<TestReport> {
    require_len(bs, 100)?;
    let n = bs.len() as f64;
    let pi = bs.ones() as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return Ok(TestReport::new("Runs", f64::NAN, 0.0));
    }
    let mut v_obs = 1usize;
    let mut prev = bs.bit(0);
    for b in bs.iter().skip(1) {
        if b != prev {
            v_obs += 1;
        }
        prev = b;
    }
    let num = (v_obs as f64 - 2.0 * n * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi);
    Ok(TestReport::new("Runs", v_obs as f64, erfc(num / den)))
}

/// Cumulative sums, forward or backward.
pub fn cusum_mode(bs: &BitStream, reverse: bool) -> Result<TestReport> {
    require_len(bs, 100)?;
    let n = bs.len();
    let mut s: i64 = 0;
    let mut z: i64 = 0;
    let mut step = |b: bool| {
        s += if b { 1 } else { -1 };
        z = z.max(s.abs());
    };
    if reverse {
        (0..n).rev().for_each(|i| step(bs.bit(i)));
    } else {
        (0..n).for_each(|i| step(bs.bit(i)));
    }
    let z = z as f64;
    let nf = n as f64;
    let normal = Normal::standard();
    let phi = |x: f64| normal.cdf(x);
    let sqrt_n = nf.sqrt();

    let mut sum1 = 0.0;
    let k_lo = ((-nf / z + 1.0) / 4.0).trunc() as i64;
    let k_hi = ((nf / z - 1.0) / 4.0).trunc() as i64;
    for k in k_lo..=k_hi {
        let k = k as f64;
        sum1 += phi((4.0 * k + 1.0) * z / sqrt_n) - phi((4.0 * k - 1.0) * z / sqrt_n);
    }
    let mut sum2 = 0.0;
    let k_lo = ((-nf / z - 3.0) / 4.0).trunc() as i64;
    for k in k_lo..=k_hi {
        let k = k as f64;
        sum2 += phi((4.0 * k + 3.0) * z / sqrt_n) - phi((4.0 * k + 1.0) * z / sqrt_n);
    }
    let name = if reverse { "Cumulative sums (reverse)" } else { "Cumulative sums" };
    Ok(TestReport::new(name, z, 1.0 - sum1 + sum2))
}

/// Forward cumulative-sums test.
pub fn cusum(bs: &BitStream) -> Result<TestReport> {
    cusum_mode(bs, false)
}

/// The four implemented tests in the conventional order.
pub fn run_all(bs: &BitStream) -> Result<Vec<TestReport>> {
    Ok(vec![monobit(bs)?, block_frequency(bs)?, cusum(bs)?, runs(bs)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // 100-bit worked example used throughout the frequency-test literature.
    const EPS100: &str = "1100100100001111110110101010001000100001011010001100001000110100110001001100011001100010100010111000";

    fn round6(v: f64) -> f64 {
        (v * 1e6).round() / 1e6
    }

    #[test]
    fn tail_bits() {
        assert_eq!(float32_tail_bits(0.0).unwrap(), 0x00);
        assert_eq!(float32_tail_bits(1.0).unwrap(), 0x00);
        assert_eq!(float32_tail_bits(0.1).unwrap(), 0xCD);
        assert!(float32_tail_bits(f64::NAN).is_err());
        assert!(float32_tail_bits(f64::INFINITY).is_err());
    }

    proptest! {
        #[test]
        fn tail_bits_match_byte_reinterpretation(v in -1e6f64..1e6) {
            let be = (v as f32).to_be_bytes();
            prop_assert_eq!(float32_tail_bits(v).unwrap(), be[3]);
        }
    }

    #[test]
    fn reference_vector_statistics() {
        let bs = BitStream::from_bit_str(EPS100).unwrap();
        assert_eq!(round6(monobit(&bs).unwrap().p_value), 0.109599);
        assert_eq!(round6(runs(&bs).unwrap().p_value), 0.500798);
        assert_eq!(round6(block_frequency_with(&bs, 10).unwrap().p_value), 0.706438);
        assert_eq!(round6(cusum_mode(&bs, false).unwrap().p_value), 0.219194);
        assert_eq!(round6(cusum_mode(&bs, true).unwrap().p_value), 0.114866);
        let small = BitStream::from_bit_str("0110011010").unwrap();
        assert_eq!(round6(block_frequency_with(&small, 3).unwrap().p_value), 0.801252);
    }

    #[test]
    fn reference_vector_statistic_values() {
        let bs = BitStream::from_bit_str(EPS100).unwrap();
        let m = monobit(&bs).unwrap();
        // S = 2*42 - 100 = -16, s_obs = 1.6
        assert!((m.statistic - 1.6).abs() < 1e-12);
        let r = runs(&bs).unwrap();
        assert_eq!(r.statistic, 52.0);
        let b = block_frequency_with(&bs, 10).unwrap();
        assert!((b.statistic - 7.2).abs() < 1e-9);
        assert_eq!(cusum(&bs).unwrap().statistic, 16.0);
    }

    #[test]
    fn alternating_bits() {
        let bs = BitStream::from_bytes(vec![0x55; 1250]);
        let m = monobit(&bs).unwrap();
        assert_eq!(m.p_value, 1.0);
        assert!(m.passed);
        let r = runs(&bs).unwrap();
        assert_eq!(r.statistic, 10_000.0);
        assert!(!r.passed && r.p_value < ALPHA);
    }

    #[test]
    fn all_zero_bits_fail() {
        let bs = BitStream::from_bytes(vec![0; 1250]);
        let m = monobit(&bs).unwrap();
        assert!(m.p_value < 1e-10 && !m.passed);
    }

    #[test]
    fn short_streams_rejected() {
        let bs = BitStream::from_bytes(vec![0; 12]);
        assert!(matches!(monobit(&bs), Err(Error::TooShort { .. })));
        assert!(matches!(runs(&bs), Err(Error::TooShort { .. })));
        assert!(matches!(cusum(&bs), Err(Error::TooShort { .. })));
        let mid = BitStream::from_bytes(vec![0xA5; 1000]);
        assert!(matches!(block_frequency(&mid), Err(Error::TooShort { .. })));
    }

    #[test]
    fn first_byte_is_first_post_transient_sample() {
        let p = MhdnnParams::new(-3.4, 1.5, 4.28, 1.3, 0.2);
        let s0 = MhdnnState::new(0.1, 0.1, 0.1);
        let bs = generate(&p, s0, 8, Source::X).unwrap();
        let orbit = crate::neuron::iterate(&p, s0, TRANSIENT, 1).unwrap();
        assert_eq!(bs.as_bytes(), &[float32_tail_bits(orbit.states[0].x).unwrap()]);
        assert_eq!(bs, generate(&p, s0, 8, Source::X).unwrap());
        assert!(generate(&p, s0, 7, Source::X).is_err());
    }

    proptest! {
        #[test]
        fn p_values_in_unit_interval(bytes in prop::collection::vec(any::<u8>(), 13..400)) {
            let bs = BitStream::from_bytes(bytes);
            for r in [monobit(&bs).unwrap(), runs(&bs).unwrap(), cusum(&bs).unwrap(), cusum_mode(&bs, true).unwrap(), block_frequency_with(&bs, 16).unwrap()] {
                prop_assert!((0.0..=1.0).contains(&r.p_value));
                prop_assert_eq!(r.passed, r.p_value > ALPHA);
            }
        }
    }
}
