// SPDX-License-Identifier: Apache-2.0

//! Occupancy tracking: the real elastic buffer and the domain difference
//! counter (DDC), a "virtual" elastic buffer made of two frame counters.
//!
//! A DDC counts frames arriving (rx) and frames departing (tx) in their own
//! clock domains. Each count lives in a small wrapping counter that is
//! carried into the always-on domain in Gray code, so that a sample taken
//! mid-transition is off by at most one, and then extended to 64 bits. The
//! occupancy is the 64-bit difference truncated to a signed 32-bit value, so
//! zero reads as half of a 2^32-deep virtual buffer.

use rand::Rng;

use crate::{Error, Fault, Result};

pub const DEFAULT_DEPTH: usize = 32;

/// Elastic buffers start at half full plus two.
pub const DEFAULT_EB_INIT: usize = 18;

pub const DEFAULT_GRAY_BITS: u32 = 6;

pub fn gray_encode(x: u64) -> u64 {
    x ^ (x >> 1)
}

pub fn gray_decode(mut g: u64) -> u64 {
    let mut shift = 1;
    while shift < 64 {
        g ^= g >> shift;
        shift <<= 1;
    }
    g
}

fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// An n-bit counter cycling through 0..2^n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WrappingCounter {
    bits: u32,
    value: u64,
}

impl WrappingCounter {
    pub fn new(bits: u32) -> Result<Self> {
        if !(2..=63).contains(&bits) {
            return Err(Error::config(format!("counter width must be in 2..=63, got {bits}")));
        }
        Ok(WrappingCounter { bits, value: 0 })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn set(&mut self, count: u64) {
        self.value = count & mask(self.bits);
    }

    pub fn increment(&mut self) {
        self.value = (self.value + 1) & mask(self.bits);
    }
}

/// Samples a counter across clock domains through its Gray-coded form.
///
/// A sample taken while the counter is changing resolves to either the old
/// or the new code, never anything else, because consecutive codes differ
/// in a single bit.
pub fn sample_gray<R: Rng + ?Sized>(counter: &WrappingCounter, mid_transition: bool, rng: &mut R) -> u64 {
    let current = gray_encode(counter.value);
    if mid_transition && rng.gen_bool(0.5) {
        let previous = counter.value.wrapping_sub(1) & mask(counter.bits);
        gray_encode(previous)
    } else {
        current
    }
}

/// A low-width counter extended to 64 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtendedCounter {
    bits: u32,
    extended: u64,
}

impl ExtendedCounter {
    pub fn new(bits: u32) -> Result<Self> {
        WrappingCounter::new(bits)?;
        Ok(ExtendedCounter { bits, extended: 0 })
    }

    /// A counter that already holds `count`.
    pub fn from_count(bits: u32, count: u64) -> Self {
        ExtendedCounter {
            bits,
            extended: count,
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn extended(&self) -> u64 {
        self.extended
    }

    pub fn low(&self) -> u64 {
        self.extended & mask(self.bits)
    }
}

/// Extends a sampled low counter value against the previous extension.
///
/// The true count must have advanced by less than 2^(n-1) since `prev`. A
/// residue one below the previous one is read as a mid-transition sample and
/// steps back by one.
pub fn extend(prev: ExtendedCounter, sampled_low: u64) -> Result<ExtendedCounter, Fault> {
    let m = mask(prev.bits);
    if sampled_low > m {
        return Err(Fault::Accounting(format!(
            "sample {sampled_low} does not fit in {} bits",
            prev.bits
        )));
    }
    let delta = sampled_low.wrapping_sub(prev.low()) & m;
    let half = 1u64 << (prev.bits - 1);
    let extended = if delta == m {
        prev.extended.checked_sub(1).ok_or_else(|| {
            Fault::Accounting("backward correction below zero".to_string())
        })?
    } else if delta < half {
        prev.extended + delta
    } else {
        return Err(Fault::Accounting(format!(
            "counter advanced by {delta} >= {half} between samples"
        )));
    };
    Ok(ExtendedCounter {
        bits: prev.bits,
        extended,
    })
}

/// Signed occupancy of a virtual elastic buffer; zero is half-full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DdcOccupancy(pub i32);

impl DdcOccupancy {
    pub fn value(self) -> i32 {
        self.0
    }
}

/// `rx - tx`, truncated to a signed 32-bit value.
pub fn ddc_occupancy(rx: ExtendedCounter, tx: ExtendedCounter) -> DdcOccupancy {
    DdcOccupancy(rx.extended.wrapping_sub(tx.extended) as u32 as i32)
}

/// One side of a DDC: a wrapping counter in its own domain plus the
/// extension logic in the always-on domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainCounter {
    wrap: WrappingCounter,
    ext: ExtendedCounter,
    count: u64,
}

impl DomainCounter {
    pub fn new(bits: u32) -> Result<Self> {
        Ok(DomainCounter {
            wrap: WrappingCounter::new(bits)?,
            ext: ExtendedCounter::new(bits)?,
            count: 0,
        })
    }

    /// Advances the counter to `count`, sampling it through Gray code often
    /// enough to satisfy the extension precondition.
    pub fn advance_to(&mut self, count: u64) -> Result<(), Fault> {
        if count < self.count {
            return Err(Fault::Accounting(format!(
                "counter moved backwards from {} to {count}",
                self.count
            )));
        }
        let stride = (1u64 << (self.wrap.bits() - 1)) - 1;
        while self.count < count {
            self.count = (self.count + stride).min(count);
            self.wrap.set(self.count);
            let low = gray_decode(gray_encode(self.wrap.value()));
            self.ext = extend(self.ext, low)?;
        }
        if self.ext.extended() != self.count {
            return Err(Fault::Accounting(format!(
                "extension {} disagrees with count {}",
                self.ext.extended(),
                self.count
            )));
        }
        Ok(())
    }

    pub fn extended(&self) -> ExtendedCounter {
        self.ext
    }
}

/// A bounded FIFO, tracked by counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElasticBuffer {
    depth: usize,
    occupancy: usize,
    reads: u64,
    writes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferError {
    Overflow,
    Underflow,
}

impl ElasticBuffer {
    pub fn new(depth: usize, initial: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::config("elastic buffer depth must be positive"));
        }
        if initial > depth {
            return Err(Error::config(format!(
                "initial occupancy {initial} exceeds depth {depth}"
            )));
        }
        Ok(ElasticBuffer {
            depth,
            occupancy: initial,
            reads: 0,
            writes: initial as u64,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn occupancy(&self) -> usize {
        self.occupancy
    }

    pub fn reads(&self) -> u64 {
        self.reads
    }

    pub fn writes(&self) -> u64 {
        self.writes
    }

    pub fn push(&mut self) -> Result<(), BufferError> {
        if self.occupancy == self.depth {
            return Err(BufferError::Overflow);
        }
        self.occupancy += 1;
        self.writes += 1;
        Ok(())
    }

    pub fn pop(&mut self) -> Result<(), BufferError> {
        if self.occupancy == 0 {
            return Err(BufferError::Underflow);
        }
        self.occupancy -= 1;
        self.reads += 1;
        Ok(())
    }
}

/// Result of switching a link from its DDC to a real elastic buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reframed {
    pub buffer: ElasticBuffer,
    /// Change in the link's logical latency caused by recentering.
    pub lambda_delta: i64,
}

/// Recenters a link onto a fresh elastic buffer holding `eb_init` frames.
pub fn reframe(ddc: DdcOccupancy, eb_init: usize, depth: usize) -> Result<Reframed> {
    Ok(Reframed {
        buffer: ElasticBuffer::new(depth, eb_init)?,
        lambda_delta: eb_init as i64 - ddc.value() as i64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Reflected binary code built by mirroring, independent of the xor form.
    fn reflected_table(bits: u32) -> Vec<u64> {
        let mut codes = vec![0u64];
        for b in 0..bits {
            let mirrored: Vec<u64> = codes.iter().rev().map(|c| c | (1 << b)).collect();
            codes.extend(mirrored);
        }
        codes
    }

    #[test]
    fn gray_matches_table() {
        assert_eq!(gray_encode(0), 0);
        let table = reflected_table(3);
        assert_eq!(table[5], 7);
        assert_eq!(gray_encode(5), 7);
        assert_eq!(gray_decode(7), 5);
        assert_eq!(table[6], 5);
        for bits in 1..=10 {
            for (x, &g) in reflected_table(bits).iter().enumerate() {
                assert_eq!(gray_encode(x as u64), g);
                assert_eq!(gray_decode(g), x as u64);
            }
        }
    }

    #[test]
    fn sample_gray_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = WrappingCounter::new(3).unwrap();
        c.set(6);
        assert_eq!(sample_gray(&c, false, &mut rng), 5);
        for _ in 0..100 {
            let s = sample_gray(&c, true, &mut rng);
            assert!(s == gray_encode(5) || s == gray_encode(6));
        }
        c.set(0);
        for _ in 0..100 {
            let s = gray_decode(sample_gray(&c, true, &mut rng));
            assert!(s == 0 || s == 7);
        }
    }

    #[test]
    fn wrapping() {
        let mut c = WrappingCounter::new(3).unwrap();
        for _ in 0..7 {
            c.increment();
        }
        assert_eq!(c.value(), 7);
        c.increment();
        assert_eq!(c.value(), 0);
        assert!(WrappingCounter::new(1).is_err());
    }

    #[test]
    fn extend_cases() {
        let n = 6;
        let prev = ExtendedCounter::from_count(n, (1 << n) - 1);
        assert_eq!(extend(prev, 0).unwrap().extended(), 1 << n);
        let prev = ExtendedCounter::from_count(n, 10);
        assert_eq!(extend(prev, 10).unwrap().extended(), 10);
        assert_eq!(extend(prev, 9).unwrap().extended(), 9);
        assert!(matches!(extend(prev, 10 + 32), Err(Fault::Accounting(_))));
        assert!(extend(prev, 64).is_err());
    }

    #[test]
    fn ddc_signed_mapping() {
        let c = |x| ExtendedCounter::from_count(6, x);
        assert_eq!(ddc_occupancy(c(1000), c(1000)).value(), 0);
        assert_eq!(ddc_occupancy(c(1018), c(1000)).value(), 18);
        assert_eq!(ddc_occupancy(c(997), c(1000)).value(), -3);
        // Truncation is total.
        assert_eq!(ddc_occupancy(c(1 << 31), c(0)).value(), i32::MIN);
        assert_eq!(ddc_occupancy(c(u64::MAX), c(0)).value(), -1);
    }

    #[test]
    fn domain_counter_tracks_count() {
        let mut d = DomainCounter::new(6).unwrap();
        for target in [0u64, 1, 31, 32, 1000, 1000, 123_457] {
            d.advance_to(target).unwrap();
            assert_eq!(d.extended().extended(), target);
        }
        assert!(d.advance_to(5).is_err());
    }

    #[test]
    fn elastic_buffer_bounds() {
        let mut eb = ElasticBuffer::new(32, 18).unwrap();
        eb.push().unwrap();
        assert_eq!(eb.occupancy(), 19);
        let mut full = ElasticBuffer::new(32, 32).unwrap();
        assert_eq!(full.push(), Err(BufferError::Overflow));
        let mut empty = ElasticBuffer::new(32, 0).unwrap();
        assert_eq!(empty.pop(), Err(BufferError::Underflow));
        assert!(ElasticBuffer::new(32, 33).is_err());
    }

    #[test]
    fn reframe_deltas() {
        let r = reframe(DdcOccupancy(18), 18, 32).unwrap();
        assert_eq!(r.lambda_delta, 0);
        assert_eq!(r.buffer.occupancy(), 18);
        let r = reframe(DdcOccupancy(40), 18, 32).unwrap();
        assert_eq!(r.lambda_delta, -22);
        let r = reframe(DdcOccupancy(-5), 18, 32).unwrap();
        assert_eq!(r.lambda_delta, 23);
    }
}
