//! Adaptive binary arithmetic coder.
//!
//! Classic 32-bit low/high range coder with carry-free renormalization.
//! Probabilities come from per-context bit counters initialized to 1/1 and
//! halved when the total reaches 2^16; both endpoints update identically, so
//! encoder and decoder stay in lockstep without side information.

use super::bits::{BitReader, BitWriter};

const HALF: u64 = 1 << 31;
const QUARTER: u64 = 1 << 30;
const THREE_QUARTERS: u64 = 3 << 30;
const TOP: u64 = (1 << 32) - 1;
const MAX_TOTAL: u32 = 1 << 16;

/// Adaptive probability model for a single binary context.
#[derive(Debug, Clone, Copy)]
pub struct BinModel {
    c0: u16,
    c1: u16,
}

impl Default for BinModel {
    fn default() -> Self {
        BinModel { c0: 1, c1: 1 }
    }
}

impl BinModel {
    pub fn new() -> Self {
        Self::default()
    }

    fn split(&self, range: u64) -> u64 {
        // Size of the zero interval; both intervals stay nonempty because
        // range > 2^30 after renormalization and total < 2^16.
        range * self.c0 as u64 / (self.c0 as u64 + self.c1 as u64)
    }

    fn update(&mut self, bit: bool) {
        if bit {
            self.c1 += 1;
        } else {
            self.c0 += 1;
        }
        if self.c0 as u32 + self.c1 as u32 >= MAX_TOTAL {
            self.c0 = (self.c0 + 1) >> 1;
            self.c1 = (self.c1 + 1) >> 1;
        }
    }
}

pub struct Encoder {
    low: u64,
    high: u64,
    pending: u64,
    out: BitWriter,
}

impl Encoder {
    pub fn new() -> Self {
        Encoder {
            low: 0,
            high: TOP,
            pending: 0,
            out: BitWriter::new(),
        }
    }

    fn emit(&mut self, bit: bool) {
        self.out.push_bit(bit);
        for _ in 0..self.pending {
            self.out.push_bit(!bit);
        }
        self.pending = 0;
    }

    pub fn encode_bit(&mut self, model: &mut BinModel, bit: bool) {
        let range = self.high - self.low + 1;
        let mid = self.low + model.split(range) - 1;
        if bit {
            self.low = mid + 1;
        } else {
            self.high = mid;
        }
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
        model.update(bit);
    }

    /// Flushes the disambiguating tail and returns the bit buffer.
    pub fn finish(mut self) -> BitWriter {
        self.pending += 1;
        if self.low < QUARTER {
            self.emit(false);
        } else {
            self.emit(true);
        }
        self.out
    }
}

pub struct Decoder<'a> {
    low: u64,
    high: u64,
    value: u64,
    input: BitReader<'a>,
}

impl<'a> Decoder<'a> {
    pub fn new(mut input: BitReader<'a>) -> Self {
        let mut value = 0u64;
        for _ in 0..32 {
            value = (value << 1) | input.read_bit_or_zero() as u64;
        }
        Decoder {
            low: 0,
            high: TOP,
            value,
            input,
        }
    }

    pub fn decode_bit(&mut self, model: &mut BinModel) -> bool {
        let range = self.high - self.low + 1;
        let mid = self.low + model.split(range) - 1;
        let bit = self.value > mid;
        if bit {
            self.low = mid + 1;
        } else {
            self.high = mid;
        }
        loop {
            if self.high < HALF {
                // nothing to subtract
            } else if self.low >= HALF {
                self.low -= HALF;
                self.high -= HALF;
                self.value -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.low -= QUARTER;
                self.high -= QUARTER;
                self.value -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.value = (self.value << 1) | self.input.read_bit_or_zero() as u64;
        }
        model.update(bit);
        bit
    }
}
