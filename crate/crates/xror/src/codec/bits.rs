//! MSB-first bit packing shared by the codec's sections.

/// Accumulates bits most-significant-first into a byte buffer.
#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    acc_bits: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len_bits(&self) -> usize {
        self.bytes.len() * 8 + self.acc_bits as usize
    }

    pub fn push_bit(&mut self, bit: bool) {
        self.push_bits(bit as u64, 1);
    }

    /// Pushes the low `n` bits of `value`, MSB first. `n` must be <= 56.
    pub fn push_bits(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 56);
        let value = if n == 64 { value } else { value & ((1u64 << n) - 1) };
        self.acc = (self.acc << n) | value;
        self.acc_bits += n;
        while self.acc_bits >= 8 {
            self.acc_bits -= 8;
            self.bytes.push((self.acc >> self.acc_bits) as u8);
        }
    }

    /// Appends another writer's bits after this one's, unaligned.
    pub fn append(&mut self, other: &BitWriter) {
        for &b in &other.bytes {
            self.push_bits(b as u64, 8);
        }
        if other.acc_bits > 0 {
            let tail = other.acc & ((1u64 << other.acc_bits) - 1);
            self.push_bits(tail, other.acc_bits);
        }
    }

    /// Zero-pads the final byte and returns the buffer.
    pub fn into_bytes(mut self) -> Vec<u8> {
        if self.acc_bits > 0 {
            let pad = 8 - self.acc_bits;
            self.bytes.push(((self.acc << pad) & 0xFF) as u8);
            self.acc_bits = 0;
        }
        self.bytes
    }
}

/// Reads bits MSB-first from a window `[start_bit, end_bit)` of a buffer.
#[derive(Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    end: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], start_bit: usize, end_bit: usize) -> Self {
        debug_assert!(end_bit <= bytes.len() * 8);
        debug_assert!(start_bit <= end_bit);
        BitReader {
            bytes,
            pos: start_bit,
            end: end_bit,
        }
    }

    pub fn bits_read(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.end - self.pos
    }

    pub fn read_bit(&mut self) -> Option<bool> {
        if self.pos >= self.end {
            return None;
        }
        let byte = self.bytes[self.pos / 8];
        let bit = (byte >> (7 - (self.pos % 8))) & 1;
        self.pos += 1;
        Some(bit == 1)
    }

    /// Reads a bit, treating exhaustion as zero. The arithmetic decoder's
    /// register legitimately runs past the encoder's final output bits.
    pub fn read_bit_or_zero(&mut self) -> bool {
        self.read_bit().unwrap_or(false)
    }

    /// Reads `n` bits (n <= 57) as an MSB-first value; `None` if the window
    /// holds fewer than `n`.
    pub fn read_bits(&mut self, n: u32) -> Option<u64> {
        debug_assert!(n <= 57);
        if self.remaining() < n as usize {
            return None;
        }
        let mut v = 0u64;
        for _ in 0..n {
            v = (v << 1) | self.read_bit().unwrap() as u64;
        }
        Some(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_unaligned() {
        let mut w = BitWriter::new();
        w.push_bits(0b101, 3);
        w.push_bits(0xDEAD, 16);
        w.push_bits(1, 1);
        let n = w.len_bits();
        assert_eq!(n, 20);
        let bytes = w.into_bytes();
        assert_eq!(bytes.len(), 3);
        let mut r = BitReader::new(&bytes, 0, n);
        assert_eq!(r.read_bits(3).unwrap(), 0b101);
        assert_eq!(r.read_bits(16).unwrap(), 0xDEAD);
        assert_eq!(r.read_bits(1).unwrap(), 1);
        assert_eq!(r.read_bits(1), None);
    }

    #[test]
    fn append_preserves_bit_order() {
        let mut a = BitWriter::new();
        a.push_bits(0b11, 2);
        let mut b = BitWriter::new();
        b.push_bits(0b0101_0101_0101, 12);
        a.append(&b);
        assert_eq!(a.len_bits(), 14);
        let bytes = a.into_bytes();
        let mut r = BitReader::new(&bytes, 0, 14);
        assert_eq!(r.read_bits(14).unwrap(), 0b11_0101_0101_0101);
    }

    #[test]
    fn window_limits_reads() {
        let bytes = [0xFF, 0xFF];
        let mut r = BitReader::new(&bytes, 4, 10);
        assert_eq!(r.remaining(), 6);
        assert_eq!(r.read_bits(6).unwrap(), 0b111111);
        assert_eq!(r.read_bit(), None);
        assert!(!r.read_bit_or_zero());
    }
}
