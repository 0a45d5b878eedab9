//! Little-endian wire primitives with hard bounds checks.
//!
//! Every read validates against the remaining input before touching or
//! allocating anything, so parsers stay total over arbitrary bytes: counts
//! are range-checked, strings are capped, and allocation never exceeds a
//! small multiple of the input size.

use super::FormatError;

/// Longest length-prefixed string any reference format may carry.
pub const MAX_STRING_LEN: usize = 64 * 1024;
/// Most frames / events / control points a single file may declare.
pub const MAX_ITEMS: usize = 10_000_000;

pub struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
    section: &'static str,
}

impl<'a> ByteReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        ByteReader {
            data,
            pos: 0,
            section: "header",
        }
    }

    /// Labels subsequent truncation errors with the section being parsed.
    pub fn enter(&mut self, section: &'static str) {
        self.section = section;
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.remaining() == 0
    }

    fn truncated(&self) -> FormatError {
        FormatError::TruncatedSection {
            section: self.section,
            offset: self.pos,
        }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        if n > self.remaining() {
            return Err(self.truncated());
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn skip(&mut self, n: usize) -> Result<(), FormatError> {
        self.take(n).map(|_| ())
    }

    pub fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16_le(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32_le(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn i32_le(&mut self) -> Result<i32, FormatError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn i64_le(&mut self) -> Result<i64, FormatError> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f32_le(&mut self) -> Result<f32, FormatError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    /// i32 count, rejected when negative or when `count * min_item_bytes`
    /// cannot fit in the remaining input.
    pub fn count(&mut self, min_item_bytes: usize) -> Result<usize, FormatError> {
        let raw = self.i32_le()?;
        if raw < 0 {
            return Err(FormatError::NegativeCount {
                section: self.section,
                count: raw,
            });
        }
        let count = raw as usize;
        if count > MAX_ITEMS
            || count
                .checked_mul(min_item_bytes)
                .map(|need| need > self.remaining())
                .unwrap_or(true)
        {
            return Err(self.truncated());
        }
        Ok(count)
    }

    /// u32-length-prefixed UTF-8 string, capped at [`MAX_STRING_LEN`].
    pub fn string(&mut self) -> Result<String, FormatError> {
        let len = self.u32_le()? as usize;
        if len > MAX_STRING_LEN {
            return Err(FormatError::StringTooLong { len });
        }
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| FormatError::BadUtf8 { offset: self.pos })
    }

    /// All reference formats are fully consumed; trailing bytes are an error.
    pub fn expect_end(&self) -> Result<(), FormatError> {
        if self.remaining() != 0 {
            Err(FormatError::TrailingBytes { offset: self.pos })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Default)]
pub struct ByteWriter {
    out: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.out
    }

    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.out.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.out.push(v);
    }

    pub fn u16_le(&mut self, v: u16) {
        self.out.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32_le(&mut self, v: u32) {
        self.out.extend_from_slice(&v.to_le_bytes());
    }

    pub fn i32_le(&mut self, v: i32) {
        self.out.extend_from_slice(&v.to_le_bytes());
    }

    pub fn i64_le(&mut self, v: i64) {
        self.out.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32_le(&mut self, v: f32) {
        self.out.extend_from_slice(&v.to_le_bytes());
    }

    pub fn string(&mut self, s: &str) {
        self.u32_le(s.len() as u32);
        self.bytes(s.as_bytes());
    }
}
