//! FPCX: lossless compression for 2D float32 matrices.
//!
//! Motion and event streams are column-smooth time series, so each column is
//! predicted independently: order-1 (previous value) or order-2 (linear
//! extrapolation) over a total-order integer mapping of the float bits.
//! Residuals are the XOR of predicted and actual mapped values.
//!
//! Block layout, all multi-byte header fields little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "FPCX"
//! 4       1     version (1)
//! 5       1     predictor id (0 = delta, 1 = linear)
//! 6       4     rows, u32
//! 10      2     cols, u16
//! 12      ..    payload (absent when rows*cols == 0)
//! ```
//!
//! The payload is one MSB-first bitstream, zero-padded to a byte at the very
//! end:
//!
//! ```text
//! 32 bits          length L of the entropy-coded section, in bits
//! L bits           arithmetic-coded significance codes, column-major
//! remaining bits   raw residual remainder bits, same traversal order
//! ```
//!
//! Each residual r is coded as a 6-bit significance code k (0 means r = 0,
//! otherwise the number of significant bits of r, up to 32) followed, in the
//! raw section, by the low k-1 bits of r; the leading 1 bit is implicit, so
//! k = 1 (r = 1) contributes no raw bits. Code bits travel MSB-first through
//! one adaptive binary model per (column, code bit position) pair; models
//! start at counts 1/1 and are halved when their total reaches 2^16.

mod arith;
mod bits;

use arith::{BinModel, Decoder, Encoder};
use bits::{BitReader, BitWriter};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"FPCX";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 12;
/// Most values a single block may carry (256 MiB of f32), bounding decoder
/// allocation on hostile headers.
pub const MAX_BLOCK_VALUES: usize = 1 << 26;

const CODE_BITS: u32 = 6;

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("matrix of {rows} x {cols} exceeds the block limits")]
    DimensionOverflow { rows: usize, cols: usize },
    #[error("data length {actual} does not match rows*cols = {expected}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("unsupported predictor id {0}")]
    BadPredictor(u8),
    #[error("payload ends before the declared contents")]
    TruncatedPayload,
    #[error("entropy decoder desynchronized from the stream")]
    ArithDecoderDesync,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    /// Order-1: predict the previous value.
    Delta = 0,
    /// Order-2: predict 2*prev - prev2, wrapping mod 2^32.
    Linear = 1,
}

impl Predictor {
    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Self, CodecError> {
        match id {
            0 => Ok(Predictor::Delta),
            1 => Ok(Predictor::Linear),
            other => Err(CodecError::BadPredictor(other)),
        }
    }
}

/// Maps float bits to unsigned integers preserving the total order of floats
/// (-inf < ... < -0 < +0 < ... < +inf); NaN payloads map like any other bits.
#[inline]
pub fn float_to_ordered(bits: u32) -> u32 {
    if bits & 0x8000_0000 != 0 {
        !bits
    } else {
        bits | 0x8000_0000
    }
}

/// Inverse of [`float_to_ordered`].
#[inline]
pub fn ordered_to_float(ordered: u32) -> u32 {
    if ordered & 0x8000_0000 != 0 {
        ordered & 0x7FFF_FFFF
    } else {
        !ordered
    }
}

#[inline]
fn predict(pred: Predictor, row: usize, prev1: u32, prev2: u32) -> u32 {
    match pred {
        Predictor::Delta => {
            if row == 0 {
                0
            } else {
                prev1
            }
        }
        Predictor::Linear => {
            if row < 2 {
                0
            } else {
                prev1.wrapping_add(prev1).wrapping_sub(prev2)
            }
        }
    }
}

/// Compresses a row-major `rows` x `cols` matrix into a self-describing block.
pub fn encode(
    data: &[f32],
    rows: usize,
    cols: usize,
    pred: Predictor,
) -> Result<Vec<u8>, CodecError> {
    if rows > u32::MAX as usize || cols > u16::MAX as usize {
        return Err(CodecError::DimensionOverflow { rows, cols });
    }
    let nvals = rows
        .checked_mul(cols)
        .filter(|&n| n <= MAX_BLOCK_VALUES)
        .ok_or(CodecError::DimensionOverflow { rows, cols })?;
    if data.len() != nvals {
        return Err(CodecError::ShapeMismatch {
            expected: nvals,
            actual: data.len(),
        });
    }

    let mut out = Vec::with_capacity(HEADER_LEN + nvals);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(pred.id());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u16).to_le_bytes());
    if nvals == 0 {
        return Ok(out);
    }

    let mut models = vec![[BinModel::new(); CODE_BITS as usize]; cols];
    let mut enc = Encoder::new();
    let mut raw = BitWriter::new();
    for (c, ctx) in models.iter_mut().enumerate() {
        let mut prev1 = 0u32;
        let mut prev2 = 0u32;
        for i in 0..rows {
            let ordered = float_to_ordered(data[i * cols + c].to_bits());
            let r = ordered ^ predict(pred, i, prev1, prev2);
            let k = if r == 0 { 0 } else { 32 - r.leading_zeros() };
            for j in 0..CODE_BITS {
                let bit = (k >> (CODE_BITS - 1 - j)) & 1 == 1;
                enc.encode_bit(&mut ctx[j as usize], bit);
            }
            if k >= 2 {
                raw.push_bits((r & ((1u32 << (k - 1)) - 1)) as u64, k - 1);
            }
            prev2 = prev1;
            prev1 = ordered;
        }
    }

    let coded = enc.finish();
    let mut payload = BitWriter::new();
    payload.push_bits(coded.len_bits() as u64, 32);
    payload.append(&coded);
    payload.append(&raw);
    out.extend_from_slice(&payload.into_bytes());
    Ok(out)
}

/// A decoded block plus the exact number of input bytes it occupied.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedBlock {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
    /// Byte length of the block within the input; blocks are self-delimiting,
    /// so concatenated blocks decode independently.
    pub consumed: usize,
}

/// Decompresses one block from the front of `input`.
pub fn decode(input: &[u8]) -> Result<DecodedBlock, CodecError> {
    if input.len() < 4 {
        return Err(CodecError::BadMagic);
    }
    if input[..4] != MAGIC {
        return Err(CodecError::BadMagic);
    }
    if input.len() < HEADER_LEN {
        return Err(CodecError::TruncatedPayload);
    }
    if input[4] != VERSION {
        return Err(CodecError::UnsupportedVersion(input[4]));
    }
    let pred = Predictor::from_id(input[5])?;
    let rows = u32::from_le_bytes(input[6..10].try_into().unwrap()) as usize;
    let cols = u16::from_le_bytes(input[10..12].try_into().unwrap()) as usize;
    let nvals = rows
        .checked_mul(cols)
        .filter(|&n| n <= MAX_BLOCK_VALUES)
        .ok_or(CodecError::DimensionOverflow { rows, cols })?;
    if nvals == 0 {
        return Ok(DecodedBlock {
            rows,
            cols,
            data: Vec::new(),
            consumed: HEADER_LEN,
        });
    }

    let payload = &input[HEADER_LEN..];
    let payload_bits = payload.len() * 8;
    let mut prefix = BitReader::new(payload, 0, payload_bits);
    let coded_len = prefix.read_bits(32).ok_or(CodecError::TruncatedPayload)? as usize;
    let coded_end = 32usize
        .checked_add(coded_len)
        .ok_or(CodecError::TruncatedPayload)?;
    if coded_end > payload_bits {
        return Err(CodecError::TruncatedPayload);
    }

    let mut dec = Decoder::new(BitReader::new(payload, 32, coded_end));
    let mut raw = BitReader::new(payload, coded_end, payload_bits);
    let mut models = vec![[BinModel::new(); CODE_BITS as usize]; cols];
    let mut data = vec![0f32; nvals];
    for (c, ctx) in models.iter_mut().enumerate() {
        let mut prev1 = 0u32;
        let mut prev2 = 0u32;
        for i in 0..rows {
            let mut k = 0u32;
            for j in 0..CODE_BITS {
                k = (k << 1) | dec.decode_bit(&mut ctx[j as usize]) as u32;
            }
            if k > 32 {
                return Err(CodecError::ArithDecoderDesync);
            }
            let r = match k {
                0 => 0,
                1 => 1,
                _ => {
                    let rest = raw.read_bits(k - 1).ok_or(CodecError::TruncatedPayload)? as u32;
                    (1u32 << (k - 1)) | rest
                }
            };
            let ordered = r ^ predict(pred, i, prev1, prev2);
            data[i * cols + c] = f32::from_bits(ordered_to_float(ordered));
            prev2 = prev1;
            prev1 = ordered;
        }
    }

    let used_bits = 32 + coded_len + (raw.bits_read() - coded_end);
    let consumed = HEADER_LEN + (used_bits + 7) / 8;
    Ok(DecodedBlock {
        rows,
        cols,
        data,
        consumed,
    })
}

/// Runs both predictors and returns the one with the smaller block;
/// ties break to [`Predictor::Delta`].
pub fn choose_predictor(data: &[f32], rows: usize, cols: usize) -> Result<Predictor, CodecError> {
    Ok(predictor_of(&encode_best(data, rows, cols)?))
}

/// Encodes with both predictors and keeps the smaller block.
pub fn encode_best(data: &[f32], rows: usize, cols: usize) -> Result<Vec<u8>, CodecError> {
    let delta = encode(data, rows, cols, Predictor::Delta)?;
    let linear = encode(data, rows, cols, Predictor::Linear)?;
    Ok(if linear.len() < delta.len() {
        linear
    } else {
        delta
    })
}

fn predictor_of(block: &[u8]) -> Predictor {
    Predictor::from_id(block[5]).expect("block produced by encode")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(data: &[f32], rows: usize, cols: usize) {
        for pred in [Predictor::Delta, Predictor::Linear] {
            let block = encode(data, rows, cols, pred).unwrap();
            let back = decode(&block).unwrap();
            assert_eq!(back.rows, rows);
            assert_eq!(back.cols, cols);
            assert_eq!(back.consumed, block.len());
            assert_eq!(back.data.len(), data.len());
            for (i, (a, b)) in data.iter().zip(&back.data).enumerate() {
                assert_eq!(a.to_bits(), b.to_bits(), "value {i} under {pred:?}");
            }
        }
    }

    #[test]
    fn ordered_map_definition() {
        assert_eq!(float_to_ordered(0x0000_0000), 0x8000_0000); // +0.0
        assert_eq!(float_to_ordered(0x8000_0000), 0x7FFF_FFFF); // -0.0
    }

    #[test]
    fn ordered_map_is_monotone() {
        let sorted = [
            f32::NEG_INFINITY,
            -1.0e10,
            -1.0,
            -1.0e-40, // denormal
            -0.0,
            0.0,
            1.0e-40,
            1.0,
            3.5,
            f32::INFINITY,
        ];
        for w in sorted.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a == b {
                continue; // -0.0 / +0.0 compare equal but still map distinctly
            }
            assert!(
                float_to_ordered(a.to_bits()) < float_to_ordered(b.to_bits()),
                "{a} !< {b} in ordered space"
            );
        }
    }

    #[test]
    fn roundtrip_special_values() {
        let specials = [
            0.0,
            -0.0,
            1.0,
            -1.0,
            f32::NAN,
            -f32::NAN,
            f32::from_bits(0x7FC0_1234), // NaN payload
            f32::INFINITY,
            f32::NEG_INFINITY,
            f32::MIN_POSITIVE,
            1.0e-42, // denormal
            f32::MAX,
        ];
        roundtrip(&specials, specials.len(), 1);
        roundtrip(&specials, 1, specials.len());
        roundtrip(&specials, 4, 3);
    }

    #[test]
    fn empty_matrix_has_empty_payload() {
        let block = encode(&[], 0, 22, Predictor::Delta).unwrap();
        assert_eq!(block.len(), HEADER_LEN);
        let back = decode(&block).unwrap();
        assert_eq!(back.rows, 0);
        assert_eq!(back.cols, 22);
        assert!(back.data.is_empty());
        assert_eq!(back.consumed, HEADER_LEN);
    }

    #[test]
    fn constant_column_collapses() {
        let data = vec![1.0f32; 1000];
        let block = encode(&data, 1000, 1, Predictor::Delta).unwrap();
        assert!(
            block.len() - HEADER_LEN < 200,
            "payload = {} bytes",
            block.len() - HEADER_LEN
        );
        roundtrip(&data, 1000, 1);
    }

    #[test]
    fn constant_matrix_ties_to_delta() {
        let data = vec![2.5f32; 300];
        assert_eq!(choose_predictor(&data, 100, 3).unwrap(), Predictor::Delta);
    }

    #[test]
    fn linear_ramp_prefers_linear() {
        let data: Vec<f32> = (0..1000).map(|i| i as f32).collect();
        assert_eq!(choose_predictor(&data, 1000, 1).unwrap(), Predictor::Linear);
    }

    #[test]
    fn shape_and_dimension_errors() {
        assert_eq!(
            encode(&[0.0; 5], 2, 2, Predictor::Delta),
            Err(CodecError::ShapeMismatch {
                expected: 4,
                actual: 5
            })
        );
        assert!(matches!(
            encode(&[], 1, 70_000, Predictor::Delta),
            Err(CodecError::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn decode_header_errors() {
        assert_eq!(decode(b"FPC"), Err(CodecError::BadMagic));
        assert_eq!(decode(b"JUNKJUNKJUNK"), Err(CodecError::BadMagic));
        let mut block = encode(&[1.0f32], 1, 1, Predictor::Delta).unwrap();
        block[4] = 9;
        assert_eq!(decode(&block), Err(CodecError::UnsupportedVersion(9)));
        block[4] = VERSION;
        block[5] = 7;
        assert_eq!(decode(&block), Err(CodecError::BadPredictor(7)));
        // hostile dimensions must not allocate
        let mut huge = encode(&[], 0, 0, Predictor::Delta).unwrap();
        huge[6..10].copy_from_slice(&u32::MAX.to_le_bytes());
        huge[10..12].copy_from_slice(&u16::MAX.to_le_bytes());
        assert!(matches!(
            decode(&huge),
            Err(CodecError::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn truncation_is_detected() {
        let data: Vec<f32> = (0..64).map(|i| (i * 37) as f32 * 0.125).collect();
        let block = encode(&data, 32, 2, Predictor::Delta).unwrap();
        for cut in HEADER_LEN..block.len() - 1 {
            match decode(&block[..cut]) {
                Err(_) => {}
                Ok(back) => {
                    // Truncation inside the zero-padded tail can still decode;
                    // anything else must differ or error.
                    assert!(cut >= block.len() - 1 || back.data.len() == data.len());
                }
            }
        }
    }
}
