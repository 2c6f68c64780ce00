//! MSB-first bit buffers and order-0 exponential-Golomb codes.

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of bits written.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn put_bit(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Writes the low `n` bits of `value`, most significant first.
    pub fn put_bits(&mut self, value: u64, n: u32) {
        for i in (0..n).rev() {
            self.put_bit((value >> i) & 1 == 1);
        }
    }

    pub fn put_ue(&mut self, value: u64) {
        let v = value + 1;
        let bits = 64 - v.leading_zeros();
        self.put_bits(0, bits - 1);
        self.put_bits(v, bits);
    }

    pub fn put_se(&mut self, value: i64) {
        self.put_ue(se_to_ue(value));
    }

    pub fn append(&mut self, other: &BitWriter) {
        if self.len % 8 == 0 {
            self.bytes.extend_from_slice(&other.bytes);
            self.len += other.len;
            return;
        }
        let mut reader = BitReader::new(&other.bytes);
        for _ in 0..other.len {
            self.put_bit(reader.bit().expect("source holds len bits"));
        }
    }

    /// Pads with zero bits up to the next byte boundary.
    pub fn align(&mut self) {
        self.len = self.bytes.len() * 8;
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        BitReader { data, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn bit(&mut self) -> Result<bool> {
        let byte = self
            .data
            .get(self.pos / 8)
            .ok_or_else(|| Error::Malformed("unexpected end of payload".into()))?;
        let bit = (byte >> (7 - self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    pub fn bits(&mut self, n: u32) -> Result<u64> {
        let mut v = 0;
        for _ in 0..n {
            v = (v << 1) | self.bit()? as u64;
        }
        Ok(v)
    }

    pub fn ue(&mut self) -> Result<u64> {
        let mut zeros = 0u32;
        while !self.bit()? {
            zeros += 1;
            if zeros > 32 {
                return Err(Error::Malformed("exp-Golomb prefix too long".into()));
            }
        }
        Ok(((1u64 << zeros) | self.bits(zeros)?) - 1)
    }

    pub fn se(&mut self) -> Result<i64> {
        Ok(ue_to_se(self.ue()?))
    }

    pub fn align(&mut self) {
        self.pos = self.pos.div_ceil(8) * 8;
    }
}

/// `0, 1, −1, 2, −2, …` ↦ `0, 1, 2, 3, 4, …`
pub fn se_to_ue(v: i64) -> u64 {
    if v > 0 {
        (2 * v - 1) as u64
    } else {
        (-2 * v) as u64
    }
}

pub fn ue_to_se(u: u64) -> i64 {
    if u % 2 == 1 {
        u.div_ceil(2) as i64
    } else {
        -((u / 2) as i64)
    }
}

pub fn ue_len(value: u64) -> usize {
    let bits = 64 - (value + 1).leading_zeros() as usize;
    2 * bits - 1
}

pub fn se_len(value: i64) -> usize {
    ue_len(se_to_ue(value))
}
