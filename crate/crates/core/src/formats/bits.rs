// SPDX-License-Identifier: Apache-2.0
//! MSB-first bit packing.

use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    buf: Vec<u8>,
    bits: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `n` bits of `value`, most significant first.
    pub fn write(&mut self, value: u64, n: u32) {
        debug_assert!(n <= 64);
        for i in (0..n).rev() {
            let bit = (value >> i) & 1;
            if self.bits.is_multiple_of(8) {
                self.buf.push(0);
            }
            if bit == 1 {
                let last = self.buf.len() - 1;
                self.buf[last] |= 0x80 >> (self.bits % 8);
            }
            self.bits += 1;
        }
    }

    /// Bits written so far, not counting alignment padding.
    pub fn bit_len(&self) -> usize {
        self.bits
    }

    /// Pads with zeros to the next byte boundary.
    pub fn align(&mut self) {
        self.bits = self.buf.len() * 8;
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn read(&mut self, n: u32) -> Result<u64> {
        if self.pos + n as usize > self.buf.len() * 8 {
            return Err(Error::Encoding("bit stream ended early".into()));
        }
        let mut v = 0u64;
        for _ in 0..n {
            let byte = self.buf[self.pos / 8];
            let bit = (byte >> (7 - self.pos % 8)) & 1;
            v = v << 1 | bit as u64;
            self.pos += 1;
        }
        Ok(v)
    }

    pub fn align(&mut self) {
        self.pos = self.pos.div_ceil(8) * 8;
    }

    /// Bytes consumed, counting a partially read byte.
    pub fn byte_pos(&self) -> usize {
        self.pos.div_ceil(8)
    }
}
