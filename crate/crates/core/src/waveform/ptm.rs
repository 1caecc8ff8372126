//! Prouhet-Thue-Morse packet ordering.

use crate::error::{Error, Result};

/// `bits[p]` is the parity of the number of ones in the binary expansion of `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PtmSequence {
    pub bits: Vec<u8>,
}

impl PtmSequence {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

#[inline]
pub fn ptm_bit(p: usize) -> u8 {
    (p.count_ones() & 1) as u8
}

pub fn ptm_sequence(length: usize) -> Result<PtmSequence> {
    if length == 0 {
        return Err(Error::Parameter("PTM length must be at least 1".into()));
    }
    Ok(PtmSequence {
        bits: (0..length).map(ptm_bit).collect(),
    })
}
