//! Fixed-width bit packing, most significant bit first.

use crate::error::{Error, Result};

/// Packs each value into `bits` bits, back to back; the final byte is
/// zero-padded.
pub fn pack(values: &[u16], bits: u8) -> Result<Vec<u8>> {
    if !(1..=16).contains(&bits) {
        return Err(Error::config(format!("field width must be in 1..=16, got {bits}")));
    }
    let limit = 1u32 << bits;
    let mut out = vec![0u8; (values.len() * bits as usize).div_ceil(8)];
    let mut pos = 0usize;
    for &v in values {
        if v as u32 >= limit {
            return Err(Error::Range { index: v as usize, limit: limit as usize });
        }
        for b in (0..bits).rev() {
            if (v >> b) & 1 == 1 {
                out[pos / 8] |= 0x80 >> (pos % 8);
            }
            pos += 1;
        }
    }
    Ok(out)
}

/// Reads `count` fields of `bits` bits from `bytes`.
pub fn unpack(bytes: &[u8], bits: u8, count: usize) -> Result<Vec<u16>> {
    if !(1..=16).contains(&bits) {
        return Err(Error::config(format!("field width must be in 1..=16, got {bits}")));
    }
    let needed = (count * bits as usize).div_ceil(8);
    if bytes.len() < needed {
        return Err(Error::format(format!("index stream has {} bytes, {needed} needed", bytes.len())));
    }
    let mut out = Vec::with_capacity(count);
    let mut pos = 0usize;
    for _ in 0..count {
        let mut v = 0u16;
        for _ in 0..bits {
            let bit = (bytes[pos / 8] >> (7 - pos % 8)) & 1;
            v = (v << 1) | bit as u16;
            pos += 1;
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_first_layout() {
        // 3-bit fields 5 (101) and 3 (011) -> 1010_1100
        assert_eq!(pack(&[5, 3], 3).unwrap(), vec![0b1010_1100]);
        assert_eq!(pack(&[1], 1).unwrap(), vec![0x80]);
        assert_eq!(unpack(&[0b1010_1100], 3, 2).unwrap(), vec![5, 3]);
    }

    #[test]
    fn out_of_range_value() {
        assert!(matches!(pack(&[8], 3), Err(Error::Range { .. })));
        assert!(unpack(&[0], 8, 2).is_err());
    }
}
