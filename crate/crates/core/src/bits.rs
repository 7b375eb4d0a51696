//! Bit-vector helpers for patterns, inputs and partitions.

use crate::{Error, Result};

/// Parses a string of `'0'`/`'1'` characters (whitespace ignored).
pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Input(format!("'{other}' is not a bit"))),
        })
        .collect()
}

pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn invert(bits: &[bool]) -> Vec<bool> {
    bits.iter().map(|b| !b).collect()
}

pub fn hamming(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// The `n` low bits of `code`, least significant first.
pub fn from_code(code: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| code >> i & 1 == 1).collect()
}

pub fn ones(bits: &[bool]) -> usize {
    bits.iter().filter(|&&b| b).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        let b = parse_bits("1 10").unwrap();
        assert_eq!(b, vec![true, true, false]);
        assert_eq!(bits_to_string(&b), "110");
        assert!(parse_bits("12").is_err());
        assert_eq!(hamming(&b, &invert(&b)), 3);
        assert_eq!(from_code(0b101, 4), vec![true, false, true, false]);
        assert_eq!(ones(&b), 2);
    }
}
