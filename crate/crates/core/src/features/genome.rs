use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Number of bits in a color genome.
pub const GENOME_BITS: usize = 24;

const MASK: u32 = (1 << GENOME_BITS) - 1;

/// A 24-bit RGB candidate: bits 0-7 red, 8-15 green, 16-23 blue, each
/// channel most-significant bit first.
///
/// Bit `i` of the genome is stored at position `23 - i` of the inner word,
/// so the word reads as `0xRRGGBB`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ColorGenome(u32);

impl ColorGenome {
    pub const BLACK: Self = Self(0);
    pub const WHITE: Self = Self(MASK);

    pub fn from_rgb(r: u8, g: u8, b: u8) -> Self {
        Self(u32::from(r) << 16 | u32::from(g) << 8 | u32::from(b))
    }

    /// Keeps the low 24 bits of `word`.
    pub fn from_word(word: u32) -> Self {
        Self(word & MASK)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_word(rng.random::<u32>())
    }

    pub fn word(self) -> u32 {
        self.0
    }

    pub fn r(self) -> u8 {
        (self.0 >> 16) as u8
    }

    pub fn g(self) -> u8 {
        (self.0 >> 8) as u8
    }

    pub fn b(self) -> u8 {
        self.0 as u8
    }

    pub fn rgb(self) -> (u8, u8, u8) {
        (self.r(), self.g(), self.b())
    }

    pub fn bit(self, i: usize) -> bool {
        assert!(i < GENOME_BITS, "bit index {i} out of range");
        self.0 >> (GENOME_BITS - 1 - i) & 1 == 1
    }

    pub fn with_bit_flipped(self, i: usize) -> Self {
        assert!(i < GENOME_BITS, "bit index {i} out of range");
        Self(self.0 ^ 1 << (GENOME_BITS - 1 - i))
    }

    pub fn count_ones(self) -> u32 {
        self.0.count_ones()
    }

    /// Six lowercase hex digits, `rrggbb`.
    pub fn to_hex(self) -> String {
        format!("{:06x}", self.0)
    }

    pub fn m1(self) -> f64 {
        super::m1(self.r(), self.g(), self.b())
    }
}

impl fmt::Debug for ColorGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ColorGenome(#{})", self.to_hex())
    }
}

impl fmt::Display for ColorGenome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid genome hex {0:?}")]
pub struct ParseGenomeError(String);

impl FromStr for ColorGenome {
    type Err = ParseGenomeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.strip_prefix('#').unwrap_or(s);
        if digits.len() != 6 {
            return Err(ParseGenomeError(s.to_string()));
        }
        u32::from_str_radix(digits, 16)
            .map(Self)
            .map_err(|_| ParseGenomeError(s.to_string()))
    }
}

impl TryFrom<String> for ColorGenome {
    type Error = ParseGenomeError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ColorGenome> for String {
    fn from(g: ColorGenome) -> Self {
        g.to_hex()
    }
}
