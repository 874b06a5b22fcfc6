//! Vectors over a prime field `Z_q` and the centered signed encoding used to
//! carry quantized model updates.

use std::fmt;

use num::{BigInt, ToPrimitive};

use crate::error::{Error, Result};

/// Largest modulus accepted. Keeps every intermediate sum inside `u64`.
pub const MAX_MODULUS: u64 = 1 << 31;

/// A validated prime modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Modulus(u64);

impl Modulus {
    /// Validates primality by trial division.
    pub fn new(q: u64) -> Result<Self> {
        if q > MAX_MODULUS {
            return Err(Error::Config(format!("modulus {q} exceeds {MAX_MODULUS}")));
        }
        if !is_prime(q) {
            return Err(Error::Config("modulus not prime".into()));
        }
        Ok(Modulus(q))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    /// `(q - 1) / 2`, the largest magnitude with a centered representative.
    pub fn half(self) -> u64 {
        (self.0 - 1) / 2
    }

    pub fn reduce(self, v: i64) -> u64 {
        v.rem_euclid(self.0 as i64) as u64
    }

    /// Maps a residue to its representative in `[-(q-1)/2, (q-1)/2]`.
    pub fn centered(self, v: u64) -> i64 {
        debug_assert!(v < self.0);
        if v > self.half() {
            v as i64 - self.0 as i64
        } else {
            v as i64
        }
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Modulus and dimension shared by a family of vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    pub modulus: Modulus,
    pub dim: usize,
}

impl FieldSpec {
    pub fn new(modulus: Modulus, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        Ok(FieldSpec { modulus, dim })
    }

    pub fn zero(&self) -> FieldVector {
        FieldVector::zero(self.modulus, self.dim)
    }

    /// Number of distinct vectors, `q^d`, saturating.
    pub fn size(&self) -> u128 {
        (self.modulus.get() as u128).saturating_pow(self.dim as u32)
    }
}

/// A vector in `Z_q^d` with every component reduced.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldVector {
    modulus: Modulus,
    components: Vec<u64>,
}

impl FieldVector {
    pub fn new(modulus: Modulus, components: Vec<u64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("field vector must have dimension >= 1"));
        }
        if let Some(c) = components.iter().find(|&&c| c >= modulus.get()) {
            return Err(Error::domain(format!("component {c} not reduced mod {modulus}")));
        }
        Ok(FieldVector {
            modulus,
            components,
        })
    }

    /// Reduces arbitrary signed integers into the field.
    pub fn from_signed(modulus: Modulus, values: &[i64]) -> Self {
        FieldVector {
            modulus,
            components: values.iter().map(|&v| modulus.reduce(v)).collect(),
        }
    }

    pub fn zero(modulus: Modulus, dim: usize) -> Self {
        FieldVector {
            modulus,
            components: vec![0; dim],
        }
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn spec(&self) -> FieldSpec {
        FieldSpec {
            modulus: self.modulus,
            dim: self.dim(),
        }
    }

    pub fn components(&self) -> &[u64] {
        &self.components
    }

    fn check_compatible(&self, other: &FieldVector) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::domain(format!(
                "modulus mismatch: {} vs {}",
                self.modulus, other.modulus
            )));
        }
        if self.dim() != other.dim() {
            return Err(Error::domain(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &FieldVector) -> Result<FieldVector> {
        self.check_compatible(other)?;
        let q = self.modulus.get();
        Ok(FieldVector {
            modulus: self.modulus,
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| (a + b) % q)
                .collect(),
        })
    }

    pub fn sub(&self, other: &FieldVector) -> Result<FieldVector> {
        self.check_compatible(other)?;
        let q = self.modulus.get();
        Ok(FieldVector {
            modulus: self.modulus,
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| (a + q - b) % q)
                .collect(),
        })
    }

    pub fn neg(&self) -> FieldVector {
        let q = self.modulus.get();
        FieldVector {
            modulus: self.modulus,
            components: self.components.iter().map(|c| (q - c) % q).collect(),
        }
    }

    /// Centered signed representatives, componentwise.
    pub fn decode_centered(&self) -> Vec<i64> {
        self.components
            .iter()
            .map(|&c| self.modulus.centered(c))
            .collect()
    }

    /// Encodes signed integers whose magnitude is at most `(q-1)/2`.
    pub fn encode_centered(modulus: Modulus, values: &[BigInt]) -> Result<FieldVector> {
        let half = modulus.half() as i64;
        let mut components = Vec::with_capacity(values.len());
        for v in values {
            let small = v.to_i64().filter(|s| s.abs() <= half).ok_or_else(|| {
                Error::Overflow {
                    value: v.to_string(),
                    modulus: modulus.get(),
                }
            })?;
            components.push(modulus.reduce(small));
        }
        FieldVector::new(modulus, components)
    }

    /// Componentwise sum of a non-empty list.
    pub fn sum<'a>(vectors: impl IntoIterator<Item = &'a FieldVector>) -> Result<FieldVector> {
        let mut iter = vectors.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::domain("cannot sum an empty list of vectors"))?;
        iter.try_fold(first.clone(), |acc, v| acc.add(v))
    }
}

impl fmt::Display for FieldVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ") mod {}", self.modulus)
    }
}
