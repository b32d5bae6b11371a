//! Content hashing and bit-exact float encoding.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes.as_ref()))
}

/// Incremental SHA-256 over length-prefixed fields, so that field boundaries
/// cannot be confused.
#[derive(Debug, Clone, Default)]
pub struct ContentHasher {
    inner: Sha256,
}

impl ContentHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.inner.update((b.len() as u64).to_le_bytes());
        self.inner.update(b);
        self
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64s(&mut self, v: &[f64]) -> &mut Self {
        self.u64(v.len() as u64);
        for x in v {
            self.inner.update(x.to_bits().to_le_bytes());
        }
        self
    }

    pub fn finish(&self) -> String {
        hex::encode(self.inner.clone().finalize())
    }
}

/// IEEE-754 bit patterns as one hex string, 16 digits per value.
pub fn f64s_to_hex(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 16);
    for v in values {
        out.push_str(&format!("{:016x}", v.to_bits()));
    }
    out
}

/// Inverse of [`f64s_to_hex`].
pub fn hex_to_f64s(s: &str) -> Result<Vec<f64>> {
    if !s.len().is_multiple_of(16) || !s.is_ascii() {
        return Err(Error::invalid(
            "float hex string length is not a multiple of 16",
        ));
    }
    (0..s.len())
        .step_by(16)
        .map(|i| {
            u64::from_str_radix(&s[i..i + 16], 16)
                .map(f64::from_bits)
                .map_err(|e| Error::invalid(format!("bad float hex at offset {i}: {e}")))
        })
        .collect()
}
