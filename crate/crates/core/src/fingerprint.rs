//! SHA-256 digests of fitted artifacts, used to check which inputs a stage
//! actually depends on.

use alloc::string::String;
use core::fmt::Write;

use sha2::{Digest, Sha256};

use crate::matrix::Matrix;

#[derive(Clone, Default)]
pub struct Fingerprinter {
    hasher: Sha256,
}

impl Fingerprinter {
    pub fn new(domain: &str) -> Self {
        let mut f = Fingerprinter::default();
        f.str(domain);
        f
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.hasher.update(v.to_le_bytes());
        self
    }

    /// Bit pattern, so `-0.0` and `0.0` differ.
    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.u64(v.to_bits())
    }

    pub fn f64s(&mut self, vs: &[f64]) -> &mut Self {
        self.u64(vs.len() as u64);
        for &v in vs {
            self.f64(v);
        }
        self
    }

    pub fn u32s(&mut self, vs: &[u32]) -> &mut Self {
        self.u64(vs.len() as u64);
        for &v in vs {
            self.hasher.update(v.to_le_bytes());
        }
        self
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.u64(b.len() as u64);
        self.hasher.update(b);
        self
    }

    pub fn matrix(&mut self, m: &Matrix) -> &mut Self {
        self.u64(m.rows() as u64)
            .u64(m.cols() as u64)
            .f64s(m.as_slice())
    }

    /// Lowercase hex digest.
    pub fn finish(&self) -> String {
        let digest = self.hasher.clone().finalize();
        let mut out = String::with_capacity(64);
        for b in digest.iter() {
            let _ = write!(out, "{b:02x}");
        }
        out
    }
}

/// Digest of a byte string, tagged with a domain.
pub fn digest(domain: &str, bytes: &[u8]) -> String {
    Fingerprinter::new(domain).bytes(bytes).finish()
}
