//! Cryptographic primitives used by the AKA state machines.
//!
//! Identity concealment follows ECIES Profile A (X25519, X9.63 KDF over
//! SHA-256, AES-128-CTR, HMAC-SHA-256). The authentication functions
//! f1/f2/f5/f1*/f5* are instantiated as a domain-tagged HMAC-SHA-256 family
//! keyed by the subscriber key and truncated to the usual 3GPP widths.

mod ecies;
mod keyed;

pub use ecies::{
    derive_shared_secret, ecies_conceal, ecies_conceal_with, ecies_reveal, kdf_expand, EciesEnvelope, KeyPair,
    SharedSecret, AES_KEY_LEN, ENVELOPE_KEY_MATERIAL_LEN, MAC_KEY_LEN, MAX_KDF_OUTPUT, MAX_PLAINTEXT_LEN, POINT_LEN,
    TAG_LEN,
};
pub use keyed::{
    derive_res_star, f1, f1_star, f2, f5, f5_star, hash_res_star, Ak48, LongTermKey, Mac64, Res, AK_LEN, AMF_LEN,
    HXRES_LEN, KEY_LEN, MAC_LEN, RAND_LEN, RES_LEN, RES_STAR_LEN, SQN_LEN,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("degenerate Diffie-Hellman output (low-order point)")]
    DegenerateKey,
    #[error("integrity check failed")]
    Integrity,
    #[error("invalid argument: {0}")]
    Argument(&'static str),
    #[error("wrong length for {what}: expected {expected}, got {actual}")]
    Length {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
}

/// XOR two equal-width byte arrays.
pub fn xor<const N: usize>(a: &[u8; N], b: &[u8; N]) -> [u8; N] {
    let mut out = [0u8; N];
    for (o, (x, y)) in out.iter_mut().zip(a.iter().zip(b.iter())) {
        *o = x ^ y;
    }
    out
}

pub(crate) fn fixed<const N: usize>(what: &'static str, bytes: &[u8]) -> Result<[u8; N], CryptoError> {
    bytes.try_into().map_err(|_| CryptoError::Length {
        what,
        expected: N,
        actual: bytes.len(),
    })
}
