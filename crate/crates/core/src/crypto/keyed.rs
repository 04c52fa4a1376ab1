//! The keyed function family and the response derivations.
//!
//! Every function is `HMAC-SHA-256(K, tag || inputs)` truncated to the output
//! width. The ASCII tags ("f1", "f2", "f5", "f1s", "f5s", "res*") keep the
//! outputs of different functions independent even on identical inputs.

use hmac::{Hmac, Mac};
use sha2::{Digest, Sha256};

use super::{fixed, CryptoError};

pub const KEY_LEN: usize = 16;
pub const SQN_LEN: usize = 6;
pub const RAND_LEN: usize = 16;
pub const AMF_LEN: usize = 2;
pub const MAC_LEN: usize = 8;
pub const AK_LEN: usize = 6;
pub const RES_LEN: usize = 8;
pub const RES_STAR_LEN: usize = 16;
pub const HXRES_LEN: usize = 16;

/// Long-term subscriber key `K`.
#[derive(Clone, PartialEq, Eq)]
pub struct LongTermKey([u8; KEY_LEN]);

impl LongTermKey {
    pub fn new(k: [u8; KEY_LEN]) -> Self {
        Self(k)
    }

    pub fn from_slice(k: &[u8]) -> Result<Self, CryptoError> {
        fixed("long-term key", k).map(Self)
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }
}

impl std::fmt::Debug for LongTermKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("LongTermKey(..)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mac64(pub [u8; MAC_LEN]);

impl Mac64 {
    pub fn from_slice(b: &[u8]) -> Result<Self, CryptoError> {
        fixed("MAC", b).map(Self)
    }
}

/// Anonymity key. 48 bits so that it masks a 48-bit SQN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ak48(pub [u8; AK_LEN]);

impl Ak48 {
    pub fn from_slice(b: &[u8]) -> Result<Self, CryptoError> {
        fixed("anonymity key", b).map(Self)
    }

    pub fn mask(&self, sqn: &[u8; SQN_LEN]) -> [u8; SQN_LEN] {
        super::xor(sqn, &self.0)
    }
}

/// UE response and its serving-network-bound extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Res {
    pub res: [u8; RES_LEN],
    pub res_star: [u8; RES_STAR_LEN],
}

fn prf<const N: usize>(k: &LongTermKey, tag: &[u8], parts: &[&[u8]]) -> [u8; N] {
    let mut mac = Hmac::<Sha256>::new_from_slice(k.as_bytes()).expect("HMAC accepts any key length");
    mac.update(tag);
    for p in parts {
        mac.update(p);
    }
    let full = mac.finalize().into_bytes();
    let mut out = [0u8; N];
    out.copy_from_slice(&full[..N]);
    out
}

/// Network authentication code over `SQN || RAND || AMF`.
pub fn f1(k: &LongTermKey, sqn: &[u8; SQN_LEN], rand: &[u8; RAND_LEN], amf: &[u8; AMF_LEN]) -> Mac64 {
    Mac64(prf(k, b"f1", &[sqn, rand, amf]))
}

pub fn f2(k: &LongTermKey, rand: &[u8; RAND_LEN]) -> [u8; RES_LEN] {
    prf(k, b"f2", &[rand])
}

pub fn f5(k: &LongTermKey, rand: &[u8; RAND_LEN]) -> Ak48 {
    Ak48(prf(k, b"f5", &[rand]))
}

/// Resynchronization code (MAC-S) over `SQN_UE || RAND`.
pub fn f1_star(k: &LongTermKey, sqn: &[u8; SQN_LEN], rand: &[u8; RAND_LEN]) -> Mac64 {
    Mac64(prf(k, b"f1s", &[sqn, rand]))
}

pub fn f5_star(k: &LongTermKey, rand: &[u8; RAND_LEN]) -> Ak48 {
    Ak48(prf(k, b"f5s", &[rand]))
}

/// Extended response bound to the serving network name.
pub fn derive_res_star(
    k: &LongTermKey,
    res: &[u8; RES_LEN],
    rand: &[u8; RAND_LEN],
    sn_name: &str,
) -> Result<[u8; RES_STAR_LEN], CryptoError> {
    if sn_name.is_empty() {
        return Err(CryptoError::Argument("serving network name must not be empty"));
    }
    Ok(prf(k, b"res*", &[res, rand, sn_name.as_bytes()]))
}

/// `HXRES* = SHA-256(RAND || RES*)[..16]`.
pub fn hash_res_star(rand: &[u8; RAND_LEN], res_star: &[u8; RES_STAR_LEN]) -> [u8; HXRES_LEN] {
    let digest = Sha256::new().chain_update(rand).chain_update(res_star).finalize();
    let mut out = [0u8; HXRES_LEN];
    out.copy_from_slice(&digest[..HXRES_LEN]);
    out
}
