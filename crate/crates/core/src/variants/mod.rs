//! Privacy mitigations layered over the baseline protocol.
//!
//! | mode            | change                                                        |
//! |-----------------|---------------------------------------------------------------|
//! | `enc-failure`   | failure messages travel inside a padded envelope to the HN    |
//! | `enc-response`  | failures and responses both travel inside padded envelopes    |
//! | `sqn-in-suci`   | SUCI carries `MSIN || SQN_UE`; the HN re-bases on it          |
//! | `nonce-in-suci` | SUCI carries `MSIN || RAND_UE`; the challenge MAC binds it    |
//! | `nonce-in-auts` | AUTS is masked with a key derived from a fresh UE nonce       |

mod nonce;
mod uniform;

use std::fmt;
use std::str::FromStr;

use rand::{CryptoRng, Rng, RngCore};
use serde::{Deserialize, Serialize};
use subtle::ConstantTimeEq;

pub use nonce::{NonceCache, NonceStatus, DEFAULT_NONCE_CACHE_CAPACITY};
pub use uniform::{decrypt_uniform, encrypt_uniform, is_uniform_reject, pad, uniform_reject, unpad, CANONICAL_PAD_LEN};

use crate::crypto::{f1, f1_star, f5, f5_star, xor, LongTermKey, POINT_LEN, RAND_LEN, SQN_LEN};
use crate::protocol::{Autn, Auts, Msin, ProtocolError, ProtocolMessage, Sqn, SubscriberRecord, UeState, AMF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantMode {
    #[default]
    Baseline,
    EncFailure,
    EncResponse,
    SqnInSuci,
    NonceInSuci,
    NonceInAuts,
}

impl VariantMode {
    pub const ALL: [VariantMode; 6] = [
        Self::Baseline,
        Self::EncFailure,
        Self::EncResponse,
        Self::SqnInSuci,
        Self::NonceInSuci,
        Self::NonceInAuts,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::EncFailure => "enc-failure",
            Self::EncResponse => "enc-response",
            Self::SqnInSuci => "sqn-in-suci",
            Self::NonceInSuci => "nonce-in-suci",
            Self::NonceInAuts => "nonce-in-auts",
        }
    }

    /// Whether the UE's success reply travels inside an envelope.
    pub fn wraps_responses(self) -> bool {
        self == Self::EncResponse
    }

    /// Whether the UE's failure replies travel inside an envelope.
    pub fn wraps_failures(self) -> bool {
        matches!(self, Self::EncFailure | Self::EncResponse)
    }
}

impl fmt::Display for VariantMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown variant {s:?} (expected one of baseline, enc-failure, enc-response, sqn-in-suci, nonce-in-suci, nonce-in-auts)"))
    }
}

/// SUCI plaintext as the HN sees it after revealing the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuciPayload {
    pub msin: Msin,
    pub sqn: Option<Sqn>,
    pub nonce: Option<[u8; RAND_LEN]>,
}

fn payload_len(mode: VariantMode) -> usize {
    match mode {
        VariantMode::SqnInSuci => Msin::LEN + SQN_LEN,
        VariantMode::NonceInSuci => Msin::LEN + RAND_LEN,
        _ => Msin::LEN,
    }
}

/// Plaintext concealed in the SUCI: `MSIN`, `MSIN || SQN_UE` or `MSIN || RAND_UE`.
///
/// # Panics
/// In nonce-in-suci mode if the UE has no outstanding nonce; registration
/// draws one before calling this.
pub fn build_suci_payload(ue: &UeState) -> Vec<u8> {
    let mut out = ue.supi().msin.packed().to_vec();
    match ue.variant() {
        VariantMode::SqnInSuci => out.extend_from_slice(&ue.sqn().to_bytes()),
        VariantMode::NonceInSuci => {
            out.extend_from_slice(ue.pending_nonce().expect("nonce drawn before building the SUCI"))
        }
        _ => {}
    }
    out
}

pub fn parse_suci_payload(mode: VariantMode, plaintext: &[u8]) -> Result<SuciPayload, ProtocolError> {
    let expected = payload_len(mode);
    if plaintext.len() != expected {
        return Err(ProtocolError::MalformedPayload {
            expected,
            actual: plaintext.len(),
        });
    }
    let msin = Msin::from_packed(plaintext[..Msin::LEN].try_into().expect("length checked"))?;
    let rest = &plaintext[Msin::LEN..];
    Ok(match mode {
        VariantMode::SqnInSuci => SuciPayload {
            msin,
            sqn: Some(Sqn::from_bytes(rest.try_into().expect("length checked"))),
            nonce: None,
        },
        VariantMode::NonceInSuci => SuciPayload {
            msin,
            sqn: None,
            nonce: Some(rest.try_into().expect("length checked")),
        },
        _ => SuciPayload {
            msin,
            sqn: None,
            nonce: None,
        },
    })
}

/// Re-base the HN counter on the UE-reported one. The next vector then
/// carries `SQN_UE + 1`, which is always inside the UE window.
pub fn hn_sync_from_suci(record: &mut SubscriberRecord, sqn_ue: Sqn) {
    record.sqn_hn = sqn_ue;
}

fn surrogate_counter(nonce: &[u8; RAND_LEN]) -> [u8; SQN_LEN] {
    nonce[..SQN_LEN].try_into().expect("nonce is longer than a counter")
}

/// Challenge token for nonce-in-suci mode. The counter slot carries the first
/// six nonce bytes; the MAC is computed over `RAND xor RAND_UE` so all 128
/// bits of the nonce are bound.
pub fn challenge_freshness_binding(k: &LongTermKey, rand: &[u8; RAND_LEN], nonce: &[u8; RAND_LEN]) -> Autn {
    let counter = surrogate_counter(nonce);
    Autn {
        conc: f5(k, rand).mask(&counter),
        amf: AMF,
        mac: f1(k, &counter, &xor(rand, nonce), &AMF),
    }
}

/// UE-side check that the challenge binds the nonce it sent.
pub fn verify_freshness_binding(k: &LongTermKey, rand: &[u8; RAND_LEN], autn: &Autn, nonce: &[u8; RAND_LEN]) -> bool {
    let mut expected = challenge_freshness_binding(k, rand, nonce);
    expected.amf = autn.amf;
    expected.mac = f1(k, &surrogate_counter(nonce), &xor(rand, nonce), &autn.amf);
    bool::from(expected.to_bytes().ct_eq(&autn.to_bytes()))
}

/// AUTS masked under a fresh UE nonce, which travels in clear beside it.
pub fn build_auts_with_nonce<R: RngCore + CryptoRng>(ue: &UeState, rng: &mut R) -> Auts {
    let nonce: [u8; RAND_LEN] = rng.gen();
    let sqn = ue.sqn().to_bytes();
    Auts {
        conc: f5_star(ue.key(), &nonce).mask(&sqn),
        mac_s: f1_star(ue.key(), &sqn, &nonce),
        nonce_ue: Some(nonce),
    }
}

/// Apply the mode's reply-encryption policy to an outgoing UE message.
pub fn protect_reply<R: RngCore + CryptoRng>(
    mode: VariantMode,
    rng: &mut R,
    msg: ProtocolMessage,
    hn_public: &[u8; POINT_LEN],
) -> Result<ProtocolMessage, ProtocolError> {
    let wrap = match &msg {
        ProtocolMessage::AuthenticationFailure { .. } => mode.wraps_failures(),
        ProtocolMessage::AuthenticationResponse { .. } => mode.wraps_responses(),
        _ => false,
    };
    if wrap {
        encrypt_uniform(rng, &msg, hn_public, CANONICAL_PAD_LEN)
    } else {
        Ok(msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::KeyPair;
    use crate::protocol::{FailureCause, SupiIdentity};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn ue(mode: VariantMode, sqn: u64) -> UeState {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let hn = KeyPair::generate(&mut rng);
        UeState::new(
            SupiIdentity::new("001", "01", "0000000001").unwrap(),
            LongTermKey::new([5; 16]),
            Sqn::new(sqn),
            32,
            mode,
            *hn.public(),
        )
        .unwrap()
    }

    #[test]
    fn mode_strings() {
        for m in VariantMode::ALL {
            assert_eq!(m.as_str().parse::<VariantMode>().unwrap(), m);
        }
        assert!("nonce".parse::<VariantMode>().is_err());
    }

    #[test]
    fn payload_lengths_per_mode() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for (mode, len) in [
            (VariantMode::Baseline, 5),
            (VariantMode::EncFailure, 5),
            (VariantMode::EncResponse, 5),
            (VariantMode::NonceInAuts, 5),
            (VariantMode::SqnInSuci, 11),
            (VariantMode::NonceInSuci, 21),
        ] {
            let mut u = ue(mode, 100);
            u.build_registration(&mut rng).unwrap();
            let payload = build_suci_payload(&u);
            assert_eq!(payload.len(), len, "{mode}");
            let parsed = parse_suci_payload(mode, &payload).unwrap();
            assert_eq!(parsed.msin, u.supi().msin);
            if mode == VariantMode::SqnInSuci {
                assert_eq!(parsed.sqn, Some(Sqn::new(100)));
            }
            if mode == VariantMode::NonceInSuci {
                assert_eq!(parsed.nonce.as_ref(), u.pending_nonce());
            }
        }
        assert_eq!(
            parse_suci_payload(VariantMode::SqnInSuci, &[0; 5]),
            Err(ProtocolError::MalformedPayload {
                expected: 11,
                actual: 5
            })
        );
    }

    #[test]
    fn binding_accepts_only_own_nonce() {
        let k = LongTermKey::new([1; 16]);
        let rand = [2u8; 16];
        let nonce = [3u8; 16];
        let autn = challenge_freshness_binding(&k, &rand, &nonce);
        assert!(verify_freshness_binding(&k, &rand, &autn, &nonce));
        let mut other = nonce;
        other[15] ^= 1;
        // Differs only outside the surrogate counter: still rejected.
        assert!(!verify_freshness_binding(&k, &rand, &autn, &other));
        assert!(!verify_freshness_binding(
            &LongTermKey::new([9; 16]),
            &rand,
            &autn,
            &nonce
        ));
    }

    #[test]
    fn nonce_auts_masks_differ_on_same_rand() {
        // Fixed counters 5 then 6 with fresh nonces: the xor of the two
        // concealed counters no longer equals 5 xor 6.
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let a = build_auts_with_nonce(&ue(VariantMode::NonceInAuts, 5), &mut rng);
        let b = build_auts_with_nonce(&ue(VariantMode::NonceInAuts, 6), &mut rng);
        assert_ne!(xor(&a.conc, &b.conc), [0, 0, 0, 0, 0, 3]);
        let k = LongTermKey::new([5; 16]);
        let n = a.nonce_ue.unwrap();
        assert_eq!(f5_star(&k, &n).mask(&a.conc), Sqn::new(5).to_bytes());

        // Baseline AUTS under one RAND keeps the mask constant.
        let rand = [7u8; 16];
        let a = ue(VariantMode::Baseline, 5).build_auts(&rand);
        let b = ue(VariantMode::Baseline, 6).build_auts(&rand);
        assert_eq!(xor(&a.conc, &b.conc), [0, 0, 0, 0, 0, 3]);
    }

    #[test]
    fn reply_protection_policy() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let hn = KeyPair::generate(&mut rng);
        let failure = ProtocolMessage::AuthenticationFailure {
            cause: FailureCause::MacFailure,
            auts: None,
        };
        let response = ProtocolMessage::AuthenticationResponse { res_star: [1; 16] };
        let tag = |mode, m: &ProtocolMessage, rng: &mut ChaCha20Rng| {
            protect_reply(mode, rng, m.clone(), hn.public()).unwrap().tag()
        };
        assert_eq!(tag(VariantMode::Baseline, &failure, &mut rng), 0x04);
        assert_eq!(tag(VariantMode::EncFailure, &failure, &mut rng), 0x05);
        assert_eq!(tag(VariantMode::EncFailure, &response, &mut rng), 0x03);
        assert_eq!(tag(VariantMode::EncResponse, &failure, &mut rng), 0x05);
        assert_eq!(tag(VariantMode::EncResponse, &response, &mut rng), 0x05);
        assert_eq!(tag(VariantMode::NonceInAuts, &failure, &mut rng), 0x04);
    }
}
