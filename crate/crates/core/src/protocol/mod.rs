//! The three AKA actors (UE, SN, HN), their messages, and the wire codec.

mod codec;
mod hn;
mod identity;
mod message;
mod sn;
mod ue;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use codec::{decode_message, encode_message, DecodeError, DecodeReason};
pub use hn::{HomeNetwork, RegistrationOutcome, SecurityEvent, SubscriberRecord};
pub use identity::{Msin, Plmn, Sqn, SupiIdentity};
pub use message::*;
pub use sn::{ServingNetwork, SessionHandle};
pub use ue::{RejectCause, UeState};

use crate::crypto::CryptoError;

/// Default acceptance window.
pub const DEFAULT_WINDOW: u64 = 32;
/// AMF carried in every challenge.
pub const AMF: [u8; 2] = [0x80, 0x00];
pub const DEFAULT_SN_NAME: &str = "5G:mnc001.mcc001.3gppnetwork.org";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("invalid identity: {0}")]
    InvalidIdentity(String),
    #[error("subscriber not found")]
    SubscriberNotFound,
    #[error("resynchronization rejected: {0}")]
    ResyncRejected(&'static str),
    #[error("unknown challenge RAND")]
    UnknownChallenge,
    #[error("unknown serving-network session")]
    UnknownSession,
    #[error("unexpected message: expected {expected}, got {got}")]
    UnexpectedMessage { expected: &'static str, got: &'static str },
    #[error("malformed SUCI payload: expected {expected} bytes, got {actual}")]
    MalformedPayload { expected: usize, actual: usize },
    #[error("padding error: {0}")]
    Padding(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Result of one authentication attempt as seen by the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuthOutcome {
    Ok,
    MacFailure,
    SynchFailure,
    UniformReject,
    SnHashMismatch,
}

impl AuthOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::MacFailure => "mac-failure",
            Self::SynchFailure => "synch-failure",
            Self::UniformReject => "uniform-reject",
            Self::SnHashMismatch => "sn-hash-mismatch",
        }
    }
}

impl From<FailureCause> for AuthOutcome {
    fn from(c: FailureCause) -> Self {
        match c {
            FailureCause::MacFailure => Self::MacFailure,
            FailureCause::SynchFailure => Self::SynchFailure,
        }
    }
}

impl fmt::Display for AuthOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AuthOutcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Self::Ok,
            Self::MacFailure,
            Self::SynchFailure,
            Self::UniformReject,
            Self::SnHashMismatch,
        ]
        .into_iter()
        .find(|o| o.as_str() == s)
        .ok_or_else(|| format!("unknown outcome {s:?}"))
    }
}

/// Freshness test `sqn_ue < sqn_prime <= sqn_ue + w`. No wraparound.
pub fn window_check(sqn_ue: Sqn, sqn_prime: Sqn, w: u64) -> bool {
    sqn_prime > sqn_ue && sqn_prime.value() - sqn_ue.value() <= w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inequality(ue: u64, prime: u64, w: u64) -> bool {
        ue < prime && prime <= ue + w
    }

    #[test]
    fn window_examples() {
        let s = Sqn::new;
        assert!(window_check(s(10), s(11), 32));
        assert!(!window_check(s(10), s(10), 32));
        assert!(window_check(s(10), s(42), 32));
        assert!(!window_check(s(10), s(43), 32));
        for prime in 0..=64 {
            assert_eq!(window_check(s(10), s(prime), 32), (11..=42).contains(&prime));
        }
    }

    #[test]
    fn window_matches_inequality_on_grid() {
        for w in [1, 32, 64] {
            for ue in 0..=256 {
                for prime in 0..=256 {
                    assert_eq!(window_check(Sqn::new(ue), Sqn::new(prime), w), inequality(ue, prime, w));
                }
            }
        }
    }

    #[test]
    fn window_near_top_of_range() {
        assert!(window_check(Sqn::new(Sqn::MAX - 1), Sqn::new(Sqn::MAX), 32));
        assert!(!window_check(Sqn::new(Sqn::MAX), Sqn::new(0), 32));
    }

    #[test]
    fn outcome_strings_round_trip() {
        for o in [
            AuthOutcome::Ok,
            AuthOutcome::MacFailure,
            AuthOutcome::SynchFailure,
            AuthOutcome::UniformReject,
            AuthOutcome::SnHashMismatch,
        ] {
            assert_eq!(o.as_str().parse::<AuthOutcome>().unwrap(), o);
        }
    }
}
