use std::fmt;

use serde::{Deserialize, Serialize};

use super::identity::{Plmn, SupiIdentity};
use crate::crypto::{EciesEnvelope, Mac64, AMF_LEN, HXRES_LEN, RAND_LEN, RES_STAR_LEN, SQN_LEN};

pub const TAG_REGISTRATION_REQUEST: u8 = 0x01;
pub const TAG_AUTHENTICATION_REQUEST: u8 = 0x02;
pub const TAG_AUTHENTICATION_RESPONSE: u8 = 0x03;
pub const TAG_AUTHENTICATION_FAILURE: u8 = 0x04;
pub const TAG_UNIFORM_ENVELOPE: u8 = 0x05;

/// Authentication token: `CONC || AMF || MAC`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Autn {
    pub conc: [u8; SQN_LEN],
    pub amf: [u8; AMF_LEN],
    pub mac: Mac64,
}

impl Autn {
    pub const LEN: usize = SQN_LEN + AMF_LEN + 8;

    pub fn to_bytes(&self) -> [u8; Self::LEN] {
        let mut out = [0u8; Self::LEN];
        out[..6].copy_from_slice(&self.conc);
        out[6..8].copy_from_slice(&self.amf);
        out[8..].copy_from_slice(&self.mac.0);
        out
    }
}

/// Resynchronization token: `CONC || MAC-S`, plus the UE nonce when the
/// nonce-in-AUTS mitigation is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Auts {
    pub conc: [u8; SQN_LEN],
    pub mac_s: Mac64,
    pub nonce_ue: Option<[u8; 16]>,
}

/// Concealed identity: cleartext PLMN and an ECIES envelope over the MSIN
/// (plus any variant-specific suffix).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suci {
    pub plmn: Plmn,
    pub envelope: EciesEnvelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureCause {
    MacFailure = 1,
    SynchFailure = 2,
}

impl FailureCause {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Self::MacFailure),
            2 => Some(Self::SynchFailure),
            _ => None,
        }
    }
}

impl fmt::Display for FailureCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MacFailure => "mac-failure",
            Self::SynchFailure => "synch-failure",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolMessage {
    RegistrationRequest {
        suci: Suci,
    },
    AuthenticationRequest {
        rand: [u8; RAND_LEN],
        autn: Autn,
    },
    AuthenticationResponse {
        res_star: [u8; RES_STAR_LEN],
    },
    AuthenticationFailure {
        cause: FailureCause,
        auts: Option<Auts>,
    },
    /// Padded ECIES envelope carrying an inner message, or the canonical
    /// uniform reject.
    UniformEnvelope {
        envelope: EciesEnvelope,
    },
}

impl ProtocolMessage {
    pub fn tag(&self) -> u8 {
        match self {
            Self::RegistrationRequest { .. } => TAG_REGISTRATION_REQUEST,
            Self::AuthenticationRequest { .. } => TAG_AUTHENTICATION_REQUEST,
            Self::AuthenticationResponse { .. } => TAG_AUTHENTICATION_RESPONSE,
            Self::AuthenticationFailure { .. } => TAG_AUTHENTICATION_FAILURE,
            Self::UniformEnvelope { .. } => TAG_UNIFORM_ENVELOPE,
        }
    }

    pub fn name(&self) -> &'static str {
        tag_name(self.tag())
    }

    /// One-line human-readable summary used in transcripts.
    pub fn summary(&self) -> String {
        match self {
            Self::RegistrationRequest { suci } => format!(
                "registration-request mcc={} mnc={} ct_len={}",
                suci.plmn.mcc(),
                suci.plmn.mnc(),
                suci.envelope.ciphertext.len()
            ),
            Self::AuthenticationRequest { rand, autn } => format!(
                "authentication-request rand={} autn={}",
                hex::encode(rand),
                hex::encode(autn.to_bytes())
            ),
            Self::AuthenticationResponse { res_star } => {
                format!("authentication-response res*={}", hex::encode(res_star))
            }
            Self::AuthenticationFailure { cause, auts } => match auts {
                Some(a) => format!(
                    "authentication-failure cause={cause} auts.conc={} auts.mac_s={}{}",
                    hex::encode(a.conc),
                    hex::encode(a.mac_s.0),
                    a.nonce_ue
                        .map(|n| format!(" auts.nonce={}", hex::encode(n)))
                        .unwrap_or_default()
                ),
                None => format!("authentication-failure cause={cause}"),
            },
            Self::UniformEnvelope { envelope } => {
                format!("uniform-envelope ct_len={}", envelope.ciphertext.len())
            }
        }
    }
}

pub fn tag_name(tag: u8) -> &'static str {
    match tag {
        TAG_REGISTRATION_REQUEST => "registration-request",
        TAG_AUTHENTICATION_REQUEST => "authentication-request",
        TAG_AUTHENTICATION_RESPONSE => "authentication-response",
        TAG_AUTHENTICATION_FAILURE => "authentication-failure",
        TAG_UNIFORM_ENVELOPE => "uniform-envelope",
        _ => "unknown",
    }
}

/// Challenge material issued by the HN for one authentication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthVector {
    pub rand: [u8; RAND_LEN],
    pub autn: Autn,
    pub hxres_star: [u8; HXRES_LEN],
    pub supi: SupiIdentity,
}

impl AuthVector {
    pub fn request(&self) -> ProtocolMessage {
        ProtocolMessage::AuthenticationRequest {
            rand: self.rand,
            autn: self.autn,
        }
    }
}
