//! Big-endian wire framing: one tag byte followed by fixed-width fields.
//!
//! ```text
//! 0x01 RegistrationRequest    mcc[3] mnc[3] eph_pub[32] ct_len:u16 ct[ct_len] tag[32]
//! 0x02 AuthenticationRequest  rand[16] conc[6] amf[2] mac[8]
//! 0x03 AuthenticationResponse res_star[16]
//! 0x04 AuthenticationFailure  cause:u8 auts_present:u8 conc[6] mac_s[8] nonce_present:u8 nonce[16]
//! 0x05 UniformEnvelope        eph_pub[32] ct_len:u16 ct[ct_len] tag[32]
//! ```
//!
//! Absent optional fields are zero-filled with their presence flag cleared.
//! Decoding is strict, so every accepted frame re-encodes to the same bytes.

use thiserror::Error;

use super::identity::Plmn;
use super::message::*;
use crate::crypto::{EciesEnvelope, Mac64, POINT_LEN, TAG_LEN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("decode error at offset {offset}: {reason}")]
pub struct DecodeError {
    pub offset: usize,
    pub reason: DecodeReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeReason {
    #[error("frame truncated")]
    Truncated,
    #[error("unknown message tag 0x{0:02x}")]
    UnknownTag(u8),
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
    #[error("invalid failure cause {0}")]
    BadCause(u8),
    #[error("invalid presence flag {0}")]
    BadFlag(u8),
    #[error("non-zero filler in absent field")]
    NonZeroFiller,
    #[error("invalid PLMN encoding")]
    BadPlmn,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, reason: DecodeReason) -> DecodeError {
        DecodeError {
            offset: self.pos,
            reason,
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.buf.len() - self.pos < n {
            return Err(self.err(DecodeReason::Truncated));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        Ok(self.take(N)?.try_into().expect("take returns N bytes"))
    }

    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, DecodeError> {
        Ok(u16::from_be_bytes(self.array()?))
    }

    fn flag(&mut self) -> Result<bool, DecodeError> {
        let at = self.pos;
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(DecodeError {
                offset: at,
                reason: DecodeReason::BadFlag(v),
            }),
        }
    }

    fn envelope(&mut self) -> Result<EciesEnvelope, DecodeError> {
        let ephemeral_public = self.array::<POINT_LEN>()?;
        let ct_len = self.u16()? as usize;
        let ciphertext = self.take(ct_len)?.to_vec();
        let tag = self.array::<TAG_LEN>()?;
        Ok(EciesEnvelope {
            ephemeral_public,
            ciphertext,
            tag,
        })
    }

    fn zero_filler<const N: usize>(&mut self) -> Result<(), DecodeError> {
        let at = self.pos;
        if self.array::<N>()?.iter().any(|&b| b != 0) {
            return Err(DecodeError {
                offset: at,
                reason: DecodeReason::NonZeroFiller,
            });
        }
        Ok(())
    }
}

fn put_envelope(out: &mut Vec<u8>, env: &EciesEnvelope) {
    let ct_len = u16::try_from(env.ciphertext.len()).expect("ciphertext length fits in u16");
    out.extend_from_slice(&env.ephemeral_public);
    out.extend_from_slice(&ct_len.to_be_bytes());
    out.extend_from_slice(&env.ciphertext);
    out.extend_from_slice(&env.tag);
}

/// # Panics
/// If an envelope ciphertext is longer than `u16::MAX` bytes. ECIES
/// concealment caps plaintexts far below that.
pub fn encode_message(msg: &ProtocolMessage) -> Vec<u8> {
    let mut out = vec![msg.tag()];
    match msg {
        ProtocolMessage::RegistrationRequest { suci } => {
            out.extend_from_slice(&suci.plmn.wire_mcc());
            out.extend_from_slice(&suci.plmn.wire_mnc());
            put_envelope(&mut out, &suci.envelope);
        }
        ProtocolMessage::AuthenticationRequest { rand, autn } => {
            out.extend_from_slice(rand);
            out.extend_from_slice(&autn.to_bytes());
        }
        ProtocolMessage::AuthenticationResponse { res_star } => out.extend_from_slice(res_star),
        ProtocolMessage::AuthenticationFailure { cause, auts } => {
            out.push(cause.code());
            match auts {
                Some(a) => {
                    out.push(1);
                    out.extend_from_slice(&a.conc);
                    out.extend_from_slice(&a.mac_s.0);
                    match a.nonce_ue {
                        Some(n) => {
                            out.push(1);
                            out.extend_from_slice(&n);
                        }
                        None => out.extend_from_slice(&[0u8; 17]),
                    }
                }
                None => out.extend_from_slice(&[0u8; 1 + 6 + 8 + 1 + 16]),
            }
        }
        ProtocolMessage::UniformEnvelope { envelope } => put_envelope(&mut out, envelope),
    }
    out
}

pub fn decode_message(bytes: &[u8]) -> Result<ProtocolMessage, DecodeError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let tag = r.u8()?;
    let msg = match tag {
        TAG_REGISTRATION_REQUEST => {
            let at = r.pos;
            let (mcc, mnc) = (r.array::<3>()?, r.array::<3>()?);
            let plmn = Plmn::from_wire(mcc, mnc).map_err(|_| DecodeError {
                offset: at,
                reason: DecodeReason::BadPlmn,
            })?;
            ProtocolMessage::RegistrationRequest {
                suci: Suci {
                    plmn,
                    envelope: r.envelope()?,
                },
            }
        }
        TAG_AUTHENTICATION_REQUEST => {
            let rand = r.array()?;
            let autn = Autn {
                conc: r.array()?,
                amf: r.array()?,
                mac: Mac64(r.array()?),
            };
            ProtocolMessage::AuthenticationRequest { rand, autn }
        }
        TAG_AUTHENTICATION_RESPONSE => ProtocolMessage::AuthenticationResponse { res_star: r.array()? },
        TAG_AUTHENTICATION_FAILURE => {
            let at = r.pos;
            let code = r.u8()?;
            let cause = FailureCause::from_code(code).ok_or(DecodeError {
                offset: at,
                reason: DecodeReason::BadCause(code),
            })?;
            let auts = if r.flag()? {
                let conc = r.array()?;
                let mac_s = Mac64(r.array()?);
                let nonce_ue = if r.flag()? {
                    Some(r.array()?)
                } else {
                    r.zero_filler::<16>()?;
                    None
                };
                Some(Auts { conc, mac_s, nonce_ue })
            } else {
                r.zero_filler::<{ 6 + 8 + 1 + 16 }>()?;
                None
            };
            ProtocolMessage::AuthenticationFailure { cause, auts }
        }
        TAG_UNIFORM_ENVELOPE => ProtocolMessage::UniformEnvelope {
            envelope: r.envelope()?,
        },
        other => {
            return Err(DecodeError {
                offset: 0,
                reason: DecodeReason::UnknownTag(other),
            })
        }
    };
    if r.pos != bytes.len() {
        return Err(r.err(DecodeReason::TrailingBytes(bytes.len() - r.pos)));
    }
    Ok(msg)
}
