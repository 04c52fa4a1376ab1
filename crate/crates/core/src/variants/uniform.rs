use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use crate::crypto::{ecies_conceal, ecies_reveal, EciesEnvelope, POINT_LEN};
use crate::protocol::{decode_message, encode_message, ProtocolError, ProtocolMessage};

/// Plaintext length of every uniform envelope.
pub const CANONICAL_PAD_LEN: usize = 128;

const PAD_MARKER: u8 = 0x80;

/// `data || 0x80 || 0x00...` up to `pad_to` bytes.
pub fn pad(data: &[u8], pad_to: usize) -> Result<Vec<u8>, ProtocolError> {
    if data.len() + 1 > pad_to {
        return Err(ProtocolError::Padding("message does not fit the padded length"));
    }
    let mut out = Vec::with_capacity(pad_to);
    out.extend_from_slice(data);
    out.push(PAD_MARKER);
    out.resize(pad_to, 0);
    Ok(out)
}

/// Strip zeros and the final 0x80 marker.
pub fn unpad(padded: &[u8]) -> Result<&[u8], ProtocolError> {
    let end = padded
        .iter()
        .rposition(|&b| b != 0)
        .ok_or(ProtocolError::Padding("no padding marker"))?;
    if padded[end] != PAD_MARKER {
        return Err(ProtocolError::Padding("no padding marker"));
    }
    Ok(&padded[..end])
}

/// Encode, pad and conceal `msg` for the HN.
pub fn encrypt_uniform<R: RngCore + CryptoRng>(
    rng: &mut R,
    msg: &ProtocolMessage,
    hn_public: &[u8; POINT_LEN],
    pad_to: usize,
) -> Result<ProtocolMessage, ProtocolError> {
    let plaintext = pad(&encode_message(msg), pad_to)?;
    Ok(ProtocolMessage::UniformEnvelope {
        envelope: ecies_conceal(rng, &plaintext, hn_public)?,
    })
}

pub fn decrypt_uniform(
    envelope: &EciesEnvelope,
    hn_secret: &[u8; POINT_LEN],
) -> Result<ProtocolMessage, ProtocolError> {
    let padded = ecies_reveal(envelope, hn_secret)?;
    Ok(decode_message(unpad(&padded)?)?)
}

fn label_block(label: &str, index: u8) -> [u8; 32] {
    Sha256::new()
        .chain_update(b"aka-lab/uniform-reject/")
        .chain_update(label.as_bytes())
        .chain_update([index])
        .finalize()
        .into()
}

/// The canonical reject frame. Its bytes are constant: they depend on
/// neither the rejection cause nor the subscriber.
pub fn uniform_reject() -> ProtocolMessage {
    let ciphertext = (0..(CANONICAL_PAD_LEN / 32) as u8)
        .flat_map(|i| label_block("ct", i))
        .collect();
    ProtocolMessage::UniformEnvelope {
        envelope: EciesEnvelope {
            ephemeral_public: label_block("epk", 0),
            ciphertext,
            tag: label_block("tag", 0),
        },
    }
}

pub fn is_uniform_reject(msg: &ProtocolMessage) -> bool {
    *msg == uniform_reject()
}
