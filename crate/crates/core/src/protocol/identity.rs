use std::fmt;

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::crypto::SQN_LEN;

/// 48-bit sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sqn(u64);

impl Sqn {
    pub const MAX: u64 = (1 << 48) - 1;

    /// # Panics
    /// If `value` does not fit in 48 bits.
    pub fn new(value: u64) -> Self {
        assert!(value <= Self::MAX, "sequence number {value} exceeds 48 bits");
        Self(value)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn to_bytes(self) -> [u8; SQN_LEN] {
        let be = self.0.to_be_bytes();
        let mut out = [0u8; SQN_LEN];
        out.copy_from_slice(&be[2..]);
        out
    }

    pub fn from_bytes(bytes: [u8; SQN_LEN]) -> Self {
        let mut be = [0u8; 8];
        be[2..].copy_from_slice(&bytes);
        Self(u64::from_be_bytes(be))
    }

    pub fn next(self) -> Self {
        Self::new(self.0 + 1)
    }
}

impl fmt::Display for Sqn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// MCC and MNC, kept as three ASCII bytes each. A two-digit MNC is stored
/// with a trailing space, which is also its wire form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Plmn {
    mcc: [u8; 3],
    mnc: [u8; 3],
}

impl Plmn {
    pub fn new(mcc: &str, mnc: &str) -> Result<Self, ProtocolError> {
        let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        if mcc.len() != 3 || !digits(mcc) {
            return Err(ProtocolError::InvalidIdentity(format!("bad MCC {mcc:?}")));
        }
        if !(2..=3).contains(&mnc.len()) || !digits(mnc) {
            return Err(ProtocolError::InvalidIdentity(format!("bad MNC {mnc:?}")));
        }
        let mut m = [b' '; 3];
        m[..mnc.len()].copy_from_slice(mnc.as_bytes());
        Ok(Self {
            mcc: mcc.as_bytes().try_into().expect("checked length"),
            mnc: m,
        })
    }

    /// Parse the space-padded wire form.
    pub fn from_wire(mcc: [u8; 3], mnc: [u8; 3]) -> Result<Self, ProtocolError> {
        let mcc = std::str::from_utf8(&mcc).map_err(|_| ProtocolError::InvalidIdentity("non-ASCII MCC".into()))?;
        let mnc = std::str::from_utf8(&mnc).map_err(|_| ProtocolError::InvalidIdentity("non-ASCII MNC".into()))?;
        let trimmed = match mnc.strip_suffix(' ') {
            Some(two) => two,
            None => mnc,
        };
        Self::new(mcc, trimmed)
    }

    pub fn mcc(&self) -> &str {
        std::str::from_utf8(&self.mcc).expect("validated ASCII")
    }

    pub fn mnc(&self) -> &str {
        std::str::from_utf8(&self.mnc).expect("validated ASCII").trim_end()
    }

    pub fn wire_mcc(&self) -> [u8; 3] {
        self.mcc
    }

    pub fn wire_mnc(&self) -> [u8; 3] {
        self.mnc
    }
}

/// Ten MSIN digits packed two per byte, high nibble first.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Msin([u8; 5]);

impl Msin {
    pub const LEN: usize = 5;

    pub fn from_digits(digits: &str) -> Result<Self, ProtocolError> {
        if digits.len() != 10 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ProtocolError::InvalidIdentity(format!(
                "MSIN must be 10 digits, got {digits:?}"
            )));
        }
        let d = digits.as_bytes();
        let mut packed = [0u8; 5];
        for (i, byte) in packed.iter_mut().enumerate() {
            *byte = ((d[2 * i] - b'0') << 4) | (d[2 * i + 1] - b'0');
        }
        Ok(Self(packed))
    }

    pub fn from_packed(packed: [u8; 5]) -> Result<Self, ProtocolError> {
        if packed.iter().any(|b| b >> 4 > 9 || b & 0x0f > 9) {
            return Err(ProtocolError::InvalidIdentity(
                "MSIN nibble is not a decimal digit".into(),
            ));
        }
        Ok(Self(packed))
    }

    pub fn packed(&self) -> &[u8; 5] {
        &self.0
    }

    pub fn digits(&self) -> String {
        self.0.iter().map(|b| format!("{}{}", b >> 4, b & 0x0f)).collect()
    }
}

impl fmt::Debug for Msin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Msin({})", self.digits())
    }
}

/// Subscription permanent identifier (IMSI form).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SupiIdentity {
    pub plmn: Plmn,
    pub msin: Msin,
}

impl SupiIdentity {
    pub fn new(mcc: &str, mnc: &str, msin: &str) -> Result<Self, ProtocolError> {
        Ok(Self {
            plmn: Plmn::new(mcc, mnc)?,
            msin: Msin::from_digits(msin)?,
        })
    }
}

impl fmt::Display for SupiIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "imsi-{}{}{}", self.plmn.mcc(), self.plmn.mnc(), self.msin.digits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqn_byte_round_trip() {
        let s = Sqn::new(0x0102_0304_0506);
        assert_eq!(s.to_bytes(), [1, 2, 3, 4, 5, 6]);
        assert_eq!(Sqn::from_bytes(s.to_bytes()), s);
        assert_eq!(Sqn::from_bytes([0xff; 6]).value(), Sqn::MAX);
    }

    #[test]
    #[should_panic]
    fn sqn_rejects_wide_values() {
        Sqn::new(1 << 48);
    }

    #[test]
    fn msin_packing() {
        let m = Msin::from_digits("0123456789").unwrap();
        assert_eq!(m.packed(), &[0x01, 0x23, 0x45, 0x67, 0x89]);
        assert_eq!(m.digits(), "0123456789");
        assert!(Msin::from_digits("012345678").is_err());
        assert!(Msin::from_digits("01234567a9").is_err());
        assert!(Msin::from_packed([0x0a, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn plmn_validation_and_padding() {
        let p = Plmn::new("001", "01").unwrap();
        assert_eq!(p.wire_mnc(), *b"01 ");
        assert_eq!(p.mnc(), "01");
        assert_eq!(Plmn::from_wire(*b"001", *b"01 ").unwrap(), p);
        assert_eq!(Plmn::new("310", "260").unwrap().mnc(), "260");
        assert!(Plmn::new("01", "01").is_err());
        assert!(Plmn::new("001", "1").is_err());
        assert!(Plmn::new("00a", "01").is_err());
        assert!(Plmn::from_wire(*b"001", *b" 01").is_err());
    }

    #[test]
    fn supi_display() {
        let s = SupiIdentity::new("001", "01", "0000000042").unwrap();
        assert_eq!(s.to_string(), "imsi-001010000000042");
    }
}
