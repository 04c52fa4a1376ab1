use std::collections::{BTreeMap, HashMap};

use rand::{CryptoRng, Rng, RngCore};
use subtle::ConstantTimeEq;

use super::*;
use crate::crypto::{
    derive_res_star, ecies_reveal, f1, f1_star, f2, f5, f5_star, hash_res_star, KeyPair, LongTermKey, POINT_LEN,
    RAND_LEN,
};
use crate::variants::{self, NonceCache, NonceStatus, SuciPayload, VariantMode};

/// HN-side subscription data.
#[derive(Debug, Clone)]
pub struct SubscriberRecord {
    pub supi: SupiIdentity,
    pub k: LongTermKey,
    /// Last sequence number issued (or learned through resynchronization).
    pub sqn_hn: Sqn,
}

/// Events the HN records for higher-layer monitoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SecurityEvent {
    NonceReuse { supi: SupiIdentity, nonce: [u8; RAND_LEN] },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegistrationOutcome {
    /// A fresh vector; the SN holds it and forwards the challenge.
    Challenge(AuthVector),
    /// The HN refused the SUCI and answers with the given frame.
    Rejected(ProtocolMessage),
}

#[derive(Debug, Clone)]
pub struct HomeNetwork {
    keys: KeyPair,
    variant: VariantMode,
    subscribers: BTreeMap<Msin, SubscriberRecord>,
    issued: HashMap<[u8; RAND_LEN], Msin>,
    nonce_cache: NonceCache,
    security_log: Vec<SecurityEvent>,
}

impl HomeNetwork {
    pub fn new(keys: KeyPair, variant: VariantMode) -> Self {
        Self {
            keys,
            variant,
            subscribers: BTreeMap::new(),
            issued: HashMap::new(),
            nonce_cache: NonceCache::default(),
            security_log: Vec::new(),
        }
    }

    pub fn with_nonce_cache(mut self, cache: NonceCache) -> Self {
        self.nonce_cache = cache;
        self
    }

    pub fn public_key(&self) -> &[u8; POINT_LEN] {
        self.keys.public()
    }

    pub fn variant(&self) -> VariantMode {
        self.variant
    }

    pub fn add_subscriber(&mut self, record: SubscriberRecord) {
        self.subscribers.insert(record.supi.msin, record);
    }

    pub fn subscriber(&self, msin: &Msin) -> Option<&SubscriberRecord> {
        self.subscribers.get(msin)
    }

    pub fn subscriber_mut(&mut self, msin: &Msin) -> Option<&mut SubscriberRecord> {
        self.subscribers.get_mut(msin)
    }

    pub fn security_log(&self) -> &[SecurityEvent] {
        &self.security_log
    }

    pub fn drain_security_log(&mut self) -> Vec<SecurityEvent> {
        std::mem::take(&mut self.security_log)
    }

    /// Reveal the SUCI, look up the subscriber, and issue a challenge.
    pub fn handle_registration<R: RngCore + CryptoRng>(
        &mut self,
        rng: &mut R,
        msg: &ProtocolMessage,
        sn_name: &str,
    ) -> Result<RegistrationOutcome, ProtocolError> {
        let ProtocolMessage::RegistrationRequest { suci } = msg else {
            return Err(ProtocolError::UnexpectedMessage {
                expected: "registration-request",
                got: msg.name(),
            });
        };
        let plaintext = ecies_reveal(&suci.envelope, self.keys.secret())?;
        let payload = variants::parse_suci_payload(self.variant, &plaintext)?;
        let record = self
            .subscribers
            .get_mut(&payload.msin)
            .filter(|r| r.supi.plmn == suci.plmn)
            .ok_or(ProtocolError::SubscriberNotFound)?;

        let vector = match payload {
            SuciPayload { sqn: Some(sqn_ue), .. } => {
                variants::hn_sync_from_suci(record, sqn_ue);
                issue_vector(record, rng, sn_name)?
            }
            SuciPayload { nonce: Some(nonce), .. } => {
                if self.nonce_cache.check(&record.supi, &nonce) == NonceStatus::Replayed {
                    log::warn!("nonce reuse for {}", record.supi);
                    self.security_log.push(SecurityEvent::NonceReuse {
                        supi: record.supi.clone(),
                        nonce,
                    });
                    return Ok(RegistrationOutcome::Rejected(variants::uniform_reject()));
                }
                issue_bound_vector(record, rng, &nonce, sn_name)?
            }
            _ => issue_vector(record, rng, sn_name)?,
        };
        self.issued.insert(vector.rand, vector.supi.msin);
        Ok(RegistrationOutcome::Challenge(vector))
    }

    /// Process a synch-failure: unmask `SQN_UE`, check MAC-S, adopt the UE
    /// counter and issue a fresh vector.
    pub fn handle_auts<R: RngCore + CryptoRng>(
        &mut self,
        rng: &mut R,
        auts: &Auts,
        rand: &[u8; RAND_LEN],
        sn_name: &str,
    ) -> Result<AuthVector, ProtocolError> {
        let source = match (self.variant, auts.nonce_ue) {
            (VariantMode::NonceInSuci, _) => {
                return Err(ProtocolError::ResyncRejected(
                    "no sequence numbers in nonce-in-suci mode",
                ))
            }
            (VariantMode::NonceInAuts, Some(nonce)) => nonce,
            (VariantMode::NonceInAuts, None) => return Err(ProtocolError::ResyncRejected("missing UE nonce")),
            (_, Some(_)) => return Err(ProtocolError::ResyncRejected("unexpected UE nonce")),
            (_, None) => *rand,
        };
        let msin = *self.issued.get(rand).ok_or(ProtocolError::UnknownChallenge)?;
        let record = self
            .subscribers
            .get_mut(&msin)
            .ok_or(ProtocolError::SubscriberNotFound)?;
        let sqn_ue = f5_star(&record.k, &source).mask(&auts.conc);
        let expected = f1_star(&record.k, &sqn_ue, &source);
        if !bool::from(expected.0.ct_eq(&auts.mac_s.0)) {
            return Err(ProtocolError::ResyncRejected("MAC-S mismatch"));
        }
        record.sqn_hn = Sqn::from_bytes(sqn_ue);
        let vector = issue_vector(record, rng, sn_name)?;
        self.issued.insert(vector.rand, msin);
        Ok(vector)
    }

    /// Decrypt a uniform envelope forwarded by the SN.
    pub fn open_envelope(&self, msg: &ProtocolMessage) -> Result<ProtocolMessage, ProtocolError> {
        match msg {
            ProtocolMessage::UniformEnvelope { envelope } => variants::decrypt_uniform(envelope, self.keys.secret()),
            other => Err(ProtocolError::UnexpectedMessage {
                expected: "uniform-envelope",
                got: other.name(),
            }),
        }
    }
}

fn expected_hxres(k: &LongTermKey, rand: &[u8; RAND_LEN], sn_name: &str) -> Result<[u8; 16], ProtocolError> {
    let res_star = derive_res_star(k, &f2(k, rand), rand, sn_name)?;
    Ok(hash_res_star(rand, &res_star))
}

/// Advance `SQN_HN` by one and build the vector around the new value.
fn issue_vector<R: RngCore + CryptoRng>(
    record: &mut SubscriberRecord,
    rng: &mut R,
    sn_name: &str,
) -> Result<AuthVector, ProtocolError> {
    record.sqn_hn = record.sqn_hn.next();
    let sqn = record.sqn_hn.to_bytes();
    let rand: [u8; RAND_LEN] = rng.gen();
    let autn = Autn {
        conc: f5(&record.k, &rand).mask(&sqn),
        amf: AMF,
        mac: f1(&record.k, &sqn, &rand, &AMF),
    };
    Ok(AuthVector {
        rand,
        autn,
        hxres_star: expected_hxres(&record.k, &rand, sn_name)?,
        supi: record.supi.clone(),
    })
}

/// Vector whose MAC binds the UE nonce in place of a sequence number.
fn issue_bound_vector<R: RngCore + CryptoRng>(
    record: &SubscriberRecord,
    rng: &mut R,
    nonce: &[u8; RAND_LEN],
    sn_name: &str,
) -> Result<AuthVector, ProtocolError> {
    let rand: [u8; RAND_LEN] = rng.gen();
    Ok(AuthVector {
        rand,
        autn: variants::challenge_freshness_binding(&record.k, &rand, nonce),
        hxres_star: expected_hxres(&record.k, &rand, sn_name)?,
        supi: record.supi.clone(),
    })
}
