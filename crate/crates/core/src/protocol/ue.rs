use rand::{CryptoRng, Rng, RngCore};
use subtle::ConstantTimeEq;

use super::*;
use crate::crypto::{derive_res_star, ecies_conceal, f1, f1_star, f2, f5, f5_star, LongTermKey, POINT_LEN, RAND_LEN};
use crate::variants::{self, VariantMode};

/// Why the UE produced a uniform reject. Kept inside the UE; never encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectCause {
    NoOutstandingNonce,
    BindingMismatch,
}

/// UE/USIM state.
#[derive(Debug, Clone)]
pub struct UeState {
    supi: SupiIdentity,
    k: LongTermKey,
    sqn_ue: Sqn,
    window: u64,
    variant: VariantMode,
    hn_public: [u8; POINT_LEN],
    pending_nonce: Option<[u8; RAND_LEN]>,
    last_reject: Option<RejectCause>,
}

impl UeState {
    pub fn new(
        supi: SupiIdentity,
        k: LongTermKey,
        sqn_ue: Sqn,
        window: u64,
        variant: VariantMode,
        hn_public: [u8; POINT_LEN],
    ) -> Result<Self, ProtocolError> {
        if window == 0 {
            return Err(ProtocolError::Config("acceptance window must be at least 1".into()));
        }
        Ok(Self {
            supi,
            k,
            sqn_ue,
            window,
            variant,
            hn_public,
            pending_nonce: None,
            last_reject: None,
        })
    }

    pub fn supi(&self) -> &SupiIdentity {
        &self.supi
    }

    pub fn sqn(&self) -> Sqn {
        self.sqn_ue
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn variant(&self) -> VariantMode {
        self.variant
    }

    pub fn hn_public(&self) -> &[u8; POINT_LEN] {
        &self.hn_public
    }

    pub fn pending_nonce(&self) -> Option<&[u8; RAND_LEN]> {
        self.pending_nonce.as_ref()
    }

    pub fn last_reject_cause(&self) -> Option<RejectCause> {
        self.last_reject
    }

    pub(crate) fn key(&self) -> &LongTermKey {
        &self.k
    }

    /// Conceal the SUPI (plus any variant suffix) under a fresh ephemeral key.
    pub fn build_registration<R: RngCore + CryptoRng>(
        &mut self,
        rng: &mut R,
    ) -> Result<ProtocolMessage, ProtocolError> {
        if self.variant == VariantMode::NonceInSuci {
            self.pending_nonce = Some(rng.gen());
        }
        let payload = variants::build_suci_payload(self);
        let envelope = ecies_conceal(rng, &payload, &self.hn_public)?;
        Ok(ProtocolMessage::RegistrationRequest {
            suci: Suci {
                plmn: self.supi.plmn,
                envelope,
            },
        })
    }

    /// Dispatch a downlink message. Returns the UE's reply, if any.
    pub fn handle_message<R: RngCore + CryptoRng>(
        &mut self,
        rng: &mut R,
        msg: &ProtocolMessage,
        sn_name: &str,
    ) -> Result<Option<ProtocolMessage>, ProtocolError> {
        match msg {
            ProtocolMessage::AuthenticationRequest { rand, autn } => {
                self.handle_auth_request(rng, rand, autn, sn_name).map(Some)
            }
            // Network-side reject: nothing to answer.
            ProtocolMessage::UniformEnvelope { .. } => Ok(None),
            other => Err(ProtocolError::UnexpectedMessage {
                expected: "authentication-request",
                got: other.name(),
            }),
        }
    }

    /// Verify a challenge and answer it with a response or a failure.
    pub fn handle_auth_request<R: RngCore + CryptoRng>(
        &mut self,
        rng: &mut R,
        rand: &[u8; RAND_LEN],
        autn: &Autn,
        sn_name: &str,
    ) -> Result<ProtocolMessage, ProtocolError> {
        if self.variant == VariantMode::NonceInSuci {
            return self.handle_bound_challenge(rand, autn, sn_name);
        }

        let ak = f5(&self.k, rand);
        let sqn_prime = Sqn::from_bytes(ak.mask(&autn.conc));
        let expected = f1(&self.k, &sqn_prime.to_bytes(), rand, &autn.amf);
        let reply = if !bool::from(expected.0.ct_eq(&autn.mac.0)) {
            ProtocolMessage::AuthenticationFailure {
                cause: FailureCause::MacFailure,
                auts: None,
            }
        } else if !window_check(self.sqn_ue, sqn_prime, self.window) {
            let auts = if self.variant == VariantMode::NonceInAuts {
                variants::build_auts_with_nonce(self, rng)
            } else {
                self.build_auts(rand)
            };
            ProtocolMessage::AuthenticationFailure {
                cause: FailureCause::SynchFailure,
                auts: Some(auts),
            }
        } else {
            self.sqn_ue = sqn_prime;
            self.response(rand, sn_name)?
        };
        variants::protect_reply(self.variant, rng, reply, &self.hn_public)
    }

    fn handle_bound_challenge(
        &mut self,
        rand: &[u8; RAND_LEN],
        autn: &Autn,
        sn_name: &str,
    ) -> Result<ProtocolMessage, ProtocolError> {
        let Some(nonce) = self.pending_nonce else {
            self.last_reject = Some(RejectCause::NoOutstandingNonce);
            return Ok(variants::uniform_reject());
        };
        if !variants::verify_freshness_binding(&self.k, rand, autn, &nonce) {
            self.last_reject = Some(RejectCause::BindingMismatch);
            return Ok(variants::uniform_reject());
        }
        self.pending_nonce = None;
        self.response(rand, sn_name)
    }

    fn response(&self, rand: &[u8; RAND_LEN], sn_name: &str) -> Result<ProtocolMessage, ProtocolError> {
        let res = f2(&self.k, rand);
        let res_star = derive_res_star(&self.k, &res, rand, sn_name)?;
        Ok(ProtocolMessage::AuthenticationResponse { res_star })
    }

    /// `AUTS = (SQN_UE xor f5*(RAND)) || f1*(SQN_UE || RAND)`.
    pub fn build_auts(&self, rand: &[u8; RAND_LEN]) -> Auts {
        let sqn = self.sqn_ue.to_bytes();
        Auts {
            conc: f5_star(&self.k, rand).mask(&sqn),
            mac_s: f1_star(&self.k, &sqn, rand),
            nonce_ue: None,
        }
    }
}
