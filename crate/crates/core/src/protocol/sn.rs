use std::collections::HashMap;

use rand::{Rng, RngCore};
use subtle::ConstantTimeEq;

use super::*;
use crate::crypto::hash_res_star;

/// Opaque SN-minted identifier for one held authentication vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SessionHandle(pub [u8; 8]);

/// Serving network: relays messages and checks `RES*` against `HXRES*`.
/// It never holds `K` or any sequence number.
#[derive(Debug, Clone)]
pub struct ServingNetwork {
    name: String,
    sessions: HashMap<SessionHandle, AuthVector>,
}

impl ServingNetwork {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            sessions: HashMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Store the vector and return the challenge to forward to the UE.
    pub fn forward_and_hold<R: RngCore>(
        &mut self,
        rng: &mut R,
        vector: AuthVector,
    ) -> (SessionHandle, ProtocolMessage) {
        let request = vector.request();
        let handle = loop {
            let h = SessionHandle(rng.gen());
            if !self.sessions.contains_key(&h) {
                break h;
            }
        };
        self.sessions.insert(handle, vector);
        (handle, request)
    }

    pub fn session(&self, handle: SessionHandle) -> Option<&AuthVector> {
        self.sessions.get(&handle)
    }

    pub fn close(&mut self, handle: SessionHandle) -> Option<AuthVector> {
        self.sessions.remove(&handle)
    }

    pub fn verify_response(&self, handle: SessionHandle, msg: &ProtocolMessage) -> Result<AuthOutcome, ProtocolError> {
        let vector = self.sessions.get(&handle).ok_or(ProtocolError::UnknownSession)?;
        let ProtocolMessage::AuthenticationResponse { res_star } = msg else {
            return Err(ProtocolError::UnexpectedMessage {
                expected: "authentication-response",
                got: msg.name(),
            });
        };
        let hres = hash_res_star(&vector.rand, res_star);
        Ok(if bool::from(hres.ct_eq(&vector.hxres_star)) {
            AuthOutcome::Ok
        } else {
            AuthOutcome::SnHashMismatch
        })
    }
}
