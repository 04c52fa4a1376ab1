//! A closed world of one HN, one SN and a pool of UEs, with every air frame
//! routed through an optional channel tap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::adversary::ChannelTap;
use crate::crypto::{KeyPair, LongTermKey, RAND_LEN};
use crate::protocol::{
    decode_message, encode_message, AuthOutcome, Auts, FailureCause, HomeNetwork, ProtocolError, ProtocolMessage,
    RegistrationOutcome, SecurityEvent, ServingNetwork, SessionHandle, Sqn, SubscriberRecord, SupiIdentity, UeState,
    DEFAULT_SN_NAME, DEFAULT_WINDOW,
};
use crate::transcript::{Direction, EventKind, Transcript, TranscriptEvent};
use crate::variants::{is_uniform_reject, NonceCache, VariantMode, DEFAULT_NONCE_CACHE_CAPACITY};

pub const MCC: &str = "001";
pub const MNC: &str = "01";
pub const MAX_SUBSCRIBERS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldConfig {
    pub variant: VariantMode,
    pub subscribers: usize,
    pub window: u64,
    pub seed: u64,
    /// Counter provisioned on both sides for every subscriber.
    pub initial_sqn: u64,
    pub sn_name: String,
    pub nonce_cache_capacity: usize,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            variant: VariantMode::Baseline,
            subscribers: 2,
            window: DEFAULT_WINDOW,
            seed: 0,
            initial_sqn: 0,
            sn_name: DEFAULT_SN_NAME.to_owned(),
            nonce_cache_capacity: DEFAULT_NONCE_CACHE_CAPACITY,
        }
    }
}

/// Result of the HN's registration handling as seen on the SN.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Registration {
    Challenge {
        handle: SessionHandle,
        request: ProtocolMessage,
    },
    Rejected(ProtocolMessage),
}

/// Network-side judgement of one UE reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjudication {
    pub outcome: AuthOutcome,
    /// RAND of the challenge, when the SN held the session.
    pub rand: Option<[u8; RAND_LEN]>,
    /// AUTS carried by a synch-failure, after any envelope was opened.
    pub auts: Option<Auts>,
}

#[derive(Debug)]
pub struct World {
    config: WorldConfig,
    hn: HomeNetwork,
    sn: ServingNetwork,
    ues: Vec<UeState>,
    ue_rngs: Vec<ChaCha20Rng>,
    hn_rng: ChaCha20Rng,
    sn_rng: ChaCha20Rng,
    tap: Option<ChannelTap>,
    transcript: Transcript,
}

fn msin_digits(index: usize) -> String {
    format!("{:010}", index + 1)
}

impl World {
    /// Provision keys, identities and per-actor RNG streams from the seed.
    pub fn new(config: WorldConfig) -> Result<Self, ProtocolError> {
        if config.subscribers == 0 || config.subscribers > MAX_SUBSCRIBERS {
            return Err(ProtocolError::Config(format!(
                "subscriber count must be in 1..={MAX_SUBSCRIBERS}, got {}",
                config.subscribers
            )));
        }
        if config.initial_sqn >= Sqn::MAX / 2 {
            return Err(ProtocolError::Config("initial sequence number too large".into()));
        }
        if config.nonce_cache_capacity == 0 {
            return Err(ProtocolError::Config("nonce cache capacity must be positive".into()));
        }
        let mut master = ChaCha20Rng::seed_from_u64(config.seed);
        let keys = KeyPair::generate(&mut master);
        let hn_public = *keys.public();
        let mut hn =
            HomeNetwork::new(keys, config.variant).with_nonce_cache(NonceCache::new(config.nonce_cache_capacity));
        let mut ues = Vec::with_capacity(config.subscribers);
        let mut ue_rngs = Vec::with_capacity(config.subscribers);
        for i in 0..config.subscribers {
            let supi = SupiIdentity::new(MCC, MNC, &msin_digits(i))?;
            let k: [u8; 16] = master.gen();
            hn.add_subscriber(SubscriberRecord {
                supi: supi.clone(),
                k: LongTermKey::new(k),
                sqn_hn: Sqn::new(config.initial_sqn),
            });
            ues.push(UeState::new(
                supi,
                LongTermKey::new(k),
                Sqn::new(config.initial_sqn),
                config.window,
                config.variant,
                hn_public,
            )?);
            ue_rngs.push(ChaCha20Rng::from_seed(master.gen()));
        }
        let hn_rng = ChaCha20Rng::from_seed(master.gen());
        let sn_rng = ChaCha20Rng::from_seed(master.gen());
        Ok(Self {
            sn: ServingNetwork::new(config.sn_name.clone()),
            config,
            hn,
            ues,
            ue_rngs,
            hn_rng,
            sn_rng,
            tap: None,
            transcript: Transcript::new(),
        })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn variant(&self) -> VariantMode {
        self.config.variant
    }

    pub fn ue_count(&self) -> usize {
        self.ues.len()
    }

    /// # Panics
    /// If `index` is out of range.
    pub fn ue(&self, index: usize) -> &UeState {
        &self.ues[index]
    }

    pub fn hn(&self) -> &HomeNetwork {
        &self.hn
    }

    pub fn hn_mut(&mut self) -> &mut HomeNetwork {
        &mut self.hn
    }

    pub fn sn(&self) -> &ServingNetwork {
        &self.sn
    }

    pub fn hn_sqn(&self, ue: usize) -> Result<Sqn, ProtocolError> {
        let msin = self.checked_ue(ue)?.supi().msin;
        Ok(self
            .hn
            .subscriber(&msin)
            .ok_or(ProtocolError::SubscriberNotFound)?
            .sqn_hn)
    }

    /// Overwrite the HN counter of one subscriber.
    pub fn set_hn_sqn(&mut self, ue: usize, sqn: Sqn) -> Result<(), ProtocolError> {
        let msin = self.checked_ue(ue)?.supi().msin;
        self.hn
            .subscriber_mut(&msin)
            .ok_or(ProtocolError::SubscriberNotFound)?
            .sqn_hn = sqn;
        Ok(())
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn take_transcript(&mut self) -> Transcript {
        std::mem::take(&mut self.transcript)
    }

    /// The tap, attaching an idle one if none is present.
    pub fn tap(&mut self) -> &mut ChannelTap {
        self.tap.get_or_insert_with(ChannelTap::new)
    }

    pub fn tap_ref(&self) -> Option<&ChannelTap> {
        self.tap.as_ref()
    }

    pub fn detach_tap(&mut self) -> Option<ChannelTap> {
        self.tap.take()
    }

    /// Most recent frame that crossed the air interface.
    pub fn last_air_event(&self) -> Option<&TranscriptEvent> {
        self.transcript.events().iter().rev().find(|e| e.direction.is_air())
    }

    fn checked_ue(&self, ue: usize) -> Result<&UeState, ProtocolError> {
        self.ues
            .get(ue)
            .ok_or_else(|| ProtocolError::Config(format!("no UE with index {ue}")))
    }

    fn air(&mut self, direction: Direction, frame: Vec<u8>, injected: bool) -> Result<ProtocolMessage, ProtocolError> {
        let seq = self.transcript.len();
        let (frame, substituted) = match self.tap.as_mut() {
            Some(tap) if !injected => tap.intercept(direction, seq, frame),
            _ => (frame, false),
        };
        let event = self
            .transcript
            .record_frame(direction, frame, injected || substituted)
            .clone();
        let msg = decode_message(&event.frame)?;
        if let Some(tap) = self.tap.as_mut() {
            tap.observe(event);
        }
        Ok(msg)
    }

    fn backhaul(&mut self, msg: &ProtocolMessage) {
        self.transcript
            .record_frame(Direction::SnHn, encode_message(msg), false);
    }

    fn record_security_events(&mut self) {
        for event in self.hn.drain_security_log() {
            match event {
                SecurityEvent::NonceReuse { supi, nonce } => {
                    self.transcript.record_note(
                        EventKind::NonceReuse,
                        format!("nonce-reuse supi={supi} nonce={}", hex::encode(nonce)),
                    );
                }
            }
        }
    }

    /// UE sends a registration request; the HN answers with a challenge the
    /// SN now holds, or with a reject.
    pub fn register(&mut self, ue: usize) -> Result<Registration, ProtocolError> {
        self.checked_ue(ue)?;
        let request = self.ues[ue].build_registration(&mut self.ue_rngs[ue])?;
        let request = self.air(Direction::UeToSn, encode_message(&request), false)?;
        self.backhaul(&request);
        let outcome = self
            .hn
            .handle_registration(&mut self.hn_rng, &request, &self.config.sn_name);
        self.record_security_events();
        match outcome? {
            RegistrationOutcome::Challenge(vector) => {
                self.backhaul(&vector.request());
                let (handle, request) = self.sn.forward_and_hold(&mut self.sn_rng, vector);
                Ok(Registration::Challenge { handle, request })
            }
            RegistrationOutcome::Rejected(frame) => {
                self.backhaul(&frame);
                Ok(Registration::Rejected(frame))
            }
        }
    }

    /// SN sends `msg` to the UE; returns the UE's reply after it crossed the air.
    pub fn deliver(&mut self, ue: usize, msg: &ProtocolMessage) -> Result<Option<ProtocolMessage>, ProtocolError> {
        self.checked_ue(ue)?;
        let msg = self.air(Direction::SnToUe, encode_message(msg), false)?;
        self.ue_reply(ue, &msg)
    }

    fn ue_reply(&mut self, ue: usize, msg: &ProtocolMessage) -> Result<Option<ProtocolMessage>, ProtocolError> {
        let sn_name = self.config.sn_name.clone();
        match self.ues[ue].handle_message(&mut self.ue_rngs[ue], msg, &sn_name)? {
            Some(reply) => self.air(Direction::UeToSn, encode_message(&reply), false).map(Some),
            None => Ok(None),
        }
    }

    /// Adversary places `frame` on the downlink toward `ue`. Returns the
    /// event recording the UE's reply, if it sent one.
    pub fn inject_downlink(&mut self, ue: usize, frame: Vec<u8>) -> Result<Option<TranscriptEvent>, ProtocolError> {
        self.checked_ue(ue)?;
        let msg = self.air(Direction::SnToUe, frame, true)?;
        Ok(self
            .ue_reply(ue, &msg)?
            .map(|_| self.transcript.events().last().expect("reply recorded").clone()))
    }

    fn judge(
        &mut self,
        handle: Option<SessionHandle>,
        reply: &ProtocolMessage,
    ) -> Result<(AuthOutcome, Option<Auts>), ProtocolError> {
        match reply {
            ProtocolMessage::AuthenticationResponse { .. } => match handle {
                Some(h) => Ok((self.sn.verify_response(h, reply)?, None)),
                // No held vector to compare against: the UE accepted the challenge.
                None => Ok((AuthOutcome::Ok, None)),
            },
            ProtocolMessage::AuthenticationFailure { cause, auts } => Ok(((*cause).into(), *auts)),
            ProtocolMessage::UniformEnvelope { .. } if is_uniform_reject(reply) => {
                Ok((AuthOutcome::UniformReject, None))
            }
            ProtocolMessage::UniformEnvelope { .. } => {
                self.backhaul(reply);
                match self.hn.open_envelope(reply)? {
                    inner @ ProtocolMessage::UniformEnvelope { .. } => Err(ProtocolError::UnexpectedMessage {
                        expected: "authentication-response",
                        got: inner.name(),
                    }),
                    inner => self.judge(handle, &inner),
                }
            }
            other => Err(ProtocolError::UnexpectedMessage {
                expected: "authentication-response",
                got: other.name(),
            }),
        }
    }

    /// SN verdict on the reply to a held challenge. Closes the session and
    /// records a verdict event.
    pub fn adjudicate(
        &mut self,
        handle: SessionHandle,
        reply: &ProtocolMessage,
    ) -> Result<Adjudication, ProtocolError> {
        let rand = self.sn.session(handle).ok_or(ProtocolError::UnknownSession)?.rand;
        let judged = self.judge(Some(handle), reply);
        self.sn.close(handle);
        let (outcome, auts) = judged?;
        self.transcript.record_verdict(outcome);
        Ok(Adjudication {
            outcome,
            rand: Some(rand),
            auts,
        })
    }

    /// Verdict on a reply for which the SN holds no session, such as the
    /// answer to an injected challenge.
    pub fn judge_unsolicited(&mut self, reply: &ProtocolMessage) -> Result<Adjudication, ProtocolError> {
        let (outcome, auts) = self.judge(None, reply)?;
        self.transcript.record_verdict(outcome);
        Ok(Adjudication {
            outcome,
            rand: None,
            auts,
        })
    }

    fn reject_verdict(&mut self) -> Adjudication {
        self.transcript.record_verdict(AuthOutcome::UniformReject);
        Adjudication {
            outcome: AuthOutcome::UniformReject,
            rand: None,
            auts: None,
        }
    }

    /// One full exchange: registration, challenge, reply, verdict.
    pub fn authenticate(&mut self, ue: usize) -> Result<Adjudication, ProtocolError> {
        match self.register(ue)? {
            Registration::Challenge { handle, request } => {
                let reply = self.deliver(ue, &request)?.ok_or(ProtocolError::UnexpectedMessage {
                    expected: "authentication-response",
                    got: "nothing",
                })?;
                self.adjudicate(handle, &reply)
            }
            Registration::Rejected(frame) => {
                self.deliver(ue, &frame)?;
                Ok(self.reject_verdict())
            }
        }
    }

    /// Forward the AUTS of a synch-failure to the HN and run the fresh
    /// challenge it issues.
    pub fn resynchronize(&mut self, ue: usize, failed: &Adjudication) -> Result<Adjudication, ProtocolError> {
        let auts = failed
            .auts
            .ok_or(ProtocolError::ResyncRejected("no AUTS in the failed attempt"))?;
        let rand = failed.rand.ok_or(ProtocolError::UnknownChallenge)?;
        self.backhaul(&ProtocolMessage::AuthenticationFailure {
            cause: FailureCause::SynchFailure,
            auts: Some(auts),
        });
        let vector = self
            .hn
            .handle_auts(&mut self.hn_rng, &auts, &rand, &self.config.sn_name)?;
        self.backhaul(&vector.request());
        let (handle, request) = self.sn.forward_and_hold(&mut self.sn_rng, vector);
        let reply = self.deliver(ue, &request)?.ok_or(ProtocolError::UnexpectedMessage {
            expected: "authentication-response",
            got: "nothing",
        })?;
        self.adjudicate(handle, &reply)
    }

    /// Registration whose challenge never reaches the UE: the HN still
    /// spends a vector.
    pub fn drop_challenge(&mut self, ue: usize) -> Result<(), ProtocolError> {
        if let Registration::Challenge { handle, .. } = self.register(ue)? {
            self.sn.close(handle);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(variant: VariantMode) -> World {
        World::new(WorldConfig {
            variant,
            ..WorldConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn honest_run_event_sequence() {
        let mut w = world(VariantMode::Baseline);
        assert_eq!(w.authenticate(0).unwrap().outcome, AuthOutcome::Ok);
        let e = w.transcript().events();
        let shape: Vec<_> = e.iter().map(|e| (e.direction, e.tag)).collect();
        assert_eq!(
            shape,
            vec![
                (Direction::UeToSn, 0x01),
                (Direction::SnHn, 0x01),
                (Direction::SnHn, 0x02),
                (Direction::SnToUe, 0x02),
                (Direction::UeToSn, 0x03),
                (Direction::Local, 0),
            ]
        );
        assert_eq!(w.ue(0).sqn(), Sqn::new(1));
        assert_eq!(w.hn_sqn(0).unwrap(), Sqn::new(1));
    }

    #[test]
    fn every_variant_completes_with_three_air_frames() {
        for v in VariantMode::ALL {
            let mut w = world(v);
            for _ in 0..3 {
                assert_eq!(w.authenticate(1).unwrap().outcome, AuthOutcome::Ok, "{v}");
            }
            let air = w.transcript().events().iter().filter(|e| e.direction.is_air()).count();
            assert_eq!(air, 9, "{v}");
        }
    }

    #[test]
    fn same_seed_same_transcript() {
        let run = |seed| {
            let mut w = World::new(WorldConfig {
                seed,
                ..WorldConfig::default()
            })
            .unwrap();
            w.authenticate(0).unwrap();
            w.authenticate(1).unwrap();
            w.take_transcript()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn resync_after_gap() {
        let mut w = world(VariantMode::Baseline);
        w.set_hn_sqn(0, Sqn::new(100)).unwrap();
        let failed = w.authenticate(0).unwrap();
        assert_eq!(failed.outcome, AuthOutcome::SynchFailure);
        assert_eq!(w.resynchronize(0, &failed).unwrap().outcome, AuthOutcome::Ok);
        assert_eq!(w.authenticate(0).unwrap().outcome, AuthOutcome::Ok);
    }

    #[test]
    fn resync_through_envelopes() {
        for v in [
            VariantMode::EncFailure,
            VariantMode::EncResponse,
            VariantMode::NonceInAuts,
        ] {
            let mut w = world(v);
            w.set_hn_sqn(0, Sqn::new(500)).unwrap();
            let failed = w.authenticate(0).unwrap();
            assert_eq!(failed.outcome, AuthOutcome::SynchFailure, "{v}");
            assert!(failed.auts.is_some());
            assert_eq!(w.resynchronize(0, &failed).unwrap().outcome, AuthOutcome::Ok, "{v}");
        }
    }

    #[test]
    fn dropped_challenges_advance_hn_only() {
        let mut w = world(VariantMode::Baseline);
        for _ in 0..5 {
            w.drop_challenge(0).unwrap();
        }
        assert_eq!(w.hn_sqn(0).unwrap(), Sqn::new(5));
        assert_eq!(w.ue(0).sqn(), Sqn::new(0));
        assert_eq!(w.authenticate(0).unwrap().outcome, AuthOutcome::Ok);
        assert_eq!(w.ue(0).sqn(), Sqn::new(6));
    }

    #[test]
    fn config_validation() {
        assert!(World::new(WorldConfig {
            subscribers: 0,
            ..WorldConfig::default()
        })
        .is_err());
        assert!(World::new(WorldConfig {
            window: 0,
            ..WorldConfig::default()
        })
        .is_err());
        assert!(world(VariantMode::Baseline).authenticate(5).is_err());
    }
}
