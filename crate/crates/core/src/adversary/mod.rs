//! Active radio adversary: capture, replay and substitution on the UE-SN
//! link, and the three linkability attacks built on them.
//!
//! Verdicts are computed from what crosses the air only: the frame tag, its
//! length and any cleartext failure cause. The deployed variant is public
//! configuration and may be used to interpret those fields.

mod tap;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use tap::{CaptureId, CapturedFrame, ChannelTap, TagPredicate};

use crate::crypto::{xor, SQN_LEN};
use crate::network::World;
use crate::protocol::{
    AuthOutcome, FailureCause, ProtocolError, ProtocolMessage, Sqn, TAG_AUTHENTICATION_FAILURE,
    TAG_AUTHENTICATION_REQUEST, TAG_AUTHENTICATION_RESPONSE, TAG_REGISTRATION_REQUEST, TAG_UNIFORM_ENVELOPE,
};
use crate::transcript::TranscriptEvent;
use crate::variants::VariantMode;

/// Largest search space accepted by [`infer_sqn`].
pub const MAX_INFERENCE_BOUND: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdversaryError {
    #[error("capture timeout: no matching frame crossed the tap")]
    CaptureTimeout,
    #[error("attack failed: {0}")]
    AttackFailed(String),
    #[error("invalid argument: {0}")]
    Argument(&'static str),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackVerdict {
    SameSubscriber,
    DifferentSubscriber,
    Indeterminate,
}

impl AttackVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SameSubscriber => "same-subscriber",
            Self::DifferentSubscriber => "different-subscriber",
            Self::Indeterminate => "indeterminate",
        }
    }
}

impl fmt::Display for AttackVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    FailureMessage,
    SuciReplay,
    AutsDifferential,
}

impl AttackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::FailureMessage => "failure-message",
            Self::SuciReplay => "suci-replay",
            Self::AutsDifferential => "auts-differential",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Self::FailureMessage, Self::SuciReplay, Self::AutsDifferential]
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown attack {s:?} (expected failure-message, suci-replay or auts-differential)"))
    }
}

/// The adversary-visible projection of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Observation {
    pub tag: u8,
    pub length: usize,
    pub cause: Option<FailureCause>,
}

impl Observation {
    pub fn of_frame(frame: &[u8]) -> Self {
        let tag = frame.first().copied().unwrap_or(0);
        let cause = match tag {
            TAG_AUTHENTICATION_FAILURE => frame.get(1).copied().and_then(FailureCause::from_code),
            _ => None,
        };
        Self {
            tag,
            length: frame.len(),
            cause,
        }
    }

    pub fn of(event: &TranscriptEvent) -> Self {
        Self::of_frame(&event.frame)
    }
}

/// What a reply reveals about the authentication it answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplyClass {
    Success,
    /// A failure; the cause is `None` when it travels encrypted.
    Failure(Option<FailureCause>),
    Opaque,
}

pub fn classify(variant: VariantMode, obs: &Observation) -> ReplyClass {
    match obs.tag {
        TAG_AUTHENTICATION_RESPONSE => ReplyClass::Success,
        TAG_AUTHENTICATION_FAILURE => ReplyClass::Failure(obs.cause),
        // Only failures are enveloped in this mode, so the envelope itself
        // says "failure".
        TAG_UNIFORM_ENVELOPE if variant == VariantMode::EncFailure => ReplyClass::Failure(None),
        _ => ReplyClass::Opaque,
    }
}

/// Decision rule for a replayed challenge: synch-failure means the key
/// matched, mac-failure means it did not.
pub fn failure_message_verdict(class: ReplyClass) -> AttackVerdict {
    match class {
        ReplyClass::Success | ReplyClass::Failure(Some(FailureCause::SynchFailure)) => AttackVerdict::SameSubscriber,
        ReplyClass::Failure(Some(FailureCause::MacFailure)) => AttackVerdict::DifferentSubscriber,
        ReplyClass::Failure(None) | ReplyClass::Opaque => AttackVerdict::Indeterminate,
    }
}

/// Decision rule for a substituted SUCI: with the gap in-window a success
/// means the probe owns the SUCI, and any failure means it does not.
pub fn suci_replay_verdict(class: ReplyClass) -> AttackVerdict {
    match class {
        ReplyClass::Success | ReplyClass::Failure(Some(FailureCause::SynchFailure)) => AttackVerdict::SameSubscriber,
        ReplyClass::Failure(Some(FailureCause::MacFailure)) | ReplyClass::Failure(None) => {
            AttackVerdict::DifferentSubscriber
        }
        ReplyClass::Opaque => AttackVerdict::Indeterminate,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackReport {
    pub verdict: AttackVerdict,
    /// The probe's reply (or the reject it received) as logged.
    pub reply: TranscriptEvent,
    pub observation: Observation,
    /// Transcript indices of the captured frame and the observed reply.
    pub evidence: Vec<usize>,
}

/// Run an honest authentication for `ue` and keep the first frame whose tag
/// matches.
pub fn capture(world: &mut World, ue: usize, predicate: TagPredicate) -> Result<CapturedFrame, AdversaryError> {
    let id = world.tap().arm_capture(predicate);
    let attempt = world.authenticate(ue);
    let captured = world.tap().take_capture(id);
    attempt?;
    captured
}

/// Inject `captured` toward `target` and return the logged reply.
pub fn replay_to(
    world: &mut World,
    captured: &CapturedFrame,
    target: usize,
) -> Result<TranscriptEvent, AdversaryError> {
    world
        .inject_downlink(target, captured.bytes.clone())?
        .ok_or_else(|| AdversaryError::AttackFailed("target sent no reply".into()))
}

/// Arm a swap of the next uplink registration for `captured`.
pub fn substitute_suci(world: &mut World, captured: &CapturedFrame) -> Result<(), AdversaryError> {
    world.tap().arm_substitute_suci(captured)
}

/// Capture a challenge from the victim's session and replay it to the probe.
pub fn attack_failure_message(world: &mut World, victim: usize, probe: usize) -> Result<AttackReport, AdversaryError> {
    let captured = capture(world, victim, |t| t == TAG_AUTHENTICATION_REQUEST)?;
    let reply = replay_to(world, &captured, probe)?;
    let observation = Observation::of(&reply);
    Ok(AttackReport {
        verdict: failure_message_verdict(classify(world.variant(), &observation)),
        evidence: vec![captured.seq, reply.seq],
        reply,
        observation,
    })
}

/// Capture the victim's SUCI and substitute it into the probe's next
/// registration, with the challenge in-window.
pub fn attack_suci_replay(world: &mut World, victim: usize, probe: usize) -> Result<AttackReport, AdversaryError> {
    attack_suci_replay_after(world, victim, probe, 0)
}

/// As [`attack_suci_replay`], with `dropped` victim registrations whose
/// challenges are suppressed between capture and replay.
pub fn attack_suci_replay_after(
    world: &mut World,
    victim: usize,
    probe: usize,
    dropped: u64,
) -> Result<AttackReport, AdversaryError> {
    let captured = capture(world, victim, |t| t == TAG_REGISTRATION_REQUEST)?;
    for _ in 0..dropped {
        world.drop_challenge(victim)?;
    }
    substitute_suci(world, &captured)?;
    let armed = world.tap().armed();
    world.authenticate(probe)?;
    if world.tap().armed() == armed {
        world.tap().disarm_all();
        return Err(AdversaryError::AttackFailed("substitution did not fire".into()));
    }
    let reply = world
        .last_air_event()
        .filter(|e| e.seq > captured.seq)
        .cloned()
        .ok_or_else(|| AdversaryError::AttackFailed("no frame observed after substitution".into()))?;
    let observation = Observation::of(&reply);
    Ok(AttackReport {
        verdict: suci_replay_verdict(classify(world.variant(), &observation)),
        evidence: vec![captured.seq, reply.seq],
        reply,
        observation,
    })
}

/// One AUTS differential: `CONC xor CONC'` for two counters `gap` apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AutsSample {
    pub differential: [u8; SQN_LEN],
    pub gap: u64,
}

fn replayed_conc(world: &mut World, captured: &CapturedFrame, victim: usize) -> Result<[u8; SQN_LEN], AdversaryError> {
    let reply = replay_to(world, captured, victim)?;
    match reply.message().map_err(ProtocolError::from)? {
        ProtocolMessage::AuthenticationFailure { auts: Some(auts), .. } => Ok(auts.conc),
        other => Err(AdversaryError::AttackFailed(format!(
            "replay answered with {} instead of AUTS",
            other.name()
        ))),
    }
}

/// Replay one captured challenge, run `gap` honest sessions, replay again,
/// and return the xor of the two concealed counters.
pub fn attack_auts_differential(world: &mut World, victim: usize, gap: u64) -> Result<[u8; SQN_LEN], AdversaryError> {
    Ok(attack_auts_series(world, victim, &[gap])?[0].differential)
}

/// Differentials against a single base replay. `offsets` are cumulative
/// honest-session counts since the base and must be non-decreasing.
pub fn attack_auts_series(
    world: &mut World,
    victim: usize,
    offsets: &[u64],
) -> Result<Vec<AutsSample>, AdversaryError> {
    if offsets.is_empty() {
        return Err(AdversaryError::Argument("no offsets given"));
    }
    if offsets.windows(2).any(|w| w[1] < w[0]) {
        return Err(AdversaryError::Argument("offsets must be non-decreasing"));
    }
    let captured = capture(world, victim, |t| t == TAG_AUTHENTICATION_REQUEST)?;
    let base = replayed_conc(world, &captured, victim)?;
    let mut done = 0;
    let mut samples = Vec::with_capacity(offsets.len());
    for &offset in offsets {
        for _ in done..offset {
            let outcome = world.authenticate(victim)?.outcome;
            if outcome != AuthOutcome::Ok {
                return Err(AdversaryError::AttackFailed(format!(
                    "interleaved session ended in {outcome}"
                )));
            }
        }
        done = offset;
        samples.push(AutsSample {
            differential: xor(&base, &replayed_conc(world, &captured, victim)?),
            gap: offset,
        });
    }
    Ok(samples)
}

/// Counters `s < bound` consistent with every sample, where a sample with
/// gap `g` requires `s xor (s + g)` to equal its differential.
pub fn infer_sqn(samples: &[AutsSample], bound: u64) -> Result<Vec<u64>, AdversaryError> {
    if samples.is_empty() {
        return Err(AdversaryError::Argument("no samples"));
    }
    if bound > MAX_INFERENCE_BOUND {
        return Err(AdversaryError::Argument("bound exceeds 2^20"));
    }
    let wanted: Vec<(u64, u64)> = samples
        .iter()
        .map(|s| (Sqn::from_bytes(s.differential).value(), s.gap))
        .collect();
    Ok((0..bound)
        .filter(|&s| wanted.iter().all(|&(d, g)| (s ^ (s + g)) & Sqn::MAX == d))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::WorldConfig;

    fn world(variant: VariantMode, subscribers: usize, seed: u64) -> World {
        World::new(WorldConfig {
            variant,
            subscribers,
            seed,
            ..WorldConfig::default()
        })
        .unwrap()
    }

    fn sample(a: u64, b: u64) -> AutsSample {
        AutsSample {
            differential: Sqn::new(a ^ b).to_bytes(),
            gap: b - a,
        }
    }

    #[test]
    fn captured_challenge_is_33_bytes() {
        let mut w = world(VariantMode::Baseline, 2, 1);
        let c = capture(&mut w, 0, |t| t == TAG_AUTHENTICATION_REQUEST).unwrap();
        assert_eq!(c.len(), 33);
        let c = capture(&mut w, 0, |t| t == TAG_REGISTRATION_REQUEST).unwrap();
        assert_eq!(c.tag(), 0x01);
        assert_eq!(capture(&mut w, 0, |_| false), Err(AdversaryError::CaptureTimeout));
    }

    #[test]
    fn baseline_replay_causes() {
        let mut w = world(VariantMode::Baseline, 2, 2);
        let c = capture(&mut w, 0, |t| t == TAG_AUTHENTICATION_REQUEST).unwrap();
        let same = Observation::of(&replay_to(&mut w, &c, 0).unwrap());
        let diff = Observation::of(&replay_to(&mut w, &c, 1).unwrap());
        assert_eq!(same.cause, Some(FailureCause::SynchFailure));
        assert_eq!(diff.cause, Some(FailureCause::MacFailure));
    }

    #[test]
    fn nonce_mode_replies_are_uniform() {
        let mut w = world(VariantMode::NonceInSuci, 2, 3);
        let c = capture(&mut w, 0, |t| t == TAG_AUTHENTICATION_REQUEST).unwrap();
        let a = replay_to(&mut w, &c, 0).unwrap();
        let b = replay_to(&mut w, &c, 1).unwrap();
        assert_eq!(a.tag, TAG_UNIFORM_ENVELOPE);
        assert_eq!(a.frame, b.frame);
    }

    #[test]
    fn attack_verdicts() {
        let mut w = world(VariantMode::Baseline, 3, 4);
        assert_eq!(
            attack_failure_message(&mut w, 0, 0).unwrap().verdict,
            AttackVerdict::SameSubscriber
        );
        assert_eq!(
            attack_failure_message(&mut w, 0, 2).unwrap().verdict,
            AttackVerdict::DifferentSubscriber
        );
        assert_eq!(
            attack_suci_replay(&mut w, 1, 1).unwrap().verdict,
            AttackVerdict::SameSubscriber
        );
        assert_eq!(
            attack_suci_replay(&mut w, 1, 2).unwrap().verdict,
            AttackVerdict::DifferentSubscriber
        );

        let mut w = world(VariantMode::EncResponse, 3, 4);
        assert_eq!(
            attack_suci_replay(&mut w, 0, 0).unwrap().verdict,
            AttackVerdict::Indeterminate
        );
        assert_eq!(
            attack_failure_message(&mut w, 0, 1).unwrap().verdict,
            AttackVerdict::Indeterminate
        );
    }

    #[test]
    fn differential_examples() {
        let mut w = world(VariantMode::Baseline, 1, 5);
        assert_eq!(attack_auts_differential(&mut w, 0, 0).unwrap(), [0; 6]);

        // Victim accepts counter 5 during capture, then one honest session.
        let mut w = World::new(WorldConfig {
            subscribers: 1,
            initial_sqn: 4,
            ..WorldConfig::default()
        })
        .unwrap();
        assert_eq!(attack_auts_differential(&mut w, 0, 1).unwrap(), [0, 0, 0, 0, 0, 3]);

        let mut w = world(VariantMode::EncFailure, 1, 5);
        assert!(matches!(
            attack_auts_differential(&mut w, 0, 1),
            Err(AdversaryError::AttackFailed(_))
        ));
    }

    #[test]
    fn inference_examples() {
        let one = infer_sqn(&[sample(5, 6)], 1 << 16).unwrap();
        assert!(one.contains(&5));
        let two = infer_sqn(&[sample(5, 6), sample(5, 8)], 1 << 16).unwrap();
        assert!(two.contains(&5));
        assert!(two.len() < one.len());
        let contradictory = [
            AutsSample {
                differential: [0, 0, 0, 0, 0, 1],
                gap: 1,
            },
            AutsSample {
                differential: [0, 0, 0, 0, 0, 3],
                gap: 1,
            },
        ];
        assert!(infer_sqn(&contradictory, 1 << 16).unwrap().is_empty());
        assert!(infer_sqn(&[], 16).is_err());
        assert!(infer_sqn(&[sample(5, 6)], (1 << 20) + 1).is_err());
    }

    #[test]
    fn attack_kind_strings() {
        for k in [
            AttackKind::FailureMessage,
            AttackKind::SuciReplay,
            AttackKind::AutsDifferential,
        ] {
            assert_eq!(k.as_str().parse::<AttackKind>().unwrap(), k);
        }
        assert!("dos".parse::<AttackKind>().is_err());
    }
}
