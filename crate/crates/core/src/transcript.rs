//! Structured record of everything that crosses a link during a run.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::protocol::{decode_message, AuthOutcome, DecodeError, ProtocolMessage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "ue->sn")]
    UeToSn,
    #[serde(rename = "sn->ue")]
    SnToUe,
    #[serde(rename = "sn<->hn")]
    SnHn,
    /// Actor-local record (verdicts, security events); carries no frame.
    #[serde(rename = "local")]
    Local,
}

impl Direction {
    /// Whether frames in this direction cross the radio link the adversary taps.
    pub fn is_air(self) -> bool {
        matches!(self, Self::UeToSn | Self::SnToUe)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::UeToSn => "ue->sn",
            Self::SnToUe => "sn->ue",
            Self::SnHn => "sn<->hn",
            Self::Local => "local",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Frame,
    Verdict,
    NonceReuse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub seq: usize,
    pub direction: Direction,
    pub kind: EventKind,
    /// Frame tag byte; zero for events without a frame.
    pub tag: u8,
    pub length: usize,
    #[serde(with = "hex::serde")]
    pub frame: Vec<u8>,
    pub summary: String,
    /// Set when the adversary injected or substituted the frame.
    #[serde(default)]
    pub adversarial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<AuthOutcome>,
}

impl TranscriptEvent {
    pub fn message(&self) -> Result<ProtocolMessage, DecodeError> {
        decode_message(&self.frame)
    }
}

/// Append-only event log with sequence numbering.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    events: Vec<TranscriptEvent>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[TranscriptEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<TranscriptEvent> {
        self.events
    }

    pub fn record_frame(&mut self, direction: Direction, frame: Vec<u8>, adversarial: bool) -> &TranscriptEvent {
        let summary = match decode_message(&frame) {
            Ok(m) => m.summary(),
            Err(e) => format!("undecodable frame: {e}"),
        };
        self.push(TranscriptEvent {
            seq: self.events.len(),
            direction,
            kind: EventKind::Frame,
            tag: frame.first().copied().unwrap_or(0),
            length: frame.len(),
            frame,
            summary,
            adversarial,
            outcome: None,
        })
    }

    pub fn record_verdict(&mut self, outcome: AuthOutcome) -> &TranscriptEvent {
        self.push(TranscriptEvent {
            seq: self.events.len(),
            direction: Direction::Local,
            kind: EventKind::Verdict,
            tag: 0,
            length: 0,
            frame: Vec::new(),
            summary: format!("verdict {outcome}"),
            adversarial: false,
            outcome: Some(outcome),
        })
    }

    pub fn record_note(&mut self, kind: EventKind, summary: String) -> &TranscriptEvent {
        self.push(TranscriptEvent {
            seq: self.events.len(),
            direction: Direction::Local,
            kind,
            tag: 0,
            length: 0,
            frame: Vec::new(),
            summary,
            adversarial: false,
            outcome: None,
        })
    }

    fn push(&mut self, event: TranscriptEvent) -> &TranscriptEvent {
        self.events.push(event);
        self.events.last().expect("just pushed")
    }

    /// Outcome of the most recent verdict event.
    pub fn last_outcome(&self) -> Option<AuthOutcome> {
        last_outcome(&self.events)
    }
}

pub fn last_outcome(events: &[TranscriptEvent]) -> Option<AuthOutcome> {
    events
        .iter()
        .rev()
        .find(|e| e.kind == EventKind::Verdict)
        .and_then(|e| e.outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::encode_message;

    #[test]
    fn events_are_numbered_in_order() {
        let mut t = Transcript::new();
        let frame = encode_message(&ProtocolMessage::AuthenticationResponse { res_star: [1; 16] });
        t.record_frame(Direction::UeToSn, frame.clone(), false);
        t.record_verdict(AuthOutcome::Ok);
        let e = t.events();
        assert_eq!(e[0].seq, 0);
        assert_eq!((e[0].tag, e[0].length), (0x03, 17));
        assert!(e[0].summary.starts_with("authentication-response"));
        assert_eq!(e[1].seq, 1);
        assert_eq!(t.last_outcome(), Some(AuthOutcome::Ok));
    }

    #[test]
    fn json_shape() {
        let mut t = Transcript::new();
        t.record_frame(Direction::SnHn, vec![0x03; 17], true);
        t.record_verdict(AuthOutcome::UniformReject);
        let a = serde_json::to_string(&t.events()[0]).unwrap();
        assert!(a.contains(r#""direction":"sn<->hn""#));
        assert!(a.contains(r#""frame":"0303"#));
        assert!(!a.contains("outcome"));
        let b = serde_json::to_string(&t.events()[1]).unwrap();
        assert!(b.contains(r#""outcome":"uniform-reject""#));
        let back: TranscriptEvent = serde_json::from_str(&b).unwrap();
        assert_eq!(&back, &t.events()[1]);
    }
}
