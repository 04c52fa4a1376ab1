use crate::protocol::{decode_message, DecodeError, ProtocolMessage, TAG_REGISTRATION_REQUEST};
use crate::transcript::{Direction, TranscriptEvent};

use super::AdversaryError;

/// Predicate over the frame tag byte.
pub type TagPredicate = fn(u8) -> bool;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CaptureId(usize);

/// A frame stored verbatim as it crossed the air interface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapturedFrame {
    /// Transcript index of the event the frame was taken from.
    pub seq: usize,
    pub direction: Direction,
    pub bytes: Vec<u8>,
}

impl CapturedFrame {
    pub fn tag(&self) -> u8 {
        self.bytes.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn message(&self) -> Result<ProtocolMessage, DecodeError> {
        decode_message(&self.bytes)
    }
}

#[derive(Debug, Clone)]
enum Rule {
    Capture { id: CaptureId, predicate: TagPredicate },
    SubstituteSuci { replacement: Vec<u8> },
}

/// Man-in-the-middle position on the UE-SN link. Each armed rule fires at
/// most once; with no rules armed every frame passes unchanged.
#[derive(Debug, Clone, Default)]
pub struct ChannelTap {
    rules: Vec<Rule>,
    captures: Vec<Option<CapturedFrame>>,
    log: Vec<TranscriptEvent>,
}

impl ChannelTap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Store the next frame whose tag satisfies `predicate`.
    pub fn arm_capture(&mut self, predicate: TagPredicate) -> CaptureId {
        let id = CaptureId(self.captures.len());
        self.captures.push(None);
        self.rules.push(Rule::Capture { id, predicate });
        id
    }

    pub fn take_capture(&mut self, id: CaptureId) -> Result<CapturedFrame, AdversaryError> {
        self.rules
            .retain(|r| !matches!(r, Rule::Capture { id: armed, .. } if *armed == id));
        self.captures
            .get_mut(id.0)
            .and_then(Option::take)
            .ok_or(AdversaryError::CaptureTimeout)
    }

    /// Swap the next uplink registration request for `captured`.
    pub fn arm_substitute_suci(&mut self, captured: &CapturedFrame) -> Result<(), AdversaryError> {
        if captured.tag() != TAG_REGISTRATION_REQUEST {
            return Err(AdversaryError::Argument(
                "substitution needs a captured registration request",
            ));
        }
        self.rules.push(Rule::SubstituteSuci {
            replacement: captured.bytes.clone(),
        });
        Ok(())
    }

    pub fn armed(&self) -> usize {
        self.rules.len()
    }

    pub fn disarm_all(&mut self) {
        self.rules.clear();
    }

    /// Frames that crossed the tap, in order.
    pub fn log(&self) -> &[TranscriptEvent] {
        &self.log
    }

    /// Apply armed rules to a frame about to become transcript event `seq`.
    /// Returns the frame to deliver and whether it was replaced.
    pub fn intercept(&mut self, direction: Direction, seq: usize, mut frame: Vec<u8>) -> (Vec<u8>, bool) {
        let mut substituted = false;
        let mut i = 0;
        while i < self.rules.len() {
            let fired = match &self.rules[i] {
                Rule::SubstituteSuci { replacement }
                    if direction == Direction::UeToSn && frame.first() == Some(&TAG_REGISTRATION_REQUEST) =>
                {
                    frame = replacement.clone();
                    substituted = true;
                    true
                }
                Rule::Capture { id, predicate } if frame.first().is_some_and(|&t| predicate(t)) => {
                    self.captures[id.0] = Some(CapturedFrame {
                        seq,
                        direction,
                        bytes: frame.clone(),
                    });
                    true
                }
                _ => false,
            };
            if fired {
                self.rules.remove(i);
            } else {
                i += 1;
            }
        }
        (frame, substituted)
    }

    pub fn observe(&mut self, event: TranscriptEvent) {
        self.log.push(event);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capture_fires_once() {
        let mut tap = ChannelTap::new();
        let id = tap.arm_capture(|t| t == 0x02);
        assert_eq!(
            tap.intercept(Direction::UeToSn, 0, vec![0x01, 9]),
            (vec![0x01, 9], false)
        );
        assert_eq!(
            tap.intercept(Direction::SnToUe, 1, vec![0x02, 7]),
            (vec![0x02, 7], false)
        );
        tap.intercept(Direction::SnToUe, 2, vec![0x02, 8]);
        let c = tap.take_capture(id).unwrap();
        assert_eq!((c.seq, c.bytes), (1, vec![0x02, 7]));
        assert_eq!(tap.armed(), 0);
        assert_eq!(tap.take_capture(id), Err(AdversaryError::CaptureTimeout));
    }

    #[test]
    fn unmatched_capture_times_out_and_is_disarmed() {
        let mut tap = ChannelTap::new();
        let id = tap.arm_capture(|_| false);
        tap.intercept(Direction::UeToSn, 0, vec![0x01]);
        assert_eq!(tap.take_capture(id), Err(AdversaryError::CaptureTimeout));
        assert_eq!(tap.armed(), 0);
    }

    #[test]
    fn substitution_only_touches_uplink_registration() {
        let mut tap = ChannelTap::new();
        let stale = CapturedFrame {
            seq: 0,
            direction: Direction::UeToSn,
            bytes: vec![0x01, 0xAA],
        };
        tap.arm_substitute_suci(&stale).unwrap();
        assert_eq!(
            tap.intercept(Direction::SnToUe, 0, vec![0x01, 1]),
            (vec![0x01, 1], false)
        );
        assert_eq!(
            tap.intercept(Direction::UeToSn, 1, vec![0x03, 1]),
            (vec![0x03, 1], false)
        );
        assert_eq!(
            tap.intercept(Direction::UeToSn, 2, vec![0x01, 2]),
            (vec![0x01, 0xAA], true)
        );
        assert_eq!(
            tap.intercept(Direction::UeToSn, 3, vec![0x01, 3]),
            (vec![0x01, 3], false)
        );

        let wrong = CapturedFrame {
            bytes: vec![0x02],
            ..stale
        };
        assert!(tap.arm_substitute_suci(&wrong).is_err());
    }
}
