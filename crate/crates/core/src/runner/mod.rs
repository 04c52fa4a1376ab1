//! Scenario orchestration: configuration, scripted runs, the outcome
//! matrix and transcript files.

mod matrix;

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use matrix::{
    check_matrix, emit_outcome_matrix, expected_outcome, matrix_configs, run_matrix, MatrixReport, EXPECTED_OUTCOMES,
    MATRIX_LABELS,
};

use crate::adversary::{
    attack_auts_series, attack_failure_message, attack_suci_replay_after, infer_sqn, AdversaryError, AttackVerdict,
};
use crate::network::{World, WorldConfig};
use crate::protocol::{AuthOutcome, ProtocolError, ProtocolMessage, DEFAULT_WINDOW};
use crate::transcript::{last_outcome, Direction, EventKind, TranscriptEvent};
use crate::variants::VariantMode;

/// Search bound used when a scenario reports SQN candidates.
pub const SCENARIO_INFERENCE_BOUND: u64 = 1 << 16;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error("scenario produced no verdict")]
    NoVerdict,
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl RunnerError {
    pub fn is_config(&self) -> bool {
        matches!(self, Self::Config(_) | Self::Protocol(ProtocolError::Config(_)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioId {
    #[default]
    Normal,
    ReplayAuthSame,
    ReplayAuthDiff,
    ReplaySuciSame,
    ReplaySuciDiff,
    AutsAttack,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 6] = [
        Self::Normal,
        Self::ReplayAuthSame,
        Self::ReplayAuthDiff,
        Self::ReplaySuciSame,
        Self::ReplaySuciDiff,
        Self::AutsAttack,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::ReplayAuthSame => "replay-auth-same",
            Self::ReplayAuthDiff => "replay-auth-diff",
            Self::ReplaySuciSame => "replay-suci-same",
            Self::ReplaySuciDiff => "replay-suci-diff",
            Self::AutsAttack => "auts-attack",
        }
    }

    fn needs_second_subscriber(self) -> bool {
        matches!(self, Self::ReplayAuthDiff | Self::ReplaySuciDiff)
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                format!("unknown scenario {s:?} (expected normal, replay-auth-same, replay-auth-diff, replay-suci-same, replay-suci-diff or auts-attack)")
            })
    }
}

/// One scenario run. Keys are kebab-case in TOML, mirroring the CLI flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub variant: VariantMode,
    pub scenario: ScenarioId,
    pub seed: u64,
    pub subscribers: usize,
    pub window: u64,
    /// Victim registrations whose challenges are dropped between SUCI
    /// capture and replay.
    pub suci_gap: u64,
    /// Honest sessions between the two replays of the AUTS attack.
    pub auts_gap: u64,
    pub initial_sqn: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            variant: VariantMode::Baseline,
            scenario: ScenarioId::Normal,
            seed: 0,
            subscribers: 2,
            window: DEFAULT_WINDOW,
            suci_gap: 0,
            auts_gap: 1,
            initial_sqn: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, RunnerError> {
        toml::from_str(s).map_err(|e| RunnerError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunnerError> {
        let text = fs::read_to_string(path)
            .map_err(|e| RunnerError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        if self.window == 0 {
            return Err(RunnerError::Config("window must be at least 1".into()));
        }
        if self.subscribers == 0 {
            return Err(RunnerError::Config("at least one subscriber is required".into()));
        }
        if self.scenario.needs_second_subscriber() && self.subscribers < 2 {
            return Err(RunnerError::Config(format!(
                "{} needs at least two subscribers",
                self.scenario
            )));
        }
        Ok(())
    }

    pub fn world_config(&self) -> WorldConfig {
        WorldConfig {
            variant: self.variant,
            subscribers: self.subscribers,
            window: self.window,
            seed: self.seed,
            initial_sqn: self.initial_sqn,
            ..WorldConfig::default()
        }
    }

    /// Matrix row label. The SUCI replay to the same UE is split by whether
    /// the replayed challenge lands in the acceptance window.
    pub fn label(&self) -> String {
        match self.scenario {
            ScenarioId::ReplaySuciSame if self.suci_gap >= self.window => "replay-suci-same/out-of-window".into(),
            ScenarioId::ReplaySuciSame => "replay-suci-same/in-window".into(),
            other => other.as_str().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub scenario: String,
    pub variant: VariantMode,
    pub outcome: AuthOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<AttackVerdict>,
    /// The reply behind the final verdict carried an AUTS in clear.
    pub auts_present: bool,
    pub nonce_reuse_logged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

fn victim_reply_has_auts(events: &[TranscriptEvent]) -> bool {
    events
        .iter()
        .rev()
        .find(|e| e.direction == Direction::UeToSn)
        .and_then(|e| e.message().ok())
        .is_some_and(|m| matches!(m, ProtocolMessage::AuthenticationFailure { auts: Some(_), .. }))
}

/// Execute one scripted scenario. UE 0 is the victim and UE 1 the other
/// subscriber. The outcome is read back from the transcript.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(Vec<TranscriptEvent>, OutcomeRow), RunnerError> {
    cfg.validate()?;
    let started = Instant::now();
    let mut world = World::new(cfg.world_config())?;
    let mut verdict = None;
    let mut detail = None;
    match cfg.scenario {
        ScenarioId::Normal => {
            world.authenticate(0)?;
        }
        ScenarioId::ReplayAuthSame | ScenarioId::ReplayAuthDiff => {
            let probe = usize::from(cfg.scenario == ScenarioId::ReplayAuthDiff);
            let report = attack_failure_message(&mut world, 0, probe)?;
            world.judge_unsolicited(&report.reply.message().map_err(ProtocolError::from)?)?;
            verdict = Some(report.verdict);
        }
        ScenarioId::ReplaySuciSame | ScenarioId::ReplaySuciDiff => {
            let probe = usize::from(cfg.scenario == ScenarioId::ReplaySuciDiff);
            verdict = Some(attack_suci_replay_after(&mut world, 0, probe, cfg.suci_gap)?.verdict);
        }
        ScenarioId::AutsAttack => {
            let attack = attack_auts_series(&mut world, 0, &[cfg.auts_gap]);
            let reply = world.last_air_event().cloned().ok_or(RunnerError::NoVerdict)?;
            world.judge_unsolicited(&reply.message().map_err(ProtocolError::from)?)?;
            detail = Some(match attack {
                Ok(samples) => format!(
                    "differential={} gap={} candidates={}",
                    hex::encode(samples[0].differential),
                    samples[0].gap,
                    infer_sqn(&samples, SCENARIO_INFERENCE_BOUND)?.len()
                ),
                Err(AdversaryError::AttackFailed(reason)) => format!("attack failed: {reason}"),
                Err(e) => return Err(e.into()),
            });
        }
    }
    let events = world.take_transcript().into_events();
    let row = OutcomeRow {
        scenario: cfg.label(),
        variant: cfg.variant,
        outcome: last_outcome(&events).ok_or(RunnerError::NoVerdict)?,
        verdict,
        auts_present: victim_reply_has_auts(&events),
        nonce_reuse_logged: events.iter().any(|e| e.kind == EventKind::NonceReuse),
        detail,
    };
    log::info!(
        "{} / {}: {} in {:.3} ms",
        row.scenario,
        row.variant,
        row.outcome,
        started.elapsed().as_secs_f64() * 1e3
    );
    Ok((events, row))
}

/// One JSON object per line.
pub fn write_transcript(events: &[TranscriptEvent], path: &Path) -> Result<(), RunnerError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for event in events {
        serde_json::to_writer(&mut out, event)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptEvent>, RunnerError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut events = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            events.push(serde_json::from_str(&line)?);
        }
    }
    Ok(events)
}
