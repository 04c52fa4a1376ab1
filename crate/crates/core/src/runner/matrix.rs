use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::Instant;

use super::{run_scenario, OutcomeRow, RunnerError, ScenarioConfig, ScenarioId};
use crate::protocol::AuthOutcome;
use crate::variants::VariantMode;

/// Row labels of the replay-outcome matrix, in display order.
pub const MATRIX_LABELS: [&str; 6] = [
    "normal",
    "replay-auth-diff",
    "replay-auth-same",
    "replay-suci-diff",
    "replay-suci-same/in-window",
    "replay-suci-same/out-of-window",
];

/// Published outcomes for baseline and nonce-in-suci.
pub const EXPECTED_OUTCOMES: [(&str, VariantMode, AuthOutcome); 12] = [
    ("normal", VariantMode::Baseline, AuthOutcome::Ok),
    ("normal", VariantMode::NonceInSuci, AuthOutcome::Ok),
    ("replay-auth-diff", VariantMode::Baseline, AuthOutcome::MacFailure),
    ("replay-auth-diff", VariantMode::NonceInSuci, AuthOutcome::UniformReject),
    ("replay-auth-same", VariantMode::Baseline, AuthOutcome::SynchFailure),
    ("replay-auth-same", VariantMode::NonceInSuci, AuthOutcome::UniformReject),
    ("replay-suci-diff", VariantMode::Baseline, AuthOutcome::MacFailure),
    ("replay-suci-diff", VariantMode::NonceInSuci, AuthOutcome::UniformReject),
    ("replay-suci-same/in-window", VariantMode::Baseline, AuthOutcome::Ok),
    (
        "replay-suci-same/in-window",
        VariantMode::NonceInSuci,
        AuthOutcome::UniformReject,
    ),
    (
        "replay-suci-same/out-of-window",
        VariantMode::Baseline,
        AuthOutcome::SynchFailure,
    ),
    (
        "replay-suci-same/out-of-window",
        VariantMode::NonceInSuci,
        AuthOutcome::UniformReject,
    ),
];

pub fn expected_outcome(label: &str, variant: VariantMode) -> Option<AuthOutcome> {
    EXPECTED_OUTCOMES
        .iter()
        .find(|(l, v, _)| *l == label && *v == variant)
        .map(|&(_, _, o)| o)
}

/// The six matrix cells for each variant. The out-of-window case drops
/// `window` challenges before replaying the SUCI.
pub fn matrix_configs(variants: &[VariantMode], seed: u64, window: u64, subscribers: usize) -> Vec<ScenarioConfig> {
    let mut out = Vec::new();
    for &variant in variants {
        let base = ScenarioConfig {
            variant,
            seed,
            window,
            subscribers: subscribers.max(2),
            ..ScenarioConfig::default()
        };
        for (scenario, suci_gap) in [
            (ScenarioId::Normal, 0),
            (ScenarioId::ReplayAuthDiff, 0),
            (ScenarioId::ReplayAuthSame, 0),
            (ScenarioId::ReplaySuciDiff, 0),
            (ScenarioId::ReplaySuciSame, 0),
            (ScenarioId::ReplaySuciSame, window),
        ] {
            out.push(ScenarioConfig {
                scenario,
                suci_gap,
                ..base.clone()
            });
        }
    }
    out
}

pub fn run_matrix(configs: &[ScenarioConfig]) -> Result<Vec<OutcomeRow>, RunnerError> {
    let started = Instant::now();
    let rows = configs
        .iter()
        .map(|cfg| run_scenario(cfg).map(|(_, row)| row))
        .collect::<Result<Vec<_>, _>>()?;
    log::info!(
        "matrix: {} scenarios in {:.3} ms",
        rows.len(),
        started.elapsed().as_secs_f64() * 1e3
    );
    Ok(rows)
}

/// Cells that disagree with [`EXPECTED_OUTCOMES`], including expected cells
/// absent for the variants in `variants`. A synch-failure cell must carry an
/// AUTS and a nonce-in-suci SUCI replay must have logged nonce reuse.
pub fn check_matrix(rows: &[OutcomeRow], variants: &[VariantMode]) -> Vec<String> {
    let mut problems = Vec::new();
    for &(label, variant, want) in &EXPECTED_OUTCOMES {
        if !variants.contains(&variant) {
            continue;
        }
        let Some(row) = rows.iter().find(|r| r.scenario == label && r.variant == variant) else {
            problems.push(format!("{label} / {variant}: missing"));
            continue;
        };
        if row.outcome != want {
            problems.push(format!("{label} / {variant}: got {}, expected {want}", row.outcome));
        }
        if want == AuthOutcome::SynchFailure && !row.auts_present {
            problems.push(format!("{label} / {variant}: synch-failure without AUTS"));
        }
        if variant == VariantMode::NonceInSuci && label.starts_with("replay-suci") && !row.nonce_reuse_logged {
            problems.push(format!("{label} / {variant}: no nonce-reuse event logged"));
        }
    }
    problems
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixReport {
    /// Aligned text table, one row per scenario and one column per variant.
    pub table: String,
    /// CSV with columns scenario, variant, outcome, verdict.
    pub csv: String,
    pub warnings: Vec<String>,
}

fn render_table(rows: &[OutcomeRow], labels: &[String], variants: &[VariantMode]) -> String {
    let mut grid = vec![std::iter::once("scenario".to_owned())
        .chain(variants.iter().map(|v| v.to_string()))
        .collect::<Vec<_>>()];
    for label in labels {
        let mut line = vec![label.clone()];
        for &variant in variants {
            let cell = rows
                .iter()
                .find(|r| &r.scenario == label && r.variant == variant)
                .map_or_else(|| "-".to_owned(), |r| r.outcome.to_string());
            line.push(cell);
        }
        grid.push(line);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|line| line[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, line) in grid.iter().enumerate() {
        let cells: Vec<String> = line.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&rule.join("  "));
            out.push('\n');
        }
    }
    out
}

fn render_csv(rows: &[OutcomeRow]) -> Result<String, RunnerError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "variant", "outcome", "verdict"])?;
    for r in rows {
        let verdict = r.verdict.map(|v| v.as_str()).unwrap_or("");
        w.write_record([r.scenario.as_str(), r.variant.as_str(), r.outcome.as_str(), verdict])?;
    }
    let bytes = w.into_inner().map_err(|e| RunnerError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Render the scenario by variant grid and, when `out_dir` is given, write
/// `matrix.txt` and `matrix.csv` there. Missing cells produce warnings.
pub fn emit_outcome_matrix(rows: &[OutcomeRow], out_dir: Option<&Path>) -> Result<MatrixReport, RunnerError> {
    let mut variants: Vec<VariantMode> = Vec::new();
    for r in rows {
        if !variants.contains(&r.variant) {
            variants.push(r.variant);
        }
    }
    let present: BTreeSet<&str> = rows.iter().map(|r| r.scenario.as_str()).collect();
    let mut labels: Vec<String> = MATRIX_LABELS
        .iter()
        .filter(|l| present.contains(*l))
        .map(|l| (*l).to_owned())
        .collect();
    for r in rows {
        if !labels.contains(&r.scenario) {
            labels.push(r.scenario.clone());
        }
    }

    let mut warnings = Vec::new();
    if rows.is_empty() {
        warnings.push("no rows: empty matrix".to_owned());
    }
    for label in MATRIX_LABELS {
        for &variant in &variants {
            if !rows.iter().any(|r| r.scenario == label && r.variant == variant) {
                warnings.push(format!("partial matrix: missing {label} / {variant}"));
            }
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let report = MatrixReport {
        table: render_table(rows, &labels, &variants),
        csv: render_csv(rows)?,
        warnings,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("matrix.txt"), &report.table)?;
        fs::write(dir.join("matrix.csv"), &report.csv)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scenario: &str, variant: VariantMode, outcome: AuthOutcome) -> OutcomeRow {
        OutcomeRow {
            scenario: scenario.into(),
            variant,
            outcome,
            verdict: None,
            auts_present: false,
            nonce_reuse_logged: false,
            detail: None,
        }
    }

    #[test]
    fn empty_input_warns() {
        let r = emit_outcome_matrix(&[], None).unwrap();
        assert_eq!(r.warnings, vec!["no rows: empty matrix".to_owned()]);
        assert_eq!(r.table.lines().count(), 2);
        assert_eq!(r.csv, "scenario,variant,outcome,verdict\n");
    }

    #[test]
    fn single_row_gives_one_cell_and_warning() {
        let r = emit_outcome_matrix(&[row("normal", VariantMode::Baseline, AuthOutcome::Ok)], None).unwrap();
        assert_eq!(r.table.lines().count(), 3);
        assert!(r.table.lines().nth(2).unwrap().ends_with("ok"));
        assert_eq!(r.warnings.len(), 5);
        assert!(r.warnings[0].starts_with("partial matrix"));
    }

    #[test]
    fn check_flags_wrong_and_missing_cells() {
        let rows = [row("normal", VariantMode::Baseline, AuthOutcome::MacFailure)];
        let problems = check_matrix(&rows, &[VariantMode::Baseline]);
        assert_eq!(problems[0], "normal / baseline: got mac-failure, expected ok");
        assert_eq!(problems.len(), 6);
        assert!(check_matrix(&rows, &[VariantMode::EncFailure]).is_empty());
    }

    #[test]
    fn config_grid_shape() {
        let cfgs = matrix_configs(&[VariantMode::Baseline, VariantMode::NonceInSuci], 1, 32, 2);
        assert_eq!(cfgs.len(), 12);
        let labels: Vec<String> = cfgs[..6].iter().map(ScenarioConfig::label).collect();
        assert_eq!(labels, MATRIX_LABELS.map(String::from).to_vec());
    }
}
