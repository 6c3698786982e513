use std::fmt::Write as _;
use std::path::Path;

use super::{format_value, FormatError};
use crate::driver::ConvergenceRecord;

pub const LOG_HEADER: &str = "iteration,objective,wall_ms,dna_wins_h,dna_wins_w";

/// How the `wall_ms` column is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimingColumn {
    #[default]
    Measured,
    /// Every entry written as `0`, so logs of identical runs are byte-identical.
    Zeroed,
}

pub fn format_convergence_log(records: &[ConvergenceRecord], timing: TimingColumn) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(LOG_HEADER);
    out.push('\n');
    for r in records {
        let objective = r
            .objective
            .map(|o| format_value(o.total))
            .unwrap_or_default();
        let wall = match timing {
            TimingColumn::Measured => format_value(r.wall_ms),
            TimingColumn::Zeroed => "0".to_string(),
        };
        writeln!(
            out,
            "{},{},{},{},{}",
            r.iteration, objective, wall, r.dna_wins_h, r.dna_wins_w
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn write_convergence_log(
    records: &[ConvergenceRecord],
    path: impl AsRef<Path>,
    timing: TimingColumn,
) -> Result<(), FormatError> {
    std::fs::write(path, format_convergence_log(records, timing))?;
    Ok(())
}
