use std::fmt::Write as _;
use std::path::Path;

use crate::error::HarnessError;
use crate::record::RunRecord;

pub const CSV_HEADER: &str = "experiment,setting,algorithm,trials,metric,value,stderr";

/// Renders records as CSV text with `\n` line endings. Numbers use Rust's
/// shortest round-trip decimal form.
pub fn format_csv(records: &[RunRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.experiment, r.setting, r.algorithm, r.trial_count, r.metric, r.value, r.stderr
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn write_csv(records: &[RunRecord], path: &Path) -> Result<(), HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::NothingToWrite);
    }
    std::fs::write(path, format_csv(records)).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}
