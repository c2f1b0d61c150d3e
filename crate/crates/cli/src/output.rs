//! Trace CSV and atomic file writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use pmm_core::solver::IterationRecord;

pub const TRACE_HEADER: &str = "k,violation,step_norm,cuts_total,qp_iters,solve_ms,cum_ms";

/// Columns holding wall-clock measurements; everything else is deterministic.
pub const TIMING_COLUMNS: [usize; 2] = [5, 6];

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_csv(trace: &[IterationRecord]) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.k,
            float(r.violation),
            float(r.step_norm),
            r.cuts_total,
            r.qp_iterations,
            float(r.solve_ms),
            float(r.elapsed_ms)
        );
    }
    out
}

/// The CSV with timing columns removed, for reproducibility checks.
pub fn strip_timing(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            line.split(',')
                .enumerate()
                .filter(|(i, _)| !TIMING_COLUMNS.contains(i))
                .map(|(_, f)| f)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}
