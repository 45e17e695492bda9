//! CSV sinks.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::CliResult;

/// Opens `path`, or stdout when absent.
pub fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// CSV writer that starts with a `# generated` comment unless reproducible.
pub fn csv_writer(path: Option<&Path>, reproducible: bool) -> CliResult<csv::Writer<Box<dyn Write>>> {
    let mut w = sink(path)?;
    if !reproducible {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        writeln!(w, "# hsc {} generated at unix time {secs}", env!("CARGO_PKG_VERSION"))?;
    }
    Ok(csv::Writer::from_writer(w))
}
