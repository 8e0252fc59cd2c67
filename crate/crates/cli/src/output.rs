//! Atomic file output: everything is written to a temporary file in the
//! target directory and renamed into place.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use tempfile::NamedTempFile;

fn atomic_write<F>(path: &Path, fill: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut NamedTempFile) -> anyhow::Result<()>,
{
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    fill(&mut tmp)?;
    tmp.as_file_mut().flush()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes `rows` with a header derived from the row type.
pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    atomic_write(path, |tmp| {
        let mut w = csv::Writer::from_writer(tmp);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    })
}

/// Like [`write_csv`] but writes `header` even when there are no rows.
pub fn write_csv_with_header<T: Serialize>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = T>,
) -> anyhow::Result<()> {
    atomic_write(path, |tmp| {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(tmp);
        w.write_record(header)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    })
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    atomic_write(path, |tmp| Ok(tmp.write_all(text.as_bytes())?))
}
