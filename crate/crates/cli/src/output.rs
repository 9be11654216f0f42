//! File writers. Data files carry no timestamps; provenance goes to a
//! `<output>.meta.json` sidecar.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<File, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a header row followed by `rows`; returns the row count.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<usize, CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    let mut count = 0;
    for row in rows {
        w.write_record(&row)?;
        count += 1;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(count)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// `out.csv` → `out.<tag>.<ext>`.
pub fn companion(output: &Path, tag: &str, ext: &str) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    output.with_file_name(format!("{stem}.{tag}.{ext}"))
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    output.with_file_name(name)
}

pub fn write_sidecar(config: &RunConfig, files: &[PathBuf]) -> Result<(), CliError> {
    let meta = json!({
        "tool": "jcm-rg",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "files": files,
    });
    write_json(&sidecar_path(&config.output), &meta)
}
