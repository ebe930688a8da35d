//! Small CSV inputs for target characterization: expansion series, position
//! scans and camera frames.

use std::path::Path;

use serde::Deserialize;

use crate::analysis::{ExpansionPoint, Image};
use crate::{Error, Result};

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn row_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Data(format!("{}: line {line}: {e}", path.display()))
}

/// `t_ms,sigma_mm[,sigma_err_mm]` with a header row.
pub fn read_expansion_csv(path: &Path) -> Result<Vec<ExpansionPoint>> {
    let mut r = open(path)?;
    r.deserialize::<ExpansionPoint>()
        .map(|row| row.map_err(|e| row_error(path, e)))
        .collect()
}

#[derive(Deserialize)]
struct ScanRow {
    position_mm: f64,
    counts: f64,
}

/// `position_mm,counts` with a header row.
pub fn read_scan_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = open(path)?;
    let mut pos = Vec::new();
    let mut counts = Vec::new();
    for row in r.deserialize::<ScanRow>() {
        let row = row.map_err(|e| row_error(path, e))?;
        pos.push(row.position_mm);
        counts.push(row.counts);
    }
    Ok((pos, counts))
}

/// One image row per line, comma separated, no header.
pub fn read_image_csv(path: &Path) -> Result<Image> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut data = Vec::new();
    let mut width = None;
    let mut height = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Data(format!("{}: line {}: bad pixel value", path.display(), i + 1)))?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Data(format!(
                    "{}: line {}: {} pixels, expected {w}",
                    path.display(),
                    i + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        data.extend(row);
        height += 1;
    }
    Image::new(width.unwrap_or(0), height, data).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn write_image_csv(path: &Path, image: &Image) -> Result<()> {
    let mut s = String::with_capacity(image.data.len() * 8);
    for row in image.data.chunks(image.width) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
