//! Self-describing grid files for spectra and 2D histograms.
//!
//! ```text
//! # motrims-grid 1.0
//! # code_version: 0.1.0
//! # meta: {"pulse":{...},...}
//! # axis: pz -0.5 0.5 201
//! # axis: px -0.5 0.5 201
//! # values: 40401
//! 0
//! 1.2345e-7
//! ...
//! ```
//!
//! Axes list node positions (min, max, count), first axis slowest; values
//! follow row-major, one per line, in shortest round-trip form.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::strongfield::{Axis, Component, MomentumGrid, SpectrumMap, SpectrumMeta};
use crate::{Error, Result};

pub const GRID_MAJOR: u16 = 1;
pub const GRID_MINOR: u16 = 0;
const TAG: &str = "# motrims-grid";

#[derive(Clone, Debug, PartialEq)]
pub struct GridFile {
    pub code_version: String,
    pub meta: serde_json::Value,
    /// (name, min, max, count)
    pub axes: Vec<(String, f64, f64, usize)>,
    pub values: Vec<f64>,
}

impl GridFile {
    pub fn new(meta: &impl Serialize, axes: Vec<(String, f64, f64, usize)>, values: Vec<f64>) -> Result<Self> {
        let n: usize = axes.iter().map(|a| a.3).product();
        if n != values.len() {
            return Err(Error::Data(format!("grid of {n} nodes given {} values", values.len())));
        }
        Ok(GridFile {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            meta: serde_json::to_value(meta).map_err(|e| Error::Data(format!("grid metadata: {e}")))?,
            axes,
            values,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{TAG} {GRID_MAJOR}.{GRID_MINOR}");
        let _ = writeln!(s, "# code_version: {}", self.code_version);
        let _ = writeln!(s, "# meta: {}", self.meta);
        for (name, lo, hi, n) in &self.axes {
            let _ = writeln!(s, "# axis: {name} {lo} {hi} {n}");
        }
        let _ = writeln!(s, "# values: {}", self.values.len());
        for v in &self.values {
            let _ = writeln!(s, "{v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let bad = |i: usize, m: String| Error::Data(format!("line {}: {m}", i + 1));
        let (i, first) = lines.next().ok_or_else(|| Error::Data("empty grid file".into()))?;
        let version = first
            .strip_prefix(TAG)
            .ok_or_else(|| bad(i, format!("expected \"{TAG} MAJOR.MINOR\"")))?
            .trim();
        let major: u16 = version
            .split('.')
            .next()
            .and_then(|m| m.parse().ok())
            .ok_or_else(|| bad(i, format!("bad version {version:?}")))?;
        if major > GRID_MAJOR {
            return Err(bad(
                i,
                format!("grid format {version} is newer than supported {GRID_MAJOR}.x"),
            ));
        }
        let mut code_version = String::new();
        let mut meta = serde_json::Value::Null;
        let mut axes = Vec::new();
        let mut count = None;
        for (i, line) in lines.by_ref() {
            let Some(h) = line.strip_prefix("# ") else {
                return Err(bad(i, "expected a header line".into()));
            };
            let (key, rest) = h.split_once(": ").ok_or_else(|| bad(i, "malformed header".into()))?;
            match key {
                "code_version" => code_version = rest.to_string(),
                "meta" => meta = serde_json::from_str(rest).map_err(|e| bad(i, format!("meta: {e}")))?,
                "axis" => {
                    let f: Vec<&str> = rest.split_whitespace().collect();
                    if f.len() != 4 {
                        return Err(bad(i, "axis needs name, min, max, count".into()));
                    }
                    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i, format!("bad number {s:?}")));
                    let n = f[3]
                        .parse::<usize>()
                        .map_err(|_| bad(i, format!("bad count {:?}", f[3])))?;
                    axes.push((f[0].to_string(), num(f[1])?, num(f[2])?, n));
                }
                "values" => {
                    count = Some(
                        rest.parse::<usize>()
                            .map_err(|_| bad(i, format!("bad count {rest:?}")))?,
                    );
                    break;
                }
                other => return Err(bad(i, format!("unknown header {other:?}"))),
            }
        }
        let count = count.ok_or_else(|| Error::Data("grid file has no values header".into()))?;
        let mut values = Vec::with_capacity(count);
        for (i, line) in lines {
            values.push(
                line.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(i, format!("bad value {line:?}")))?,
            );
        }
        if values.len() != count {
            return Err(Error::Data(format!(
                "grid file declares {count} values but holds {}",
                values.len()
            )));
        }
        let n: usize = axes.iter().map(|a| a.3).product();
        if axes.is_empty() || n != count {
            return Err(Error::Data(format!(
                "axes describe {n} nodes but {count} values are present"
            )));
        }
        Ok(GridFile {
            code_version,
            meta,
            axes,
            values,
        })
    }

    pub fn meta_as<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.meta.clone()).map_err(|e| Error::Data(format!("grid metadata: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Data(m) => Error::Data(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

fn component_of(name: &str) -> Result<Component> {
    match name {
        "px" => Ok(Component::X),
        "py" => Ok(Component::Y),
        "pz" => Ok(Component::Z),
        other => Err(Error::Data(format!("unknown momentum axis {other:?}"))),
    }
}

pub fn spectrum_to_grid(map: &SpectrumMap) -> Result<GridFile> {
    let axes = map
        .grid
        .axes()
        .iter()
        .map(|(c, a)| (c.name().to_string(), a.min, a.max, a.count))
        .collect();
    GridFile::new(&map.meta, axes, map.values.clone())
}

pub fn grid_to_spectrum(g: &GridFile) -> Result<SpectrumMap> {
    let meta: SpectrumMeta = g.meta_as()?;
    let axes = g
        .axes
        .iter()
        .map(|(n, lo, hi, c)| Ok((component_of(n)?, Axis::new(*lo, *hi, *c)?)))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| match e {
            Error::Domain(m) => Error::Data(m),
            other => other,
        })?;
    let grid = MomentumGrid::new(axes).map_err(|e| match e {
        Error::Domain(m) => Error::Data(m),
        other => other,
    })?;
    SpectrumMap::new(grid, g.values.clone(), meta)
}

pub fn write_spectrum(path: &Path, map: &SpectrumMap) -> Result<()> {
    spectrum_to_grid(map)?.write(path)
}

pub fn read_spectrum(path: &Path) -> Result<SpectrumMap> {
    grid_to_spectrum(&GridFile::read(path)?).map_err(|e| match e {
        Error::Data(m) => Error::Data(format!("{}: {m}", path.display())),
        other => other,
    })
}
