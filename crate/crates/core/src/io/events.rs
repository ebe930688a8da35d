//! Event list files.
//!
//! CSV: a version line `# motrims-events MAJOR.MINOR`, a header row, one event
//! per row. Floats are written in shortest round-trip form.
//!
//! Binary: magic `MOTR1`, u16 major, u16 minor, u8 flags (bit 0: truth
//! present), u64 event count, then per event u64 id and f64 t_us, x_mm, y_mm,
//! followed when truth is present by six f64 (p_x, p_y, p_z in a.u., birth x,
//! y, z in mm) and a u8 channel code (0 = 5s, 1 = 5p). All little-endian.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::apparatus::{DetectorEvent, Truth};
use crate::strongfield::Channel;
use crate::{Error, Result};

pub const FORMAT_MAJOR: u16 = 1;
pub const FORMAT_MINOR: u16 = 0;
pub const BINARY_MAGIC: &[u8; 5] = b"MOTR1";
const CSV_TAG: &str = "# motrims-events";

const BASE_COLUMNS: [&str; 4] = ["event_id", "t_us", "x_mm", "y_mm"];
const TRUTH_COLUMNS: [&str; 7] = [
    "truth_px_au",
    "truth_py_au",
    "truth_pz_au",
    "truth_x_mm",
    "truth_y_mm",
    "truth_z_mm",
    "channel",
];

fn has_truth(events: &[DetectorEvent]) -> Result<bool> {
    let with = events.iter().filter(|e| e.truth.is_some()).count();
    if with != 0 && with != events.len() {
        return Err(Error::Data(format!(
            "{with} of {} events carry truth; a file holds all or none",
            events.len()
        )));
    }
    Ok(with > 0)
}

pub fn write_csv<W: Write>(events: &[DetectorEvent], out: W) -> Result<()> {
    let truth = has_truth(events)?;
    let mut out = BufWriter::new(out);
    let io = |e: std::io::Error| Error::Data(format!("writing events: {e}"));
    writeln!(out, "{CSV_TAG} {FORMAT_MAJOR}.{FORMAT_MINOR}").map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    if truth {
        header.extend(TRUTH_COLUMNS);
    }
    let csv_err = |e: csv::Error| Error::Data(format!("writing events: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for e in events {
        let mut row = vec![
            e.id.to_string(),
            e.t_us.to_string(),
            e.x_mm.to_string(),
            e.y_mm.to_string(),
        ];
        if let Some(t) = &e.truth {
            row.extend(t.momentum_au.iter().map(|v| v.to_string()));
            row.extend(t.birth_mm.iter().map(|v| v.to_string()));
            row.push(t.channel.label().to_string());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

fn check_version(major: u16, minor: u16) -> Result<()> {
    if major > FORMAT_MAJOR {
        return Err(Error::Data(format!(
            "event file format {major}.{minor} is newer than supported {FORMAT_MAJOR}.x"
        )));
    }
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<DetectorEvent>> {
    let mut input = BufReader::new(input);
    let mut first = String::new();
    input
        .read_line(&mut first)
        .map_err(|e| Error::Data(format!("line 1: {e}")))?;
    let version = first.trim().strip_prefix(CSV_TAG).ok_or_else(|| {
        Error::Data(format!(
            "line 1: expected \"{CSV_TAG} MAJOR.MINOR\", found {:?}",
            first.trim()
        ))
    })?;
    let (major, minor) = version
        .trim()
        .split_once('.')
        .and_then(|(a, b)| Some((a.parse::<u16>().ok()?, b.parse::<u16>().ok()?)))
        .ok_or_else(|| Error::Data(format!("line 1: bad format version {:?}", version.trim())))?;
    check_version(major, minor)?;

    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers().map_err(|e| Error::Data(format!("line 2: {e}")))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let truth = if names == BASE_COLUMNS {
        false
    } else if names.len() == 11 && names[..4] == BASE_COLUMNS && names[4..] == TRUTH_COLUMNS {
        true
    } else {
        return Err(Error::Data(format!("line 2: unexpected header {names:?}")));
    };
    let mut events = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() + 1).unwrap_or(0);
            Error::Data(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map(|p| p.line() + 1).unwrap_or(0);
        let bad = |col: usize, what: &str| {
            Error::Data(format!(
                "line {line}: column {} ({}) {what}: {:?}",
                col + 1,
                names.get(col).unwrap_or(&"?"),
                rec.get(col).unwrap_or("")
            ))
        };
        if rec.len() != names.len() {
            return Err(Error::Data(format!(
                "line {line}: expected {} fields, found {}",
                names.len(),
                rec.len()
            )));
        }
        let f = |col: usize| -> Result<f64> {
            let v: f64 = rec[col].trim().parse().map_err(|_| bad(col, "is not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(col, "is not finite"))
            }
        };
        let id: u64 = rec[0]
            .trim()
            .parse()
            .map_err(|_| bad(0, "is not an unsigned integer"))?;
        let truth = if truth {
            Some(Truth {
                momentum_au: [f(4)?, f(5)?, f(6)?],
                birth_mm: [f(7)?, f(8)?, f(9)?],
                channel: Channel::parse(rec[10].trim()).ok_or_else(|| bad(10, "is not a channel"))?,
            })
        } else {
            None
        };
        events.push(DetectorEvent {
            id,
            t_us: f(1)?,
            x_mm: f(2)?,
            y_mm: f(3)?,
            truth,
        });
    }
    Ok(events)
}

pub fn write_binary<W: Write>(events: &[DetectorEvent], out: W) -> Result<()> {
    let truth = has_truth(events)?;
    let mut out = BufWriter::new(out);
    let io = |e: std::io::Error| Error::Data(format!("writing events: {e}"));
    out.write_all(BINARY_MAGIC).map_err(io)?;
    out.write_all(&FORMAT_MAJOR.to_le_bytes()).map_err(io)?;
    out.write_all(&FORMAT_MINOR.to_le_bytes()).map_err(io)?;
    out.write_all(&[u8::from(truth)]).map_err(io)?;
    out.write_all(&(events.len() as u64).to_le_bytes()).map_err(io)?;
    for e in events {
        out.write_all(&e.id.to_le_bytes()).map_err(io)?;
        for v in [e.t_us, e.x_mm, e.y_mm] {
            out.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        if let Some(t) = &e.truth {
            for v in t.momentum_au.iter().chain(&t.birth_mm) {
                out.write_all(&v.to_le_bytes()).map_err(io)?;
            }
            out.write_all(&[t.channel.code()]).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn read_binary<R: Read>(input: R) -> Result<Vec<DetectorEvent>> {
    let mut input = BufReader::new(input);
    let mut offset = 0u64;
    let mut take = |buf: &mut [u8], what: &str| -> Result<()> {
        input
            .read_exact(buf)
            .map_err(|e| Error::Data(format!("byte {offset}: truncated reading {what}: {e}")))?;
        offset += buf.len() as u64;
        Ok(())
    };
    let mut magic = [0u8; 5];
    take(&mut magic, "magic")?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Data("not a binary event file (bad magic)".into()));
    }
    let mut b2 = [0u8; 2];
    take(&mut b2, "version")?;
    let major = u16::from_le_bytes(b2);
    take(&mut b2, "version")?;
    let minor = u16::from_le_bytes(b2);
    check_version(major, minor)?;
    let mut b1 = [0u8; 1];
    take(&mut b1, "flags")?;
    let truth = match b1[0] {
        0 => false,
        1 => true,
        f => return Err(Error::Data(format!("unknown flags {f:#x}"))),
    };
    let mut b8 = [0u8; 8];
    take(&mut b8, "event count")?;
    let n = u64::from_le_bytes(b8);
    let mut events = Vec::with_capacity(n.min(1 << 24) as usize);
    for i in 0..n {
        let what = format!("event {i}");
        let mut f = || -> Result<f64> {
            take(&mut b8, &what)?;
            Ok(f64::from_le_bytes(b8))
        };
        // Same eight bytes, read as an integer.
        let id = f()?.to_bits();
        let (t_us, x_mm, y_mm) = (f()?, f()?, f()?);
        let truth = if truth {
            let m = [f()?, f()?, f()?];
            let b = [f()?, f()?, f()?];
            take(&mut b1, &what)?;
            let channel = Channel::from_code(b1[0])
                .ok_or_else(|| Error::Data(format!("event {i}: unknown channel code {}", b1[0])))?;
            Some(Truth {
                momentum_au: m,
                birth_mm: b,
                channel,
            })
        } else {
            None
        };
        events.push(DetectorEvent {
            id,
            t_us,
            x_mm,
            y_mm,
            truth,
        });
    }
    if take(&mut b1, "trailer").is_ok() {
        return Err(Error::Data(format!("trailing bytes after {n} events")));
    }
    Ok(events)
}

/// Writes by extension: `.bin` binary, anything else CSV.
pub fn write_events(path: &Path, events: &[DetectorEvent]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let located = |e: Error| match e {
        Error::Data(m) => Error::Data(format!("{}: {m}", path.display())),
        other => other,
    };
    if path.extension().is_some_and(|x| x == "bin") {
        write_binary(events, file).map_err(located)
    } else {
        write_csv(events, file).map_err(located)
    }
}

/// Reads either format, recognising binary files by their magic.
pub fn read_events(path: &Path) -> Result<Vec<DetectorEvent>> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut head = [0u8; 5];
    let n = file.read(&mut head).map_err(|e| Error::io(path, e))?;
    drop(file);
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let located = |e: Error| match e {
        Error::Data(m) => Error::Data(format!("{}: {m}", path.display())),
        other => other,
    };
    if n == 5 && &head == BINARY_MAGIC {
        read_binary(file).map_err(located)
    } else {
        read_csv(file).map_err(located)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;
    use rand::Rng;

    fn sample(n: usize, truth: bool, seed: u64) -> Vec<DetectorEvent> {
        let mut rng = substream(seed, 0, 0);
        (0..n)
            .map(|i| DetectorEvent {
                id: i as u64 * 3 + 1,
                t_us: 270.0 + rng.random::<f64>() * 1e-3,
                x_mm: rng.random::<f64>() - 0.5,
                y_mm: -1e-300 * rng.random::<f64>(),
                truth: truth.then(|| Truth {
                    momentum_au: [rng.random(), -rng.random::<f64>(), 1e10 * rng.random::<f64>()],
                    birth_mm: [0.1, -0.0, f64::MIN_POSITIVE],
                    channel: if i % 2 == 0 { Channel::Rb5s } else { Channel::Rb5p },
                }),
            })
            .collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn codecs_round_trip_exactly(n in 0usize..50, truth: bool, seed: u64) {
            let ev = sample(n, truth, seed);
            let mut csv_bytes = Vec::new();
            write_csv(&ev, &mut csv_bytes).unwrap();
            prop_assert_eq!(&read_csv(&csv_bytes[..]).unwrap(), &ev);
            let mut bin = Vec::new();
            write_binary(&ev, &mut bin).unwrap();
            prop_assert_eq!(&read_binary(&bin[..]).unwrap(), &ev);
        }
    }

    #[test]
    fn csv_layout() {
        let mut out = Vec::new();
        write_csv(&sample(1, true, 1), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# motrims-events 1.0");
        assert_eq!(
            lines[1],
            "event_id,t_us,x_mm,y_mm,truth_px_au,truth_py_au,truth_pz_au,truth_x_mm,truth_y_mm,truth_z_mm,channel"
        );
    }

    #[test]
    fn corrupted_row_names_line() {
        let text = "# motrims-events 1.0\nevent_id,t_us,x_mm,y_mm\n1,2.0,3.0,4.0\n2,abc,3.0,4.0\n";
        let err = read_csv(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 4") && err.contains("t_us"), "{err}");
        let short = "# motrims-events 1.0\nevent_id,t_us,x_mm,y_mm\n1,2.0,3.0\n";
        assert!(read_csv(short.as_bytes()).unwrap_err().to_string().contains("line 3"));
    }

    #[test]
    fn newer_major_rejected() {
        let text = "# motrims-events 2.0\nevent_id,t_us,x_mm,y_mm\n";
        assert!(matches!(read_csv(text.as_bytes()), Err(Error::Data(_))));
        assert!(read_csv("# motrims-events 1.7\nevent_id,t_us,x_mm,y_mm\n".as_bytes()).is_ok());
        let mut bin = Vec::new();
        write_binary(&sample(2, false, 2), &mut bin).unwrap();
        bin[5] = 2;
        assert!(read_binary(&bin[..]).unwrap_err().to_string().contains("newer"));
    }

    #[test]
    fn truncated_binary_rejected() {
        let mut bin = Vec::new();
        write_binary(&sample(3, true, 3), &mut bin).unwrap();
        bin.pop();
        assert!(matches!(read_binary(&bin[..]), Err(Error::Data(_))));
    }

    #[test]
    fn mixed_truth_rejected() {
        let mut ev = sample(2, true, 4);
        ev[1].truth = None;
        assert!(write_csv(&ev, Vec::new()).is_err());
    }

    #[test]
    fn files_dispatch_on_content() {
        let dir = tempfile::tempdir().unwrap();
        let ev = sample(5, true, 5);
        for name in ["a.csv", "b.bin"] {
            let p = dir.path().join(name);
            write_events(&p, &ev).unwrap();
            assert_eq!(read_events(&p).unwrap(), ev);
        }
        let missing = read_events(&dir.path().join("none.csv")).unwrap_err();
        assert!(matches!(missing, Error::Io { .. }) && missing.to_string().contains("none.csv"));
    }
}
