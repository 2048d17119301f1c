//! Line-oriented counter file.
//!
//! ```text
//! # fiberlink-counter-file
//! version = 1
//! channels = ANC RT OWB OWF
//! carrier_hz = 194400000000000
//! gate_s = 1
//! kind = Lambda
//! start_mjd = 60000
//! start_sod = 2
//! config_hash = 3f1c…
//! seed = 7
//! # end-header
//! 60000 2 1.2345678901234567e-17 … ....
//! 60000 3 - … G...
//! ```
//!
//! One row per gate: MJD, seconds of day, one value per channel and a flag
//! string with one character per channel (`.` valid, `G` gap, `S` cycle
//! slip). Flagged entries carry `-` instead of a value. Values are written
//! with 17 significant digits so a write/read cycle is lossless. Header keys
//! the reader does not know are kept, in order, and written back.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use fiberlink_core::{CounterKind, FrequencySeries, Sampled};
use thiserror::Error;

use crate::error::CliError;

pub const MAGIC: &str = "# fiberlink-counter-file";
pub const END_HEADER: &str = "# end-header";
pub const FORMAT_VERSION: u32 = 1;
pub const KNOWN_CHANNELS: [&str; 4] = ["ANC", "RT", "OWB", "OWF"];

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("unsupported counter-file version {found} (expected {expected})")]
    Version { found: String, expected: u32 },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: timestamp {found_s} s is not after the previous row")]
    NonMonotonic { line: usize, found_s: f64 },
    #[error("line {line}: timestamp {found_s} s, expected {expected_s} s at gate spacing")]
    Irregular {
        line: usize,
        found_s: f64,
        expected_s: f64,
    },
    #[error("invalid counter file: {0}")]
    Invalid(String),
}

fn malformed(line: usize, reason: impl Into<String>) -> FormatError {
    FormatError::Malformed {
        line,
        reason: reason.into(),
    }
}

/// Per-channel validity of a row entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flag {
    Valid,
    Gap,
    Slip,
}

impl Flag {
    pub fn symbol(self) -> char {
        match self {
            Flag::Valid => '.',
            Flag::Gap => 'G',
            Flag::Slip => 'S',
        }
    }

    fn from_symbol(c: char) -> Option<Self> {
        match c {
            '.' => Some(Flag::Valid),
            'G' => Some(Flag::Gap),
            'S' => Some(Flag::Slip),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub channels: Vec<String>,
    pub carrier_hz: f64,
    pub gate_s: f64,
    pub kind: CounterKind,
    /// Timestamp of the first row.
    pub start_mjd: i64,
    pub start_sod: f64,
    pub config_hash: String,
    pub seed: Option<u64>,
    /// Unrecognised `key = value` pairs, in file order.
    pub extra: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub mjd: i64,
    pub sod: f64,
    /// `None` exactly where the flag is not [`Flag::Valid`].
    pub values: Vec<Option<f64>>,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterFile {
    pub header: Header,
    pub rows: Vec<Row>,
}

/// MJD and seconds of day `elapsed_s` after `(mjd, sod)`.
fn advance(mjd: i64, sod: f64, elapsed_s: f64) -> (i64, f64) {
    let t = sod + elapsed_s;
    let days = (t / SECONDS_PER_DAY).floor();
    (mjd + days as i64, t - days * SECONDS_PER_DAY)
}

impl CounterFile {
    /// Builds a file from aligned series. Series `t0` values are seconds
    /// after 00:00 of `epoch_mjd`.
    pub fn from_series(
        epoch_mjd: i64,
        config_hash: &str,
        seed: Option<u64>,
        channels: &[(&str, &FrequencySeries)],
    ) -> Result<Self, FormatError> {
        let (_, first) = channels
            .first()
            .ok_or_else(|| FormatError::Invalid("no channels".into()))?;
        for (name, s) in &channels[1..] {
            first
                .check_aligned(s)
                .map_err(|e| FormatError::Invalid(format!("channel {name}: {e}")))?;
        }
        let gate = first.gate_s();
        let (start_mjd, start_sod) = advance(epoch_mjd, 0.0, first.t0());
        let rows = (0..first.len())
            .map(|i| {
                let (mjd, sod) = advance(start_mjd, start_sod, i as f64 * gate);
                let (values, flags) = channels
                    .iter()
                    .map(|(_, s)| {
                        if s.is_valid(i) {
                            (Some(s.y()[i]), Flag::Valid)
                        } else {
                            (None, Flag::Gap)
                        }
                    })
                    .unzip();
                Row {
                    mjd,
                    sod,
                    values,
                    flags,
                }
            })
            .collect();
        let file = CounterFile {
            header: Header {
                channels: channels.iter().map(|(n, _)| n.to_string()).collect(),
                carrier_hz: first.carrier_hz(),
                gate_s: gate,
                kind: first.kind(),
                start_mjd,
                start_sod,
                config_hash: config_hash.to_string(),
                seed,
                extra: Vec::new(),
            },
            rows,
        };
        file.check()?;
        Ok(file)
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.header.channels.iter().position(|c| c == name)
    }

    /// The channel as a series; any flagged entry becomes a gap. `t0` is in
    /// seconds after 00:00 of the header start MJD.
    pub fn series(&self, name: &str) -> Result<FrequencySeries, FormatError> {
        let c = self
            .channel_index(name)
            .ok_or_else(|| FormatError::Invalid(format!("no channel {name}")))?;
        let values = self
            .rows
            .iter()
            .map(|r| r.values[c].unwrap_or(f64::NAN))
            .collect();
        let gaps = self
            .rows
            .iter()
            .map(|r| r.flags[c] != Flag::Valid)
            .collect();
        FrequencySeries::with_gaps(
            self.header.start_sod,
            self.header.gate_s,
            self.header.kind,
            self.header.carrier_hz,
            values,
            Some(gaps),
        )
        .map_err(|e| FormatError::Invalid(e.to_string()))
    }

    /// Marks the given rows of a channel as cycle slips.
    pub fn mark_slips(&mut self, name: &str, rows: &[usize]) -> Result<(), FormatError> {
        let c = self
            .channel_index(name)
            .ok_or_else(|| FormatError::Invalid(format!("no channel {name}")))?;
        for &i in rows {
            let row = self
                .rows
                .get_mut(i)
                .ok_or_else(|| FormatError::Invalid(format!("row {i} out of range")))?;
            row.values[c] = None;
            row.flags[c] = Flag::Slip;
        }
        Ok(())
    }

    /// Number of entries with flag `flag` in channel `name`.
    pub fn count_flag(&self, name: &str, flag: Flag) -> usize {
        self.channel_index(name)
            .map(|c| self.rows.iter().filter(|r| r.flags[c] == flag).count())
            .unwrap_or(0)
    }

    /// Checks the invariants of the data model.
    pub fn check(&self) -> Result<(), FormatError> {
        let h = &self.header;
        let invalid = |m: String| Err(FormatError::Invalid(m));
        if h.channels.is_empty() {
            return invalid("no channels".into());
        }
        for (i, c) in h.channels.iter().enumerate() {
            if !KNOWN_CHANNELS.contains(&c.as_str()) {
                return invalid(format!(
                    "unknown channel {c} (expected one of {})",
                    KNOWN_CHANNELS.join(", ")
                ));
            }
            if h.channels[..i].contains(c) {
                return invalid(format!("duplicate channel {c}"));
            }
        }
        if !(h.carrier_hz > 0.0 && h.carrier_hz.is_finite()) {
            return invalid(format!("carrier_hz must be positive, got {}", h.carrier_hz));
        }
        if !(h.gate_s > 0.0 && h.gate_s.is_finite()) {
            return invalid(format!("gate_s must be positive, got {}", h.gate_s));
        }
        if !(0.0..SECONDS_PER_DAY).contains(&h.start_sod) {
            return invalid(format!("start_sod {} outside [0, 86400)", h.start_sod));
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.values.len() != h.channels.len() || row.flags.len() != h.channels.len() {
                return invalid(format!("row {k}: wrong number of channel entries"));
            }
            for (v, f) in row.values.iter().zip(&row.flags) {
                match (v, f) {
                    (Some(x), Flag::Valid) if x.is_finite() => {}
                    (None, Flag::Gap | Flag::Slip) => {}
                    _ => return invalid(format!("row {k}: value and flag disagree")),
                }
            }
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let h = &self.header;
        let mut out = String::with_capacity(64 * (self.rows.len() + 12) * (1 + h.channels.len()));
        out.push_str(MAGIC);
        out.push('\n');
        let _ = writeln!(out, "version = {FORMAT_VERSION}");
        let _ = writeln!(out, "channels = {}", h.channels.join(" "));
        let _ = writeln!(out, "carrier_hz = {}", h.carrier_hz);
        let _ = writeln!(out, "gate_s = {}", h.gate_s);
        let _ = writeln!(out, "kind = {}", h.kind);
        let _ = writeln!(out, "start_mjd = {}", h.start_mjd);
        let _ = writeln!(out, "start_sod = {}", h.start_sod);
        let _ = writeln!(out, "config_hash = {}", h.config_hash);
        if let Some(seed) = h.seed {
            let _ = writeln!(out, "seed = {seed}");
        }
        for (k, v) in &h.extra {
            let _ = writeln!(out, "{k} = {v}");
        }
        out.push_str(END_HEADER);
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{} {}", row.mjd, row.sod);
            for v in &row.values {
                match v {
                    Some(x) => {
                        let _ = write!(out, " {x:.16e}");
                    }
                    None => out.push_str(" -"),
                }
            }
            out.push(' ');
            out.extend(row.flags.iter().map(|f| f.symbol()));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut lines = text
            .split_inclusive('\n')
            .enumerate()
            .map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, l)) if l.trim_end() == MAGIC => {}
            _ => return Err(malformed(1, format!("expected `{MAGIC}`"))),
        }

        let mut pairs: Vec<(usize, String, String)> = Vec::new();
        let mut header_end = None;
        for (no, raw) in lines.by_ref() {
            let line = raw.trim_end();
            if line == END_HEADER {
                header_end = Some(no);
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| malformed(no, "expected `key = value` in header"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(malformed(no, "empty header key"));
            }
            if pairs.iter().any(|(_, pk, _)| pk == k) {
                return Err(malformed(no, format!("duplicate header key `{k}`")));
            }
            pairs.push((no, k.to_string(), v.to_string()));
        }
        let header_end = header_end.ok_or_else(|| {
            FormatError::Invalid(format!("header is not terminated by `{END_HEADER}`"))
        })?;

        let version = pairs
            .iter()
            .find(|(_, k, _)| k == "version")
            .ok_or_else(|| FormatError::Invalid("missing header key `version`".into()))?;
        if version.2.parse::<u32>().ok() != Some(FORMAT_VERSION) {
            return Err(FormatError::Version {
                found: version.2.clone(),
                expected: FORMAT_VERSION,
            });
        }

        let take = |key: &str| -> Result<(usize, &str), FormatError> {
            pairs
                .iter()
                .find(|(_, k, _)| k == key)
                .map(|(no, _, v)| (*no, v.as_str()))
                .ok_or_else(|| FormatError::Invalid(format!("missing header key `{key}`")))
        };
        fn num<T: std::str::FromStr>(key: &str, (no, v): (usize, &str)) -> Result<T, FormatError> {
            v.parse()
                .map_err(|_| malformed(no, format!("bad value `{v}` for `{key}`")))
        }
        let channels: Vec<String> = take("channels")?
            .1
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let (kind_no, kind_v) = take("kind")?;
        let kind: CounterKind = kind_v.parse().map_err(|e: String| malformed(kind_no, e))?;
        let seed = match pairs.iter().find(|(_, k, _)| k == "seed") {
            Some((no, _, v)) => Some(num("seed", (*no, v.as_str()))?),
            None => None,
        };
        const KNOWN: [&str; 9] = [
            "version",
            "channels",
            "carrier_hz",
            "gate_s",
            "kind",
            "start_mjd",
            "start_sod",
            "config_hash",
            "seed",
        ];
        let header = Header {
            carrier_hz: num("carrier_hz", take("carrier_hz")?)?,
            gate_s: num("gate_s", take("gate_s")?)?,
            kind,
            start_mjd: num("start_mjd", take("start_mjd")?)?,
            start_sod: num("start_sod", take("start_sod")?)?,
            config_hash: take("config_hash")?.1.to_string(),
            seed,
            extra: pairs
                .iter()
                .filter(|(_, k, _)| !KNOWN.contains(&k.as_str()))
                .map(|(_, k, v)| (k.clone(), v.clone()))
                .collect(),
            channels,
        };
        CounterFile {
            header: header.clone(),
            rows: Vec::new(),
        }
        .check()
        .map_err(|e| match e {
            FormatError::Invalid(m) => FormatError::Invalid(format!("header: {m}")),
            other => other,
        })?;

        let nch = header.channels.len();
        let gate = header.gate_s;
        let tol = 1e-6 * gate.max(1.0);
        let mut rows = Vec::new();
        let mut prev: Option<f64> = None;
        for (no, raw) in lines {
            if !raw.ends_with('\n') {
                return Err(malformed(no, "truncated line (no line terminator)"));
            }
            let line = raw.trim_end();
            if line.is_empty() {
                return Err(malformed(no, "empty line"));
            }
            let fields: Vec<&str> = line.split_ascii_whitespace().collect();
            if fields.len() != nch + 3 {
                return Err(malformed(
                    no,
                    format!("expected {} fields, found {}", nch + 3, fields.len()),
                ));
            }
            let mjd: i64 = fields[0]
                .parse()
                .map_err(|_| malformed(no, format!("bad MJD `{}`", fields[0])))?;
            let sod: f64 = fields[1]
                .parse()
                .map_err(|_| malformed(no, format!("bad seconds of day `{}`", fields[1])))?;
            if !(0.0..SECONDS_PER_DAY).contains(&sod) {
                return Err(malformed(
                    no,
                    format!("seconds of day {sod} outside [0, 86400)"),
                ));
            }
            let flags: Vec<Flag> = fields[nch + 2]
                .chars()
                .map(|c| {
                    Flag::from_symbol(c).ok_or_else(|| malformed(no, format!("unknown flag `{c}`")))
                })
                .collect::<Result<_, _>>()?;
            if flags.len() != nch {
                return Err(malformed(
                    no,
                    format!("expected {nch} flags, found {}", flags.len()),
                ));
            }
            let mut values = Vec::with_capacity(nch);
            for (field, flag) in fields[2..2 + nch].iter().zip(&flags) {
                values.push(match (*field, flag) {
                    ("-", Flag::Gap | Flag::Slip) => None,
                    ("-", Flag::Valid) => return Err(malformed(no, "valid entry without a value")),
                    (_, Flag::Gap | Flag::Slip) => {
                        return Err(malformed(no, "flagged entry carries a value"))
                    }
                    (v, Flag::Valid) => {
                        let x: f64 = v
                            .parse()
                            .map_err(|_| malformed(no, format!("bad value `{v}`")))?;
                        if !x.is_finite() {
                            return Err(malformed(no, format!("non-finite value `{v}`")));
                        }
                        Some(x)
                    }
                });
            }

            let elapsed =
                (mjd - header.start_mjd) as f64 * SECONDS_PER_DAY + sod - header.start_sod;
            if let Some(p) = prev {
                if elapsed <= p {
                    return Err(FormatError::NonMonotonic {
                        line: no,
                        found_s: elapsed,
                    });
                }
            }
            let expected = rows.len() as f64 * gate;
            if (elapsed - expected).abs() > tol {
                return Err(FormatError::Irregular {
                    line: no,
                    found_s: elapsed,
                    expected_s: expected,
                });
            }
            prev = Some(elapsed);
            rows.push(Row {
                mjd,
                sod,
                values,
                flags,
            });
        }
        let _ = header_end;
        Ok(CounterFile { header, rows })
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.flush().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_counter_file(path: &Path, file: &CounterFile) -> Result<(), CliError> {
    file.check()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    write_atomic(path, file.render().as_bytes())
}

pub fn read_counter_file(path: &Path) -> Result<CounterFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    CounterFile::parse(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
