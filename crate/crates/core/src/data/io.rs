//! `dyadseq-v1`: a line-oriented text format.
//!
//! ```text
//! dyadseq-v1
//! visible_dim 12
//! joints 2
//! labels low medium high        (or `labels -`)
//! meta <key> <value...>         (zero or more)
//! sequences <count>
//! sequence <id> <label|-> <frames> <frame_rate>
//! <Dv whitespace-separated values>   (one line per frame)
//! ...
//! end
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so
//! save followed by load is lossless.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use super::{DyadDataset, DyadSequence};
use crate::error::{Error, Result};

pub const DATASET_FORMAT: &str = "dyadseq-v1";

pub fn write_sequences(ds: &DyadDataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{DATASET_FORMAT}");
    let _ = writeln!(out, "visible_dim {}", ds.visible_dim);
    let _ = writeln!(out, "joints {}", ds.joints);
    if ds.label_names.is_empty() {
        let _ = writeln!(out, "labels -");
    } else {
        let _ = writeln!(out, "labels {}", ds.label_names.join(" "));
    }
    for (k, v) in &ds.metadata {
        let _ = writeln!(out, "meta {k} {v}");
    }
    let _ = writeln!(out, "sequences {}", ds.sequences.len());
    for s in &ds.sequences {
        let label = s.label.map_or_else(|| "-".to_string(), |l| l.to_string());
        let _ = writeln!(out, "sequence {} {label} {} {}", s.id, s.len(), s.frame_rate);
        for row in s.frames.rows() {
            let mut first = true;
            for x in row {
                if !first {
                    out.push(' ');
                }
                let _ = write!(out, "{x}");
                first = false;
            }
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

pub fn save_sequences(path: impl AsRef<Path>, ds: &DyadDataset) -> Result<()> {
    ds.validate()?;
    std::fs::write(path, write_sequences(ds))?;
    Ok(())
}

pub fn load_sequences(path: impl AsRef<Path>) -> Result<DyadDataset> {
    let path = path.as_ref();
    let text = crate::error::read_text(path)?;
    parse_sequences(&text, &path.display().to_string())
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    source: &'a str,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self, expecting: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l.trim()))
            }
            None => Err(self.err(self.last + 1, format!("unexpected end of file, expected {expecting}"))),
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.source.to_string(),
            line,
            msg: msg.into(),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (n, l) = self.next_line(key)?;
        match l.split_once(char::is_whitespace) {
            Some((k, rest)) if k == key => Ok((n, rest.trim())),
            _ => Err(self.err(n, format!("expected `{key} ...`, found `{l}`"))),
        }
    }

    fn number<N: std::str::FromStr>(&self, line: usize, tok: &str, what: &str) -> Result<N> {
        tok.parse().map_err(|_| self.err(line, format!("invalid {what} `{tok}`")))
    }
}

/// Parses a whole document; nothing is returned unless every record is valid.
pub fn parse_sequences(text: &str, source: &str) -> Result<DyadDataset> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        source,
        last: 0,
    };
    let (n, magic) = lines.next_line("format header")?;
    if magic != DATASET_FORMAT {
        return Err(lines.err(n, format!("expected `{DATASET_FORMAT}` header, found `{magic}`")));
    }
    let (n, v) = lines.keyed("visible_dim")?;
    let visible_dim: usize = lines.number(n, v, "visible_dim")?;
    let (n, v) = lines.keyed("joints")?;
    let joints: usize = lines.number(n, v, "joints")?;
    let (_, v) = lines.keyed("labels")?;
    let label_names: Vec<String> = if v == "-" {
        Vec::new()
    } else {
        v.split_whitespace().map(str::to_string).collect()
    };
    let mut metadata = BTreeMap::new();
    let count: usize = loop {
        let (n, l) = lines.next_line("`meta` or `sequences`")?;
        match l.split_once(char::is_whitespace) {
            Some(("meta", rest)) => {
                let rest = rest.trim();
                let (k, v) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                metadata.insert(k.to_string(), v.trim().to_string());
            }
            Some(("sequences", rest)) => break lines.number(n, rest.trim(), "sequence count")?,
            _ => return Err(lines.err(n, format!("expected `meta` or `sequences`, found `{l}`"))),
        }
    };
    let mut sequences = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, rest) = lines.keyed("sequence")?;
        let toks: Vec<&str> = rest.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(lines.err(n, "sequence record needs: id label frames frame_rate"));
        }
        let id = toks[0].to_string();
        let label = match toks[1] {
            "-" => None,
            t => Some(lines.number::<usize>(n, t, "label")?),
        };
        let t: usize = lines.number(n, toks[2], "frame count")?;
        let frame_rate: f64 = lines.number(n, toks[3], "frame rate")?;
        let mut data = Vec::with_capacity(t * visible_dim);
        for f in 0..t {
            let (ln, row) = lines.next_line(&format!("frame {f} of sequence `{id}`"))?;
            let before = data.len();
            for tok in row.split_whitespace() {
                let x: f64 = lines.number(ln, tok, "value")?;
                if !x.is_finite() {
                    return Err(lines.err(ln, format!("non-finite value `{tok}`")));
                }
                data.push(x);
            }
            let found = data.len() - before;
            if found != visible_dim {
                return Err(Error::RecordDim {
                    record: format!("{id}[{f}]"),
                    line: ln,
                    expected: visible_dim,
                    found,
                });
            }
        }
        let frames = Array2::from_shape_vec((t, visible_dim), data).expect("row count checked");
        sequences.push(DyadSequence {
            id,
            frames,
            label,
            frame_rate,
        });
    }
    let (n, l) = lines.next_line("`end`")?;
    if l != "end" {
        return Err(lines.err(n, format!("expected `end`, found `{l}`")));
    }
    let ds = DyadDataset {
        visible_dim,
        joints,
        label_names,
        metadata,
        sequences,
    };
    ds.validate()?;
    Ok(ds)
}
