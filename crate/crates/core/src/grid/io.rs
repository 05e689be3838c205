//! Binary snapshot format.
//!
//! A field file is a short ASCII header followed by raw little-endian `f64`
//! values:
//!
//! ```text
//! critflow-field v1
//! dim <d>
//! shape <n> <n> ...
//! components <c>
//! times <nt>
//! <t_0> <t_1> ... <t_{nt-1}>
//! end
//! ```
//!
//! Each header line ends with `\n`. The payload holds `nt * c * n^d` values
//! ordered `[time][component][node]`, nodes row-major with axis 0 slowest.
//! Times are written with Rust's shortest round-trip formatting so they read
//! back exactly.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::PeriodicField;
use crate::error::{Error, Result};

const MAGIC: &str = "critflow-field v1";

pub fn write_field<W: Write>(field: &PeriodicField, mut w: W) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "dim {}", field.dim())?;
    let shape: Vec<String> = (0..field.dim()).map(|_| field.n().to_string()).collect();
    writeln!(w, "shape {}", shape.join(" "))?;
    writeln!(w, "components {}", field.components())?;
    writeln!(w, "times {}", field.times().len())?;
    let times: Vec<String> = field.times().iter().map(|t| format!("{t:?}")).collect();
    writeln!(w, "{}", times.join(" "))?;
    writeln!(w, "end")?;
    let mut buf = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn header_value<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::Format(format!("expected `{key}` line, got `{line}`")))
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("cannot parse `{s}`")))
}

pub fn read_field<R: Read>(r: R) -> Result<PeriodicField> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    let mut next = |r: &mut BufReader<R>| -> Result<String> {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Format("truncated header".into()));
        }
        Ok(line.trim_end_matches('\n').to_string())
    };
    if next(&mut r)? != MAGIC {
        return Err(Error::Format("not a critflow field file".into()));
    }
    let dim: usize = parse(header_value(&next(&mut r)?, "dim")?)?;
    let shape: Vec<usize> = header_value(&next(&mut r)?, "shape")?
        .split_whitespace()
        .map(parse)
        .collect::<Result<_>>()?;
    if shape.len() != dim || shape.iter().any(|&s| s != shape[0]) {
        return Err(Error::Format(format!("unsupported shape {shape:?}")));
    }
    let components: usize = parse(header_value(&next(&mut r)?, "components")?)?;
    let nt: usize = parse(header_value(&next(&mut r)?, "times")?)?;
    let times: Vec<f64> = next(&mut r)?
        .split_whitespace()
        .map(parse)
        .collect::<Result<_>>()?;
    if times.len() != nt {
        return Err(Error::Format(format!("expected {nt} times, found {}", times.len())));
    }
    if next(&mut r)? != "end" {
        return Err(Error::Format("missing `end` line".into()));
    }
    let count = nt * components * shape[0].pow(dim as u32);
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    PeriodicField::from_values(dim, shape[0], components, times, values)
}

pub fn save(field: &PeriodicField, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_field(field, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<PeriodicField> {
    read_field(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let f = PeriodicField::sample(2, 8, 2, vec![0.0, 0.1, 1.0 / 3.0], |t, x, o| {
            o[0] = t + x[0];
            o[1] = x[1].sin();
        });
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let g = read_field(&buf[..]).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_field(&b"hello\n"[..]).is_err());
    }
}
