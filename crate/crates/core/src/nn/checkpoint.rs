//! Parameter checkpoints: a plain-text layout manifest followed by the flat
//! parameter vector as little-endian 64-bit floats.
//!
//! ```text
//! crr-params v1 <count>
//! <name> <offset> <d0>x<d1>...
//! ...
//! end
//! <count × 8 bytes>
//! ```

use std::path::Path;

use super::{Layout, LayoutEntry};
use crate::error::{Error, Result};

const MAGIC: &str = "crr-params v1";

pub fn encode(layout: &Layout, values: &[f64]) -> Result<Vec<u8>> {
    if layout.len() != values.len() {
        return Err(Error::Input(format!(
            "layout covers {} values, got {}",
            layout.len(),
            values.len()
        )));
    }
    let mut text = format!("{MAGIC} {}\n", values.len());
    for e in layout.entries() {
        let shape: Vec<String> = e.shape.iter().map(usize::to_string).collect();
        text.push_str(&format!("{} {} {}\n", e.name, e.offset, shape.join("x")));
    }
    text.push_str("end\n");
    let mut bytes = text.into_bytes();
    bytes.reserve(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    Ok(bytes)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn decode(bytes: &[u8]) -> Result<(Layout, Vec<f64>)> {
    let mut pos = 0;
    let mut next_line = |line_no: usize| -> Result<String> {
        let end = bytes[pos..]
            .iter()
            .position(|b| *b == b'\n')
            .ok_or_else(|| parse_err(line_no, "truncated manifest"))?;
        let s = std::str::from_utf8(&bytes[pos..pos + end])
            .map_err(|_| parse_err(line_no, "manifest is not UTF-8"))?
            .to_string();
        pos += end + 1;
        Ok(s)
    };
    let header = next_line(1)?;
    let count: usize = header
        .strip_prefix(MAGIC)
        .and_then(|rest| rest.trim().parse().ok())
        .ok_or_else(|| parse_err(1, format!("expected '{MAGIC} <count>'")))?;
    let mut entries = Vec::new();
    let mut line_no = 1;
    loop {
        line_no += 1;
        let line = next_line(line_no)?;
        if line == "end" {
            break;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(line_no, "expected 'name offset shape'"));
        }
        let offset = f[1]
            .parse()
            .map_err(|_| parse_err(line_no, format!("bad offset {:?}", f[1])))?;
        let shape = f[2]
            .split('x')
            .map(|d| d.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| parse_err(line_no, format!("bad shape {:?}", f[2])))?;
        entries.push(LayoutEntry {
            name: f[0].to_string(),
            offset,
            shape,
        });
    }
    let payload = &bytes[pos..];
    if payload.len() != count * 8 {
        return Err(Error::Validation(format!(
            "checkpoint payload has {} bytes, manifest announces {count} floats",
            payload.len()
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("checkpoint contains non-finite values".into()));
    }
    Ok((Layout::from_entries(entries, count)?, values))
}

pub fn save(path: &Path, layout: &Layout, values: &[f64]) -> Result<()> {
    std::fs::write(path, encode(layout, values)?).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(Layout, Vec<f64>)> {
    decode(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let mut l = Layout::new();
        l.push("actor/w", &[2, 3]);
        l.push("actor/b", &[2]);
        let v: Vec<f64> = (0..8).map(|i| (i as f64 * 0.1).sin() / 3.0).collect();
        let (l2, v2) = decode(&encode(&l, &v).unwrap()).unwrap();
        assert_eq!(l2, l);
        assert_eq!(
            v2.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            v.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mut l = Layout::new();
        l.push("w", &[2]);
        let mut bytes = encode(&l, &[1.0, 2.0]).unwrap();
        bytes.pop();
        assert!(decode(&bytes).is_err());
    }
}
