//! Versioned binary parameter files.
//!
//! ```text
//! "OOPT"                 4 bytes magic
//! version                u32 LE (currently 1)
//! record count           u32 LE
//! per record:
//!   name length          u32 LE, then UTF-8 name bytes
//!   rank                 u32 LE, then rank x u32 LE dims
//!   values               prod(dims) x f32 LE, row-major
//! ```
//!
//! The first record is `config` (shape `[5]`: input channels, width, heads,
//! feed-forward width, layers); the rest follow the parameter layout order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::params::{tensor_specs, NetConfig, NetworkParams};

pub const MAGIC: &[u8; 4] = b"OOPT";
pub const FORMAT_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_record(out: &mut Vec<u8>, name: &str, shape: &[usize], values: impl Iterator<Item = f32>) {
    put_u32(out, name.len() as u32);
    out.extend_from_slice(name.as_bytes());
    put_u32(out, shape.len() as u32);
    for d in shape {
        put_u32(out, *d as u32);
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_params(params: &NetworkParams<f32>) -> Vec<u8> {
    let cfg = params.config();
    let mut out = Vec::with_capacity(16 + params.len() * 4 + params.tensors().len() * 48);
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    put_u32(&mut out, params.tensors().len() as u32 + 1);
    let header = [cfg.in_channels, cfg.width, cfg.heads, cfg.ffn_width, cfg.layers];
    put_record(&mut out, "config", &[5], header.iter().map(|v| *v as f32));
    for t in params.tensors() {
        put_record(
            &mut out,
            &t.name,
            &t.shape,
            params.as_slice()[t.range()].iter().copied(),
        );
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::parse_at_byte(
                self.pos,
                format!("truncated file while reading {what}"),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn record(&mut self) -> Result<(String, Vec<usize>, Vec<f32>)> {
        let at = self.pos;
        let len = self.u32("record name length")? as usize;
        let name = std::str::from_utf8(self.take(len, "record name")?)
            .map_err(|_| Error::parse_at_byte(at + 4, "record name is not UTF-8"))?
            .to_string();
        let rank = self.u32("record rank")? as usize;
        if rank > 8 {
            return Err(Error::parse_at_byte(self.pos - 4, format!("implausible rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(self.u32("record dims")? as usize);
        }
        let count: usize = shape.iter().product();
        let bytes = self.take(count.checked_mul(4).unwrap_or(usize::MAX), "record values")?;
        let values = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok((name, shape, values))
    }
}

pub fn decode_params(buf: &[u8]) -> Result<NetworkParams<f32>> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::parse_at_byte(0, "bad magic, not an OOPT parameter file"));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let count = r.u32("record count")? as usize;
    let (name, shape, header) = r.record()?;
    if name != "config" || shape != [5] {
        return Err(Error::Schema(format!("first record must be config[5], got {name}{shape:?}")));
    }
    let field = |i: usize| -> Result<usize> {
        let v = header[i];
        if v.fract() != 0.0 || !(1.0..=65536.0).contains(&v) {
            return Err(Error::Schema(format!("config field {i} has invalid value {v}")));
        }
        Ok(v as usize)
    };
    let cfg = NetConfig {
        in_channels: field(0)?,
        width: field(1)?,
        heads: field(2)?,
        ffn_width: field(3)?,
        layers: field(4)?,
    };
    if cfg.width % cfg.heads != 0 {
        return Err(Error::Schema(format!(
            "width {} not divisible by {} heads",
            cfg.width, cfg.heads
        )));
    }
    let specs = tensor_specs(&cfg);
    if count != specs.len() + 1 {
        return Err(Error::Schema(format!(
            "expected {} records for this config, file declares {count}",
            specs.len() + 1
        )));
    }
    let mut data = Vec::with_capacity(specs.iter().map(|s| s.len()).sum());
    for spec in &specs {
        let (name, shape, values) = r.record()?;
        if name != spec.name || shape != spec.shape {
            return Err(Error::Schema(format!(
                "expected {}{:?}, found {name}{shape:?}",
                spec.name, spec.shape
            )));
        }
        data.extend(values);
    }
    if r.pos != buf.len() {
        return Err(Error::parse_at_byte(r.pos, "trailing bytes after last record"));
    }
    Ok(NetworkParams::from_parts(cfg, data))
}

pub fn save_params(params: &NetworkParams<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_params(params)).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<NetworkParams<f32>> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_params(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> NetworkParams<f32> {
        NetworkParams::init(NetConfig::default(), 5)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let p = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.oopt");
        save_params(&p, &path).unwrap();
        let q = load_params(&path).unwrap();
        assert_eq!(q.config(), p.config());
        let bits = |x: &NetworkParams<f32>| x.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&p), bits(&q));
    }

    #[test]
    fn truncation_reports_byte_offset() {
        let buf = encode_params(&sample());
        for cut in [2, 9, 30, buf.len() - 1] {
            match decode_params(&buf[..cut]) {
                Err(Error::Parse { location, .. }) => assert!(location.starts_with("byte ")),
                other => panic!("cut {cut}: {other:?}"),
            }
        }
    }

    #[test]
    fn future_version_is_rejected() {
        let mut buf = encode_params(&sample());
        buf[4..8].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
        assert!(matches!(
            decode_params(&buf),
            Err(Error::UnsupportedVersion { found: 2, expected: 1 })
        ));
    }

    #[test]
    fn shape_mismatch_is_a_schema_error() {
        let small = NetConfig {
            layers: 1,
            ..NetConfig::default()
        };
        let mut buf = encode_params(&NetworkParams::init(small, 0));
        // Claim more records than the single-layer layout has.
        let count = u32::from_le_bytes([buf[8], buf[9], buf[10], buf[11]]);
        buf[8..12].copy_from_slice(&(count + 1).to_le_bytes());
        assert!(matches!(decode_params(&buf), Err(Error::Schema(_))));
    }
}
