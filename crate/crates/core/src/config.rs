//! Run configuration: `key = value` lines with `#` comments.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::extraction::Thresholds;
use crate::geometry::ETA0;
use crate::metrics::{MetricParams, SharpParams};
use crate::optimizer::OptimizerConfig;
use crate::pipeline::{ReconstructConfig, Voxel};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub eta0: f64,
    pub p1: f64,
    pub p2: f64,
    /// Minimum dihedral angle between a row's two faces, degrees.
    pub angle: f64,
    pub gamma0: f64,
    pub decay: f64,
    pub decay_period: usize,
    /// Offset iterations; 0 is the forward-only baseline.
    pub iterations: usize,
    pub voxel: Voxel,
    pub chunk: usize,
    pub seed: u64,
    pub strict_manifold: bool,
    pub samples: usize,
    pub f_tau: f64,
    pub sharp_radius: f64,
    pub sharp_angle: f64,
    pub edge_tau: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let th = Thresholds::default();
        let opt = OptimizerConfig::default();
        let metrics = MetricParams::default();
        RunConfig {
            k: 50,
            eta0: ETA0,
            p1: th.p1,
            p2: th.p2,
            angle: th.angle,
            gamma0: opt.gamma0,
            decay: opt.decay,
            decay_period: opt.decay_period,
            iterations: opt.iterations,
            voxel: Voxel::Off,
            chunk: opt.chunk,
            seed: 0,
            strict_manifold: false,
            samples: metrics.samples,
            f_tau: metrics.f_tau,
            sharp_radius: metrics.sharp.radius,
            sharp_angle: metrics.sharp.angle,
            edge_tau: metrics.sharp.tau,
        }
    }
}

/// Every accepted key, in file order.
pub const KEYS: [&str; 19] = [
    "K",
    "eta0",
    "p1",
    "p2",
    "A",
    "gamma0",
    "decay",
    "decay_period",
    "T",
    "voxel",
    "chunk",
    "seed",
    "strict_manifold",
    "samples",
    "f_tau",
    "sharp_radius",
    "sharp_angle",
    "edge_tau",
    "threads",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Range(format!("{key}: cannot parse {value:?}")))
}

fn check(ok: bool, key: &str, value: impl fmt::Display, range: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Range(format!("{key} = {value} outside {range}")))
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    check(v > 0.0 && v.is_finite(), key, v, "(0, inf)")?;
    Ok(v)
}

fn probability(key: &str, v: f64) -> Result<f64> {
    check(v > 0.0 && v < 1.0, key, v, "(0, 1)")?;
    Ok(v)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Range(format!("{key}: expected true or false, got {value:?}"))),
    }
}

pub fn parse_voxel(value: &str) -> Result<Voxel> {
    match value {
        "auto" => Ok(Voxel::Auto),
        "off" | "none" => Ok(Voxel::Off),
        v => Ok(Voxel::Size(positive("voxel", parse_value("voxel", v)?)?)),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting. `threads` is accepted but not
    /// stored here; the binary consumes it.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "K" => {
                let k: usize = parse_value(key, value)?;
                check((2..=256).contains(&k), key, k, "[2, 256]")?;
                self.k = k;
            }
            "eta0" => {
                let v: f64 = parse_value(key, value)?;
                check(v == ETA0, key, v, &format!("{{{ETA0}}} (the scale the network is trained at)"))?;
                self.eta0 = v;
            }
            "p1" => self.p1 = probability(key, parse_value(key, value)?)?,
            "p2" => self.p2 = probability(key, parse_value(key, value)?)?,
            "A" => {
                let v: f64 = parse_value(key, value)?;
                check((0.0..=180.0).contains(&v), key, v, "[0, 180]")?;
                self.angle = v;
            }
            "gamma0" => self.gamma0 = positive(key, parse_value(key, value)?)?,
            "decay" => {
                let v: f64 = parse_value(key, value)?;
                check(v > 0.0 && v <= 1.0, key, v, "(0, 1]")?;
                self.decay = v;
            }
            "decay_period" => {
                let v: usize = parse_value(key, value)?;
                check(v >= 1, key, v, "[1, inf)")?;
                self.decay_period = v;
            }
            "T" => self.iterations = parse_value(key, value)?,
            "voxel" => self.voxel = parse_voxel(value)?,
            "chunk" => {
                let v: usize = parse_value(key, value)?;
                check(v >= 1, key, v, "[1, inf)")?;
                self.chunk = v;
            }
            "seed" => self.seed = parse_value(key, value)?,
            "strict_manifold" => self.strict_manifold = parse_bool(key, value)?,
            "samples" => {
                let v: usize = parse_value(key, value)?;
                check(v >= 1, key, v, "[1, inf)")?;
                self.samples = v;
            }
            "f_tau" => self.f_tau = positive(key, parse_value(key, value)?)?,
            "sharp_radius" => self.sharp_radius = positive(key, parse_value(key, value)?)?,
            "sharp_angle" => {
                let v: f64 = parse_value(key, value)?;
                check(v > 0.0 && v < 90.0, key, v, "(0, 90)")?;
                self.sharp_angle = v;
            }
            "edge_tau" => self.edge_tau = positive(key, parse_value(key, value)?)?,
            "threads" => {
                let v: usize = parse_value(key, value)?;
                check(v >= 1, key, v, "[1, inf)")?;
            }
            _ => {
                return Err(Error::UnknownKey {
                    key: key.to_string(),
                    valid: KEYS.join(", "),
                })
            }
        }
        Ok(())
    }

    /// Settings from file text, on top of the defaults.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse_at_line(n + 1, format!("expected `key = value`, found {line:?}")))?;
            self.set(key.trim(), value).map_err(|e| match e {
                Error::Range(m) => Error::Range(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    /// `threads` from a config text, if present.
    pub fn threads_in(text: &str) -> Option<usize> {
        text.lines()
            .filter_map(|l| l.split('#').next()?.split_once('='))
            .filter(|(k, _)| k.trim() == "threads")
            .filter_map(|(_, v)| v.trim().parse().ok())
            .last()
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            p1: self.p1,
            p2: self.p2,
            angle: self.angle,
        }
    }

    pub fn reconstruct_config(&self) -> ReconstructConfig {
        ReconstructConfig {
            k: self.k,
            voxel: self.voxel,
            optimizer: OptimizerConfig {
                gamma0: self.gamma0,
                decay: self.decay,
                decay_period: self.decay_period,
                iterations: self.iterations,
                chunk: self.chunk,
                thresholds: self.thresholds(),
                ..OptimizerConfig::default()
            },
            strict_manifold: self.strict_manifold,
        }
    }

    pub fn metric_params(&self) -> MetricParams {
        MetricParams {
            samples: self.samples,
            f_tau: self.f_tau,
            sharp: SharpParams {
                radius: self.sharp_radius,
                angle: self.sharp_angle,
                tau: self.edge_tau,
            },
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = RunConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!((c.k, c.gamma0, c.decay, c.decay_period, c.iterations), (50, 0.1, 0.7, 10, 100));
        assert_eq!((c.p1, c.p2, c.angle), (0.8, 0.5, 120.0));
    }

    #[test]
    fn forward_only_is_valid() {
        assert_eq!(RunConfig::parse("T=0").unwrap().iterations, 0);
    }

    #[test]
    fn out_of_range_and_unknown_keys() {
        let e = RunConfig::parse("decay=1.5").unwrap_err();
        assert!(matches!(e, Error::Range(_)), "{e}");
        match RunConfig::parse("K = 16\nlearning_rate = 3").unwrap_err() {
            Error::UnknownKey { key, valid } => {
                assert_eq!(key, "learning_rate");
                assert!(valid.contains("gamma0") && valid.contains("voxel"));
            }
            e => panic!("{e}"),
        }
        assert!(RunConfig::parse("just words").unwrap_err().to_string().contains("line 1"));
    }

    #[test]
    fn voxel_values() {
        assert_eq!(RunConfig::parse("voxel = auto").unwrap().voxel, Voxel::Auto);
        assert_eq!(RunConfig::parse("voxel = 0.02 # cm").unwrap().voxel, Voxel::Size(0.02));
        assert!(RunConfig::parse("voxel = -1").is_err());
        assert_eq!(RunConfig::threads_in("threads = 4\n"), Some(4));
    }
}
