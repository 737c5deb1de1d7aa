//! Provenance lines and output helpers shared by the commands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

pub const TOOL: &str = concat!("xdtc ", env!("CARGO_PKG_VERSION"));

/// SHA-256 of the JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("settings serialize");
    hex::encode(Sha256::digest(json))
}

/// What every report embeds so that equal embeds mean equal runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub config_hash: String,
    pub corpus_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(config_hash: String, corpus_hash: String) -> Self {
        Provenance {
            tool: TOOL.to_string(),
            config_hash,
            corpus_hash,
            seed: None,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Provenance {
            seed: Some(seed),
            ..self.clone()
        }
    }

    /// `#` comment lines for TSV reports.
    pub fn header(&self) -> String {
        let mut s = format!(
            "# tool {}\n# config {}\n# corpus {}\n",
            self.tool, self.config_hash, self.corpus_hash
        );
        if let Some(seed) = self.seed {
            s.push_str(&format!("# seed {seed}\n"));
        }
        s
    }
}

pub fn seeded_name(stem: &str, seed: u64, ext: &str) -> String {
    format!("{stem}-seed{seed}.{ext}")
}

/// Parses the seed out of a name produced by [`seeded_name`].
pub fn seed_of(name: &str, stem: &str, ext: &str) -> Option<u64> {
    name.strip_prefix(stem)?
        .strip_prefix("-seed")?
        .strip_suffix(ext)?
        .strip_suffix('.')?
        .parse()
        .ok()
}

pub fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

/// Writes a whole file, reporting failures as runtime errors.
pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), Failure> {
    let mut w = create(path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::runtime(format!("{}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

/// Mean and sample standard deviation; `None` for an empty series.
pub fn mean_sd(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, sd))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_names_round_trip() {
        let name = seeded_name("checkpoint", 42, "xdtk");
        assert_eq!(name, "checkpoint-seed42.xdtk");
        assert_eq!(seed_of(&name, "checkpoint", "xdtk"), Some(42));
        assert_eq!(seed_of("checkpoint-seedx.xdtk", "checkpoint", "xdtk"), None);
        assert_eq!(seed_of("params-seed1.xdtp", "checkpoint", "xdtk"), None);
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(mean_sd(&[]), None);
        assert_eq!(mean_sd(&[2.0]), Some((2.0, 0.0)));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn header_lines() {
        let p = Provenance::new("abc".into(), "def".into()).with_seed(7);
        assert_eq!(p.header(), format!("# tool {TOOL}\n# config abc\n# corpus def\n# seed 7\n"));
    }
}
