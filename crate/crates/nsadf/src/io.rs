//! Artifact I/O: the `t,day,x,y` CSV series schema, versioned JSON
//! documents for fitted models and grids, return-curve CSVs, and the run
//! manifest with artifact hashes.
//!
//! Every JSON artifact is wrapped as `{"schema": "<kind>/v1", "payload":
//! …}`; readers reject unknown schema strings so format drift fails loudly
//! (exit code 2 at the CLI). The CSV reader requires the exact `t,day,x,y`
//! or `t,x,y` header for the same reason.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::curve::ReturnCurve;
use crate::error::{Error, Result};
use crate::series::{ExpSeries, RawSeries};

pub const CSV_HEADER_DAY: &str = "t,day,x,y";
pub const CSV_HEADER_NO_DAY: &str = "t,x,y";

/// Serialize a bivariate series (either scale) to the CSV schema.
pub fn series_to_csv(t: &[u32], day: Option<&[u32]>, x: &[f64], y: &[f64]) -> String {
    let mut out = String::new();
    match day {
        Some(day) => {
            out.push_str(CSV_HEADER_DAY);
            out.push('\n');
            for i in 0..t.len() {
                out.push_str(&format!("{},{},{},{}\n", t[i], day[i], x[i], y[i]));
            }
        }
        None => {
            out.push_str(CSV_HEADER_NO_DAY);
            out.push('\n');
            for i in 0..t.len() {
                out.push_str(&format!("{},{},{}\n", t[i], x[i], y[i]));
            }
        }
    }
    out
}

type SeriesColumns = (Vec<u32>, Option<Vec<u32>>, Vec<f64>, Vec<f64>);

fn parse_series_csv(text: &str) -> Result<SeriesColumns> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?
        .trim();
    let has_day = match header {
        CSV_HEADER_DAY => true,
        CSV_HEADER_NO_DAY => false,
        other => {
            return Err(Error::Parse(format!(
                "unrecognized CSV header '{other}' (expected '{CSV_HEADER_DAY}' or '{CSV_HEADER_NO_DAY}')"
            )))
        }
    };
    let mut t = Vec::new();
    let mut day = has_day.then(Vec::new);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |what: &str| -> Result<&str> {
            fields
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing {what}", lineno + 2)))
        };
        let bad = |what: &str, v: &str| {
            Error::Parse(format!("line {}: bad {what} '{v}'", lineno + 2))
        };
        let tv = next("t")?;
        t.push(tv.parse::<u32>().map_err(|_| bad("t", tv))?);
        if let Some(day) = day.as_mut() {
            let dv = next("day")?;
            day.push(dv.parse::<u32>().map_err(|_| bad("day", dv))?);
        }
        let xv = next("x")?;
        x.push(xv.parse::<f64>().map_err(|_| bad("x", xv))?);
        let yv = next("y")?;
        y.push(yv.parse::<f64>().map_err(|_| bad("y", yv))?);
        if fields.next().is_some() {
            return Err(Error::Parse(format!("line {}: too many fields", lineno + 2)));
        }
    }
    Ok((t, day, x, y))
}

pub fn read_raw_csv(path: &Path) -> Result<RawSeries> {
    let (t, day, x, y) = parse_series_csv(&std::fs::read_to_string(path)?)?;
    RawSeries::new(t, day, x, y)
}

pub fn read_exp_csv(path: &Path) -> Result<ExpSeries> {
    let (t, day, x, y) = parse_series_csv(&std::fs::read_to_string(path)?)?;
    ExpSeries::new(t, day, x, y)
}

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    schema: String,
    payload: T,
}

/// Write a versioned JSON artifact (pretty-printed, trailing newline).
pub fn save_json<T: Serialize>(path: &Path, kind: &str, payload: &T) -> Result<()> {
    let doc = Versioned {
        schema: format!("{kind}/v1"),
        payload,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Read a versioned JSON artifact, rejecting schema mismatches.
pub fn load_json<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    let doc: Versioned<serde_json::Value> = serde_json::from_str(&text)?;
    let want = format!("{kind}/v1");
    if doc.schema != want {
        return Err(Error::Config(format!(
            "{}: schema '{}' does not match expected '{want}'",
            path.display(),
            doc.schema
        )));
    }
    Ok(serde_json::from_value(doc.payload)?)
}

/// `w,x,y` CSV for one return curve, prefixed by commented metadata.
pub fn curve_to_csv(curve: &ReturnCurve) -> String {
    let mut out = format!(
        "# p={} t={} margin={}\nw,x,y\n",
        curve.p,
        curve.t,
        match curve.margin {
            crate::curve::Margin::Exponential => "exponential",
            crate::curve::Margin::Original => "original",
        }
    );
    for i in 0..curve.len() {
        out.push_str(&format!("{},{},{}\n", curve.rays[i], curve.x[i], curve.y[i]));
    }
    out
}

/// One artifact entry in a run manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

/// Reproducibility record written next to every run's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub artifacts: Vec<ManifestEntry>,
}

/// Collects artifacts as they are written and emits the manifest last.
pub struct RunWriter {
    dir: PathBuf,
    manifest: Manifest,
}

impl RunWriter {
    pub fn new(
        dir: &Path,
        subcommand: &str,
        seed: Option<u64>,
        config: serde_json::Value,
    ) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                tool: "nsadf".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                subcommand: subcommand.into(),
                seed,
                config,
                artifacts: Vec::new(),
            },
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Write raw bytes as an artifact and record its hash.
    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut f = std::fs::File::create(&path)?;
        f.write_all(bytes)?;
        self.manifest.artifacts.push(ManifestEntry {
            path: name.to_string(),
            sha256: hex_digest(bytes),
        });
        Ok(path)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, kind: &str, payload: &T) -> Result<PathBuf> {
        let doc = Versioned {
            schema: format!("{kind}/v1"),
            payload,
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Write `manifest.json`; call once, after all artifacts.
    pub fn finish(&self) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let d = h.finalize();
    let mut s = String::with_capacity(64);
    for b in d {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_day() {
        let t = vec![1, 2, 3];
        let day = vec![1, 2, 3];
        let x = vec![0.25, 1.5, 0.125];
        let y = vec![2.0, 0.0625, 3.5];
        let text = series_to_csv(&t, Some(&day), &x, &y);
        let (t2, day2, x2, y2) = parse_series_csv(&text).unwrap();
        assert_eq!(t, t2);
        assert_eq!(Some(day), day2);
        assert_eq!(x, x2);
        assert_eq!(y, y2);
    }

    #[test]
    fn csv_rejects_unknown_header() {
        assert!(matches!(
            parse_series_csv("time,x,y\n1,2,3\n"),
            Err(Error::Parse(_))
        ));
        assert!(parse_series_csv("t,x,y\n1,2,3,4\n").is_err());
        assert!(parse_series_csv("t,x,y\n1,2\n").is_err());
        assert!(parse_series_csv("t,x,y\noops,2,3\n").is_err());
    }

    #[test]
    fn json_schema_gate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_json(&path, "nsadf/test-model", &vec![1.0, 2.0]).unwrap();
        let back: Vec<f64> = load_json(&path, "nsadf/test-model").unwrap();
        assert_eq!(back, vec![1.0, 2.0]);
        assert!(matches!(
            load_json::<Vec<f64>>(&path, "nsadf/other"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn run_writer_reports_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = RunWriter::new(
            dir.path(),
            "simulate",
            Some(7),
            serde_json::json!({"n": 10}),
        )
        .unwrap();
        w.write_text("a.csv", "t,x,y\n1,2,3\n").unwrap();
        w.finish().unwrap();
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["subcommand"], "simulate");
        assert_eq!(manifest["seed"], 7);
        let sha = manifest["artifacts"][0]["sha256"].as_str().unwrap();
        assert_eq!(sha.len(), 64);
        // identical content → identical hash (determinism hook)
        let mut w2 = RunWriter::new(dir.path(), "simulate", Some(7), serde_json::json!({}))
            .unwrap();
        w2.write_text("b.csv", "t,x,y\n1,2,3\n").unwrap();
        assert_eq!(w2.manifest.artifacts[0].sha256, sha);
    }
}
