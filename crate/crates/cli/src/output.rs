//! Output envelopes, the result cache and input readers.

use std::fs;
use std::path::{Path, PathBuf};

use knotenum::series::TruncatedSeries;
use knotenum::CoefficientTable;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::Failure;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every artifact: `{"version", "config", "result"}`.
pub fn envelope<C: Serialize>(command: &str, config: &C, result: Value) -> Value {
    json!({
        "version": VERSION,
        "command": command,
        "config": config,
        "result": result,
    })
}

pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Writes through a temporary file so readers never see a partial artifact.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, text).map_err(|e| Failure::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Failure::io(path, e))
}

/// Prints to stdout, or writes to `out` when given.
pub fn emit(out: Option<&Path>, v: &Value) -> Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, &render(v)),
        None => {
            print!("{}", render(v));
            Ok(())
        }
    }
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

/// The payload of an envelope, or the document itself.
fn payload(v: Value) -> Value {
    match v {
        Value::Object(mut m) if m.contains_key("result") && m.contains_key("version") => {
            m.remove("result").expect("checked")
        }
        other => other,
    }
}

pub fn read_table(path: &Path) -> Result<CoefficientTable, Failure> {
    let v = payload(read_json(path)?);
    CoefficientTable::from_json_value(v)
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

/// A one-variable series file, or the crossing column of a table file.
pub fn read_series(path: &Path) -> Result<TruncatedSeries, Failure> {
    let v = payload(read_json(path)?);
    if v.get("coefficients").is_some() {
        return TruncatedSeries::from_json_value(v)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())));
    }
    let table = CoefficientTable::from_json_value(v)
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    series_from_table(&table)
}

pub fn series_from_table(table: &CoefficientTable) -> Result<TruncatedSeries, Failure> {
    if !table.is_exact() {
        return Err(Failure::config("table holds residues; run combine first"));
    }
    Ok(TruncatedSeries::from_integers(table.crossing_column()))
}

/// Cache of finished tables keyed by a hash of the options and the version.
pub struct Cache {
    dir: PathBuf,
    key: String,
}

impl Cache {
    pub fn new<O: Serialize>(dir: &Path, options: &O) -> Self {
        let text = serde_json::to_string(options).expect("options serialize");
        let mut h = Sha256::new();
        h.update(VERSION.as_bytes());
        h.update(b"\n");
        h.update(text.as_bytes());
        Cache {
            dir: dir.to_path_buf(),
            key: hex::encode(h.finalize()),
        }
    }

    pub fn table_path(&self) -> PathBuf {
        self.dir.join(format!("{}.json", self.key))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.dir.join(format!("{}.ckpt", self.key))
    }

    pub fn load(&self) -> Option<CoefficientTable> {
        let text = fs::read_to_string(self.table_path()).ok()?;
        CoefficientTable::from_json(&text).ok()
    }

    pub fn store(&self, table: &CoefficientTable) -> Result<(), Failure> {
        write_atomic(&self.table_path(), &table.to_json())?;
        let ckpt = self.checkpoint_path();
        if ckpt.exists() {
            fs::remove_file(&ckpt).map_err(|e| Failure::io(&ckpt, e))?;
        }
        Ok(())
    }
}
