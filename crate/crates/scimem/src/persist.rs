//! Versioned JSON persistence.
//!
//! Every persisted artifact is wrapped as `{format_version, kind, data}` and
//! written through a temporary file plus rename, so readers see either the
//! old file or the new one.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format_version: u32,
    kind: String,
    data: T,
}

pub fn to_versioned_json<T: Serialize>(kind: &str, value: &T) -> Result<String> {
    let env = Envelope { format_version: FORMAT_VERSION, kind: kind.to_string(), data: value };
    serde_json::to_string_pretty(&env).map_err(|e| Error::Internal(format!("serializing {kind}: {e}")))
}

pub fn from_versioned_json<T: DeserializeOwned>(kind: &str, raw: &str) -> Result<T> {
    let env: Envelope<serde_json::Value> =
        serde_json::from_str(raw).map_err(|e| Error::Parse(format!("{kind}: {e}")))?;
    if env.format_version != FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "{kind}: unsupported format version {} (expected {FORMAT_VERSION})",
            env.format_version
        )));
    }
    if env.kind != kind {
        return Err(Error::Parse(format!("expected a {kind} file, found {}", env.kind)));
    }
    serde_json::from_value(env.data).map_err(|e| Error::Parse(format!("{kind}: {e}")))
}

pub fn save<T: Serialize>(path: &Path, kind: &str, value: &T) -> Result<()> {
    write_atomic(path, to_versioned_json(kind, value)?.as_bytes())
}

pub fn load<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_versioned_json(kind, &raw)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).map_err(|e| Error::Internal(e.to_string()))?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    raw.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

/// Serializes a map with non-string keys as a list of `[key, value]` pairs.
pub mod map_as_pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K: Serialize, V: Serialize, S: Serializer>(map: &BTreeMap<K, V>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, K, V, D>(d: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Vec::<(K, V)>::deserialize(d)?.into_iter().collect())
    }
}

/// Replaces characters that are unsafe in file names.
pub fn safe_file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect()
}
