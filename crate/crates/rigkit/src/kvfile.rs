//! Line-oriented key-value text files.
//!
//! Every structured text artifact (camera, rig, 2D joints, pose, configs)
//! uses the same format: one `key value...` record per line, `#` comments,
//! repeated keys appended in order. Floats are written with Rust's shortest
//! round-trip formatting, so save/load is lossless and byte-deterministic.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    tokens: Vec<String>,
    line: usize,
}

/// Parsed key-value file.
#[derive(Debug, Clone)]
pub struct KvFile {
    path: PathBuf,
    entries: Vec<Entry>,
}

impl KvFile {
    pub fn parse(text: &str, path: impl Into<PathBuf>) -> KvFile {
        let path = path.into();
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace().map(str::to_string);
            let key = tokens.next().unwrap();
            entries.push(Entry {
                key,
                tokens: tokens.collect(),
                line: idx + 1,
            });
        }
        KvFile { path, entries }
    }

    pub fn load(path: &Path) -> Result<KvFile> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(KvFile::parse(&text, path))
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.iter().any(|e| e.key == key)
    }

    fn occurrences(&self, key: &str) -> Vec<&Entry> {
        self.entries.iter().filter(|e| e.key == key).collect()
    }

    fn first(&self, key: &str) -> Result<&Entry> {
        self.entries
            .iter()
            .find(|e| e.key == key)
            .ok_or_else(|| Error::parse(&self.path, 0, format!("missing key `{key}`")))
    }

    /// All tokens of all occurrences of `key`, in file order.
    pub fn tokens(&self, key: &str) -> Result<Vec<String>> {
        self.first(key)?;
        Ok(self
            .occurrences(key)
            .into_iter()
            .flat_map(|e| e.tokens.iter().cloned())
            .collect())
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        self.first(key)?;
        for e in self.occurrences(key) {
            for t in &e.tokens {
                let v: f64 = t.parse().map_err(|_| {
                    Error::parse(&self.path, e.line, format!("`{t}` is not a number"))
                })?;
                out.push(v);
            }
        }
        Ok(out)
    }

    pub fn floats_exact(&self, key: &str, n: usize) -> Result<Vec<f64>> {
        let v = self.floats(key)?;
        if v.len() != n {
            let line = self.first(key)?.line;
            return Err(Error::parse(
                &self.path,
                line,
                format!("key `{key}` expects {n} numbers, found {}", v.len()),
            ));
        }
        Ok(v)
    }

    pub fn ints(&self, key: &str) -> Result<Vec<i64>> {
        let mut out = Vec::new();
        self.first(key)?;
        for e in self.occurrences(key) {
            for t in &e.tokens {
                let v: i64 = t.parse().map_err(|_| {
                    Error::parse(&self.path, e.line, format!("`{t}` is not an integer"))
                })?;
                out.push(v);
            }
        }
        Ok(out)
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        Ok(self.floats_exact(key, 1)?[0])
    }

    pub fn int(&self, key: &str) -> Result<i64> {
        let v = self.ints(key)?;
        if v.len() != 1 {
            let line = self.first(key)?.line;
            return Err(Error::parse(
                &self.path,
                line,
                format!("key `{key}` expects one integer"),
            ));
        }
        Ok(v[0])
    }

    /// The single occurrence of `key` joined back into one string
    /// (used for paths and names that may not be numeric).
    pub fn string(&self, key: &str) -> Result<String> {
        let e = self.first(key)?;
        Ok(e.tokens.join(" "))
    }

    pub fn opt_float(&self, key: &str, default: f64) -> Result<f64> {
        if self.has(key) {
            self.float(key)
        } else {
            Ok(default)
        }
    }

    pub fn opt_int(&self, key: &str, default: i64) -> Result<i64> {
        if self.has(key) {
            self.int(key)
        } else {
            Ok(default)
        }
    }

    pub fn opt_string(&self, key: &str) -> Result<Option<String>> {
        if self.has(key) {
            Ok(Some(self.string(key)?))
        } else {
            Ok(None)
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Builder for writing key-value files.
#[derive(Debug, Default)]
pub struct KvWriter {
    buf: String,
}

impl KvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.buf, "# {text}");
        self
    }

    pub fn floats(&mut self, key: &str, values: &[f64]) -> &mut Self {
        let _ = write!(self.buf, "{key}");
        for v in values {
            let _ = write!(self.buf, " {v}");
        }
        let _ = writeln!(self.buf);
        self
    }

    pub fn ints(&mut self, key: &str, values: &[i64]) -> &mut Self {
        let _ = write!(self.buf, "{key}");
        for v in values {
            let _ = write!(self.buf, " {v}");
        }
        let _ = writeln!(self.buf);
        self
    }

    pub fn strings(&mut self, key: &str, values: &[&str]) -> &mut Self {
        let _ = write!(self.buf, "{key}");
        for v in values {
            let _ = write!(self.buf, " {v}");
        }
        let _ = writeln!(self.buf);
        self
    }

    pub fn finish(&self) -> &str {
        &self.buf
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        std::fs::write(path, &self.buf).map_err(|e| Error::io(path, e))
    }
}
