//! Named-tensor container files.
//!
//! Layout: a UTF-8 header listing `(name, shape)` per tensor, a `data` marker
//! line, then the raw little-endian f64 buffers concatenated in header order.
//! Raw bytes make save/load exact.

use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

const MAGIC: &str = "ndtensors 1";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl NamedTensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, values: Vec<f64>) -> NamedTensor {
        let name = name.into();
        assert_eq!(
            shape.iter().product::<usize>(),
            values.len(),
            "tensor {name}: shape/value mismatch"
        );
        assert!(
            !name.contains(char::is_whitespace),
            "tensor names may not contain whitespace"
        );
        NamedTensor {
            name,
            shape,
            values,
        }
    }
}

pub fn save_tensors(path: &Path, tensors: &[NamedTensor]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut header = String::new();
    header.push_str(MAGIC);
    header.push('\n');
    header.push_str(&format!("count {}\n", tensors.len()));
    for t in tensors {
        header.push_str(&format!("tensor {}", t.name));
        for d in &t.shape {
            header.push_str(&format!(" {d}"));
        }
        header.push('\n');
    }
    header.push_str("data\n");

    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(header.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    for t in tensors {
        let mut bytes = Vec::with_capacity(t.values.len() * 8);
        for v in &t.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn load_tensors(path: &Path) -> Result<Vec<NamedTensor>> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut raw = Vec::new();
    file.read_to_end(&mut raw).map_err(|e| Error::io(path, e))?;

    // The header is newline-terminated ASCII; scan line by line until `data`.
    let mut offset = 0usize;
    let mut line_no = 0usize;
    let mut next_line = |raw: &[u8], offset: &mut usize| -> Result<String> {
        line_no += 1;
        let start = *offset;
        while *offset < raw.len() && raw[*offset] != b'\n' {
            *offset += 1;
        }
        if *offset >= raw.len() {
            return Err(Error::parse(path, line_no, "unexpected end of header"));
        }
        let s = std::str::from_utf8(&raw[start..*offset])
            .map_err(|_| Error::parse(path, line_no, "header is not UTF-8"))?
            .to_string();
        *offset += 1; // skip newline
        Ok(s)
    };

    if next_line(&raw, &mut offset)? != MAGIC {
        return Err(Error::parse(path, 1, "not a tensor container"));
    }
    let count_line = next_line(&raw, &mut offset)?;
    let count: usize = count_line
        .strip_prefix("count ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(path, 2, "bad count line"))?;

    let mut metas: Vec<(String, Vec<usize>)> = Vec::with_capacity(count);
    for i in 0..count {
        let line = next_line(&raw, &mut offset)?;
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some("tensor") {
            return Err(Error::parse(path, 3 + i, "expected `tensor` record"));
        }
        let name = tokens
            .next()
            .ok_or_else(|| Error::parse(path, 3 + i, "tensor record missing name"))?
            .to_string();
        let mut shape = Vec::new();
        for t in tokens {
            shape.push(
                t.parse()
                    .map_err(|_| Error::parse(path, 3 + i, format!("bad dimension `{t}`")))?,
            );
        }
        metas.push((name, shape));
    }
    let marker = next_line(&raw, &mut offset)?;
    if marker != "data" {
        return Err(Error::parse(path, 3 + count, "expected `data` marker"));
    }

    let mut tensors = Vec::with_capacity(count);
    for (name, shape) in metas {
        let n: usize = shape.iter().product();
        let bytes_needed = n * 8;
        if offset + bytes_needed > raw.len() {
            return Err(Error::parse(
                path,
                line_no,
                format!("tensor {name}: data truncated"),
            ));
        }
        let mut values = Vec::with_capacity(n);
        for chunk in raw[offset..offset + bytes_needed].chunks_exact(8) {
            values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
        }
        offset += bytes_needed;
        tensors.push(NamedTensor {
            name,
            shape,
            values,
        });
    }
    if offset != raw.len() {
        return Err(Error::parse(path, line_no, "trailing bytes after tensor data"));
    }
    Ok(tensors)
}
