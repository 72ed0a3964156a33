//! Binary checkpoint container.
//!
//! ```text
//! magic   "FLFDCKPT"
//! version u32
//! count   u32
//! count x section:
//!     name     u32 length + UTF-8 bytes
//!     kind     u8 (0 = parameters, 1 = text)
//!     kind 0:  u32 entry count, each entry: u32 name length + bytes,
//!              u32 rank, rank x u64 dims; then u64 value count and
//!              that many little-endian f64 values
//!     kind 1:  u64 length + UTF-8 bytes
//! trailer SHA-256 of every preceding byte
//! ```
//!
//! All integers are little-endian.

use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{Layout, LayoutEntry, ParamVector};

const MAGIC: &[u8; 8] = b"FLFDCKPT";
const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub enum Section {
    Params(ParamVector),
    Text(String),
}

/// Ordered named sections.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    sections: Vec<(String, Section)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_params(&mut self, name: impl Into<String>, params: &ParamVector) {
        self.sections.push((name.into(), Section::Params(params.clone())));
    }

    pub fn push_text(&mut self, name: impl Into<String>, text: impl Into<String>) {
        self.sections.push((name.into(), Section::Text(text.into())));
    }

    pub fn sections(&self) -> &[(String, Section)] {
        &self.sections
    }

    fn get(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn params(&self, name: &str) -> Result<&ParamVector> {
        match self.get(name) {
            Some(Section::Params(p)) => Ok(p),
            Some(Section::Text(_)) => Err(Error::Integrity(format!("section `{name}` is text, expected parameters"))),
            None => Err(Error::Integrity(format!("missing section `{name}`"))),
        }
    }

    pub fn optional_params(&self, name: &str) -> Result<Option<&ParamVector>> {
        match self.get(name) {
            None => Ok(None),
            Some(_) => self.params(name).map(Some),
        }
    }

    pub fn text(&self, name: &str) -> Result<&str> {
        match self.get(name) {
            Some(Section::Text(t)) => Ok(t),
            Some(Section::Params(_)) => Err(Error::Integrity(format!("section `{name}` holds parameters, expected text"))),
            None => Err(Error::Integrity(format!("missing section `{name}`"))),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.sections.len() as u32).to_le_bytes());
        for (name, section) in &self.sections {
            put_str(&mut out, name);
            match section {
                Section::Params(p) => {
                    out.push(0);
                    let entries = p.layout().entries();
                    out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
                    for e in entries {
                        put_str(&mut out, &e.name);
                        out.extend_from_slice(&(e.shape.len() as u32).to_le_bytes());
                        for &d in &e.shape {
                            out.extend_from_slice(&(d as u64).to_le_bytes());
                        }
                    }
                    out.extend_from_slice(&(p.len() as u64).to_le_bytes());
                    for v in p.values() {
                        out.extend_from_slice(&v.to_le_bytes());
                    }
                }
                Section::Text(t) => {
                    out.push(1);
                    out.extend_from_slice(&(t.len() as u64).to_le_bytes());
                    out.extend_from_slice(t.as_bytes());
                }
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 8 + DIGEST_LEN {
            return Err(Error::Integrity("file too short".into()));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != trailer {
            return Err(Error::Integrity("checksum mismatch".into()));
        }
        let mut r = Reader { buf: body, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::Integrity("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Integrity(format!("unsupported version {version}")));
        }
        let count = r.u32()?;
        let mut sections = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let name = r.string()?;
            let section = match r.u8()? {
                0 => {
                    let n = r.u32()?;
                    let mut entries = Vec::with_capacity(n as usize);
                    let mut offset = 0;
                    for _ in 0..n {
                        let ename = r.string()?;
                        let rank = r.u32()?;
                        let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
                        let entry = LayoutEntry {
                            name: ename,
                            shape,
                            offset,
                        };
                        offset += entry.len();
                        entries.push(entry);
                    }
                    let layout = Arc::new(Layout::from_entries(entries)?);
                    let len = r.u64()? as usize;
                    if len != layout.len() {
                        return Err(Error::Integrity(format!(
                            "section `{name}` has {len} values for a layout of {}",
                            layout.len()
                        )));
                    }
                    let values = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
                    Section::Params(ParamVector::new(layout, values)?)
                }
                1 => {
                    let len = r.u64()? as usize;
                    let raw = r.take(len)?;
                    Section::Text(
                        String::from_utf8(raw.to_vec()).map_err(|_| Error::Integrity("text is not UTF-8".into()))?,
                    )
                }
                k => return Err(Error::Integrity(format!("unknown section kind {k}"))),
            };
            sections.push((name, section));
        }
        if r.pos != body.len() {
            return Err(Error::Integrity("trailing bytes after last section".into()));
        }
        Ok(Checkpoint { sections })
    }

    /// Writes atomically through a temporary sibling file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("bin.tmp");
        std::fs::write(&tmp, self.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Integrity("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        self.array().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.array().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.array().map(f64::from_le_bytes)
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| Error::Integrity("name is not UTF-8".into()))
    }
}
