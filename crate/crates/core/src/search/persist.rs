//! Single-file index format.
//!
//! ```text
//! magic    "WVIX"
//! version  u16
//! sections, each: tag u8, byte length u64, body
//!   1 DOCS      u32 count; per doc: u32 length, canonical record JSON
//!   2 TERMS     u32 count; per term (bytewise sorted): u16 length, UTF-8
//!   3 POSTINGS  per term in TERMS order: varint doc count; per doc:
//!               varint doc delta, varint position count, varint position deltas
//!   4 FIELDS    u8 field count; per field: u8 field code, u32 value count;
//!               per value (bytewise sorted): u16 length, UTF-8,
//!               varint list length, varint ordinal deltas
//! ```
//!
//! Integers are little-endian. Delta lists store the first value as-is and
//! each following value as the difference from its predecessor. Docs are
//! stored in result order, so ordinals are implicit.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use super::index::{CorpusIndex, Field, PostingList};
use super::varint;
use crate::record::ConversationRecord;

pub const INDEX_MAGIC: [u8; 4] = *b"WVIX";
pub const INDEX_VERSION: u16 = 1;

const TAG_DOCS: u8 = 1;
const TAG_TERMS: u8 = 2;
const TAG_POSTINGS: u8 = 3;
const TAG_FIELDS: u8 = 4;

#[derive(Debug, Error)]
pub enum IndexFileError {
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated or corrupt index: {0}")]
    Corrupt(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn corrupt(msg: impl Into<String>) -> IndexFileError {
    IndexFileError::Corrupt(msg.into())
}

fn put_str16(out: &mut Vec<u8>, s: &str) {
    let len = u16::try_from(s.len()).expect("string longer than 65535 bytes");
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn put_deltas(out: &mut Vec<u8>, values: &[u32]) {
    let mut prev = 0u32;
    for (i, &v) in values.iter().enumerate() {
        varint::write_u64(out, u64::from(if i == 0 { v } else { v - prev }));
        prev = v;
    }
}

fn section(out: &mut Vec<u8>, tag: u8, body: Vec<u8>) {
    out.push(tag);
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(&body);
}

pub fn encode_index(index: &CorpusIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&INDEX_MAGIC);
    out.extend_from_slice(&INDEX_VERSION.to_le_bytes());

    let mut docs = Vec::new();
    docs.extend_from_slice(&(index.docs.len() as u32).to_le_bytes());
    for r in &index.docs {
        let json = r.to_json_line();
        docs.extend_from_slice(&(json.len() as u32).to_le_bytes());
        docs.extend_from_slice(json.as_bytes());
    }
    section(&mut out, TAG_DOCS, docs);

    let mut order: Vec<usize> = (0..index.terms.len()).collect();
    order.sort_unstable_by(|&a, &b| index.terms[a].as_bytes().cmp(index.terms[b].as_bytes()));

    let mut terms = Vec::new();
    terms.extend_from_slice(&(order.len() as u32).to_le_bytes());
    for &t in &order {
        put_str16(&mut terms, &index.terms[t]);
    }
    section(&mut out, TAG_TERMS, terms);

    let mut postings = Vec::new();
    for &t in &order {
        let pl = &index.postings[t];
        varint::write_u64(&mut postings, pl.docs.len() as u64);
        let mut prev = 0u32;
        for (i, &d) in pl.docs.iter().enumerate() {
            varint::write_u64(&mut postings, u64::from(if i == 0 { d } else { d - prev }));
            prev = d;
            let pos = pl.positions_at(i);
            varint::write_u64(&mut postings, pos.len() as u64);
            put_deltas(&mut postings, pos);
        }
    }
    section(&mut out, TAG_POSTINGS, postings);

    let mut fields = Vec::new();
    fields.push(Field::ALL.len() as u8);
    for field in Field::ALL {
        fields.push(field.code());
        let mut values: Vec<(&str, &[u32])> = index.field_values(field).collect();
        values.sort_unstable_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
        fields.extend_from_slice(&(values.len() as u32).to_le_bytes());
        for (value, list) in values {
            put_str16(&mut fields, value);
            varint::write_u64(&mut fields, list.len() as u64);
            put_deltas(&mut fields, list);
        }
    }
    section(&mut out, TAG_FIELDS, fields);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexFileError> {
        if self.buf.len() < n {
            return Err(corrupt("unexpected end of data"));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, IndexFileError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, IndexFileError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, IndexFileError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IndexFileError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn varint(&mut self) -> Result<u64, IndexFileError> {
        varint::read_u64(&mut self.buf).ok_or_else(|| corrupt("bad varint"))
    }

    fn str16(&mut self) -> Result<String, IndexFileError> {
        let len = self.u16()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| corrupt("invalid UTF-8"))
    }

    fn deltas(&mut self, count: usize) -> Result<Vec<u32>, IndexFileError> {
        let mut out = Vec::with_capacity(count.min(self.buf.len()));
        let mut prev = 0u64;
        for i in 0..count {
            let d = self.varint()?;
            let v = if i == 0 { d } else { prev + d };
            out.push(u32::try_from(v).map_err(|_| corrupt("value overflows u32"))?);
            prev = v;
        }
        Ok(out)
    }

    fn section(&mut self, tag: u8) -> Result<Reader<'a>, IndexFileError> {
        let found = self.u8()?;
        if found != tag {
            return Err(corrupt(format!("expected section {tag}, found {found}")));
        }
        let len = usize::try_from(self.u64()?).map_err(|_| corrupt("section too large"))?;
        Ok(Reader { buf: self.take(len)? })
    }
}

pub fn decode_index(bytes: &[u8]) -> Result<CorpusIndex, IndexFileError> {
    let mut r = Reader { buf: bytes };
    if r.take(4).map_err(|_| IndexFileError::BadMagic)? != INDEX_MAGIC {
        return Err(IndexFileError::BadMagic);
    }
    let version = r.u16()?;
    if version != INDEX_VERSION {
        return Err(IndexFileError::UnsupportedVersion(version));
    }

    let mut s = r.section(TAG_DOCS)?;
    let n = s.u32()? as usize;
    let mut docs: Vec<ConversationRecord> = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let len = s.u32()? as usize;
        let rec = serde_json::from_slice(s.take(len)?).map_err(|e| corrupt(e.to_string()))?;
        docs.push(rec);
    }

    let mut s = r.section(TAG_TERMS)?;
    let t = s.u32()? as usize;
    let mut terms = Vec::with_capacity(t.min(1 << 24));
    for _ in 0..t {
        terms.push(s.str16()?);
    }

    let mut s = r.section(TAG_POSTINGS)?;
    let mut postings = Vec::with_capacity(terms.len());
    for _ in 0..terms.len() {
        let count = s.varint()? as usize;
        let mut pl = PostingList::default();
        let mut prev = 0u32;
        for i in 0..count {
            let d = u32::try_from(s.varint()?).map_err(|_| corrupt("doc delta overflow"))?;
            let doc = if i == 0 { d } else { prev + d };
            prev = doc;
            let pc = s.varint()? as usize;
            let pos = s.deltas(pc)?;
            pl.push(doc, &pos);
        }
        postings.push(pl);
    }

    let mut s = r.section(TAG_FIELDS)?;
    let field_count = s.u8()?;
    let mut fields: HashMap<Field, HashMap<String, Vec<u32>>> = HashMap::new();
    for _ in 0..field_count {
        let field = Field::from_code(s.u8()?).ok_or_else(|| corrupt("unknown field code"))?;
        let values = s.u32()? as usize;
        let map = fields.entry(field).or_default();
        for _ in 0..values {
            let value = s.str16()?;
            let len = s.varint()? as usize;
            map.insert(value, s.deltas(len)?);
        }
    }
    if !r.buf.is_empty() {
        return Err(corrupt("trailing bytes"));
    }

    let term_ids = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();
    let by_id = docs
        .iter()
        .enumerate()
        .map(|(i, d)| ((d.dataset.clone(), d.conversation_id.clone()), i as u32))
        .collect();
    let index = CorpusIndex {
        turn_counts: docs.iter().map(|d| d.turn_count).collect(),
        docs,
        term_ids,
        terms,
        postings,
        fields,
        by_id,
    };
    index.validate().map_err(IndexFileError::Corrupt)?;
    Ok(index)
}

pub fn write_index_file(index: &CorpusIndex, path: &Path) -> Result<(), IndexFileError> {
    std::fs::write(path, encode_index(index))?;
    Ok(())
}

pub fn read_index_file(path: &Path) -> Result<CorpusIndex, IndexFileError> {
    decode_index(&std::fs::read(path)?)
}
