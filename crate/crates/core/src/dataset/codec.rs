use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;

use super::{DatasetError, DatasetPool, Sample, SampleMeta};
use crate::intention::{Dlm, LpeIntention};

const MAGIC: &[u8; 8] = b"INTDSET\0";
const INDEX_MAGIC: &[u8; 8] = b"INTDSIDX";
const VERSION: u32 = 1;

fn bad(msg: impl Into<String>) -> DatasetError {
    DatasetError::Format(msg.into())
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u16).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DatasetError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| bad("truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, DatasetError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, DatasetError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, DatasetError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, DatasetError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, DatasetError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, DatasetError> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| bad("non-utf8 string"))
    }
}

fn encode_record(s: &Sample, eval: bool) -> Vec<u8> {
    let mut out = Vec::with_capacity(s.obs.len() + 256);
    out.extend_from_slice(&s.obs);
    out.push(s.dlm as u8);
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::default());
    enc.write_all(&s.lpe.indices).expect("in-memory write");
    let block = enc.finish().expect("in-memory deflate");
    out.extend_from_slice(&(block.len() as u32).to_le_bytes());
    out.extend_from_slice(&block);
    out.extend_from_slice(&s.v.to_le_bytes());
    out.extend_from_slice(&s.steer.to_le_bytes());
    put_str(&mut out, &s.meta.map_id);
    put_str(&mut out, &s.meta.task_id);
    out.extend_from_slice(&s.meta.time.to_le_bytes());
    out.push(eval as u8);
    out
}

/// Serializes the pool: header (magic, version, count, observation and
/// LPE dimensions), length-prefixed records, then an index of record offsets.
pub fn encode_pool(pool: &DatasetPool) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(pool.len() as u64).to_le_bytes());
    for d in [pool.obs_h, pool.obs_w, pool.lpe_size] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    let mut offsets = Vec::with_capacity(pool.len());
    for (i, s) in pool.samples().iter().enumerate() {
        offsets.push(out.len() as u64);
        let rec = encode_record(s, pool.is_eval(i));
        out.extend_from_slice(&(rec.len() as u32).to_le_bytes());
        out.extend_from_slice(&rec);
    }
    let index_at = out.len() as u64;
    for o in offsets {
        out.extend_from_slice(&o.to_le_bytes());
    }
    out.extend_from_slice(&index_at.to_le_bytes());
    out.extend_from_slice(INDEX_MAGIC);
    out
}

pub fn decode_pool(buf: &[u8]) -> Result<DatasetPool, DatasetError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let count = r.u64()? as usize;
    let (h, w, s) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    if buf.len() < 16 || &buf[buf.len() - 8..] != INDEX_MAGIC {
        return Err(bad("missing index footer"));
    }
    let index_at = u64::from_le_bytes(buf[buf.len() - 16..buf.len() - 8].try_into().unwrap()) as usize;
    if index_at.checked_add(count * 8) != Some(buf.len() - 16) {
        return Err(bad("index size does not match record count"));
    }
    let mut idx = Reader { buf, pos: index_at };
    let mut pool = DatasetPool::new(h, w, s);
    for _ in 0..count {
        let off = idx.u64()? as usize;
        let mut rec = Reader { buf, pos: off };
        let len = rec.u32()? as usize;
        let body = rec.take(len)?;
        let mut b = Reader { buf: body, pos: 0 };
        let obs = b.take(h * w * 3)?.to_vec();
        let dlm = Dlm::from_byte(b.take(1)?[0]).ok_or_else(|| bad("bad intention label"))?;
        let n = b.u32()? as usize;
        let mut indices = Vec::with_capacity(s * s);
        DeflateDecoder::new(b.take(n)?)
            .read_to_end(&mut indices)
            .map_err(|e| bad(format!("lpe block: {e}")))?;
        let lpe = LpeIntention::from_indices(s, indices).ok_or_else(|| bad("bad lpe raster"))?;
        let v = b.f32()?;
        let steer = b.f32()?;
        let meta = SampleMeta {
            map_id: b.string()?,
            task_id: b.string()?,
            time: b.f64()?,
        };
        let eval = b.take(1)?[0] != 0;
        if b.pos != body.len() {
            return Err(bad("record has trailing bytes"));
        }
        pool.push_with_split(
            Sample {
                obs,
                dlm,
                lpe,
                v,
                steer,
                meta,
            },
            eval,
        )
        .map_err(|e| bad(e.to_string()))?;
    }
    Ok(pool)
}

pub fn write_pool(pool: &DatasetPool, path: &Path) -> Result<(), DatasetError> {
    fs::write(path, encode_pool(pool)).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_pool(path: &Path) -> Result<DatasetPool, DatasetError> {
    let buf = fs::read(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_pool(&buf)
}
