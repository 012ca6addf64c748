use std::fs;
use std::path::Path;

use super::net::{IntentionNet, NetConfig, NetKind};
use super::NetError;

const MAGIC: &[u8; 8] = b"INTNETCK";
const VERSION: u32 = 1;

fn take<'a>(buf: &mut &'a [u8], n: usize) -> Result<&'a [u8], NetError> {
    if buf.len() < n {
        return Err(NetError::Checkpoint("truncated checkpoint".into()));
    }
    let (a, b) = buf.split_at(n);
    *buf = b;
    Ok(a)
}

fn u32_at(buf: &mut &[u8]) -> Result<u32, NetError> {
    Ok(u32::from_le_bytes(take(buf, 4)?.try_into().unwrap()))
}

/// Serializes the weights: magic, version, kind tag, JSON config, then each
/// tensor as (name, shape, f32 little-endian values).
pub fn to_bytes(net: &mut IntentionNet<f32>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(net.kind.tag());
    let cfg = serde_json::to_vec(&net.cfg).expect("config serializes");
    out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
    out.extend_from_slice(&cfg);
    let params = net.params_mut();
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in params {
        out.extend_from_slice(&(p.name.len() as u16).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        out.push(p.shape.len() as u8);
        for &d in &p.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in p.value.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn from_bytes(mut buf: &[u8]) -> Result<IntentionNet<f32>, NetError> {
    let b = &mut buf;
    if take(b, 8)? != MAGIC {
        return Err(NetError::Checkpoint("bad magic".into()));
    }
    let version = u32_at(b)?;
    if version != VERSION {
        return Err(NetError::Checkpoint(format!("unsupported version {version}")));
    }
    let kind = NetKind::from_tag(take(b, 1)?[0]).ok_or_else(|| NetError::Checkpoint("unknown net kind".into()))?;
    let n = u32_at(b)? as usize;
    let cfg: NetConfig =
        serde_json::from_slice(take(b, n)?).map_err(|e| NetError::Checkpoint(format!("config: {e}")))?;
    let mut net = IntentionNet::<f32>::new(kind, &cfg)?;
    let count = u32_at(b)? as usize;
    let mut params = net.params_mut();
    if count != params.len() {
        return Err(NetError::Checkpoint(format!(
            "{count} tensors, net has {}",
            params.len()
        )));
    }
    for p in params.iter_mut() {
        let len = u16::from_le_bytes(take(b, 2)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(take(b, len)?).map_err(|_| NetError::Checkpoint("tensor name".into()))?;
        if name != p.name {
            return Err(NetError::Checkpoint(format!(
                "expected tensor {}, found {name}",
                p.name
            )));
        }
        let ndim = take(b, 1)?[0] as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(u32_at(b)? as usize);
        }
        if shape != p.shape {
            return Err(NetError::Checkpoint(format!(
                "{name}: shape {shape:?}, expected {:?}",
                p.shape
            )));
        }
        for v in p.value.iter_mut() {
            *v = f32::from_le_bytes(take(b, 4)?.try_into().unwrap());
        }
    }
    drop(params);
    if !b.is_empty() {
        return Err(NetError::Checkpoint("trailing bytes".into()));
    }
    Ok(net)
}

pub fn save(net: &mut IntentionNet<f32>, path: &Path) -> Result<(), NetError> {
    fs::write(path, to_bytes(net)).map_err(|e| NetError::Io(format!("{}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<IntentionNet<f32>, NetError> {
    let bytes = fs::read(path).map_err(|e| NetError::Io(format!("{}: {e}", path.display())))?;
    from_bytes(&bytes)
}
