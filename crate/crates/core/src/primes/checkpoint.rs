//! Versioned binary checkpoint for the beta search.
//!
//! Layout (little endian):
//! `"RBL1"`, `u16` version, then length-prefixed (`u32`) UTF-8 fields
//! `eps_num`, `eps_den`, then `u64` fields `beta`, `p_beta`, `next_segment`,
//! `segment_size`, then fields `logsum`, `theta` in `fx128:<lo>:<hi>` form,
//! then a SHA-256 digest of all preceding bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::mertens::MertensAccumulator;
use crate::error::{Error, Result};
use crate::fixed::FixedInterval;

pub const MAGIC: &[u8; 4] = b"RBL1";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoint {
    pub eps_num: String,
    pub eps_den: String,
    pub state: MertensAccumulator,
    pub next_segment: u64,
    pub segment_size: u64,
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
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint("truncated checkpoint".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Checkpoint("non-UTF-8 field".into()))
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        put_str(&mut out, &self.eps_num);
        put_str(&mut out, &self.eps_den);
        for v in [self.state.beta, self.state.last_prime, self.next_segment, self.segment_size] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        put_str(&mut out, &self.state.logsum.encode());
        put_str(&mut out, &self.state.theta.encode());
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        if buf.len() < 4 + 2 + 32 || &buf[..4] != MAGIC {
            return Err(Error::Checkpoint("not an RBL1 checkpoint".into()));
        }
        let (body, digest) = buf.split_at(buf.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::Checkpoint("checkpoint digest mismatch".into()));
        }
        let mut r = Reader { buf: body, pos: 4 };
        let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let eps_num = r.string()?;
        let eps_den = r.string()?;
        let beta = r.u64()?;
        let last_prime = r.u64()?;
        let next_segment = r.u64()?;
        let segment_size = r.u64()?;
        let logsum = FixedInterval::decode(&r.string()?)?;
        let theta = FixedInterval::decode(&r.string()?)?;
        if r.pos != body.len() {
            return Err(Error::Checkpoint("trailing bytes in checkpoint".into()));
        }
        Ok(Checkpoint {
            eps_num,
            eps_den,
            state: MertensAccumulator {
                beta,
                last_prime,
                logsum,
                theta,
            },
            next_segment,
            segment_size,
        })
    }

    /// Write atomically: temporary file, then rename.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let res = (|| -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
            fs::rename(&tmp, path)
        })();
        res.map_err(|e| Error::Checkpoint(format!("writing {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let buf = fs::read(path)
            .map_err(|e| Error::Checkpoint(format!("reading {}: {e}", path.display())))?;
        Checkpoint::from_bytes(&buf)
    }
}
