//! Versioned little-endian binary checkpoint of a [`QNetwork`].
//!
//! Layout: magic `UMQN`, `u32` version, `u32` layer-size count, that many
//! `u64` sizes, then for each layer its weights (input-major) followed by its
//! biases as `f64`. Floats are stored by bit pattern, so a round trip is exact.

use std::path::Path;

use super::network::{Dense, QNetwork};
use crate::error::{Result, SimError};

const MAGIC: &[u8; 4] = b"UMQN";
const VERSION: u32 = 1;

pub fn encode(net: &QNetwork) -> Vec<u8> {
    let sizes = net.sizes();
    let mut out = Vec::with_capacity(12 + 8 * sizes.len() + 8 * net.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
    for s in &sizes {
        out.extend_from_slice(&(*s as u64).to_le_bytes());
    }
    for l in net.layers() {
        for v in l.weights.iter().chain(&l.biases) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
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
            .ok_or_else(|| SimError::BadCheckpoint("truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| SimError::BadCheckpoint("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode(buf: &[u8]) -> Result<QNetwork> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(SimError::BadCheckpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(SimError::BadCheckpoint(format!("unsupported version {version}")));
    }
    let n = r.u32()? as usize;
    if n < 2 {
        return Err(SimError::BadCheckpoint("need at least two layer sizes".into()));
    }
    let sizes = (0..n)
        .map(|_| r.u64().map(|s| s as usize))
        .collect::<Result<Vec<_>>>()?;
    let mut layers = Vec::with_capacity(n - 1);
    for w in sizes.windows(2) {
        let count = w[0]
            .checked_mul(w[1])
            .ok_or_else(|| SimError::BadCheckpoint("size overflow".into()))?;
        let weights = r.f64s(count)?;
        let biases = r.f64s(w[1])?;
        layers.push(Dense {
            inputs: w[0],
            outputs: w[1],
            weights,
            biases,
        });
    }
    if r.pos != buf.len() {
        return Err(SimError::BadCheckpoint("trailing bytes".into()));
    }
    QNetwork::from_layers(layers)
}

pub fn save(net: &QNetwork, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    }
    std::fs::write(path, encode(net)).map_err(|e| SimError::io(path, e))
}

pub fn load(path: &Path) -> Result<QNetwork> {
    if !path.exists() {
        return Err(SimError::MissingCheckpoint(path.to_path_buf()));
    }
    let buf = std::fs::read(path).map_err(|e| SimError::io(path, e))?;
    decode(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), hidden in 1usize..9, out in 1usize..12) {
            let net = QNetwork::new(&[3, hidden, out], &mut stream(seed));
            let back = decode(&encode(&net)).unwrap();
            prop_assert_eq!(back, net);
        }
    }

    #[test]
    fn rejects_corruption() {
        let net = QNetwork::zeros(&[2, 3]);
        let mut bytes = encode(&net);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        bytes.push(0);
        assert!(decode(&bytes).is_err());
        let mut bad = encode(&net);
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
    }

    #[test]
    fn file_round_trip_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/net.ckpt");
        let net = QNetwork::new(&[4, 5, 6], &mut stream(1));
        save(&net, &p).unwrap();
        assert_eq!(load(&p).unwrap(), net);
        assert!(matches!(
            load(&dir.path().join("none.ckpt")),
            Err(SimError::MissingCheckpoint(_))
        ));
    }
}
