//! Named parameter collection and the on-disk parameter archive.
//!
//! Archive layout: one JSON header line listing `(name, shape)` per
//! parameter in registration order, then the concatenated raw little-endian
//! f64 payloads in that same order.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct ParamStore {
    entries: Vec<(String, Tensor)>,
    index: HashMap<String, usize>,
}

impl Default for ParamStore {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore { entries: Vec::new(), index: HashMap::new() }
    }

    pub fn register(&mut self, name: &str, value: Tensor) -> Result<usize> {
        if self.index.contains_key(name) {
            return Err(Error::InvalidInput(format!("duplicate parameter name {name:?}")));
        }
        let id = self.entries.len();
        self.index.insert(name.to_string(), id);
        self.entries.push((name.to_string(), value));
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.entries[id].0
    }

    pub fn get(&self, id: usize) -> &Tensor {
        &self.entries[id].1
    }

    pub fn get_mut(&mut self, id: usize) -> &mut Tensor {
        &mut self.entries[id].1
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Total scalar value count across all parameters.
    pub fn total_values(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    /// Places every parameter on the tape; `result[i]` is the node for
    /// parameter id `i`.
    pub fn bind(&self, tape: &mut Tape) -> Vec<NodeId> {
        self.entries.iter().enumerate().map(|(i, (_, t))| tape.param(i, t.clone())).collect()
    }

    /// Converts a backward gradient map into a dense per-parameter vector,
    /// zero-filled for parameters missing from the map.
    pub fn grads_to_vec(&self, map: &std::collections::BTreeMap<usize, Tensor>) -> Vec<Tensor> {
        (0..self.len())
            .map(|i| map.get(&i).cloned().unwrap_or_else(|| Tensor::zeros_like(self.get(i))))
            .collect()
    }

    pub fn write_archive<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<ArchiveEntry> = self
            .entries
            .iter()
            .map(|(name, t)| ArchiveEntry { name: name.clone(), shape: t.shape().to_vec() })
            .collect();
        let mut line = serde_json::to_string(&header)?;
        line.push('\n');
        w.write_all(line.as_bytes())?;
        for (_, t) in &self.entries {
            for v in t.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_archive<R: Read>(r: R) -> Result<Self> {
        let mut reader = BufReader::new(r);
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let header: Vec<ArchiveEntry> = serde_json::from_str(line.trim_end())
            .map_err(|e| Error::Checkpoint(format!("corrupt header: {e}")))?;
        let mut store = ParamStore::new();
        for entry in &header {
            let numel: usize = entry.shape.iter().product();
            let mut buf = vec![0u8; numel * 8];
            reader.read_exact(&mut buf).map_err(|_| {
                Error::Checkpoint(format!("payload truncated while reading parameter {:?}", entry.name))
            })?;
            let data: Vec<f64> = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let tensor = Tensor::new(entry.shape.clone(), data)
                .map_err(|e| Error::Checkpoint(format!("parameter {:?}: {e}", entry.name)))?;
            store.register(&entry.name, tensor)?;
        }
        let mut extra = [0u8; 1];
        if reader.read(&mut extra)? != 0 {
            return Err(Error::Checkpoint("trailing bytes after final parameter".into()));
        }
        Ok(store)
    }

    pub fn save_archive<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_archive(std::io::BufWriter::new(file))
    }

    pub fn load_archive<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_archive(file)
    }
}

#[derive(Serialize, Deserialize)]
struct ArchiveEntry {
    name: String,
    shape: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::init_params;

    fn sample_store() -> ParamStore {
        let mut s = ParamStore::new();
        s.register("enc.w", init_params(&[4, 3], 1)).unwrap();
        s.register("enc.b", Tensor::zeros(1, 3)).unwrap();
        s.register("head.w", init_params(&[3, 2], 2)).unwrap();
        s
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut s = ParamStore::new();
        s.register("w", Tensor::zeros(1, 1)).unwrap();
        assert!(s.register("w", Tensor::zeros(1, 1)).is_err());
    }

    #[test]
    fn archive_round_trip_is_bit_exact() {
        let store = sample_store();
        let mut buf = Vec::new();
        store.write_archive(&mut buf).unwrap();
        let loaded = ParamStore::read_archive(&buf[..]).unwrap();
        assert_eq!(loaded.len(), store.len());
        for i in 0..store.len() {
            assert_eq!(loaded.name(i), store.name(i));
            let (a, b) = (store.get(i), loaded.get(i));
            assert_eq!(a.shape(), b.shape());
            assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn truncated_payload_names_the_parameter_at_fault() {
        let store = sample_store();
        let mut buf = Vec::new();
        store.write_archive(&mut buf).unwrap();
        buf.truncate(buf.len() - 8);
        let err = ParamStore::read_archive(&buf[..]).unwrap_err();
        assert!(err.to_string().contains("head.w"), "{err}");
    }

    #[test]
    fn corrupt_header_rejected() {
        let err = ParamStore::read_archive(&b"not json\n"[..]).unwrap_err();
        assert!(err.to_string().contains("corrupt header"), "{err}");
    }
}
