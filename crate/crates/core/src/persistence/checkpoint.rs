//! Network checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "ADCK"  u32 version
//! u32 len, topology JSON
//! u64 parameter count, then that many f32 parameters
//! u32 len, provenance JSON
//! u32 CRC32 of every preceding byte
//! ```
//!
//! Parameters are in the network's flat order: body layers (weights
//! row-major, then biases), policy head, value head.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::wire::{read_file, write_atomic, Reader, Writer};
use crate::envs::EnvSpec;
use crate::error::{Error, FormatError, Result};
use crate::nn::{ActorCriticNet, Topology};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"ADCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Where a set of weights came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// `ppo`, `distill`, `finetune`, ...
    pub algorithm: String,
    pub env: EnvSpec,
    pub seed: u64,
    pub env_steps: u64,
    pub config_hash: String,
}

pub fn encode_checkpoint(net: &ActorCriticNet, provenance: &Provenance) -> Result<Vec<u8>> {
    if let Some(i) = net.params().iter().position(|p| !p.is_finite()) {
        return Err(Error::Numeric(format!("parameter {i} is not finite; refusing to save")));
    }
    let mut w = Writer::new();
    w.bytes(&CHECKPOINT_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    w.blob(&serde_json::to_vec(net.topology()).expect("topology serializes"))?;
    w.u64(net.parameter_count() as u64);
    for &p in net.params() {
        w.f32(p as f32);
    }
    w.blob(&serde_json::to_vec(provenance).expect("provenance serializes"))?;
    let crc = crc32fast::hash(&w.buf);
    w.u32(crc);
    Ok(w.buf)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(ActorCriticNet, Provenance), FormatError> {
    let mut header = Reader::new(bytes);
    header.magic(CHECKPOINT_MAGIC)?;
    header.version(CHECKPOINT_VERSION)?;
    // The checksum is verified before any payload is interpreted.
    let header_len = header.position();
    if bytes.len() < header_len + 4 {
        return Err(FormatError::Truncated {
            offset: bytes.len(),
            needed: header_len + 4 - bytes.len(),
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(FormatError::Checksum { stored, computed });
    }
    let mut r = Reader::new(body);
    r.take(header_len)?;
    let topology: Topology = r.json("topology")?;
    topology
        .validate()
        .map_err(|e| FormatError::Malformed(format!("topology: {e}")))?;
    let count = r.u64()?;
    if count != topology.parameter_count() as u64 {
        return Err(FormatError::Malformed(format!(
            "{count} parameters stored but topology ({}) needs {}",
            topology.describe(),
            topology.parameter_count()
        )));
    }
    let mut params = Vec::with_capacity(count as usize);
    for _ in 0..count {
        params.push(f64::from(r.f32()?));
    }
    let provenance: Provenance = r.json("provenance")?;
    r.finish()?;
    let net = ActorCriticNet::from_params(topology, params)
        .map_err(|e| FormatError::Malformed(e.to_string()))?;
    Ok((net, provenance))
}

pub fn save_checkpoint(net: &ActorCriticNet, provenance: &Provenance, path: &Path) -> Result<()> {
    write_atomic(path, &encode_checkpoint(net, provenance)?)
}

pub fn load_checkpoint(path: &Path) -> Result<(ActorCriticNet, Provenance)> {
    decode_checkpoint(&read_file(path)?).map_err(|kind| Error::format(path, kind))
}

/// Errors unless `net` has the input and output sizes of `spec`.
pub fn check_fits(net: &ActorCriticNet, spec: &EnvSpec) -> Result<()> {
    if net.obs_dim() != spec.obs_dim() || net.action_count() != spec.action_count() {
        return Err(Error::Config(format!(
            "network ({}) does not fit {} (obs {}, {} actions)",
            net.topology().describe(),
            spec.label(),
            spec.obs_dim(),
            spec.action_count()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn sample() -> (ActorCriticNet, Provenance) {
        let net = ActorCriticNet::init(Topology::new(10, 2, &[16, 16]), &mut rng::stream(1, "init", 0))
            .unwrap();
        let prov = Provenance {
            algorithm: "ppo".into(),
            env: EnvSpec::chain(10, 0.1),
            seed: 1,
            env_steps: 2048,
            config_hash: "abc".into(),
        };
        (net, prov)
    }

    #[test]
    fn round_trip_is_exact_at_f32() {
        let (net, prov) = sample();
        let bytes = encode_checkpoint(&net, &prov).unwrap();
        let (back, prov_back) = decode_checkpoint(&bytes).unwrap();
        assert_eq!(prov_back, prov);
        for (a, b) in net.params().iter().zip(back.params()) {
            assert_eq!(*a as f32, *b as f32);
        }
        assert_eq!(encode_checkpoint(&back, &prov_back).unwrap(), bytes);
    }

    #[test]
    fn header_fields() {
        let (net, prov) = sample();
        let bytes = encode_checkpoint(&net, &prov).unwrap();
        assert_eq!(&bytes[..4], b"ADCK");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        let n = bytes.len();
        let crc = u32::from_le_bytes(bytes[n - 4..].try_into().unwrap());
        assert_eq!(crc, crc32fast::hash(&bytes[..n - 4]));
    }

    #[test]
    fn corruption_is_detected() {
        let (net, prov) = sample();
        let bytes = encode_checkpoint(&net, &prov).unwrap();
        for i in [8, 20, bytes.len() / 2, bytes.len() - 10] {
            let mut bad = bytes.clone();
            bad[i] ^= 0x40;
            assert!(decode_checkpoint(&bad).is_err(), "flip at {i} accepted");
        }
        let mut bad = bytes.clone();
        bad[bytes.len() / 2] ^= 1;
        assert!(matches!(decode_checkpoint(&bad), Err(FormatError::Checksum { .. })));
    }

    #[test]
    fn bad_magic_version_and_empty() {
        let (net, prov) = sample();
        let mut bytes = encode_checkpoint(&net, &prov).unwrap();
        assert!(matches!(decode_checkpoint(&[]), Err(FormatError::Truncated { .. })));
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(decode_checkpoint(&wrong), Err(FormatError::BadMagic { .. })));
        bytes[4] = 2;
        assert!(matches!(
            decode_checkpoint(&bytes),
            Err(FormatError::UnsupportedVersion { found: 2, supported: 1 })
        ));
    }

    #[test]
    fn truncation_is_detected() {
        let (net, prov) = sample();
        let bytes = encode_checkpoint(&net, &prov).unwrap();
        for cut in [3, 7, 11, 40, bytes.len() - 1] {
            assert!(decode_checkpoint(&bytes[..cut]).is_err(), "cut at {cut} accepted");
        }
    }

    #[test]
    fn non_finite_refused() {
        let (mut net, prov) = sample();
        net.params_mut()[3] = f64::NAN;
        assert!(matches!(encode_checkpoint(&net, &prov), Err(Error::Numeric(_))));
    }

    #[test]
    fn mismatch_names_both_shapes() {
        let (net, _) = sample();
        let err = check_fits(&net, &EnvSpec::grid(3)).unwrap_err().to_string();
        assert!(err.contains("obs 10") && err.contains("obs 9"), "{err}");
    }

    #[test]
    fn save_and_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let (net, prov) = sample();
        save_checkpoint(&net, &prov, &path).unwrap();
        let (back, _) = load_checkpoint(&path).unwrap();
        assert_eq!(back.topology(), net.topology());
        let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(names.len(), 1, "temporary file left behind");
        let missing = load_checkpoint(&dir.path().join("nope")).unwrap_err();
        assert!(matches!(missing, Error::Io { .. }));
    }
}
