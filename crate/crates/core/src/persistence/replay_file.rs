//! Replay-buffer files.
//!
//! ```text
//! "ADRB"  u32 version  u32 obs_dim  u32 action_count  u64 record_count  u64 seed
//! record_count x (obs_dim f32, action_count f32, u16 action)
//! u32 len, metadata JSON
//! ```

use std::path::Path;

use super::wire::{fit_u32, read_file, write_atomic, Reader, Writer};
use crate::distill::{ReplayBuffer, ReplayMetadata, ReplayRecord};
use crate::error::{Error, FormatError, Result};

pub const REPLAY_MAGIC: [u8; 4] = *b"ADRB";
pub const REPLAY_VERSION: u32 = 1;

pub fn encode_replay(buffer: &ReplayBuffer) -> Result<Vec<u8>> {
    buffer.validate()?;
    let mut w = Writer::new();
    w.bytes(&REPLAY_MAGIC);
    w.u32(REPLAY_VERSION);
    w.u32(fit_u32(buffer.obs_dim, "obs_dim")?);
    w.u32(fit_u32(buffer.action_count, "action_count")?);
    w.u64(buffer.len() as u64);
    w.u64(buffer.seed);
    for r in &buffer.records {
        r.observation.iter().for_each(|&v| w.f32(v));
        r.teacher_probs.iter().for_each(|&p| w.f32(p));
        w.u16(r.action);
    }
    w.blob(&serde_json::to_vec(&buffer.metadata).expect("metadata serializes"))?;
    Ok(w.buf)
}

pub fn decode_replay(bytes: &[u8]) -> Result<ReplayBuffer, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(REPLAY_MAGIC)?;
    r.version(REPLAY_VERSION)?;
    let obs_dim = r.u32()? as usize;
    let action_count = r.u32()? as usize;
    let count = r.u64()?;
    let seed = r.u64()?;
    // Check the declared size up front so a corrupt count cannot trigger a
    // huge allocation.
    let record_bytes = (obs_dim as u64 + action_count as u64) * 4 + 2;
    let available = (bytes.len() - r.position()) as u64;
    if count.saturating_mul(record_bytes) > available {
        return Err(FormatError::Truncated {
            offset: r.position(),
            needed: usize::try_from(count.saturating_mul(record_bytes) - available).unwrap_or(usize::MAX),
        });
    }
    let mut records = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let observation = (0..obs_dim).map(|_| r.f32()).collect::<Result<_, _>>()?;
        let teacher_probs = (0..action_count).map(|_| r.f32()).collect::<Result<_, _>>()?;
        let action = r.u16()?;
        records.push(ReplayRecord {
            observation,
            teacher_probs,
            action,
        });
    }
    let metadata: ReplayMetadata = r.json("metadata")?;
    r.finish()?;
    let buffer = ReplayBuffer {
        obs_dim,
        action_count,
        seed,
        records,
        metadata,
    };
    buffer
        .validate()
        .map_err(|e| FormatError::Malformed(e.to_string()))?;
    Ok(buffer)
}

pub fn save_replay(buffer: &ReplayBuffer, path: &Path) -> Result<()> {
    write_atomic(path, &encode_replay(buffer)?)
}

pub fn load_replay(path: &Path) -> Result<ReplayBuffer> {
    decode_replay(&read_file(path)?).map_err(|kind| Error::format(path, kind))
}
