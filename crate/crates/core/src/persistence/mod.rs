//! On-disk formats: checkpoints, replay buffers, and CSV outputs.

mod checkpoint;
mod csv_out;
mod replay_file;
mod wire;

pub use checkpoint::{
    check_fits, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Provenance,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use csv_out::{
    eval_csv, learning_curve_csv, loss_curve_csv, read_eval_csv, sweep_csv, write_text, EvalRow,
};
pub use replay_file::{decode_replay, encode_replay, load_replay, save_replay, REPLAY_MAGIC, REPLAY_VERSION};
pub use wire::write_atomic;
