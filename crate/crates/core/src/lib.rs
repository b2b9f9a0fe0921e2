// SPDX-License-Identifier: Apache-2.0

//! A deterministic actor-model virtual machine that can serve as a blockchain
//! state transition function.
//!
//! World state is an ordered set of actors (id, code, storage). A block is an
//! ordered list of extrinsic messages; applying it drains a single global FIFO
//! queue, running each message against its target actor's stack-machine code
//! and committing the buffered effects atomically. The resulting state hashes
//! to a reproducible root.

pub mod demo;
pub mod doc;
pub mod genesis;
pub mod message;
pub mod snapshot;
pub mod state;
pub mod stf;
pub mod value;
pub mod vm;

pub use genesis::{build_genesis, registry_id, resolve_template, GenesisDoc, GenesisError};
pub use message::{Message, MessageError, MessageQueue, Origin};
pub use snapshot::{
    decode_state, encode_state, load_snapshot, save_snapshot, state_root, SnapshotError,
    StateRoot,
};
pub use state::{Actor, StorageError, StorageMap, WorldState};
pub use stf::{apply_block, process_message, Block, Disposition, Receipt, VmConfig};
pub use value::{ActorId, Bytes, Value, ValueError};
pub use vm::{
    decode_program, encode_program, execute, CodeBlob, EffectBuffer, Instruction, Outcome,
    Program, Status, TrapReason,
};
