// SPDX-License-Identifier: Apache-2.0

//! The stack-machine instruction set actors are written in, its canonical
//! binary encoding, a text assembler, and the interpreter.

pub mod asm;
mod codec;
mod exec;
mod instruction;

pub use codec::{decode_program, encode_program, CodeError, HEADER_LEN, MAGIC, VERSION};
pub use exec::{
    create_id, execute, execute_program, execute_traced, Effect, EffectBuffer, Outcome, Status, StorageWrite,
    TrapReason, Undeliverable, STACK_CAPACITY,
};
pub use instruction::{CodeBlob, Instruction, Program, MAX_CODE_SIZE, MAX_FUNCTION_LEN, MAX_PUSH_BYTES};
