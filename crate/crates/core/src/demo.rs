// SPDX-License-Identifier: Apache-2.0

//! Ledger demo fixtures.
//!
//! A single kernel ledger actor keeps balances in its own storage (account
//! name -> 8-byte big-endian balance) and exposes `transfer(from, to, amount)`
//! and `upgrade(code)`. Block 2 uses `upgrade` to swap in a transfer that
//! charges a flat fee, so the ledger's rules change through an ordinary
//! extrinsic.

use std::io;
use std::path::{Path, PathBuf};

use crate::doc::{render_block, render_hex, EntryDoc, GenesisFile, KernelActorDoc};
use crate::message::{Message, Origin};
use crate::stf::Block;
use crate::value::{ActorId, Value};
use crate::vm::asm::assemble;

/// Fee charged per transfer once the upgrade is installed.
pub const FEE: i64 = 1;

pub const INITIAL_BALANCES: [(&str, i64); 3] = [("A", 100), ("B", 50), ("C", 0)];

/// Registry code that lets anyone `set(name, blob)` a template.
pub const OPEN_REGISTRY_ASM: &str = "\
.fn set
    push 0
    param
    push 1
    param
    sset
    halt
";

pub const LEDGER_ASM: &str = "\
; transfer(from: bytes, to: bytes, amount: int)
; Traps on a negative amount, unknown sender or insufficient funds.
.fn transfer
    push 2
    param
    dup
    push 0
    lt
    jumpif fail         ; amount
    push 0
    param
    sget
    not
    jumpif fail         ; amount from_raw
    toint
    dup 1
    sub                 ; amount new_from
    dup
    push 0
    lt
    jumpif fail
    push 0
    param
    swap
    tobytes
    sset                ; amount
    push 1
    param
    sget
    jumpif credit
    pop
    push 0
    jump add
credit:
    toint
add:
    add
    push 1
    param
    swap
    tobytes
    sset
    halt
fail:
    trap

; upgrade(code: bytes) replaces this actor's code.
.fn upgrade
    push 0
    param
    setcode
    halt
";

pub const LEDGER_FEE_ASM: &str = "\
; transfer(from, to, amount) charging a flat fee of 1 to the sender,
; credited to the \"fees\" account.
.fn transfer
    push 2
    param
    dup
    push 0
    lt
    jumpif fail         ; amount
    push 0
    param
    sget
    not
    jumpif fail         ; amount from_raw
    toint
    dup 1
    sub
    push 1
    sub                 ; amount new_from
    dup
    push 0
    lt
    jumpif fail
    push 0
    param
    swap
    tobytes
    sset                ; amount
    push 1
    param
    sget
    jumpif credit
    pop
    push 0
    jump add
credit:
    toint
add:
    add
    push 1
    param
    swap
    tobytes
    sset
    push \"fees\"
    sget
    jumpif have_fees
    pop
    push 0
    jump add_fee
have_fees:
    toint
add_fee:
    push 1
    add
    push \"fees\"
    swap
    tobytes
    sset
    halt
fail:
    trap

.fn upgrade
    push 0
    param
    setcode
    halt
";

pub fn ledger_id() -> ActorId {
    ActorId::derive(b"demo/ledger")
}

pub fn balance_bytes(v: i64) -> Vec<u8> {
    v.to_be_bytes().to_vec()
}

pub fn genesis_file() -> GenesisFile {
    GenesisFile {
        registry: Some(OPEN_REGISTRY_ASM.to_string()),
        kernel_actors: vec![KernelActorDoc {
            id: ledger_id().to_hex(),
            code: LEDGER_ASM.to_string(),
            storage: INITIAL_BALANCES
                .iter()
                .map(|(k, v)| EntryDoc { key: k.to_string(), value: render_hex(&balance_bytes(*v)) })
                .collect(),
        }],
        ..Default::default()
    }
}

pub fn genesis_toml() -> String {
    toml::to_string(&genesis_file()).expect("genesis serializes")
}

pub fn transfer(from: &str, to: &str, amount: i64) -> Message {
    Message::new(
        ledger_id(),
        "transfer",
        vec![
            Value::bytes(from.as_bytes()).unwrap(),
            Value::bytes(to.as_bytes()).unwrap(),
            Value::Int(amount),
        ],
        Origin::Extrinsic(0),
    )
    .expect("valid transfer")
}

/// A→C 30, B→C 20, then an over-spend C→A 1000 that traps.
pub fn block1() -> Block {
    Block::new(vec![transfer("A", "C", 30), transfer("B", "C", 20), transfer("C", "A", 1000)])
}

/// Installs the fee-charging ledger code.
pub fn block2() -> Block {
    let blob = assemble(LEDGER_FEE_ASM).expect("fee ledger assembles").encode();
    let upgrade = Message::new(
        ledger_id(),
        "upgrade",
        vec![Value::bytes(blob.into_vec()).unwrap()],
        Origin::Extrinsic(0),
    )
    .unwrap();
    Block::new(vec![upgrade])
}

/// A→B 10, C→A 5.
pub fn block3() -> Block {
    Block::new(vec![transfer("A", "B", 10), transfer("C", "A", 5)])
}

pub const GENESIS_FILE: &str = "genesis.toml";
pub const BLOCK_FILES: [&str; 3] = ["block1.json", "block2.json", "block3.json"];

/// Writes the genesis document and the three blocks into `dir`.
pub fn write_fixtures(dir: &Path) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let genesis = dir.join(GENESIS_FILE);
    std::fs::write(&genesis, genesis_toml())?;
    written.push(genesis);
    for (name, block) in BLOCK_FILES.iter().zip([block1(), block2(), block3()]) {
        let path = dir.join(name);
        std::fs::write(&path, render_block(&block))?;
        written.push(path);
    }
    Ok(written)
}
