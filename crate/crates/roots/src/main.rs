// SPDX-License-Identifier: Apache-2.0

//! Prints the empty-state and ledger-genesis roots, one per line.

use actorvm_core::{build_genesis, demo, state_root, WorldState};

fn main() {
    let ledger = build_genesis(&demo::genesis_file().to_doc().expect("demo genesis")).expect("demo genesis");
    println!("empty {}", state_root(&WorldState::new()));
    println!("ledger {}", state_root(&ledger));
}
