// SPDX-License-Identifier: Apache-2.0

//! Seeded fixture generators shared by the integration suites.

#![allow(dead_code)]

use actorvm_core::genesis::{GenesisDoc, KernelActor};
use actorvm_core::vm::{Instruction, Program};
use actorvm_core::{ActorId, Block, Message, Origin, Value};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn actor_id(n: u8) -> ActorId {
    let mut raw = [0u8; 32];
    raw[0] = 0x10;
    raw[31] = n;
    ActorId(raw)
}

pub const FUNCTIONS: [&str; 3] = ["a", "b", "c"];
pub const TEMPLATES: [&str; 2] = ["t0", "t1"];

fn bytes(b: &[u8]) -> Instruction {
    Instruction::PushBytes(b.to_vec())
}

/// Random straight-line snippet exercising one kind of host or stack operation.
pub fn snippet(rng: &mut TestRng, n_actors: u8, sends_left: &mut u32) -> Vec<Instruction> {
    use Instruction::*;
    let key = |rng: &mut TestRng| vec![b'k', rng.gen_range(0..4u8)];
    let target = |rng: &mut TestRng| {
        // Occasionally an id that is not in state.
        let n = rng.gen_range(0..n_actors + 1);
        bytes(&actor_id(n).0)
    };
    match rng.gen_range(0..10) {
        0 | 1 => {
            let k = key(rng);
            let len = rng.gen_range(0..4);
            let v: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            vec![bytes(&k), bytes(&v), SSet]
        }
        2 => vec![bytes(&key(rng)), SGet, Pop, Pop],
        3 => vec![bytes(&key(rng)), SDel],
        4 if *sends_left > 0 => {
            *sends_left -= 1;
            let f = if rng.gen_bool(0.9) { FUNCTIONS.choose(rng).unwrap().as_bytes() } else { &b"zz"[..] };
            let n = rng.gen_range(0..3u8);
            let mut code = vec![target(rng), bytes(f)];
            for _ in 0..n {
                code.push(PushInt(rng.gen_range(-5..5)));
            }
            code.push(Send(n));
            code
        }
        5 if rng.gen_bool(0.3) => {
            let t = if rng.gen_bool(0.9) { TEMPLATES.choose(rng).unwrap().as_bytes() } else { &b"missing"[..] };
            vec![bytes(t), PushInt(rng.gen_range(0..3)), Create(1), Pop]
        }
        6 => vec![target(rng), bytes(&key(rng)), XGet, Pop, Pop],
        7 => {
            let op = [Add, Sub, Mul, Div].choose(rng).unwrap().clone();
            vec![PushInt(rng.gen_range(-3..4)), PushInt(rng.gen_range(-3..4)), op, Pop]
        }
        8 if rng.gen_bool(0.1) => vec![Trap],
        _ => vec![ParamCount, Pop],
    }
}

/// Random function of straight-line snippets emitting at most `max_sends` messages.
pub fn random_function(rng: &mut TestRng, n_actors: u8, max_sends: u32) -> Vec<Instruction> {
    let mut sends = max_sends;
    let mut code = Vec::new();
    for _ in 0..rng.gen_range(0..8) {
        code.extend(snippet(rng, n_actors, &mut sends));
    }
    if rng.gen_bool(0.5) {
        code.push(Instruction::Halt);
    }
    code
}

pub fn random_program(rng: &mut TestRng, n_actors: u8) -> Program {
    let mut p = Program::new();
    for f in FUNCTIONS {
        if rng.gen_bool(0.8) {
            p.insert(f, random_function(rng, n_actors, 3)).unwrap();
        }
    }
    p
}

/// Genesis with `n_actors` random kernel actors (ids `actor_id(0..n)`) and two templates.
pub fn random_genesis(rng: &mut TestRng, n_actors: u8) -> GenesisDoc {
    let mut doc = GenesisDoc::default();
    for t in TEMPLATES {
        let mut p = Program::new();
        p.insert("init", random_function(rng, n_actors, 1)).unwrap();
        doc.templates.insert(t.as_bytes().to_vec(), p);
    }
    for n in 0..n_actors {
        let storage = (0..rng.gen_range(0..3u8)).map(|i| (vec![b'k', i], vec![rng.gen()])).collect();
        doc.kernel_actors.push(KernelActor { id: actor_id(n), program: random_program(rng, n_actors), storage });
    }
    doc
}

pub fn random_block(rng: &mut TestRng, n_actors: u8, max_len: usize) -> Block {
    let len = rng.gen_range(0..=max_len);
    let msgs = (0..len)
        .map(|_| {
            let to = actor_id(rng.gen_range(0..n_actors + 1));
            let f = if rng.gen_bool(0.9) { *FUNCTIONS.choose(rng).unwrap() } else { "zz" };
            let params = (0..rng.gen_range(0..3)).map(|_| Value::Int(rng.gen_range(-9..9))).collect();
            Message::new(to, f, params, Origin::Extrinsic(0)).unwrap()
        })
        .collect();
    Block::new(msgs)
}
