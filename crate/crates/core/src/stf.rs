// SPDX-License-Identifier: Apache-2.0

//! The state transition function: apply a block of extrinsics by draining the
//! global message queue.
//!
//! Each message is dispatched to its target actor, executed with a fixed fuel
//! budget, and its effects are committed atomically or not at all. Emitted
//! messages go to the tail of the queue, behind everything already waiting.

use std::fmt;

use thiserror::Error;

use crate::message::{Message, MessageQueue, Origin};
use crate::state::{Actor, WorldState};
use crate::value::ActorId;
use crate::vm::{execute, Effect, EffectBuffer, Status, TrapReason, Undeliverable};

/// Name of the function every created actor receives as its first message.
pub const INIT_FUNCTION: &[u8] = b"init";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VmConfig {
    pub fuel_per_message: u64,
    pub max_messages_per_block: u64,
    pub max_queue_len: u64,
}

impl Default for VmConfig {
    fn default() -> Self {
        VmConfig { fuel_per_message: 10_000, max_messages_per_block: 100_000, max_queue_len: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config limit `{0}` must be at least 1")]
pub struct ConfigError(pub &'static str);

impl VmConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("fuel_per_message", self.fuel_per_message),
            ("max_messages_per_block", self.max_messages_per_block),
            ("max_queue_len", self.max_queue_len),
        ] {
            if v == 0 {
                return Err(ConfigError(name));
            }
        }
        Ok(())
    }
}

/// An ordered list of extrinsics. Origins are always `Extrinsic(position)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Block {
    extrinsics: Vec<Message>,
}

impl Block {
    pub fn new(extrinsics: Vec<Message>) -> Self {
        let extrinsics = extrinsics
            .into_iter()
            .enumerate()
            .map(|(i, m)| m.with_origin(Origin::Extrinsic(i as u64)))
            .collect();
        Block { extrinsics }
    }

    pub fn extrinsics(&self) -> &[Message] {
        &self.extrinsics
    }

    pub fn len(&self) -> usize {
        self.extrinsics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.extrinsics.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Disposition {
    Processed,
    IgnoredNoActor,
    IgnoredNoFunction,
    IgnoredBadCode,
    Trapped(TrapReason),
    /// Still queued when the per-block message budget ran out.
    DroppedBudget,
}

impl fmt::Display for Disposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Disposition::Processed => f.write_str("Processed"),
            Disposition::IgnoredNoActor => f.write_str("IgnoredNoActor"),
            Disposition::IgnoredNoFunction => f.write_str("IgnoredNoFunction"),
            Disposition::IgnoredBadCode => f.write_str("IgnoredBadCode"),
            Disposition::Trapped(r) => write!(f, "Trapped({r})"),
            Disposition::DroppedBudget => f.write_str("DroppedBudget"),
        }
    }
}

/// Outcome of one message. Anything but `Processed` left the state untouched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Receipt {
    pub message: Message,
    pub disposition: Disposition,
    pub fuel_used: u64,
    pub messages_emitted: u64,
    pub actors_created: u64,
}

impl Receipt {
    fn without_effects(message: &Message, disposition: Disposition, fuel_used: u64) -> Self {
        Receipt { message: message.clone(), disposition, fuel_used, messages_emitted: 0, actors_created: 0 }
    }
}

/// Processes a single message against `s`, returning the new state, the
/// messages it emitted (in emission order), and its receipt.
pub fn process_message(s: &WorldState, m: &Message, cfg: &VmConfig) -> (WorldState, Vec<Message>, Receipt) {
    let mut next = s.clone();
    let (emitted, receipt) = step(&mut next, m, cfg, u64::MAX);
    (next, emitted, receipt)
}

/// Applies `b` to `s`. Returns the new state and one receipt per message that
/// entered the queue, in processing order (dropped messages last).
pub fn apply_block(s: &WorldState, b: &Block, cfg: &VmConfig) -> (WorldState, Vec<Receipt>) {
    apply_block_observed(s, b, cfg, |_, _| {})
}

/// [`apply_block`] that calls `observe` with the state after each message.
pub fn apply_block_observed(
    s: &WorldState,
    b: &Block,
    cfg: &VmConfig,
    mut observe: impl FnMut(&WorldState, &Receipt),
) -> (WorldState, Vec<Receipt>) {
    let mut state = s.clone();
    let mut queue = MessageQueue::new();
    for m in b.extrinsics() {
        queue.push(m.clone());
    }
    let mut receipts = Vec::new();
    let mut processed = 0u64;
    while let Some(m) = queue.pop() {
        if processed == cfg.max_messages_per_block {
            for dropped in std::iter::once(m).chain(queue.drain()) {
                let r = Receipt::without_effects(&dropped, Disposition::DroppedBudget, 0);
                observe(&state, &r);
                receipts.push(r);
            }
            break;
        }
        processed += 1;
        let room = cfg.max_queue_len.saturating_sub(queue.len() as u64);
        let (emitted, receipt) = step(&mut state, &m, cfg, room);
        for e in emitted {
            queue.push(e);
        }
        observe(&state, &receipt);
        receipts.push(receipt);
    }
    (state, receipts)
}

/// Dispatches, executes and (if it halted and fits in `room`) commits `m`.
fn step(state: &mut WorldState, m: &Message, cfg: &VmConfig, room: u64) -> (Vec<Message>, Receipt) {
    let ignored = |d| (Vec::new(), Receipt::without_effects(m, d, 0));
    let Some(actor) = state.get(&m.id_to) else {
        return ignored(Disposition::IgnoredNoActor);
    };
    let (effects, outcome) = match execute(state, actor, m, cfg.fuel_per_message) {
        Ok(r) => r,
        Err(Undeliverable::BadCode) => return ignored(Disposition::IgnoredBadCode),
        Err(Undeliverable::NoFunction) => return ignored(Disposition::IgnoredNoFunction),
    };
    let fuel = outcome.fuel_used;
    if let Status::Trapped(reason) = outcome.status {
        return (Vec::new(), Receipt::without_effects(m, Disposition::Trapped(reason), fuel));
    }
    if effects.outgoing.len() as u64 > room {
        let r = Receipt::without_effects(m, Disposition::Trapped(TrapReason::QueueOverflow), fuel);
        return (Vec::new(), r);
    }
    match commit(state, m.id_to, effects) {
        Ok((emitted, created)) => {
            let receipt = Receipt {
                message: m.clone(),
                disposition: Disposition::Processed,
                fuel_used: fuel,
                messages_emitted: emitted.len() as u64,
                actors_created: created,
            };
            (emitted, receipt)
        }
        Err(reason) => (Vec::new(), Receipt::without_effects(m, Disposition::Trapped(reason), fuel)),
    }
}

/// Commits a halted execution's effects for actor `self_id`: storage writes,
/// code replacement, id replacement, then creations. All collision checks run
/// before anything is mutated, so an `Err` leaves `state` unchanged.
fn commit(
    state: &mut WorldState,
    self_id: ActorId,
    effects: EffectBuffer,
) -> Result<(Vec<Message>, u64), TrapReason> {
    let EffectBuffer { storage_writes, outgoing, new_id, new_code } = effects;
    let new_id = new_id.filter(|id| *id != self_id);

    let created: Vec<ActorId> = outgoing
        .iter()
        .filter_map(|e| match e {
            Effect::Create { id, .. } => Some(*id),
            Effect::Send(_) => None,
        })
        .collect();
    // Ids live after the move: everything in state except self_id, plus new_id.
    let taken = |id: &ActorId| (*id != self_id && state.contains(id)) || Some(*id) == new_id;
    if let Some(id) = new_id {
        if state.contains(&id) || created.contains(&id) {
            return Err(TrapReason::IdCollision);
        }
    }
    for (i, id) in created.iter().enumerate() {
        let reused_self = *id == self_id && new_id.is_none();
        if taken(id) || reused_self || created[..i].contains(id) {
            return Err(TrapReason::IdCollision);
        }
    }
    let counter = state
        .creation_counter
        .checked_add(created.len() as u64)
        .ok_or(TrapReason::ArithmeticOverflow)?;

    let mut actor = state.remove(&self_id).expect("executing actor exists");
    for w in storage_writes {
        match w.value {
            Some(v) => {
                actor.storage.insert(w.key, v).expect("validated by the interpreter");
            }
            None => {
                actor.storage.remove(&w.key);
            }
        }
    }
    if let Some(code) = new_code {
        actor.code = code;
    }
    if let Some(id) = new_id {
        actor.id = id;
    }
    state.put(actor);

    let mut emitted = Vec::with_capacity(outgoing.len());
    for e in outgoing {
        match e {
            Effect::Send(msg) => emitted.push(msg),
            Effect::Create { code, init_params, id, .. } => {
                state.put(Actor::new(id, code));
                let init = Message::new(id, INIT_FUNCTION, init_params, Origin::Internal(self_id))
                    .expect("init name and params are in bounds");
                emitted.push(init);
            }
        }
    }
    state.creation_counter = counter;
    Ok((emitted, created.len() as u64))
}
