// SPDX-License-Identifier: Apache-2.0

//! The interpreter. Runs one function call against a read-only view of the
//! world and records every side effect in an [`EffectBuffer`]; the caller
//! decides whether to commit it.

use std::collections::BTreeMap;
use std::fmt;

use crate::genesis::resolve_template;
use crate::message::{Message, Origin};
use crate::state::{Actor, WorldState};
use crate::value::{sha256, ActorId, Bytes, Value, MAX_KEY_LEN, MAX_NAME_LEN, MAX_VALUE_LEN};
use crate::vm::instruction::{CodeBlob, Instruction, Program};

pub const STACK_CAPACITY: usize = 256;

const CREATE_TAG: &[u8] = b"enso/create";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrapReason {
    StackUnderflow,
    StackOverflow,
    ArithmeticOverflow,
    DivByZero,
    TypeMismatch,
    BadJump,
    ParamOutOfRange,
    FuelExhausted,
    ValueTooLarge,
    UnknownTemplate,
    BadCodeBlob,
    IdCollision,
    ExplicitTrap,
    /// Committing the message would push the global queue past its limit.
    QueueOverflow,
    /// Malformed operand: storage key outside 1..=1024 bytes, id not 32 bytes,
    /// function/template name outside 1..=256 bytes, slice out of bounds, or a
    /// `ToInt` input that is not 8 bytes.
    InvalidOperand,
}

impl TrapReason {
    pub const ALL: [TrapReason; 15] = [
        TrapReason::StackUnderflow,
        TrapReason::StackOverflow,
        TrapReason::ArithmeticOverflow,
        TrapReason::DivByZero,
        TrapReason::TypeMismatch,
        TrapReason::BadJump,
        TrapReason::ParamOutOfRange,
        TrapReason::FuelExhausted,
        TrapReason::ValueTooLarge,
        TrapReason::UnknownTemplate,
        TrapReason::BadCodeBlob,
        TrapReason::IdCollision,
        TrapReason::ExplicitTrap,
        TrapReason::QueueOverflow,
        TrapReason::InvalidOperand,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TrapReason::StackUnderflow => "StackUnderflow",
            TrapReason::StackOverflow => "StackOverflow",
            TrapReason::ArithmeticOverflow => "ArithmeticOverflow",
            TrapReason::DivByZero => "DivByZero",
            TrapReason::TypeMismatch => "TypeMismatch",
            TrapReason::BadJump => "BadJump",
            TrapReason::ParamOutOfRange => "ParamOutOfRange",
            TrapReason::FuelExhausted => "FuelExhausted",
            TrapReason::ValueTooLarge => "ValueTooLarge",
            TrapReason::UnknownTemplate => "UnknownTemplate",
            TrapReason::BadCodeBlob => "BadCodeBlob",
            TrapReason::IdCollision => "IdCollision",
            TrapReason::ExplicitTrap => "ExplicitTrap",
            TrapReason::QueueOverflow => "QueueOverflow",
            TrapReason::InvalidOperand => "InvalidOperand",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == name)
    }
}

impl fmt::Display for TrapReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Halted,
    Trapped(TrapReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub status: Status,
    pub fuel_used: u64,
}

/// One buffered storage mutation; `value: None` deletes the key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorageWrite {
    pub key: Vec<u8>,
    pub value: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    Send(Message),
    /// `code` is the template blob as resolved from the committed view.
    Create {
        template: Vec<u8>,
        code: CodeBlob,
        init_params: Vec<Value>,
        id: ActorId,
    },
}

/// Side effects of one execution, in emission order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EffectBuffer {
    pub storage_writes: Vec<StorageWrite>,
    pub outgoing: Vec<Effect>,
    pub new_id: Option<ActorId>,
    pub new_code: Option<CodeBlob>,
}

impl EffectBuffer {
    pub fn creations(&self) -> usize {
        self.outgoing.iter().filter(|e| matches!(e, Effect::Create { .. })).count()
    }
}

/// Why a message could not be dispatched at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Undeliverable {
    BadCode,
    NoFunction,
}

/// Id assigned to the `nth` creation counted from `counter`:
/// `sha256("enso/create" || be64(counter + nth))`.
pub fn create_id(counter: u64, nth: u64) -> Option<ActorId> {
    let n = counter.checked_add(nth)?;
    Some(ActorId(sha256(&[CREATE_TAG, &n.to_be_bytes()])))
}

/// Decodes `actor`'s code and runs `msg.function_call` on it.
pub fn execute(
    view: &WorldState,
    actor: &Actor,
    msg: &Message,
    fuel_limit: u64,
) -> Result<(EffectBuffer, Outcome), Undeliverable> {
    let program = actor.code.decode().map_err(|_| Undeliverable::BadCode)?;
    execute_program(view, actor, &program, msg, fuel_limit)
}

/// Like [`execute`] but with `actor`'s program already decoded.
pub fn execute_program(
    view: &WorldState,
    actor: &Actor,
    program: &Program,
    msg: &Message,
    fuel_limit: u64,
) -> Result<(EffectBuffer, Outcome), Undeliverable> {
    execute_traced(view, actor, program, msg, fuel_limit).map(|(e, o, _)| (e, o))
}

/// Like [`execute_program`], also returning the value stack as it was when
/// execution stopped (bottom first).
pub fn execute_traced(
    view: &WorldState,
    actor: &Actor,
    program: &Program,
    msg: &Message,
    fuel_limit: u64,
) -> Result<(EffectBuffer, Outcome, Vec<Value>), Undeliverable> {
    let code = program.function(msg.function_call()).ok_or(Undeliverable::NoFunction)?;
    let mut m = Machine {
        view,
        actor,
        msg,
        stack: Vec::with_capacity(16),
        overlay: BTreeMap::new(),
        effects: EffectBuffer::default(),
    };
    let (status, fuel_used) = m.run(code, fuel_limit);
    Ok((m.effects, Outcome { status, fuel_used }, m.stack))
}

struct Machine<'a> {
    view: &'a WorldState,
    actor: &'a Actor,
    msg: &'a Message,
    stack: Vec<Value>,
    /// Latest buffered value per key, for read-your-writes.
    overlay: BTreeMap<Vec<u8>, Option<Vec<u8>>>,
    effects: EffectBuffer,
}

type Step<T = ()> = Result<T, TrapReason>;

impl Machine<'_> {
    fn run(&mut self, code: &[Instruction], fuel_limit: u64) -> (Status, u64) {
        let mut pc = 0usize;
        let mut fuel = 0u64;
        loop {
            let Some(ins) = code.get(pc) else {
                if pc == code.len() {
                    return (Status::Halted, fuel);
                }
                return (Status::Trapped(TrapReason::BadJump), fuel);
            };
            if fuel == fuel_limit {
                return (Status::Trapped(TrapReason::FuelExhausted), fuel);
            }
            fuel += 1;
            match self.step(ins, code.len()) {
                Ok(Flow::Next) => pc += 1,
                Ok(Flow::Goto(t)) => pc = t,
                Ok(Flow::Halt) => return (Status::Halted, fuel),
                Err(reason) => return (Status::Trapped(reason), fuel),
            }
        }
    }

    fn push(&mut self, v: Value) -> Step {
        if self.stack.len() == STACK_CAPACITY {
            return Err(TrapReason::StackOverflow);
        }
        self.stack.push(v);
        Ok(())
    }

    fn pop(&mut self) -> Step<Value> {
        self.stack.pop().ok_or(TrapReason::StackUnderflow)
    }

    fn pop_int(&mut self) -> Step<i64> {
        match self.pop()? {
            Value::Int(v) => Ok(v),
            Value::Bytes(_) => Err(TrapReason::TypeMismatch),
        }
    }

    fn pop_bytes(&mut self) -> Step<Bytes> {
        match self.pop()? {
            Value::Bytes(b) => Ok(b),
            Value::Int(_) => Err(TrapReason::TypeMismatch),
        }
    }

    fn pop_key(&mut self) -> Step<Vec<u8>> {
        let k = self.pop_bytes()?;
        if k.is_empty() || k.len() > MAX_KEY_LEN {
            return Err(TrapReason::InvalidOperand);
        }
        Ok(k.into_vec())
    }

    fn pop_id(&mut self) -> Step<ActorId> {
        let b = self.pop_bytes()?;
        ActorId::from_slice(&b).map_err(|_| TrapReason::InvalidOperand)
    }

    fn pop_name(&mut self) -> Step<Vec<u8>> {
        let b = self.pop_bytes()?;
        if b.is_empty() || b.len() > MAX_NAME_LEN {
            return Err(TrapReason::InvalidOperand);
        }
        Ok(b.into_vec())
    }

    fn pop_n(&mut self, n: u8) -> Step<Vec<Value>> {
        let n = n as usize;
        if self.stack.len() < n {
            return Err(TrapReason::StackUnderflow);
        }
        Ok(self.stack.split_off(self.stack.len() - n))
    }

    fn push_lookup(&mut self, found: Option<Vec<u8>>) -> Step {
        let flag = found.is_some() as i64;
        let bytes = Bytes::new(found.unwrap_or_default()).map_err(|_| TrapReason::ValueTooLarge)?;
        self.push(Value::Bytes(bytes))?;
        self.push(Value::Int(flag))
    }

    fn arith(&mut self, f: fn(i64, i64) -> Step<i64>) -> Step {
        let b = self.pop_int()?;
        let a = self.pop_int()?;
        self.push(Value::Int(f(a, b)?))
    }

    fn step(&mut self, ins: &Instruction, len: usize) -> Step<Flow> {
        use Instruction::*;
        match ins {
            PushInt(v) => self.push(Value::Int(*v))?,
            PushBytes(b) => {
                let b = Bytes::new(b.clone()).map_err(|_| TrapReason::ValueTooLarge)?;
                self.push(Value::Bytes(b))?
            }
            Pop => {
                self.pop()?;
            }
            Dup(depth) => {
                let depth = *depth as usize;
                if self.stack.len() <= depth {
                    return Err(TrapReason::StackUnderflow);
                }
                let v = self.stack[self.stack.len() - 1 - depth].clone();
                self.push(v)?
            }
            Swap => {
                let n = self.stack.len();
                if n < 2 {
                    return Err(TrapReason::StackUnderflow);
                }
                self.stack.swap(n - 1, n - 2);
            }
            Add => self.arith(|a, b| a.checked_add(b).ok_or(TrapReason::ArithmeticOverflow))?,
            Sub => self.arith(|a, b| a.checked_sub(b).ok_or(TrapReason::ArithmeticOverflow))?,
            Mul => self.arith(|a, b| a.checked_mul(b).ok_or(TrapReason::ArithmeticOverflow))?,
            Div => self.arith(|a, b| {
                if b == 0 {
                    return Err(TrapReason::DivByZero);
                }
                a.checked_div(b).ok_or(TrapReason::ArithmeticOverflow)
            })?,
            Eq => {
                let b = self.pop()?;
                let a = self.pop()?;
                self.push(Value::Int((a == b) as i64))?
            }
            Lt => self.arith(|a, b| Ok((a < b) as i64))?,
            Not => {
                let v = self.pop_int()?;
                self.push(Value::Int((v == 0) as i64))?
            }
            Concat => {
                let b = self.pop_bytes()?;
                let a = self.pop_bytes()?;
                if a.len() + b.len() > MAX_VALUE_LEN {
                    return Err(TrapReason::ValueTooLarge);
                }
                let mut joined = a.into_vec();
                joined.extend_from_slice(&b);
                self.push(Value::Bytes(Bytes::new(joined).expect("length checked")))?
            }
            Len => {
                let b = self.pop_bytes()?;
                self.push(Value::Int(b.len() as i64))?
            }
            Slice => {
                let n = self.pop_int()?;
                let start = self.pop_int()?;
                let b = self.pop_bytes()?;
                if start < 0 || n < 0 || start.saturating_add(n) as u64 > b.len() as u64 {
                    return Err(TrapReason::InvalidOperand);
                }
                let (start, n) = (start as usize, n as usize);
                let part = Bytes::new(b[start..start + n].to_vec()).expect("sub-slice of a bounded value");
                self.push(Value::Bytes(part))?
            }
            Jump(t) => return jump(*t, len),
            JumpIf(t) => {
                if self.pop_int()? != 0 {
                    return jump(*t, len);
                }
            }
            ParamCount => self.push(Value::Int(self.msg.parameters().len() as i64))?,
            Param => {
                let i = self.pop_int()?;
                let v = usize::try_from(i)
                    .ok()
                    .and_then(|i| self.msg.parameters().get(i))
                    .ok_or(TrapReason::ParamOutOfRange)?
                    .clone();
                self.push(v)?
            }
            SelfId => self.push(Value::from(self.actor.id))?,
            SGet => {
                let key = self.pop_key()?;
                let found = match self.overlay.get(&key) {
                    Some(buffered) => buffered.clone(),
                    None => self.actor.storage.get(&key).map(<[u8]>::to_vec),
                };
                self.push_lookup(found)?
            }
            SSet => {
                let value = self.pop_bytes()?.into_vec();
                let key = self.pop_key()?;
                self.write(key, Some(value));
            }
            SDel => {
                let key = self.pop_key()?;
                self.write(key, None);
            }
            XGet => {
                let key = self.pop_key()?;
                let id = self.pop_id()?;
                let found = self
                    .view
                    .get(&id)
                    .and_then(|a| a.storage.get(&key))
                    .map(<[u8]>::to_vec);
                self.push_lookup(found)?
            }
            Send(n) => {
                let params = self.pop_n(*n)?;
                let function = self.pop_name()?;
                let target = self.pop_id()?;
                let msg = Message::new(target, function, params, Origin::Internal(self.actor.id))
                    .map_err(|_| TrapReason::InvalidOperand)?;
                self.effects.outgoing.push(Effect::Send(msg));
            }
            Create(n) => {
                let init_params = self.pop_n(*n)?;
                let template = self.pop_name()?;
                let code = resolve_template(self.view, &template).ok_or(TrapReason::UnknownTemplate)?;
                code.decode().map_err(|_| TrapReason::BadCodeBlob)?;
                let id = create_id(self.view.creation_counter, self.effects.creations() as u64)
                    .ok_or(TrapReason::ArithmeticOverflow)?;
                self.push(Value::from(id))?;
                self.effects.outgoing.push(Effect::Create { template, code, init_params, id });
            }
            SetId => {
                let id = self.pop_id()?;
                self.effects.new_id = Some(id);
            }
            SetCode => {
                let blob = CodeBlob::new(self.pop_bytes()?.into_vec());
                blob.decode().map_err(|_| TrapReason::BadCodeBlob)?;
                self.effects.new_code = Some(blob);
            }
            Halt => return Ok(Flow::Halt),
            Trap => return Err(TrapReason::ExplicitTrap),
            ToBytes => {
                let v = self.pop_int()?;
                self.push(Value::Bytes(Bytes::new(v.to_be_bytes().to_vec()).expect("8 bytes")))?
            }
            ToInt => {
                let b = self.pop_bytes()?;
                let raw: [u8; 8] = b[..].try_into().map_err(|_| TrapReason::InvalidOperand)?;
                self.push(Value::Int(i64::from_be_bytes(raw)))?
            }
        }
        Ok(Flow::Next)
    }

    fn write(&mut self, key: Vec<u8>, value: Option<Vec<u8>>) {
        self.overlay.insert(key.clone(), value.clone());
        self.effects.storage_writes.push(StorageWrite { key, value });
    }
}

enum Flow {
    Next,
    Goto(usize),
    Halt,
}

fn jump(target: u32, len: usize) -> Step<Flow> {
    let t = target as usize;
    if t > len {
        return Err(TrapReason::BadJump);
    }
    Ok(Flow::Goto(t))
}
