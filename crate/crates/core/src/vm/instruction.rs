// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use crate::value::{MAX_NAME_LEN, MAX_PARAMS};
use crate::vm::codec::{self, CodeError};

pub const MAX_FUNCTION_LEN: usize = 65536;
pub const MAX_CODE_SIZE: usize = 262144;
pub const MAX_PUSH_BYTES: usize = 1024;
pub const MAX_DUP_DEPTH: u8 = 15;

/// One interpreter instruction.
///
/// Operand order for multi-operand opcodes (top of stack listed first):
///
/// | op | pops | pushes |
/// |----|------|--------|
/// | `Add` `Sub` `Mul` `Div` `Lt` | b, a | a op b |
/// | `Eq` | b, a | 1 if a == b else 0 |
/// | `Concat` | b, a | a ‖ b |
/// | `Slice` | len, start, bytes | bytes[start..start+len] |
/// | `Param` | index | parameter |
/// | `SGet` | key | value, flag |
/// | `SSet` | value, key | |
/// | `SDel` | key | |
/// | `XGet` | key, id | value, flag |
/// | `Send(n)` | n params (last on top), function name, target id | |
/// | `Create(n)` | n params (last on top), template name | new id |
/// | `SetId` `SetCode` | id / code blob | |
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instruction {
    PushInt(i64),
    PushBytes(Vec<u8>),
    Pop,
    /// Copies the slot `depth` below the top (0 = top).
    Dup(u8),
    Swap,
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Lt,
    Not,
    Concat,
    Len,
    Slice,
    Jump(u32),
    JumpIf(u32),
    ParamCount,
    Param,
    SelfId,
    SGet,
    SSet,
    SDel,
    XGet,
    Send(u8),
    Create(u8),
    SetId,
    SetCode,
    Halt,
    Trap,
    /// Int to its 8-byte big-endian two's complement encoding.
    ToBytes,
    /// 8-byte big-endian bytes back to Int.
    ToInt,
}

impl Instruction {
    pub fn opcode(&self) -> u8 {
        use Instruction::*;
        match self {
            PushInt(_) => 0x00,
            PushBytes(_) => 0x01,
            Pop => 0x02,
            Dup(_) => 0x03,
            Swap => 0x04,
            Add => 0x05,
            Sub => 0x06,
            Mul => 0x07,
            Div => 0x08,
            Eq => 0x09,
            Lt => 0x0A,
            Not => 0x0B,
            Concat => 0x0C,
            Len => 0x0D,
            Slice => 0x0E,
            Jump(_) => 0x0F,
            JumpIf(_) => 0x10,
            ParamCount => 0x11,
            Param => 0x12,
            SelfId => 0x13,
            SGet => 0x14,
            SSet => 0x15,
            SDel => 0x16,
            XGet => 0x17,
            Send(_) => 0x18,
            Create(_) => 0x19,
            SetId => 0x1A,
            SetCode => 0x1B,
            Halt => 0x1C,
            Trap => 0x1D,
            ToBytes => 0x1E,
            ToInt => 0x1F,
        }
    }

    pub fn mnemonic(&self) -> &'static str {
        use Instruction::*;
        match self {
            PushInt(_) | PushBytes(_) => "push",
            Pop => "pop",
            Dup(_) => "dup",
            Swap => "swap",
            Add => "add",
            Sub => "sub",
            Mul => "mul",
            Div => "div",
            Eq => "eq",
            Lt => "lt",
            Not => "not",
            Concat => "concat",
            Len => "len",
            Slice => "slice",
            Jump(_) => "jump",
            JumpIf(_) => "jumpif",
            ParamCount => "paramcount",
            Param => "param",
            SelfId => "selfid",
            SGet => "sget",
            SSet => "sset",
            SDel => "sdel",
            XGet => "xget",
            Send(_) => "send",
            Create(_) => "create",
            SetId => "setid",
            SetCode => "setcode",
            Halt => "halt",
            Trap => "trap",
            ToBytes => "tobytes",
            ToInt => "toint",
        }
    }

    pub(crate) fn jump_target(&self) -> Option<u32> {
        match self {
            Instruction::Jump(t) | Instruction::JumpIf(t) => Some(*t),
            _ => None,
        }
    }

    /// Checks operand bounds that do not depend on the enclosing function.
    pub(crate) fn check_operands(&self) -> Result<(), CodeError> {
        match self {
            Instruction::PushBytes(b) if b.len() > MAX_PUSH_BYTES => {
                Err(CodeError::PushTooLong(b.len()))
            }
            Instruction::Dup(d) if *d > MAX_DUP_DEPTH => Err(CodeError::BadDupDepth(*d as u32)),
            Instruction::Send(n) | Instruction::Create(n) if *n as usize > MAX_PARAMS => {
                Err(CodeError::BadParamCount(*n as u32))
            }
            _ => Ok(()),
        }
    }
}

/// Named functions, each a flat instruction list. Functions are kept in
/// bytewise-ascending name order; every jump target is in range.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Program {
    functions: BTreeMap<Vec<u8>, Vec<Instruction>>,
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds (or replaces) a function after validating it.
    pub fn insert(
        &mut self,
        name: impl Into<Vec<u8>>,
        code: Vec<Instruction>,
    ) -> Result<Option<Vec<Instruction>>, CodeError> {
        let name = name.into();
        check_function(&name, &code)?;
        let prev = self.functions.insert(name.clone(), code);
        let size = codec::encoded_len(self);
        if size > MAX_CODE_SIZE {
            match prev {
                Some(p) => self.functions.insert(name, p),
                None => self.functions.remove(&name),
            };
            return Err(CodeError::TooLarge(size));
        }
        Ok(prev)
    }

    pub fn with(mut self, name: impl Into<Vec<u8>>, code: Vec<Instruction>) -> Result<Self, CodeError> {
        self.insert(name, code)?;
        Ok(self)
    }

    pub fn function(&self, name: &[u8]) -> Option<&[Instruction]> {
        self.functions.get(name).map(Vec::as_slice)
    }

    pub fn functions(&self) -> impl Iterator<Item = (&[u8], &[Instruction])> {
        self.functions.iter().map(|(k, v)| (k.as_slice(), v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn encode(&self) -> CodeBlob {
        // Size is bounded by `insert`, so encoding cannot fail here.
        codec::encode_unchecked(self)
    }
}

pub(crate) fn check_function(name: &[u8], code: &[Instruction]) -> Result<(), CodeError> {
    if name.is_empty() || name.len() > MAX_NAME_LEN {
        return Err(CodeError::BadNameLength(name.len()));
    }
    if code.len() > MAX_FUNCTION_LEN {
        return Err(CodeError::FunctionTooLong(code.len()));
    }
    for (index, ins) in code.iter().enumerate() {
        ins.check_operands()?;
        if let Some(target) = ins.jump_target() {
            if target as usize > code.len() {
                return Err(CodeError::BadJumpTarget {
                    function: String::from_utf8_lossy(name).into_owned(),
                    index,
                    target,
                });
            }
        }
    }
    Ok(())
}

/// Raw actor code: the canonical encoding of a [`Program`], or arbitrary bytes
/// that fail to decode.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct CodeBlob(Vec<u8>);

impl CodeBlob {
    pub fn new(raw: Vec<u8>) -> Self {
        CodeBlob(raw)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn decode(&self) -> Result<Program, CodeError> {
        codec::decode_program(self)
    }
}

impl std::fmt::Debug for CodeBlob {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CodeBlob({} bytes)", self.0.len())
    }
}

impl From<Program> for CodeBlob {
    fn from(p: Program) -> Self {
        p.encode()
    }
}
