// SPDX-License-Identifier: Apache-2.0

//! Canonical binary form of a [`Program`].
//!
//! ```text
//! "ENSO" 0x01 | u32 n_functions | { u32 name_len, name, u32 n_instr, { op, operands } }*
//! ```
//!
//! Functions appear in strictly ascending bytewise name order. All integers are
//! big-endian; `PushInt` carries 8 bytes, `PushBytes` a u32 length and bytes,
//! jump targets and counts (`Dup`, `Send`, `Create`) a u32.

use thiserror::Error;

use crate::vm::instruction::{check_function, CodeBlob, Instruction, Program, MAX_CODE_SIZE};

pub const MAGIC: [u8; 4] = *b"ENSO";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("code blob truncated")]
    Truncated,
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0:#04x}")]
    BadVersion(u8),
    #[error("unknown opcode {0:#04x}")]
    UnknownOpcode(u8),
    #[error("function {function:?}: jump at {index} targets {target}, out of range")]
    BadJumpTarget { function: String, index: usize, target: u32 },
    #[error("function name must be 1..=256 bytes, got {0}")]
    BadNameLength(usize),
    #[error("function has {0} instructions, limit is 65536")]
    FunctionTooLong(usize),
    #[error("push operand of {0} bytes exceeds 1024")]
    PushTooLong(usize),
    #[error("dup depth {0} exceeds 15")]
    BadDupDepth(u32),
    #[error("parameter count {0} exceeds 32")]
    BadParamCount(u32),
    #[error("encoded program is {0} bytes, limit is {MAX_CODE_SIZE}")]
    TooLarge(usize),
    #[error("function names not in strictly ascending order")]
    NonCanonicalOrder,
    #[error("{0} trailing bytes after program")]
    TrailingBytes(usize),
}

pub(crate) fn encoded_len(p: &Program) -> usize {
    let mut n = HEADER_LEN;
    for (name, code) in p.functions() {
        n += 4 + name.len() + 4;
        for ins in code {
            n += 1 + match ins {
                Instruction::PushInt(_) => 8,
                Instruction::PushBytes(b) => 4 + b.len(),
                Instruction::Dup(_)
                | Instruction::Jump(_)
                | Instruction::JumpIf(_)
                | Instruction::Send(_)
                | Instruction::Create(_) => 4,
                _ => 0,
            };
        }
    }
    n
}

/// Canonical bytes of `p`. Equal programs always encode identically.
pub fn encode_program(p: &Program) -> Result<CodeBlob, CodeError> {
    let size = encoded_len(p);
    if size > MAX_CODE_SIZE {
        return Err(CodeError::TooLarge(size));
    }
    Ok(encode_unchecked(p))
}

pub(crate) fn encode_unchecked(p: &Program) -> CodeBlob {
    let mut out = Vec::with_capacity(encoded_len(p));
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    put_u32(&mut out, p.len());
    for (name, code) in p.functions() {
        put_u32(&mut out, name.len());
        out.extend_from_slice(name);
        put_u32(&mut out, code.len());
        for ins in code {
            out.push(ins.opcode());
            match ins {
                Instruction::PushInt(v) => out.extend_from_slice(&v.to_be_bytes()),
                Instruction::PushBytes(b) => {
                    put_u32(&mut out, b.len());
                    out.extend_from_slice(b);
                }
                Instruction::Dup(n) | Instruction::Send(n) | Instruction::Create(n) => {
                    put_u32(&mut out, *n as usize)
                }
                Instruction::Jump(t) | Instruction::JumpIf(t) => {
                    out.extend_from_slice(&t.to_be_bytes())
                }
                _ => {}
            }
        }
    }
    CodeBlob::new(out)
}

fn put_u32(out: &mut Vec<u8>, n: usize) {
    out.extend_from_slice(&(n as u32).to_be_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodeError> {
        let end = self.pos.checked_add(n).ok_or(CodeError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(CodeError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CodeError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CodeError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

/// Decodes a blob, accepting only the canonical encoding of a valid program.
pub fn decode_program(blob: &CodeBlob) -> Result<Program, CodeError> {
    let raw = blob.as_bytes();
    if raw.len() > MAX_CODE_SIZE {
        return Err(CodeError::TooLarge(raw.len()));
    }
    let mut r = Reader { buf: raw, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(CodeError::BadMagic);
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(CodeError::BadVersion(version));
    }
    let n_functions = r.u32()?;
    let mut program = Program::new();
    let mut last_name: Option<Vec<u8>> = None;
    for _ in 0..n_functions {
        let name_len = r.u32()? as usize;
        let name = r.take(name_len)?.to_vec();
        if last_name.as_ref().is_some_and(|prev| *prev >= name) {
            return Err(CodeError::NonCanonicalOrder);
        }
        let n_instr = r.u32()? as usize;
        // Every instruction takes at least one byte.
        if n_instr > r.remaining() {
            return Err(CodeError::Truncated);
        }
        let mut code = Vec::with_capacity(n_instr);
        for _ in 0..n_instr {
            code.push(decode_instruction(&mut r)?);
        }
        check_function(&name, &code)?;
        last_name = Some(name.clone());
        program.insert(name, code)?;
    }
    if r.remaining() != 0 {
        return Err(CodeError::TrailingBytes(r.remaining()));
    }
    Ok(program)
}

fn small_operand(r: &mut Reader<'_>, limit: u32, err: fn(u32) -> CodeError) -> Result<u8, CodeError> {
    let n = r.u32()?;
    if n > limit {
        return Err(err(n));
    }
    Ok(n as u8)
}

fn decode_instruction(r: &mut Reader<'_>) -> Result<Instruction, CodeError> {
    use Instruction::*;
    let op = r.u8()?;
    Ok(match op {
        0x00 => PushInt(i64::from_be_bytes(r.take(8)?.try_into().unwrap())),
        0x01 => {
            let len = r.u32()? as usize;
            if len > super::MAX_PUSH_BYTES {
                return Err(CodeError::PushTooLong(len));
            }
            PushBytes(r.take(len)?.to_vec())
        }
        0x02 => Pop,
        0x03 => Dup(small_operand(r, 15, CodeError::BadDupDepth)?),
        0x04 => Swap,
        0x05 => Add,
        0x06 => Sub,
        0x07 => Mul,
        0x08 => Div,
        0x09 => Eq,
        0x0A => Lt,
        0x0B => Not,
        0x0C => Concat,
        0x0D => Len,
        0x0E => Slice,
        0x0F => Jump(r.u32()?),
        0x10 => JumpIf(r.u32()?),
        0x11 => ParamCount,
        0x12 => Param,
        0x13 => SelfId,
        0x14 => SGet,
        0x15 => SSet,
        0x16 => SDel,
        0x17 => XGet,
        0x18 => Send(small_operand(r, 32, CodeError::BadParamCount)?),
        0x19 => Create(small_operand(r, 32, CodeError::BadParamCount)?),
        0x1A => SetId,
        0x1B => SetCode,
        0x1C => Halt,
        0x1D => Trap,
        0x1E => ToBytes,
        0x1F => ToInt,
        other => return Err(CodeError::UnknownOpcode(other)),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use Instruction::*;

    #[test]
    fn empty_program_is_header_only() {
        let blob = encode_program(&Program::new()).unwrap();
        assert_eq!(blob.as_bytes(), b"ENSO\x01\x00\x00\x00\x00");
        assert_eq!(decode_program(&blob).unwrap(), Program::new());
    }

    #[test]
    fn empty_bytes_fail_to_decode() {
        assert_eq!(decode_program(&CodeBlob::new(vec![])), Err(CodeError::Truncated));
    }

    #[test]
    fn halt_only_program_layout() {
        let p = Program::new().with("main", vec![Halt]).unwrap();
        let blob = encode_program(&p).unwrap();
        let mut expect = b"ENSO\x01".to_vec();
        expect.extend_from_slice(&[0, 0, 0, 1, 0, 0, 0, 4]);
        expect.extend_from_slice(b"main");
        expect.extend_from_slice(&[0, 0, 0, 1, 0x1C]);
        assert_eq!(blob.as_bytes(), &expect[..]);
    }

    #[test]
    fn two_function_round_trip() {
        let p = Program::new()
            .with("b", vec![PushInt(-2), PushBytes(b"xy".to_vec()), Dup(3), Jump(4), Halt])
            .unwrap()
            .with("a", vec![Send(2), Create(0), JumpIf(0)])
            .unwrap();
        let blob = encode_program(&p).unwrap();
        assert_eq!(decode_program(&blob).unwrap(), p);
    }

    #[test]
    fn insertion_order_does_not_change_bytes() {
        let f = vec![PushInt(1), Halt];
        let g = vec![Trap];
        let p1 = Program::new().with("f", f.clone()).unwrap().with("g", g.clone()).unwrap();
        let p2 = Program::new().with("g", g).unwrap().with("f", f).unwrap();
        assert_eq!(encode_program(&p1).unwrap(), encode_program(&p2).unwrap());
    }

    #[test]
    fn rejects_out_of_range_jump() {
        assert!(matches!(
            Program::new().with("f", vec![Jump(2)]),
            Err(CodeError::BadJumpTarget { target: 2, .. })
        ));
        // target == len is allowed (falls through to halt)
        assert!(Program::new().with("f", vec![Jump(1)]).is_ok());
        let mut raw = b"ENSO\x01\x00\x00\x00\x01\x00\x00\x00\x01f\x00\x00\x00\x01\x0F".to_vec();
        raw.extend_from_slice(&2u32.to_be_bytes());
        assert!(matches!(
            decode_program(&CodeBlob::new(raw)),
            Err(CodeError::BadJumpTarget { .. })
        ));
    }

    #[test]
    fn rejects_unsorted_and_duplicate_names() {
        let mut raw = b"ENSO\x01\x00\x00\x00\x02".to_vec();
        for name in [b"b", b"a"] {
            raw.extend_from_slice(&[0, 0, 0, 1]);
            raw.extend_from_slice(name);
            raw.extend_from_slice(&[0, 0, 0, 0]);
        }
        assert_eq!(decode_program(&CodeBlob::new(raw.clone())), Err(CodeError::NonCanonicalOrder));
        raw[22] = b'b';
        assert_eq!(decode_program(&CodeBlob::new(raw)), Err(CodeError::NonCanonicalOrder));
    }

    #[test]
    fn rejects_header_defects() {
        assert_eq!(decode_program(&CodeBlob::new(b"ENSX\x01\0\0\0\0".to_vec())), Err(CodeError::BadMagic));
        assert_eq!(decode_program(&CodeBlob::new(b"ENSO\x02\0\0\0\0".to_vec())), Err(CodeError::BadVersion(2)));
        assert_eq!(decode_program(&CodeBlob::new(b"ENSO\x01\0\0\0\0\0".to_vec())), Err(CodeError::TrailingBytes(1)));
        assert_eq!(decode_program(&CodeBlob::new(b"ENSO\x01\0\0".to_vec())), Err(CodeError::Truncated));
    }

    #[test]
    fn rejects_bad_operands() {
        let head = b"ENSO\x01\x00\x00\x00\x01\x00\x00\x00\x01f\x00\x00\x00\x01".to_vec();
        let with = |tail: &[u8]| {
            let mut raw = head.clone();
            raw.extend_from_slice(tail);
            decode_program(&CodeBlob::new(raw))
        };
        assert_eq!(with(&[0x20]), Err(CodeError::UnknownOpcode(0x20)));
        assert_eq!(with(&[0x03, 0, 0, 0, 16]), Err(CodeError::BadDupDepth(16)));
        assert_eq!(with(&[0x18, 0, 0, 0, 33]), Err(CodeError::BadParamCount(33)));
        assert_eq!(with(&[0x01, 0, 0, 4, 1]), Err(CodeError::PushTooLong(1025)));
        assert_eq!(with(&[0x00, 1, 2]), Err(CodeError::Truncated));
    }

    #[test]
    fn size_limit_enforced() {
        let big = vec![PushBytes(vec![0; 1024]); 128];
        let p = Program::new().with("a", big.clone()).unwrap();
        let err = p.with("b", big).unwrap_err();
        assert!(matches!(err, CodeError::TooLarge(_)));
    }

    pub(crate) fn instruction(max_target: u32) -> impl Strategy<Value = Instruction> {
        prop_oneof![
            any::<i64>().prop_map(PushInt),
            prop::collection::vec(any::<u8>(), 0..16).prop_map(PushBytes),
            (0u8..=15).prop_map(Dup),
            (0..=max_target).prop_map(Jump),
            (0..=max_target).prop_map(JumpIf),
            (0u8..=32).prop_map(Send),
            (0u8..=32).prop_map(Create),
            prop::sample::select(vec![
                Pop, Swap, Add, Sub, Mul, Div, Eq, Lt, Not, Concat, Len, Slice, ParamCount, Param,
                SelfId, SGet, SSet, SDel, XGet, SetId, SetCode, Halt, Trap, ToBytes, ToInt,
            ]),
        ]
    }

    fn function() -> impl Strategy<Value = Vec<Instruction>> {
        (0usize..=100).prop_flat_map(|n| prop::collection::vec(instruction(n as u32), n))
    }

    fn program() -> impl Strategy<Value = Program> {
        prop::collection::btree_map(prop::collection::vec(any::<u8>(), 1..8), function(), 0..4)
            .prop_map(|fs| {
                let mut p = Program::new();
                for (name, code) in fs {
                    p.insert(name, code).unwrap();
                }
                p
            })
    }

    proptest! {
        #[test]
        fn round_trip(p in program()) {
            let blob = encode_program(&p).unwrap();
            let back = decode_program(&blob).unwrap();
            prop_assert_eq!(&back, &p);
            prop_assert_eq!(encode_program(&back).unwrap(), blob);
        }

        #[test]
        fn decode_never_panics(raw in prop::collection::vec(any::<u8>(), 0..64)) {
            let mut bytes = b"ENSO\x01".to_vec();
            bytes.extend(raw);
            let _ = decode_program(&CodeBlob::new(bytes));
        }
    }
}
