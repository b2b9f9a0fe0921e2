// SPDX-License-Identifier: Apache-2.0

//! Text assembler.
//!
//! ```text
//! ; comments run to end of line
//! .fn transfer          ; starts a function
//!     push 2            ; decimal -> Int
//!     push 0x6b         ; hex -> Bytes
//!     push "key"        ; quoted -> Bytes (\n \t \\ \" \xNN escapes)
//! loop:                 ; label, scoped to the enclosing function
//!     jumpif loop       ; jump targets are labels or instruction indices
//! ```
//!
//! `dup` takes an optional depth (default 0); `send` and `create` take a
//! parameter count.

use std::collections::HashMap;

use thiserror::Error;

use crate::vm::instruction::{Instruction, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct AsmError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, AsmError> {
    Err(AsmError { line, message: message.into() })
}

enum Target {
    Index(u32),
    Label(String),
}

enum Pending {
    Ready(Instruction),
    Jump { cond: bool, target: Target, line: usize },
}

struct Function {
    name: Vec<u8>,
    line: usize,
    body: Vec<Pending>,
    labels: HashMap<String, usize>,
}

/// Assembles `source` into a validated [`Program`].
pub fn assemble(source: &str) -> Result<Program, AsmError> {
    let mut functions: Vec<Function> = Vec::new();
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let mut text = strip_comment(raw).trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix(".fn") {
            let name = rest.trim();
            if name.is_empty() || name.contains(char::is_whitespace) || !rest.starts_with(char::is_whitespace) {
                return err(line, "expected `.fn <name>`");
            }
            let name = parse_name(name, line)?;
            if functions.iter().any(|f| f.name == name) {
                return err(line, format!("duplicate function `{}`", String::from_utf8_lossy(&name)));
            }
            functions.push(Function { name, line, body: Vec::new(), labels: HashMap::new() });
            continue;
        }
        let Some(func) = functions.last_mut() else {
            return err(line, "instruction outside of a `.fn` block");
        };
        // Leading `label:` prefixes.
        while let Some((label, rest)) = split_label(text) {
            if func.labels.insert(label.to_string(), func.body.len()).is_some() {
                return err(line, format!("duplicate label `{label}`"));
            }
            text = rest.trim();
        }
        if text.is_empty() {
            continue;
        }
        func.body.push(parse_instruction(text, line)?);
    }

    let mut program = Program::new();
    for f in functions {
        let mut code = Vec::with_capacity(f.body.len());
        for p in f.body {
            code.push(match p {
                Pending::Ready(ins) => ins,
                Pending::Jump { cond, target, line } => {
                    let t = match target {
                        Target::Index(t) => t,
                        Target::Label(l) => match f.labels.get(&l) {
                            Some(&t) => t as u32,
                            None => return err(line, format!("undefined label `{l}`")),
                        },
                    };
                    if cond { Instruction::JumpIf(t) } else { Instruction::Jump(t) }
                }
            });
        }
        if let Err(e) = program.insert(f.name, code) {
            return err(f.line, e.to_string());
        }
    }
    Ok(program)
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_str => escaped = true,
            '"' => in_str = !in_str,
            ';' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

fn split_label(text: &str) -> Option<(&str, &str)> {
    let (head, rest) = text.split_once(':')?;
    let ok = !head.is_empty()
        && head.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
        && !head.starts_with(|c: char| c.is_ascii_digit());
    ok.then_some((head, rest))
}

fn parse_name(s: &str, line: usize) -> Result<Vec<u8>, AsmError> {
    if s.starts_with('"') {
        return parse_string(s, line);
    }
    if let Some(h) = s.strip_prefix("0x") {
        return hex::decode(h).or_else(|_| err(line, format!("bad hex `{s}`")));
    }
    Ok(s.as_bytes().to_vec())
}

fn parse_string(s: &str, line: usize) -> Result<Vec<u8>, AsmError> {
    let Some(inner) = s.strip_prefix('"').and_then(|r| r.strip_suffix('"')) else {
        return err(line, "unterminated string");
    };
    let mut out = Vec::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            if c == '"' {
                return err(line, "unescaped quote in string");
            }
            let mut buf = [0u8; 4];
            out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            continue;
        }
        match chars.next() {
            Some('n') => out.push(b'\n'),
            Some('t') => out.push(b'\t'),
            Some('0') => out.push(0),
            Some('\\') => out.push(b'\\'),
            Some('"') => out.push(b'"'),
            Some('x') => {
                let h: String = chars.by_ref().take(2).collect();
                match u8::from_str_radix(&h, 16) {
                    Ok(b) if h.len() == 2 => out.push(b),
                    _ => return err(line, format!("bad escape `\\x{h}`")),
                }
            }
            other => return err(line, format!("bad escape `\\{}`", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

fn parse_count(arg: Option<&str>, line: usize, what: &str, max: u8) -> Result<u8, AsmError> {
    let Some(a) = arg else {
        return err(line, format!("`{what}` needs an operand"));
    };
    match a.parse::<u8>() {
        Ok(n) if n <= max => Ok(n),
        _ => err(line, format!("`{what}` operand must be 0..={max}, got `{a}`")),
    }
}

fn parse_instruction(text: &str, line: usize) -> Result<Pending, AsmError> {
    use Instruction::*;
    let (op, arg) = match text.split_once(char::is_whitespace) {
        Some((op, rest)) => (op, Some(rest.trim())),
        None => (text, None),
    };
    let op = op.to_ascii_lowercase();
    let no_arg = |ins: Instruction| -> Result<Pending, AsmError> {
        match arg {
            None => Ok(Pending::Ready(ins)),
            Some(a) => err(line, format!("`{op}` takes no operand, got `{a}`")),
        }
    };
    let ins = match op.as_str() {
        "push" => {
            let Some(a) = arg else {
                return err(line, "`push` needs an operand");
            };
            if a.starts_with('"') {
                PushBytes(parse_string(a, line)?)
            } else if let Some(h) = a.strip_prefix("0x") {
                match hex::decode(h) {
                    Ok(b) => PushBytes(b),
                    Err(_) => return err(line, format!("bad hex `{a}`")),
                }
            } else {
                match a.parse::<i64>() {
                    Ok(v) => PushInt(v),
                    Err(_) => return err(line, format!("bad integer `{a}`")),
                }
            }
        }
        "dup" => Dup(match arg {
            None => 0,
            some => parse_count(some, line, "dup", 15)?,
        }),
        "send" => Send(parse_count(arg, line, "send", 32)?),
        "create" => Create(parse_count(arg, line, "create", 32)?),
        "jump" | "jumpif" => {
            let Some(a) = arg else {
                return err(line, format!("`{op}` needs a target"));
            };
            let target = match a.parse::<u32>() {
                Ok(t) => Target::Index(t),
                Err(_) => Target::Label(a.to_string()),
            };
            return Ok(Pending::Jump { cond: op == "jumpif", target, line });
        }
        "pop" => return no_arg(Pop),
        "swap" => return no_arg(Swap),
        "add" => return no_arg(Add),
        "sub" => return no_arg(Sub),
        "mul" => return no_arg(Mul),
        "div" => return no_arg(Div),
        "eq" => return no_arg(Eq),
        "lt" => return no_arg(Lt),
        "not" => return no_arg(Not),
        "concat" => return no_arg(Concat),
        "len" => return no_arg(Len),
        "slice" => return no_arg(Slice),
        "paramcount" => return no_arg(ParamCount),
        "param" => return no_arg(Param),
        "selfid" => return no_arg(SelfId),
        "sget" => return no_arg(SGet),
        "sset" => return no_arg(SSet),
        "sdel" => return no_arg(SDel),
        "xget" => return no_arg(XGet),
        "setid" => return no_arg(SetId),
        "setcode" => return no_arg(SetCode),
        "halt" => return no_arg(Halt),
        "trap" => return no_arg(Trap),
        "tobytes" => return no_arg(ToBytes),
        "toint" => return no_arg(ToInt),
        other => return err(line, format!("unknown instruction `{other}`")),
    };
    Ok(Pending::Ready(ins))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Instruction::*;

    #[test]
    fn assembles_labels_and_operands() {
        let p = assemble(
            r#"
            ; leading comment
            .fn main
                push 5         ; int
                push -1
                push 0x6b00
                push "a;b\x41\n"
            top: dup
                dup 2
                jumpif done
                jump top
            done:
            "#,
        )
        .unwrap();
        assert_eq!(
            p.function(b"main").unwrap(),
            &[
                PushInt(5),
                PushInt(-1),
                PushBytes(vec![0x6b, 0]),
                PushBytes(b"a;bA\n".to_vec()),
                Dup(0),
                Dup(2),
                JumpIf(8),
                Jump(4),
            ]
        );
    }

    #[test]
    fn labels_are_function_scoped() {
        let e = assemble(".fn a\nx: halt\n.fn b\n jump x\n").unwrap_err();
        assert_eq!(e.line, 4);
        assert!(e.message.contains("`x`"), "{e}");
    }

    #[test]
    fn undefined_label_is_named() {
        let e = assemble(".fn f\n  jump nowhere\n").unwrap_err();
        assert_eq!(e.to_string(), "line 2: undefined label `nowhere`");
    }

    #[test]
    fn numeric_target_out_of_range() {
        let e = assemble(".fn f\n  jump 5\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.message.contains("out of range"), "{e}");
    }

    #[test]
    fn reports_line_numbers() {
        let e = assemble(".fn f\n push 1\n bogus\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(assemble("halt").is_err());
        assert!(assemble(".fn f\n send 33").is_err());
        assert!(assemble(".fn f\n dup 16").is_err());
        assert!(assemble(".fn f\n halt 1").is_err());
        assert!(assemble(".fn f\n.fn f\n").is_err());
        assert!(assemble(".fn f\nx:\nx:\n").is_err());
    }

    #[test]
    fn halt_blob_is_stable() {
        let p = assemble(".fn main\n halt\n").unwrap();
        assert_eq!(
            hex::encode(p.encode().as_bytes()),
            "454e534f0100000001000000046d61696e000000011c"
        );
    }
}
