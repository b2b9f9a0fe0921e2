// SPDX-License-Identifier: Apache-2.0

//! Scalar values shared by storage, messages and the interpreter.

use std::fmt;
use std::ops::Deref;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Largest byte string a [`Value`] or storage value may hold.
pub const MAX_VALUE_LEN: usize = 65536;
/// Storage keys are 1..=1024 bytes.
pub const MAX_KEY_LEN: usize = 1024;
/// Function and template names are 1..=256 bytes.
pub const MAX_NAME_LEN: usize = 256;
/// Messages carry at most this many parameters.
pub const MAX_PARAMS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("byte string of {0} bytes exceeds the {MAX_VALUE_LEN}-byte limit")]
    BytesTooLong(usize),
    #[error("actor id must be exactly 32 bytes, got {0}")]
    BadIdLength(usize),
}

/// SHA-256 of the concatenation of `parts`.
pub fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// 32-byte actor identity. Ordering is bytewise lexicographic.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ActorId(pub [u8; 32]);

impl ActorId {
    pub const LEN: usize = 32;

    pub fn from_slice(raw: &[u8]) -> Result<Self, ValueError> {
        let arr: [u8; 32] = raw
            .try_into()
            .map_err(|_| ValueError::BadIdLength(raw.len()))?;
        Ok(ActorId(arr))
    }

    /// Id derived from a domain tag: `sha256(tag)`.
    pub fn derive(tag: &[u8]) -> Self {
        ActorId(sha256(&[tag]))
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        format!("0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ActorId({})", self.to_hex())
    }
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Byte string of at most [`MAX_VALUE_LEN`] bytes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Bytes(Vec<u8>);

impl Bytes {
    pub fn new(raw: Vec<u8>) -> Result<Self, ValueError> {
        if raw.len() > MAX_VALUE_LEN {
            return Err(ValueError::BytesTooLong(raw.len()));
        }
        Ok(Bytes(raw))
    }

    pub fn empty() -> Self {
        Bytes(Vec::new())
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.0
    }
}

impl Deref for Bytes {
    type Target = [u8];
    fn deref(&self) -> &[u8] {
        &self.0
    }
}

impl AsRef<[u8]> for Bytes {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl TryFrom<Vec<u8>> for Bytes {
    type Error = ValueError;
    fn try_from(v: Vec<u8>) -> Result<Self, ValueError> {
        Bytes::new(v)
    }
}

impl TryFrom<&[u8]> for Bytes {
    type Error = ValueError;
    fn try_from(v: &[u8]) -> Result<Self, ValueError> {
        Bytes::new(v.to_vec())
    }
}

impl From<ActorId> for Bytes {
    fn from(id: ActorId) -> Self {
        Bytes(id.0.to_vec())
    }
}

impl fmt::Debug for Bytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(&self.0))
    }
}

/// A message parameter or interpreter stack slot.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    Bytes(Bytes),
}

impl Value {
    pub fn bytes(raw: impl Into<Vec<u8>>) -> Result<Self, ValueError> {
        Ok(Value::Bytes(Bytes::new(raw.into())?))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            Value::Bytes(_) => None,
        }
    }

    pub fn as_bytes(&self) -> Option<&[u8]> {
        match self {
            Value::Int(_) => None,
            Value::Bytes(b) => Some(b),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<ActorId> for Value {
    fn from(id: ActorId) -> Self {
        Value::Bytes(id.into())
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "Int({v})"),
            Value::Bytes(b) => write!(f, "Bytes({b:?})"),
        }
    }
}
