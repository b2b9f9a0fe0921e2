// SPDX-License-Identifier: Apache-2.0

//! Canonical world-state encoding and the state root.
//!
//! ```text
//! "ENSS" 0x01 | u64 creation_counter | u32 n_actors |
//!   { id[32], u32 code_len, code, u32 n_entries, { u32 klen, key, u32 vlen, value }* }*
//! ```
//!
//! Actors ascend by id and entries by key; all integers are big-endian. The
//! state root is the SHA-256 of these bytes.

use std::fmt;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::state::{check_key, check_value, Actor, StorageMap, WorldState};
use crate::value::{sha256, ActorId};
use crate::vm::CodeBlob;

pub const MAGIC: [u8; 4] = *b"ENSS";
pub const VERSION: u8 = 0x01;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot truncated")]
    Truncated,
    #[error("bad snapshot magic")]
    BadMagic,
    #[error("unsupported snapshot version {0:#04x}")]
    BadVersion(u8),
    #[error("actors not in strictly ascending id order")]
    ActorOrder,
    #[error("actor {0}: storage keys not in strictly ascending order")]
    KeyOrder(ActorId),
    #[error("actor {id}: invalid storage entry: {reason}")]
    BadEntry { id: ActorId, reason: String },
    #[error("{0} trailing bytes after snapshot")]
    TrailingBytes(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// SHA-256 digest of the canonical state encoding.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateRoot(pub [u8; 32]);

impl StateRoot {
    pub fn to_hex(&self) -> String {
        format!("0x{}", hex::encode(self.0))
    }
}

impl fmt::Display for StateRoot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for StateRoot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateRoot({})", self.to_hex())
    }
}

fn put_len(out: &mut Vec<u8>, n: usize) {
    out.extend_from_slice(&(n as u32).to_be_bytes());
}

pub fn encode_state(s: &WorldState) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&s.creation_counter.to_be_bytes());
    put_len(&mut out, s.len());
    for a in s.actors() {
        out.extend_from_slice(a.id.as_bytes());
        put_len(&mut out, a.code.len());
        out.extend_from_slice(a.code.as_bytes());
        put_len(&mut out, a.storage.len());
        for (k, v) in a.storage.iter() {
            put_len(&mut out, k.len());
            out.extend_from_slice(k);
            put_len(&mut out, v.len());
            out.extend_from_slice(v);
        }
    }
    out
}

pub fn state_root(s: &WorldState) -> StateRoot {
    StateRoot(sha256(&[&encode_state(s)]))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        let end = self.pos.checked_add(n).ok_or(SnapshotError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(SnapshotError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, SnapshotError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn chunk(&mut self) -> Result<&'a [u8], SnapshotError> {
        let n = self.u32()?;
        self.take(n)
    }
}

/// Decodes a snapshot, rejecting any byte stream that is not the canonical
/// encoding of a valid state.
pub fn decode_state(raw: &[u8]) -> Result<WorldState, SnapshotError> {
    let mut r = Reader { buf: raw, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(SnapshotError::BadVersion(version));
    }
    let mut state = WorldState::new();
    state.creation_counter = u64::from_be_bytes(r.take(8)?.try_into().unwrap());
    let n_actors = r.u32()?;
    let mut last_id: Option<ActorId> = None;
    for _ in 0..n_actors {
        let id = ActorId::from_slice(r.take(32)?).expect("32 bytes");
        if last_id.is_some_and(|prev| prev >= id) {
            return Err(SnapshotError::ActorOrder);
        }
        last_id = Some(id);
        let code = CodeBlob::new(r.chunk()?.to_vec());
        let n_entries = r.u32()?;
        let mut storage = StorageMap::new();
        let mut last_key: Option<&[u8]> = None;
        for _ in 0..n_entries {
            let key = r.chunk()?;
            let value = r.chunk()?;
            if last_key.is_some_and(|prev| prev >= key) {
                return Err(SnapshotError::KeyOrder(id));
            }
            last_key = Some(key);
            check_key(key)
                .and_then(|_| check_value(value))
                .map_err(|e| SnapshotError::BadEntry { id, reason: e.to_string() })?;
            storage.insert(key.to_vec(), value.to_vec()).expect("entry checked");
        }
        state.put(Actor { id, code, storage });
    }
    let rest = raw.len() - r.pos;
    if rest != 0 {
        return Err(SnapshotError::TrailingBytes(rest));
    }
    Ok(state)
}

/// Writes `encode_state(s)` to `path` via a temporary file in the same
/// directory and an atomic rename; a crash never leaves a partial file.
pub fn save_snapshot(s: &WorldState, path: impl AsRef<Path>) -> Result<(), SnapshotError> {
    write_atomic(path.as_ref(), &encode_state(s))?;
    Ok(())
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<WorldState, SnapshotError> {
    decode_state(&std::fs::read(path)?)
}

/// Replaces `path` with `bytes` using write-temp-then-rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independently computed: python3 -c "import hashlib;print(hashlib.sha256(b'ENSS\x01'+bytes(12)).hexdigest())"
    const EMPTY_ROOT: &str = "0x2bdead3452b05db89e1139b3ddd1aea44b37efaa41827f7f6547ab236fff6d2a";

    fn id(n: u8) -> ActorId {
        ActorId([n; 32])
    }

    #[test]
    fn empty_state_is_17_bytes() {
        let raw = encode_state(&WorldState::new());
        assert_eq!(raw.len(), 17);
        assert_eq!(&raw[..5], b"ENSS\x01");
        assert!(raw[5..].iter().all(|&b| b == 0));
    }

    #[test]
    fn empty_state_root_golden() {
        assert_eq!(state_root(&WorldState::new()).to_hex(), EMPTY_ROOT);
    }

    #[test]
    fn single_bare_actor_adds_40_bytes() {
        // id 32 + code length 4 + entry count 4
        let mut s = WorldState::new();
        s.put(Actor::new(id(1), CodeBlob::default()));
        assert_eq!(encode_state(&s).len(), 17 + 32 + 4 + 4);
    }

    #[test]
    fn insertion_order_does_not_change_root() {
        let a = Actor::new(id(1), CodeBlob::new(vec![1]));
        let b = Actor::new(id(2), CodeBlob::new(vec![2]));
        let mut s1 = WorldState::new();
        s1.put(a.clone());
        s1.put(b.clone());
        let mut s2 = WorldState::new();
        s2.put(b);
        s2.put(a);
        assert_eq!(state_root(&s1), state_root(&s2));
    }

    #[test]
    fn one_byte_flip_changes_root() {
        let mut s = WorldState::new();
        let mut storage = StorageMap::new();
        storage.insert(b"k".to_vec(), b"v".to_vec()).unwrap();
        s.put(Actor::new(id(1), CodeBlob::default()).with_storage(storage));
        let before = state_root(&s);
        let mut a = s.get(&id(1)).unwrap().clone();
        a.storage.insert(b"k".to_vec(), b"w".to_vec()).unwrap();
        s.put(a);
        assert_ne!(before, state_root(&s));
    }

    #[test]
    fn truncation_is_an_error() {
        let mut s = WorldState::new();
        s.put(Actor::new(id(1), CodeBlob::new(vec![1, 2, 3])));
        let raw = encode_state(&s);
        for cut in 0..raw.len() {
            assert!(decode_state(&raw[..cut]).is_err(), "cut at {cut}");
        }
        let mut extra = raw.clone();
        extra.push(0);
        assert!(matches!(decode_state(&extra), Err(SnapshotError::TrailingBytes(1))));
    }

    #[test]
    fn swapped_actor_order_rejected() {
        // Hand-built two-actor snapshot with the larger id first.
        let mut raw = b"ENSS\x01".to_vec();
        raw.extend_from_slice(&0u64.to_be_bytes());
        raw.extend_from_slice(&2u32.to_be_bytes());
        for n in [2u8, 1] {
            raw.extend_from_slice(&[n; 32]);
            raw.extend_from_slice(&0u32.to_be_bytes());
            raw.extend_from_slice(&0u32.to_be_bytes());
        }
        assert!(matches!(decode_state(&raw), Err(SnapshotError::ActorOrder)));
        // Same bytes with ids in order decode fine.
        raw[17..49].copy_from_slice(&[1; 32]);
        raw[57..89].copy_from_slice(&[2; 32]);
        assert_eq!(decode_state(&raw).unwrap().len(), 2);
    }

    #[test]
    fn unsorted_keys_and_bad_entries_rejected() {
        let mut raw = b"ENSS\x01".to_vec();
        raw.extend_from_slice(&0u64.to_be_bytes());
        raw.extend_from_slice(&1u32.to_be_bytes());
        raw.extend_from_slice(&[1; 32]);
        raw.extend_from_slice(&0u32.to_be_bytes());
        raw.extend_from_slice(&2u32.to_be_bytes());
        for k in [b"b", b"a"] {
            raw.extend_from_slice(&1u32.to_be_bytes());
            raw.extend_from_slice(k);
            raw.extend_from_slice(&0u32.to_be_bytes());
        }
        assert!(matches!(decode_state(&raw), Err(SnapshotError::KeyOrder(_))));

        let mut empty_key = b"ENSS\x01".to_vec();
        empty_key.extend_from_slice(&0u64.to_be_bytes());
        empty_key.extend_from_slice(&1u32.to_be_bytes());
        empty_key.extend_from_slice(&[1; 32]);
        empty_key.extend_from_slice(&0u32.to_be_bytes());
        empty_key.extend_from_slice(&1u32.to_be_bytes());
        empty_key.extend_from_slice(&0u32.to_be_bytes());
        empty_key.extend_from_slice(&0u32.to_be_bytes());
        assert!(matches!(decode_state(&empty_key), Err(SnapshotError::BadEntry { .. })));
    }

    #[test]
    fn bad_header_rejected() {
        assert!(matches!(decode_state(b"ENSX\x01"), Err(SnapshotError::BadMagic)));
        let mut raw = encode_state(&WorldState::new());
        raw[4] = 2;
        assert!(matches!(decode_state(&raw), Err(SnapshotError::BadVersion(2))));
    }

    #[test]
    fn save_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.enss");
        let mut s = WorldState::new();
        s.creation_counter = 7;
        s.put(Actor::new(id(5), CodeBlob::new(vec![9; 10])));
        save_snapshot(&s, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), encode_state(&s));
        assert_eq!(load_snapshot(&path).unwrap(), s);
        assert!(load_snapshot(dir.path().join("missing.enss")).is_err());
    }

    pub(crate) fn world() -> impl Strategy<Value = WorldState> {
        let entry = (prop::collection::vec(any::<u8>(), 1..6), prop::collection::vec(any::<u8>(), 0..6));
        let actor = (
            any::<[u8; 32]>(),
            prop::collection::vec(any::<u8>(), 0..12),
            prop::collection::vec(entry, 0..5),
        );
        (any::<u64>(), prop::collection::vec(actor, 0..6)).prop_map(|(counter, actors)| {
            let mut s = WorldState::new();
            s.creation_counter = counter;
            for (id, code, entries) in actors {
                let mut storage = StorageMap::new();
                for (k, v) in entries {
                    storage.insert(k, v).unwrap();
                }
                s.put(Actor::new(ActorId(id), CodeBlob::new(code)).with_storage(storage));
            }
            s
        })
    }

    proptest! {
        #[test]
        fn round_trip(s in world()) {
            let raw = encode_state(&s);
            let back = decode_state(&raw).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(encode_state(&back), raw);
        }

        #[test]
        fn any_counter_change_changes_root(s in world(), delta in 1u64..) {
            let mut t = s.clone();
            t.creation_counter = s.creation_counter.wrapping_add(delta);
            prop_assert_ne!(state_root(&s), state_root(&t));
        }
    }
}
