// SPDX-License-Identifier: Apache-2.0

//! World state: actors keyed by id, each with code and key/value storage.

use std::collections::btree_map::{self, BTreeMap};

use thiserror::Error;

use crate::value::{ActorId, MAX_KEY_LEN, MAX_VALUE_LEN};
use crate::vm::CodeBlob;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StorageError {
    #[error("storage key must be 1..={MAX_KEY_LEN} bytes, got {0}")]
    BadKeyLength(usize),
    #[error("storage value of {0} bytes exceeds the {MAX_VALUE_LEN}-byte limit")]
    ValueTooLong(usize),
}

pub fn check_key(key: &[u8]) -> Result<(), StorageError> {
    if key.is_empty() || key.len() > MAX_KEY_LEN {
        return Err(StorageError::BadKeyLength(key.len()));
    }
    Ok(())
}

pub fn check_value(value: &[u8]) -> Result<(), StorageError> {
    if value.len() > MAX_VALUE_LEN {
        return Err(StorageError::ValueTooLong(value.len()));
    }
    Ok(())
}

/// Ordered byte-string map; iteration is always bytewise-ascending by key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StorageMap {
    entries: BTreeMap<Vec<u8>, Vec<u8>>,
}

impl StorageMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &[u8]) -> Option<&[u8]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn insert(&mut self, key: Vec<u8>, value: Vec<u8>) -> Result<Option<Vec<u8>>, StorageError> {
        check_key(&key)?;
        check_value(&value)?;
        Ok(self.entries.insert(key, value))
    }

    pub fn remove(&mut self, key: &[u8]) -> Option<Vec<u8>> {
        self.entries.remove(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u8], &[u8])> {
        self.entries.iter().map(|(k, v)| (k.as_slice(), v.as_slice()))
    }
}

impl TryFrom<Vec<(Vec<u8>, Vec<u8>)>> for StorageMap {
    type Error = StorageError;

    fn try_from(entries: Vec<(Vec<u8>, Vec<u8>)>) -> Result<Self, StorageError> {
        let mut map = StorageMap::new();
        for (k, v) in entries {
            map.insert(k, v)?;
        }
        Ok(map)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Actor {
    pub id: ActorId,
    pub code: CodeBlob,
    pub storage: StorageMap,
}

impl Actor {
    pub fn new(id: ActorId, code: CodeBlob) -> Self {
        Actor { id, code, storage: StorageMap::new() }
    }

    pub fn with_storage(mut self, storage: StorageMap) -> Self {
        self.storage = storage;
        self
    }
}

/// The set of all actors plus the counter used to derive ids of created actors.
///
/// Actors are stored under their own id, so the key/id agreement holds by
/// construction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorldState {
    actors: BTreeMap<ActorId, Actor>,
    pub creation_counter: u64,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: &ActorId) -> Option<&Actor> {
        self.actors.get(id)
    }

    pub fn contains(&self, id: &ActorId) -> bool {
        self.actors.contains_key(id)
    }

    /// Inserts `actor` under `actor.id`, returning any actor it replaced.
    pub fn put(&mut self, actor: Actor) -> Option<Actor> {
        self.actors.insert(actor.id, actor)
    }

    pub fn remove(&mut self, id: &ActorId) -> Option<Actor> {
        self.actors.remove(id)
    }

    pub fn len(&self) -> usize {
        self.actors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actors.is_empty()
    }

    /// Actors in ascending id order.
    pub fn actors(&self) -> btree_map::Values<'_, ActorId, Actor> {
        self.actors.values()
    }

    pub fn ids(&self) -> btree_map::Keys<'_, ActorId, Actor> {
        self.actors.keys()
    }
}
