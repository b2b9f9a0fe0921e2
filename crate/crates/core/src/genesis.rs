// SPDX-License-Identifier: Apache-2.0

//! Genesis construction and the state-resident template registry.
//!
//! The registry is an ordinary actor at `sha256("enso/template-registry")`
//! whose storage maps template name to code blob. Because it lives in state,
//! templates can be added or replaced by messages like any other storage.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::state::{Actor, StorageError, StorageMap, WorldState};
use crate::stf::{ConfigError, VmConfig};
use crate::value::{ActorId, MAX_NAME_LEN, MAX_VALUE_LEN};
use crate::vm::{CodeBlob, Program};

const REGISTRY_TAG: &[u8] = b"enso/template-registry";

pub fn registry_id() -> ActorId {
    ActorId::derive(REGISTRY_TAG)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenesisError {
    #[error("duplicate actor id {0}")]
    DuplicateId(ActorId),
    #[error("actor id {0} is reserved for the template registry")]
    ReservedId(ActorId),
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("template name must be 1..={MAX_NAME_LEN} bytes, got {0}")]
    BadTemplateName(usize),
    #[error("template {name:?} encodes to {size} bytes, registry values are limited to {MAX_VALUE_LEN}")]
    TemplateTooLarge { name: String, size: usize },
    #[error("actor {id}: duplicate storage key 0x{key}")]
    DuplicateKey { id: ActorId, key: String },
    #[error("actor {id}: {source}")]
    Storage { id: ActorId, source: StorageError },
    #[error(transparent)]
    BadConfig(#[from] ConfigError),
}

/// Initial storage as (key, value) pairs.
pub type Entries = Vec<(Vec<u8>, Vec<u8>)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelActor {
    pub id: ActorId,
    pub program: Program,
    pub storage: Entries,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserActor {
    pub template: Vec<u8>,
    pub id: ActorId,
    pub storage: Entries,
}

/// Everything needed to build the initial world state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenesisDoc {
    pub config: VmConfig,
    /// Code installed on the registry actor; the empty program when `None`.
    pub registry: Option<Program>,
    pub templates: BTreeMap<Vec<u8>, Program>,
    pub kernel_actors: Vec<KernelActor>,
    pub user_actors: Vec<UserActor>,
}

fn name_lossy(name: &[u8]) -> String {
    String::from_utf8_lossy(name).into_owned()
}

fn storage_for(id: ActorId, entries: &[(Vec<u8>, Vec<u8>)]) -> Result<StorageMap, GenesisError> {
    let mut map = StorageMap::new();
    for (k, v) in entries {
        let prev = map
            .insert(k.clone(), v.clone())
            .map_err(|source| GenesisError::Storage { id, source })?;
        if prev.is_some() {
            return Err(GenesisError::DuplicateKey { id, key: hex::encode(k) });
        }
    }
    Ok(map)
}

/// Builds the genesis world: registry actor, kernel actors, then user actors
/// instantiated from their templates. The creation counter starts at 0.
pub fn build_genesis(doc: &GenesisDoc) -> Result<WorldState, GenesisError> {
    doc.config.validate()?;
    let reserved = registry_id();

    let mut registry_storage = StorageMap::new();
    for (name, program) in &doc.templates {
        if name.is_empty() || name.len() > MAX_NAME_LEN {
            return Err(GenesisError::BadTemplateName(name.len()));
        }
        let blob = program.encode();
        if blob.len() > MAX_VALUE_LEN {
            return Err(GenesisError::TemplateTooLarge { name: name_lossy(name), size: blob.len() });
        }
        registry_storage
            .insert(name.clone(), blob.into_vec())
            .map_err(|source| GenesisError::Storage { id: reserved, source })?;
    }
    let registry_code = doc.registry.clone().unwrap_or_default().encode();

    let mut state = WorldState::new();
    state.put(Actor::new(reserved, registry_code).with_storage(registry_storage));

    let mut seen = BTreeSet::new();
    let mut claim = |id: ActorId| {
        if id == reserved {
            return Err(GenesisError::ReservedId(id));
        }
        if !seen.insert(id) {
            return Err(GenesisError::DuplicateId(id));
        }
        Ok(())
    };

    for k in &doc.kernel_actors {
        claim(k.id)?;
        let storage = storage_for(k.id, &k.storage)?;
        state.put(Actor::new(k.id, k.program.encode()).with_storage(storage));
    }
    for u in &doc.user_actors {
        claim(u.id)?;
        let program = doc
            .templates
            .get(&u.template)
            .ok_or_else(|| GenesisError::UnknownTemplate(name_lossy(&u.template)))?;
        let storage = storage_for(u.id, &u.storage)?;
        state.put(Actor::new(u.id, program.encode()).with_storage(storage));
    }
    Ok(state)
}

/// The code blob registered under `name`, read from committed state.
pub fn resolve_template(state: &WorldState, name: &[u8]) -> Option<CodeBlob> {
    state
        .get(&registry_id())?
        .storage
        .get(name)
        .map(|raw| CodeBlob::new(raw.to_vec()))
}
