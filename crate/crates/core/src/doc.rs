// SPDX-License-Identifier: Apache-2.0

//! Human-facing document formats: JSON blocks and receipts, TOML genesis.
//!
//! These are authoring formats only; nothing here is hashed. Hex is always
//! `0x`-prefixed lowercase with an even number of digits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genesis::{Entries, GenesisDoc, KernelActor, UserActor};
use crate::message::{Message, Origin};
use crate::stf::{Block, Disposition, Receipt, VmConfig};
use crate::value::{ActorId, Bytes, Value};
use crate::vm::asm::{assemble, AsmError};
use crate::vm::{Program, TrapReason};

#[derive(Debug, Error)]
pub enum DocError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid genesis document: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("{context}: {error}")]
    Asm { context: String, error: AsmError },
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, DocError> {
    Err(DocError::Invalid(msg.into()))
}

pub fn render_hex(raw: &[u8]) -> String {
    format!("0x{}", hex::encode(raw))
}

/// Parses strict `0x`-prefixed, lowercase, even-length hex.
pub fn parse_hex(s: &str) -> Result<Vec<u8>, DocError> {
    let Some(digits) = s.strip_prefix("0x") else {
        return invalid(format!("expected 0x-prefixed hex, got {s:?}"));
    };
    if digits.bytes().any(|b| b.is_ascii_uppercase()) {
        return invalid(format!("hex must be lowercase: {s:?}"));
    }
    hex::decode(digits).or_else(|e| invalid(format!("bad hex {s:?}: {e}")))
}

pub fn parse_id(s: &str) -> Result<ActorId, DocError> {
    let raw = parse_hex(s)?;
    ActorId::from_slice(&raw).or_else(|e| invalid(format!("{s:?}: {e}")))
}

/// A name given either as UTF-8 text or as `0x` hex.
pub fn parse_name(s: &str) -> Vec<u8> {
    match s.strip_prefix("0x") {
        Some(_) => parse_hex(s).unwrap_or_else(|_| s.as_bytes().to_vec()),
        None => s.as_bytes().to_vec(),
    }
}

pub fn render_name(raw: &[u8]) -> String {
    match std::str::from_utf8(raw) {
        Ok(s) if !s.starts_with("0x") => s.to_string(),
        _ => render_hex(raw),
    }
}

/// `{"int": "<decimal>"}` or `{"bytes": "0x<hex>"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JsonValue {
    Int(String),
    Bytes(String),
}

impl JsonValue {
    pub fn render(v: &Value) -> Self {
        match v {
            Value::Int(i) => JsonValue::Int(i.to_string()),
            Value::Bytes(b) => JsonValue::Bytes(render_hex(b)),
        }
    }

    pub fn parse(&self) -> Result<Value, DocError> {
        match self {
            JsonValue::Int(s) => {
                if s.starts_with('+') {
                    return invalid(format!("bad integer {s:?}"));
                }
                s.parse::<i64>().map(Value::Int).or_else(|_| invalid(format!("bad integer {s:?}")))
            }
            JsonValue::Bytes(s) => {
                let raw = parse_hex(s)?;
                Bytes::new(raw).map(Value::Bytes).or_else(|e| invalid(e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtrinsicDoc {
    pub id_to: String,
    pub function_call: String,
    #[serde(default)]
    pub parameters: Vec<JsonValue>,
}

impl ExtrinsicDoc {
    pub fn render(m: &Message) -> Self {
        ExtrinsicDoc {
            id_to: m.id_to.to_hex(),
            function_call: render_name(m.function_call()),
            parameters: m.parameters().iter().map(JsonValue::render).collect(),
        }
    }

    pub fn to_message(&self, index: u64) -> Result<Message, DocError> {
        let id = parse_id(&self.id_to)?;
        let params = self.parameters.iter().map(JsonValue::parse).collect::<Result<Vec<_>, _>>()?;
        Message::new(id, parse_name(&self.function_call), params, Origin::Extrinsic(index))
            .or_else(|e| invalid(format!("extrinsic {index}: {e}")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDoc {
    pub extrinsics: Vec<ExtrinsicDoc>,
}

impl BlockDoc {
    pub fn render(b: &Block) -> Self {
        BlockDoc { extrinsics: b.extrinsics().iter().map(ExtrinsicDoc::render).collect() }
    }

    pub fn to_block(&self) -> Result<Block, DocError> {
        let msgs = self
            .extrinsics
            .iter()
            .enumerate()
            .map(|(i, e)| e.to_message(i as u64))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Block::new(msgs))
    }
}

pub fn parse_block(text: &str) -> Result<Block, DocError> {
    serde_json::from_str::<BlockDoc>(text)?.to_block()
}

pub fn render_block(b: &Block) -> String {
    let mut s = serde_json::to_string_pretty(&BlockDoc::render(b)).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OriginDoc {
    Extrinsic(u64),
    Internal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiptDoc {
    pub id_to: String,
    pub function_call: String,
    pub origin: OriginDoc,
    pub disposition: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap_reason: Option<String>,
    pub fuel_used: u64,
    pub messages_emitted: u64,
    pub actors_created: u64,
}

impl ReceiptDoc {
    pub fn render(r: &Receipt) -> Self {
        let (disposition, trap_reason) = match r.disposition {
            Disposition::Trapped(reason) => ("Trapped".to_string(), Some(reason.name().to_string())),
            d => (d.to_string(), None),
        };
        ReceiptDoc {
            id_to: r.message.id_to.to_hex(),
            function_call: render_name(r.message.function_call()),
            origin: match r.message.origin {
                Origin::Extrinsic(i) => OriginDoc::Extrinsic(i),
                Origin::Internal(id) => OriginDoc::Internal(id.to_hex()),
            },
            disposition,
            trap_reason,
            fuel_used: r.fuel_used,
            messages_emitted: r.messages_emitted,
            actors_created: r.actors_created,
        }
    }

    pub fn disposition(&self) -> Option<Disposition> {
        Some(match self.disposition.as_str() {
            "Processed" => Disposition::Processed,
            "IgnoredNoActor" => Disposition::IgnoredNoActor,
            "IgnoredNoFunction" => Disposition::IgnoredNoFunction,
            "IgnoredBadCode" => Disposition::IgnoredBadCode,
            "DroppedBudget" => Disposition::DroppedBudget,
            "Trapped" => Disposition::Trapped(TrapReason::from_name(self.trap_reason.as_deref()?)?),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiptsDoc {
    pub receipts: Vec<ReceiptDoc>,
}

pub fn render_receipts(receipts: &[Receipt]) -> String {
    let doc = ReceiptsDoc { receipts: receipts.iter().map(ReceiptDoc::render).collect() };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSection {
    #[serde(default = "default_fuel")]
    pub fuel_per_message: u64,
    #[serde(default = "default_max_messages")]
    pub max_messages_per_block: u64,
    #[serde(default = "default_max_queue")]
    pub max_queue_len: u64,
}

fn default_fuel() -> u64 {
    VmConfig::default().fuel_per_message
}
fn default_max_messages() -> u64 {
    VmConfig::default().max_messages_per_block
}
fn default_max_queue() -> u64 {
    VmConfig::default().max_queue_len
}

impl Default for ConfigSection {
    fn default() -> Self {
        ConfigSection::from(VmConfig::default())
    }
}

impl From<VmConfig> for ConfigSection {
    fn from(c: VmConfig) -> Self {
        ConfigSection {
            fuel_per_message: c.fuel_per_message,
            max_messages_per_block: c.max_messages_per_block,
            max_queue_len: c.max_queue_len,
        }
    }
}

/// Storage entry: key is UTF-8 text or `0x` hex, value is `0x` hex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelActorDoc {
    pub id: String,
    /// Assembly source.
    pub code: String,
    #[serde(default)]
    pub storage: Vec<EntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserActorDoc {
    pub template: String,
    pub id: String,
    #[serde(default)]
    pub storage: Vec<EntryDoc>,
}

/// The genesis file (TOML):
///
/// ```toml
/// [config]                 # optional; omitted limits take their defaults
/// fuel_per_message = 10000
///
/// registry = """..."""     # optional assembly for the registry actor
///
/// [templates]
/// counter = """
/// .fn init
///     halt
/// """
///
/// [[kernel_actors]]
/// id = "0x…"               # 32 bytes
/// code = """..."""
/// storage = [{ key = "A", value = "0x0000000000000064" }]
///
/// [[user_actors]]
/// template = "counter"
/// id = "0x…"
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenesisFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registry: Option<String>,
    #[serde(default)]
    pub config: ConfigSection,
    #[serde(default)]
    pub templates: BTreeMap<String, String>,
    #[serde(default)]
    pub kernel_actors: Vec<KernelActorDoc>,
    #[serde(default)]
    pub user_actors: Vec<UserActorDoc>,
}

fn assemble_in(context: impl Into<String>, src: &str) -> Result<Program, DocError> {
    assemble(src).map_err(|error| DocError::Asm { context: context.into(), error })
}

fn entries(docs: &[EntryDoc]) -> Result<Entries, DocError> {
    docs.iter().map(|e| Ok((parse_name(&e.key), parse_hex(&e.value)?))).collect()
}

impl GenesisFile {
    pub fn to_doc(&self) -> Result<GenesisDoc, DocError> {
        let config = VmConfig {
            fuel_per_message: self.config.fuel_per_message,
            max_messages_per_block: self.config.max_messages_per_block,
            max_queue_len: self.config.max_queue_len,
        };
        let registry = match &self.registry {
            Some(src) => Some(assemble_in("registry", src)?),
            None => None,
        };
        let mut templates = BTreeMap::new();
        for (name, src) in &self.templates {
            let program = assemble_in(format!("template {name:?}"), src)?;
            if templates.insert(parse_name(name), program).is_some() {
                return invalid(format!("template {name:?} declared twice"));
            }
        }
        let kernel_actors = self
            .kernel_actors
            .iter()
            .map(|k| {
                Ok(KernelActor {
                    id: parse_id(&k.id)?,
                    program: assemble_in(format!("kernel actor {}", k.id), &k.code)?,
                    storage: entries(&k.storage)?,
                })
            })
            .collect::<Result<_, DocError>>()?;
        let user_actors = self
            .user_actors
            .iter()
            .map(|u| {
                Ok(UserActor {
                    template: parse_name(&u.template),
                    id: parse_id(&u.id)?,
                    storage: entries(&u.storage)?,
                })
            })
            .collect::<Result<_, DocError>>()?;
        Ok(GenesisDoc { config, registry, templates, kernel_actors, user_actors })
    }
}

pub fn parse_genesis(text: &str) -> Result<GenesisDoc, DocError> {
    toml::from_str::<GenesisFile>(text)?.to_doc()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn value_repr_shapes() {
        let v = JsonValue::render(&Value::Int(-42));
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"int":"-42"}"#);
        let b = JsonValue::render(&Value::bytes(vec![0xAB, 0x01]).unwrap());
        assert_eq!(serde_json::to_string(&b).unwrap(), r#"{"bytes":"0xab01"}"#);
    }

    #[test]
    fn value_repr_rejects_malformed() {
        for bad in [
            r#"{"int":"1.5"}"#,
            r#"{"int":"+1"}"#,
            r#"{"bytes":"ab"}"#,
            r#"{"bytes":"0xABCD"}"#,
            r#"{"bytes":"0xabc"}"#,
        ] {
            let v: JsonValue = serde_json::from_str(bad).unwrap();
            assert!(v.parse().is_err(), "{bad}");
        }
        assert!(serde_json::from_str::<JsonValue>(r#"{"int":"1","bytes":"0x"}"#).is_err());
        assert!(serde_json::from_str::<JsonValue>(r#"{"float":"1"}"#).is_err());
    }

    #[test]
    fn block_doc_parses() {
        let id = "0x".to_string() + &"11".repeat(32);
        let text = format!(
            r#"{{"extrinsics":[{{"id_to":"{id}","function_call":"transfer","parameters":[{{"bytes":"0x41"}},{{"int":"5"}}]}},
                {{"id_to":"{id}","function_call":"0x6869","parameters":[]}}]}}"#
        );
        let b = parse_block(&text).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.extrinsics()[0].function_call(), b"transfer");
        assert_eq!(b.extrinsics()[0].parameters()[1], Value::Int(5));
        assert_eq!(b.extrinsics()[1].function_call(), b"hi");
        assert_eq!(b.extrinsics()[1].origin, Origin::Extrinsic(1));
        assert_eq!(parse_block(&render_block(&b)).unwrap(), b);
    }

    #[test]
    fn block_doc_rejects_bad_ids_and_param_counts() {
        let short = r#"{"extrinsics":[{"id_to":"0x11","function_call":"f","parameters":[]}]}"#;
        assert!(parse_block(short).is_err());
        let id = "0x".to_string() + &"11".repeat(32);
        let params = vec![r#"{"int":"0"}"#; 33].join(",");
        let many = format!(r#"{{"extrinsics":[{{"id_to":"{id}","function_call":"f","parameters":[{params}]}}]}}"#);
        assert!(parse_block(&many).is_err());
        assert!(parse_block(r#"{"extrinsics":[], "extra": 1}"#).is_err());
    }

    #[test]
    fn names_render_as_text_or_hex() {
        assert_eq!(render_name(b"transfer"), "transfer");
        assert_eq!(render_name(&[0xff]), "0xff");
        assert_eq!(render_name(b"0xzz"), "0x30787a7a");
        assert_eq!(parse_name(&render_name(b"0xzz")), b"0xzz");
    }

    #[test]
    fn genesis_toml_parses() {
        let text = r#"
            registry = ".fn set\n push 0\n param\n push 1\n param\n sset\n"

            [config]
            fuel_per_message = 50

            [templates]
            counter = """
            .fn init
                halt
            """

            [[kernel_actors]]
            id = "0x0101010101010101010101010101010101010101010101010101010101010101"
            code = ".fn f\n halt\n"
            storage = [{ key = "A", value = "0x0000000000000064" }]

            [[user_actors]]
            template = "counter"
            id = "0x0202020202020202020202020202020202020202020202020202020202020202"
        "#;
        let doc = parse_genesis(text).unwrap();
        assert_eq!(doc.config.fuel_per_message, 50);
        assert_eq!(doc.config.max_queue_len, VmConfig::default().max_queue_len);
        assert!(doc.registry.is_some());
        assert_eq!(doc.kernel_actors[0].storage, vec![(b"A".to_vec(), vec![0, 0, 0, 0, 0, 0, 0, 100])]);
        assert_eq!(doc.user_actors[0].template, b"counter");
    }

    #[test]
    fn genesis_asm_errors_carry_context() {
        let text = r#"
            [[kernel_actors]]
            id = "0x0101010101010101010101010101010101010101010101010101010101010101"
            code = ".fn f\n jump nowhere\n"
        "#;
        let e = parse_genesis(text).unwrap_err().to_string();
        assert!(e.contains("undefined label `nowhere`"), "{e}");
        assert!(parse_genesis("[config]\nbogus = 1\n").is_err());
    }

    fn value() -> impl Strategy<Value = Value> {
        prop_oneof![
            any::<i64>().prop_map(Value::Int),
            prop::collection::vec(any::<u8>(), 0..40).prop_map(|b| Value::bytes(b).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn value_repr_round_trip(v in value()) {
            let text = serde_json::to_string(&JsonValue::render(&v)).unwrap();
            let back: JsonValue = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.parse().unwrap(), v);
        }

        #[test]
        fn name_round_trip(raw in prop::collection::vec(any::<u8>(), 1..20)) {
            prop_assert_eq!(parse_name(&render_name(&raw)), raw);
        }
    }
}
