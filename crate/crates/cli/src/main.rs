// SPDX-License-Identifier: Apache-2.0

//! `actorvm`: build genesis snapshots, apply blocks, inspect state, assemble code.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use actorvm_core::doc::{parse_block, parse_genesis, parse_hex, parse_id, render_hex, render_receipts};
use actorvm_core::snapshot::write_atomic;
use actorvm_core::vm::asm::assemble;
use actorvm_core::{apply_block, build_genesis, demo, encode_program, load_snapshot, save_snapshot, state_root, VmConfig};
use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "actorvm", version, about = "Deterministic actor VM state transition tool")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the genesis state and write it as a snapshot.
    Init {
        #[arg(long)]
        genesis: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a block to a snapshot in place.
    Apply {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        block: PathBuf,
        /// Write per-message receipts as JSON.
        #[arg(long)]
        receipts: Option<PathBuf>,
        #[command(flatten)]
        limits: Limits,
    },
    /// Print the state root of a snapshot.
    Root {
        #[arg(long)]
        state: PathBuf,
    },
    /// List actors, or dump one actor's storage, or read one key.
    Inspect {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        actor: Option<String>,
        #[arg(long, requires = "actor")]
        key: Option<String>,
    },
    /// Assemble a text program and print its code blob.
    Asm { file: PathBuf },
    /// Write the ledger demo fixtures.
    Demo {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Limits {
    #[arg(long, default_value_t = VmConfig::default().fuel_per_message)]
    fuel_per_message: u64,
    #[arg(long, default_value_t = VmConfig::default().max_messages_per_block)]
    max_messages: u64,
    #[arg(long, default_value_t = VmConfig::default().max_queue_len)]
    max_queue_len: u64,
}

impl Limits {
    fn config(&self) -> Result<VmConfig> {
        let cfg = VmConfig {
            fuel_per_message: self.fuel_per_message,
            max_messages_per_block: self.max_messages,
            max_queue_len: self.max_queue_len,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn init(genesis: &Path, out: &Path) -> Result<()> {
    let doc = parse_genesis(&read_text(genesis)?).with_context(|| genesis.display().to_string())?;
    let state = build_genesis(&doc).context("genesis rejected")?;
    save_snapshot(&state, out).with_context(|| format!("cannot write {}", out.display()))?;
    println!("{}", state_root(&state));
    Ok(())
}

fn apply(state_path: &Path, block: &Path, receipts_out: Option<&Path>, limits: &Limits) -> Result<()> {
    let cfg = limits.config()?;
    let state = load_snapshot(state_path).with_context(|| format!("cannot load {}", state_path.display()))?;
    let block = parse_block(&read_text(block)?).with_context(|| block.display().to_string())?;
    let (next, receipts) = apply_block(&state, &block, &cfg);
    if let Some(path) = receipts_out {
        write_atomic(path, render_receipts(&receipts).as_bytes())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    save_snapshot(&next, state_path).with_context(|| format!("cannot write {}", state_path.display()))?;
    println!("{}", state_root(&next));
    Ok(())
}

fn inspect(state_path: &Path, actor: Option<&str>, key: Option<&str>) -> Result<()> {
    let state = load_snapshot(state_path).with_context(|| format!("cannot load {}", state_path.display()))?;
    let Some(actor) = actor else {
        for a in state.actors() {
            println!("{} entries={}", a.id, a.storage.len());
        }
        return Ok(());
    };
    let id = parse_id(actor).context("--actor")?;
    let Some(a) = state.get(&id) else {
        println!("absent");
        return Ok(());
    };
    match key {
        Some(key) => {
            let key = parse_hex(key).context("--key")?;
            match a.storage.get(&key) {
                Some(v) => println!("{}", render_hex(v)),
                None => println!("absent"),
            }
        }
        None => {
            println!("code_size={}", a.code.len());
            for (k, v) in a.storage.iter() {
                println!("{} {}", render_hex(k), render_hex(v));
            }
        }
    }
    Ok(())
}

fn asm(file: &Path) -> Result<()> {
    let program = assemble(&read_text(file)?).map_err(|e| anyhow!("{}: {e}", file.display()))?;
    let blob = encode_program(&program).with_context(|| file.display().to_string())?;
    println!("{}", render_hex(blob.as_bytes()));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Init { genesis, out } => init(&genesis, &out),
        Command::Apply { state, block, receipts, limits } => apply(&state, &block, receipts.as_deref(), &limits),
        Command::Root { state } => {
            let s = load_snapshot(&state).with_context(|| format!("cannot load {}", state.display()))?;
            println!("{}", state_root(&s));
            Ok(())
        }
        Command::Inspect { state, actor, key } => inspect(&state, actor.as_deref(), key.as_deref()),
        Command::Asm { file } => asm(&file),
        Command::Demo { out } => {
            fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
            for path in demo::write_fixtures(&out).with_context(|| format!("cannot write to {}", out.display()))? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
