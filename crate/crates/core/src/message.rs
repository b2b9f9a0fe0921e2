// SPDX-License-Identifier: Apache-2.0

//! Messages and the single global FIFO queue.

use std::collections::VecDeque;

use thiserror::Error;

use crate::value::{ActorId, Value, MAX_NAME_LEN, MAX_PARAMS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MessageError {
    #[error("function name must be 1..={MAX_NAME_LEN} bytes, got {0}")]
    BadFunctionName(usize),
    #[error("at most {MAX_PARAMS} parameters allowed, got {0}")]
    TooManyParams(usize),
}

/// Where a message came from. Execution ignores it; receipts and tests use it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    /// Position of the extrinsic within its block.
    Extrinsic(u64),
    Internal(ActorId),
}

/// An asynchronous call: `function_call` on actor `id_to` with `parameters`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    pub id_to: ActorId,
    function_call: Vec<u8>,
    parameters: Vec<Value>,
    pub origin: Origin,
}

impl Message {
    pub fn new(
        id_to: ActorId,
        function_call: impl Into<Vec<u8>>,
        parameters: Vec<Value>,
        origin: Origin,
    ) -> Result<Self, MessageError> {
        let function_call = function_call.into();
        if function_call.is_empty() || function_call.len() > MAX_NAME_LEN {
            return Err(MessageError::BadFunctionName(function_call.len()));
        }
        if parameters.len() > MAX_PARAMS {
            return Err(MessageError::TooManyParams(parameters.len()));
        }
        Ok(Message { id_to, function_call, parameters, origin })
    }

    pub fn function_call(&self) -> &[u8] {
        &self.function_call
    }

    pub fn parameters(&self) -> &[Value] {
        &self.parameters
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }
}

/// Strict first-in-first-out queue of messages.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MessageQueue {
    items: VecDeque<Message>,
}

impl MessageQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, m: Message) {
        self.items.push_back(m);
    }

    pub fn pop(&mut self) -> Option<Message> {
        self.items.pop_front()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Removes every queued message in queue order.
    pub fn drain(&mut self) -> impl Iterator<Item = Message> + '_ {
        self.items.drain(..)
    }
}
