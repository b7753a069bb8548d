use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;

use crate::capabilities::ProviderCapabilities;
use crate::error::{ProviderError, Result};
use crate::request::{LlmRequest, MusicRequest};
use crate::{LlmProvider, MusicProvider};

/// Replays queued responses in order and records every request it receives.
/// Once the queue is empty it defers to `fallback`, or fails.
#[derive(Clone)]
pub struct ScriptedLlm {
    queue: Arc<Mutex<VecDeque<Result<String>>>>,
    seen: Arc<Mutex<Vec<LlmRequest>>>,
    fallback: Option<Arc<dyn LlmProvider>>,
    capabilities: ProviderCapabilities,
}

impl ScriptedLlm {
    pub fn new(responses: impl IntoIterator<Item = Result<String>>) -> Self {
        Self {
            queue: Arc::new(Mutex::new(responses.into_iter().collect())),
            seen: Arc::default(),
            fallback: None,
            capabilities: ProviderCapabilities {
                llm_with_audio: true,
                llm_with_video: true,
                ..ProviderCapabilities::NONE
            },
        }
    }

    pub fn with_fallback(mut self, fallback: Arc<dyn LlmProvider>) -> Self {
        self.fallback = Some(fallback);
        self
    }

    pub fn with_capabilities(mut self, caps: ProviderCapabilities) -> Self {
        self.capabilities = caps;
        self
    }

    pub fn push(&self, response: Result<String>) {
        self.queue.lock().expect("queue lock").push_back(response);
    }

    pub fn requests(&self) -> Vec<LlmRequest> {
        self.seen.lock().expect("request log lock").clone()
    }

    pub fn calls(&self) -> usize {
        self.seen.lock().expect("request log lock").len()
    }
}

#[async_trait]
impl LlmProvider for ScriptedLlm {
    fn capabilities(&self) -> ProviderCapabilities {
        self.capabilities
    }

    async fn complete(&self, request: &LlmRequest) -> Result<String> {
        self.seen.lock().expect("request log lock").push(request.clone());
        let next = self.queue.lock().expect("queue lock").pop_front();
        match (next, &self.fallback) {
            (Some(r), _) => r,
            (None, Some(f)) => f.complete(request).await,
            (None, None) => Err(ProviderError::Transport("script exhausted".into())),
        }
    }
}

/// What [`FaultyMusic`] does for a matching request.
#[derive(Clone, Debug)]
pub enum Fault {
    Error(ProviderError),
    Hang(Duration),
}

type Predicate = dyn Fn(&MusicRequest) -> bool + Send + Sync;

/// Wraps a music provider and injects a fault for requests matching a predicate.
#[derive(Clone)]
pub struct FaultyMusic {
    inner: Arc<dyn MusicProvider>,
    fault: Fault,
    matches: Arc<Predicate>,
}

impl FaultyMusic {
    pub fn new(
        inner: Arc<dyn MusicProvider>,
        fault: Fault,
        matches: impl Fn(&MusicRequest) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self { inner, fault, matches: Arc::new(matches) }
    }
}

#[async_trait]
impl MusicProvider for FaultyMusic {
    fn capabilities(&self) -> ProviderCapabilities {
        self.inner.capabilities()
    }

    async fn generate(&self, request: &MusicRequest) -> Result<Vec<u8>> {
        if (self.matches)(request) {
            match &self.fault {
                Fault::Error(e) => return Err(e.clone()),
                Fault::Hang(d) => tokio::time::sleep(*d).await,
            }
        }
        self.inner.generate(request).await
    }
}
