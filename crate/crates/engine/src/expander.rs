//! Prompt expansion: one query becomes N suffixed prompts, each generated,
//! embedded and scored against the scene vibe and the user's taste prior.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::time::Duration;

use futures::future::join_all;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use soundstage_core::assets::AssetStore;
use soundstage_core::audiokit::AudioAsset;
use soundstage_core::lexicon;
use soundstage_core::model::{
    join_prompt, normalize_ws, KeywordCategory, KeywordPools, Lineage, SceneId, SceneSegment, ScoreBreakdown, Track,
    TrackId,
};
use soundstage_core::templates::{TemplateId, Variables};
use soundstage_core::vecmath::cosine_similarity;
use soundstage_core::Embedding;
use soundstage_providers::{MusicRequest, ProviderError, Providers, EXPANSION_CAPABILITIES};
use tokio::sync::Semaphore;

use crate::ask::{ask, DEFAULT_RETRIES};
use crate::error::{EngineError, Result};
use crate::schema;

pub const MAX_MODIFIER_WORDS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpansionConfig {
    pub n_expansions: usize,
    pub top_k: usize,
    pub alpha: f64,
    pub parallelism: usize,
    #[serde(with = "secs")]
    pub call_timeout: Duration,
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            n_expansions: 6,
            top_k: 4,
            alpha: 0.5,
            parallelism: 6,
            call_timeout: Duration::from_secs(120),
        }
    }
}

impl ExpansionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.top_k && self.top_k <= self.n_expansions) {
            return Err(EngineError::Config(format!(
                "top_k {} must be in 1..={}",
                self.top_k, self.n_expansions
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(EngineError::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.parallelism == 0 {
            return Err(EngineError::Config("parallelism must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub query: String,
    pub scene_id: SceneId,
    #[serde(default)]
    pub config: ExpansionConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidate {
    pub prompt: String,
    pub modifier: String,
    pub audio: AudioAsset,
    pub embedding: Embedding,
    pub score: ScoreBreakdown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionOutcome {
    /// Best first.
    pub tracks: Vec<Track>,
    /// Fewer than `top_k` generations succeeded.
    pub partial: bool,
    pub failures: Vec<(String, ProviderError)>,
    pub modifiers: Vec<String>,
}

fn acceptable(modifier: &str) -> Option<String> {
    let m = normalize_ws(modifier);
    let n = m.split(' ').filter(|w| !w.is_empty()).count();
    (1..=MAX_MODIFIER_WORDS).contains(&n).then_some(m)
}

/// Keeps valid, distinct modifiers and pads from the built-in pool up to `n`.
pub fn finalize_modifiers(query: &str, proposed: Vec<String>, n: usize) -> Result<Vec<String>> {
    let query_words: HashSet<String> = query.split_whitespace().map(str::to_lowercase).collect();
    let mut seen = HashSet::new();
    let mut out: Vec<String> = Vec::with_capacity(n);
    for m in proposed.iter().filter_map(|m| acceptable(m)) {
        if out.len() < n && seen.insert(m.to_lowercase()) {
            out.push(m);
        }
    }
    if out.len() < n {
        tracing::debug!(have = out.len(), want = n, "padding modifiers from fallback pool");
        for m in lexicon::fallback_modifiers() {
            if out.len() >= n {
                break;
            }
            let clashes = m.split_whitespace().any(|w| query_words.contains(&w.to_lowercase()));
            if !clashes && seen.insert(m.to_lowercase()) {
                out.push(m.to_string());
            }
        }
    }
    if out.len() < n {
        return Err(EngineError::ExpansionFailed(format!(
            "only {} distinct modifiers available, {n} needed",
            out.len()
        )));
    }
    Ok(out)
}

/// Asks the language model for `n` suffixes; falls back to the built-in pool
/// if the provider fails.
pub async fn generate_modifiers(providers: &Providers, query: &str, n: usize) -> Result<Vec<String>> {
    if n == 0 {
        return Err(EngineError::Config("need at least one modifier".into()));
    }
    let vars = Variables::new().text("query", query).text("count", n.to_string());
    let proposed = match ask(providers, TemplateId::PromptModifiers, &vars, &[], DEFAULT_RETRIES, schema::parse_modifiers).await {
        Ok(Ok(list)) => list,
        Ok(Err(rejected)) => {
            tracing::warn!(violation = %rejected.violation, "modifier response unusable");
            Vec::new()
        }
        Err(EngineError::Provider(e)) => {
            tracing::warn!(error = %e, "modifier provider failed");
            Vec::new()
        }
        Err(e) => return Err(e),
    };
    finalize_modifiers(query, proposed, n)
}

pub fn form_prompts(query: &str, modifiers: &[String]) -> Vec<String> {
    let query = normalize_ws(query);
    modifiers.iter().map(|m| join_prompt(&query, m)).collect()
}

/// `R(p) = alpha * cos(z, c) + (1 - alpha) * cos(z, u)`, or `cos(z, c)` without a prior.
pub fn score_candidate(z: &Embedding, c: &Embedding, u: Option<&Embedding>, alpha: f64) -> Result<ScoreBreakdown> {
    let scene = cosine_similarity(z, c)?;
    let taste = u.map(|u| cosine_similarity(z, u)).transpose()?;
    Ok(ScoreBreakdown::compose(scene, taste, alpha))
}

/// Descending total, ties by prompt text.
pub fn rank_order(a: (&ScoreBreakdown, &str), b: (&ScoreBreakdown, &str)) -> Ordering {
    b.0.total
        .partial_cmp(&a.0.total)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.1.cmp(b.1))
}

pub fn select_top_k(mut candidates: Vec<ScoredCandidate>, k: usize) -> Vec<ScoredCandidate> {
    candidates.sort_by(|a, b| rank_order((&a.score, &a.prompt), (&b.score, &b.prompt)));
    candidates.truncate(k);
    candidates
}

pub fn new_track_id() -> TrackId {
    TrackId::new(format!("trk_{}", uuid::Uuid::new_v4().simple()))
}

fn title_from(modifier: &str) -> String {
    modifier
        .split_whitespace()
        .map(|w| {
            let mut c = w.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
        })
        .collect::<Vec<String>>()
        .join(" ")
}

/// Runs one generation and embedding under the shared limiter and deadline.
pub(crate) async fn generate_and_embed(
    providers: &Providers,
    store: &AssetStore,
    limiter: &Semaphore,
    timeout: Duration,
    request: MusicRequest,
) -> std::result::Result<(AudioAsset, Embedding), ProviderError> {
    let _permit = limiter
        .acquire()
        .await
        .map_err(|e| ProviderError::Transport(e.to_string()))?;
    let work = async {
        let audio = providers.generate_music(store, &request).await?;
        let embedding = providers.embed_audio(store, &audio).await?;
        Ok((audio, embedding))
    };
    match tokio::time::timeout(timeout, work).await {
        Ok(r) => r,
        Err(_) => Err(ProviderError::Timeout(timeout)),
    }
}

/// The full expansion for one scene. Tracks are returned, not inserted.
pub async fn run_expansion(
    providers: &Providers,
    store: &AssetStore,
    scene: &SceneSegment,
    taste_prior: Option<&Embedding>,
    request: &GenerationRequest,
) -> Result<ExpansionOutcome> {
    let config = &request.config;
    config.validate()?;
    let query = normalize_ws(&request.query);
    if query.is_empty() {
        return Err(EngineError::Precondition("empty query".into()));
    }
    providers.require(&EXPANSION_CAPABILITIES)?;
    let modifiers = generate_modifiers(providers, &query, config.n_expansions).await?;
    let prompts = form_prompts(&query, &modifiers);
    let limiter = Semaphore::new(config.parallelism);
    let duration = scene.duration();
    let results = join_all(prompts.iter().map(|p| {
        generate_and_embed(providers, store, &limiter, config.call_timeout, MusicRequest::text(p.clone(), duration))
    }))
    .await;

    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    for ((prompt, modifier), result) in prompts.iter().zip(&modifiers).zip(results) {
        match result {
            Ok((audio, embedding)) => {
                let score = score_candidate(&embedding, &scene.vibe_embedding, taste_prior, config.alpha)?;
                candidates.push(ScoredCandidate {
                    prompt: prompt.clone(),
                    modifier: modifier.clone(),
                    audio,
                    embedding,
                    score,
                });
            }
            Err(e) => {
                tracing::warn!(%prompt, error = %e, "generation dropped");
                failures.push((prompt.clone(), e));
            }
        }
    }
    if candidates.is_empty() {
        return Err(EngineError::ExpansionFailed(format!(
            "all {} generations failed; first error: {}",
            prompts.len(),
            failures.first().map(|f| f.1.to_string()).unwrap_or_default()
        )));
    }
    let partial = candidates.len() < config.top_k;
    let tracks = select_top_k(candidates, config.top_k)
        .into_iter()
        .map(|c| Track {
            id: new_track_id(),
            user_prompt: query.clone(),
            title: title_from(&c.modifier),
            modifier: c.modifier,
            full_prompt: c.prompt,
            scene_id: Some(scene.scene_id),
            audio: c.audio,
            embedding: c.embedding,
            score: c.score,
            analysis: None,
            static_thumbnail: None,
            animated_thumbnail: None,
            lineage: Lineage::fresh(),
        })
        .collect();
    Ok(ExpansionOutcome { tracks, partial, failures, modifiers })
}

/// A few keywords per category to show as suggestion chips.
pub type KeywordSuggestion = BTreeMap<KeywordCategory, Vec<String>>;

/// One or two keywords per category, sampled with `seed`.
pub fn suggest_keywords(pools: &KeywordPools, seed: u64) -> Result<KeywordSuggestion> {
    if pools.is_empty() {
        return Err(EngineError::Precondition("keyword pools are empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BTreeMap::new();
    for c in KeywordCategory::ALL {
        let pool = pools.category(c);
        let want = rng.random_range(1..=2).min(pool.len());
        let picked: Vec<String> = pool.choose_multiple(&mut rng, want).cloned().collect();
        out.insert(c, picked);
    }
    Ok(out)
}

/// Rebuilds a scene's pools with recent captions as extra context.
pub async fn rebuild_pools(providers: &Providers, scene: &SceneSegment, recent_captions: &[String]) -> Result<KeywordPools> {
    let captions = if recent_captions.is_empty() {
        "(none yet)".to_string()
    } else {
        recent_captions.iter().map(|c| format!("- {c}")).collect::<Vec<_>>().join("\n")
    };
    let vars = Variables::new()
        .text("sceneDescription", &scene.description)
        .text("sceneVibe", &scene.vibe)
        .text("recentCaptions", captions);
    ask(providers, TemplateId::SceneKeywords, &vars, &[], DEFAULT_RETRIES, schema::parse_keyword_pools)
        .await?
        .map_err(|r| EngineError::AnalysisFailed { violation: r.violation, attempts: r.attempts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prompts_are_single_space_joined() {
        assert_eq!(
            form_prompts("piano solo", &["meditative ambient".into()]),
            vec!["piano solo meditative ambient"]
        );
        assert!(form_prompts("q", &[]).is_empty());
        assert_eq!(form_prompts("q", &["  jazz   swing ".into()]), vec!["q jazz swing"]);
    }

    #[test]
    fn duplicates_are_replaced_from_pool() {
        let out = finalize_modifiers("piano solo", vec!["jazz swing".into(), "Jazz  Swing".into()], 3).unwrap();
        assert_eq!(out, vec!["jazz swing", "meditative ambient", "tropical ukulele"]);
        let out = finalize_modifiers("q", vec!["one two three four five".into()], 1).unwrap();
        assert_eq!(out, vec!["meditative ambient"]);
        assert!(finalize_modifiers("q", vec![], 1000).is_err());
    }

    #[test]
    fn config_bounds() {
        assert!(ExpansionConfig::default().validate().is_ok());
        let bad = ExpansionConfig { top_k: 7, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ExpansionConfig { alpha: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
