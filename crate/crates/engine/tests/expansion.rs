mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soundstage_core::assets::AssetStore;
use soundstage_core::model::{join_prompt, ScoreBreakdown};
use soundstage_core::Embedding;
use soundstage_engine::expander::{
    finalize_modifiers, rank_order, score_candidate, select_top_k, suggest_keywords, ScoredCandidate,
};
use soundstage_engine::{run_expansion, EngineError, ExpansionConfig, GenerationRequest};
use soundstage_providers::mock::{Fault, FaultyMusic, MockMusic, ScriptedLlm, TableEmbedder};
use soundstage_providers::{ProviderError, Providers};

const QUERY: &str = "calm piano";
const MODIFIER_POOL: [&str; 12] = [
    "warm strings",
    "soft rain ambience",
    "lofi beat",
    "gentle harp",
    "dreamy synth pads",
    "upbeat jazz trio",
    "slow cello",
    "bright glockenspiel",
    "deep bass drone",
    "airy flute",
    "vinyl crackle",
    "nylon guitar",
];

struct Scenario {
    modifiers: Vec<String>,
    vibe: Embedding,
    prior: Option<Embedding>,
    audio: Vec<Embedding>,
    alpha: f64,
}

impl Scenario {
    /// Candidates on a known plane: `z = x c + y u + r w`, so both cosines are
    /// `x / |z|` and `y / |z|` exactly.
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = orthonormal(&mut rng, 8);
        let (c, u) = (&basis[0], &basis[1]);
        let with_prior = seed % 3 != 0;
        let alpha = [0.5, 0.3, 0.8, 1.0, 0.0][(seed % 5) as usize];
        let mut pool = MODIFIER_POOL.to_vec();
        pool.shuffle(&mut rng);
        let modifiers: Vec<String> = pool[..6].iter().map(|s| s.to_string()).collect();
        loop {
            let audio_raw: Vec<Vec<f64>> = (0..6)
                .map(|i| {
                    let (x, y, r): (f64, f64, f64) =
                        (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0));
                    let w = &basis[2 + i];
                    (0..c.len()).map(|k| x * c[k] + y * u[k] + r * w[k]).collect()
                })
                .collect();
            let totals: Vec<f64> = audio_raw
                .iter()
                .map(|z| {
                    let n = dot(z, z).sqrt();
                    let (s, t) = (dot(z, c) / n, dot(z, u) / n);
                    if with_prior { alpha * s + (1.0 - alpha) * t } else { s }
                })
                .collect();
            let mut sorted = totals.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if sorted.windows(2).all(|w| w[1] - w[0] > 1e-3) {
                return Self {
                    modifiers,
                    vibe: emb(c),
                    prior: with_prior.then(|| emb(u)),
                    audio: audio_raw.iter().map(|z| emb(z)).collect(),
                    alpha,
                };
            }
        }
    }

    fn prompts(&self) -> Vec<String> {
        self.modifiers.iter().map(|m| join_prompt(QUERY, m)).collect()
    }

    fn expected_top(&self, k: usize) -> Vec<String> {
        let mut scored: Vec<(f64, String)> = self
            .prompts()
            .into_iter()
            .zip(&self.audio)
            .map(|(p, z)| {
                let s = oracle_cos(z, &self.vibe);
                let total = match &self.prior {
                    Some(u) => self.alpha * s + (1.0 - self.alpha) * oracle_cos(z, u),
                    None => s,
                };
                (total, p)
            })
            .collect();
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        scored.into_iter().take(k).map(|(_, p)| p).collect()
    }

    fn providers(&self, seed: u64) -> (Providers, Arc<ScriptedLlm>) {
        let reply = serde_json::json!({ "modifiers": self.modifiers }).to_string();
        let llm = Arc::new(ScriptedLlm::new([Ok(reply)]));
        let mut table = TableEmbedder::new(seed);
        for (p, z) in self.prompts().into_iter().zip(&self.audio) {
            table = table.with_audio(p, z.clone());
        }
        (Providers::mock(seed).with_llm(llm.clone()).with_embedder(Arc::new(table)), llm)
    }
}

fn request(config: ExpansionConfig) -> GenerationRequest {
    GenerationRequest { query: QUERY.into(), scene_id: 1, config }
}

#[tokio::test(flavor = "multi_thread")]
async fn expansion_returns_the_constructed_top_four() {
    let dir = tempfile::tempdir().unwrap();
    let store = AssetStore::open(dir.path()).unwrap();
    let started = Instant::now();
    for seed in 0..50u64 {
        let sc = Scenario::new(seed);
        let (providers, _) = sc.providers(seed);
        let scene = scene(1, 0.0, 16.0, sc.vibe.clone());
        let config = ExpansionConfig { alpha: sc.alpha, ..Default::default() };
        let out = run_expansion(&providers, &store, &scene, sc.prior.as_ref(), &request(config)).await.unwrap();
        let got: Vec<&str> = out.tracks.iter().map(|t| t.full_prompt.as_str()).collect();
        assert_eq!(got, sc.expected_top(4), "seed {seed}");
        assert!(!out.partial);
        assert!(out.tracks.windows(2).all(|w| w[0].score.total >= w[1].score.total));
        for t in &out.tracks {
            assert_eq!(t.scene_id, Some(1));
            assert_eq!(t.user_prompt, QUERY);
            assert_eq!(t.full_prompt, join_prompt(QUERY, &t.modifier));
            assert!((t.audio.duration - 16.0).abs() < 1e-6);
            assert_eq!(t.score.taste_fit.is_some(), sc.prior.is_some());
        }
    }
    assert!(started.elapsed() < Duration::from_secs(20), "{:?}", started.elapsed());
}

#[tokio::test]
async fn failed_generations_are_dropped_and_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let store = AssetStore::open(dir.path()).unwrap();
    let sc = Scenario::new(7);
    let (providers, _) = sc.providers(7);
    let doomed: Vec<String> = sc.prompts()[..3].to_vec();
    let faulty = FaultyMusic::new(
        Arc::new(MockMusic::new(7)),
        Fault::Error(ProviderError::Transient("overloaded".into())),
        move |r| doomed.contains(&r.prompt),
    );
    let providers = providers.with_music(Arc::new(faulty));
    let scene = scene(1, 0.0, 16.0, sc.vibe.clone());
    let config = ExpansionConfig { alpha: sc.alpha, ..Default::default() };
    let out = run_expansion(&providers, &store, &scene, sc.prior.as_ref(), &request(config)).await.unwrap();
    assert!(out.partial);
    assert_eq!(out.tracks.len(), 3);
    assert_eq!(out.failures.len(), 3);
    let survivors = Scenario { modifiers: sc.modifiers[3..].to_vec(), audio: sc.audio[3..].to_vec(), ..sc };
    let got: Vec<&str> = out.tracks.iter().map(|t| t.full_prompt.as_str()).collect();
    assert_eq!(got, survivors.expected_top(3));
}

#[tokio::test]
async fn all_failures_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let store = AssetStore::open(dir.path()).unwrap();
    let sc = Scenario::new(3);
    let (providers, _) = sc.providers(3);
    let faulty = FaultyMusic::new(
        Arc::new(MockMusic::new(3)),
        Fault::Error(ProviderError::Transient("down".into())),
        |_| true,
    );
    let providers = providers.with_music(Arc::new(faulty));
    let scene = scene(1, 0.0, 16.0, sc.vibe.clone());
    let err = run_expansion(&providers, &store, &scene, None, &request(ExpansionConfig::default())).await.unwrap_err();
    assert!(matches!(err, EngineError::ExpansionFailed(_)), "{err:?}");
}

#[tokio::test]
async fn hung_generation_times_out() {
    let dir = tempfile::tempdir().unwrap();
    let store = AssetStore::open(dir.path()).unwrap();
    let sc = Scenario::new(11);
    let (providers, _) = sc.providers(11);
    let slow = sc.prompts()[0].clone();
    let faulty = FaultyMusic::new(Arc::new(MockMusic::new(11)), Fault::Hang(Duration::from_secs(30)), move |r| {
        r.prompt == slow
    });
    let providers = providers.with_music(Arc::new(faulty));
    let scene = scene(1, 0.0, 16.0, sc.vibe.clone());
    let config = ExpansionConfig { call_timeout: Duration::from_millis(300), ..Default::default() };
    let t = Instant::now();
    let out = run_expansion(&providers, &store, &scene, None, &request(config)).await.unwrap();
    assert!(t.elapsed() < Duration::from_secs(5));
    assert_eq!(out.tracks.len(), 4);
    assert!(matches!(out.failures[0].1, ProviderError::Timeout(_)));
}

#[tokio::test]
async fn modifier_provider_failure_falls_back_to_pool() {
    let dir = tempfile::tempdir().unwrap();
    let store = AssetStore::open(dir.path()).unwrap();
    let llm = Arc::new(ScriptedLlm::new([Err(ProviderError::Transient("llm down".into()))]));
    let providers = Providers::mock(5).with_llm(llm);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scene = scene(1, 0.0, 16.0, emb(&gaussian(&mut rng, 512)));
    let out = run_expansion(&providers, &store, &scene, None, &request(ExpansionConfig::default())).await.unwrap();
    assert_eq!(out.modifiers.len(), 6);
    assert_eq!(out.tracks.len(), 4);
    for m in &out.modifiers {
        assert!(!m.contains("calm") && !m.contains("piano"), "{m}");
    }
}

#[tokio::test]
async fn bad_config_and_empty_query_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let store = AssetStore::open(dir.path()).unwrap();
    let providers = Providers::mock(1);
    let scene = scene(1, 0.0, 16.0, Embedding::basis(512, 0));
    let bad = ExpansionConfig { top_k: 7, ..Default::default() };
    assert!(matches!(
        run_expansion(&providers, &store, &scene, None, &request(bad)).await,
        Err(EngineError::Config(_))
    ));
    let mut req = request(ExpansionConfig::default());
    req.query = "   ".into();
    assert!(matches!(
        run_expansion(&providers, &store, &scene, None, &req).await,
        Err(EngineError::Precondition(_))
    ));
}

#[test]
fn ties_break_by_prompt_text() {
    let s = ScoreBreakdown::compose(0.5, None, 0.5);
    let z = Embedding::basis(4, 0);
    let cand = |p: &str| ScoredCandidate {
        prompt: p.into(),
        modifier: String::new(),
        audio: soundstage_core::audiokit::AudioAsset {
            path: soundstage_core::assets::AssetRef::new("00".repeat(32), "wav").unwrap(),
            sample_rate: 8000,
            channels: 1,
            duration: 1.0,
            format: "wav".into(),
        },
        embedding: z.clone(),
        score: s.clone(),
    };
    let top = select_top_k(vec![cand("b"), cand("c"), cand("a")], 2);
    assert_eq!(top.iter().map(|c| c.prompt.as_str()).collect::<Vec<_>>(), ["a", "b"]);
}

#[test]
fn modifiers_are_padded_without_query_words() {
    let out = finalize_modifiers("calm piano", vec!["warm strings".into(), "warm  strings".into()], 6).unwrap();
    assert_eq!(out.len(), 6);
    assert_eq!(out[0], "warm strings");
    let lower: Vec<String> = out.iter().map(|m| m.to_lowercase()).collect();
    let distinct: std::collections::HashSet<_> = lower.iter().collect();
    assert_eq!(distinct.len(), 6);
}

#[test]
fn keyword_suggestions_come_from_pools() {
    let p = pools();
    let s = suggest_keywords(&p, 3).unwrap();
    assert_eq!(s, suggest_keywords(&p, 3).unwrap());
    for (cat, words) in &s {
        assert!(!words.is_empty());
        for w in words {
            assert!(p.category(*cat).contains(w));
        }
    }
}

fn unit_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn score_is_the_affine_combination(z in unit_vec(16), c in unit_vec(16), u in unit_vec(16), alpha in 0.0f64..=1.0) {
        let (z, c, u) = (emb(&z), emb(&c), emb(&u));
        let s = score_candidate(&z, &c, Some(&u), alpha).unwrap();
        let expected = alpha * oracle_cos(&z, &c) + (1.0 - alpha) * oracle_cos(&z, &u);
        prop_assert!((s.total - expected).abs() <= 1e-12, "{} vs {}", s.total, expected);
        let alone = score_candidate(&z, &c, None, alpha).unwrap();
        prop_assert!((alone.total - oracle_cos(&z, &c)).abs() <= 1e-12);
        prop_assert_eq!(alone.taste_fit, None);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn top_k_is_shift_invariant(
        fits in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6),
        alpha in 0.0f64..=1.0,
        shift in -0.5f64..0.5,
        k in 1usize..=6,
    ) {
        let order = |delta: f64| {
            let mut idx: Vec<(ScoreBreakdown, String)> = fits
                .iter()
                .enumerate()
                .map(|(i, (s, t))| (ScoreBreakdown::compose(s + delta, Some(*t), alpha), format!("p{i}")))
                .collect();
            idx.sort_by(|a, b| rank_order((&a.0, &a.1), (&b.0, &b.1)));
            idx.into_iter().take(k).map(|(_, p)| p).collect::<Vec<_>>()
        };
        let mut a = order(0.0);
        let mut b = order(shift);
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }
}
