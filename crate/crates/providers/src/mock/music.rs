use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use soundstage_core::audiokit::Wav;

use crate::capabilities::ProviderCapabilities;
use crate::error::{ProviderError, Result};
use crate::features::{hash64, tokens};
use crate::request::MusicRequest;
use crate::MusicProvider;

pub const MOCK_SAMPLE_RATE: u32 = 22050;
/// RIFF chunk id carrying the [`Fingerprint`].
pub const FINGERPRINT_CHUNK: [u8; 4] = *b"smck";
const MAX_PARTIALS: usize = 6;
const PEAK: f64 = 0.8;
const MAX_DETUNE: f64 = 0.01;

/// What a mock clip was made from; stored inside the WAV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub prompt: String,
    pub tokens: Vec<String>,
    pub base_seed: u64,
    /// `(frequency Hz, amplitude)` before detune.
    pub partials: Vec<(f64, f64)>,
    pub detune: f64,
    pub variation: u32,
    pub conditioned: bool,
}

impl Fingerprint {
    pub fn read(wav_bytes: &[u8]) -> Option<Self> {
        let wav = Wav::parse(wav_bytes).ok()?;
        serde_json::from_slice(wav.chunk(&FINGERPRINT_CHUNK)?).ok()
    }
}

/// Partials for a token list: up to six distinct tokens chosen by hash order.
pub fn partials_for(tokens: &[String]) -> Vec<(f64, f64)> {
    let mut distinct: Vec<&String> = Vec::new();
    for t in tokens {
        if !distinct.contains(&t) {
            distinct.push(t);
        }
    }
    distinct.sort_by_key(|t| (hash64(&[b"rank", t.as_bytes()]), t.as_str()));
    distinct.truncate(MAX_PARTIALS);
    let weights: Vec<f64> = (0..distinct.len()).map(|i| 1.0 / (i as f64 + 1.0)).collect();
    let total: f64 = weights.iter().sum();
    distinct
        .iter()
        .zip(weights)
        .map(|(t, w)| {
            let semitone = hash64(&[b"pitch", t.as_bytes()]) % 36;
            (110.0 * 2f64.powf(semitone as f64 / 12.0), PEAK * w / total)
        })
        .collect()
}

// Taylor series; only called with |x| < 0.3, where 10 terms are exact to f64.
fn sin_cos_small(x: f64) -> (f64, f64) {
    let (mut s, mut c) = (0.0, 0.0);
    let mut term = 1.0;
    for k in 0..20u32 {
        if k % 2 == 0 {
            c += if k % 4 == 0 { term } else { -term };
        } else {
            s += if k % 4 == 1 { term } else { -term };
        }
        term *= x / f64::from(k + 1);
    }
    (s, c)
}

/// Sum of sines rendered with rotation recurrences, so output bytes depend only
/// on IEEE arithmetic.
pub fn synthesize(partials: &[(f64, f64)], detune: f64, frames: usize) -> Vec<i16> {
    let mut out = vec![0.0f64; frames];
    for &(freq, amp) in partials {
        let w = std::f64::consts::TAU * freq * (1.0 + detune) / f64::from(MOCK_SAMPLE_RATE);
        let (sw, cw) = sin_cos_small(w);
        let (mut s, mut c) = (0.0f64, 1.0f64);
        for (i, o) in out.iter_mut().enumerate() {
            *o += amp * s;
            let ns = s * cw + c * sw;
            let nc = c * cw - s * sw;
            s = ns;
            c = nc;
            if i % 1024 == 1023 {
                let r = (s * s + c * c).sqrt();
                s /= r;
                c /= r;
            }
        }
    }
    out.iter()
        .map(|x| (x * 32767.0).round().clamp(-32768.0, 32767.0) as i16)
        .collect()
}

/// Additive-sine text-to-music stand-in.
#[derive(Clone, Debug)]
pub struct MockMusic {
    seed: u64,
    conditioning: bool,
}

impl MockMusic {
    pub fn new(seed: u64) -> Self {
        Self { seed, conditioning: true }
    }

    /// A generator that cannot take audio conditioning.
    pub fn text_only(seed: u64) -> Self {
        Self { seed, conditioning: false }
    }

    pub fn fingerprint(&self, request: &MusicRequest) -> Result<Fingerprint> {
        match &request.condition_audio {
            None => {
                let toks = tokens(&request.prompt);
                if toks.is_empty() {
                    return Err(ProviderError::InvalidRequest("prompt has no words".into()));
                }
                let joined = toks.join(" ");
                Ok(Fingerprint {
                    prompt: request.prompt.clone(),
                    base_seed: hash64(&[b"base", &self.seed.to_le_bytes(), joined.as_bytes()]),
                    partials: partials_for(&toks),
                    tokens: toks,
                    detune: 0.0,
                    variation: request.variation,
                    conditioned: false,
                })
            }
            Some(parent) => {
                let parent = Fingerprint::read(parent).unwrap_or_else(|| {
                    let base = hash64(&[b"raw", parent]);
                    Fingerprint {
                        prompt: String::new(),
                        tokens: Vec::new(),
                        base_seed: base,
                        partials: partials_for(&[format!("{base:x}")]),
                        detune: 0.0,
                        variation: 0,
                        conditioned: false,
                    }
                });
                let h = hash64(&[
                    b"detune",
                    &self.seed.to_le_bytes(),
                    &parent.base_seed.to_le_bytes(),
                    &request.variation.to_le_bytes(),
                ]);
                // Never zero, so every child differs from its parent.
                let step = (h % 1000) as f64 + 1.0;
                let sign = if (h >> 32) & 1 == 1 { 1.0 } else { -1.0 };
                let prompt = if request.prompt.trim().is_empty() {
                    parent.prompt.clone()
                } else {
                    request.prompt.clone()
                };
                Ok(Fingerprint {
                    prompt,
                    tokens: parent.tokens,
                    base_seed: parent.base_seed,
                    partials: parent.partials,
                    detune: sign * MAX_DETUNE * step / 1000.0,
                    variation: request.variation,
                    conditioned: true,
                })
            }
        }
    }

    pub fn render(&self, request: &MusicRequest) -> Result<Vec<u8>> {
        request.validate()?;
        let fp = self.fingerprint(request)?;
        let frames = (request.duration_s * f64::from(MOCK_SAMPLE_RATE)).round() as usize;
        let samples = synthesize(&fp.partials, fp.detune, frames);
        let meta = serde_json::to_vec(&fp).map_err(|e| ProviderError::Decode(e.to_string()))?;
        Ok(Wav::from_samples(MOCK_SAMPLE_RATE, 1, samples)
            .with_chunk(FINGERPRINT_CHUNK, meta)
            .to_bytes())
    }
}

#[async_trait]
impl MusicProvider for MockMusic {
    fn capabilities(&self) -> ProviderCapabilities {
        ProviderCapabilities {
            text_to_music: true,
            audio_conditioned_music: self.conditioning,
            ..ProviderCapabilities::NONE
        }
    }

    async fn generate(&self, request: &MusicRequest) -> Result<Vec<u8>> {
        self.capabilities().require(request.required_capability())?;
        self.render(request)
    }
}
