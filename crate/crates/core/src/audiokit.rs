//! 16-bit PCM WAV probing, trimming and fade envelopes.
//!
//! Only `fmt ` and `data` chunks are interpreted. Other chunks are kept in
//! place when trimming and dropped when fades rewrite the file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets::{AssetError, AssetRef, AssetStore};

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("fades of {fade_in_ms} ms + {fade_out_ms} ms exceed the {duration_ms:.1} ms clip")]
    FadeTooLong {
        fade_in_ms: u32,
        fade_out_ms: u32,
        duration_ms: f64,
    },
    #[error("cannot trim {available:.3} s of audio to {requested:.3} s")]
    InsufficientAudio { requested: f64, available: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Asset(#[from] AssetError),
}

pub const PCM_S16LE: &str = "pcm_s16le";

/// A PCM WAV file held in the asset store.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AudioAsset {
    pub path: AssetRef,
    pub sample_rate: u32,
    pub channels: u16,
    pub duration: f64,
    pub format: String,
}

impl AudioAsset {
    pub fn frames(&self) -> u64 {
        (self.duration * f64::from(self.sample_rate)).round() as u64
    }
}

/// Header facts about a WAV file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AudioInfo {
    pub sample_rate: u32,
    pub channels: u16,
    pub frames: u64,
    pub duration: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadeShape {
    #[default]
    Linear,
    EqualPower,
}

#[derive(Clone, Debug, PartialEq)]
enum Chunk {
    Fmt,
    Data,
    Other { id: [u8; 4], payload: Vec<u8> },
}

/// Decoded 16-bit PCM WAV with interleaved samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Wav {
    pub sample_rate: u32,
    pub channels: u16,
    pub samples: Vec<i16>,
    fmt_payload: Vec<u8>,
    layout: Vec<Chunk>,
}

impl Wav {
    pub fn from_samples(sample_rate: u32, channels: u16, samples: Vec<i16>) -> Self {
        assert!(channels == 1 || channels == 2, "channels must be 1 or 2");
        assert_eq!(samples.len() % usize::from(channels), 0, "partial frame");
        Self {
            sample_rate,
            channels,
            samples,
            fmt_payload: fmt_payload(sample_rate, channels),
            layout: vec![Chunk::Fmt, Chunk::Data],
        }
    }

    /// Adds an extra chunk after the data chunk.
    pub fn with_chunk(mut self, id: [u8; 4], payload: Vec<u8>) -> Self {
        self.layout.push(Chunk::Other { id, payload });
        self
    }

    pub fn chunk(&self, id: &[u8; 4]) -> Option<&[u8]> {
        self.layout.iter().find_map(|c| match c {
            Chunk::Other { id: cid, payload } if cid == id => Some(payload.as_slice()),
            _ => None,
        })
    }

    pub fn frames(&self) -> u64 {
        (self.samples.len() / usize::from(self.channels)) as u64
    }

    pub fn duration(&self) -> f64 {
        self.frames() as f64 / f64::from(self.sample_rate)
    }

    pub fn info(&self) -> AudioInfo {
        AudioInfo {
            sample_rate: self.sample_rate,
            channels: self.channels,
            frames: self.frames(),
            duration: self.duration(),
        }
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, AudioError> {
        let header = parse_header(bytes)?;
        let mut samples = Vec::new();
        let mut layout = Vec::new();
        let mut fmt = None;
        for (id, payload) in header.chunks {
            match &id {
                b"fmt " => {
                    fmt = Some(payload.to_vec());
                    layout.push(Chunk::Fmt);
                }
                b"data" => {
                    samples = payload
                        .chunks_exact(2)
                        .map(|c| i16::from_le_bytes([c[0], c[1]]))
                        .collect();
                    layout.push(Chunk::Data);
                }
                _ => layout.push(Chunk::Other {
                    id,
                    payload: payload.to_vec(),
                }),
            }
        }
        Ok(Self {
            sample_rate: header.info.sample_rate,
            channels: header.info.channels,
            samples,
            fmt_payload: fmt.expect("validated by parse_header"),
            layout,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut body = Vec::new();
        body.extend_from_slice(b"WAVE");
        for chunk in &self.layout {
            let (id, payload): (&[u8; 4], std::borrow::Cow<'_, [u8]>) = match chunk {
                Chunk::Fmt => (b"fmt ", self.fmt_payload.as_slice().into()),
                Chunk::Data => (
                    b"data",
                    self.samples
                        .iter()
                        .flat_map(|s| s.to_le_bytes())
                        .collect::<Vec<u8>>()
                        .into(),
                ),
                Chunk::Other { id, payload } => (id, payload.as_slice().into()),
            };
            body.extend_from_slice(id);
            body.extend_from_slice(&(payload.len() as u32).to_le_bytes());
            body.extend_from_slice(&payload);
            if payload.len() % 2 == 1 {
                body.push(0);
            }
        }
        let mut out = Vec::with_capacity(body.len() + 8);
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(body.len() as u32).to_le_bytes());
        out.extend_from_slice(&body);
        out
    }
}

fn fmt_payload(sample_rate: u32, channels: u16) -> Vec<u8> {
    let block_align = channels * 2;
    let mut p = Vec::with_capacity(16);
    p.extend_from_slice(&1u16.to_le_bytes());
    p.extend_from_slice(&channels.to_le_bytes());
    p.extend_from_slice(&sample_rate.to_le_bytes());
    p.extend_from_slice(&(sample_rate * u32::from(block_align)).to_le_bytes());
    p.extend_from_slice(&block_align.to_le_bytes());
    p.extend_from_slice(&16u16.to_le_bytes());
    p
}

struct Header<'a> {
    info: AudioInfo,
    chunks: Vec<([u8; 4], &'a [u8])>,
}

fn parse_header(bytes: &[u8]) -> Result<Header<'_>, AudioError> {
    let bad = |m: &str| AudioError::UnsupportedFormat(m.to_string());
    if bytes.len() < 12 || &bytes[..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(bad("not a RIFF/WAVE file"));
    }
    let mut chunks = Vec::new();
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id: [u8; 4] = bytes[pos..pos + 4].try_into().unwrap();
        let len = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let start = pos + 8;
        let end = start
            .checked_add(len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| {
                AudioError::UnsupportedFormat(format!(
                    "truncated {} chunk: declares {len} bytes, {} available",
                    String::from_utf8_lossy(&id),
                    bytes.len() - start
                ))
            })?;
        chunks.push((id, &bytes[start..end]));
        pos = end + (len % 2);
    }
    if pos < bytes.len() {
        return Err(bad("trailing bytes after last chunk"));
    }
    let fmt = chunks
        .iter()
        .find(|(id, _)| id == b"fmt ")
        .map(|(_, p)| *p)
        .ok_or_else(|| bad("missing fmt chunk"))?;
    let data = chunks
        .iter()
        .find(|(id, _)| id == b"data")
        .map(|(_, p)| *p)
        .ok_or_else(|| bad("missing data chunk"))?;
    if fmt.len() < 16 {
        return Err(bad("short fmt chunk"));
    }
    let u16_at = |i: usize| u16::from_le_bytes([fmt[i], fmt[i + 1]]);
    let (tag, channels, bits) = (u16_at(0), u16_at(2), u16_at(14));
    let sample_rate = u32::from_le_bytes(fmt[4..8].try_into().unwrap());
    if tag != 1 {
        return Err(AudioError::UnsupportedFormat(format!("format tag {tag} is not PCM")));
    }
    if bits != 16 {
        return Err(AudioError::UnsupportedFormat(format!("{bits}-bit samples")));
    }
    if !(channels == 1 || channels == 2) || sample_rate == 0 {
        return Err(AudioError::UnsupportedFormat(format!(
            "{channels} channels at {sample_rate} Hz"
        )));
    }
    let block = usize::from(channels) * 2;
    if data.len() % block != 0 {
        return Err(bad("data chunk ends mid-frame"));
    }
    let frames = (data.len() / block) as u64;
    Ok(Header {
        info: AudioInfo {
            sample_rate,
            channels,
            frames,
            duration: frames as f64 / f64::from(sample_rate),
        },
        chunks,
    })
}

pub fn probe_bytes(bytes: &[u8]) -> Result<AudioInfo, AudioError> {
    Ok(parse_header(bytes)?.info)
}

pub fn probe(path: impl AsRef<Path>) -> Result<AudioInfo, AudioError> {
    probe_bytes(&std::fs::read(path)?)
}

fn ms_to_frames(ms: u32, sample_rate: u32) -> u64 {
    (f64::from(ms) * f64::from(sample_rate) / 1000.0).round() as u64
}

/// Gain of frame `i` in a rising ramp of `len` frames: 0 at the first frame,
/// 1 at the last.
fn ramp(i: u64, len: u64, shape: FadeShape) -> f64 {
    let t = if len <= 1 { 0.0 } else { i as f64 / (len - 1) as f64 };
    match shape {
        FadeShape::Linear => t,
        FadeShape::EqualPower => (t * std::f64::consts::FRAC_PI_2).sin(),
    }
}

/// Per-frame gain for the given fade windows.
pub fn fade_envelope(frames: u64, fade_in: u64, fade_out: u64, shape: FadeShape) -> Vec<f64> {
    (0..frames)
        .map(|f| {
            let mut g = 1.0;
            if f < fade_in {
                g *= ramp(f, fade_in, shape);
            }
            if f + fade_out >= frames {
                let j = f + fade_out - frames;
                g *= ramp(fade_out - 1 - j, fade_out, shape);
            }
            g
        })
        .collect()
}

pub fn apply_fades(
    wav: &Wav,
    fade_in_ms: u32,
    fade_out_ms: u32,
    shape: FadeShape,
) -> Result<Wav, AudioError> {
    let frames = wav.frames();
    let duration_ms = wav.duration() * 1000.0;
    let fin = ms_to_frames(fade_in_ms, wav.sample_rate);
    let fout = ms_to_frames(fade_out_ms, wav.sample_rate);
    if f64::from(fade_in_ms) + f64::from(fade_out_ms) > duration_ms + 1e-9 || fin + fout > frames {
        return Err(AudioError::FadeTooLong {
            fade_in_ms,
            fade_out_ms,
            duration_ms,
        });
    }
    if fin == 0 && fout == 0 {
        return Ok(wav.clone());
    }
    let envelope = fade_envelope(frames, fin, fout, shape);
    let ch = usize::from(wav.channels);
    let samples = wav
        .samples
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let g = envelope[i / ch];
            if g == 1.0 {
                s
            } else {
                (f64::from(s) * g).round().clamp(-32768.0, 32767.0) as i16
            }
        })
        .collect();
    Ok(Wav::from_samples(wav.sample_rate, wav.channels, samples))
}

pub fn trim(wav: &Wav, target_seconds: f64) -> Result<Wav, AudioError> {
    let available = wav.duration();
    let half_frame = 0.5 / f64::from(wav.sample_rate);
    if !(target_seconds >= 0.0) || target_seconds > available + half_frame {
        return Err(AudioError::InsufficientAudio {
            requested: target_seconds,
            available,
        });
    }
    let frames = ((target_seconds * f64::from(wav.sample_rate)).round() as u64).min(wav.frames());
    let mut out = wav.clone();
    out.samples.truncate(frames as usize * usize::from(wav.channels));
    Ok(out)
}

impl AudioAsset {
    pub fn from_store(store: &AssetStore, path: AssetRef) -> Result<Self, AudioError> {
        let info = probe_bytes(&store.get(&path)?)?;
        Ok(Self::from_info(path, info))
    }

    pub fn from_info(path: AssetRef, info: AudioInfo) -> Self {
        Self {
            path,
            sample_rate: info.sample_rate,
            channels: info.channels,
            duration: info.duration,
            format: PCM_S16LE.to_string(),
        }
    }

    pub fn store_wav(store: &AssetStore, wav: &Wav) -> Result<Self, AudioError> {
        let path = store.put(&wav.to_bytes(), "wav")?;
        Ok(Self::from_info(path, wav.info()))
    }

    pub fn load(&self, store: &AssetStore) -> Result<Wav, AudioError> {
        Wav::parse(&store.get(&self.path)?)
    }
}

pub fn fade_asset(
    store: &AssetStore,
    audio: &AudioAsset,
    fade_in_ms: u32,
    fade_out_ms: u32,
    shape: FadeShape,
) -> Result<AudioAsset, AudioError> {
    let wav = apply_fades(&audio.load(store)?, fade_in_ms, fade_out_ms, shape)?;
    AudioAsset::store_wav(store, &wav)
}

pub fn trim_asset(
    store: &AssetStore,
    audio: &AudioAsset,
    target_seconds: f64,
) -> Result<AudioAsset, AudioError> {
    let wav = trim(&audio.load(store)?, target_seconds)?;
    AudioAsset::store_wav(store, &wav)
}
