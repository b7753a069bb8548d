//! `soundstage.toml` loading and provider construction.
//!
//! API keys are never read from the file. Each hosted provider takes its key
//! from `SOUNDSTAGE_<PROVIDER>_API_KEY` at call time.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use soundstage_engine::thumbnailer::DEFAULT_STYLE_SUFFIX;
use soundstage_engine::{ExpansionConfig, RefineConfig};
use soundstage_providers::http::{HttpConfig, HttpEmbedder, HttpImages, HttpLlm, HttpMusic, HttpTransport};
use soundstage_providers::{Capability, ProviderCapabilities, Providers};

use crate::error::ServiceError;

pub const CONFIG_FILE: &str = "soundstage.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub server: ServerConfig,
    pub storage: StorageConfig,
    pub providers: ProvidersConfig,
    pub expansion: ExpansionConfig,
    pub refine: RefineConfig,
    pub thumbnails: ThumbnailConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            server: ServerConfig::default(),
            storage: StorageConfig::default(),
            providers: ProvidersConfig::default(),
            expansion: ExpansionConfig::default(),
            refine: RefineConfig::default(),
            thumbnails: ThumbnailConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    pub workers: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self { bind: ([127, 0, 0, 1], 8080).into(), workers: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StorageConfig {
    pub data_dir: PathBuf,
}

impl Default for StorageConfig {
    fn default() -> Self {
        Self { data_dir: PathBuf::from("soundstage-data") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThumbnailConfig {
    pub style_suffix: String,
}

impl Default for ThumbnailConfig {
    fn default() -> Self {
        Self { style_suffix: DEFAULT_STYLE_SUFFIX.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProvidersConfig {
    pub mock: bool,
    pub seed: u64,
    pub llm: Option<EndpointConfig>,
    pub music: Option<EndpointConfig>,
    pub embedding: Option<EndpointConfig>,
    pub images: Option<EndpointConfig>,
}

impl Default for ProvidersConfig {
    fn default() -> Self {
        Self { mock: true, seed: 7, llm: None, music: None, embedding: None, images: None }
    }
}

/// One hosted provider. `name` picks the key variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub name: String,
    pub endpoint: String,
    #[serde(default)]
    pub capabilities: Vec<Capability>,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
}

fn default_timeout_s() -> f64 {
    120.0
}

fn default_parallelism() -> usize {
    6
}

fn default_max_retries() -> u32 {
    3
}

const SECRET_KEYS: [&str; 4] = ["api_key", "apikey", "token", "secret"];

fn find_secret(value: &toml::Value, path: &str) -> Option<String> {
    match value {
        toml::Value::Table(t) => t.iter().find_map(|(k, v)| {
            let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            if SECRET_KEYS.iter().any(|s| k.to_ascii_lowercase().contains(s)) {
                Some(here)
            } else {
                find_secret(v, &here)
            }
        }),
        _ => None,
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ServiceError> {
        let raw: toml::Value = toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))?;
        if let Some(key) = find_secret(&raw, "") {
            return Err(ServiceError::Config(format!(
                "`{key}` looks like a secret; API keys are read from SOUNDSTAGE_<PROVIDER>_API_KEY only"
            )));
        }
        let config: Config = raw.try_into().map_err(|e: toml::de::Error| ServiceError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The file at `path` if given, else `./soundstage.toml` when present, else defaults.
    pub fn discover(path: Option<&Path>) -> Result<Self, ServiceError> {
        match path {
            Some(p) => Self::load(p),
            None if Path::new(CONFIG_FILE).exists() => Self::load(Path::new(CONFIG_FILE)),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.server.workers == 0 {
            return Err(ServiceError::Config("server.workers must be at least 1".into()));
        }
        self.expansion.validate().map_err(|e| ServiceError::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.refine.alpha) {
            return Err(ServiceError::Config("refine.alpha outside [0, 1]".into()));
        }
        if !self.providers.mock {
            for (role, ep) in self.providers.endpoints() {
                if ep.is_none() {
                    return Err(ServiceError::Config(format!(
                        "providers.{role} is required when providers.mock = false"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn build_providers(&self) -> Result<Providers, ServiceError> {
        let p = &self.providers;
        if p.mock {
            return Ok(Providers::mock(p.seed));
        }
        let transport = |ep: &Option<EndpointConfig>| -> Result<Arc<HttpTransport>, ServiceError> {
            let ep = ep.as_ref().expect("checked by validate");
            let mut http = HttpConfig::new(&ep.name, &ep.endpoint);
            http.capabilities = ProviderCapabilities::only(&ep.capabilities);
            http.timeout = Duration::try_from_secs_f64(ep.timeout_s)
                .map_err(|e| ServiceError::Config(format!("{}: timeout_s: {e}", ep.name)))?;
            http.parallelism = ep.parallelism;
            http.max_retries = ep.max_retries;
            Ok(Arc::new(HttpTransport::new(http).map_err(|e| ServiceError::Config(e.to_string()))?))
        };
        Ok(Providers::mock(p.seed)
            .with_llm(Arc::new(HttpLlm(transport(&p.llm)?)))
            .with_music(Arc::new(HttpMusic(transport(&p.music)?)))
            .with_embedder(Arc::new(HttpEmbedder(transport(&p.embedding)?)))
            .with_images(Arc::new(HttpImages(transport(&p.images)?))))
    }
}

impl ProvidersConfig {
    fn endpoints(&self) -> [(&'static str, &Option<EndpointConfig>); 4] {
        [("llm", &self.llm), ("music", &self.music), ("embedding", &self.embedding), ("images", &self.images)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = Config::parse("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.server.workers, 4);
        assert!(c.providers.mock);
    }

    #[test]
    fn sections_override_defaults() {
        let c = Config::parse(
            r#"
            [server]
            bind = "0.0.0.0:9000"
            workers = 2

            [storage]
            data_dir = "/tmp/ss"

            [expansion]
            n_expansions = 8
            top_k = 3
            alpha = 0.25
            "#,
        )
        .unwrap();
        assert_eq!(c.server.workers, 2);
        assert_eq!(c.storage.data_dir, PathBuf::from("/tmp/ss"));
        assert_eq!(c.expansion.n_expansions, 8);
        assert_eq!(c.expansion.alpha, 0.25);
        assert_eq!(c.expansion.parallelism, 6);
    }

    #[test]
    fn secrets_in_file_are_refused() {
        let err = Config::parse(
            r#"
            [providers.llm]
            name = "acme"
            endpoint = "https://llm.example"
            api_key = "sk-123"
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("providers.llm.api_key"), "{err}");
    }

    #[test]
    fn hosted_mode_needs_every_role() {
        let err = Config::parse("[providers]\nmock = false\n").unwrap_err();
        assert!(err.to_string().contains("providers.llm"));
    }

    #[test]
    fn hosted_providers_build() {
        let ep = |name: &str, caps: &str| {
            format!("[providers.{name}]\nname = \"{name}\"\nendpoint = \"http://127.0.0.1:9\"\ncapabilities = [{caps}]\n")
        };
        let text = format!(
            "[providers]\nmock = false\n{}{}{}{}",
            ep("llm", "\"llm_with_audio\""),
            ep("music", "\"text_to_music\""),
            ep("embedding", "\"audio_embedding\", \"text_embedding\""),
            ep("images", "\"text_to_image\""),
        );
        let providers = Config::parse(&text).unwrap().build_providers().unwrap();
        let caps = providers.capabilities();
        assert!(caps.text_to_music && caps.audio_embedding && caps.llm_with_audio);
        assert!(!caps.audio_conditioned_music && !caps.image_to_video);
    }

    #[test]
    fn bad_values_are_config_errors() {
        assert!(Config::parse("[server]\nworkers = 0\n").is_err());
        assert!(Config::parse("[expansion]\ntop_k = 9\n").is_err());
        assert!(Config::parse("[nonsense]\nx = 1\n").is_err());
    }
}
