//! Command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use soundstage_core::model::{ProjectId, SceneId, TrackId};
use soundstage_providers::fixtures::{compare_goldens, write_goldens, GOLDEN_SEED};

use crate::app::{App, NewProject, VideoUpload};
use crate::config::Config;
use crate::error::{ErrorBody, ServiceError};
use crate::eval;
use crate::jobs::{Job, JobState};

#[derive(Debug, Parser)]
#[command(name = "soundstage", version, about = "Video soundtrack generation service and tools")]
pub struct Cli {
    /// Config file (default: ./soundstage.toml when present)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides storage.data_dir
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// Use the deterministic mock providers
    #[arg(long, global = true)]
    pub mock: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API
    Serve {
        #[arg(long)]
        bind: Option<std::net::SocketAddr>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Generate candidate tracks for one scene
    Generate {
        #[arg(long)]
        prompt: String,
        #[arg(long)]
        scene: SceneId,
        /// Existing project; a new one with a video of --video-duration seconds otherwise
        #[arg(long)]
        project: Option<String>,
        #[arg(long, default_value_t = 60.0)]
        video_duration: f64,
        #[arg(long, default_value = "Untitled")]
        title: String,
        #[arg(long, default_value = "vlog")]
        video_type: String,
        #[arg(long, default_value = "general")]
        audience: String,
        #[arg(long, default_value = "fitting background music")]
        goal: String,
    },
    /// Rewrite a track from a natural-language request
    Edit {
        #[arg(long)]
        track: String,
        #[arg(long)]
        request: String,
    },
    /// Audio-conditioned variations of a track
    Vary {
        #[arg(long)]
        track: String,
    },
    /// Combine traits of two or more tracks
    Blend {
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        tracks: Vec<String>,
    },
    /// Print a project's music map as JSON
    Map {
        #[arg(long)]
        project: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Diversity statistics per group of embedding sets
    EvalDiversity {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        groups: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print JSON instead of a table
        #[arg(long)]
        json: bool,
    },
    /// Regenerate (or check) the mock provider goldens
    Fixtures {
        #[arg(long, default_value = "fixtures/v1")]
        out: PathBuf,
        #[arg(long, default_value_t = GOLDEN_SEED)]
        seed: u64,
        /// Compare instead of writing; fails when any file differs
        #[arg(long)]
        check: bool,
    },
}

/// Failure of a command. Usage errors (anything the API answers with 400) exit 2, everything else 1.
#[derive(Debug)]
pub struct CliError {
    pub usage: bool,
    pub body: ErrorBody,
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        let usage = matches!(e, ServiceError::Config(_)) || e.status() == 400;
        Self { usage, body: e.body() }
    }
}

impl CliError {
    fn engine(code: &str, message: impl Into<String>) -> Self {
        Self {
            usage: false,
            body: ErrorBody { code: code.into(), message: message.into(), details: serde_json::Value::Null },
        }
    }
}

/// Parses `argv` and runs it. Returns the process exit code.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let runtime = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(1);
        }
    };
    match runtime.block_on(execute(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.body.code, e.body.message);
            if !e.body.details.is_null() {
                eprintln!("details: {}", e.body.details);
            }
            ExitCode::from(if e.usage { 2 } else { 1 })
        }
    }
}

fn config(cli: &Cli) -> Result<Config, CliError> {
    let mut c = Config::discover(cli.config.as_deref())?;
    if let Some(d) = &cli.data_dir {
        c.storage.data_dir = d.clone();
    }
    if cli.mock {
        c.providers.mock = true;
    }
    Ok(c)
}

async fn finished(app: &App, job: Job) -> Result<Job, CliError> {
    let job = app.jobs.wait(&job.id).await?;
    for w in &job.warnings {
        eprintln!("warning: {w}");
    }
    match job.state {
        JobState::Failed => Err(CliError {
            usage: false,
            body: job.error.unwrap_or_else(|| ErrorBody {
                code: "job_failed".into(),
                message: "job failed".into(),
                details: serde_json::Value::Null,
            }),
        }),
        JobState::Partial => {
            eprintln!("warning: partial result ({} tracks)", job.result_ids.len());
            Ok(job)
        }
        _ => Ok(job),
    }
}

fn print_tracks(app: &App, project: &ProjectId, ids: &[String]) -> Result<(), CliError> {
    let p = app.project(project)?;
    let assets = app.storage.assets();
    for id in ids {
        let t = p.track(&TrackId::new(id.as_str())).map_err(ServiceError::from)?;
        let thumb = t
            .static_thumbnail
            .as_ref()
            .map(|r| assets.path(r).display().to_string())
            .unwrap_or_else(|| "-".into());
        println!(
            "{}\t{:.4}\t{}\t{}\t{}\t{}",
            t.id,
            t.score.total,
            t.title,
            t.full_prompt,
            assets.path(&t.audio.path).display(),
            thumb
        );
    }
    Ok(())
}

async fn execute(cli: Cli) -> Result<(), CliError> {
    let mut cfg = config(&cli)?;
    match cli.command {
        Command::Serve { bind, workers } => {
            if let Some(b) = bind {
                cfg.server.bind = b;
            }
            if let Some(w) = workers {
                cfg.server.workers = w;
            }
            cfg.validate()?;
            let app = App::new(cfg)?;
            crate::api::serve(app).await.map_err(|e| CliError::engine("io_error", e.to_string()))
        }
        Command::Generate { prompt, scene, project, video_duration, title, video_type, audience, goal } => {
            let app = App::new(cfg)?;
            let pid = match project {
                Some(id) => ProjectId::new(id),
                None => {
                    let p = app
                        .create_project(NewProject { title, video_type, audience, soundtrack_goal: goal })
                        .await?;
                    let upload = VideoUpload { duration_s: video_duration, frame_rate: 30.0, data_b64: None, mime: None };
                    let job = app.set_video(&p.id, upload).await?;
                    finished(&app, job).await?;
                    p.id
                }
            };
            println!("project\t{pid}");
            let job = app.generate(&pid, scene, &prompt, None).await?;
            let job = finished(&app, job).await?;
            print_tracks(&app, &pid, &job.result_ids)
        }
        Command::Edit { track, request } => {
            let app = App::new(cfg)?;
            let job = app.edit(&TrackId::new(track.as_str()), &request)?;
            refine_output(&app, job).await
        }
        Command::Vary { track } => {
            let app = App::new(cfg)?;
            let job = app.vary(&TrackId::new(track.as_str()))?;
            refine_output(&app, job).await
        }
        Command::Blend { tracks } => {
            let app = App::new(cfg)?;
            let ids: Vec<TrackId> = tracks.iter().map(|t| TrackId::new(t.as_str())).collect();
            let pid = app.storage.find_track(&ids[0])?;
            let job = app.blend(&pid, &ids)?;
            refine_output(&app, job).await
        }
        Command::Map { project, out } => {
            let app = App::new(cfg)?;
            let export = app.map(&ProjectId::new(project)).await?;
            let text = serde_json::to_string_pretty(&export).expect("layout serializes");
            match out {
                Some(path) => std::fs::write(&path, text + "\n")
                    .map_err(|e| CliError::engine("io_error", format!("{}: {e}", path.display()))),
                None => {
                    println!("{text}");
                    Ok(())
                }
            }
        }
        Command::EvalDiversity { embeddings, groups, seed, json } => {
            let providers = cfg.build_providers()?;
            let stats = eval::evaluate(&embeddings, &groups, seed, &providers).await?;
            if json {
                println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
            } else {
                print!("{}", eval::table(&stats));
            }
            Ok(())
        }
        Command::Fixtures { out, seed, check } => {
            if check {
                let stale = compare_goldens(&out, seed).map_err(|e| CliError::engine(e.code(), e.to_string()))?;
                if stale.is_empty() {
                    println!("goldens in {} are current", out.display());
                    Ok(())
                } else {
                    Err(CliError::engine("stale_fixtures", format!("out of date: {}", stale.join(", "))))
                }
            } else {
                let written = write_goldens(&out, seed).map_err(|e| CliError::engine("io_error", e.to_string()))?;
                for name in written {
                    println!("{}", out.join(name).display());
                }
                Ok(())
            }
        }
    }
}

async fn refine_output(app: &App, job: Job) -> Result<(), CliError> {
    let pid = ProjectId::new(job.project_id.clone().unwrap_or_default());
    let job = finished(app, job).await?;
    print_tracks(app, &pid, &job.result_ids)
}
