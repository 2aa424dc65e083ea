//! Pipeline configuration: a JSON document whose fields can each be
//! overridden from the command line.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use urbanflow::flows::ClusterParams;
use urbanflow::linkage::FilterConfig;
use urbanflow::mapgen::MapConfig;
use urbanflow::providers::{ProviderConfig, ProviderKind};
use urbanflow::router::RouterConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub out: PathBuf,
    /// Abort ingestion on the first malformed row instead of skipping it.
    pub strict: bool,
    pub filter: FilterConfig,
    pub cluster: ClusterParams,
    /// Includes the transit fare.
    pub router: RouterConfig,
    pub provider: ProviderConfig,
    pub map: MapConfig,
    pub top_k: usize,
    pub jobs: usize,
    pub keep_going: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::from("observations.csv"),
            out: PathBuf::from("out"),
            strict: false,
            filter: FilterConfig::default(),
            cluster: ClusterParams::default(),
            router: RouterConfig::default(),
            provider: ProviderConfig::default(),
            map: MapConfig::default(),
            top_k: 7,
            jobs: 1,
            keep_going: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderArg {
    Offline,
    Http,
}

/// Flags shared by every pipeline stage.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON configuration file; flags take precedence over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Observation CSV (uid,lat,lon,timestamp_ms).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Directory receiving every stage artifact.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub strict: bool,
    #[arg(long, global = true)]
    pub min_distance_m: Option<f64>,
    #[arg(long, global = true)]
    pub min_duration_ms: Option<i64>,
    #[arg(long, global = true)]
    pub speed_min_kmh: Option<f64>,
    #[arg(long, global = true)]
    pub speed_max_kmh: Option<f64>,
    /// Offset from UTC, in minutes, used to decide calendar days.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub tz_offset_min: Option<i64>,
    #[arg(long, global = true)]
    pub eps_m: Option<f64>,
    #[arg(long, global = true)]
    pub min_pts: Option<usize>,
    /// Number of busiest flows to route.
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    #[arg(long, global = true)]
    pub congestion_ratio: Option<f64>,
    #[arg(long, global = true)]
    pub walk_max_m: Option<f64>,
    /// Transit fare per boarding, BRL.
    #[arg(long, global = true)]
    pub fare: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub provider: Option<ProviderArg>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Flows routed in parallel.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Record per-flow routing failures and continue with the other flows.
    #[arg(long, global = true)]
    pub keep_going: bool,
    /// Directory caching provider responses.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// HTTP requests per second.
    #[arg(long, global = true)]
    pub rate_limit: Option<f64>,
}

pub fn load_file(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
}

impl Overrides {
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_file(path)?,
            None => PipelineConfig::default(),
        };
        self.apply(&mut cfg);
        validate(&cfg)?;
        Ok(cfg)
    }

    pub fn apply(&self, cfg: &mut PipelineConfig) {
        fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
            if let Some(v) = value {
                *slot = v.clone();
            }
        }
        set(&mut cfg.input, &self.input);
        set(&mut cfg.out, &self.out);
        cfg.strict |= self.strict;
        set(&mut cfg.filter.min_distance_m, &self.min_distance_m);
        set(&mut cfg.filter.min_duration_ms, &self.min_duration_ms);
        set(&mut cfg.filter.min_speed_kmh, &self.speed_min_kmh);
        set(&mut cfg.filter.max_speed_kmh, &self.speed_max_kmh);
        set(&mut cfg.filter.day_timezone_offset_min, &self.tz_offset_min);
        set(&mut cfg.cluster.eps_m, &self.eps_m);
        set(&mut cfg.cluster.min_pts, &self.min_pts);
        set(&mut cfg.top_k, &self.top_k);
        set(&mut cfg.router.congestion_ratio, &self.congestion_ratio);
        set(&mut cfg.router.walk_max_m, &self.walk_max_m);
        set(&mut cfg.router.fare, &self.fare);
        if let Some(p) = self.provider {
            cfg.provider.kind = match p {
                ProviderArg::Offline => ProviderKind::Offline,
                ProviderArg::Http => ProviderKind::Http,
            };
        }
        set(&mut cfg.provider.seed, &self.seed);
        set(&mut cfg.jobs, &self.jobs);
        cfg.keep_going |= self.keep_going;
        if self.cache_dir.is_some() {
            cfg.provider.cache_dir = self.cache_dir.clone();
        }
        set(&mut cfg.provider.rate_limit, &self.rate_limit);
    }
}

pub fn validate(cfg: &PipelineConfig) -> Result<()> {
    cfg.filter.validate().context("invalid filter settings")?;
    cfg.cluster
        .validate()
        .context("invalid clustering settings")?;
    cfg.router.validate().context("invalid router settings")?;
    cfg.provider
        .validate()
        .context("invalid provider settings")?;
    cfg.map.validate().context("invalid map settings")?;
    if cfg.top_k == 0 {
        bail!("top_k must be at least 1");
    }
    if cfg.jobs == 0 {
        bail!("jobs must be at least 1");
    }
    Ok(())
}
