//! Run configuration: flags, then `SYNSS_*` variables, then the config file,
//! then built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

#[derive(Args, Debug, Clone, Default)]
pub struct Flags {
    /// TOML file with any of the settings below (flags and env win over it).
    #[arg(long, global = true, env = "SYNSS_CONFIG")]
    pub config: Option<PathBuf>,
    /// Largest Adams filtration to resolve.
    #[arg(long, global = true, env = "SYNSS_S_MAX")]
    pub s_max: Option<u32>,
    /// Largest internal degree to resolve.
    #[arg(long, global = true, env = "SYNSS_T_MAX")]
    pub t_max: Option<u32>,
    /// Resolution checkpoint (default: <out>/resolution.json).
    #[arg(long, global = true, env = "SYNSS_CHECKPOINT")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, global = true, env = "SYNSS_SEEDS")]
    pub seeds: Option<PathBuf>,
    #[arg(long, global = true, env = "SYNSS_CLAIMS")]
    pub claims: Option<PathBuf>,
    #[arg(long, global = true, env = "SYNSS_NAMING")]
    pub naming: Option<PathBuf>,
    #[arg(long, global = true, env = "SYNSS_RELATIONS")]
    pub relations: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "SYNSS_OUT")]
    pub out: Option<PathBuf>,
    /// Stems per chart window.
    #[arg(long, global = true, env = "SYNSS_WINDOW")]
    pub window: Option<i64>,
    /// Worker threads for the resolution (default: all cores).
    #[arg(long, global = true, env = "SYNSS_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    s_max: Option<u32>,
    t_max: Option<u32>,
    checkpoint: Option<PathBuf>,
    seeds: Option<PathBuf>,
    claims: Option<PathBuf>,
    naming: Option<PathBuf>,
    relations: Option<PathBuf>,
    out: Option<PathBuf>,
    window: Option<i64>,
    threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub s_max: u32,
    pub t_max: u32,
    pub checkpoint: PathBuf,
    pub seeds: PathBuf,
    pub claims: PathBuf,
    pub naming: PathBuf,
    pub relations: PathBuf,
    pub out: PathBuf,
    pub window: i64,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn resolve(flags: &Flags) -> Result<RunConfig> {
        let file = match &flags.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        // Relative paths in a config file are taken from the file's directory.
        let base = flags.config.as_deref().and_then(Path::parent).unwrap_or(Path::new(""));
        let pick = |flag: &Option<PathBuf>, file: Option<PathBuf>, default: &str| -> PathBuf {
            flag.clone()
                .or_else(|| file.map(|p| base.join(p)))
                .unwrap_or_else(|| PathBuf::from(default))
        };
        let out = pick(&flags.out, file.out, "out");
        let checkpoint = flags
            .checkpoint
            .clone()
            .or_else(|| file.checkpoint.map(|p| base.join(p)))
            .unwrap_or_else(|| out.join("resolution.json"));
        let cfg = RunConfig {
            s_max: flags.s_max.or(file.s_max).unwrap_or(30),
            t_max: flags.t_max.or(file.t_max).unwrap_or(120),
            checkpoint,
            seeds: pick(&flags.seeds, file.seeds, "fixtures/seeds.txt"),
            claims: pick(&flags.claims, file.claims, "fixtures/claims.txt"),
            naming: pick(&flags.naming, file.naming, "fixtures/naming.txt"),
            relations: pick(&flags.relations, file.relations, "fixtures/relations.txt"),
            out,
            window: flags.window.or(file.window).unwrap_or(32),
            threads: flags.threads.or(file.threads),
        };
        if cfg.t_max < cfg.s_max {
            bail!("t-max ({}) must be at least s-max ({})", cfg.t_max, cfg.s_max);
        }
        if cfg.window < 1 {
            bail!("window must be positive");
        }
        if cfg.threads == Some(0) {
            bail!("threads must be positive");
        }
        Ok(cfg)
    }
}
