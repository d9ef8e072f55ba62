//! Benchmark runs, metric files, plots and the environment server.

pub mod metrics;
pub mod plot;
pub mod wire;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::info;
use serde::Deserialize;

use crate::agent::{train, AgentConfig, Checkpoint, Trainer};
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use metrics::{aggregate, format_aggregate, read_metrics, write_metrics, MetricsRow};

pub const CONFIG_HEADER: &str = "# multigoal-config v1";

/// A benchmark run: environment, agent, seeds, length and output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub agent: AgentConfig,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub out_dir: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    env: serde_json::Value,
    #[serde(default)]
    agent: AgentConfig,
    #[serde(default = "default_seeds")]
    seeds: Vec<u64>,
    #[serde(default = "default_epochs")]
    epochs: usize,
    #[serde(default = "default_out")]
    out_dir: PathBuf,
}

fn default_seeds() -> Vec<u64> {
    (0..4).collect()
}

fn default_epochs() -> usize {
    50
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

impl RunConfig {
    pub fn new(
        env: EnvConfig,
        agent: AgentConfig,
        epochs: usize,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        RunConfig {
            env,
            agent,
            seeds: default_seeds(),
            epochs,
            out_dir: out_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        self.env.validate()?;
        self.agent.validate()
    }
}

/// Parses the text of a run configuration: the `# multigoal-config v1` line
/// followed by a JSON object with keys `env` (environment arguments under
/// their documented names), `agent`, `seeds`, `epochs` and `out_dir`.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let (header, body) = text.split_once('\n').unwrap_or((text, ""));
    if header.trim_end() != CONFIG_HEADER {
        return Err(Error::Format(format!(
            "expected header '{CONFIG_HEADER}', found '{}'",
            header.trim_end()
        )));
    }
    let raw: RawRun =
        serde_json::from_str(body).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let cfg = RunConfig {
        env: EnvConfig::from_json(&raw.env)?,
        agent: raw.agent,
        seeds: raw.seeds,
        epochs: raw.epochs,
        out_dir: raw.out_dir,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    parse_config_str(&std::fs::read_to_string(path)?)
}

pub fn seed_csv_name(task: &str, seed: u64) -> String {
    format!("{task}_seed{seed}.csv")
}

pub fn checkpoint_name(task: &str, seed: u64) -> String {
    format!("{task}_seed{seed}.ckpt")
}

/// Files written by [`run_benchmark`] and [`plot_dir`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub seed_csvs: Vec<PathBuf>,
    pub checkpoints: Vec<PathBuf>,
    pub aggregates: Vec<PathBuf>,
    pub plots: Vec<PathBuf>,
}

/// Trains every seed on its own thread, then writes one metrics CSV and one
/// checkpoint per seed, the aggregate CSV and the success-rate SVG.
pub fn run_benchmark(cfg: &RunConfig) -> Result<Artifacts> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let task = cfg.env.task.name();
    let results: Vec<Result<(Trainer, Vec<MetricsRow>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&seed| {
                s.spawn(move || {
                    let (t, stats) = train(&cfg.env, &cfg.agent, seed, cfg.epochs, |st| {
                        info!(
                            "{task} seed {seed} epoch {} episodes {} success {:.3} return {:.2}",
                            st.epoch, st.episodes_seen, st.test_success_rate, st.mean_test_return
                        );
                    })?;
                    let rows = stats
                        .iter()
                        .map(|st| MetricsRow::from_stats(seed, st))
                        .collect();
                    Ok((t, rows))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });
    let mut out = Artifacts::default();
    for (seed, r) in cfg.seeds.iter().zip(results) {
        let (t, rows) = r?;
        let csv = cfg.out_dir.join(seed_csv_name(task, *seed));
        write_metrics(&csv, &rows)?;
        let ckpt = cfg.out_dir.join(checkpoint_name(task, *seed));
        Checkpoint::from_trainer(&t).save(&ckpt)?;
        out.seed_csvs.push(csv);
        out.checkpoints.push(ckpt);
    }
    let plotted = plot_dir(&cfg.out_dir)?;
    out.aggregates = plotted.aggregates;
    out.plots = plotted.plots;
    Ok(out)
}

/// Rebuilds `<task>_aggregate.csv` and `<task>_success.svg` from the
/// `<task>_seed<N>.csv` files in `dir`.
pub fn plot_dir(dir: &Path) -> Result<Artifacts> {
    let mut groups: BTreeMap<String, Vec<(u64, PathBuf)>> = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name.strip_suffix(".csv") else {
            continue;
        };
        if let Some((task, seed)) = stem.rsplit_once("_seed") {
            if let Ok(seed) = seed.parse::<u64>() {
                groups
                    .entry(task.to_string())
                    .or_default()
                    .push((seed, path.clone()));
            }
        }
    }
    if groups.is_empty() {
        return Err(Error::Format(format!(
            "no <task>_seed<N>.csv files in {}",
            dir.display()
        )));
    }
    let mut out = Artifacts::default();
    for (task, mut files) in groups {
        files.sort();
        let runs = files
            .iter()
            .map(|(_, p)| read_metrics(p))
            .collect::<Result<Vec<_>>>()?;
        let agg = aggregate(&runs);
        let agg_path = dir.join(format!("{task}_aggregate.csv"));
        std::fs::write(&agg_path, format_aggregate(&agg))?;
        let svg_path = dir.join(format!("{task}_success.svg"));
        std::fs::write(&svg_path, plot::success_svg(&task, &runs, &agg))?;
        out.seed_csvs.extend(files.into_iter().map(|(_, p)| p));
        out.aggregates.push(agg_path);
        out.plots.push(svg_path);
    }
    Ok(out)
}

/// Greedy success rate and mean return of a saved agent over `episodes`
/// fresh episodes.
pub fn eval_checkpoint(path: &Path, episodes: usize) -> Result<(f64, f64)> {
    Checkpoint::load(path)?.into_trainer()?.evaluate(episodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Task;

    #[test]
    fn config_defaults_and_header() {
        let c =
            parse_config_str("# multigoal-config v1\n{\"env\": {\"task\": \"reach\"}}").unwrap();
        assert_eq!(c.env, EnvConfig::new(Task::Reach));
        assert_eq!(c.seeds, vec![0, 1, 2, 3]);
        assert_eq!(c.agent, AgentConfig::default());
        assert!(matches!(
            parse_config_str("{\"env\": {\"task\": \"reach\"}}"),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn config_rejections() {
        let p = |body: &str| parse_config_str(&format!("{CONFIG_HEADER}\n{body}"));
        assert!(matches!(
            p(r#"{"env": {"task": "fly"}}"#),
            Err(Error::UnknownTask(_))
        ));
        assert!(matches!(
            p(r#"{"env": {"task": "push", "num_block": "two"}}"#),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            p(r#"{"env": {"task": "push"}, "colour": 1}"#),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            p(r#"{"env": {"task": "push"}, "agent": {"gama": 0.9}}"#),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            p(r#"{"env": {"task": "push"}, "seeds": []}"#),
            Err(Error::InvalidConfig(_))
        ));
    }
}
