//! The TOML experiment file.
//!
//! ```toml
//! registry = "registry.csv"
//! cohorts = "cohorts.csv"
//!
//! [backtest]
//! seed = 7
//! level1_window = "sliding"
//!
//! [output]
//! format = "markdown"
//! log_dir = "logs"
//!
//! [[vaccine]]
//! id = "MMR-1"
//! trends = "trends/mmr1.csv"
//!
//! [[vaccine]]
//! id = "HPV-1 girls"
//! registry_id = "HPV-1"
//! trends = "trends/hpv1.csv"
//! ```
//!
//! Relative paths resolve against the directory holding the file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::backtest::{BacktestConfig, VaccineData};
use crate::ingest::{
    compute_uptake, load_cohorts, load_registry, load_trends, registry_for, IngestError,
    IngestResult,
};
use crate::report::ReportFormat;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaccineEntry {
    pub id: String,
    /// Vaccine label in the registry file; defaults to `id`.
    pub registry_id: Option<String>,
    pub trends: PathBuf,
}

impl VaccineEntry {
    pub fn registry_key(&self) -> &str {
        self.registry_id.as_deref().unwrap_or(&self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub registry: PathBuf,
    pub cohorts: PathBuf,
    #[serde(default)]
    pub backtest: BacktestConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(rename = "vaccine", default)]
    pub vaccines: Vec<VaccineEntry>,
}

/// Defaults for the command-line output flags; flags win.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: ReportFormat,
    pub out: Option<PathBuf>,
    pub log_dir: Option<PathBuf>,
    /// Report the single-source columns over the level-0 window.
    pub level0_window: bool,
}

impl ExperimentConfig {
    pub fn parse(text: &str, base: &Path) -> IngestResult<Self> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| IngestError::Config(e.to_string()))?;
        if cfg.vaccines.is_empty() {
            return Err(IngestError::Config("no [[vaccine]] entries".into()));
        }
        let mut ids = std::collections::HashSet::new();
        for v in &cfg.vaccines {
            if !ids.insert(v.id.as_str()) {
                return Err(IngestError::Config(format!(
                    "vaccine {:?} listed twice",
                    v.id
                )));
            }
        }
        cfg.backtest.validate()?;
        cfg.registry = base.join(&cfg.registry);
        cfg.cohorts = base.join(&cfg.cohorts);
        cfg.output.out = cfg.output.out.map(|p| base.join(p));
        cfg.output.log_dir = cfg.output.log_dir.map(|p| base.join(p));
        for v in &mut cfg.vaccines {
            v.trends = base.join(&v.trends);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> IngestResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|error| IngestError::Io {
            source_name: path.display().to_string(),
            error,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Entries matching `filter`, or all of them.
    pub fn select(&self, filter: Option<&str>) -> IngestResult<Vec<&VaccineEntry>> {
        match filter {
            None => Ok(self.vaccines.iter().collect()),
            Some(id) => self
                .vaccines
                .iter()
                .find(|v| v.id == id)
                .map(|v| vec![v])
                .ok_or_else(|| {
                    IngestError::Config(format!("vaccine {id:?} is not in the experiment file"))
                }),
        }
    }

    /// Loads and validates the inputs of the selected vaccines.
    pub fn load_datasets(&self, filter: Option<&str>) -> IngestResult<Vec<VaccineData>> {
        let entries = self.select(filter)?;
        let registry = load_registry(&self.registry)?;
        let cohorts = load_cohorts(&self.cohorts)?;
        entries
            .into_iter()
            .map(|v| {
                let slice = registry_for(&registry, v.registry_key());
                if slice.is_empty() {
                    return Err(IngestError::Config(format!(
                        "registry {} has no rows for {:?}",
                        self.registry.display(),
                        v.registry_key()
                    )));
                }
                let uptake = compute_uptake(&slice, &cohorts)?;
                let panel = load_trends(&v.trends)?.panel;
                if panel.start() > uptake.series().start() || panel.end() < uptake.series().end() {
                    return Err(IngestError::Config(format!(
                        "trends for {:?} cover {}..{}, uptake spans {}..{}",
                        v.id,
                        panel.start(),
                        panel.end(),
                        uptake.series().start(),
                        uptake.series().end()
                    )));
                }
                Ok(VaccineData {
                    id: v.id.clone(),
                    uptake,
                    panel,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves_paths() {
        let text = r#"
registry = "reg.csv"
cohorts = "/abs/cohorts.csv"
[backtest]
seed = 9
[output]
format = "markdown"
log_dir = "logs"
[[vaccine]]
id = "A"
trends = "t/a.csv"
[[vaccine]]
id = "B2"
registry_id = "B"
trends = "b.csv"
"#;
        let cfg = ExperimentConfig::parse(text, Path::new("/data")).unwrap();
        assert_eq!(cfg.registry, PathBuf::from("/data/reg.csv"));
        assert_eq!(cfg.cohorts, PathBuf::from("/abs/cohorts.csv"));
        assert_eq!(cfg.backtest.seed, 9);
        assert_eq!(cfg.backtest.level0_warmup_months, 24);
        assert_eq!(cfg.output.format, ReportFormat::Markdown);
        assert_eq!(cfg.output.log_dir, Some(PathBuf::from("/data/logs")));
        assert_eq!(cfg.output.out, None);
        assert_eq!(cfg.vaccines[0].trends, PathBuf::from("/data/t/a.csv"));
        assert_eq!(cfg.vaccines[1].registry_key(), "B");
        assert_eq!(cfg.select(Some("A")).unwrap().len(), 1);
        assert!(cfg.select(Some("C")).is_err());
    }

    #[test]
    fn rejects_bad_files() {
        let base = Path::new(".");
        assert!(ExperimentConfig::parse("registry = \"r\"\ncohorts = \"c\"\n", base).is_err());
        let dup = "registry = \"r\"\ncohorts = \"c\"\n[[vaccine]]\nid = \"A\"\ntrends = \"a\"\n[[vaccine]]\nid = \"A\"\ntrends = \"b\"\n";
        assert!(ExperimentConfig::parse(dup, base).is_err());
        let unknown = "registry = \"r\"\ncohorts = \"c\"\n[backtest]\nwarmup = 3\n[[vaccine]]\nid = \"A\"\ntrends = \"a\"\n";
        assert!(ExperimentConfig::parse(unknown, base).is_err());
        let invalid = "registry = \"r\"\ncohorts = \"c\"\n[backtest]\nseason_length = 0\n[[vaccine]]\nid = \"A\"\ntrends = \"a\"\n";
        assert!(ExperimentConfig::parse(invalid, base).is_err());
    }
}
