//! Pipeline configuration file (TOML).
//!
//! Every threshold ships with its default, so a config diff against the
//! default documents exactly what a run changed. All randomness derives from
//! the single top-level `seed`.

use std::path::{Path, PathBuf};

use panoqa_core::grpo::GrpoConfig;
use panoqa_core::qa::GenerationConfig;
use panoqa_core::scene::FilterConfig;

use crate::error::{CliError, CliResult};

pub const ENV_OUTPUT_ROOT: &str = "PANOQA_OUTPUT_ROOT";
pub const ENV_PARALLELISM: &str = "PANOQA_PARALLELISM";

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Root seed; recorded in every output header.
    pub seed: u64,
    /// Worker threads for scene analysis and grading; 0 means all cores.
    pub parallelism: usize,
    /// Directories scanned for scene bundles (any subdirectory with a
    /// `meta.json` counts, as does the root itself).
    pub scene_roots: Vec<PathBuf>,
    pub output_root: PathBuf,
    pub filter: FilterConfig,
    pub generation: GenerationConfig,
    pub grpo: GrpoConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            parallelism: 0,
            scene_roots: vec![PathBuf::from("scenes")],
            output_root: PathBuf::from("out"),
            filter: FilterConfig::default(),
            generation: GenerationConfig::default(),
            grpo: GrpoConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Loads and validates a config file, then applies environment
    /// overrides for the output root and parallelism.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read_at(path, e))?;
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|e| CliError::format_at(path, e))?;
        config.apply_env_overrides()?;
        config.generation.validate()?;
        config.grpo.validate()?;
        Ok(config)
    }

    pub fn apply_env_overrides(&mut self) -> CliResult<()> {
        if let Ok(root) = std::env::var(ENV_OUTPUT_ROOT) {
            if !root.is_empty() {
                self.output_root = PathBuf::from(root);
            }
        }
        if let Ok(par) = std::env::var(ENV_PARALLELISM) {
            if !par.is_empty() {
                self.parallelism = par.parse().map_err(|_| {
                    CliError::Format(format!("{ENV_PARALLELISM} must be an integer, got {par:?}"))
                })?;
            }
        }
        Ok(())
    }

    /// Generation config with the pipeline's root seed in effect.
    pub fn effective_generation(&self) -> GenerationConfig {
        let mut generation = self.generation.clone();
        generation.seed = self.seed;
        generation
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config: PipelineConfig = toml::from_str("seed = 7").unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.filter.min_area, 900);
        assert_eq!(config.grpo.group_size, 4);
        assert_eq!(config.generation.tau_pos, 0.5);
        assert_eq!(config.effective_generation().seed, 7);
    }

    #[test]
    fn nested_overrides_parse() {
        let toml_text = r#"
seed = 3
[filter]
min_area = 400
[generation]
env_mcq_per_scene = 6
[generation.category_targets]
view_source = 50
distance = 50
environment = 50
spatial = 50
attribute = 50
[grpo]
group_size = 8
"#;
        let config: PipelineConfig = toml::from_str(toml_text).unwrap();
        assert_eq!(config.filter.min_area, 400);
        assert_eq!(config.generation.env_mcq_per_scene, 6);
        assert_eq!(config.grpo.group_size, 8);
        assert_eq!(
            config
                .generation
                .category_targets
                .get(&panoqa_core::qa::Category::Spatial),
            Some(&50)
        );
    }
}
