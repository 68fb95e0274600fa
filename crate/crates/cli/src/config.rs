use std::path::{Path, PathBuf};

use serde::Deserialize;

use qvic::fdtd::{FdtdConfig, Region};
use qvic::optimizer::{OptimizationConfig, Scenario};

use crate::CliError;

/// Run configuration file. Every field is optional; omitted fields take the
/// defaults of the backplate + perpendicular scenario at the first antinode.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub optimization: OptimizationSection,
    #[serde(default)]
    pub region: RegionSection,
    #[serde(default)]
    pub fdtd: FdtdSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationSection {
    pub scenario: Option<String>,
    pub atom_zeta: Option<f64>,
    pub max_iterations: Option<usize>,
    pub single_pass: Option<bool>,
    /// Write a geometry snapshot every this many iterations.
    pub checkpoint_every: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    pub footprint: Option<f64>,
    pub block_size: Option<f64>,
    pub depth_blocks: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdtdSection {
    pub resolution: Option<usize>,
    pub box_half_extent: Option<f64>,
    pub pml_thickness: Option<f64>,
    pub courant_factor: Option<f64>,
    pub source_fractional_bandwidth: Option<f64>,
    pub decay_threshold: Option<f64>,
    pub max_steps: Option<usize>,
    pub dispersion_compensation: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
                Self::parse(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!("line {line}: ")
                })
                .unwrap_or_default();
            format!("{at}{}", e.message())
        })
    }

    pub fn fdtd(&self) -> FdtdConfig {
        let d = FdtdConfig::default();
        let f = &self.fdtd;
        FdtdConfig {
            resolution: f.resolution.unwrap_or(d.resolution),
            box_half_extent: f.box_half_extent.unwrap_or(d.box_half_extent),
            pml_thickness: f.pml_thickness.unwrap_or(d.pml_thickness),
            courant_factor: f.courant_factor.unwrap_or(d.courant_factor),
            source_fractional_bandwidth: f
                .source_fractional_bandwidth
                .unwrap_or(d.source_fractional_bandwidth),
            decay_threshold: f.decay_threshold.unwrap_or(d.decay_threshold),
            max_steps: f.max_steps.unwrap_or(d.max_steps),
            dispersion_compensation: f
                .dispersion_compensation
                .unwrap_or(d.dispersion_compensation),
            ..d
        }
    }

    pub fn region(&self) -> Region {
        let d = Region::default();
        Region {
            footprint: self.region.footprint.unwrap_or(d.footprint),
            block_size: self.region.block_size.unwrap_or(d.block_size),
            depth_blocks: self.region.depth_blocks.unwrap_or(d.depth_blocks),
        }
    }

    pub fn optimization(&self) -> Result<OptimizationConfig, CliError> {
        let d = OptimizationConfig::default();
        let o = &self.optimization;
        let scenario = match &o.scenario {
            Some(s) => s
                .parse::<Scenario>()
                .map_err(|e| CliError::Usage(format!("optimization.scenario: {e}")))?,
            None => d.scenario,
        };
        let config = OptimizationConfig {
            scenario,
            atom_zeta: o.atom_zeta.unwrap_or(d.atom_zeta),
            max_iterations: o.max_iterations.unwrap_or(d.max_iterations),
            fdtd: self.fdtd(),
            region: self.region(),
        };
        config
            .validate()
            .map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))?;
        Ok(config)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .directory
            .clone()
            .unwrap_or_else(|| PathBuf::from("qvic-out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default_scenario() {
        let c = RunConfig::parse("").unwrap();
        let o = c.optimization().unwrap();
        assert_eq!(o, OptimizationConfig::default());
        assert!(o.scenario.backplate);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let e = RunConfig::parse("[fdtd]\nresolution = 8\nresolutoin = 9\n").unwrap_err();
        assert!(e.starts_with("line 3"), "{e}");
        assert!(RunConfig::parse("[extra]\n").is_err());
    }

    #[test]
    fn overrides_are_applied() {
        let c = RunConfig::parse(
            "[optimization]\nscenario = \"freestanding-parallel\"\nmax_iterations = 3\n\
             [fdtd]\nresolution = 8\n",
        )
        .unwrap();
        let o = c.optimization().unwrap();
        assert!(!o.scenario.backplate);
        assert_eq!(o.max_iterations, 3);
        assert_eq!(o.fdtd.resolution, 8);
        assert_eq!(o.fdtd.box_half_extent, 2.0);
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let c = RunConfig::parse("[optimization]\natom_zeta = -1.0\n").unwrap();
        assert!(matches!(c.optimization(), Err(CliError::Usage(_))));
        let c = RunConfig::parse("[optimization]\nscenario = \"sideways\"\n").unwrap();
        assert!(c.optimization().is_err());
    }
}
