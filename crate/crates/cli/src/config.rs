//! Experiment configuration files.
//!
//! A config is a TOML document with named `[alphabets.*]`, one `[source]`,
//! at most one `[system]` (cascades are a system whose `stages` list other
//! systems), optional `[caps]` and `[tolerances]`, and an `[[analysis]]`
//! list. See the README for the full schema.

use std::collections::BTreeMap;

use serde::Deserialize;

use infoloss::entropy::{Caps, BRACKET_TOLERANCE, IDENTITY_TOLERANCE};
use infoloss::zoo::{
    fixed_point_filter, hammerstein_system, multiplier_system, ring_linear_filter, squarer,
    static_map, xor_filter, FilterCoeffs, FixedPointFormat, Placement, Product, Quantizer,
};
use infoloss::{cascade, make_iid, Alphabet, MarkovSource, Ring, Symbol, SystemSpec};

use crate::error::{CliError, Result};

pub const PATH_CAP_VAR: &str = "INFOLOSS_PATH_CAP";
pub const STATE_CAP_VAR: &str = "INFOLOSS_STATE_CAP";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub format: Option<OutputFormat>,
    #[serde(default)]
    pub alphabets: BTreeMap<String, AlphabetConfig>,
    pub source: Option<SourceConfig>,
    pub system: Option<SystemConfig>,
    pub caps: Option<CapsConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub analysis: Vec<AnalysisConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Json,
    Text,
}

/// Either `ring = "mod-q"` or an explicit `symbols` list with optional
/// ring `tables` over symbol indices.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphabetConfig {
    pub ring: Option<String>,
    pub symbols: Option<Vec<String>>,
    pub tables: Option<Ring>,
}

/// `pmf` for an iid source or a row-major `transition` matrix.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub alphabet: String,
    pub pmf: Option<Vec<f64>>,
    pub transition: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticTable {
    pub input: String,
    pub output: String,
    pub table: Vec<Symbol>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantizerKind {
    #[default]
    Truncating,
    Rounding,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    /// Dense update table in the documented mixed-radix layout.
    Table {
        input: String,
        output: String,
        n: usize,
        m: usize,
        table: Vec<Symbol>,
    },
    XorFilter,
    Identity {
        alphabet: String,
    },
    /// Linear filter over the alphabet's ring; coefficients are symbol
    /// indices.
    RingFilter {
        alphabet: String,
        b: Vec<Symbol>,
        #[serde(default)]
        a: Vec<Symbol>,
    },
    /// Coefficients are raw integers in `ℤ_{2^(k+f)}`; `2^f` is one.
    FixedPoint {
        k: u32,
        f: u32,
        b: Vec<u64>,
        #[serde(default)]
        a: Vec<u64>,
        placement: Placement,
        #[serde(default)]
        quantizer: QuantizerKind,
        /// Custom quantizer: one output symbol per raw value.
        quantizer_map: Option<Vec<Symbol>>,
    },
    /// Rational product by default; `product_table[i][j]` gives output
    /// labels for a non-numeric alphabet.
    Multiplier {
        alphabet: String,
        product_table: Option<Vec<Vec<String>>>,
    },
    Squarer {
        alphabet: String,
    },
    Static(StaticTable),
    Hammerstein {
        g: StaticTable,
        filter: Box<SystemConfig>,
    },
    Cascade {
        stages: Vec<SystemConfig>,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsConfig {
    pub max_paths: Option<u64>,
    pub max_states: Option<u64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Exact identities, in bits.
    pub identity: f64,
    /// Target loss-bracket width, in bits.
    pub bracket: f64,
    /// Largest block length used by the rate brackets.
    pub max_block_length: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: IDENTITY_TOLERANCE,
            bracket: BRACKET_TOLERANCE,
            max_block_length: 16,
        }
    }
}

fn default_sequences() -> usize {
    1000
}

fn default_length() -> usize {
    64
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AnalysisConfig {
    LossReport,
    FiniteLength {
        k: usize,
    },
    Bound,
    Invertibility,
    RoundTrip {
        #[serde(default = "default_sequences")]
        sequences: usize,
        #[serde(default = "default_length")]
        length: usize,
        #[serde(default)]
        seed: u64,
    },
    FilterAnalysis {
        b: Vec<f64>,
        #[serde(default)]
        a: Vec<f64>,
    },
    Plugin {
        length: usize,
        block: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Loss additivity for a two-stage cascade.
    Additivity,
}

impl AnalysisConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::LossReport => "loss-report",
            Self::FiniteLength { .. } => "finite-length",
            Self::Bound => "bound",
            Self::Invertibility => "invertibility",
            Self::RoundTrip { .. } => "round-trip",
            Self::FilterAnalysis { .. } => "filter-analysis",
            Self::Plugin { .. } => "plugin",
            Self::Additivity => "additivity",
        }
    }

    pub fn needs_system(&self) -> bool {
        !matches!(self, Self::FilterAnalysis { .. })
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        if !(t.identity >= 0.0) || !(t.bracket >= 0.0) {
            return Err(CliError::Config("tolerances must be non-negative".into()));
        }
        if t.max_block_length < 2 {
            return Err(CliError::Config(
                "tolerances.max_block_length must be at least 2".into(),
            ));
        }
        if let Some(c) = self.caps {
            if c.max_paths == Some(0) || c.max_states == Some(0) {
                return Err(CliError::Config("caps must be positive".into()));
            }
        }
        for a in &self.analysis {
            if a.needs_system() {
                if self.system.is_none() {
                    return Err(CliError::Config(format!(
                        "missing key `system` required by analysis `{}`",
                        a.name()
                    )));
                }
                if self.source.is_none() && !matches!(a, AnalysisConfig::Bound | AnalysisConfig::Invertibility | AnalysisConfig::RoundTrip { .. }) {
                    return Err(CliError::Config(format!(
                        "missing key `source` required by analysis `{}`",
                        a.name()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Caps from `[caps]`, falling back to the environment variables and
    /// then to the library defaults.
    pub fn caps(&self) -> Result<Caps> {
        let base = env_caps()?;
        let c = self.caps.unwrap_or(CapsConfig {
            max_paths: None,
            max_states: None,
        });
        Ok(Caps {
            max_paths: c.max_paths.unwrap_or(base.max_paths),
            max_states: c.max_states.unwrap_or(base.max_states),
        })
    }

    pub fn alphabet(&self, name: &str) -> Result<Alphabet> {
        let spec = self.alphabets.get(name).ok_or_else(|| {
            CliError::Config(format!("missing key `alphabets.{name}` (referenced but not defined)"))
        })?;
        spec.build(name)
    }

    pub fn build_source(&self) -> Result<Option<MarkovSource>> {
        let Some(s) = &self.source else {
            return Ok(None);
        };
        let alphabet = self.alphabet(&s.alphabet)?;
        let src = match (&s.pmf, &s.transition) {
            (Some(p), None) => make_iid(alphabet, p)?,
            (None, Some(t)) => MarkovSource::new(alphabet, t.clone())?,
            _ => {
                return Err(CliError::Config(
                    "source needs exactly one of `pmf` or `transition`".into(),
                ))
            }
        };
        Ok(Some(src))
    }

    pub fn build_system(&self) -> Result<Option<SystemSpec>> {
        self.system.as_ref().map(|s| self.system_from(s)).transpose()
    }

    /// The two stages when the system is a two-stage cascade.
    pub fn cascade_stages(&self) -> Result<Option<(SystemSpec, SystemSpec)>> {
        match &self.system {
            Some(SystemConfig::Cascade { stages }) if stages.len() == 2 => Ok(Some((
                self.system_from(&stages[0])?,
                self.system_from(&stages[1])?,
            ))),
            _ => Ok(None),
        }
    }

    fn static_table(&self, g: &StaticTable) -> Result<SystemSpec> {
        Ok(static_map(&self.alphabet(&g.input)?, &self.alphabet(&g.output)?, &g.table)?)
    }

    fn system_from(&self, s: &SystemConfig) -> Result<SystemSpec> {
        Ok(match s {
            SystemConfig::Table {
                input,
                output,
                n,
                m,
                table,
            } => SystemSpec::from_table(
                self.alphabet(input)?,
                self.alphabet(output)?,
                *n,
                *m,
                table.clone(),
            )?,
            SystemConfig::XorFilter => xor_filter(),
            SystemConfig::Identity { alphabet } => SystemSpec::identity(self.alphabet(alphabet)?),
            SystemConfig::RingFilter { alphabet, b, a } => ring_linear_filter(
                &self.alphabet(alphabet)?,
                &FilterCoeffs::new(b.clone(), a.clone())?,
            )?,
            SystemConfig::FixedPoint {
                k,
                f,
                b,
                a,
                placement,
                quantizer,
                quantizer_map,
            } => {
                let fmt = FixedPointFormat::new(*k, *f)?;
                let q = match (quantizer_map, quantizer) {
                    (Some(map), _) => Quantizer::custom(fmt, map.clone())?,
                    (None, QuantizerKind::Truncating) => Quantizer::truncating(fmt),
                    (None, QuantizerKind::Rounding) => Quantizer::rounding(fmt),
                };
                fixed_point_filter(&FilterCoeffs::new(b.clone(), a.clone())?, &q, *placement)?
            }
            SystemConfig::Multiplier {
                alphabet,
                product_table,
            } => {
                let product = match product_table {
                    Some(t) => Product::Table(t.clone()),
                    None => Product::Rational,
                };
                multiplier_system(&self.alphabet(alphabet)?, &product)?
            }
            SystemConfig::Squarer { alphabet } => squarer(&self.alphabet(alphabet)?)?,
            SystemConfig::Static(g) => self.static_table(g)?,
            SystemConfig::Hammerstein { g, filter } => {
                hammerstein_system(&self.static_table(g)?, &self.system_from(filter)?)?
            }
            SystemConfig::Cascade { stages } => {
                let mut it = stages.iter();
                let first = it.next().ok_or_else(|| {
                    CliError::Config("cascade `stages` must list at least one system".into())
                })?;
                let mut sys = self.system_from(first)?;
                for next in it {
                    sys = cascade(&sys, &self.system_from(next)?)?;
                }
                sys
            }
        })
    }
}

impl AlphabetConfig {
    fn build(&self, name: &str) -> Result<Alphabet> {
        match (&self.ring, &self.symbols, &self.tables) {
            (Some(r), None, None) => {
                let q = r
                    .strip_prefix("mod-")
                    .and_then(|q| q.parse::<usize>().ok())
                    .ok_or_else(|| {
                        CliError::Config(format!(
                            "alphabets.{name}.ring must look like \"mod-q\", got {r:?}"
                        ))
                    })?;
                Ok(Alphabet::modular(q)?)
            }
            (None, Some(s), None) => Ok(Alphabet::new(s.clone())?),
            (None, Some(s), Some(t)) => Ok(Alphabet::with_ring(s.clone(), t.clone())?),
            _ => Err(CliError::Config(format!(
                "alphabets.{name} needs either `ring` or `symbols` (with optional `tables`)"
            ))),
        }
    }
}

fn env_cap(name: &'static str, default: u64) -> Result<u64> {
    match std::env::var(name) {
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(0) => Err(CliError::Env {
                name,
                reason: "must be positive".into(),
            }),
            Ok(n) => Ok(n),
            Err(e) => Err(CliError::Env {
                name,
                reason: format!("{v:?}: {e}"),
            }),
        },
        Err(_) => Ok(default),
    }
}

/// Library default caps overridden by `INFOLOSS_PATH_CAP` and
/// `INFOLOSS_STATE_CAP`.
pub fn env_caps() -> Result<Caps> {
    let d = Caps::default();
    Ok(Caps {
        max_paths: env_cap(PATH_CAP_VAR, d.max_paths)?,
        max_states: env_cap(STATE_CAP_VAR, d.max_states)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const XOR: &str = r#"
        [alphabets.bits]
        ring = "mod-2"

        [source]
        alphabet = "bits"
        pmf = [0.5, 0.5]

        [system]
        kind = "xor-filter"

        [[analysis]]
        kind = "loss-report"
    "#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::parse(XOR).unwrap();
        assert!(cfg.build_source().unwrap().unwrap().is_iid());
        assert_eq!(cfg.build_system().unwrap().unwrap().input_memory(), 1);
        assert_eq!(cfg.analysis.len(), 1);
        assert_eq!(cfg.tolerances.max_block_length, 16);
    }

    #[test]
    fn missing_field_is_named() {
        let bad = XOR.replace("alphabet = \"bits\"\n", "");
        let err = ExperimentConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("alphabet"), "{err}");
    }

    #[test]
    fn undefined_alphabet_is_named() {
        let bad = XOR.replace("alphabet = \"bits\"", "alphabet = \"trits\"");
        let cfg = ExperimentConfig::parse(&bad).unwrap();
        let err = cfg.build_source().unwrap_err().to_string();
        assert!(err.contains("alphabets.trits"), "{err}");
    }

    #[test]
    fn unknown_system_kind_rejected() {
        let bad = XOR.replace("xor-filter", "volterra");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(CliError::Parse(_))));
    }

    #[test]
    fn fixed_point_and_cascade_build() {
        let text = r#"
            [alphabets.w]
            ring = "mod-4"

            [source]
            alphabet = "w"
            pmf = [0.25, 0.25, 0.25, 0.25]

            [system]
            kind = "cascade"
            [[system.stages]]
            kind = "fixed-point"
            k = 2
            f = 1
            b = [2, 3]
            a = [5]
            placement = "after-accumulate"
            [[system.stages]]
            kind = "identity"
            alphabet = "w"
        "#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        let sys = cfg.build_system().unwrap().unwrap();
        assert!(sys.stages().is_some());
        assert!(cfg.cascade_stages().unwrap().is_some());
    }
}
