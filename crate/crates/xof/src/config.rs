//! Experiment configuration: every hyperparameter of the learner plus the
//! variant switch, with the standard defaults.

use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Which CF-fitness scheme and OL schedule a run uses.
///
/// * `Bf` — baseline: CF-fitness follows the best (highest-fitness)
///   classifier per CF, and the OL is rebuilt periodically by tournament
///   over all scored CFs, capped in size.
/// * `Scff` — shortening CF-fitness (fitness per condition CF) with the
///   per-trial simplified OL update.
/// * `Gcff` — generalising CF-fitness (fitness per complexity unit) with
///   the per-trial simplified OL update.
/// * `GcffNcf` — GCFF plus per-niche calibration of CF-fitness when
///   serving CF requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Bf,
    Scff,
    Gcff,
    GcffNcf,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Bf, Variant::Scff, Variant::Gcff, Variant::GcffNcf];

    pub fn parse(name: &str) -> Result<Self, ConfigError> {
        match name.to_ascii_lowercase().as_str() {
            "bf" => Ok(Variant::Bf),
            "scff" => Ok(Variant::Scff),
            "gcff" => Ok(Variant::Gcff),
            "gcff-ncf" | "gcff_ncf" | "ncf" => Ok(Variant::GcffNcf),
            _ => Err(ConfigError::UnknownVariant(name.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Bf => "bf",
            Variant::Scff => "scff",
            Variant::Gcff => "gcff",
            Variant::GcffNcf => "gcff-ncf",
        }
    }

    /// GCFF and its niched extension rate classifiers by fitness per
    /// complexity unit; the other two divide fitness by the CF count.
    pub fn uses_fitness_rate(self) -> bool {
        matches!(self, Variant::Gcff | Variant::GcffNcf)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown variant `{0}` (expected bf, scff, gcff or gcff-ncf)")]
    UnknownVariant(String),
    #[error("config key `{key}`: {problem}")]
    BadValue { key: String, problem: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config line {line} is not `key = value`: `{text}`")]
    BadLine { line: usize, text: String },
    #[error("{0} must lie in [0, 1]")]
    RateOutOfRange(&'static str),
    #[error("population size must be positive")]
    EmptyPopulation,
    #[error("max CF depth must be at least 1")]
    ZeroDepth,
    #[error("could not read config file: {0}")]
    Io(String),
}

/// All knobs of one learning run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Micro-population capacity N.
    pub pop_size: u32,
    /// Learning rate for rule parameters.
    pub beta: f64,
    /// Learning rate for CF-fitness.
    pub beta_cf: f64,
    /// Crossover probability.
    pub chi: f64,
    /// Per-offspring mutation probability (one structural edit).
    pub mu: f64,
    /// Deletion experience threshold.
    pub theta_del: u64,
    /// Subsumption experience threshold.
    pub theta_sub: u64,
    /// Mean action-set age that triggers the GA.
    pub theta_ga: f64,
    /// Fitness given to covered classifiers.
    pub f_init: f64,
    /// Prediction given to covered classifiers.
    pub p_init: f64,
    /// Error given to covered classifiers.
    pub eps_init: f64,
    /// Probability that a covering slot receives a CF.
    pub p_spec: f64,
    /// Condition length cap; defaults to twice the attribute count.
    pub max_condition_len: Option<u32>,
    /// Error below which a classifier counts as accurate.
    pub eps_zero: f64,
    /// Accuracy function falloff coefficient.
    pub alpha: f64,
    /// Accuracy function falloff exponent.
    pub nu: f64,
    /// Low-fitness fraction used by the deletion vote.
    pub delta: f64,
    /// Payoff for a correct decision (incorrect pays 0).
    pub reward: f64,
    /// Fraction of the best action-set quality a classifier needs for its
    /// CFs to enter the OL.
    pub ol_selectivity: f64,
    /// Local CF-fitness multiplier for CFs absent from the action set.
    pub ncf_discount: f64,
    /// Hard depth cap for combined CFs.
    pub max_cf_depth: u32,
    /// Probability that a CF request builds a new CF instead of reusing one.
    pub p_new_cf: f64,
    /// Tournament size as a fraction of the action-set micro size.
    pub tournament_fraction: f64,
    /// OL capacity under the baseline variant.
    pub bf_ol_capacity: usize,
    /// Trials between baseline OL rebuilds.
    pub bf_update_period: u64,
    /// Tournament size of the baseline rebuild.
    pub bf_tournament_size: u32,
    /// Exploit trials in the moving-accuracy window.
    pub accuracy_window: usize,
    /// Trials between metric snapshots.
    pub snapshot_interval: u64,
    /// Instances sampled per generality-rate estimate.
    pub generality_samples: u32,
    pub variant: Variant,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            pop_size: 500,
            beta: 0.2,
            beta_cf: 0.001,
            chi: 0.2,
            mu: 0.9,
            theta_del: 20,
            theta_sub: 50,
            theta_ga: 25.0,
            f_init: 0.01,
            p_init: 10.0,
            eps_init: 0.0,
            p_spec: 0.25,
            max_condition_len: None,
            eps_zero: 10.0,
            alpha: 0.1,
            nu: 5.0,
            delta: 0.1,
            reward: 1000.0,
            ol_selectivity: 0.9,
            ncf_discount: 0.1,
            max_cf_depth: 20,
            p_new_cf: 0.1,
            tournament_fraction: 0.4,
            bf_ol_capacity: 50,
            bf_update_period: 500,
            bf_tournament_size: 4,
            accuracy_window: 50,
            snapshot_interval: 500,
            generality_samples: 200,
            variant: Variant::Gcff,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let rates = [
            ("beta", self.beta),
            ("beta_cf", self.beta_cf),
            ("chi", self.chi),
            ("mu", self.mu),
            ("p_spec", self.p_spec),
            ("alpha", self.alpha),
            ("delta", self.delta),
            ("ol_selectivity", self.ol_selectivity),
            ("ncf_discount", self.ncf_discount),
            ("p_new_cf", self.p_new_cf),
            ("tournament_fraction", self.tournament_fraction),
            ("f_init", self.f_init),
        ];
        for (name, value) in rates {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::RateOutOfRange(name));
            }
        }
        if self.pop_size == 0 {
            return Err(ConfigError::EmptyPopulation);
        }
        if self.max_cf_depth == 0 {
            return Err(ConfigError::ZeroDepth);
        }
        Ok(())
    }

    /// Condition length cap for a problem with `attributes` inputs.
    pub fn condition_len_cap(&self, attributes: u32) -> u32 {
        self.max_condition_len.unwrap_or(2 * attributes)
    }

    /// Applies a flat `key = value` config text; `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::BadLine {
                line: line_no + 1,
                text: raw.to_string(),
            })?;
            self.apply_kv(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::Io(e.to_string()))?;
        self.apply_str(&text)
    }

    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
        where
            T::Err: fmt::Display,
        {
            value.parse().map_err(|e: T::Err| ConfigError::BadValue {
                key: key.to_string(),
                problem: e.to_string(),
            })
        }

        match key {
            "pop_size" => self.pop_size = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "beta_cf" => self.beta_cf = parse(key, value)?,
            "chi" => self.chi = parse(key, value)?,
            "mu" => self.mu = parse(key, value)?,
            "theta_del" => self.theta_del = parse(key, value)?,
            "theta_sub" => self.theta_sub = parse(key, value)?,
            "theta_ga" => self.theta_ga = parse(key, value)?,
            "f_init" => self.f_init = parse(key, value)?,
            "p_init" => self.p_init = parse(key, value)?,
            "eps_init" => self.eps_init = parse(key, value)?,
            "p_spec" => self.p_spec = parse(key, value)?,
            "max_condition_len" => self.max_condition_len = Some(parse(key, value)?),
            "eps_zero" => self.eps_zero = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "nu" => self.nu = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "reward" => self.reward = parse(key, value)?,
            "ol_selectivity" => self.ol_selectivity = parse(key, value)?,
            "ncf_discount" => self.ncf_discount = parse(key, value)?,
            "max_cf_depth" => self.max_cf_depth = parse(key, value)?,
            "p_new_cf" => self.p_new_cf = parse(key, value)?,
            "tournament_fraction" => self.tournament_fraction = parse(key, value)?,
            "bf_ol_capacity" => self.bf_ol_capacity = parse(key, value)?,
            "bf_update_period" => self.bf_update_period = parse(key, value)?,
            "bf_tournament_size" => self.bf_tournament_size = parse(key, value)?,
            "accuracy_window" => self.accuracy_window = parse(key, value)?,
            "snapshot_interval" => self.snapshot_interval = parse(key, value)?,
            "generality_samples" => self.generality_samples = parse(key, value)?,
            "variant" => self.variant = Variant::parse(value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let mut cfg = ExperimentConfig::default();
        cfg.mu = 1.5;
        assert_eq!(cfg.validate(), Err(ConfigError::RateOutOfRange("mu")));

        let mut cfg = ExperimentConfig::default();
        cfg.pop_size = 0;
        assert_eq!(cfg.validate(), Err(ConfigError::EmptyPopulation));

        let mut cfg = ExperimentConfig::default();
        cfg.max_cf_depth = 0;
        assert_eq!(cfg.validate(), Err(ConfigError::ZeroDepth));
    }

    #[test]
    fn applies_key_values() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_str("beta = 0.1\n# comment\nvariant = gcff-ncf\nmax_condition_len = 9\n")
            .unwrap();
        assert_eq!(cfg.beta, 0.1);
        assert_eq!(cfg.variant, Variant::GcffNcf);
        assert_eq!(cfg.condition_len_cap(7), 9);

        assert!(matches!(
            cfg.apply_str("nonsense = 1").unwrap_err(),
            ConfigError::UnknownKey(_)
        ));
        assert!(matches!(
            cfg.apply_str("beta 0.3").unwrap_err(),
            ConfigError::BadLine { line: 1, .. }
        ));
    }

    #[test]
    fn condition_cap_defaults_to_twice_attributes() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.condition_len_cap(7), 14);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(Variant::parse(v.name()).unwrap(), v);
        }
        assert!(Variant::parse("mystery").is_err());
    }
}
