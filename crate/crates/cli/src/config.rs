//! Run configuration: a TOML subset of `key = value` lines grouped under
//! `[section]` headers. Every key is optional; unknown keys are rejected.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use survival_core::grid::Spacing;
use survival_core::quadrature::Tolerance;
use survival_core::{AdatomSpec, Error, SubstrateSpec};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Substrate {
    Square,
    Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridSpacing {
    Linear,
    Geometric,
}

impl From<GridSpacing> for Spacing {
    fn from(s: GridSpacing) -> Self {
        match s {
            GridSpacing::Linear => Spacing::Linear,
            GridSpacing::Geometric => Spacing::Geometric,
        }
    }
}

/// Time grid `points` values from `t_min` to `t_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub spacing: GridSpacing,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { t_min: 0.01, t_max: 1000.0, points: 1500, spacing: GridSpacing::Geometric }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MethodsConfig {
    pub direct: bool,
    pub decomposed: bool,
    pub short_time: bool,
    pub long_time: bool,
}

impl Default for MethodsConfig {
    fn default() -> Self {
        MethodsConfig { direct: true, decomposed: true, short_time: false, long_time: false }
    }
}

/// Finite-lattice reference and its own (short) time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub enabled: bool,
    pub size: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub spacing: GridSpacing,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            enabled: true,
            size: 400,
            t_min: 0.01,
            t_max: 40.0,
            points: 200,
            spacing: GridSpacing::Geometric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    /// L1 error of the interpolated LDoS in the real-axis transform.
    pub direct: f64,
    pub line_abs: f64,
    pub line_rel: f64,
    /// Largest accepted `|D(z*)|` at the resonance pole.
    pub pole_residual: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig { direct: 1e-10, line_abs: 1e-12, line_rel: 1e-10, pole_residual: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub exp_t_min: f64,
    pub exp_t_max: f64,
    pub tail_t_min: f64,
    pub tail_t_max: f64,
    /// Uniform step of the tail series used for the power law and the
    /// modulation frequency.
    pub tail_step: f64,
    /// Refinement factor of the grid over the crossing region.
    pub refine: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { exp_t_min: 5.0, exp_t_max: 60.0, tail_t_min: 200.0, tail_t_max: 2000.0, tail_step: 0.1, refine: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdosConfig {
    /// Energy samples across the band (cell midpoints).
    pub points: usize,
}

impl Default for LdosConfig {
    fn default() -> Self {
        LdosConfig { points: 2000 }
    }
}

/// Complete, validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub substrate: Substrate,
    pub hopping: f64,
    pub epsilon0: f64,
    pub v0: f64,
    pub output: PathBuf,
    pub grid: GridConfig,
    pub methods: MethodsConfig,
    pub oracle: OracleConfig,
    pub tolerance: ToleranceConfig,
    pub fit: FitConfig,
    pub ldos: LdosConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            substrate: Substrate::Square,
            hopping: 1.0,
            epsilon0: 2.0,
            v0: 0.4,
            output: PathBuf::from("out"),
            grid: GridConfig::default(),
            methods: MethodsConfig::default(),
            oracle: OracleConfig::default(),
            tolerance: ToleranceConfig::default(),
            fit: FitConfig::default(),
            ldos: LdosConfig::default(),
        }
    }
}

fn invalid(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Core(Error::Domain(format!("{key}: {msg}")))
}

fn positive(key: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be a finite number > 0, got {x}")))
    }
}

fn time_range(section: &str, t_min: f64, t_max: f64, points: usize, spacing: GridSpacing) -> Result<(), CliError> {
    if !(t_min.is_finite() && t_min >= 0.0) {
        return Err(invalid(&format!("{section}.t_min"), format!("must be >= 0, got {t_min}")));
    }
    if !(t_max.is_finite() && t_max > t_min) {
        return Err(invalid(&format!("{section}.t_max"), format!("must exceed t_min, got {t_max}")));
    }
    if points < 2 {
        return Err(invalid(&format!("{section}.points"), format!("must be >= 2, got {points}")));
    }
    if spacing == GridSpacing::Geometric && t_min == 0.0 {
        return Err(invalid(&format!("{section}.t_min"), "must be > 0 for a geometric grid"));
    }
    Ok(())
}

impl RunConfig {
    /// Parse and validate configuration text.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration text that [`RunConfig::parse`] maps back to `self`.
    pub fn serialize(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        positive("hopping", self.hopping)?;
        if !self.epsilon0.is_finite() {
            return Err(invalid("epsilon0", format!("must be finite, got {}", self.epsilon0)));
        }
        if !(self.v0.is_finite() && self.v0 >= 0.0) {
            return Err(invalid("v0", format!("must be >= 0, got {}", self.v0)));
        }
        time_range("grid", self.grid.t_min, self.grid.t_max, self.grid.points, self.grid.spacing)?;
        let o = &self.oracle;
        time_range("oracle", o.t_min, o.t_max, o.points, o.spacing)?;
        if o.size < 32 {
            return Err(invalid("oracle.size", format!("must be >= 32, got {}", o.size)));
        }
        let t = &self.tolerance;
        positive("tolerance.direct", t.direct)?;
        positive("tolerance.line_abs", t.line_abs)?;
        positive("tolerance.line_rel", t.line_rel)?;
        positive("tolerance.pole_residual", t.pole_residual)?;
        let f = &self.fit;
        positive("fit.exp_t_min", f.exp_t_min)?;
        if !(f.exp_t_max > f.exp_t_min) {
            return Err(invalid("fit.exp_t_max", "must exceed fit.exp_t_min"));
        }
        positive("fit.tail_t_min", f.tail_t_min)?;
        if !(f.tail_t_max > f.tail_t_min) {
            return Err(invalid("fit.tail_t_max", "must exceed fit.tail_t_min"));
        }
        positive("fit.tail_step", f.tail_step)?;
        if f.refine < 1 {
            return Err(invalid("fit.refine", "must be >= 1"));
        }
        if self.ldos.points < 2 {
            return Err(invalid("ldos.points", format!("must be >= 2, got {}", self.ldos.points)));
        }
        Ok(())
    }

    pub fn substrate_spec(&self) -> SubstrateSpec {
        match self.substrate {
            Substrate::Square => SubstrateSpec::square(self.hopping),
            Substrate::Chain => SubstrateSpec::chain(self.hopping),
        }
    }

    /// Add-atom parameters in absolute units (`epsilon0` and `v0` are
    /// ratios to the hopping).
    pub fn adatom(&self) -> Result<AdatomSpec, CliError> {
        let sub = self.substrate_spec();
        Ok(AdatomSpec::new(self.epsilon0 * self.hopping, self.v0 * self.hopping, sub)?)
    }

    pub fn line_tolerance(&self) -> Tolerance {
        Tolerance {
            abs: self.tolerance.line_abs,
            rel: self.tolerance.line_rel,
            ..survival_core::dynamics::line_tolerance()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!((cfg.epsilon0, cfg.v0), (2.0, 0.4));
    }

    #[test]
    fn negative_coupling_names_the_key() {
        let err = RunConfig::parse("v0 = -0.1").unwrap_err();
        assert!(matches!(err, CliError::Core(Error::Domain(_))));
        assert!(err.to_string().contains("v0"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("colour = 1").is_err());
        assert!(RunConfig::parse("[grid]\nstep = 1").is_err());
        assert!(RunConfig::parse("[nonsense]").is_err());
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = RunConfig::parse("v0 = 0.3\nepsilon0 2").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = RunConfig::parse(
            "substrate = \"chain\"\nepsilon0 = 0.5\n[grid]\npoints = 10\nspacing = \"linear\"\nt_min = 0\n[methods]\nlong_time = true\n",
        )
        .unwrap();
        assert_eq!(cfg.substrate, Substrate::Chain);
        assert_eq!(cfg.grid.points, 10);
        assert_eq!(cfg.grid.spacing, GridSpacing::Linear);
        assert!(cfg.methods.long_time && cfg.methods.direct);
    }

    #[test]
    fn invalid_values_name_their_keys() {
        for (text, key) in [
            ("[grid]\npoints = 1", "grid.points"),
            ("[grid]\nt_min = 0", "grid.t_min"),
            ("[grid]\nt_max = 0.001", "grid.t_max"),
            ("[tolerance]\nline_abs = 0", "tolerance.line_abs"),
            ("[oracle]\nsize = 8", "oracle.size"),
            ("hopping = -1", "hopping"),
            ("[fit]\nrefine = 0", "fit.refine"),
        ] {
            let err = RunConfig::parse(text).unwrap_err();
            assert!(err.to_string().contains(key), "{text}: {err}");
        }
    }

    #[test]
    fn serialize_round_trips() {
        let texts = ["", "v0 = 0.25\n[fit]\ntail_step = 0.07\n", "substrate = \"chain\"\n[oracle]\nenabled = false\n"];
        for text in texts {
            let cfg = RunConfig::parse(text).unwrap();
            let again = RunConfig::parse(&cfg.serialize()).unwrap();
            assert_eq!(cfg, again);
            assert_eq!(cfg.serialize(), again.serialize());
        }
    }
}
