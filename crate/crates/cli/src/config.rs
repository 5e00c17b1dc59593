//! Run configuration. Every field has a default and unknown keys are errors.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// One value or a list.
    #[serde(deserialize_with = "one_or_many")]
    pub sigma: Vec<f64>,
    pub quadrature_order: usize,
    /// Upper end of the time window for kernel fits and admissibility on compact models.
    pub t_max: f64,
    pub circle: CircleSpec,
    pub torus: TorusSpec,
    pub line: LineSpec,
    pub sphere: SphereSpec,
    pub levels: LevelSpec,
    pub balls: BallSpec,
    pub heat: HeatSpec,
    pub admissibility: AdmissibilitySpec,
    pub corpus: CorpusSpec,
    pub jacobian: JacobianSpec,
    pub maximal: MaximalSpec,
    pub tolerances: Tolerances,
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sigma: vec![0.3, 0.5, 0.75],
            quadrature_order: 64,
            t_max: 1.0,
            circle: CircleSpec::default(),
            torus: TorusSpec::default(),
            line: LineSpec::default(),
            sphere: SphereSpec::default(),
            levels: LevelSpec::default(),
            balls: BallSpec::default(),
            heat: HeatSpec::default(),
            admissibility: AdmissibilitySpec::default(),
            corpus: CorpusSpec::default(),
            jacobian: JacobianSpec::default(),
            maximal: MaximalSpec::default(),
            tolerances: Tolerances::default(),
            output: OutputSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircleSpec {
    pub length: f64,
    pub points: usize,
}

impl Default for CircleSpec {
    fn default() -> Self {
        Self { length: 2.0 * PI, points: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorusSpec {
    pub lengths: [f64; 2],
    pub points: usize,
}

impl Default for TorusSpec {
    fn default() -> Self {
        Self { lengths: [2.0 * PI, 2.0 * PI], points: 48 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineSpec {
    pub half_width: f64,
}

impl Default for LineSpec {
    fn default() -> Self {
        Self { half_width: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SphereSpec {
    pub radius: f64,
}

impl Default for SphereSpec {
    fn default() -> Self {
        Self { radius: 1.0 }
    }
}

/// Extension heights: `count` geometric levels from the grid spacing to `top`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelSpec {
    pub count: usize,
    pub top: f64,
}

impl Default for LevelSpec {
    fn default() -> Self {
        Self { count: 24, top: 8.0 }
    }
}

/// Strided centers times `levels` dyadic radii ending at half the diameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallSpec {
    pub levels: u32,
    pub circle_stride: usize,
    pub torus_stride: usize,
    /// Gauss–Legendre nodes per tent.
    pub tent_nodes: usize,
}

impl Default for BallSpec {
    fn default() -> Self {
        Self { levels: 4, circle_stride: 1, torus_stride: 2, tent_nodes: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatSpec {
    pub line_exponent: f64,
    pub circle_exponent: f64,
    /// Points per axis of the `(d, t)` fit grid.
    pub fit_points: usize,
    pub t_min: f64,
}

impl Default for HeatSpec {
    fn default() -> Self {
        Self { line_exponent: 0.25, circle_exponent: 0.2, fit_points: 24, t_min: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmissibilitySpec {
    pub points: usize,
    pub t_min: f64,
    pub chain_exponent: f64,
}

impl Default for AdmissibilitySpec {
    fn default() -> Self {
        Self { points: 24, t_min: 0.05, chain_exponent: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    /// Corpus function names; empty selects all of them.
    pub functions: Vec<String>,
    pub dilations: Vec<u32>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self { functions: Vec::new(), dilations: vec![1, 2, 4] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JacobianSpec {
    pub sigma: f64,
    pub dilations: Vec<u32>,
    pub log_smoothing: Vec<f64>,
}

impl Default for JacobianSpec {
    fn default() -> Self {
        Self { sigma: 0.75, dilations: vec![1, 2, 4, 8], log_smoothing: vec![0.5, 0.25, 0.125] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaximalSpec {
    pub sigma: Vec<f64>,
    pub probe_smoothing: Vec<f64>,
    pub probe_points: usize,
}

impl Default for MaximalSpec {
    fn default() -> Self {
        Self { sigma: vec![0.6, 0.75, 0.9], probe_smoothing: vec![0.1, 0.05, 0.025], probe_points: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub eigen_half: f64,
    pub eigen_profile: f64,
    pub pde_relative: f64,
    pub constant: f64,
    pub mass: f64,
    pub square_half: f64,
    pub square_spread: f64,
    pub pairing: f64,
    pub pairing_fine: f64,
    pub equivalence_bound: f64,
    pub equivalence_drift: f64,
    pub coincidence: f64,
    pub heat_constant: f64,
    pub jacobian_value: f64,
    pub jacobian_spread: f64,
    pub maximal_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eigen_half: 1e-6,
            eigen_profile: 1e-5,
            pde_relative: 1e-5,
            constant: 1e-9,
            mass: 1e-8,
            square_half: 1e-4,
            square_spread: 3.0,
            pairing: 1e-4,
            pairing_fine: 2.5e-5,
            equivalence_bound: 10.0,
            equivalence_drift: 0.25,
            coincidence: 1e-6,
            heat_constant: 1e-10,
            jacobian_value: 1e-6,
            jacobian_spread: 5.0,
            maximal_drift: 0.2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Output directory, overridden by `--out`. Without either, runs write to
    /// `<root>/<suite>` with the root taken from the environment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

fn one_or_many<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

fn sigma_in_range(s: f64) -> bool {
    s > 0.0 && s < 1.0
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("the configuration serializes")
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |msg: String| Err(RunError::Config(msg));
        if self.sigma.is_empty() {
            return bad("sigma list is empty".into());
        }
        if let Some(s) = self.sigma.iter().chain(&self.maximal.sigma).find(|s| !sigma_in_range(**s)) {
            return bad(format!("sigma must lie in (0,1), got {s}"));
        }
        if !(self.jacobian.sigma > 0.5 && self.jacobian.sigma < 1.0) {
            return bad(format!("jacobian.sigma must lie in (1/2,1), got {}", self.jacobian.sigma));
        }
        if !(8..=256).contains(&self.quadrature_order) {
            return bad(format!("quadrature_order must lie in [8, 256], got {}", self.quadrature_order));
        }
        let positive = [
            ("t_max", self.t_max),
            ("circle.length", self.circle.length),
            ("torus.lengths", self.torus.lengths[0].min(self.torus.lengths[1])),
            ("line.half_width", self.line.half_width),
            ("sphere.radius", self.sphere.radius),
            ("levels.top", self.levels.top),
            ("heat.line_exponent", self.heat.line_exponent),
            ("heat.circle_exponent", self.heat.circle_exponent),
            ("heat.t_min", self.heat.t_min),
            ("admissibility.t_min", self.admissibility.t_min),
            ("admissibility.chain_exponent", self.admissibility.chain_exponent),
        ];
        if let Some((k, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return bad(format!("{k} must be positive and finite, got {v}"));
        }
        if self.heat.t_min >= self.t_max || self.admissibility.t_min >= self.t_max {
            return bad(format!("t_min values must lie below t_max = {}", self.t_max));
        }
        if self.circle.points < 16 || self.torus.points < 16 {
            return bad("grids need at least 16 points per axis".into());
        }
        if self.levels.count < 2 || self.heat.fit_points < 3 || self.admissibility.points < 3 {
            return bad("levels.count needs 2 and fit grids need 3 points at least".into());
        }
        if self.balls.levels == 0 || self.balls.circle_stride == 0 || self.balls.torus_stride == 0 {
            return bad("ball levels and strides must be at least 1".into());
        }
        if self.balls.tent_nodes == 0 {
            return bad("balls.tent_nodes must be at least 1".into());
        }
        if self.corpus.dilations.is_empty() || self.corpus.dilations.contains(&0) {
            return bad("corpus.dilations must be nonempty positive integers".into());
        }
        if self.jacobian.dilations.is_empty() || self.jacobian.dilations.contains(&0) {
            return bad("jacobian.dilations must be nonempty positive integers".into());
        }
        if self.jacobian.log_smoothing.iter().any(|d| !(*d > 0.0)) {
            return bad("jacobian.log_smoothing entries must be positive".into());
        }
        if self.maximal.probe_smoothing.iter().any(|e| !(*e > 0.0)) || self.maximal.probe_points < 16 {
            return bad("maximal probe needs positive smoothing levels and at least 16 points".into());
        }
        if let Some(name) = self.corpus.functions.iter().find(|n| crate::corpus::find(n).is_none()) {
            return bad(format!("unknown corpus function {name:?}"));
        }
        Ok(())
    }

    /// Multiplies every grid resolution by `k`.
    pub fn scaled(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.circle.points *= k;
        out.torus.points *= k;
        out.maximal.probe_points *= k;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.circle.points = 256;
        cfg.output.dir = Some("x".into());
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_sigma() {
        let e = RunConfig::from_toml("[circle]\npoints = 64\nlenght = 3.0\n").unwrap_err();
        assert!(e.to_string().contains("lenght"), "{e}");
        for text in ["sigma = 1.5", "sigma = [0.5, 1.5]"] {
            let e = RunConfig::from_toml(text).unwrap_err();
            assert!(e.to_string().contains("sigma must lie in (0,1)"), "{e}");
        }
        assert_eq!(RunConfig::from_toml("sigma = 0.5").unwrap().sigma, vec![0.5]);
        assert!(RunConfig::from_toml("quadrature_order = 2").is_err());
        assert!(RunConfig::from_toml("[corpus]\nfunctions = [\"nope\"]").is_err());
    }
}
