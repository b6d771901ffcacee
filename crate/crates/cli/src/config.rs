//! Flat `section.key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use wente_core::fem::{BoundaryArcs, RobinCoeffs};
use wente_core::glue::ThresholdPolicy;

/// Configuration problems; all map to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum GluePolicy {
    Literal,
    DeskScale,
    Prescribed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabConfig {
    /// polar tensor grid used by the spectral and modal Green solvers
    pub n_r: usize,
    pub n_theta: usize,
    pub grading: f64,
    /// concentration grid around `−e₂` used by the dense solvers
    pub conc_n_theta: usize,
    pub conc_per_octave: usize,
    pub fem_h: f64,
    /// graded meshes refine down to `fem_h_min_factor · ε_min`
    pub fem_h_min_factor: f64,
    pub r0: f64,
    pub cutoff_inner: f64,
    pub eps_max: f64,
    pub eps_min: f64,
    pub eps_steps: usize,
    pub arcs: Vec<(f64, f64)>,
    pub coeffs: Vec<(f64, f64, f64)>,
    pub cross_solver_tol: f64,
    pub verify_tol: f64,
    pub glue_depth: usize,
    pub glue_policy: GluePolicy,
    /// smallest candidate of the half-decade glue ladder starting at `eps_max`
    pub glue_eps_min: f64,
    pub out: PathBuf,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            n_r: 128,
            n_theta: 256,
            grading: 1.0,
            conc_n_theta: 64,
            conc_per_octave: 6,
            fem_h: 0.1,
            fem_h_min_factor: 0.25,
            r0: 0.5,
            cutoff_inner: 0.5,
            eps_max: 1e-1,
            eps_min: 1e-4,
            eps_steps: 7,
            arcs: vec![(-0.75 * PI, -0.25 * PI)],
            coeffs: vec![
                (1.0, 0.0, 0.0),
                (1.0, -1.0, 0.0),
                (1.0, 1.0, 0.0),
                (1.0, -1.0, 1.0),
                (1.0, 1.0, 1.0),
            ],
            cross_solver_tol: 1e-3,
            verify_tol: 1e-6,
            glue_depth: 3,
            glue_policy: GluePolicy::DeskScale,
            glue_eps_min: 1e-3,
            out: PathBuf::from("out"),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| ConfigError(format!("{key}: expected a number, got {v:?}")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| ConfigError(format!("{key}: expected a non-negative integer, got {v:?}")))
}

/// `a b; c d` or `a,b; c,d` into tuples of width `N`.
fn parse_tuples<const N: usize>(key: &str, v: &str) -> Result<Vec<[f64; N]>, ConfigError> {
    v.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let nums = item
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| parse_f64(key, s))
                .collect::<Result<Vec<_>, _>>()?;
            <[f64; N]>::try_from(nums).map_err(|_| {
                ConfigError(format!("{key}: each entry needs {N} numbers, got {item:?}"))
            })
        })
        .collect()
}

impl LabConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected key = value", n + 1));
            };
            let key = key.trim();
            if seen.insert(key.to_string(), n + 1).is_some() {
                return err(format!("line {}: duplicate key {key}", n + 1));
            }
            cfg.set(key, value.trim())
                .map_err(|e| ConfigError(format!("line {}: {}", n + 1, e.0)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "grid.n_r" => self.n_r = parse_usize(key, v)?,
            "grid.n_theta" => self.n_theta = parse_usize(key, v)?,
            "grid.grading" => self.grading = parse_f64(key, v)?,
            "concentration.n_theta" => self.conc_n_theta = parse_usize(key, v)?,
            "concentration.per_octave" => self.conc_per_octave = parse_usize(key, v)?,
            "fem.h" => self.fem_h = parse_f64(key, v)?,
            "fem.h_min_factor" => self.fem_h_min_factor = parse_f64(key, v)?,
            "bubble.r0" => self.r0 = parse_f64(key, v)?,
            "bubble.cutoff_inner" => self.cutoff_inner = parse_f64(key, v)?,
            "sweep.eps_max" => self.eps_max = parse_f64(key, v)?,
            "sweep.eps_min" => self.eps_min = parse_f64(key, v)?,
            "sweep.eps_steps" => self.eps_steps = parse_usize(key, v)?,
            "robin.arcs" => {
                self.arcs = parse_tuples::<2>(key, v)?
                    .into_iter()
                    .map(|[a, b]| (a, b))
                    .collect()
            }
            "robin.coeffs" => {
                self.coeffs = parse_tuples::<3>(key, v)?
                    .into_iter()
                    .map(|[a, b, c]| (a, b, c))
                    .collect()
            }
            "tol.cross_solver" => self.cross_solver_tol = parse_f64(key, v)?,
            "tol.verify" => self.verify_tol = parse_f64(key, v)?,
            "glue.eps_min" => self.glue_eps_min = parse_f64(key, v)?,
            "glue.depth" => self.glue_depth = parse_usize(key, v)?,
            "glue.policy" => {
                self.glue_policy = match v {
                    "literal" => GluePolicy::Literal,
                    "desk" => GluePolicy::DeskScale,
                    _ => match v.strip_prefix("prescribed:") {
                        Some(list) => GluePolicy::Prescribed(
                            list.split(',')
                                .map(|s| parse_f64(key, s))
                                .collect::<Result<_, _>>()?,
                        ),
                        None => {
                            return err(format!(
                                "{key}: expected literal, desk or prescribed:e1,e2,.."
                            ))
                        }
                    },
                }
            }
            "output.dir" => self.out = PathBuf::from(v),
            _ => return err(format!("unknown key {key}")),
        }
        Ok(())
    }

    /// `ε_max, …, ε_min`, geometric, strictly decreasing.
    pub fn ladder(&self) -> Vec<f64> {
        if self.eps_steps == 1 {
            return vec![self.eps_max];
        }
        let ratio = (self.eps_min / self.eps_max).ln() / (self.eps_steps - 1) as f64;
        (0..self.eps_steps)
            .map(|i| {
                if i + 1 == self.eps_steps {
                    self.eps_min
                } else {
                    self.eps_max * (ratio * i as f64).exp()
                }
            })
            .collect()
    }

    /// `ε_max · 10^{-k/2}` down to `glue.eps_min`.
    pub fn glue_ladder(&self) -> Vec<f64> {
        let mut ladder = vec![self.eps_max];
        while let Some(&last) = ladder.last() {
            let next = last * 10f64.powf(-0.5);
            if next < self.glue_eps_min * (1.0 - 1e-9) {
                break;
            }
            ladder.push(next);
        }
        ladder
    }

    pub fn boundary_arcs(&self) -> Result<BoundaryArcs, ConfigError> {
        BoundaryArcs::new(self.arcs.clone()).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn robin_coeffs(&self) -> Result<Vec<RobinCoeffs>, ConfigError> {
        self.coeffs
            .iter()
            .map(|&(a, b, c)| RobinCoeffs::new(a, b, c).map_err(|e| ConfigError(e.to_string())))
            .collect()
    }

    pub fn threshold_policy(&self) -> ThresholdPolicy {
        match &self.glue_policy {
            GluePolicy::Literal => ThresholdPolicy::Literal,
            GluePolicy::DeskScale => ThresholdPolicy::DeskScale {
                calibration_epsilon: 10f64.powf(-1.5),
            },
            GluePolicy::Prescribed(list) => ThresholdPolicy::Prescribed(list.clone()),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("grid.n_r", self.n_r),
            ("grid.n_theta", self.n_theta),
            ("concentration.n_theta", self.conc_n_theta),
            ("concentration.per_octave", self.conc_per_octave),
            ("sweep.eps_steps", self.eps_steps),
        ];
        for (k, v) in positive {
            if v == 0 {
                return err(format!("{k} must be positive"));
            }
        }
        for (k, v) in [
            ("fem.h", self.fem_h),
            ("fem.h_min_factor", self.fem_h_min_factor),
            ("sweep.eps_max", self.eps_max),
            ("sweep.eps_min", self.eps_min),
            ("tol.cross_solver", self.cross_solver_tol),
            ("tol.verify", self.verify_tol),
            ("bubble.r0", self.r0),
            ("bubble.cutoff_inner", self.cutoff_inner),
            ("glue.eps_min", self.glue_eps_min),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return err(format!("{k} must be positive and finite, got {v}"));
            }
        }
        if !(self.grading >= 0.0) {
            return err(format!("grid.grading must be >= 0, got {}", self.grading));
        }
        if self.eps_steps > 1 && !(self.eps_min < self.eps_max) {
            return err("the epsilon ladder must be strictly decreasing (eps_min < eps_max)");
        }
        if self.eps_max > 1.0 {
            return err(format!(
                "sweep.eps_max must be at most 1, got {}",
                self.eps_max
            ));
        }
        if self.coeffs.is_empty() {
            return err("robin.coeffs must list at least one (alpha, beta, gamma)");
        }
        self.boundary_arcs()?;
        self.robin_coeffs()?;
        if self.glue_depth > wente_core::glue::MAX_DEPTH {
            return err(format!(
                "glue.depth {} exceeds the cap {}",
                self.glue_depth,
                wente_core::glue::MAX_DEPTH
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = LabConfig::default();
        cfg.validate().unwrap();
        let ladder = cfg.ladder();
        assert_eq!(ladder.len(), 7);
        assert_eq!(ladder[0], 0.1);
        assert_eq!(ladder[6], 1e-4);
        assert!((ladder[1] - 10f64.powf(-1.5)).abs() < 1e-15);
        assert!(ladder.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn parses_dotted_keys_and_comments() {
        let cfg = LabConfig::parse(
            "# lab\ngrid.n_r = 64 # rings\nrobin.coeffs = 1,0,0; 2 -1 1\nrobin.arcs = -2,-1\nglue.policy = prescribed:0.03,0.01\n",
        )
        .unwrap();
        assert_eq!(cfg.n_r, 64);
        assert_eq!(cfg.coeffs, vec![(1.0, 0.0, 0.0), (2.0, -1.0, 1.0)]);
        assert_eq!(cfg.arcs, vec![(-2.0, -1.0)]);
        assert_eq!(cfg.glue_policy, GluePolicy::Prescribed(vec![0.03, 0.01]));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(LabConfig::parse("grid.n_r 64")
            .unwrap_err()
            .0
            .contains("line 1"));
        assert!(LabConfig::parse("nope = 1").is_err());
        assert!(LabConfig::parse("grid.n_r = 1\ngrid.n_r = 2").is_err());
        assert!(LabConfig::parse("grid.n_r = -3").is_err());
        let cfg = LabConfig::parse("tol.verify = -1").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = LabConfig::parse("sweep.eps_min = 0.5").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = LabConfig::parse("robin.coeffs = 0,0,0").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_step_ladder() {
        let cfg = LabConfig {
            eps_steps: 1,
            ..LabConfig::default()
        };
        assert_eq!(cfg.ladder(), vec![0.1]);
    }
}
