//! Game instances: initial positions, their validation, and the JSON format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorspace::{norm, Vec2l};

/// Positions closer than this are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// Initial data of a game: `m` pursuers and one evader in `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub dim: usize,
    pub evader: Vec2l,
    pub pursuers: Vec<Vec2l>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    dim: usize,
    evader: Vec<f64>,
    pursuers: Vec<Vec<f64>>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

fn shape_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.into(),
    }
}

fn checked_point(coords: Vec<f64>, dim: usize, location: String) -> Result<Vec2l> {
    if coords.len() != dim {
        return Err(shape_error(
            location,
            format!("expected {dim} coordinates, found {}", coords.len()),
        ));
    }
    Vec2l::new(coords).map_err(|e| shape_error(location, e.to_string()))
}

impl Scenario {
    /// Builds a scenario, checking arity and dimensions (not coincidence; see
    /// [`Scenario::validate`]).
    pub fn new(
        dim: usize,
        evader: Vec2l,
        pursuers: Vec<Vec2l>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Usage("dim must be positive".into()));
        }
        if pursuers.is_empty() {
            return Err(Error::Usage("at least one pursuer is required".into()));
        }
        for p in std::iter::once(&evader).chain(&pursuers) {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
        }
        if let Some(l) = &labels {
            if l.len() != pursuers.len() {
                return Err(Error::Usage(format!(
                    "{} labels for {} pursuers",
                    l.len(),
                    pursuers.len()
                )));
            }
        }
        Ok(Self {
            dim,
            evader,
            pursuers,
            labels,
        })
    }

    /// Convenience constructor from raw coordinate lists.
    pub fn from_coords(evader: &[f64], pursuers: &[&[f64]]) -> Result<Self> {
        let evader = Vec2l::new(evader.to_vec())?;
        let pursuers = pursuers
            .iter()
            .map(|p| Vec2l::new(p.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(evader.dim(), evader, pursuers, None)
    }

    pub fn num_pursuers(&self) -> usize {
        self.pursuers.len()
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => format!("P{}", i + 1),
        }
    }

    /// Derives the pursuit frame, rejecting coincident evader/pursuer pairs.
    pub fn validate(&self) -> Result<PursuitFrame> {
        PursuitFrame::new(self)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawScenario = serde_json::from_str(text).map_err(|e| {
            shape_error(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        if raw.dim == 0 {
            return Err(shape_error("dim", "must be a positive integer"));
        }
        if raw.pursuers.is_empty() {
            return Err(shape_error("pursuers", "at least one pursuer is required"));
        }
        let evader = checked_point(raw.evader, raw.dim, "evader".into())?;
        let pursuers = raw
            .pursuers
            .into_iter()
            .enumerate()
            .map(|(i, c)| checked_point(c, raw.dim, format!("pursuers[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        if let Some(l) = &raw.labels {
            if l.len() != pursuers.len() {
                return Err(shape_error(
                    "labels",
                    format!("expected {} labels, found {}", pursuers.len(), l.len()),
                ));
            }
        }
        Ok(Self {
            dim: raw.dim,
            evader,
            pursuers,
            labels: raw.labels,
        })
    }

    /// Pretty JSON; floats use the shortest representation that round-trips.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            location: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Parse { location, message } => Error::Parse {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string() + "\n").map_err(|e| Error::Parse {
            location: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Quantities fixed at `t = 0` that the pursuit strategy is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct PursuitFrame {
    pub dim: usize,
    pub evader0: Vec2l,
    pub pursuers0: Vec<Vec2l>,
    /// `y0 - x_i0`.
    pub displacements: Vec<Vec2l>,
    /// Unit directions of the displacements.
    pub directions: Vec<Vec2l>,
    /// Initial gaps `|y0 - x_i0|`.
    pub omega0: Vec<f64>,
    pub omega0_total: f64,
}

impl PursuitFrame {
    fn new(s: &Scenario) -> Result<Self> {
        let mut displacements = Vec::with_capacity(s.pursuers.len());
        let mut directions = Vec::with_capacity(s.pursuers.len());
        let mut omega0 = Vec::with_capacity(s.pursuers.len());
        for (i, x) in s.pursuers.iter().enumerate() {
            if x.dim() != s.dim || s.evader.dim() != s.dim {
                return Err(Error::DimensionMismatch {
                    expected: s.dim,
                    found: x.dim().min(s.evader.dim()),
                });
            }
            let z = &s.evader - x;
            let gap = norm(&z);
            if gap <= COINCIDENCE_TOL {
                return Err(Error::CoincidentPositions {
                    pursuer: i + 1,
                    distance: gap,
                });
            }
            directions.push(z.scale(1.0 / gap));
            displacements.push(z);
            omega0.push(gap);
        }
        let omega0_total = omega0.iter().sum();
        Ok(Self {
            dim: s.dim,
            evader0: s.evader.clone(),
            pursuers0: s.pursuers.clone(),
            displacements,
            directions,
            omega0,
            omega0_total,
        })
    }

    pub fn num_pursuers(&self) -> usize {
        self.directions.len()
    }
}
