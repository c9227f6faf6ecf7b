//! Discretization presets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::euler::RoeOptions;
use crate::lsq::FitOrder;

/// Face-state interpolation family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Fang,
    Cang,
    Ngqi,
    /// Linearity-preserving UMUSCL around the FANG state; boundary faces use FANG.
    LpUmuscl { kappa: f64 },
}

/// A complete spatial and temporal scheme selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scheme {
    pub interpolation: Interpolation,
    pub gradient: FitOrder,
    /// Adds the curvature correction to the face flux and the source average.
    pub flux_correction: bool,
    /// Applies the inverse mass matrix to the time derivative.
    pub mass_matrix: bool,
    pub roe: RoeOptions,
}

impl Scheme {
    pub fn new(interpolation: Interpolation, gradient: FitOrder) -> Self {
        Scheme {
            interpolation,
            gradient,
            flux_correction: false,
            mass_matrix: false,
            roe: RoeOptions::default(),
        }
    }

    pub fn fang1() -> Self {
        Scheme::new(Interpolation::LpUmuscl { kappa: 1.0 / 3.0 }, FitOrder::Linear)
    }

    pub fn fang2() -> Self {
        Scheme::new(Interpolation::LpUmuscl { kappa: 1.0 / 3.0 }, FitOrder::Quadratic)
    }

    pub fn ngqi1() -> Self {
        Scheme::new(Interpolation::Ngqi, FitOrder::Linear)
    }

    pub fn ngqi2() -> Self {
        Scheme::new(Interpolation::Ngqi, FitOrder::Quadratic)
    }

    pub fn ngqi2_fc() -> Self {
        Scheme {
            flux_correction: true,
            ..Scheme::ngqi2()
        }
    }

    pub fn with_mass_matrix(self) -> Self {
        Scheme {
            mass_matrix: true,
            ..self
        }
    }

    /// Whether nodal recovery and the correction node states use the
    /// quadratic formula.
    pub fn is_quadratic_interpolation(&self) -> bool {
        matches!(self.interpolation, Interpolation::Ngqi)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order = match self.gradient {
            FitOrder::Linear => 1,
            FitOrder::Quadratic => 2,
        };
        match self.interpolation {
            Interpolation::Fang | Interpolation::LpUmuscl { .. } => write!(f, "FANG({order})")?,
            Interpolation::Cang => write!(f, "CANG({order})")?,
            Interpolation::Ngqi => write!(f, "NGQI({order})")?,
        }
        if self.flux_correction {
            f.write_str("+FC")?;
        }
        if self.mass_matrix {
            f.write_str("+M")?;
        }
        Ok(())
    }
}

impl FromStr for Scheme {
    type Err = String;

    /// Accepts `fang1`, `fang2`, `cang1`, `cang2`, `ngqi1`, `ngqi2` with
    /// optional `+fc` and `+m` suffixes; `FANG(1)` style spellings work too.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '(' | ')' | ' '))
            .collect();
        let mut parts = norm.split('+');
        let base = parts.next().unwrap_or_default();
        let mut scheme = match base {
            "fang1" => Scheme::fang1(),
            "fang2" => Scheme::fang2(),
            "cang" | "cang2" => Scheme::new(Interpolation::Cang, FitOrder::Quadratic),
            "cang1" => Scheme::new(Interpolation::Cang, FitOrder::Linear),
            "ngqi1" => Scheme::ngqi1(),
            "ngqi2" => Scheme::ngqi2(),
            _ => {
                return Err(format!(
                    "unknown scheme `{s}`; expected fang1, fang2, cang, ngqi1, ngqi2 with optional +fc / +m"
                ))
            }
        };
        for p in parts {
            match p {
                "fc" => scheme.flux_correction = true,
                "m" => scheme.mass_matrix = true,
                _ => return Err(format!("unknown scheme modifier `+{p}` in `{s}`")),
            }
        }
        Ok(scheme)
    }
}
