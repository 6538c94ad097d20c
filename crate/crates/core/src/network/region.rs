use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

use super::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FaceSide {
    Lower,
    Upper,
}

/// A face `{x : x_axis = 0}` (lower) or `{x : x_axis = l_axis}` (upper) of the domain.
///
/// Written as `x0-`, `x0+`, `x1-`, ... in files and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Face {
    pub axis: usize,
    pub side: FaceSide,
}

impl Face {
    pub fn lower(axis: usize) -> Self {
        Self { axis, side: FaceSide::Lower }
    }

    pub fn upper(axis: usize) -> Self {
        Self { axis, side: FaceSide::Upper }
    }

    /// All `2 d` faces of a `d`-dimensional box.
    pub fn all(dim: usize) -> Vec<Face> {
        (0..dim).flat_map(|a| [Face::lower(a), Face::upper(a)]).collect()
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.side {
            FaceSide::Lower => '-',
            FaceSide::Upper => '+',
        };
        write!(f, "x{}{}", self.axis, s)
    }
}

impl FromStr for Face {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Config(format!("invalid face '{s}', expected e.g. x0- or x1+"));
        let rest = s.strip_prefix('x').ok_or_else(bad)?;
        let (axis, side) = if let Some(a) = rest.strip_suffix('-') {
            (a, FaceSide::Lower)
        } else if let Some(a) = rest.strip_suffix('+') {
            (a, FaceSide::Upper)
        } else {
            return Err(bad());
        };
        let axis = axis.parse::<usize>().map_err(|_| bad())?;
        Ok(Face { axis, side })
    }
}

impl Serialize for Face {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Face {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned cube `B_R(x)` with centre `x` and half-width `R`.
///
/// Membership is half-open, `[x_i - R, x_i + R)`, except that the upper end
/// is closed on axes where it coincides with the upper face of the domain.
/// With this convention a tiling of the domain by such boxes is a partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxRegion {
    pub center: Point,
    pub half_width: f64,
}

impl BoxRegion {
    pub fn new(center: Point, half_width: f64) -> Self {
        Self { center, half_width }
    }

    pub fn contains(&self, p: &Point, domain: &[f64], dim: usize) -> bool {
        (0..dim).all(|a| {
            let lo = self.center[a] - self.half_width;
            let hi = self.center[a] + self.half_width;
            p[a] >= lo && (p[a] < hi || (hi >= domain[a] && p[a] <= hi))
        })
    }

    /// Closed-box membership, used where boundary points must be kept.
    pub fn contains_closed(&self, p: &Point, dim: usize) -> bool {
        (0..dim).all(|a| (p[a] - self.center[a]).abs() <= self.half_width)
    }

    pub fn expanded(&self, by: f64) -> Self {
        Self { center: self.center, half_width: self.half_width + by }
    }
}

/// A subset of the domain given either geometrically or as explicit nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Subdomain {
    Box(BoxRegion),
    Nodes(Vec<usize>),
}
