//! Geometry of the necklace graph and piecewise functions on it.
//!
//! The graph is a chain of rings of circumference `2π` joined by horizontal
//! links of length `L`. Every point carries a global arclength coordinate
//! `x`: cell `n` owns the link `[nP, nP + L]` and the two semicircles
//! `[nP + L, (n + 1)P]`, where `P = L + π` is the period. Both semicircles
//! are oriented in the direction of increasing `x`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arc length of each semicircle.
pub const SEMICIRCLE_LENGTH: f64 = PI;

/// Geometry of the periodic graph. Only the link length is stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    link_length: f64,
}

impl GraphParams {
    pub fn new(link_length: f64) -> Result<Self> {
        if !(link_length > 0.0) || !link_length.is_finite() {
            return Err(Error::Domain(format!(
                "link length must be positive and finite, got {link_length}"
            )));
        }
        Ok(Self { link_length })
    }

    /// Link length `L`.
    #[inline]
    pub fn link(&self) -> f64 {
        self.link_length
    }

    /// Cell period `P = L + π`.
    #[inline]
    pub fn period(&self) -> f64 {
        self.link_length + SEMICIRCLE_LENGTH
    }

    /// Length of the given edge kind.
    #[inline]
    pub fn edge_length(&self, kind: EdgeKind) -> f64 {
        match kind {
            EdgeKind::Link => self.link_length,
            EdgeKind::SemicircleUpper | EdgeKind::SemicircleLower => SEMICIRCLE_LENGTH,
        }
    }

    /// Global coordinate where cell `n` starts.
    #[inline]
    pub fn cell_start(&self, cell: CellIndex) -> f64 {
        cell.0 as f64 * self.period()
    }
}

/// Cell number `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellIndex(pub i64);

impl CellIndex {
    pub fn shifted(self, by: i64) -> Self {
        CellIndex(self.0 + by)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Link,
    SemicircleUpper,
    SemicircleLower,
}

impl EdgeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeKind::Link => "link",
            EdgeKind::SemicircleUpper => "upper",
            EdgeKind::SemicircleLower => "lower",
        }
    }

    pub fn is_semicircle(&self) -> bool {
        !matches!(self, EdgeKind::Link)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeRef {
    pub cell: CellIndex,
    pub kind: EdgeKind,
}

impl EdgeRef {
    pub fn new(cell: i64, kind: EdgeKind) -> Self {
        Self {
            cell: CellIndex(cell),
            kind,
        }
    }

    /// Global coordinate of the left endpoint of the edge.
    pub fn start(&self, params: &GraphParams) -> f64 {
        match self.kind {
            EdgeKind::Link => params.cell_start(self.cell),
            _ => params.cell_start(self.cell) + params.link(),
        }
    }
}

/// Global coordinate of the point at fraction `t` along `edge`.
pub fn position_of(edge: EdgeRef, t: f64, params: &GraphParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("edge fraction t = {t} outside [0, 1]")));
    }
    Ok(edge.start(params) + t * params.edge_length(edge.kind))
}

/// Samples of `(x, φ, φ')` along one edge, with `x` strictly increasing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgeSamples {
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

impl EdgeSamples {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            x: Vec::with_capacity(n),
            phi: Vec::with_capacity(n),
            dphi: Vec::with_capacity(n),
        }
    }

    /// Samples of the zero function on `n_intervals + 1` uniform points.
    pub fn zeros(start: f64, length: f64, n_intervals: usize) -> Self {
        let x = uniform_grid(start, length, n_intervals);
        let n = x.len();
        Self {
            x,
            phi: vec![0.0; n],
            dphi: vec![0.0; n],
        }
    }

    pub fn push(&mut self, x: f64, phi: f64, dphi: f64) {
        self.x.push(x);
        self.phi.push(phi);
        self.dphi.push(dphi);
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn first(&self) -> (f64, f64) {
        (self.phi[0], self.dphi[0])
    }

    pub fn last(&self) -> (f64, f64) {
        let i = self.len() - 1;
        (self.phi[i], self.dphi[i])
    }

    pub fn sup_abs(&self) -> f64 {
        self.phi.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn check(&self, start: f64, length: f64) -> Result<()> {
        if self.len() < 2 || self.phi.len() != self.len() || self.dphi.len() != self.len() {
            return Err(Error::Domain("edge needs at least two aligned samples".into()));
        }
        if self.x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("sample abscissae must increase strictly".into()));
        }
        let tol = 1e-9 * (1.0 + start.abs() + length);
        if (self.x[0] - start).abs() > tol || (self.x[self.len() - 1] - (start + length)).abs() > tol {
            return Err(Error::Domain(format!(
                "samples [{}, {}] do not cover edge [{start}, {}]",
                self.x[0],
                self.x[self.len() - 1],
                start + length
            )));
        }
        Ok(())
    }
}

/// `n_intervals + 1` equally spaced points covering `[start, start + length]`.
pub fn uniform_grid(start: f64, length: f64, n_intervals: usize) -> Vec<f64> {
    let n = n_intervals.max(1);
    (0..=n)
        .map(|i| {
            if i == n {
                start + length
            } else {
                start + length * i as f64 / n as f64
            }
        })
        .collect()
}

/// Samples on the link and semicircles of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSamples {
    pub cell: CellIndex,
    pub link: EdgeSamples,
    pub upper: EdgeSamples,
    /// Absent when the profile is symmetric in the two semicircles; `upper`
    /// then stands for both.
    pub lower: Option<EdgeSamples>,
}

/// A function on a truncated piece of the graph, sampled edge by edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseProfile {
    pub params: GraphParams,
    pub eps: f64,
    cells: Vec<CellSamples>,
    symmetric_ring: bool,
}

impl PiecewiseProfile {
    /// Builds a profile from contiguous cells, validating coverage of every edge.
    pub fn new(params: GraphParams, eps: f64, cells: Vec<CellSamples>, symmetric_ring: bool) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Domain("profile needs at least one cell".into()));
        }
        for (i, c) in cells.iter().enumerate() {
            if i > 0 && c.cell.0 != cells[i - 1].cell.0 + 1 {
                return Err(Error::Domain("profile cells must be contiguous and ordered".into()));
            }
            if c.lower.is_some() == symmetric_ring {
                return Err(Error::Domain(
                    "lower semicircle must be present exactly when the ring is not symmetric".into(),
                ));
            }
            let link_start = params.cell_start(c.cell);
            c.link.check(link_start, params.link())?;
            c.upper.check(link_start + params.link(), SEMICIRCLE_LENGTH)?;
            if let Some(lower) = &c.lower {
                lower.check(link_start + params.link(), SEMICIRCLE_LENGTH)?;
            }
        }
        Ok(Self {
            params,
            eps,
            cells,
            symmetric_ring,
        })
    }

    /// The zero function on cells `n_min..=n_max`.
    pub fn zero(params: GraphParams, eps: f64, n_min: i64, n_max: i64, samples_per_edge: usize) -> Result<Self> {
        let cells = (n_min..=n_max)
            .map(|n| {
                let start = params.cell_start(CellIndex(n));
                CellSamples {
                    cell: CellIndex(n),
                    link: EdgeSamples::zeros(start, params.link(), samples_per_edge),
                    upper: EdgeSamples::zeros(start + params.link(), SEMICIRCLE_LENGTH, samples_per_edge),
                    lower: None,
                }
            })
            .collect();
        Self::new(params, eps, cells, true)
    }

    pub fn cells(&self) -> &[CellSamples] {
        &self.cells
    }

    pub fn symmetric_ring(&self) -> bool {
        self.symmetric_ring
    }

    pub fn n_min(&self) -> i64 {
        self.cells[0].cell.0
    }

    pub fn n_max(&self) -> i64 {
        self.cells[self.cells.len() - 1].cell.0
    }

    pub fn cell(&self, n: i64) -> Option<&CellSamples> {
        let i = n.checked_sub(self.n_min())?;
        if i < 0 {
            return None;
        }
        self.cells.get(i as usize)
    }

    /// Every stored edge together with the number of physical edges it represents.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeRef, &EdgeSamples, f64)> + '_ {
        let ring_weight = if self.symmetric_ring { 2.0 } else { 1.0 };
        self.cells.iter().flat_map(move |c| {
            let mut v = vec![
                (EdgeRef { cell: c.cell, kind: EdgeKind::Link }, &c.link, 1.0),
                (
                    EdgeRef {
                        cell: c.cell,
                        kind: EdgeKind::SemicircleUpper,
                    },
                    &c.upper,
                    ring_weight,
                ),
            ];
            if let Some(lower) = &c.lower {
                v.push((
                    EdgeRef {
                        cell: c.cell,
                        kind: EdgeKind::SemicircleLower,
                    },
                    lower,
                    1.0,
                ));
            }
            v
        })
    }

    /// Largest `|φ|` over all samples.
    pub fn sup_abs(&self) -> f64 {
        self.edges().fold(0.0_f64, |m, (_, e, _)| m.max(e.sup_abs()))
    }

    /// Smallest `φ` over all samples.
    pub fn min_value(&self) -> f64 {
        self.edges()
            .flat_map(|(_, e, _)| e.phi.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `|φ|` over the cells of the given index, if stored.
    pub fn cell_sup(&self, n: i64) -> Option<f64> {
        let c = self.cell(n)?;
        let mut m = c.link.sup_abs().max(c.upper.sup_abs());
        if let Some(l) = &c.lower {
            m = m.max(l.sup_abs());
        }
        Some(m)
    }

    pub fn cells_mut(&mut self) -> &mut [CellSamples] {
        &mut self.cells
    }
}
