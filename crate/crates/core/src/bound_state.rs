//! Bound states on the graph: assembly from homoclinic orbits, direct
//! shooting from the symmetry center, and the integral quantities.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::discrete_map::{linearized_map, linearized_map_inverse, MapState, PeriodMap, Symmetry};
use crate::error::{Error, Result};
use crate::graph::{uniform_grid, CellIndex, CellSamples, EdgeSamples, GraphParams, PiecewiseProfile, SEMICIRCLE_LENGTH};
use crate::homoclinic::{nu, shoot_homoclinic, HomoclinicOptions, Orbit};
use crate::ode::Integrator;
use crate::spectral::Matrix2;

/// Default bound on the vertex residual of an assembled profile.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// How a bound state was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    FromOrbit,
    DirectShooting,
}

/// A sampled bound state with its integral quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub profile: PiecewiseProfile,
    pub symmetry: Symmetry,
    pub eps: f64,
    /// `Λ = −ε²`.
    pub lambda: f64,
    /// Value at the symmetry center.
    pub phi0: f64,
    pub charge: f64,
    pub energy: f64,
    pub h2_norm: f64,
    pub max_kirchhoff_residual: f64,
    pub mirror_defect: f64,
    pub source: Source,
}

impl BoundState {
    fn from_profile(profile: PiecewiseProfile, symmetry: Symmetry, phi0: f64, source: Source) -> Self {
        let eps = profile.eps;
        Self {
            symmetry,
            eps,
            lambda: -eps * eps,
            phi0,
            charge: charge(&profile),
            energy: energy(&profile),
            h2_norm: h2_norm(&profile),
            max_kirchhoff_residual: kirchhoff_residual(&profile),
            mirror_defect: mirror_defect(&profile, symmetry),
            source,
            profile,
        }
    }
}

/// Options for [`assemble_profile`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    /// Intervals per edge; should be even for Simpson's rule.
    pub samples_per_edge: usize,
    pub tol: f64,
    pub residual_tol: f64,
    /// Factor relating the link flux to one semicircle flux. Only for
    /// negative controls; the vertex conditions require 2.
    #[doc(hidden)]
    pub flux_factor: f64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            samples_per_edge: 64,
            tol: 1e-12,
            residual_tol: RESIDUAL_TOL,
            flux_factor: 2.0,
        }
    }
}

fn sample_edge(it: &Integrator, a: f64, b: f64, start: f64, len: f64, n: usize) -> Result<EdgeSamples> {
    let grid = uniform_grid(0.0, len, n);
    let sol = it.solve(a, b, len, &grid[1..grid.len() - 1])?;
    let mut e = EdgeSamples::with_capacity(sol.samples.len());
    for s in &sol.samples {
        e.push(start + s.x, s.psi, s.dpsi);
    }
    Ok(e)
}

/// Integrates every edge of the orbit's cells and checks the vertex conditions.
pub fn assemble_profile(orbit: &Orbit, opts: &AssemblyOptions) -> Result<BoundState> {
    if opts.samples_per_edge < 16 {
        return Err(Error::Domain(format!("samples_per_edge must be at least 16, got {}", opts.samples_per_edge)));
    }
    let params = orbit.params;
    let it = Integrator::new(orbit.eps, opts.tol);
    let mut cells = Vec::with_capacity(orbit.mid_states.len());
    for n in orbit.n_min()..orbit.n_max() {
        let s = orbit.state(n).expect("state in range");
        let start = params.cell_start(CellIndex(n));
        let link = sample_edge(&it, s.a, s.b, start, params.link(), opts.samples_per_edge)?;
        let (c, dc) = link.last();
        let upper = sample_edge(
            &it,
            c,
            dc / opts.flux_factor,
            start + params.link(),
            SEMICIRCLE_LENGTH,
            opts.samples_per_edge,
        )?;
        cells.push(CellSamples {
            cell: CellIndex(n),
            link,
            upper,
            lower: None,
        });
    }
    let profile = PiecewiseProfile::new(params, orbit.eps, cells, true)?;
    // the last ring must also meet the orbit's final state
    let last = orbit.state(orbit.n_max()).expect("final state");
    let (pe, de) = profile.cells()[profile.cells().len() - 1].upper.last();
    let closing = (pe - last.a).abs() + (2.0 * de - last.b).abs();
    let residual = kirchhoff_residual(&profile).max(closing);
    if residual > opts.residual_tol {
        return Err(Error::Inconsistent {
            residual,
            tolerance: opts.residual_tol,
        });
    }
    let phi0 = match orbit.symmetry {
        Symmetry::LinkCentered => profile.cell(0).map(|c| c.link.phi[c.link.len() / 2]),
        Symmetry::RingCentered => profile.cell(0).map(|c| c.upper.phi[c.upper.len() / 2]),
    }
    .unwrap_or(0.0);
    let mut bs = BoundState::from_profile(profile, orbit.symmetry, phi0, Source::FromOrbit);
    bs.max_kirchhoff_residual = residual;
    Ok(bs)
}

/// Composite Simpson's rule on possibly non-uniform samples; a trailing odd
/// interval is handled by the trapezoid rule.
pub fn simpson(x: &[f64], f: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let (h0, h1) = (x[i + 1] - x[i], x[i + 2] - x[i + 1]);
        let hs = h0 + h1;
        sum += hs / 6.0
            * (f[i] * (2.0 - h1 / h0) + f[i + 1] * hs * hs / (h0 * h1) + f[i + 2] * (2.0 - h0 / h1));
        i += 2;
    }
    if i + 1 < n {
        sum += 0.5 * (x[i + 1] - x[i]) * (f[i] + f[i + 1]);
    }
    sum
}

fn integrate<F: Fn(f64, f64) -> f64>(profile: &PiecewiseProfile, g: F) -> f64 {
    profile
        .edges()
        .map(|(_, e, w)| {
            let vals: Vec<f64> = e.phi.iter().zip(&e.dphi).map(|(&p, &d)| g(p, d)).collect();
            w * simpson(&e.x, &vals)
        })
        .sum()
}

/// Mass `Q = ∫ φ²` over the stored part of the graph.
pub fn charge(profile: &PiecewiseProfile) -> f64 {
    integrate(profile, |p, _| p * p)
}

/// Energy `E = ∫ φ'² − ∫ φ⁴`.
pub fn energy(profile: &PiecewiseProfile) -> f64 {
    integrate(profile, |p, d| d * d - p.powi(4))
}

/// `∫ φ⁴`.
pub fn quartic_integral(profile: &PiecewiseProfile) -> f64 {
    integrate(profile, |p, _| p.powi(4))
}

/// `H²` norm with `φ'' = ε²φ − 2φ³` taken from the equation.
pub fn h2_norm(profile: &PiecewiseProfile) -> f64 {
    let e2 = profile.eps * profile.eps;
    integrate(profile, |p, d| {
        let dd = e2 * p - 2.0 * p.powi(3);
        p * p + d * d + dd * dd
    })
    .sqrt()
}

/// `d/ds [E((1+s)φ) + ε² Q((1+s)φ)]` at `s = 0`; vanishes at a bound state.
pub fn stationarity_defect(profile: &PiecewiseProfile) -> f64 {
    let e2 = profile.eps * profile.eps;
    integrate(profile, |p, d| 2.0 * d * d + 2.0 * e2 * p * p - 4.0 * p.powi(4))
}

/// Largest value plus flux mismatch over the interior vertices.
///
/// With a symmetric ring the stored semicircle counts twice in the flux balance.
pub fn kirchhoff_residual(profile: &PiecewiseProfile) -> f64 {
    let sym = profile.symmetric_ring();
    let ring_ends = |c: &CellSamples, at_end: bool| -> (f64, f64, f64, f64) {
        let pick = |e: &EdgeSamples| if at_end { e.last() } else { e.first() };
        let (pu, du) = pick(&c.upper);
        let (pl, dl) = match &c.lower {
            Some(l) => pick(l),
            None => (pu, du),
        };
        (pu, du, pl, dl)
    };
    let mut worst = 0.0_f64;
    let cells = profile.cells();
    for (i, c) in cells.iter().enumerate() {
        // link end into the ring
        let (p, d) = c.link.last();
        let (pu, du, pl, dl) = ring_ends(c, false);
        let flux = if sym { 2.0 * du } else { du + dl };
        worst = worst.max((p - pu).abs().max((p - pl).abs()) + (d - flux).abs());
        // ring end into the next link
        if let Some(next) = cells.get(i + 1) {
            let (p, d) = next.link.first();
            let (pu, du, pl, dl) = ring_ends(c, true);
            let flux = if sym { 2.0 * du } else { du + dl };
            worst = worst.max((p - pu).abs().max((p - pl).abs()) + (d - flux).abs());
        }
    }
    worst
}

/// Largest `|φ(c + y) − φ(c − y)|` over mirrored sample pairs, `c` the
/// symmetry center in cell 0.
pub fn mirror_defect(profile: &PiecewiseProfile, symmetry: Symmetry) -> f64 {
    let mut worst = 0.0_f64;
    let cmp = |a: &EdgeSamples, b: &EdgeSamples| -> f64 {
        if a.len() != b.len() {
            return f64::INFINITY;
        }
        let m = a.len();
        (0..m).map(|i| (a.phi[i] - b.phi[m - 1 - i]).abs()).fold(0.0, f64::max)
    };
    for c in profile.cells() {
        let n = c.cell.0;
        let (link_partner, ring_partner) = match symmetry {
            Symmetry::LinkCentered => (-n, -n - 1),
            Symmetry::RingCentered => (1 - n, -n),
        };
        if let Some(o) = profile.cell(link_partner) {
            worst = worst.max(cmp(&c.link, &o.link));
        }
        if let Some(o) = profile.cell(ring_partner) {
            worst = worst.max(cmp(&c.upper, &o.upper));
        }
    }
    worst
}

/// Largest difference of `φ` between two profiles on their common cells.
pub fn profile_sup_difference(p: &PiecewiseProfile, q: &PiecewiseProfile) -> f64 {
    let mut worst = 0.0_f64;
    for c in p.cells() {
        if let Some(o) = q.cell(c.cell.0) {
            for (a, b) in [(&c.link, &o.link), (&c.upper, &o.upper)] {
                if a.len() != b.len() {
                    return f64::INFINITY;
                }
                for i in 0..a.len() {
                    worst = worst.max((a.phi[i] - b.phi[i]).abs());
                }
            }
        }
    }
    worst
}

/// Options for [`shoot_bound_state`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingOptions {
    /// Bracket for the central value; `None` uses `[ε/2, 2ε]`.
    pub phi0_bracket: Option<(f64, f64)>,
    /// Cell budget on each side; `None` uses `max(3, ceil(30/(εν)))`.
    pub n_cells: Option<usize>,
    pub tol: f64,
    pub samples_per_edge: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            phi0_bracket: None,
            n_cells: None,
            tol: 1e-12,
            samples_per_edge: 64,
        }
    }
}

/// Default cell budget for shooting at the given `ε`.
pub fn default_n_cells(eps: f64, params: &GraphParams) -> usize {
    ((30.0 / (eps * nu(params))).ceil() as usize).max(3)
}

/// Amplitude, relative to `ε`, below which the tail is treated as linear.
const LINEAR_REGIME: f64 = 1e-3;
/// Agreement, relative to ε, of vertex values at both ends of the final bracket.
const TRUST: f64 = 1e-10;

/// Decomposition of vertex data along the stable and unstable directions of
/// the linearized map.
struct Splitting {
    v_plus: [f64; 2],
    v_minus: [f64; 2],
    lambda_minus: f64,
}

impl Splitting {
    fn new(eps: f64, params: &GraphParams) -> Result<Self> {
        let m: Matrix2 = linearized_map(eps, params);
        let (_, lp) = m.real_eigenvalues().ok_or(Error::Degenerate(m.trace() / 2.0, m.trace() / 2.0))?;
        // the map preserves area, and the determinant suffers cancellation when ε is large
        let lm = 1.0 / lp;
        if lp <= lm {
            return Err(Error::Degenerate(lm, lp));
        }
        // the stable direction is dominant for the inverse
        let inv = linearized_map_inverse(eps, params);
        let mut v_plus = m.eigenvector(lp);
        let mut v_minus = inv.eigenvector(lp);
        if v_plus[0] < 0.0 {
            v_plus = [-v_plus[0], -v_plus[1]];
        }
        if v_minus[0] < 0.0 {
            v_minus = [-v_minus[0], -v_minus[1]];
        }
        Ok(Self {
            v_plus,
            v_minus,
            lambda_minus: lm,
        })
    }

    /// Coefficients `(u, s)` with `x = u v₊ + s v₋`.
    fn split(&self, x: MapState) -> (f64, f64) {
        let det = self.v_plus[0] * self.v_minus[1] - self.v_plus[1] * self.v_minus[0];
        let u = (x.a * self.v_minus[1] - x.b * self.v_minus[0]) / det;
        let s = (self.v_plus[0] * x.b - self.v_plus[1] * x.a) / det;
        (u, s)
    }
}

/// Outcome of one trial central value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    TooSmall,
    TooLarge,
    Exact,
}

struct Shooter {
    params: GraphParams,
    symmetry: Symmetry,
    it: Integrator,
    split: Splitting,
    n_cells: usize,
    n_intervals: usize,
}

/// Right half of a trajectory: the half edge leaving the center, then the
/// remaining edges in order.
struct Trajectory {
    center_half: EdgeSamples,
    edges: Vec<EdgeSamples>,
}

impl Shooter {
    fn linear_threshold(&self) -> f64 {
        LINEAR_REGIME * self.it.eps
    }

    fn grids(&self) -> (f64, Vec<f64>, Vec<f64>, Vec<f64>) {
        let l = self.params.link();
        let half_len = match self.symmetry {
            Symmetry::LinkCentered => 0.5 * l,
            Symmetry::RingCentered => 0.5 * PI,
        };
        let half_grid: Vec<f64> = uniform_grid(0.0, 2.0 * half_len, self.n_intervals)
            .into_iter()
            .filter(|&t| t > half_len && t < 2.0 * half_len)
            .map(|t| t - half_len)
            .collect();
        let inner = |len: f64| {
            let g = uniform_grid(0.0, len, self.n_intervals);
            g[1..g.len() - 1].to_vec()
        };
        (half_len, half_grid, inner(l), inner(PI))
    }

    fn edge(&self, a: f64, b: f64, start: f64, len: f64, at: &[f64]) -> Result<EdgeSamples> {
        let sol = self.it.solve(a, b, len, at)?;
        let mut e = EdgeSamples::with_capacity(sol.samples.len());
        for s in &sol.samples {
            e.push(start + s.x, s.psi, s.dpsi);
        }
        Ok(e)
    }

    /// Edge on `[start, start + len]` integrated backwards from its right end.
    fn edge_backward(&self, a: f64, b: f64, start: f64, len: f64, at: &[f64]) -> Result<EdgeSamples> {
        let rev: Vec<f64> = at.iter().rev().map(|&t| len - t).collect();
        let sol = self.it.solve(a, -b, len, &rev)?;
        let mut e = EdgeSamples::with_capacity(sol.samples.len());
        for s in sol.samples.iter().rev() {
            e.push(start + len - s.x, s.psi, -s.dpsi);
        }
        Ok(e)
    }

    /// Cell `n` obtained backwards from the state `x` at vertex `n + 1`.
    fn cell_backward(&self, n: i64, x: MapState, link_grid: &[f64], ring_grid: &[f64]) -> Result<(EdgeSamples, EdgeSamples)> {
        let p = self.params;
        let start = p.cell_start(CellIndex(n));
        let ring = self.edge_backward(x.a, 0.5 * x.b, start + p.link(), PI, ring_grid)?;
        let (c, dc) = ring.first();
        let link = self.edge_backward(c, 2.0 * dc, start, p.link(), link_grid)?;
        Ok((link, ring))
    }

    /// Marches outward from the center and stops at the first decisive
    /// event. Without a verdict the trajectory stops at the first vertex in
    /// the linear regime, whose index is returned with the vertex states.
    fn march(&self, phi0: f64, record: bool) -> Result<(Option<Shot>, Trajectory, Vec<MapState>)> {
        let p = self.params;
        let l = p.link();
        let center = self.symmetry.center(&p);
        let (half_len, half_grid, link_grid, ring_grid) = self.grids();
        let convex = self.it.eps * FRAC_1_SQRT_2;
        // first event along an edge, in order of x
        let scan = |e: &EdgeSamples| -> Option<Shot> {
            if record {
                return None;
            }
            for (&v, &dv) in e.phi[1..].iter().zip(&e.dphi[1..]) {
                if v < 0.0 {
                    return Some(Shot::TooLarge);
                }
                // a positive profile below ε/√2 is convex, so once rising it never decays
                if v > phi0 || (dv > 0.0 && v < convex) {
                    return Some(Shot::TooSmall);
                }
            }
            None
        };

        let mut traj = Trajectory {
            center_half: self.edge(phi0, 0.0, center, half_len, &half_grid)?,
            edges: Vec::new(),
        };
        // vertices[i] is the state at vertex i + 1
        let mut vertices = Vec::new();
        if let Some(s) = scan(&traj.center_half) {
            return Ok((Some(s), traj, vertices));
        }
        let mut x = {
            let (v, d) = traj.center_half.last();
            match self.symmetry {
                Symmetry::LinkCentered => {
                    let ring = self.edge(v, 0.5 * d, l, PI, &ring_grid)?;
                    if let Some(s) = scan(&ring) {
                        return Ok((Some(s), traj, vertices));
                    }
                    let (a, da) = ring.last();
                    traj.edges.push(ring);
                    MapState::new(a, 2.0 * da)
                }
                Symmetry::RingCentered => MapState::new(v, 2.0 * d),
            }
        };
        let mut prev = phi0;
        for n in 1..=self.n_cells as i64 {
            vertices.push(x);
            if x.a >= prev && !record {
                return Ok((Some(Shot::TooSmall), traj, vertices));
            }
            if x.a.abs() <= self.linear_threshold() {
                if record {
                    return Ok((None, traj, vertices));
                }
                let (u, _) = self.split.split(x);
                let shot = if u > 0.0 {
                    Shot::TooSmall
                } else if u < 0.0 {
                    Shot::TooLarge
                } else {
                    Shot::Exact
                };
                return Ok((Some(shot), traj, vertices));
            }
            prev = x.a;
            let start = p.cell_start(CellIndex(n));
            let link = self.edge(x.a, x.b, start, l, &link_grid)?;
            if let Some(s) = scan(&link) {
                return Ok((Some(s), traj, vertices));
            }
            let (c, dc) = link.last();
            let ring = self.edge(c, 0.5 * dc, start + l, PI, &ring_grid)?;
            if let Some(s) = scan(&ring) {
                return Ok((Some(s), traj, vertices));
            }
            let (a, da) = ring.last();
            x = MapState::new(a, 2.0 * da);
            traj.edges.push(link);
            traj.edges.push(ring);
        }
        if record {
            Ok((None, traj, vertices))
        } else {
            Err(Error::Undecidable {
                phi0,
                n_cells: self.n_cells,
            })
        }
    }

    /// Amplitude `s` of the stable state `s v₋` whose backward image `left(s)`
    /// takes the value `target`.
    fn stable_amplitude<F>(&self, target: f64, left: F) -> Result<f64>
    where
        F: Fn(MapState) -> Result<f64>,
    {
        let v = self.split.v_minus;
        let f = |s: f64| -> Result<f64> { Ok(left(MapState::new(s * v[0], s * v[1]))? - target) };
        if target == 0.0 {
            return Ok(0.0);
        }
        // the backward map is close to linear in s
        let probe = target * self.split.lambda_minus;
        let s0 = probe * target / (f(probe)? + target);
        let (mut lo, mut hi) = (0.5 * s0, 2.0 * s0);
        let (mut flo, mut fhi) = (f(lo)?, f(hi)?);
        for _ in 0..60 {
            if flo * fhi <= 0.0 {
                break;
            }
            if flo.abs() < fhi.abs() {
                lo *= 0.5;
                flo = f(lo)?;
            } else {
                hi *= 2.0;
                fhi = f(hi)?;
            }
        }
        crate::roots::illinois(f, lo, hi, 1e-14 * s0.abs(), 200)
    }

    fn on_stable(&self, s: f64) -> MapState {
        MapState::new(s * self.split.v_minus[0], s * self.split.v_minus[1])
    }

    /// Cell `n` on the stable manifold, integrated backwards from vertex `n + 1`
    /// and taking the value `target` at vertex `n`.
    fn tail_cell(&self, n: i64, target: f64, link_grid: &[f64], ring_grid: &[f64]) -> Result<(EdgeSamples, EdgeSamples)> {
        let s = self.stable_amplitude(target, |x| Ok(self.cell_backward(n, x, link_grid, ring_grid)?.0.first().0))?;
        self.cell_backward(n, self.on_stable(s), link_grid, ring_grid)
    }

    /// Ring of cell `n` on the stable manifold, integrated backwards from vertex
    /// `n + 1` and taking the value `target` at its start.
    fn tail_ring(&self, n: i64, target: f64, ring_grid: &[f64]) -> Result<EdgeSamples> {
        let start = self.params.cell_start(CellIndex(n)) + self.params.link();
        let ring = |x: MapState| self.edge_backward(x.a, 0.5 * x.b, start, PI, ring_grid);
        let s = self.stable_amplitude(target, |x| Ok(ring(x)?.first().0))?;
        ring(self.on_stable(s))
    }

    /// Full trajectory through `n_cells` cells from the central value `lo`,
    /// with `hi` the other end of the final bisection bracket. Vertex values on
    /// which both ends agree are kept up to the first one in the linear regime.
    /// From there on every cell lies on the stable manifold and is integrated
    /// backwards into its left vertex, its amplitude fixed by continuity.
    fn record(&self, lo: f64, hi: f64) -> Result<Trajectory> {
        let (_, mut traj, vertices) = self.march(lo, true)?;
        let (_, _, other) = self.march(hi, true)?;
        let trusted = vertices
            .iter()
            .zip(&other)
            .take_while(|(x, y)| (x.a - y.a).abs() <= TRUST * self.it.eps)
            .count();
        let n_lin = vertices
            .iter()
            .take(trusted)
            .position(|x| x.a.abs() <= self.linear_threshold())
            .map(|i| i + 1);
        if n_lin.is_none() && trusted == vertices.len() && vertices.len() == self.n_cells {
            return Ok(traj);
        }
        let m = n_lin.unwrap_or(trusted).max(1);
        let (_, _, link_grid, ring_grid) = self.grids();
        // the junction is the start of the ring before vertex m, where the
        // forward solution is more accurate than at the vertex itself
        let ring_index = |n: usize| match self.symmetry {
            Symmetry::LinkCentered => Some(2 * n),
            Symmetry::RingCentered => (n >= 1).then(|| 2 * n - 1),
        };
        let mut target = match ring_index(m - 1) {
            Some(i) => {
                let c = traj.edges[i].first().0;
                traj.edges.truncate(i);
                let ring = self.tail_ring(m as i64 - 1, c, &ring_grid)?;
                let a = ring.last().0;
                traj.edges.push(ring);
                a
            }
            None => {
                traj.edges.truncate(2 * (m - 1));
                vertices[m - 1].a
            }
        };
        for n in m..=self.n_cells {
            let (link, ring) = self.tail_cell(n as i64, target, &link_grid, &ring_grid)?;
            target = ring.last().0;
            traj.edges.push(link);
            traj.edges.push(ring);
        }
        Ok(traj)
    }

    fn classify(&self, phi0: f64) -> Result<Shot> {
        Ok(self.march(phi0, false)?.0.expect("classification ends with a verdict"))
    }
}

fn mirror_edge(e: &EdgeSamples, center: f64) -> EdgeSamples {
    let mut out = EdgeSamples::with_capacity(e.len());
    for i in (0..e.len()).rev() {
        out.push(2.0 * center - e.x[i], e.phi[i], -e.dphi[i]);
    }
    out
}

fn join(left: &EdgeSamples, right: &EdgeSamples) -> EdgeSamples {
    let mut out = left.clone();
    // the center sample appears in both halves
    for i in 1..right.len() {
        out.push(right.x[i], right.phi[i], right.dphi[i]);
    }
    out
}

/// Finds a bound state at `Λ < 0` by bisection on the central value.
pub fn shoot_bound_state(lambda: f64, params: &GraphParams, symmetry: Symmetry, opts: &ShootingOptions) -> Result<BoundState> {
    if !(lambda < 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be negative, got {lambda}")));
    }
    if opts.samples_per_edge < 16 || opts.samples_per_edge % 2 != 0 {
        return Err(Error::Domain(format!(
            "samples_per_edge must be even and at least 16, got {}",
            opts.samples_per_edge
        )));
    }
    let eps = (-lambda).sqrt();
    let shooter = Shooter {
        params: *params,
        symmetry,
        it: Integrator::new(eps, opts.tol),
        split: Splitting::new(eps, params)?,
        n_cells: opts.n_cells.unwrap_or_else(|| default_n_cells(eps, params)),
        n_intervals: opts.samples_per_edge,
    };
    let (mut lo, mut hi) = opts.phi0_bracket.unwrap_or((0.5 * eps, 2.0 * eps));
    let (clo, chi) = (shooter.classify(lo)?, shooter.classify(hi)?);
    if clo != Shot::TooSmall || chi != Shot::TooLarge {
        return Err(Error::NotBracketed {
            lo,
            hi,
            context: format!("central value of the {} bound state ({clo:?}, {chi:?})", symmetry.as_str()),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shooter.classify(mid)? {
            Shot::TooSmall => lo = mid,
            Shot::TooLarge => hi = mid,
            Shot::Exact => {
                (lo, hi) = (mid, mid);
                break;
            }
        }
    }

    let traj = shooter.record(lo, hi)?;
    let phi0 = lo;
    let center = symmetry.center(params);
    let half = &traj.center_half;
    let whole = join(&mirror_edge(half, center), half);
    let k = shooter.n_cells as i64;
    let e = &traj.edges;
    let mut cells = Vec::new();
    let mut push = |m: i64, link: EdgeSamples, upper: EdgeSamples| {
        cells.push(CellSamples {
            cell: CellIndex(m),
            link,
            upper,
            lower: None,
        })
    };
    match symmetry {
        Symmetry::LinkCentered => {
            // edges: ring 0, link 1, ring 1, ...; link n ↔ link −n, ring n ↔ ring −n−1
            let link = |m: i64| &e[2 * m as usize - 1];
            let ring = |m: i64| &e[2 * m as usize];
            for m in -k..=k {
                let l = match m {
                    0 => whole.clone(),
                    m if m > 0 => link(m).clone(),
                    m => mirror_edge(link(-m), center),
                };
                let r = if m >= 0 { ring(m).clone() } else { mirror_edge(ring(-m - 1), center) };
                push(m, l, r);
            }
        }
        Symmetry::RingCentered => {
            // edges: link 1, ring 1, link 2, ...; link n ↔ link 1−n, ring n ↔ ring −n
            let link = |m: i64| &e[2 * (m as usize - 1)];
            let ring = |m: i64| &e[2 * m as usize - 1];
            for m in (1 - k)..=k {
                let l = if m >= 1 { link(m).clone() } else { mirror_edge(link(1 - m), center) };
                let r = match m {
                    0 => whole.clone(),
                    m if m > 0 => ring(m).clone(),
                    m => mirror_edge(ring(-m), center),
                };
                push(m, l, r);
            }
        }
    }
    let profile = PiecewiseProfile::new(*params, eps, cells, true)?;
    Ok(BoundState::from_profile(profile, symmetry, phi0, Source::DirectShooting))
}

/// Mass expansion evaluated on an orbit:
/// `ε² Σ (L α² + 2π γ²) + ε³ Σ (L² αβ + 2π² γδ)`.
pub fn mass_expansion(orbit: &Orbit) -> f64 {
    let eps = orbit.eps;
    let l = orbit.params.link();
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    for n in orbit.n_min()..orbit.n_max() {
        let a = orbit.state(n).expect("state").scaled(eps);
        let c = orbit.mid(n).expect("mid").scaled(eps);
        s2 += l * a.alpha * a.alpha + 2.0 * PI * c.alpha * c.alpha;
        s3 += l * l * a.alpha * a.beta + 2.0 * PI * PI * c.alpha * c.beta;
    }
    eps * eps * s2 + eps.powi(3) * s3
}

/// The same mass expressed in cell-start data only:
/// `(L+2π) ε² Σ α² + (L² − π²) ε³ Σ αβ`.
pub fn mass_expression(orbit: &Orbit) -> f64 {
    let eps = orbit.eps;
    let l = orbit.params.link();
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    for n in orbit.n_min()..orbit.n_max() {
        let a = orbit.state(n).expect("state").scaled(eps);
        s2 += a.alpha * a.alpha;
        s3 += a.alpha * a.beta;
    }
    (l + 2.0 * PI) * eps * eps * s2 + (l * l - PI * PI) * eps.powi(3) * s3
}

/// Masses and energies of the two families at one `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyComparison {
    pub eps: f64,
    pub q_link: f64,
    pub q_ring: f64,
    pub e_link: f64,
    pub e_ring: f64,
    /// `|Q_link − Q_ring| / Q_link`.
    pub dq_rel: f64,
}

/// Runs both families end to end and compares their masses and energies.
pub fn compare_families(eps: f64, params: &GraphParams, assembly: &AssemblyOptions) -> Result<FamilyComparison> {
    let map = PeriodMap::new(eps, *params);
    let link = assemble_profile(&shoot_homoclinic(&map, Symmetry::LinkCentered, &HomoclinicOptions::default())?, assembly)?;
    let ring = assemble_profile(&shoot_homoclinic(&map, Symmetry::RingCentered, &HomoclinicOptions::default())?, assembly)?;
    Ok(FamilyComparison {
        eps,
        q_link: link.charge,
        q_ring: ring.charge,
        e_link: link.energy,
        e_ring: ring.energy,
        dq_rel: (link.charge - ring.charge).abs() / link.charge,
    })
}
