//! Linear spectrum of `-∂ₓ²` on the necklace graph.
//!
//! Eigenfunctions symmetric in the two semicircles are governed by the
//! monodromy matrix `M(ω)` of the period map on `(cos, sin)` coefficients,
//! `λ = ω²`; a band is an interval where `|tr M(ω)| ≤ 2`. Antisymmetric
//! eigenfunctions live on single rings and produce the flat bands `λ = m²`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CellIndex, CellSamples, EdgeSamples, GraphParams, PiecewiseProfile, SEMICIRCLE_LENGTH};
use crate::roots::{bisect, golden_min};

/// Tolerance, in ω, to which band edges are refined.
pub const EDGE_TOL: f64 = 1e-10;

/// `|T| - 2` values above this (in magnitude) are not treated as touchings.
const TOUCH_TOL: f64 = 1e-9;

/// Real 2×2 matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Matrix2 {
    pub const IDENTITY: Matrix2 = Matrix2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn mul(&self, rhs: &Matrix2) -> Matrix2 {
        Matrix2::new(
            self.m11 * rhs.m11 + self.m12 * rhs.m21,
            self.m11 * rhs.m12 + self.m12 * rhs.m22,
            self.m21 * rhs.m11 + self.m22 * rhs.m21,
            self.m21 * rhs.m12 + self.m22 * rhs.m22,
        )
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.m11 * v[0] + self.m12 * v[1], self.m21 * v[0] + self.m22 * v[1]]
    }

    /// Real eigenvalues in increasing order, or `None` for a complex pair.
    pub fn real_eigenvalues(&self) -> Option<(f64, f64)> {
        let t = self.trace();
        let disc = t * t - 4.0 * self.det();
        if disc < 0.0 {
            return None;
        }
        let r = disc.sqrt();
        // avoid cancellation in the smaller root
        let big = 0.5 * (t + t.signum() * r);
        let small = if big != 0.0 { self.det() / big } else { 0.0 };
        Some(if big > small { (small, big) } else { (big, small) })
    }

    /// Unit eigenvector for the real eigenvalue `lambda`.
    pub fn eigenvector(&self, lambda: f64) -> [f64; 2] {
        // rows of (M - λI) are orthogonal to the eigenvector; use the larger row
        let r1 = [self.m11 - lambda, self.m12];
        let r2 = [self.m21, self.m22 - lambda];
        let n1 = r1[0].hypot(r1[1]);
        let n2 = r2[0].hypot(r2[1]);
        let v = if n1 >= n2 { [-r1[1], r1[0]] } else { [-r2[1], r2[0]] };
        let n = v[0].hypot(v[1]);
        if n == 0.0 {
            return [1.0, 0.0];
        }
        [v[0] / n, v[1] / n]
    }
}

/// Monodromy matrix of the symmetric-reduction linear map at frequency `ω > 0`.
pub fn monodromy_matrix(omega: f64, params: &GraphParams) -> Result<Matrix2> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "monodromy_matrix needs omega > 0 (got {omega}); use monodromy_limit_at_zero"
        )));
    }
    let (sp, cp) = (omega * PI).sin_cos();
    let (sl, cl) = (omega * params.link()).sin_cos();
    let ring = Matrix2::new(cp, sp, -2.0 * sp, 2.0 * cp);
    let link = Matrix2::new(cl, sl, -0.5 * sl, 0.5 * cl);
    Ok(ring.mul(&link))
}

/// Limit of the monodromy matrix as `ω → 0⁺`.
pub fn monodromy_limit_at_zero() -> Matrix2 {
    Matrix2::new(1.0, 0.0, 0.0, 2.0).mul(&Matrix2::new(1.0, 0.0, 0.0, 0.5))
}

/// Trace `T(ω) = 2 cos(ωπ) cos(ωL) − (5/2) sin(ωπ) sin(ωL)`.
pub fn trace(omega: f64, params: &GraphParams) -> f64 {
    let (sp, cp) = (omega * PI).sin_cos();
    let (sl, cl) = (omega * params.link()).sin_cos();
    2.0 * cp * cl - 2.5 * sp * sl
}

/// Trace continued to imaginary frequency `ω = iε`.
pub fn trace_hyperbolic(eps: f64, params: &GraphParams) -> f64 {
    let (a, b) = (eps * PI, eps * params.link());
    2.0 * a.cosh() * b.cosh() + 2.5 * a.sinh() * b.sinh()
}

/// `ν² = (L + π/2)(L + 2π)`, the curvature of `T` at the bottom of the spectrum.
pub fn band_edge_curvature(params: &GraphParams) -> f64 {
    let l = params.link();
    (l + 0.5 * PI) * (l + 2.0 * PI)
}

/// A spectral band `[ω_lo, ω_hi]`, with `λ = ω²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    /// One-based band number.
    pub index: usize,
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    /// The lower edge is shared with the previous band (no gap).
    pub touches_below: bool,
}

impl Band {
    fn new(index: usize, lo: f64, hi: f64, touches_below: bool) -> Self {
        Self {
            index,
            omega_lo: lo,
            omega_hi: hi,
            lambda_lo: lo * lo,
            lambda_hi: hi * hi,
            touches_below,
        }
    }

    pub fn contains_omega(&self, omega: f64, tol: f64) -> bool {
        omega >= self.omega_lo - tol && omega <= self.omega_hi + tol
    }
}

fn gap_fn(omega: f64, params: &GraphParams) -> f64 {
    trace(omega, params).abs() - 2.0
}

/// Bands of `|T(ω)| ≤ 2` on `[0, omega_max]`.
///
/// Edges are bracketed on a uniform grid and bisected to [`EDGE_TOL`].
/// Points where `|T|` touches 2 tangentially are found by a three-point test
/// on the grid; a touching from inside splits a band with no gap, a touching
/// from outside yields a zero-width band.
pub fn find_bands(params: &GraphParams, omega_max: f64, grid_points: usize) -> Result<Vec<Band>> {
    if !(omega_max > 0.0) {
        return Err(Error::Domain(format!("omega_max must be positive, got {omega_max}")));
    }
    if grid_points < 100 {
        return Err(Error::Domain(format!("grid_points must be at least 100, got {grid_points}")));
    }
    let h = omega_max / grid_points as f64;
    let omegas: Vec<f64> = (0..=grid_points).map(|i| i as f64 * h).collect();
    let g: Vec<f64> = omegas.iter().map(|&w| gap_fn(w, params)).collect();
    let inside = |v: f64| v <= 0.0;
    let refine = |lo: f64, hi: f64| bisect(|w| Ok(gap_fn(w, params)), lo, hi, EDGE_TOL, 200);

    // boundaries: (omega, entering_band)
    let mut edges: Vec<(f64, bool)> = Vec::new();
    if inside(g[0]) {
        edges.push((0.0, true));
    }
    for i in 0..grid_points {
        if inside(g[i]) != inside(g[i + 1]) {
            let w = refine(omegas[i], omegas[i + 1])?;
            edges.push((w, !inside(g[i])));
        }
    }

    // tangential contacts the sign scan cannot see
    let mut touch_inside: Vec<f64> = Vec::new();
    let mut isolated: Vec<f64> = Vec::new();
    for i in 1..grid_points {
        let (a, b, c) = (g[i - 1], g[i], g[i + 1]);
        let all_in = inside(a) && inside(b) && inside(c);
        let all_out = !inside(a) && !inside(b) && !inside(c);
        if all_in && b >= a && b > c {
            let (w, gm) = golden_min(|w| -gap_fn(w, params), omegas[i - 1], omegas[i + 1], EDGE_TOL);
            let gmax = -gm;
            if gmax >= -TOUCH_TOL {
                if gmax > TOUCH_TOL {
                    return Err(Error::GridTooCoarse { omega: w, grid_points });
                }
                touch_inside.push(w);
            }
        } else if all_out && b <= a && b < c {
            let (w, gmin) = golden_min(|w| gap_fn(w, params), omegas[i - 1], omegas[i + 1], EDGE_TOL);
            if gmin <= TOUCH_TOL {
                if gmin < -TOUCH_TOL {
                    return Err(Error::GridTooCoarse { omega: w, grid_points });
                }
                isolated.push(w);
            }
        }
    }

    // assemble raw intervals
    let mut raw: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    for (w, entering) in edges {
        if entering {
            open = Some(w);
        } else if let Some(lo) = open.take() {
            raw.push((lo, w));
        }
    }
    if let Some(lo) = open {
        raw.push((lo, omega_max));
    }
    for w in isolated {
        raw.push((w, w));
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));

    // a gap narrower than a few edge tolerances is a touching rounded into a sign flip
    let mut bands: Vec<(f64, f64, bool)> = Vec::new();
    for (lo, hi) in raw {
        if let Some(last) = bands.last_mut() {
            if lo - last.1 < 10.0 * EDGE_TOL && hi - lo > 10.0 * EDGE_TOL && last.1 - last.0 > 10.0 * EDGE_TOL {
                let mid = 0.5 * (lo + last.1);
                last.1 = mid;
                bands.push((mid, hi, true));
                continue;
            }
            if hi - lo <= 10.0 * EDGE_TOL && lo - last.1 < 10.0 * EDGE_TOL {
                // sliver produced by rounding at a touching point
                continue;
            }
        }
        bands.push((lo, hi, false));
    }

    // split at interior touchings
    for w in touch_inside {
        if let Some(pos) = bands
            .iter()
            .position(|&(lo, hi, _)| w > lo + 10.0 * EDGE_TOL && w < hi - 10.0 * EDGE_TOL)
        {
            let (lo, hi, t) = bands[pos];
            bands[pos] = (lo, w, t);
            bands.insert(pos + 1, (w, hi, true));
        }
    }

    Ok(bands
        .into_iter()
        .enumerate()
        .map(|(i, (lo, hi, t))| Band::new(i + 1, lo, hi, t))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlatBandLocation {
    Edge,
    Interior,
}

/// An eigenvalue `λ = m²` of infinite multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatBand {
    pub m: u32,
    pub lambda: f64,
    pub location: FlatBandLocation,
    /// One-based index of the band containing `ω = m`.
    pub host_band_index: usize,
}

/// Locates the flat band `λ = m²` relative to the bands of the symmetric reduction.
pub fn classify_flat_band(m: u32, params: &GraphParams) -> Result<FlatBand> {
    if m == 0 {
        return Err(Error::Domain("flat bands start at m = 1".into()));
    }
    let omega = m as f64;
    let c = (omega * params.link()).cos().abs();
    let location = if (1.0 - c).abs() <= 1e-9 {
        FlatBandLocation::Edge
    } else {
        FlatBandLocation::Interior
    };
    let grid = (400.0 * (omega + 1.0)).ceil() as usize;
    let bands = find_bands(params, omega + 1.0, grid.max(100))?;
    let host = bands
        .iter()
        .find(|b| b.contains_omega(omega, 1e-8))
        .map(|b| b.index)
        .ok_or_else(|| Error::Domain(format!("omega = {m} not inside any band")))?;
    Ok(FlatBand {
        m,
        lambda: omega * omega,
        location,
        host_band_index: host,
    })
}

/// Compactly supported eigenfunction for `λ = m²` on ring `k`.
///
/// Zero on every link; `±sin(m s)` on the upper/lower semicircle of ring `k`,
/// with `s` the local arclength from the ring's left vertex. The profile
/// covers cells `k - 1 ..= k + 1`.
pub fn flat_band_eigenfunction(m: u32, k: CellIndex, params: &GraphParams, samples_per_edge: usize) -> Result<PiecewiseProfile> {
    if m == 0 {
        return Err(Error::Domain("flat bands start at m = 1".into()));
    }
    let mf = m as f64;
    let cells = (k.0 - 1..=k.0 + 1)
        .map(|n| {
            let cell = CellIndex(n);
            let start = params.cell_start(cell);
            let link = EdgeSamples::zeros(start, params.link(), samples_per_edge);
            let ring_start = start + params.link();
            let mut upper = EdgeSamples::zeros(ring_start, SEMICIRCLE_LENGTH, samples_per_edge);
            let mut lower = upper.clone();
            if n == k.0 {
                for i in 0..upper.len() {
                    let s = upper.x[i] - ring_start;
                    let (sn, cs) = (mf * s).sin_cos();
                    upper.phi[i] = sn;
                    upper.dphi[i] = mf * cs;
                    lower.phi[i] = -sn;
                    lower.dphi[i] = -mf * cs;
                }
            }
            CellSamples {
                cell,
                link,
                upper,
                lower: Some(lower),
            }
        })
        .collect();
    PiecewiseProfile::new(*params, 0.0, cells, false)
}

/// Smallest `ω` in the lowest band with `T(ω) = 2 cos θ`.
pub fn lowest_band_omega(theta: f64, params: &GraphParams) -> Result<f64> {
    let target = 2.0 * theta.cos();
    if theta == 0.0 {
        return Ok(0.0);
    }
    // T decreases monotonically from 2 across the lowest band
    let step = 1e-3 / (1.0 + params.link());
    let mut hi = step;
    while trace(hi, params) > target {
        hi += step;
        if hi > 10.0 {
            return Err(Error::Domain(format!("no lowest-band solution for theta = {theta}")));
        }
    }
    bisect(|w| Ok(trace(w, params) - target), hi - step, hi, 1e-15, 200)
}

/// Least-squares fit `λ(θ) ≈ c θ² + d θ⁴` of the lowest band; returns `(c, d)`.
pub fn fit_lowest_band(thetas: &[f64], params: &GraphParams) -> Result<(f64, f64)> {
    if thetas.len() < 2 {
        return Err(Error::Domain("need at least two angles to fit".into()));
    }
    // normal equations for the basis (θ², θ⁴)
    let (mut s22, mut s24, mut s44, mut r2, mut r4) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &t in thetas {
        let w = lowest_band_omega(t, params)?;
        let lam = w * w;
        let (p2, p4) = (t * t, t.powi(4));
        s22 += p2 * p2;
        s24 += p2 * p4;
        s44 += p4 * p4;
        r2 += p2 * lam;
        r4 += p4 * lam;
    }
    let det = s22 * s44 - s24 * s24;
    Ok(((r2 * s44 - r4 * s24) / det, (s22 * r4 - s24 * r2) / det))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(l: f64) -> GraphParams {
        GraphParams::new(l).unwrap()
    }

    #[test]
    fn zero_limit_is_identity() {
        assert_eq!(monodromy_limit_at_zero(), Matrix2::IDENTITY);
        let m = monodromy_matrix(1e-9, &params(1.0)).unwrap();
        assert_abs_diff_eq!(m.m11, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.m22, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.m12, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn nonpositive_omega_is_domain_error() {
        assert!(monodromy_matrix(0.0, &params(1.0)).is_err());
        assert!(monodromy_matrix(-1.0, &params(1.0)).is_err());
    }

    #[test]
    fn trace_at_one_for_half_pi_link() {
        let p = params(PI / 2.0);
        let m = monodromy_matrix(1.0, &p).unwrap();
        assert_abs_diff_eq!(m.trace(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(trace(1.0, &p), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn trace_special_values() {
        let p = params(PI / 2.0);
        assert_eq!(trace(0.0, &p), 2.0);
        assert_abs_diff_eq!(trace(2.0, &p), -2.0, epsilon = 1e-14);
    }

    #[test]
    fn hyperbolic_trace_series() {
        let p = params(PI / 2.0);
        assert_eq!(trace_hyperbolic(0.0, &p), 2.0);
        let eps = 0.02;
        let lead = eps * eps * 2.5 * PI * PI;
        let rel = ((trace_hyperbolic(eps, &p) - 2.0) - lead).abs() / lead;
        // the next term is O(ε⁴), relative O(ε²)
        assert!(rel < 5e-3, "rel = {rel}");
        // series through ε⁴ from the Taylor coefficients of cosh/sinh
        let (a, b) = (PI, PI / 2.0);
        let c4 = 2.0 * (a.powi(4) / 24.0 + b.powi(4) / 24.0 + a * a * b * b / 4.0) + 2.5 * (a * b.powi(3) / 6.0 + a.powi(3) * b / 6.0);
        let series = 2.0 + lead + c4 * eps.powi(4);
        assert!(((trace_hyperbolic(eps, &p) - series) / lead).abs() < 1e-6);
    }

    #[test]
    fn curvature_forms_agree() {
        for l in [0.1, 1.0, PI, 10.0] {
            let nu2 = band_edge_curvature(&params(l));
            let alt = PI * PI + l * l + 2.5 * PI * l;
            assert_abs_diff_eq!(nu2, alt, epsilon = 1e-12 * alt);
        }
        assert_abs_diff_eq!(band_edge_curvature(&params(PI / 2.0)), 2.5 * PI * PI, epsilon = 1e-12);
    }

    #[test]
    fn lowest_band_for_half_pi() {
        let p = params(PI / 2.0);
        let bands = find_bands(&p, 6.0, 4000).unwrap();
        assert_eq!(bands[0].omega_lo, 0.0);
        // independent oracle: first root of T = -2 by dense scan + bisection
        let mut w = 1e-4;
        while trace(w, &p) > -2.0 {
            w += 1e-4;
        }
        let edge = bisect(|x| Ok(trace(x, &p) + 2.0), w - 1e-4, w, 1e-13, 200).unwrap();
        assert_abs_diff_eq!(bands[0].omega_hi, edge, epsilon = 2e-10);
    }

    #[test]
    fn touching_bands_share_edges() {
        let p = params(PI / 2.0);
        let bands = find_bands(&p, 6.0, 4000).unwrap();
        for m in [2.0, 4.0] {
            let below = bands.iter().find(|b| (b.omega_hi - m).abs() < 1e-8).expect("band ends at m");
            let above = bands.iter().find(|b| (b.omega_lo - m).abs() < 1e-8).expect("band starts at m");
            assert_eq!(above.index, below.index + 1);
            assert!(above.touches_below);
        }
        for w in bands.windows(2) {
            assert!(w[1].omega_lo >= w[0].omega_hi - 1e-12);
            assert!(w[0].omega_lo < w[0].omega_hi);
        }
    }

    #[test]
    fn touching_found_off_grid() {
        // a grid whose nodes straddle ω = 2 must still split the band there
        let p = params(PI / 2.0);
        let bands = find_bands(&p, 6.1, 3001).unwrap();
        assert!(bands.iter().any(|b| (b.omega_hi - 2.0).abs() < 1e-7));
        assert!(bands.iter().any(|b| (b.omega_lo - 2.0).abs() < 1e-7 && b.touches_below));
    }

    #[test]
    fn band_interiors_satisfy_trace_bound() {
        let p = params(PI / 2.0);
        for b in find_bands(&p, 6.0, 4000).unwrap() {
            for k in 1..50 {
                let w = b.omega_lo + (b.omega_hi - b.omega_lo) * k as f64 / 50.0;
                assert!(trace(w, &p).abs() <= 2.0 + 1e-12);
            }
            assert!((trace(b.omega_hi, &p).abs() - 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn bad_band_arguments() {
        let p = params(1.0);
        assert!(find_bands(&p, 0.0, 1000).is_err());
        assert!(find_bands(&p, 6.0, 10).is_err());
    }

    #[test]
    fn flat_band_classification() {
        let p = params(PI / 2.0);
        assert_eq!(classify_flat_band(2, &p).unwrap().location, FlatBandLocation::Edge);
        assert_eq!(classify_flat_band(4, &p).unwrap().location, FlatBandLocation::Edge);
        for m in [1, 3, 5] {
            assert_eq!(classify_flat_band(m, &p).unwrap().location, FlatBandLocation::Interior);
        }
        for l in [0.3, 1.0, 2.0, 3.0] {
            assert_eq!(classify_flat_band(1, &params(l)).unwrap().host_band_index, 2);
        }
    }

    #[test]
    fn flat_band_eigenfunction_properties() {
        let p = params(PI / 2.0);
        for m in 1..=4u32 {
            let w = flat_band_eigenfunction(m, CellIndex(0), &p, 64).unwrap();
            let c = w.cell(0).unwrap();
            let lower = c.lower.as_ref().unwrap();
            assert_abs_diff_eq!(c.upper.phi[0], 0.0);
            assert_abs_diff_eq!(c.upper.last().0, 0.0, epsilon = 1e-14);
            // fluxes of the two semicircles cancel at both ring vertices
            assert_abs_diff_eq!(c.upper.dphi[0] + lower.dphi[0], 0.0);
            assert_abs_diff_eq!(c.upper.last().1 + lower.last().1, 0.0, epsilon = 1e-14);
            // -w''/w = m² from a second difference
            let h = c.upper.x[1] - c.upper.x[0];
            for i in (5..60).step_by(7) {
                let d2 = (c.upper.phi[i + 1] - 2.0 * c.upper.phi[i] + c.upper.phi[i - 1]) / (h * h);
                if c.upper.phi[i].abs() > 0.1 {
                    assert_abs_diff_eq!(-d2 / c.upper.phi[i], (m * m) as f64, epsilon = 1e-2 * (m * m) as f64);
                }
            }
        }
    }

    #[test]
    fn dispersion_fit_recovers_inverse_curvature() {
        for l in [PI / 2.0, PI] {
            let p = params(l);
            let (c, _) = fit_lowest_band(&[0.05, 0.1, 0.2], &p).unwrap();
            let target = 1.0 / band_edge_curvature(&p);
            assert!((c - target).abs() / target < 1e-2);
        }
    }

    #[test]
    fn dispersion_correction_stable_under_halving() {
        // ω² = ν⁻²θ²(1 + κθ² + ...): the estimate of κ settles as θ halves
        let p = params(PI / 2.0);
        let inv = 1.0 / band_edge_curvature(&p);
        let kappa = |t: f64| {
            let w = lowest_band_omega(t, &p).unwrap();
            (w * w / (inv * t * t) - 1.0) / (t * t)
        };
        let (k1, k2, k3) = (kappa(0.2), kappa(0.1), kappa(0.05));
        assert!((k2 - k3).abs() < (k1 - k2).abs());
        assert!((k2 - k3).abs() / k3.abs() < 0.05);
    }

    proptest! {
        #[test]
        fn monodromy_is_unimodular(logw in -6.0f64..1.5, l in 0.05f64..8.0) {
            let w = 10f64.powf(logw);
            let m = monodromy_matrix(w, &params(l)).unwrap();
            prop_assert!((m.det() - 1.0).abs() <= 1e-12);
            prop_assert!((m.trace() - trace(w, &params(l))).abs() <= 1e-12);
        }
    }
}
