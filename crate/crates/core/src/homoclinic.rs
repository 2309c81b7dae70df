//! Reversible homoclinic orbits of the period map.
//!
//! The unstable manifold of the origin is followed from a tiny seed on the
//! unstable eigenvector until the symmetry defect changes sign. The seed
//! parameter is then tuned so the defect vanishes exactly at that step, and
//! the other half of the orbit is obtained by reflection.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::discrete_map::{MapState, PeriodMap, ScaledState, Symmetry};
use crate::error::{Error, Result};
use crate::graph::GraphParams;
use crate::roots::{golden_min, illinois};
use crate::spectral::band_edge_curvature;

/// Slope of the unstable line and amplitude of `B` in the continuum limit,
/// `μ = √((L+2π)/(L+π/2))`.
pub fn mu(params: &GraphParams) -> f64 {
    let l = params.link();
    ((l + 2.0 * PI) / (l + 0.5 * PI)).sqrt()
}

/// `ν = √((L+π/2)(L+2π))`.
pub fn nu(params: &GraphParams) -> f64 {
    band_edge_curvature(params).sqrt()
}

/// Continuum sech profile sampled at cell `n`:
/// `α = sech(ν(εn − ε/2 + X0))`, `β = −μ tanh(·) sech(·)`.
pub fn sech_approximation(eps: f64, x0: f64, n: i64, params: &GraphParams) -> ScaledState {
    let z = nu(params) * (eps * n as f64 - 0.5 * eps + x0);
    let s = 1.0 / z.cosh();
    ScaledState::new(s, -mu(params) * z.tanh() * s)
}

/// Linearization of the map at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnstableDirection {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    /// Unit eigenvector in `(a, b)`.
    pub vector: [f64; 2],
    /// The same direction in scaled `(α, β)`, normalized.
    pub scaled: [f64; 2],
}

impl UnstableDirection {
    /// `β/α` along the unstable line.
    pub fn scaled_slope(&self) -> f64 {
        self.scaled[1] / self.scaled[0]
    }
}

/// Unstable eigen-direction of the finite-difference Jacobian at the origin.
pub fn unstable_direction(map: &PeriodMap, h: Option<f64>) -> Result<UnstableDirection> {
    let eps = map.eps;
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let hh = h.unwrap_or(1e-6);
    let j = map.jacobian(MapState::ZERO, Some(hh))?;
    let (lm, lp) = j.real_eigenvalues().ok_or(Error::Degenerate(j.trace() / 2.0, j.trace() / 2.0))?;
    if lp - lm <= 10.0 * hh {
        return Err(Error::Degenerate(lm, lp));
    }
    let mut v = j.eigenvector(lp);
    if v[0] < 0.0 {
        v = [-v[0], -v[1]];
    }
    let (sa, sb) = (v[0] / eps, v[1] / (eps * eps));
    let n = sa.hypot(sb);
    Ok(UnstableDirection {
        lambda_plus: lp,
        lambda_minus: lm,
        vector: v,
        scaled: [sa / n, sb / n],
    })
}

/// Tuning knobs of [`shoot_homoclinic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicOptions {
    /// Scaled norm of the seed on the unstable line.
    pub seed_norm: f64,
    /// Relative tolerance on the seed parameter.
    pub tol: f64,
    /// Iteration budget for the root finder.
    pub max_iter: usize,
    /// Step budget; `None` uses `ceil(40/(εν))` plus the seed's escape time.
    pub max_steps: Option<usize>,
    /// Scaled norm beyond which the search gives up.
    pub max_norm: f64,
}

impl Default for HomoclinicOptions {
    fn default() -> Self {
        Self {
            seed_norm: 1e-8,
            tol: 1e-12,
            max_iter: 200,
            max_steps: None,
            max_norm: 10.0,
        }
    }
}

/// Lemma-style observables of a computed orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitDiagnostics {
    pub all_positive: bool,
    /// Smallest `N` such that `α` increases for `n ≤ −N` and decreases for `n ≥ N`.
    pub monotone_tail_index: usize,
    /// Geometric mean of `α_{n+1}/α_n` over the last 20% of the right tail.
    pub tail_decay_ratio: f64,
    /// Geometric mean of `α_{n}/α_{n+1}` over the first 20% of the left tail.
    pub backward_tail_ratio: f64,
    pub l2_distance_to_sech: f64,
    /// Shift minimizing the distance to the sech profile.
    pub sech_shift: f64,
    pub max_state_norm: f64,
}

/// A reversible orbit on `n ∈ [−N, N+1]` with mid-cell data on `[−N, N]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub eps: f64,
    pub params: GraphParams,
    pub symmetry: Symmetry,
    /// `N`; the first stored state has index `−N`.
    pub half_length: usize,
    pub states: Vec<MapState>,
    pub mid_states: Vec<MapState>,
    /// Distance from the origin along the unstable direction at the seed.
    pub seed_parameter: f64,
    /// Seed parameter transported linearly to the symmetric cell, `s·λ₊^k`.
    pub unstable_coordinate: f64,
    /// Number of map steps from the seed to the symmetric cell.
    pub crossing_step: usize,
    /// Symmetry defect left at the symmetric cell.
    pub residual_defect: f64,
    pub lambda_plus: f64,
    pub diagnostics: OrbitDiagnostics,
}

impl Orbit {
    pub fn n_min(&self) -> i64 {
        -(self.half_length as i64)
    }

    pub fn n_max(&self) -> i64 {
        self.half_length as i64 + 1
    }

    pub fn state(&self, n: i64) -> Option<MapState> {
        usize::try_from(n - self.n_min()).ok().and_then(|i| self.states.get(i).copied())
    }

    pub fn mid(&self, n: i64) -> Option<MapState> {
        usize::try_from(n - self.n_min()).ok().and_then(|i| self.mid_states.get(i).copied())
    }

    /// `(n, α, β)` for every stored cell-start state.
    pub fn scaled_states(&self) -> Vec<(i64, ScaledState)> {
        (self.n_min()..=self.n_max()).zip(&self.states).map(|(n, s)| (n, s.scaled(self.eps))).collect()
    }

    /// `(n, γ, δ)` for every stored mid-cell state.
    pub fn scaled_mids(&self) -> Vec<(i64, ScaledState)> {
        (self.n_min()..self.n_max()).zip(&self.mid_states).map(|(n, s)| (n, s.scaled(self.eps))).collect()
    }

    /// Builds an orbit from given data, for instance a sampled sech profile.
    pub fn from_parts(
        eps: f64,
        params: GraphParams,
        symmetry: Symmetry,
        states: Vec<MapState>,
        mid_states: Vec<MapState>,
    ) -> Result<Self> {
        if states.len() < 2 || states.len() % 2 != 0 || mid_states.len() + 1 != states.len() {
            return Err(Error::Domain(format!(
                "an orbit needs 2N+2 states and 2N+1 mid states, got {} and {}",
                states.len(),
                mid_states.len()
            )));
        }
        let half_length = states.len() / 2 - 1;
        let mut orbit = Self {
            eps,
            params,
            symmetry,
            half_length,
            states,
            mid_states,
            seed_parameter: 0.0,
            unstable_coordinate: 0.0,
            crossing_step: 0,
            residual_defect: 0.0,
            lambda_plus: 1.0,
            diagnostics: OrbitDiagnostics {
                all_positive: false,
                monotone_tail_index: 0,
                tail_decay_ratio: 0.0,
                backward_tail_ratio: 0.0,
                l2_distance_to_sech: 0.0,
                sech_shift: 0.0,
                max_state_norm: 0.0,
            },
        };
        orbit.diagnostics = orbit_diagnostics(&orbit);
        Ok(orbit)
    }
}

/// Iterates the manifold from seed parameter `s` for `k` steps.
fn manifold_point(map: &PeriodMap, dir: &UnstableDirection, s: f64, k: usize) -> Result<MapState> {
    let mut x = MapState::new(s * dir.vector[0], s * dir.vector[1]);
    for _ in 0..k {
        x = map.step(x)?;
    }
    Ok(x)
}

/// Shoots a reversible homoclinic orbit with the given symmetry.
pub fn shoot_homoclinic(map: &PeriodMap, symmetry: Symmetry, opts: &HomoclinicOptions) -> Result<Orbit> {
    let eps = map.eps;
    let dir = unstable_direction(map, None)?;
    let lp = dir.lambda_plus;
    let scaled_len = (dir.vector[0] / eps).hypot(dir.vector[1] / (eps * eps));
    let s0 = opts.seed_norm / scaled_len;
    let escape = (1.0 / opts.seed_norm).ln() / lp.ln();
    let budget = opts.max_steps.unwrap_or_else(|| (40.0 / (eps * nu(&map.params))).ceil() as usize + escape.ceil() as usize);

    // march until the defect turns non-positive
    let mut x = MapState::new(s0 * dir.vector[0], s0 * dir.vector[1]);
    let mut k = 0usize;
    loop {
        if map.defect(x, symmetry)? <= 0.0 {
            break;
        }
        let norm = x.scaled(eps).norm();
        if k >= budget || norm > opts.max_norm {
            return Err(Error::NoCrossing {
                steps: k,
                last_norm: norm,
            });
        }
        x = map.step(x)?;
        k += 1;
    }
    if k == 0 {
        return Err(Error::NoCrossing { steps: 0, last_norm: x.scaled(eps).norm() });
    }

    let g = |s: f64| map.defect(manifold_point(map, &dir, s, k)?, symmetry);
    let mut lo = s0 / lp;
    let mut tries = 0;
    while g(lo)? <= 0.0 {
        lo /= lp;
        tries += 1;
        if tries > 4 {
            return Err(Error::NotBracketed {
                lo,
                hi: s0,
                context: "seed parameter of the unstable manifold".into(),
            });
        }
    }
    let s_star = illinois(g, lo, s0, opts.tol * s0, opts.max_iter)?;
    let center = manifold_point(map, &dir, s_star, k)?;
    let residual_defect = map.defect(center, symmetry)?;

    // left half from the manifold: x_j for j = 0..=k sits at n = j − k
    let mut left = Vec::with_capacity(k + 1);
    let mut y = MapState::new(s_star * dir.vector[0], s_star * dir.vector[1]);
    for _ in 0..k {
        left.push(y);
        y = map.step(y)?;
    }
    left.push(y);
    let left_mids = left.iter().map(|&s| map.link_step(s)).collect::<Result<Vec<_>>>()?;

    let reflect = |s: MapState| MapState::new(s.a, -2.0 * s.b);
    let reflect_mid = |s: MapState| MapState::new(s.a, -0.5 * s.b);
    let (half_length, states, mids) = match symmetry {
        Symmetry::LinkCentered => {
            // n ≤ 0 from the manifold, a_n = c_{−n}, c_n = a_{−n} for n ≥ 1
            let nn = k - 1;
            let mut states: Vec<MapState> = left[1..].to_vec();
            let mut mids: Vec<MapState> = left_mids[1..].to_vec();
            for n in 1..=nn + 1 {
                states.push(reflect(left_mids[k - n]));
            }
            for n in 1..=nn {
                mids.push(reflect_mid(left[k - n]));
            }
            (nn, states, mids)
        }
        Symmetry::RingCentered => {
            // a_n = c_{1−n}, c_n = a_{1−n} for n ≥ 1
            let nn = k;
            let mut states = left.clone();
            let mut mids = left_mids.clone();
            for n in 1..=nn + 1 {
                states.push(reflect(left_mids[k + 1 - n]));
            }
            for n in 1..=nn {
                mids.push(reflect_mid(left[k + 1 - n]));
            }
            (nn, states, mids)
        }
    };

    let mut orbit = Orbit::from_parts(eps, map.params, symmetry, states, mids)?;
    debug_assert_eq!(orbit.half_length, half_length);
    orbit.seed_parameter = s_star;
    orbit.unstable_coordinate = s_star * lp.powi(k as i32);
    orbit.crossing_step = k;
    orbit.residual_defect = residual_defect;
    orbit.lambda_plus = lp;
    Ok(orbit)
}

/// Scaled ℓ² distance between an orbit and the sech profile shifted by `x0`.
pub fn sech_distance(orbit: &Orbit, x0: f64) -> f64 {
    orbit
        .scaled_states()
        .iter()
        .map(|&(n, s)| {
            let a = sech_approximation(orbit.eps, x0, n, &orbit.params);
            (s.alpha - a.alpha).powi(2) + (s.beta - a.beta).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

fn geometric_mean_ratio(values: &[f64]) -> f64 {
    if values.len() < 2 || values.iter().any(|&v| v <= 0.0) {
        return f64::NAN;
    }
    (values[values.len() - 1] / values[0]).powf(1.0 / (values.len() - 1) as f64)
}

/// Positivity, monotone tails, decay ratios and distance to the sech profile.
pub fn orbit_diagnostics(orbit: &Orbit) -> OrbitDiagnostics {
    let eps = orbit.eps;
    let scaled = orbit.scaled_states();
    let alphas: Vec<f64> = scaled.iter().map(|(_, s)| s.alpha).collect();
    let all_positive = orbit.states.iter().chain(&orbit.mid_states).all(|s| s.a > 0.0);

    let n_min = orbit.n_min();
    let n_max = orbit.n_max();
    let idx = |n: i64| (n - n_min) as usize;
    // last n on the left where the increase fails, first n on the right where the decrease fails
    let mut n_left = 0usize;
    for n in n_min..0 {
        if alphas[idx(n)] >= alphas[idx(n + 1)] {
            n_left = n_left.max((-n) as usize);
        }
    }
    let mut n_right = 0usize;
    for n in 0..n_max {
        if alphas[idx(n + 1)] >= alphas[idx(n)] {
            n_right = n_right.max((n + 1) as usize);
        }
    }
    let monotone_tail_index = n_left.max(n_right);

    let len = alphas.len();
    let tail = ((len as f64) * 0.2 / 2.0).ceil().max(2.0) as usize;
    let tail_decay_ratio = geometric_mean_ratio(&alphas[len - tail..]);
    let head: Vec<f64> = alphas[..tail].iter().rev().copied().collect();
    let backward_tail_ratio = geometric_mean_ratio(&head);

    let (sech_shift, d2) = golden_min(|x0| sech_distance(orbit, x0).powi(2), -2.0 * eps, 2.0 * eps, 1e-10 * eps);
    let max_state_norm = scaled.iter().map(|(_, s)| s.norm()).fold(0.0, f64::max);

    OrbitDiagnostics {
        all_positive,
        monotone_tail_index,
        tail_decay_ratio,
        backward_tail_ratio,
        l2_distance_to_sech: d2.sqrt(),
        sech_shift,
        max_state_norm,
    }
}
