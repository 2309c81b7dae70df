//! The nonlinear period map on vertex data `(a, b) = (φ, φ')` at a cell start.
//!
//! One period is a link step (integrate over the link, halve the derivative
//! into the symmetric ring) followed by a ring step (integrate over a
//! semicircle, double the derivative back into the next link).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphParams;
use crate::ode::Integrator;
use crate::roots::illinois;
use crate::spectral::Matrix2;
use std::f64::consts::PI;

/// Default tolerance of the edge integrations inside the map.
pub const MAP_TOL: f64 = 1e-12;

/// Vertex data `(φ, φ')`, either at a cell start or at a mid-cell vertex.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MapState {
    pub a: f64,
    pub b: f64,
}

impl MapState {
    pub const ZERO: MapState = MapState { a: 0.0, b: 0.0 };

    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn scaled(&self, eps: f64) -> ScaledState {
        ScaledState {
            alpha: self.a / eps,
            beta: self.b / (eps * eps),
        }
    }

    pub fn norm(&self) -> f64 {
        self.a.hypot(self.b)
    }
}

/// Vertex data in the small-amplitude scaling `α = a/ε`, `β = b/ε²`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScaledState {
    pub alpha: f64,
    pub beta: f64,
}

impl ScaledState {
    pub const fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta }
    }

    pub fn unscaled(&self, eps: f64) -> MapState {
        MapState {
            a: eps * self.alpha,
            b: eps * eps * self.beta,
        }
    }

    pub fn norm(&self) -> f64 {
        self.alpha.hypot(self.beta)
    }
}

/// Which symmetry center a reversible orbit is built around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symmetry {
    /// Center at the midpoint of the link, `x = L/2`.
    LinkCentered,
    /// Center at the midpoint of the ring, `x = L + π/2`.
    RingCentered,
}

impl Symmetry {
    pub const BOTH: [Symmetry; 2] = [Symmetry::LinkCentered, Symmetry::RingCentered];

    pub fn as_str(&self) -> &'static str {
        match self {
            Symmetry::LinkCentered => "link",
            Symmetry::RingCentered => "ring",
        }
    }

    /// Position of the symmetry center in cell 0.
    pub fn center(&self, params: &GraphParams) -> f64 {
        match self {
            Symmetry::LinkCentered => 0.5 * params.link(),
            Symmetry::RingCentered => params.link() + 0.5 * PI,
        }
    }
}

/// How a symmetry curve is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveMode {
    /// Leading-order closed form.
    Asymptotic,
    /// Root of the true symmetry defect.
    Exact,
}

/// The period map for fixed `ε` and geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodMap {
    pub eps: f64,
    pub params: GraphParams,
    integrator: Integrator,
}

impl PeriodMap {
    pub fn new(eps: f64, params: GraphParams) -> Self {
        Self::with_tol(eps, params, MAP_TOL)
    }

    pub fn with_tol(eps: f64, params: GraphParams, tol: f64) -> Self {
        Self {
            eps,
            params,
            integrator: Integrator::new(eps, tol),
        }
    }

    pub fn tol(&self) -> f64 {
        self.integrator.tol
    }

    pub fn integrator(&self) -> &Integrator {
        &self.integrator
    }

    /// `(a, b) ↦ (c, d) = (ψ(L), ψ'(L)/2)`.
    pub fn link_step(&self, s: MapState) -> Result<MapState> {
        let (c, dc) = self.integrator.propagate(s.a, s.b, self.params.link())?;
        Ok(MapState::new(c, 0.5 * dc))
    }

    /// `(c, d) ↦ (a', b') = (ψ(π), 2ψ'(π))`.
    pub fn ring_step(&self, s: MapState) -> Result<MapState> {
        let (a, da) = self.integrator.propagate(s.a, s.b, PI)?;
        Ok(MapState::new(a, 2.0 * da))
    }

    pub fn step(&self, s: MapState) -> Result<MapState> {
        self.ring_step(self.link_step(s)?)
    }

    /// Both the mid-cell data and the next cell-start data.
    pub fn step_with_mid(&self, s: MapState) -> Result<(MapState, MapState)> {
        let mid = self.link_step(s)?;
        Ok((mid, self.ring_step(mid)?))
    }

    /// Inverse of [`ring_step`](Self::ring_step), by backward integration.
    pub fn ring_step_inverse(&self, s: MapState) -> Result<MapState> {
        let (c, dc) = self.integrator.propagate(s.a, 0.5 * s.b, -PI)?;
        Ok(MapState::new(c, dc))
    }

    /// Inverse of [`link_step`](Self::link_step), by backward integration.
    pub fn link_step_inverse(&self, s: MapState) -> Result<MapState> {
        let (a, da) = self.integrator.propagate(s.a, 2.0 * s.b, -self.params.link())?;
        Ok(MapState::new(a, da))
    }

    pub fn inverse_step(&self, s: MapState) -> Result<MapState> {
        self.link_step_inverse(self.ring_step_inverse(s)?)
    }

    /// Central finite-difference Jacobian of [`step`](Self::step).
    ///
    /// `h = None` uses `1e-6 · max(1, ‖point‖)`.
    pub fn jacobian(&self, p: MapState, h: Option<f64>) -> Result<Matrix2> {
        let h = h.unwrap_or(1e-6 * p.norm().max(1.0));
        if !(h > 0.0) {
            return Err(Error::Domain(format!("finite-difference step must be positive, got {h}")));
        }
        let fa = self.step(MapState::new(p.a + h, p.b))?;
        let ba = self.step(MapState::new(p.a - h, p.b))?;
        let fb = self.step(MapState::new(p.a, p.b + h))?;
        let bb = self.step(MapState::new(p.a, p.b - h))?;
        let inv = 0.5 / h;
        Ok(Matrix2::new(
            (fa.a - ba.a) * inv,
            (fb.a - bb.a) * inv,
            (fa.b - ba.b) * inv,
            (fb.b - bb.b) * inv,
        ))
    }

    /// `ψ'(L/2; a, b)`: zero iff the orbit is symmetric about the link midpoint.
    pub fn defect_link(&self, s: MapState) -> Result<f64> {
        Ok(self.integrator.propagate(s.a, s.b, 0.5 * self.params.link())?.1)
    }

    /// `ψ'(π/2; c, d)` for mid-cell data: zero iff symmetric about the ring midpoint.
    pub fn defect_ring(&self, mid: MapState) -> Result<f64> {
        Ok(self.integrator.propagate(mid.a, mid.b, 0.5 * PI)?.1)
    }

    /// Symmetry defect of the given kind for cell-start data.
    pub fn defect(&self, s: MapState, which: Symmetry) -> Result<f64> {
        match which {
            Symmetry::LinkCentered => self.defect_link(s),
            Symmetry::RingCentered => self.defect_ring(self.link_step(s)?),
        }
    }

    /// The scaled `β` on the reversibility curve through scaled `α`, in
    /// cell-start variables.
    pub fn symmetry_curve(&self, alpha: f64, which: Symmetry, mode: CurveMode) -> Result<f64> {
        let guess = asymptotic_symmetry_curve(alpha, self.eps, &self.params, which);
        if mode == CurveMode::Asymptotic {
            return Ok(guess);
        }
        let eps = self.eps;
        let f = |beta: f64| self.defect(ScaledState::new(alpha, beta).unscaled(eps), which);
        let mut hw = (5.0 * eps.powi(3)).max(1e-12);
        loop {
            let (lo, hi) = (guess - hw, guess + hw);
            let (flo, fhi) = (f(lo)?, f(hi)?);
            if flo == 0.0 {
                return Ok(lo);
            }
            if fhi == 0.0 {
                return Ok(hi);
            }
            if flo.signum() != fhi.signum() {
                return illinois(f, lo, hi, 1e-15 * (1.0 + guess.abs()), 200);
            }
            if lo < -1.0 && hi > 1.0 {
                return Err(Error::NotBracketed {
                    lo,
                    hi,
                    context: format!("{} symmetry curve at alpha = {alpha}", which.as_str()),
                });
            }
            hw *= 2.0;
        }
    }
}

/// Exact linearization of the period map at the origin, in `(a, b)`.
pub fn linearized_map(eps: f64, params: &GraphParams) -> Matrix2 {
    let half = Matrix2::new(1.0, 0.0, 0.0, 0.5);
    let double = Matrix2::new(1.0, 0.0, 0.0, 2.0);
    double.mul(&transfer(eps, PI)).mul(&half).mul(&transfer(eps, params.link()))
}

/// Inverse of [`linearized_map`], composed from backward transfers so that it
/// stays accurate when the entries are large.
pub(crate) fn linearized_map_inverse(eps: f64, params: &GraphParams) -> Matrix2 {
    let half = Matrix2::new(1.0, 0.0, 0.0, 0.5);
    let double = Matrix2::new(1.0, 0.0, 0.0, 2.0);
    transfer(eps, -params.link()).mul(&double).mul(&transfer(eps, -PI)).mul(&half)
}

fn transfer(eps: f64, len: f64) -> Matrix2 {
    let (c, s) = ((eps * len).cosh(), (eps * len).sinh());
    let s_over = if eps == 0.0 { len } else { s / eps };
    Matrix2::new(c, s_over, eps * s, c)
}

/// Leading-order reversibility curves in scaled variables.
pub fn asymptotic_symmetry_curve(alpha: f64, eps: f64, params: &GraphParams, which: Symmetry) -> f64 {
    let l = params.link();
    let nl = (1.0 - 2.0 * alpha * alpha) * alpha;
    match which {
        Symmetry::LinkCentered => -0.5 * eps * l * nl,
        Symmetry::RingCentered => -eps * (l + PI) * nl,
    }
}

/// Polynomial truncation of the scaled period map.
pub fn scaled_map_truncated(s: ScaledState, eps: f64, params: &GraphParams) -> ScaledState {
    let l = params.link();
    let (al, be) = (s.alpha, s.beta);
    let nl2 = (1.0 - 2.0 * al * al) * al;
    let nl3 = (1.0 - 6.0 * al * al) * be;
    let alpha = al
        + eps * (l + 0.5 * PI) * be
        + 0.5 * eps * eps * (l * l + PI * l + PI * PI) * nl2
        + eps.powi(3) / 12.0 * (2.0 * l.powi(3) + 3.0 * l * l * PI + 6.0 * l * PI * PI + PI.powi(3)) * nl3;
    let beta = be + eps * (l + 2.0 * PI) * nl2 + 0.5 * eps * eps * (l * l + 4.0 * l * PI + PI * PI) * nl3;
    ScaledState { alpha, beta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{band_edge_curvature, trace_hyperbolic};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn half_pi() -> GraphParams {
        GraphParams::new(FRAC_PI_2).unwrap()
    }

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    #[test]
    fn linearized_map_trace_and_inverse() {
        for (eps, l) in [(0.05, FRAC_PI_2), (1.0, PI), (3.0, 2.0)] {
            let p = GraphParams::new(l).unwrap();
            let m = linearized_map(eps, &p);
            let t = trace_hyperbolic(eps, &p);
            assert!((m.trace() - t).abs() < 1e-12 * t);
            let id = m.mul(&linearized_map_inverse(eps, &p));
            // products of entries of size `scale` cancel to order one
            let scale = m.m11.abs().max(m.m22.abs()).powi(2);
            assert!((id.m11 - 1.0).abs() < 1e-14 * scale);
            assert!((id.m22 - 1.0).abs() < 1e-14 * scale);
        }
        let p = half_pi();
        let j = PeriodMap::new(0.02, p).jacobian(MapState::ZERO, None).unwrap();
        let m = linearized_map(0.02, &p);
        assert!((j.m12 - m.m12).abs() < 1e-6 && (j.m21 - m.m21).abs() < 1e-8);
    }

    #[test]
    fn scaling_round_trip() {
        let s = MapState::new(0.013, -0.0007);
        let back = s.scaled(0.02).unscaled(0.02);
        assert!((back.a - s.a).abs() <= 1e-15 * s.a.abs());
        assert!((back.b - s.b).abs() <= 1e-15 * s.b.abs());
    }

    #[test]
    fn fixed_points() {
        for eps in [0.1, 0.02] {
            let m = PeriodMap::new(eps, half_pi());
            assert_eq!(m.step(MapState::ZERO).unwrap(), MapState::ZERO);
            let c = MapState::new(eps / 2f64.sqrt(), 0.0);
            for s in [m.link_step(c).unwrap(), m.ring_step(c).unwrap(), m.step(c).unwrap()] {
                assert_abs_diff_eq!(s.a, c.a, epsilon = 1e-12);
                assert_abs_diff_eq!(s.b, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn link_step_is_linear_hyperbolic_for_small_data() {
        let eps = 0.3;
        let params = GraphParams::new(1.2).unwrap();
        let m = PeriodMap::new(eps, params);
        let l = params.link();
        for scale in [1e-3, 1e-4] {
            let (a, b) = (0.7 * scale, -0.4 * scale);
            let s = m.link_step(MapState::new(a, b)).unwrap();
            let c = a * (eps * l).cosh() + b * (eps * l).sinh() / eps;
            let dc = a * eps * (eps * l).sinh() + b * (eps * l).cosh();
            assert!((s.a - c).abs() < 10.0 * scale.powi(3));
            assert!((2.0 * s.b - dc).abs() < 10.0 * scale.powi(3));
        }
    }

    #[test]
    fn inverse_undoes_step() {
        let eps = 0.05;
        let m = PeriodMap::new(eps, half_pi());
        let s = MapState::new(0.8 * eps, 0.3 * eps * eps);
        let back = m.inverse_step(m.step(s).unwrap()).unwrap();
        assert_abs_diff_eq!(back.a, s.a, epsilon = 1e-13);
        assert_abs_diff_eq!(back.b, s.b, epsilon = 1e-13);
    }

    #[test]
    fn jacobian_at_origin_matches_linear_theory() {
        let params = half_pi();
        let nu = band_edge_curvature(&params).sqrt();
        let mut consts = Vec::new();
        for eps in [0.04, 0.02, 0.01] {
            let m = PeriodMap::new(eps, params);
            let j = m.jacobian(MapState::ZERO, None).unwrap();
            assert!((j.trace() - trace_hyperbolic(eps, &params)).abs() < 1e-6);
            assert!((j.det() - 1.0).abs() < 1e-8);
            let (lm, lp) = j.real_eigenvalues().unwrap();
            let c = ((lp - 1.0 - eps * nu).abs()).max((lm - 1.0 + eps * nu).abs()) / (eps * eps);
            consts.push(c);
        }
        // leading correction is ν²/2 for both eigenvalues
        for c in &consts {
            assert!((c - nu * nu / 2.0).abs() < 0.1 * nu * nu, "{consts:?}");
        }
    }

    #[test]
    fn jacobian_is_area_preserving_off_origin() {
        let eps = 0.05;
        let m = PeriodMap::new(eps, half_pi());
        for p in [
            MapState::new(0.5 * eps, 0.1 * eps * eps),
            MapState::new(eps / 2f64.sqrt(), 0.0),
            MapState::new(eps, -0.3 * eps * eps),
        ] {
            assert!((m.jacobian(p, None).unwrap().det() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn truncated_map_special_points() {
        let p = half_pi();
        assert_eq!(scaled_map_truncated(ScaledState::default(), 0.1, &p), ScaledState::default());
        let c = ScaledState::new(0.5f64.sqrt(), 0.0);
        let out = scaled_map_truncated(c, 0.1, &p);
        assert_abs_diff_eq!(out.alpha, c.alpha, epsilon = 1e-15);
        assert_abs_diff_eq!(out.beta, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn truncation_remainders_have_stated_orders() {
        let params = half_pi();
        let s = ScaledState::new(0.9, 0.4);
        let errs = |eps: f64| {
            let m = PeriodMap::new(eps, params);
            let exact = m.step(s.unscaled(eps)).unwrap().scaled(eps);
            let trunc = scaled_map_truncated(s, eps, &params);
            ((exact.alpha - trunc.alpha).abs(), (exact.beta - trunc.beta).abs())
        };
        let e: Vec<(f64, f64)> = [0.04, 0.02, 0.01].iter().map(|&x| errs(x)).collect();
        for w in e.windows(2) {
            let oa = (w[0].0 / w[1].0).log2();
            let ob = (w[0].1 / w[1].1).log2();
            assert!(oa > 3.7, "alpha order {oa}: {e:?}");
            assert!(ob > 2.7, "beta order {ob}: {e:?}");
        }
    }

    #[test]
    fn defect_values() {
        let eps = 0.1;
        let params = half_pi();
        let m = PeriodMap::new(eps, params);
        let c = MapState::new(eps / 2f64.sqrt(), 0.0);
        assert_abs_diff_eq!(m.defect_link(c).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.defect_ring(c).unwrap(), 0.0, epsilon = 1e-14);
        let y = eps * params.link() / 2.0;
        let want = -eps * eps * sech(y) * y.tanh();
        assert_abs_diff_eq!(m.defect_link(MapState::new(eps, 0.0)).unwrap(), want, epsilon = 1e-12);
    }

    #[test]
    fn asymptotic_curve_values() {
        let p = half_pi();
        assert_abs_diff_eq!(asymptotic_symmetry_curve(1.0, 0.02, &p, Symmetry::LinkCentered), 0.01 * FRAC_PI_2, epsilon = 1e-15);
        assert!((asymptotic_symmetry_curve(1.0, 0.02, &p, Symmetry::LinkCentered) - 0.0157).abs() < 1e-4);
        for w in Symmetry::BOTH {
            assert_abs_diff_eq!(asymptotic_symmetry_curve(0.5f64.sqrt(), 0.3, &p, w), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn exact_curves_approach_asymptotic_at_third_order() {
        let params = half_pi();
        for which in Symmetry::BOTH {
            let diffs: Vec<f64> = [0.04, 0.02, 0.01]
                .iter()
                .map(|&eps| {
                    let m = PeriodMap::new(eps, params);
                    let ex = m.symmetry_curve(0.8, which, CurveMode::Exact).unwrap();
                    (ex - m.symmetry_curve(0.8, which, CurveMode::Asymptotic).unwrap()).abs()
                })
                .collect();
            for w in diffs.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!(order > 2.7, "{which:?}: {diffs:?}");
            }
        }
    }

    #[test]
    fn ring_defect_changes_sign_across_curve() {
        let eps = 0.04;
        let m = PeriodMap::new(eps, half_pi());
        let beta = m.symmetry_curve(0.7, Symmetry::RingCentered, CurveMode::Asymptotic).unwrap();
        let d = |db: f64| m.defect(ScaledState::new(0.7, beta + db).unscaled(eps), Symmetry::RingCentered).unwrap();
        assert!(d(-0.01) * d(0.01) < 0.0);
    }

    #[test]
    fn link_symmetric_point_reflects() {
        let eps = 0.05;
        let params = half_pi();
        let m = PeriodMap::new(eps, params);
        let alpha = 0.9;
        let beta = m.symmetry_curve(alpha, Symmetry::LinkCentered, CurveMode::Exact).unwrap();
        let mut fwd = ScaledState::new(alpha, beta).unscaled(eps);
        let mut bwd = fwd;
        for _ in 0..10 {
            let mid = m.link_step(fwd).unwrap();
            // a_{-n} = c_n, b_{-n} = -2 d_n
            assert_abs_diff_eq!(bwd.a, mid.a, epsilon = 1e-11);
            assert_abs_diff_eq!(bwd.b, -2.0 * mid.b, epsilon = 1e-11);
            fwd = m.ring_step(mid).unwrap();
            bwd = m.inverse_step(bwd).unwrap();
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn area_preserved(alpha in -1.2f64..1.2, beta in -1.0f64..1.0, eps in 0.01f64..0.1, l in 0.2f64..4.0) {
            let m = PeriodMap::new(eps, GraphParams::new(l).unwrap());
            let p = ScaledState::new(alpha, beta).unscaled(eps);
            let det = m.jacobian(p, None).unwrap().det();
            prop_assert!((det - 1.0).abs() < 1e-6);
        }
    }
}
