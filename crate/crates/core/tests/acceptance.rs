//! Acceptance suite. Each criterion prints one PASS/FAIL line; run with
//! `cargo test -p necklace-core --test acceptance -- --nocapture` to see them.
//!
//! A few literal sub-checks cannot hold for the quantities as defined (see the
//! README). They are reported as FAIL lines here without failing the run and
//! are repeated as ignored tests that do fail under `--ignored`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use necklace::bound_state::{mirror_defect, profile_sup_difference};
use necklace::homoclinic::{mu, nu};
use necklace::spectral::{band_edge_curvature, classify_flat_band, fit_lowest_band, FlatBandLocation};
use necklace::*;

struct Check {
    name: String,
    ok: bool,
    detail: String,
    /// Known not to hold; reported but not enforced.
    literal: bool,
}

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Duration,
    checks: Vec<Check>,
}

impl Criterion {
    fn new(id: u32, title: &'static str, budget_secs: u64) -> Self {
        Self {
            id,
            title,
            budget: Duration::from_secs(budget_secs),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            ok,
            detail: detail.into(),
            literal: false,
        });
    }

    fn literal(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            ok,
            detail: detail.into(),
            literal: true,
        });
    }

    /// Prints the verdict line and panics if an enforced check failed.
    fn finish(mut self, elapsed: Duration) {
        let budget = self.budget;
        self.check("runtime", elapsed <= budget, format!("{:.3}s of {}s", elapsed.as_secs_f64(), budget.as_secs()));
        let failed: Vec<&Check> = self.checks.iter().filter(|c| !c.ok).collect();
        let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {} {verdict}: {} ({:.3}s)", self.id, self.title, elapsed.as_secs_f64());
        for c in &self.checks {
            let mark = match (c.ok, c.literal) {
                (true, _) => "ok",
                (false, true) => "FAIL (literal)",
                (false, false) => "FAIL",
            };
            println!("    {mark:>14}  {}: {}", c.name, c.detail);
        }
        let enforced: Vec<&str> = failed.iter().filter(|c| !c.literal).map(|c| c.name.as_str()).collect();
        assert!(enforced.is_empty(), "criterion {} failed: {enforced:?}", self.id);
    }
}

fn run(id: u32, title: &'static str, budget_secs: u64, body: impl FnOnce(&mut Criterion)) {
    let mut c = Criterion::new(id, title, budget_secs);
    let t = Instant::now();
    body(&mut c);
    c.finish(t.elapsed());
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// Constants taken as stable when they vary by less than this factor.
const STABLE_SPREAD: f64 = 1.25;

#[test]
fn criterion_1_band_structure() {
    run(1, "band structure at L = pi/2", 1, |c| {
        let p = GraphParams::new(FRAC_PI_2).unwrap();
        let bands = find_bands(&p, 6.0, 6000).unwrap();
        c.check("lowest band starts at 0", bands[0].omega_lo == 0.0, format!("omega_lo = {}", bands[0].omega_lo));
        let mut worst = 0.0f64;
        for m in 1..=5 {
            let mf = m as f64;
            let expected = 2.0 * if m % 2 == 0 { 1.0 } else { -1.0 } * (mf * p.link()).cos();
            worst = worst.max((trace(mf, &p) - expected).abs());
        }
        c.check("trace at integers", worst <= 1e-12, format!("max deviation {worst:.2e}"));
        let mut ok = true;
        let mut kinds = Vec::new();
        for m in 1..=5u32 {
            let fb = classify_flat_band(m, &p).unwrap();
            let want = if m % 2 == 0 { FlatBandLocation::Edge } else { FlatBandLocation::Interior };
            ok &= fb.location == want;
            kinds.push(format!("{m}:{:?}", fb.location));
        }
        c.check("flat band locations", ok, kinds.join(" "));
        let inside = (1..=5).all(|m| bands.iter().any(|b| b.contains_omega(m as f64, 1e-9)));
        c.check("m^2 inside the band union", inside, format!("{} bands below omega = 6", bands.len()));
    });
}

#[test]
fn criterion_2_band_edge_curvature() {
    run(2, "band-edge curvature", 1, |c| {
        for l in [FRAC_PI_2, PI] {
            let p = GraphParams::new(l).unwrap();
            let (quad, _) = fit_lowest_band(&[0.05, 0.1, 0.2], &p).unwrap();
            let expected = 1.0 / band_edge_curvature(&p);
            let rel = (quad - expected).abs() / expected;
            c.check(format!("L = {l:.4}"), rel <= 0.01, format!("fit {quad:.6e}, 1/nu^2 {expected:.6e}, rel {rel:.2e}"));
        }
    });
}

#[test]
fn criterion_3_ode_oracles() {
    run(3, "ODE oracles", 1, |c| {
        let eps = 0.1;
        let x_end = 10.0 / eps;
        let at: Vec<f64> = (1..1000).map(|i| i as f64 * x_end / 1000.0).collect();
        let sol = integrate_ivp(eps, 0.0, eps, x_end, 1e-12, &at).unwrap();
        let err = sol
            .samples
            .iter()
            .map(|s| (s.psi - eps / (eps * s.x).cosh()).abs())
            .fold(0.0, f64::max);
        c.check("soliton", err <= 1e-8, format!("max error {err:.2e}"));
        c.check("invariant drift", sol.invariant_drift <= 1e-10, format!("{:.2e}", sol.invariant_drift));
        let k = eps * FRAC_1_SQRT_2;
        let sol = integrate_ivp(k, 0.0, eps, x_end, 1e-12, &at).unwrap();
        let err = sol
            .samples
            .iter()
            .map(|s| (s.psi - k).abs().max(s.dpsi.abs()))
            .fold(0.0, f64::max);
        c.check("constant solution", err <= 1e-10, format!("max deviation {err:.2e}"));
    });
}

#[test]
fn criterion_4_map_structure() {
    run(4, "period map structure", 5, |c| {
        let p = GraphParams::new(FRAC_PI_2).unwrap();
        let eps = 0.04;
        let map = PeriodMap::new(eps, p);
        let origin = map.step(MapState::ZERO).unwrap();
        let k = eps * FRAC_1_SQRT_2;
        let constant = map.step(MapState::new(k, 0.0)).unwrap();
        let dev = origin.norm().max((constant.a - k).abs().max(constant.b.abs()));
        c.check("fixed points", dev <= 1e-9, format!("max deviation {dev:.2e}"));

        let points = [(0.0, 0.0), (0.3, 0.0), (0.7, 0.01), (1.0, -0.02), (0.5, 0.03)];
        let worst = points
            .iter()
            .map(|&(al, be)| {
                let x = ScaledState::new(al, be).unscaled(eps);
                (map.jacobian(x, None).unwrap().det() - 1.0).abs()
            })
            .fold(0.0, f64::max);
        c.check("area preservation", worst <= 1e-6, format!("max |det - 1| {worst:.2e}"));

        let mut cs = Vec::new();
        for e in [0.04, 0.02, 0.01] {
            let u = unstable_direction(&PeriodMap::new(e, p), None).unwrap();
            let en = e * nu(&p);
            let d = (u.lambda_plus - 1.0 - en).abs().max((u.lambda_minus - 1.0 + en).abs());
            cs.push(d / (e * e));
        }
        c.check(
            "eigenvalues 1 +- eps nu + O(eps^2)",
            spread(&cs) <= STABLE_SPREAD,
            format!("C over eps = 0.04, 0.02, 0.01: {:.3} {:.3} {:.3}", cs[0], cs[1], cs[2]),
        );

        let j = map.jacobian(MapState::ZERO, None).unwrap();
        let t = trace_hyperbolic(eps, &p);
        c.check("trace", (j.trace() - t).abs() <= 1e-6, format!("{:.10} vs {t:.10}", j.trace()));
    });
}

struct OrbitRow {
    eps: f64,
    symmetry: Symmetry,
    diag: OrbitDiagnostics,
    lambda_minus: f64,
}

fn orbit_rows() -> Vec<OrbitRow> {
    let p = GraphParams::new(FRAC_PI_2).unwrap();
    let mut rows = Vec::new();
    for eps in [0.04, 0.02] {
        let map = PeriodMap::new(eps, p);
        let lambda_minus = 1.0 / linear_lambda_plus(eps, &p);
        for symmetry in Symmetry::BOTH {
            let orbit = shoot_homoclinic(&map, symmetry, &HomoclinicOptions::default()).unwrap();
            rows.push(OrbitRow {
                eps,
                symmetry,
                diag: orbit.diagnostics,
                lambda_minus,
            });
        }
    }
    rows
}

/// Larger eigenvalue of the linearized map, from its trace and unit determinant.
fn linear_lambda_plus(eps: f64, p: &GraphParams) -> f64 {
    let t = trace_hyperbolic(eps, p);
    0.5 * (t + (t * t - 4.0).sqrt())
}

fn tail_ratio_literal(rows: &[OrbitRow]) -> (bool, String) {
    let p = GraphParams::new(FRAC_PI_2).unwrap();
    let devs: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.2e}", (r.diag.tail_decay_ratio - (1.0 - r.eps * nu(&p))).abs()))
        .collect();
    let ok = rows
        .iter()
        .all(|r| (r.diag.tail_decay_ratio - (1.0 - r.eps * nu(&p))).abs() <= 1e-3);
    (ok, format!("|ratio - (1 - eps nu)| = {}", devs.join(" ")))
}

/// Scaled l2 distance divided by eps, per symmetry and eps.
fn l2_constants(rows: &[OrbitRow]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in Symmetry::BOTH {
        let cs: Vec<f64> = rows
            .iter()
            .filter(|r| r.symmetry == s)
            .map(|r| r.diag.l2_distance_to_sech / r.eps)
            .collect();
        ok &= spread(&cs) <= STABLE_SPREAD;
        parts.push(format!("{} {:.3} -> {:.3}", s.as_str(), cs[0], cs[1]));
    }
    (ok, format!("d/eps: {}", parts.join(", ")))
}

#[test]
fn criterion_5_homoclinic_orbits() {
    run(5, "homoclinic orbits at L = pi/2", 60, |c| {
        let rows = orbit_rows();
        c.check("orbits found", rows.len() == 4, format!("{} orbits", rows.len()));
        c.check("alpha > 0", rows.iter().all(|r| r.diag.all_positive), "");
        for s in Symmetry::BOTH {
            let idx: Vec<usize> = rows.iter().filter(|r| r.symmetry == s).map(|r| r.diag.monotone_tail_index).collect();
            c.check(
                format!("monotone tails ({})", s.as_str()),
                idx.windows(2).all(|w| w[0] == w[1]),
                format!("N = {idx:?}"),
            );
        }
        let dev = rows
            .iter()
            .map(|r| (r.diag.tail_decay_ratio - r.lambda_minus).abs())
            .fold(0.0, f64::max);
        c.check("tail ratio vs stable eigenvalue", dev <= 1e-3, format!("max deviation {dev:.2e}"));
        let (ok, detail) = tail_ratio_literal(&rows);
        c.literal("tail ratio vs 1 - eps nu", ok, detail);
        let (ok, detail) = l2_constants(&rows);
        c.literal("l2 distance <= C eps", ok, detail);
        let weighted: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.4}", r.diag.l2_distance_to_sech / r.eps.sqrt()))
            .collect();
        c.check("l2 distance / sqrt(eps) (information)", true, weighted.join(" "));
    });
}

#[test]
#[ignore = "the tail ratio differs from 1 - eps nu by O(eps^2), about 5e-3 at eps = 0.02"]
fn tail_ratio_within_1e3_of_leading_order() {
    let (ok, detail) = tail_ratio_literal(&orbit_rows());
    assert!(ok, "{detail}");
}

#[test]
#[ignore = "the scaled l2 distance to the sech profile scales like sqrt(eps)"]
fn sech_distance_linear_in_eps() {
    let (ok, detail) = l2_constants(&orbit_rows());
    assert!(ok, "{detail}");
}

fn h2_constants() -> Vec<(f64, f64)> {
    let p = GraphParams::new(PI).unwrap();
    [0.08, 0.04, 0.02]
        .iter()
        .map(|&eps| {
            let orbit = shoot_homoclinic(&PeriodMap::new(eps, p), Symmetry::LinkCentered, &HomoclinicOptions::default()).unwrap();
            let bs = assemble_profile(&orbit, &AssemblyOptions::default()).unwrap();
            (eps, bs.h2_norm)
        })
        .collect()
}

#[test]
fn criterion_6_bound_states() {
    run(6, "bound states at eps = 0.1, L = pi", 60, |c| {
        let eps = 0.1;
        let p = GraphParams::new(PI).unwrap();
        for s in Symmetry::BOTH {
            let orbit = shoot_homoclinic(&PeriodMap::new(eps, p), s, &HomoclinicOptions::default()).unwrap();
            let from_orbit = assemble_profile(&orbit, &AssemblyOptions::default()).unwrap();
            let shot = shoot_bound_state(-eps * eps, &p, s, &ShootingOptions::default()).unwrap();
            let name = s.as_str();
            for (src, bs) in [("orbit", &from_orbit), ("shooting", &shot)] {
                let min = bs.profile.min_value();
                c.check(format!("{name}/{src} positive"), min > 0.0, format!("min {min:.2e}"));
                let m = mirror_defect(&bs.profile, s);
                c.check(format!("{name}/{src} mirror symmetry"), m <= 1e-8, format!("{m:.2e}"));
                let r = bs.max_kirchhoff_residual;
                c.check(format!("{name}/{src} Kirchhoff residual"), r <= 1e-8, format!("{r:.2e}"));
            }
            let d = profile_sup_difference(&from_orbit.profile, &shot.profile);
            c.check(format!("{name} orbit vs shooting"), d <= 1e-6, format!("sup difference {d:.2e}"));
        }
        let h2 = h2_constants();
        let over_eps: Vec<f64> = h2.iter().map(|(e, h)| h / e).collect();
        c.literal(
            "h2 norm / eps bounded",
            spread(&over_eps) <= STABLE_SPREAD,
            format!("over eps = 0.08, 0.04, 0.02: {:.3} {:.3} {:.3}", over_eps[0], over_eps[1], over_eps[2]),
        );
        let over_root: Vec<String> = h2.iter().map(|(e, h)| format!("{:.4}", h / e.sqrt())).collect();
        c.check("h2 norm / sqrt(eps) (information)", true, over_root.join(" "));
    });
}

#[test]
#[ignore = "the H2 norm of an O(eps) profile of width 1/eps scales like sqrt(eps)"]
fn h2_norm_linear_in_eps() {
    let cs: Vec<f64> = h2_constants().iter().map(|(e, h)| h / e).collect();
    assert!(spread(&cs) <= STABLE_SPREAD, "h2/eps = {cs:?}");
}

#[test]
fn criterion_7_mass_asymptotics() {
    run(7, "mass asymptotics at L = pi/2", 120, |c| {
        let p = GraphParams::new(FRAC_PI_2).unwrap();
        let a = compare_families(0.05, &p, &AssemblyOptions::default()).unwrap();
        let q0 = 2.0 * mu(&p) * 0.05;
        for (name, q) in [("link", a.q_link), ("ring", a.q_ring)] {
            let rel = (q - q0).abs() / q0;
            c.check(format!("Q ({name}) vs 2 mu eps"), rel <= 0.05, format!("Q {q:.6}, 2 mu eps {q0:.6}, rel {rel:.2e}"));
        }
        c.check("dQ_rel at eps = 0.05", a.dq_rel <= 1e-2, format!("{:.2e}", a.dq_rel));
        let b = compare_families(0.025, &p, &AssemblyOptions::default()).unwrap();
        let ratio = a.dq_rel / b.dq_rel;
        c.check("dQ_rel decays like eps^2", ratio >= 4.0, format!("{:.2e} -> {:.2e}, ratio {ratio:.1}", a.dq_rel, b.dq_rel));
    });
}

#[test]
fn criterion_8_large_lambda() {
    run(8, "large |Lambda| at L = pi", 10, |c| {
        let p = GraphParams::new(PI).unwrap();
        for s in Symmetry::BOTH {
            let name = s.as_str();
            match shoot_bound_state(-10.0, &p, s, &ShootingOptions::default()) {
                Ok(bs) => {
                    c.check(format!("{name} found"), true, format!("phi0 {:.6}", bs.phi0));
                    let peak = bs.profile.sup_abs();
                    let outer = bs
                        .profile
                        .cells()
                        .iter()
                        .filter(|cell| cell.cell.0.abs() >= 2)
                        .map(|cell| bs.profile.cell_sup(cell.cell.0).unwrap())
                        .fold(0.0, f64::max);
                    c.check(format!("{name} concentration"), outer < 1e-3 * peak, format!("outer/peak {:.2e}", outer / peak));
                }
                Err(e) => c.check(format!("{name} found"), false, e.to_string()),
            }
        }
    });
}
