use std::f64::consts::FRAC_1_SQRT_2;
use std::result::Result;

use necklace::bound_state::{mirror_defect, profile_sup_difference};
use necklace::discrete_map::linearized_map;
use necklace::homoclinic::{mu, nu};
use necklace::spectral::{band_edge_curvature, classify_flat_band, fit_lowest_band, FlatBandLocation};
use necklace::*;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::output::{num, Artifact, Table};
use crate::CliError;

const ORBIT_COLUMNS: &[&str] = &["n", "alpha", "beta", "gamma", "delta"];
const PROFILE_COLUMNS: &[&str] = &["edge_kind", "cell", "x", "phi", "dphi"];

fn params(l: f64) -> Result<GraphParams, CliError> {
    check_link(l)?;
    Ok(GraphParams::new(l)?)
}

pub fn bands(args: &BandsArgs) -> Result<Vec<Artifact>, CliError> {
    let p = params(args.l)?;
    if !(args.omega_max > 0.0) {
        return Err(CliError::Usage(format!("--omega-max must be positive, got {}", args.omega_max)));
    }
    if args.grid < 100 {
        return Err(CliError::Usage(format!("--grid must be at least 100, got {}", args.grid)));
    }
    let bands = find_bands(&p, args.omega_max, args.grid)?;
    let flat = (1..=args.omega_max.floor() as u32)
        .map(|m| classify_flat_band(m, &p))
        .collect::<necklace::Result<Vec<_>>>()?;

    let mut table = Table::new(&["omega", "T", "in_band"]);
    let mut rows = Vec::with_capacity(args.grid + 1);
    for i in 0..=args.grid {
        let omega = args.omega_max * i as f64 / args.grid as f64;
        let t = trace(omega, &p);
        let in_band = t.abs() <= 2.0;
        table.push(vec![num(omega), num(t), in_band.to_string()]);
        rows.push(json!({"omega": omega, "T": t, "in_band": in_band}));
    }
    let data = json!({
        "params": p,
        "bands": bands,
        "flat_bands": flat,
        "trace": rows,
    });
    Ok(vec![Artifact { label: None, data, table }])
}

pub fn map(args: &MapArgs) -> Result<Vec<Artifact>, CliError> {
    let p = params(args.l)?;
    let eps = args.amplitude.resolve()?;
    if !(args.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", args.tol)));
    }
    let map = PeriodMap::with_tol(eps, p, args.tol);
    let mut x = ScaledState::new(args.alpha, args.beta).unscaled(eps);
    let mut table = Table::new(ORBIT_COLUMNS);
    let mut points = Vec::new();
    for k in 0..=args.steps {
        let mid = map.link_step(x)?.scaled(eps);
        let s = x.scaled(eps);
        let n = if args.inverse { -(k as i64) } else { k as i64 };
        table.push(vec![n.to_string(), num(s.alpha), num(s.beta), num(mid.alpha), num(mid.beta)]);
        points.push(json!({"n": n, "alpha": s.alpha, "beta": s.beta, "gamma": mid.alpha, "delta": mid.beta}));
        if k < args.steps {
            x = if args.inverse { map.inverse_step(x)? } else { map.step(x)? };
        }
    }
    let lin = unstable_direction(&map, None)?;
    let data = json!({
        "params": p,
        "eps": eps,
        "lambda": -eps * eps,
        "points": points,
        "origin": {
            "lambda_plus": lin.lambda_plus,
            "lambda_minus": lin.lambda_minus,
            "unstable_vector": lin.vector,
            "scaled_slope": lin.scaled_slope(),
            "trace": trace_hyperbolic(eps, &p),
        },
    });
    Ok(vec![Artifact { label: None, data, table }])
}

fn orbit_artifact(orbit: &Orbit, map: &PeriodMap, curve_points: usize) -> Result<Artifact, CliError> {
    let eps = orbit.eps;
    let mut table = Table::new(ORBIT_COLUMNS);
    let mut points = Vec::new();
    for n in orbit.n_min()..=orbit.n_max() {
        let s = orbit.state(n).expect("index in range").scaled(eps);
        let mid = orbit.mid(n).map(|m| m.scaled(eps));
        let (g, d) = mid.map_or((f64::NAN, f64::NAN), |m| (m.alpha, m.beta));
        table.push(vec![n.to_string(), num(s.alpha), num(s.beta), num(g), num(d)]);
        points.push(json!({
            "n": n,
            "alpha": s.alpha,
            "beta": s.beta,
            "gamma": mid.map(|m| m.alpha),
            "delta": mid.map(|m| m.beta),
        }));
    }
    let lin = unstable_direction(map, None)?;
    let slope = lin.scaled_slope();
    let mut curve = Vec::new();
    let count = curve_points.max(2);
    for i in 0..count {
        let alpha = 1.5 * i as f64 / (count - 1) as f64;
        let asym = asymptotic_symmetry_curve(alpha, eps, &orbit.params, orbit.symmetry);
        let exact = map.symmetry_curve(alpha, orbit.symmetry, CurveMode::Exact).ok();
        curve.push(json!({
            "alpha": alpha,
            "beta_asymptotic": asym,
            "beta_exact": exact,
            "beta_unstable_line": slope * alpha,
        }));
    }
    let data = json!({
        "params": orbit.params,
        "eps": eps,
        "symmetry": orbit.symmetry.as_str(),
        "half_length": orbit.half_length,
        "crossing_step": orbit.crossing_step,
        "seed_parameter": orbit.seed_parameter,
        "residual_defect": orbit.residual_defect,
        "lambda_plus": orbit.lambda_plus,
        "diagnostics": orbit.diagnostics,
        "orbit": points,
        "curves": curve,
    });
    Ok(Artifact {
        label: Some(orbit.symmetry.as_str().to_string()),
        data,
        table,
    })
}

pub fn homoclinic(args: &HomoclinicArgs) -> Result<Vec<Artifact>, CliError> {
    let p = params(args.l)?;
    let eps = args.amplitude.resolve()?;
    let map = PeriodMap::new(eps, p);
    args.symmetry
        .expand()
        .into_iter()
        .map(|s| {
            let orbit = shoot_homoclinic(&map, s, &HomoclinicOptions::default())?;
            orbit_artifact(&orbit, &map, args.curve_points)
        })
        .collect()
}

fn method_name(source: Source) -> &'static str {
    match source {
        Source::FromOrbit => "orbit",
        Source::DirectShooting => "shooting",
    }
}

fn profile_artifact(bs: &BoundState, label: String, other: Option<f64>) -> Artifact {
    let profile = &bs.profile;
    let p = profile.params;
    let mut table = Table::new(PROFILE_COLUMNS);
    let mut edges = Vec::new();
    for (edge, samples, weight) in profile.edges() {
        let kind = edge.kind.as_str();
        for i in 0..samples.len() {
            table.push(vec![
                kind.to_string(),
                edge.cell.0.to_string(),
                num(samples.x[i]),
                num(samples.phi[i]),
                num(samples.dphi[i]),
            ]);
        }
        edges.push(json!({
            "edge_kind": kind,
            "cell": edge.cell.0,
            "weight": weight,
            "x": samples.x,
            "phi": samples.phi,
            "dphi": samples.dphi,
        }));
    }
    let mut vertices = Vec::new();
    for c in profile.cells() {
        let (v, _) = c.link.first();
        vertices.push(json!({"x": c.link.x[0], "phi": v}));
        let (w, _) = c.upper.first();
        vertices.push(json!({"x": c.upper.x[0], "phi": w}));
    }
    if let Some(c) = profile.cells().last() {
        let (v, _) = c.upper.last();
        vertices.push(json!({"x": c.upper.x[c.upper.len() - 1], "phi": v}));
    }
    let x0 = bs.symmetry.center(&p);
    let eps = bs.eps;
    let sech: Vec<Value> = profile
        .edges()
        .flat_map(|(_, s, _)| s.x.iter().copied().collect::<Vec<_>>())
        .map(|x| json!({"x": x, "phi": eps / (eps * (x - x0)).cosh()}))
        .collect();
    let mut data = json!({
        "params": p,
        "eps": eps,
        "lambda": bs.lambda,
        "symmetry": bs.symmetry.as_str(),
        "method": method_name(bs.source),
        "symmetric_ring": profile.symmetric_ring(),
        "phi0": bs.phi0,
        "charge": bs.charge,
        "energy": bs.energy,
        "h2_norm": bs.h2_norm,
        "max_kirchhoff_residual": bs.max_kirchhoff_residual,
        "mirror_defect": bs.mirror_defect,
        "vertices": vertices,
        "sech_center": x0,
        "sech": sech,
        "edges": edges,
    });
    if let Some(d) = other {
        data["sup_difference_to_other_method"] = json!(d);
    }
    Artifact {
        label: Some(label),
        data,
        table,
    }
}

pub fn boundstate(args: &BoundStateArgs) -> Result<Vec<Artifact>, CliError> {
    let p = params(args.l)?;
    let eps = args.amplitude.resolve()?;
    if args.samples_per_edge < 16 || args.samples_per_edge % 2 != 0 {
        return Err(CliError::Usage(format!(
            "--samples-per-edge must be even and at least 16, got {}",
            args.samples_per_edge
        )));
    }
    if !(args.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", args.tol)));
    }
    let assembly = AssemblyOptions {
        samples_per_edge: args.samples_per_edge,
        tol: args.tol,
        ..AssemblyOptions::default()
    };
    let shooting = ShootingOptions {
        n_cells: args.n_cells,
        tol: args.tol,
        samples_per_edge: args.samples_per_edge,
        ..ShootingOptions::default()
    };
    let symmetries = args.symmetry.expand();
    let mut out = Vec::new();
    for s in &symmetries {
        let from_orbit = match args.method {
            Method::Orbit | Method::Both => {
                let orbit = shoot_homoclinic(&PeriodMap::new(eps, p), *s, &HomoclinicOptions::default())?;
                Some(assemble_profile(&orbit, &assembly)?)
            }
            Method::Shooting => None,
        };
        let shot = match args.method {
            Method::Shooting | Method::Both => Some(shoot_bound_state(-eps * eps, &p, *s, &shooting)?),
            Method::Orbit => None,
        };
        let diff = match (&from_orbit, &shot) {
            (Some(a), Some(b)) => Some(profile_sup_difference(&a.profile, &b.profile)),
            _ => None,
        };
        for bs in from_orbit.iter().chain(shot.iter()) {
            let label = match (symmetries.len() > 1, args.method) {
                (_, Method::Both) => format!("{}_{}", s.as_str(), method_name(bs.source)),
                _ => s.as_str().to_string(),
            };
            out.push(profile_artifact(bs, label, diff));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

struct Checklist(Vec<CheckResult>);

impl Checklist {
    /// Records `value <= threshold`.
    fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.0.push(CheckResult {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
        });
    }

    /// Records `value >= threshold`.
    fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.0.push(CheckResult {
            name: name.into(),
            passed: value >= threshold,
            value,
            threshold,
        });
    }

    /// Records an error as a failed check instead of aborting the run.
    fn attempt<T>(&mut self, name: &str, r: necklace::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(_) => {
                self.0.push(CheckResult {
                    name: format!("{name} (error)"),
                    passed: false,
                    value: f64::NAN,
                    threshold: f64::NAN,
                });
                None
            }
        }
    }
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

/// The checklist behind `verify`. Returns the results; the caller decides the exit code.
pub fn verify_checks(args: &VerifyArgs) -> Result<Vec<CheckResult>, CliError> {
    let p = params(args.l)?;
    if args.eps.is_empty() || args.eps.iter().any(|e| !(*e > 0.0)) {
        return Err(CliError::Usage("--eps needs positive values".into()));
    }
    let mut c = Checklist(Vec::new());

    if let Some(bands) = c.attempt("bands", find_bands(&p, 6.0, 4000)) {
        c.at_most("first band starts at omega = 0", bands[0].omega_lo, 0.0);
    }
    let trace_dev = (1..=5)
        .map(|m| {
            let mf = m as f64;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            (trace(mf, &p) - 2.0 * sign * (mf * p.link()).cos()).abs()
        })
        .fold(0.0, f64::max);
    c.at_most("trace at integer frequencies", trace_dev, 1e-12);
    for m in 1..=5u32 {
        if let Some(fb) = c.attempt("flat band", classify_flat_band(m, &p)) {
            let edge = (trace(m as f64, &p).abs() - 2.0).abs() <= 1e-9;
            let consistent = edge == (fb.location == FlatBandLocation::Edge);
            c.at_least(format!("flat band m = {m} location consistent with trace"), consistent as u8 as f64, 1.0);
        }
    }
    if let Some((quad, _)) = c.attempt("band fit", fit_lowest_band(&[0.05, 0.1, 0.2], &p)) {
        let want = 1.0 / band_edge_curvature(&p);
        c.at_most("band-edge curvature (relative)", (quad - want).abs() / want, 1e-2);
    }

    let eps = 0.1;
    let x_end = 10.0 / eps;
    let at: Vec<f64> = (1..200).map(|i| i as f64 * x_end / 200.0).collect();
    if let Some(sol) = c.attempt("soliton", integrate_ivp(eps, 0.0, eps, x_end, 1e-12, &at)) {
        let err = sol.samples.iter().map(|s| (s.psi - eps / (eps * s.x).cosh()).abs()).fold(0.0, f64::max);
        c.at_most("exact sech solution", err, 1e-8);
        c.at_most("first invariant drift", sol.invariant_drift, 1e-10);
    }
    let k = eps * FRAC_1_SQRT_2;
    if let Some(sol) = c.attempt("constant", integrate_ivp(k, 0.0, eps, x_end, 1e-12, &at)) {
        let err = sol.samples.iter().map(|s| (s.psi - k).abs().max(s.dpsi.abs())).fold(0.0, f64::max);
        c.at_most("constant solution", err, 1e-10);
    }

    let e0 = args.eps[0];
    let map = PeriodMap::new(e0, p);
    if let Some(z) = c.attempt("origin", map.step(MapState::ZERO)) {
        c.at_most("origin is fixed", z.norm(), 1e-9);
    }
    let kk = e0 * FRAC_1_SQRT_2;
    if let Some(z) = c.attempt("constant state", map.step(MapState::new(kk, 0.0))) {
        c.at_most("constant state is fixed", (z.a - kk).abs().max(z.b.abs()), 1e-9);
    }
    let mut det_dev: f64 = 0.0;
    for (al, be) in [(0.0, 0.0), (0.3, 0.0), (0.7, 0.01), (1.0, -0.02), (0.5, 0.03)] {
        if let Some(j) = c.attempt("jacobian", map.jacobian(ScaledState::new(al, be).unscaled(e0), None)) {
            det_dev = det_dev.max((j.det() - 1.0).abs());
        }
    }
    c.at_most("jacobian determinant is one", det_dev, 1e-6);
    if let Some(j) = c.attempt("jacobian", map.jacobian(MapState::ZERO, None)) {
        c.at_most("jacobian trace matches hyperbolic trace", (j.trace() - trace_hyperbolic(e0, &p)).abs(), 1e-6);
    }
    let x = ScaledState::new(0.6, -0.01).unscaled(e0);
    if let Some(y) = c.attempt("reversibility", map.step(x).and_then(|y| map.inverse_step(y))) {
        c.at_most("inverse map undoes the map", (y.a - x.a).abs().max((y.b - x.b).abs()), 1e-9);
    }

    let mut eig_c = Vec::new();
    let mut tail_c = Vec::new();
    for &e in &args.eps {
        let m = PeriodMap::new(e, p);
        let en = e * nu(&p);
        if let Some(u) = c.attempt("eigenvalues", unstable_direction(&m, None)) {
            eig_c.push((u.lambda_plus - 1.0 - en).abs().max((u.lambda_minus - 1.0 + en).abs()) / (e * e));
        }
        let lin = linearized_map(e, &p);
        let (_, lp) = lin.real_eigenvalues().unwrap_or((f64::NAN, f64::NAN));
        for s in Symmetry::BOTH {
            let name = format!("{} orbit at eps = {e}", s.as_str());
            if let Some(o) = c.attempt(&name, shoot_homoclinic(&m, s, &HomoclinicOptions::default())) {
                let d = o.diagnostics;
                c.at_least(format!("{name}: positive"), d.all_positive as u8 as f64, 1.0);
                c.at_most(format!("{name}: tail ratio vs stable eigenvalue"), (d.tail_decay_ratio - 1.0 / lp).abs(), 1e-3);
                tail_c.push((d.tail_decay_ratio - (1.0 - en)).abs() / (e * e));
            }
        }
    }
    if args.eps.len() >= 2 {
        c.at_most("eigenvalues are 1 +- eps nu + O(eps^2) (constant spread)", spread(&eig_c), 1.25);
        c.at_most("tail ratio is 1 - eps nu + O(eps^2) (constant spread)", spread(&tail_c), 1.25);
    }

    let eq = 0.05;
    let q0 = 2.0 * mu(&p) * eq;
    if let Some(cmp) = c.attempt("families", compare_families(eq, &p, &AssemblyOptions::default())) {
        c.at_most("mass leading order, link family (relative)", (cmp.q_link - q0).abs() / q0, 0.05);
        c.at_most("mass leading order, ring family (relative)", (cmp.q_ring - q0).abs() / q0, 0.05);
        c.at_most("mass difference between families (relative)", cmp.dq_rel, 1e-2);
    }

    let assembly = AssemblyOptions {
        flux_factor: args.kirchhoff_factor,
        residual_tol: f64::INFINITY,
        ..AssemblyOptions::default()
    };
    for s in Symmetry::BOTH {
        let name = format!("{} profile at eps = {e0}", s.as_str());
        let bs = shoot_homoclinic(&map, s, &HomoclinicOptions::default()).and_then(|o| assemble_profile(&o, &assembly));
        if let Some(bs) = c.attempt(&name, bs) {
            c.at_most(format!("{name}: Kirchhoff residual"), bs.max_kirchhoff_residual, 1e-8);
            c.at_most(format!("{name}: mirror symmetry"), mirror_defect(&bs.profile, s), 1e-8);
            c.at_least(format!("{name}: positive"), bs.profile.min_value(), f64::MIN_POSITIVE);
        }
    }
    Ok(c.0)
}

pub fn verify_artifact(results: &[CheckResult]) -> Artifact {
    let mut table = Table::new(&["name", "passed", "value", "threshold"]);
    for r in results {
        table.push(vec![r.name.clone(), r.passed.to_string(), num(r.value), num(r.threshold)]);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let data = json!({
        "passed": failed == 0,
        "total": results.len(),
        "failed": failed,
        "checks": results,
    });
    Artifact { label: None, data, table }
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    #[serde(rename = "L")]
    l: f64,
    eps: f64,
    symmetry: &'static str,
    phi0: f64,
    charge: f64,
    energy: f64,
    h2_norm: f64,
    max_kirchhoff_residual: f64,
    tail_decay_ratio: f64,
    l2_distance_to_sech: f64,
}

pub fn sweep(args: &SweepArgs) -> Result<Vec<Artifact>, CliError> {
    for &l in &args.l {
        check_link(l)?;
    }
    if args.eps.iter().any(|e| !(*e > 0.0)) {
        return Err(CliError::Usage("--eps needs positive values".into()));
    }
    let assembly = AssemblyOptions {
        samples_per_edge: args.samples_per_edge,
        ..AssemblyOptions::default()
    };
    let mut jobs = Vec::new();
    for &l in &args.l {
        for &e in &args.eps {
            for s in args.symmetry.expand() {
                jobs.push((l, e, s));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(l, eps, s)| -> necklace::Result<SweepRow> {
                let p = GraphParams::new(l)?;
                let orbit = shoot_homoclinic(&PeriodMap::new(eps, p), s, &HomoclinicOptions::default())?;
                let bs = assemble_profile(&orbit, &assembly)?;
                Ok(SweepRow {
                    l,
                    eps,
                    symmetry: s.as_str(),
                    phi0: bs.phi0,
                    charge: bs.charge,
                    energy: bs.energy,
                    h2_norm: bs.h2_norm,
                    max_kirchhoff_residual: bs.max_kirchhoff_residual,
                    tail_decay_ratio: orbit.diagnostics.tail_decay_ratio,
                    l2_distance_to_sech: orbit.diagnostics.l2_distance_to_sech,
                })
            })
            .collect::<necklace::Result<Vec<_>>>()
    })?;
    let mut table = Table::new(&[
        "L",
        "eps",
        "symmetry",
        "phi0",
        "charge",
        "energy",
        "h2_norm",
        "max_kirchhoff_residual",
        "tail_decay_ratio",
        "l2_distance_to_sech",
    ]);
    for r in &rows {
        table.push(vec![
            num(r.l),
            num(r.eps),
            r.symmetry.to_string(),
            num(r.phi0),
            num(r.charge),
            num(r.energy),
            num(r.h2_norm),
            num(r.max_kirchhoff_residual),
            num(r.tail_decay_ratio),
            num(r.l2_distance_to_sech),
        ]);
    }
    let data = json!({ "rows": rows });
    Ok(vec![Artifact { label: None, data, table }])
}
