//! Cubic NLS on a necklace periodic quantum graph: band structure, the
//! edge-to-edge period map, homoclinic orbits of that map and bound states
//! on the graph.

pub mod error;
pub mod bound_state;
pub mod discrete_map;
pub mod graph;
pub mod homoclinic;
pub mod ode;
pub mod roots;
pub mod spectral;

pub use error::{Error, Result};
pub use bound_state::{assemble_profile, charge, compare_families, energy, h2_norm, kirchhoff_residual, shoot_bound_state, AssemblyOptions, BoundState, FamilyComparison, ShootingOptions, Source};
pub use discrete_map::{asymptotic_symmetry_curve, scaled_map_truncated, CurveMode, MapState, PeriodMap, ScaledState, Symmetry};
pub use graph::{CellIndex, EdgeKind, EdgeRef, EdgeSamples, GraphParams, PiecewiseProfile};
pub use homoclinic::{orbit_diagnostics, sech_approximation, shoot_homoclinic, unstable_direction, HomoclinicOptions, Orbit, OrbitDiagnostics};
pub use ode::{first_invariant, integrate_ivp, Integrator, IvpSolution};
pub use spectral::{find_bands, monodromy_matrix, trace, trace_hyperbolic, Band, Matrix2};
