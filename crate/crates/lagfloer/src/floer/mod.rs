//! Bounding cochains, twisted operations, Floer cohomology and the
//! presentation-level constructions built on them: double-point data,
//! unions of Lagrangians, energy rescaling and Legendrian lattices.

mod hf;
mod mc;
mod presentation;
mod sectors;
mod wall;

pub use hf::{hf_compute, hf_product, is_boundary, Grading, HfDegree, HfProduct, HfReport};
pub use mc::{
    check_gauge_transport, gauge_act, mc_residual, mc_solve, twist, twist_arities, twist_morphism, BoundingCochain,
    GaugeResult, McOutcome, Obstruction, TransportWitness,
};
pub use presentation::{
    acyclicity_feasible, bc_criteria, validate_double_points, whitney_preset, BcConclusion, BcReport, DoublePoint,
    LagrangianPresentation,
};
pub use sectors::{sector_project, union_sectors, CrossEntry, CrossPair, Sector, UnionPresentation};
pub use wall::{lattice_reachable, legendrian_validate, rescale_regrade, LatticeViolation, LegendrianReport, RescaleReport};
