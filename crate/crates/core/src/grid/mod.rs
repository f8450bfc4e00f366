//! Sampled mappings `Ω ⊂ R^n → R^m`, their finite-difference differentials
//! and the pullback, defect and chain computations on top of them.

mod generator;
mod gridmap;
mod io;
mod mapping;
mod pullback;

pub use generator::{AnalyticMap, Generator, PolyTerm};
pub use gridmap::GridMap;
pub use io::GridSpec;
pub use mapping::{rescale, FnMap, Mapping, Rescaled};
pub use pullback::{
    eta_differential, horizontality_defect, pullback_field, pullback_form_field, rank_histogram, vanishing_chain_check,
    ChainReport, ChainStep, DefectField, DefectMode, PullbackField, RANK_REL_TOL,
};
