//! Mild solutions: Picard iteration on grids and the explicit small-data supersolution.

pub mod picard;
pub mod supersolution;

pub use picard::{
    picard_evolve, CapInfo, GridInfo, IterationRecord, MildRunReport, PicardOptions, RunStatus,
    TimeGridInfo,
};
pub use supersolution::{
    verify_supersolution_case_a, verify_supersolution_case_a_with, SupersolutionOptions,
    SupersolutionReport, SupersolutionSample,
};
