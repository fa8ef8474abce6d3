//! IO, file formats, reports and the stage-parallel runner around
//! `redunplan-core`. The binary front end lives in `main.rs`.

pub mod audit;
pub mod export;
pub mod formats;
pub mod report;
pub mod threads;
