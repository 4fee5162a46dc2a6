//! File formats, corpus generation, Monte-Carlo sampling and verification
//! suites around the exact `profitlab` core.

pub mod generate;
pub mod io;
pub mod montecarlo;
pub mod report;
pub mod suites;
