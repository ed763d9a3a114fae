//! Command-line frontend: instance files, seeded generation, solving,
//! verification and oracle queries.

pub mod commands;
pub mod generate;
pub mod io;
pub mod report;
