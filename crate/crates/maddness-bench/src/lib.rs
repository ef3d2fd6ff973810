//! Benchmark harness for the lookup-table matrix multiplication estimators:
//! sweeps method x codebook-count grids over seeded synthetic tasks and
//! reports NMSE, argmax agreement, operation counts, and best-of-reps wall
//! times as CSV and JSON.

pub mod config;
pub mod report;
pub mod runner;
