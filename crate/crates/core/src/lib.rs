pub mod adtest;
pub mod error;
pub mod metrics;
pub mod moments;
pub mod rng;
pub mod permtest;
pub mod audit;
pub mod ingest;
pub mod calibrate;
pub mod report;
pub mod cli;
