//! Shared inputs for the criterion benches in `benches/`.

pub const RUNNING: &str = include_str!("../../../programs/running.pw");
pub const COUNTPRIMES: &str = include_str!("../../../programs/countprimes.pw");
