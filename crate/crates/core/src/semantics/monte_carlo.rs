use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::lang::{Label, Program};
use crate::linalg::ProbVector;

use super::sos::{sos_step, Config};
use super::{SemError, StateSpace};

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McOptions {
    pub trials: u64,
    pub seed: u64,
    pub max_steps: u64,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            trials: 100_000,
            seed: 0,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeStat {
    pub from: Label,
    pub to: Label,
    pub count: u64,
    /// `count` over all transitions leaving `from` along an edge.
    pub freq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub trials: u64,
    pub edges: Vec<EdgeStat>,
    /// Runs still going after `max_steps` steps.
    pub nonterminated: u64,
    /// Runs stopped by an evaluation fault (e.g. division by zero).
    pub faults: u64,
}

impl McReport {
    pub fn frequency(&self, from: Label, to: Label) -> Option<f64> {
        self.edges.iter().find(|e| e.from == from && e.to == to).map(|e| e.freq)
    }
}

/// Per-trial seed: SplitMix64 finaliser over (master seed, trial index).
fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(trial.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Default)]
struct Tally {
    edges: BTreeMap<(Label, Label), u64>,
    nonterminated: u64,
    faults: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (k, v) in other.edges {
            *self.edges.entry(k).or_default() += v;
        }
        self.nonterminated += other.nonterminated;
        self.faults += other.faults;
        self
    }
}

fn sample_index(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().unwrap();
    let target = u * total;
    cdf.partition_point(|&c| c <= target).min(cdf.len() - 1)
}

/// Runs the program `trials` times from states drawn from `rho0` and counts
/// flow-edge traversals. Results depend only on the options, not on how
/// trials are scheduled across threads.
pub fn run_monte_carlo(program: &Program, rho0: &ProbVector, opts: McOptions) -> Result<McReport, SemError> {
    let ss = StateSpace::new(&program.decls)?;
    if rho0.len() != ss.len() {
        return Err(SemError::DistributionSize {
            expected: ss.len(),
            found: rho0.len(),
        });
    }
    if rho0.values().iter().any(|&v| v < 0.0) || rho0.one_norm() == 0.0 {
        return Err(SemError::NotADistribution);
    }
    let mut cdf = Vec::with_capacity(rho0.len());
    let mut acc = 0.0;
    for &p in rho0.values() {
        acc += p;
        cdf.push(acc);
    }
    if program.body.labels().len() != {
        let mut n = 0;
        program.body.visit_blocks(&mut |_| n += 1);
        n
    } {
        return Err(SemError::Unlabelled);
    }

    const CHUNK: u64 = 4096;
    let chunks: Vec<(u64, u64)> = (0..opts.trials)
        .step_by(CHUNK as usize)
        .map(|start| (start, (start + CHUNK).min(opts.trials)))
        .collect();

    let tally = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut t = Tally::default();
            for trial in start..end {
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(opts.seed, trial));
                let s0 = ss.state(sample_index(&cdf, rng.random::<f64>()));
                let mut c = Config::new(&program.body, s0);
                let mut steps = 0;
                loop {
                    if c.is_terminal() {
                        break;
                    }
                    if steps >= opts.max_steps {
                        t.nonterminated += 1;
                        break;
                    }
                    match sos_step(&mut c, &program.decls, &mut rng) {
                        Ok(tr) => {
                            if let Some(to) = tr.to {
                                *t.edges.entry((tr.from, to)).or_default() += 1;
                            }
                        }
                        Err(_) => {
                            t.faults += 1;
                            break;
                        }
                    }
                    steps += 1;
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);

    let mut out_totals: BTreeMap<Label, u64> = BTreeMap::new();
    for (&(from, _), &n) in &tally.edges {
        *out_totals.entry(from).or_default() += n;
    }
    let edges = tally
        .edges
        .iter()
        .map(|(&(from, to), &count)| EdgeStat {
            from,
            to,
            count,
            freq: count as f64 / out_totals[&from] as f64,
        })
        .collect();
    Ok(McReport {
        trials: opts.trials,
        edges,
        nonterminated: tally.nonterminated,
        faults: tally.faults,
    })
}
