//! The full chain: perfect completeness, three turns, public coin, one round.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{
    lift_to_rewindable, make_perfectly_rewindable, parallelize_to_three, public_coin_to_one_round,
    rewind_to_perfect_completeness, to_public_coin_3turn, TransformOptions, Transformed,
};
use crate::error::{Error, Result};
use crate::protocol::ProtocolInstance;

/// Soundness claims carried through the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComposedBounds {
    /// Claimed soundness of the input.
    pub input: f64,
    /// After rewinding: `1/2 + 2√s + 5s/2`.
    pub rewound: f64,
    /// Turn count fed to the three-turn step.
    pub turns: usize,
    /// After the three-turn cascade: `1 − (1 − s)/(m − 1)²`.
    pub three_turn: f64,
    /// After the public-coin step, and unchanged by the one-round step.
    pub final_soundness: f64,
    /// `p'` with final soundness `1 − 1/p'`.
    pub p_prime: f64,
}

impl ComposedBounds {
    pub fn new(s: f64, rewound_turns: usize) -> Self {
        let rewound = 0.5 + 2.0 * s.sqrt() + 2.5 * s;
        let mm = rewound_turns as f64 - 1.0;
        let three_turn = 1.0 - (1.0 - rewound) / (mm * mm);
        let final_soundness = (1.0 + three_turn.max(0.0).sqrt()) / 2.0;
        Self {
            input: s,
            rewound,
            turns: rewound_turns,
            three_turn,
            final_soundness,
            p_prime: 1.0 / (1.0 - final_soundness),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    /// One entry per stage, in order.
    pub stages: Vec<(&'static str, Transformed)>,
    pub bounds: ComposedBounds,
}

impl PipelineOutcome {
    pub fn last(&self) -> &ProtocolInstance {
        &self.stages.last().expect("four stages").1.instance
    }
}

/// Stage names in order.
pub const STAGES: [&str; 5] = ["rewindable", "rewind", "three-turn", "public-coin", "one-round"];

fn in_stage(stage: &str, e: Error) -> Error {
    match e {
        Error::Precondition(m) => Error::Precondition(format!("stage `{stage}`: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("stage `{stage}`: {m}")),
        Error::Budget(m) => Error::Budget(format!("stage `{stage}`: {m}")),
        other => other,
    }
}

/// Runs every stage on a yes-instance. With `lifted`, the instance is carried
/// through with the capped construction and no value checks, which is how
/// a paired no-instance is compiled for auditing.
pub fn run_pipeline(inst: &ProtocolInstance, lifted: bool, opts: &TransformOptions) -> Result<PipelineOutcome> {
    let (c, s) = match (inst.claims.completeness, inst.claims.soundness) {
        (Some(c), Some(s)) => (c, s),
        _ => {
            return Err(in_stage(
                STAGES[0],
                Error::Precondition("the pipeline needs claimed completeness and soundness".into()),
            ))
        }
    };
    if c <= s {
        return Err(in_stage(
            STAGES[0],
            Error::Precondition(format!("no gap: claimed completeness {c} does not exceed soundness {s}")),
        ));
    }
    let opts = if lifted { TransformOptions::unverified() } else { opts.clone() };
    let mut stages = Vec::new();
    let first = if lifted {
        lift_to_rewindable(inst, &opts)
    } else {
        make_perfectly_rewindable(inst, None, &opts)
    }
    .map_err(|e| in_stage(STAGES[0], e))?;
    stages.push((STAGES[0], first));
    let rewound = rewind_to_perfect_completeness(&stages[0].1.instance, &opts).map_err(|e| in_stage(STAGES[1], e))?;
    let turns = rewound.instance.verifier.turns;
    let bounds = ComposedBounds::new(s, turns);
    stages.push((STAGES[1], rewound));
    let three = parallelize_to_three(&stages[1].1.instance, 0.0, 1.0 - bounds.rewound, &opts)
        .map_err(|e| in_stage(STAGES[2], e))?;
    stages.push((STAGES[2], three));
    let pc = to_public_coin_3turn(&stages[2].1.instance, &opts).map_err(|e| in_stage(STAGES[3], e))?;
    stages.push((STAGES[3], pc));
    let one = public_coin_to_one_round(&stages[3].1.instance, &opts).map_err(|e| in_stage(STAGES[4], e))?;
    stages.push((STAGES[4], one));
    Ok(PipelineOutcome { stages, bounds })
}
