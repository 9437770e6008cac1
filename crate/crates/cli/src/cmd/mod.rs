pub mod channel;
pub mod curve;
pub mod oracle;
pub mod prior;
pub mod verify;

use remote_rdf::{
    build_channel, conditional_stats, distortion_range, solve_waterfill, spectral_setup,
    GaussianSourceSpec, TestChannel, WaterfillSolution,
};

use crate::CliError;

/// Water-filling solution at one distortion and the channel realizing it.
pub struct Solved {
    pub lower: f64,
    pub upper: f64,
    pub solution: WaterfillSolution,
    pub channel: TestChannel,
}

pub fn solve(spec: &GaussianSourceSpec, delta: f64) -> Result<Solved, CliError> {
    let stats = conditional_stats(spec)?;
    let setup = spectral_setup(&stats)?;
    let (lower, upper) = distortion_range(&setup);
    let solution = solve_waterfill(&setup, delta)?;
    let channel = build_channel(spec, &stats, &solution.sigma_delta)?;
    Ok(Solved {
        lower,
        upper,
        solution,
        channel,
    })
}
