//! Independent exact values used to check the simulator.

use super::depth_game::DepthGame;
use super::mdp::SolveOptions;

/// Closed-form gain of the best depth-3 deviation.
pub fn closed_form_gain_e3(a: f64) -> f64 {
    let a2 = a * a;
    let a3 = a2 * a;
    let a4 = a3 * a;
    a2 * (2.0 + 2.0 * a - 5.0 * a2 + 2.0 * a3) / (1.0 - a2 + 2.0 * a3 - a4)
}

/// Optimal relative revenue in the depth-3 tree game against an honest
/// opponent, by exhaustive policy optimization over all 16 states.
pub fn dp_optimal_gain_e3(a: f64) -> f64 {
    dp_optimal_gain(3, a)
}

/// Optimal relative revenue in the depth-`e` tree game.
pub fn dp_optimal_gain(e: usize, a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    if a >= 1.0 {
        return 1.0;
    }
    DepthGame::new(e).build(a).solve(&SolveOptions::default()).ratio
}

/// Stationary lead-state probabilities of lead-2 withholding with no
/// tie-splitting, up to a common factor: `(p0, p0_tie, p1, p2)`.
/// Leads above 2 follow `p_k = p2 * r^(k-2)` with `r = a / (1 - a)`.
fn withholding_chain(a: f64) -> (f64, f64, f64, f64) {
    let b = 1.0 - a;
    let p0 = 1.0;
    let p1 = a * p0;
    (p0, b * p1, p1, a / b * p1)
}

/// Relative revenue of lead-2 withholding against a dubious-frontier
/// opponent that never splits on ties, from the stationary distribution of
/// the private-lead chain.
pub fn sm_markov_gain(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    assert!(a < 0.5, "the lead chain is transient for alpha >= 1/2");
    let b = 1.0 - a;
    let r = a / b;
    let (p0, p0t, _p1, p2) = withholding_chain(a);
    // from the tie state the winner of the next block takes both;
    // at lead 2 an honest block makes the pool publish and win both;
    // above lead 2 each honest block locks in one pool block
    let pool = 2.0 * a * p0t + 2.0 * b * p2 + b * p2 * r / (1.0 - r);
    let honest = b * p0 + 2.0 * b * p0t;
    pool / (pool + honest)
}
