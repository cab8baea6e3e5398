use rand::RngCore;

use crate::arms::Outcome;
use crate::error::Result;

/// A dueling-bandit policy. Arms are the policy's own 0-based labels.
pub trait DuelPolicy: Send {
    fn name(&self) -> &str;

    /// Picks `(first, second)` for step `t` (1-based).
    fn select(&mut self, t: usize, rng: &mut dyn RngCore) -> Result<(usize, usize)>;

    /// Feeds back the outcome of the duel just played.
    fn observe(&mut self, first: usize, second: usize, outcome: Outcome) -> Result<()>;
}
