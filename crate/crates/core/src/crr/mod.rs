//! The learner: filters, advantage estimators, losses, the update loop with
//! target networks, and critic weighted action selection.

mod advantage;
mod cwp;
mod eval;
mod filter;
mod learner;
mod losses;
mod nets;
mod optim;

pub use advantage::{advantage, state_value, AdvantageSpec};
pub use cwp::{cwp_select, cwp_weights};
pub use eval::{evaluate, Agent, EvalMode};
pub use filter::{filter_weight, FilterSpec};
pub use learner::{learner_step, Learner, LearnerConfig, LearnerState, StepMetrics};
pub use losses::{actor_loss, critic_loss, critic_target, filter_weights, weighted_nll, ActorLoss, BatchItem};
pub use nets::{ActionSampler, ActionValueTable, Actor, BoundActor, BoundCritic, Critic, FixedCategorical, QFunction};
pub use optim::Adam;
