//! The reasoning loss and the answer loss, and the two training loops.

mod loss;
mod run;

pub use loss::{active_heads, answer_loss, reason_loss, LossWeights, LOG_EPS};
pub use run::{
    answer_contexts, train_answerer, train_reasoning, ContextSource, EpochLog, TrainConfig, Trained,
};

#[cfg(test)]
mod tests;
