//! Multi-quantile training, early stopping, ensembles and random search.

mod config;
mod ensemble;
mod loss;
mod search;
mod trainer;

pub use config::TrainConfig;
pub use ensemble::{
    combine_grids, ensemble_forecast, member_specs, train_ensemble, train_member, MemberSpec,
    TrainedMember,
};
pub use loss::{mean_loss, pinball, pinball_grad, total_loss, total_loss_grad, window_loss_and_grad};
pub use search::{random_search, sample_trials, SearchSpace, Trial};
pub use trainer::{
    teacher_forcing_prob, train_model, write_history, EarlyStopping, EpochRecord, TrainOutcome,
    HISTORY_HEADER,
};
