//! Dolev-Yao adversary harness: a channel controller, scripted attack
//! scenarios with machine-checkable outcomes, corrupt-device queries and
//! the real-or-random oracle set.

pub mod attacks;
pub mod corrupt;
pub mod oracle;
pub mod scenario;
pub mod tap;

pub use attacks::{run_attack, run_suite, AttackConfig, AttackOutcome};
pub use corrupt::{
    corrupt_sensing_device, corrupt_user_device, level_guess_attack, level_recover_with_master,
    validate_level_without_master, LevelGuessOutcome, SensorDeviceDump, UserDeviceDump,
};
pub use oracle::{
    distinguishing_experiment, distinguishing_trial, Instance, OracleError, OracleQuery,
    OracleResponse, RorWorld,
};
pub use scenario::{builtin_suite, AttackStep, ForgeRecipe, LevelGuessTarget, Scenario, TapAction, TapRule};
pub use tap::{build_forgery, AdversaryView, ChannelTap, TapEvent};
