//! The level-dependent authentication protocol: domain state and the pure
//! step functions for initialization, registration, login and the
//! seven-message key agreement.

pub mod freshness;
pub mod gateway;
pub mod messages;
pub mod sensor;
pub mod types;
pub mod user;

pub use freshness::check_freshness;
pub use gateway::{
    gateway_init, gw_handle_msg1, gw_handle_msg3, gw_handle_msg5, lda_decide, level_tag,
    recover_level, register_user_gateway, sensor_init, user_init, EnrollmentRegistry,
    GatewayConfig, GatewayState, GwSession, Msg3Handled, Msg3Outcome,
};
pub use messages::{MsgKind, WireMessage, ABORT_CODE};
pub use sensor::{
    sensor_handle_msg2, sensor_handle_msg4, sensor_handle_msg7, SensorCredentials, SensorSession,
};
pub use types::{
    Access, Identity, Level, MasterSecret, ProtocolError, Role, SessionKey, IDENTITY_LEN,
};
pub use user::{
    build_msg1, login_verify, register_user_begin, register_user_finalize, user_handle_msg6,
    CardDraft, RegistrationHeld, RegistrationRequest, SmartCard, UserCredentials, UserSession,
};

#[cfg(test)]
mod steps_test;
