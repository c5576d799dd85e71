//! Deployment assembly: one gateway, enrolled users and sensors, and helpers
//! to spin up actors and run whole sessions in one call.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use std::sync::Arc;

use crate::crypto::{make_rng, trial_rng, CurveParams, Timestamp};
use crate::par::{map_indexed, Mode};
use crate::protocol::{
    gateway_init, login_verify, register_user_begin, register_user_finalize,
    register_user_gateway, sensor_init, user_init, GatewayConfig, GatewayState, Level,
    ProtocolError, SensorCredentials, SmartCard, UserCredentials,
};

use super::actors::{GatewayActor, SensorActor, UserActor};
use super::bus::{InProcessBus, Transport};
use super::clock::{Clock, VirtualClock};
use super::runner::{run_session, RunOptions, SessionOutcome};

pub struct DeployedUser {
    pub creds: UserCredentials,
    pub card: Option<SmartCard>,
}

/// A desk-scale world: the gateway plus every enrolled device.
pub struct Deployment {
    pub params: Arc<CurveParams>,
    pub gw: GatewayState,
    pub users: Vec<DeployedUser>,
    pub sensors: Vec<SensorCredentials>,
}

impl Deployment {
    /// Initializes the gateway, `user_count` users and one sensor per level
    /// in `sensor_levels`.
    pub fn init(
        params: Arc<CurveParams>,
        config: GatewayConfig,
        user_count: usize,
        sensor_levels: &[Level],
        rng: &mut ChaCha20Rng,
    ) -> Result<Self, ProtocolError> {
        let mut gw = gateway_init(&params, config, rng);
        let users = (0..user_count)
            .map(|_| DeployedUser { creds: user_init(&mut gw, &params, rng), card: None })
            .collect();
        let sensors = sensor_levels
            .iter()
            .map(|level| sensor_init(&mut gw, &params, *level, rng))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Deployment { params, gw, users, sensors })
    }

    /// Registration over the secure channel: both halves plus a login check.
    pub fn register_user(
        &mut self,
        user_idx: usize,
        password: &str,
        level: Level,
        rng: &mut ChaCha20Rng,
    ) -> Result<SmartCard, ProtocolError> {
        let user = &self.users[user_idx];
        let (request, held) = register_user_begin(password.as_bytes(), &user.creds.uid, rng)?;
        let draft = register_user_gateway(&self.gw, &request.uid, level)?;
        let card = register_user_finalize(
            &draft,
            &held,
            &user.creds.uid,
            password.as_bytes(),
            &self.params.name,
        );
        login_verify(&user.creds.uid, password.as_bytes(), &card)?;
        self.users[user_idx].card = Some(card.clone());
        Ok(card)
    }
}

/// Everything needed to run sessions against a deployment.
pub struct SessionWorld {
    pub params: Arc<CurveParams>,
    pub user: UserActor,
    pub gateway: GatewayActor,
    pub sensor: SensorActor,
    pub transport: Arc<dyn Transport>,
    pub clock: Arc<VirtualClock>,
}

#[derive(Clone, Debug)]
pub struct WorldConfig {
    pub curve: Arc<CurveParams>,
    pub seed: u64,
    pub user_level: Level,
    pub sensor_level: Level,
    pub delta_t: u32,
    pub start: Timestamp,
    pub password: String,
}

impl WorldConfig {
    pub fn new(curve: Arc<CurveParams>, seed: u64) -> Self {
        WorldConfig {
            curve,
            seed,
            user_level: Level(1),
            sensor_level: Level(5),
            delta_t: 5_000,
            start: Timestamp(1_000_000),
            password: "desk-scale secret".to_string(),
        }
    }

    pub fn levels(mut self, user: Level, sensor: Level) -> Self {
        self.user_level = user;
        self.sensor_level = sensor;
        self
    }
}

/// Builds a one-user one-sensor world with fresh credentials on an
/// in-process bus and a shared virtual clock.
pub fn build_world(cfg: &WorldConfig) -> Result<SessionWorld, ProtocolError> {
    let mut rng = make_rng(Some(cfg.seed));
    let gw_config = GatewayConfig { delta_t: cfg.delta_t, l_max: Level(16) };
    let mut deployment =
        Deployment::init(cfg.curve.clone(), gw_config, 1, &[cfg.sensor_level], &mut rng)?;
    deployment.register_user(0, &cfg.password, cfg.user_level, &mut rng)?;

    let clock = VirtualClock::starting_at(cfg.start.millis());
    let clock_dyn: Arc<dyn Clock> = clock.clone();
    let transport: Arc<dyn Transport> = InProcessBus::new();

    let gw_pub = deployment.gw.pub_key.clone();
    let DeployedUser { creds, card } = deployment.users.remove(0);
    let user = UserActor::new(
        creds,
        card.expect("registered above"),
        gw_pub.clone(),
        cfg.curve.clone(),
        clock_dyn.clone(),
        cfg.delta_t,
        trial_rng(cfg.seed, 1),
    );
    let gateway = GatewayActor::new(
        deployment.gw,
        cfg.curve.clone(),
        clock_dyn.clone(),
        trial_rng(cfg.seed, 2),
    );
    let sensor = SensorActor::new(
        deployment.sensors.remove(0),
        gw_pub,
        cfg.curve.clone(),
        clock_dyn.clone(),
        cfg.delta_t,
        trial_rng(cfg.seed, 3),
    );
    Ok(SessionWorld { params: cfg.curve.clone(), user, gateway, sensor, transport, clock })
}

impl SessionWorld {
    pub fn run_one(&mut self) -> SessionOutcome {
        let clock: Arc<dyn Clock> = self.clock.clone();
        run_session(
            &mut self.user,
            &mut self.gateway,
            &mut self.sensor,
            &self.transport,
            &clock,
            RunOptions::default(),
        )
    }
}

/// Simulates `n` independent honest sessions with fresh credentials per
/// trial; levels are drawn with l_user ≤ l_sensor in 1..=5.
pub fn simulate_honest_batch(
    curve: Arc<CurveParams>,
    n: u64,
    base_seed: u64,
    mode: Mode,
) -> Vec<SessionOutcome> {
    map_indexed(n, mode, |trial| {
        let mut level_rng = trial_rng(base_seed, trial ^ 0xa5a5);
        let user_level = level_rng.gen_range(1..=5u16);
        let sensor_level = level_rng.gen_range(user_level..=5u16);
        let cfg = WorldConfig::new(curve.clone(), base_seed.wrapping_add(trial))
            .levels(Level(user_level), Level(sensor_level));
        let mut world = build_world(&cfg).expect("world construction");
        world.run_one()
    })
}
