//! Corrupt-device queries and the offline level-guessing attack.
//!
//! Dumps return exactly what the device stores long-term; transient session
//! values (r_t, r_1, r_2) are never part of a dump.

use rand::RngCore;

use crate::crypto::{trial_rng, Digest, ScalarKey};
use crate::instrument;
use crate::par::{map_indexed, Mode};
use crate::protocol::{
    level_tag, Identity, Level, MasterSecret, ProtocolError, SensorCredentials, SmartCard,
    UserCredentials,
};

/// Everything a stolen user device yields: X_1, X_2, RU_i and the card.
pub struct UserDeviceDump {
    pub x1: Digest,
    pub x2: Digest,
    pub priv_key: ScalarKey,
    pub uid: Identity,
    pub card: SmartCard,
}

/// Everything a captured sensing device yields: Y_1, Y_2, RSN_j, D_j.
pub struct SensorDeviceDump {
    pub y1: Digest,
    pub y2: Digest,
    pub priv_key: ScalarKey,
    pub sid: Identity,
    pub d_j: Digest,
}

pub fn corrupt_user_device(creds: &UserCredentials, card: &SmartCard) -> UserDeviceDump {
    UserDeviceDump {
        x1: creds.x1,
        x2: creds.x2,
        priv_key: creds.priv_key.clone(),
        uid: creds.uid,
        card: card.clone(),
    }
}

pub fn corrupt_sensing_device(creds: &SensorCredentials) -> SensorDeviceDump {
    SensorDeviceDump {
        y1: creds.y1,
        y2: creds.y2,
        priv_key: creds.priv_key.clone(),
        sid: creds.sid,
        d_j: creds.d_j,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelGuessOutcome {
    /// The level the adversary managed to confirm, if any.
    pub confirmed: Option<Level>,
    pub guesses_spent: u64,
}

/// Offline brute force against a level tag without the master secret: for
/// each random K_s candidate, test every level in 1..=l_max. The search
/// spends exactly `budget` hash evaluations (rounded down to whole rounds).
pub fn level_guess_attack(
    tag: &Digest,
    id: &Identity,
    l_max: Level,
    budget: u64,
    seed: u64,
    mode: Mode,
) -> LevelGuessOutcome {
    let rounds = budget / l_max.0 as u64;
    let hits = map_indexed(rounds, mode, |round| {
        let mut rng = trial_rng(seed, round);
        let mut candidate = [0u8; 32];
        rng.fill_bytes(&mut candidate);
        let ks_guess = MasterSecret(candidate);
        instrument::in_level_search(|| {
            (1..=l_max.0).find(|l| level_tag(Level(*l), &ks_guess, id) == *tag)
        })
    });
    let confirmed = hits.into_iter().flatten().next().map(Level);
    LevelGuessOutcome { confirmed, guesses_spent: rounds * l_max.0 as u64 }
}

/// Control experiment: with the true master secret the level falls out.
pub fn level_recover_with_master(
    tag: &Digest,
    id: &Identity,
    ks: &MasterSecret,
    l_max: Level,
) -> Result<Level, ProtocolError> {
    crate::protocol::recover_level(tag, id, ks, l_max)
}

/// Even knowing the true level, a candidate without K_s cannot validate.
pub fn validate_level_without_master(
    tag: &Digest,
    id: &Identity,
    level: Level,
    ks_guess: &MasterSecret,
) -> bool {
    level_tag(level, ks_guess, id) == *tag
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::make_rng;
    use crate::protocol::Role;

    #[test]
    fn budget_search_cannot_confirm_a_level() {
        let mut rng = make_rng(Some(91));
        let ks = MasterSecret::random(&mut rng);
        let id = Identity::random(Role::Sensor, &mut rng);
        let tag = level_tag(Level(3), &ks, &id);
        let outcome = level_guess_attack(&tag, &id, Level(16), 10_000, 5, Mode::Sequential);
        assert_eq!(outcome.confirmed, None);
        assert_eq!(outcome.guesses_spent, 10_000);
    }

    #[test]
    fn control_with_master_recovers_and_without_cannot_validate() {
        let mut rng = make_rng(Some(92));
        let ks = MasterSecret::random(&mut rng);
        let id = Identity::random(Role::User, &mut rng);
        let tag = level_tag(Level(5), &ks, &id);
        assert_eq!(level_recover_with_master(&tag, &id, &ks, Level(16)).unwrap(), Level(5));
        let wrong = MasterSecret::random(&mut rng);
        assert!(!validate_level_without_master(&tag, &id, Level(5), &wrong));
        assert!(validate_level_without_master(&tag, &id, Level(5), &ks));
    }
}
