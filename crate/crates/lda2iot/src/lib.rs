//! LDA-2IoT: level-dependent two-factor authentication and session-key
//! agreement between user devices and sensing devices through a gateway.
//!
//! The crate is organized in five layers:
//!
//! - [`crypto`] — curve arithmetic, hashing, nonces, point ElGamal and the
//!   hybrid payload encryption.
//! - [`protocol`] — domain state and the pure step functions for the
//!   initialize, registration, login and key-agreement phases.
//! - [`runtime`] — actors, the topic bus, the JSON wire codec and the
//!   persistent registry.
//! - [`adversary`] — a Dolev-Yao channel tap, scripted attack scenarios and
//!   the real-or-random oracle harness.
//! - [`bench`] — communication-bit accounting, primitive timing, round-trip
//!   delay and throughput reports.
//!
//! Batch workloads (session sweeps, distinguisher trials, guessing budgets)
//! run data-parallel under the `parallel` feature (enabled by default) and
//! sequentially without it.

pub mod adversary;
pub mod bench;
pub mod crypto;
pub mod instrument;
pub mod par;
pub mod protocol;
pub mod runtime;
