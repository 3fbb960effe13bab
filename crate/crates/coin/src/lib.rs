//! `(P_f, f+1, f)` threshold coin tossing.
//!
//! A dealer Shamir-shares one secret exponent `x` per participant set. For a
//! round `r`, member `i` publishes `sigma_i = g_hat^{x_i}` where
//! `g_hat = g^{H1(set, r)}`; any `f+1` of those interpolate `g_hat^x` in the
//! exponent, which `H2` maps onto the configuration space. In Byzantine mode
//! each share carries a discrete-log-equality proof against the member's
//! public key `g^{x_i}`.
//!
//! [`EmuCoin`] is the seeded stand-in schedule used by the evaluation
//! scenarios.

mod dealer;
mod dleq;
mod emu;
mod error;
mod group;
mod hash;
mod scheme;
mod shamir;

pub use dealer::{dealer_init, DealerOutput};
pub use dleq::DleqProof;
pub use emu::{emu_next_config, EmuCoin, Schedule};
pub use error::CoinError;
pub use group::{BaseMode, GroupParams};
pub use scheme::{
    base_for, combine, combine_element, config_from_element, gfs, verify, FunctionShare,
    SecretShare, VerificationKeys,
};
pub use shamir::{lagrange_at_zero, split, split_polynomial};
