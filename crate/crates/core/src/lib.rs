//! Workbench for human-computable password schemas.
//!
//! * [`schema`]: DS3 and Skip-To-My-Lou (STML) evaluation, keys, challenges.
//! * [`modcsp`]: a constraint engine over base-10 modular arithmetic.
//! * [`attacks`]: adversaries for the response-guessing game.
//! * [`game`]: the judge, single rounds, and Monte Carlo estimates of Q.
//! * [`analysis`]: expansion factors, the k bound, and the human time-cost model.

pub mod analysis;
pub mod attacks;
pub mod game;
pub mod modcsp;
pub mod schema;

pub use schema::{
    Alphabet, Challenge, Ds3Key, Response, SchemaError, SchemaId, SchemaKind, SecretKey, StmlKey,
};
