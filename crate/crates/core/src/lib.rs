pub mod algebra;
pub mod baric;
pub mod error;
pub mod idempotent;
mod linalg;
pub mod nilpotent;
mod oracle;
pub mod chains;
pub mod time_fn;
pub mod transitions;
pub mod iso2d;
pub mod cli;
