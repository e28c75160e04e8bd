//! Command-line front end: configuration, artifact output and the
//! per-figure reproduction bundles.

pub mod commands;
pub mod config;
pub mod output;
pub mod reproduce;

/// Exit status for a failed run: 2 when the cause is numerical (integrator
/// failure, lost positivity, no admissible catalyst, failed fit), 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let numerical = err
        .chain()
        .any(|cause| cause.downcast_ref::<dqa_core::Error>().is_some_and(|e| e.is_numerical()));
    if numerical {
        2
    } else {
        1
    }
}
