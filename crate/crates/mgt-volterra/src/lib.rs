//! Batch front end for the `mgt-core` solver.
//!
//! A run is a JSON [`config::ScenarioConfig`] plus a [`commands::Command`];
//! outputs are CSV trajectories, JSON reports and a manifest with SHA-256
//! checksums. Identical config and seed give byte-identical outputs apart
//! from the manifest's wall time.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod io;

/// Exit code for a completed run whose verification failed.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for invalid configs and every other error.
pub const EXIT_ERROR: i32 = 2;

/// Short machine-readable category for an error chain.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<mgt_core::Error>() {
            return match e {
                mgt_core::Error::Unsupported(_) => "unsupported",
                mgt_core::Error::Incompatible(_) => "incompatible_data",
                mgt_core::Error::IllPosed(_) => "ill_posed",
                _ => "invalid_input",
            };
        }
        if cause.is::<serde_json::Error>() {
            return "config";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
    }
    "invalid_input"
}

/// `{"error": {"kind": ..., "message": ...}}`.
pub fn error_json(err: &anyhow::Error) -> String {
    serde_json::json!({
        "error": {
            "kind": error_kind(err),
            "message": format!("{err:#}"),
        }
    })
    .to_string()
}
