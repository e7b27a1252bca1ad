//! File formats and subcommands behind the `sharecap` binary.

pub mod commands;
pub mod format;
pub mod json;
pub mod sweep;

/// Logs to stderr at the level named by `SHARECAP_LOG` (`error` by default).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("SHARECAP_LOG", "error");
    let _ = env_logger::Builder::from_env(env)
        .target(env_logger::Target::Stderr)
        .format_timestamp(None)
        .try_init();
}
