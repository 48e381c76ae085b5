//! Process-wide numerical settings.
//!
//! The configuration is a read-only snapshot: it may be installed once at
//! startup (the CLI does this from its flags) and is never mutated afterwards.

use std::sync::OnceLock;

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Eigenvalues at or below `eig_zero_tol * max|lambda|` are treated as zero.
    pub eig_zero_tol: f64,
    /// Allowed relative negativity when validating PSD input.
    pub psd_tol: f64,
    /// Largest matrix dimension produced by tensor powers.
    pub dim_cap: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            eig_zero_tol: 1e-10,
            psd_tol: 1e-10,
            dim_cap: 4096,
        }
    }
}

static CONFIG: OnceLock<Config> = OnceLock::new();

/// Installs the configuration. Returns false if one was already in place.
pub fn install(cfg: Config) -> bool {
    CONFIG.set(cfg).is_ok()
}

pub fn get() -> &'static Config {
    CONFIG.get_or_init(Config::default)
}
