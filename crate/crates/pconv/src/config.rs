//! Run configuration: built-in defaults, optional `key = value` config
//! files, and flag overrides, in that precedence order.

use std::fmt;
use std::path::PathBuf;

/// Default values from the hyperparameter tuning: one conv layer of four
/// channels, kernel 7, context 8, full range with 5000 primes, 400 batches
/// of 256 over 10 epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub limit: u64,
    pub nprimes: usize,
    pub context_len: usize,
    pub kernel: usize,
    pub channels: Vec<usize>,
    pub batches: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub threads: usize,
    pub cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            limit: 1_000_000,
            nprimes: 5000,
            context_len: 8,
            kernel: 7,
            channels: vec![4],
            batches: 400,
            batch_size: 256,
            epochs: 10,
            learning_rate: 1e-3,
            seed: 1,
            threads: 1,
            cache: None,
            out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    /// Applies a `key = value` config file (`#` starts a comment). Unknown
    /// keys and malformed values are errors. Flags parsed later override
    /// whatever the file sets.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| ConfigError {
                line,
                message: format!("invalid {what} value `{value}`"),
            };
            match key {
                "limit" => self.limit = value.parse().map_err(|_| bad("limit"))?,
                "nprimes" => self.nprimes = value.parse().map_err(|_| bad("nprimes"))?,
                "B" => self.context_len = value.parse().map_err(|_| bad("B"))?,
                "k" => self.kernel = value.parse().map_err(|_| bad("k"))?,
                "channels" => {
                    let parsed: Result<Vec<usize>, _> =
                        value.split(',').map(|v| v.trim().parse()).collect();
                    self.channels = parsed.map_err(|_| bad("channels"))?;
                }
                "r" => self.batches = value.parse().map_err(|_| bad("r"))?,
                "s" => self.batch_size = value.parse().map_err(|_| bad("s"))?,
                "epochs" => self.epochs = value.parse().map_err(|_| bad("epochs"))?,
                "lr" => self.learning_rate = value.parse().map_err(|_| bad("lr"))?,
                "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
                "threads" => self.threads = value.parse().map_err(|_| bad("threads"))?,
                "cache" => self.cache = Some(PathBuf::from(value)),
                "out" => self.out = Some(PathBuf::from(value)),
                other => {
                    return Err(ConfigError {
                        line,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_apply_over_defaults() {
        let mut cfg = RunConfig::default();
        cfg.apply_file(
            "# scale down\nlimit = 100000\nnprimes = 500 # width\n\nB = 16\nchannels = 4,8\nlr = 0.01\n",
        )
        .unwrap();
        assert_eq!(cfg.limit, 100_000);
        assert_eq!(cfg.nprimes, 500);
        assert_eq!(cfg.context_len, 16);
        assert_eq!(cfg.channels, vec![4, 8]);
        assert_eq!(cfg.learning_rate, 0.01);
        assert_eq!(cfg.kernel, 7); // untouched default
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_file("limit = 10\nwat = 3\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = cfg.apply_file("epochs = soon\n").unwrap_err();
        assert_eq!(err.line, 1);
        let err = cfg.apply_file("just words\n").unwrap_err();
        assert!(err.message.contains("key = value"));
    }
}
