//! `key = value` configuration files.
//!
//! `#` starts a comment, blank lines are skipped, later assignments of the
//! same key win except for keys that are repeatable by design (`peak`).
//! Command-line flags override anything read from a file.

use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    entries: Vec<(String, String)>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Io(format!(
                    "{}: line {}: expected 'key = value', got '{line}'",
                    path.display(),
                    i + 1
                ))
            })?;
            entries.push((key.trim().to_ascii_lowercase(), value.trim().to_owned()));
        }
        Ok(FileConfig { entries })
    }

    /// Last assignment wins, matching how later flags override earlier ones.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Every assignment of a repeatable key, in file order.
    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                CliError::Usage(format!("config key '{key}': non-numeric value '{v}'"))
            }),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                CliError::Usage(format!("config key '{key}': non-integer value '{v}'"))
            }),
        }
    }
}

/// Flag beats config beats default.
pub fn resolve_f64(
    flag: Option<f64>,
    config: &FileConfig,
    key: &str,
    default: Option<f64>,
) -> Result<Option<f64>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    Ok(config.get_f64(key)?.or(default))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn load_str(text: &str) -> FileConfig {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        FileConfig::load(f.path()).unwrap()
    }

    #[test]
    fn last_assignment_wins_and_comments_are_ignored() {
        let cfg = load_str("# comment\ntheta_k = 300\ntheta_k = 406 # override\n");
        assert_eq!(cfg.get("theta_k"), Some("406"));
        assert_eq!(cfg.get_f64("theta_k").unwrap(), Some(406.0));
    }

    #[test]
    fn repeatable_keys_keep_file_order() {
        let cfg = load_str("peak = a\npeak = b\n");
        assert_eq!(cfg.get_all("peak"), ["a", "b"]);
    }

    #[test]
    fn flags_override_config() {
        let cfg = load_str("theta_k = 300\n");
        let v = resolve_f64(Some(406.0), &cfg, "theta_k", None).unwrap();
        assert_eq!(v, Some(406.0));
        let v = resolve_f64(None, &cfg, "theta_k", Some(100.0)).unwrap();
        assert_eq!(v, Some(300.0));
        let v = resolve_f64(None, &cfg, "missing", Some(100.0)).unwrap();
        assert_eq!(v, Some(100.0));
    }

    #[test]
    fn malformed_line_is_rejected_with_line_number() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"ok = 1\nbroken line\n").unwrap();
        let err = FileConfig::load(f.path()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
