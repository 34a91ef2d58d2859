//! Campaign configuration files.
//!
//! The format is Hjson: JSON with comments, unquoted keys and unquoted
//! string values. Unlike full Hjson, an unquoted value also ends at a `,`,
//! `}` or `]`, so one-line configs such as `{engine: afl, max_execs: 10}`
//! read as expected. Unknown keys are rejected so that a misspelt key
//! cannot silently fall back to a default.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use hwfuzz_core::coverage::EngineKind;
use hwfuzz_core::sim::RunConfig;
use hwfuzz_fuzz::{CampaignConfig, ConfigError, ConfigErrorKind};

/// Environment variable that overrides `rng_seed`.
pub const SEED_ENV: &str = "HWFUZZ_SEED";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuzzConfig {
    #[serde(deserialize_with = "engine")]
    pub engine: EngineKind,
    #[serde(default)]
    pub duration_secs: Option<u64>,
    #[serde(default)]
    pub max_execs: Option<u64>,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_reset_cycles")]
    pub reset_cycles: u32,
    #[serde(default = "default_max_cycles")]
    pub max_cycles: u32,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Directory of seed inputs; the default seed when absent.
    #[serde(default)]
    pub corpus_dir: Option<PathBuf>,
    /// Token dictionary in AFL format.
    #[serde(default)]
    pub dict: Option<PathBuf>,
    #[serde(default)]
    pub top: Option<String>,
    #[serde(default)]
    pub clock: Option<String>,
    #[serde(default)]
    pub reset: Option<String>,
    /// Stop once statement coverage reaches this percentage.
    #[serde(default)]
    pub target_stmt_pct: Option<f64>,
}

fn default_reset_cycles() -> u32 {
    2
}

fn default_max_cycles() -> u32 {
    256
}

fn default_workers() -> usize {
    1
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("hwfuzz-out")
}

fn engine<'de, D: serde::Deserializer<'de>>(d: D) -> Result<EngineKind, D::Error> {
    let name = String::deserialize(d)?;
    name.parse().map_err(serde::de::Error::custom)
}

impl FuzzConfig {
    /// The campaign settings, without dictionary tokens.
    pub fn campaign(&self) -> CampaignConfig {
        CampaignConfig {
            engine: self.engine,
            duration: self.duration_secs.map(Duration::from_secs),
            max_execs: self.max_execs,
            rng_seed: self.rng_seed,
            run: RunConfig {
                reset_cycles: self.reset_cycles,
                max_cycles: self.max_cycles,
                ..RunConfig::default()
            },
            workers: self.workers,
            out_dir: Some(self.out_dir.clone()),
            dict: Vec::new(),
            target_stmt_pct: self.target_stmt_pct,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.campaign().validate()
    }
}

/// Parses and validates config text; `seed_override` replaces `rng_seed`.
pub fn parse_config(text: &str, seed_override: Option<&str>) -> Result<FuzzConfig, ConfigError> {
    let mut cfg: FuzzConfig = deser_hjson::from_str(&split_inline(text)).map_err(|e| {
        let msg = e.to_string();
        let kind = if msg.contains("unknown field") {
            ConfigErrorKind::UnknownKey
        } else if msg.contains("unknown engine") {
            ConfigErrorKind::InvariantViolation
        } else {
            ConfigErrorKind::Parse
        };
        ConfigError::new(kind, msg)
    })?;
    if let Some(seed) = seed_override {
        cfg.rng_seed = parse_seed(seed).ok_or_else(|| {
            ConfigError::new(
                ConfigErrorKind::Parse,
                format!("{SEED_ENV}=`{seed}` is not a 64-bit integer"),
            )
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Turns every `,` into a line break and puts one before every `}` or `]`
/// outside strings and comments, which ends quoteless values there. Hjson
/// treats a line break as a separator, so nothing else changes.
fn split_inline(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 16);
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' | '\'' => {
                out.push(c);
                while let Some(d) = chars.next() {
                    out.push(d);
                    if d == '\\' {
                        out.extend(chars.next());
                    } else if d == c {
                        break;
                    }
                }
            }
            '#' => {
                out.push(c);
                while let Some(d) = chars.next_if(|&d| d != '\n') {
                    out.push(d);
                }
            }
            '/' if chars.peek() == Some(&'/') => {
                out.push(c);
                while let Some(d) = chars.next_if(|&d| d != '\n') {
                    out.push(d);
                }
            }
            '/' if chars.peek() == Some(&'*') => {
                out.push(c);
                out.extend(chars.next());
                let mut prev = ' ';
                for d in chars.by_ref() {
                    out.push(d);
                    if prev == '*' && d == '/' {
                        break;
                    }
                    prev = d;
                }
            }
            ',' => out.push('\n'),
            '}' | ']' => {
                out.push('\n');
                out.push(c);
            }
            _ => out.push(c),
        }
    }
    out
}

/// Reads `path`, applying the `HWFUZZ_SEED` override.
pub fn load_config(path: &Path) -> Result<FuzzConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(ConfigErrorKind::Parse, format!("{}: {e}", path.display())))?;
    let seed = std::env::var(SEED_ENV).ok();
    parse_config(&text, seed.as_deref())
}

/// Decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Option<u64> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}

/// Parses an AFL-style dictionary: one token per line, written as a quoted
/// string optionally preceded by `name=`, with `\\`, `\"` and `\xNN`
/// escapes. Blank lines and `#` comments are skipped.
pub fn parse_dict(text: &str) -> Result<Vec<Vec<u8>>, String> {
    let mut tokens = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: &str| format!("dictionary line {}: {m}", n + 1);
        let start = line.find('"').ok_or_else(|| err("expected a quoted token"))?;
        let body = line[start + 1..]
            .strip_suffix('"')
            .ok_or_else(|| err("unterminated token"))?;
        let mut tok = Vec::new();
        let mut bytes = body.bytes();
        while let Some(b) = bytes.next() {
            if b != b'\\' {
                tok.push(b);
                continue;
            }
            match bytes.next() {
                Some(b'x') => {
                    let hex: Vec<u8> = bytes.by_ref().take(2).collect();
                    let v = std::str::from_utf8(&hex)
                        .ok()
                        .filter(|h| h.len() == 2)
                        .and_then(|h| u8::from_str_radix(h, 16).ok())
                        .ok_or_else(|| err("bad \\x escape"))?;
                    tok.push(v);
                }
                Some(c @ (b'\\' | b'"')) => tok.push(c),
                _ => return Err(err("unknown escape")),
            }
        }
        if tok.is_empty() {
            return Err(err("empty token"));
        }
        tokens.push(tok);
    }
    Ok(tokens)
}
