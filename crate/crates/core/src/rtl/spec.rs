//! Formalized interface of the top module.

use super::ast::{Direction, PortDecl, SourceModule};
use super::error::{SpecError, SpecErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResetPolarity {
    ActiveLow,
    ActiveHigh,
}

impl ResetPolarity {
    pub fn as_str(self) -> &'static str {
        match self {
            ResetPolarity::ActiveLow => "low",
            ResetPolarity::ActiveHigh => "high",
        }
    }

    /// Level that holds the design in reset.
    pub fn active_level(self) -> u64 {
        match self {
            ResetPolarity::ActiveLow => 0,
            ResetPolarity::ActiveHigh => 1,
        }
    }

    /// Polarity implied by a reset port name: active-low iff the name
    /// contains `_n` or `n_`, or ends in `n`.
    pub fn from_name(name: &str) -> Self {
        let lower = name.to_ascii_lowercase();
        if lower.contains("_n") || lower.contains("n_") || lower.ends_with('n') {
            ResetPolarity::ActiveLow
        } else {
            ResetPolarity::ActiveHigh
        }
    }
}

/// A top-level port as seen from outside the design. Net kind is an
/// implementation detail of the module body and is not recorded.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpecPort {
    pub name: String,
    pub direction: Direction,
    pub width: u32,
}

impl From<&PortDecl> for SpecPort {
    fn from(p: &PortDecl) -> Self {
        SpecPort {
            name: p.name.clone(),
            direction: p.direction,
            width: p.width,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignSpec {
    pub top: String,
    pub ports: Vec<SpecPort>,
    pub clock: String,
    pub reset: String,
    pub reset_polarity: ResetPolarity,
}

impl DesignSpec {
    /// Input ports driven by stimulus, in declaration order.
    pub fn stimulus_ports(&self) -> impl Iterator<Item = &SpecPort> {
        self.ports
            .iter()
            .filter(|p| p.direction == Direction::Input && p.name != self.clock && p.name != self.reset)
    }

    /// Total width of the stimulus ports.
    pub fn stimulus_width(&self) -> u32 {
        self.stimulus_ports().map(|p| p.width).sum()
    }

    /// Bytes per stimulus frame: `ceil(W / 8)`, and 1 when `W = 0`.
    pub fn frame_bytes(&self) -> usize {
        (self.stimulus_width() as usize).div_ceil(8).max(1)
    }

    pub fn port(&self, name: &str) -> Option<&SpecPort> {
        self.ports.iter().find(|p| p.name == name)
    }

    /// Checks the clock/reset invariants.
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.clock == self.reset {
            return Err(SpecError::new(
                SpecErrorKind::ClockResetCollision,
                format!("`{}` cannot be both clock and reset", self.clock),
            ));
        }
        for (role, name, kind) in [
            ("clock", &self.clock, SpecErrorKind::NoClockFound),
            ("reset", &self.reset, SpecErrorKind::NoResetFound),
        ] {
            match self.port(name) {
                Some(p) if p.direction == Direction::Input && p.width == 1 => {}
                Some(_) => return Err(SpecError::new(kind, format!("{role} `{name}` must be a 1-bit input"))),
                None => return Err(SpecError::new(kind, format!("{role} `{name}` is not a port"))),
            }
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.ports {
            if p.width == 0 || p.width > 64 {
                return Err(SpecError::new(
                    SpecErrorKind::SchemaViolation,
                    format!("port `{}` has unsupported width {}", p.name, p.width),
                ));
            }
            if !seen.insert(p.name.as_str()) {
                return Err(SpecError::new(
                    SpecErrorKind::SchemaViolation,
                    format!("port `{}` is listed twice", p.name),
                ));
            }
        }
        Ok(())
    }
}

fn matches_any(name: &str, needles: &[&str]) -> bool {
    let lower = name.to_ascii_lowercase();
    needles.iter().any(|n| lower.contains(n))
}

/// Builds the [`DesignSpec`] of `top_name`, inferring clock and reset from
/// port names unless hints are given.
pub fn extract_spec(
    modules: &[SourceModule],
    top_name: &str,
    clock_hint: Option<&str>,
    reset_hint: Option<&str>,
) -> Result<DesignSpec, SpecError> {
    let top = modules
        .iter()
        .find(|m| m.name == top_name)
        .ok_or_else(|| SpecError::new(SpecErrorKind::NoSuchModule, format!("no module named `{top_name}`")))?;
    let candidates = || {
        top.ports
            .iter()
            .filter(|p| p.direction == Direction::Input && p.width == 1)
    };
    let reset = match reset_hint {
        Some(r) => r.to_string(),
        None => candidates()
            .find(|p| matches_any(&p.name, &["rst", "reset"]))
            .map(|p| p.name.clone())
            .ok_or_else(|| {
                SpecError::new(
                    SpecErrorKind::NoResetFound,
                    format!("no 1-bit input of `{top_name}` looks like a reset"),
                )
            })?,
    };
    let clock = match clock_hint {
        Some(c) => c.to_string(),
        None => candidates()
            .find(|p| matches_any(&p.name, &["clk", "clock"]))
            .map(|p| p.name.clone())
            .ok_or_else(|| {
                SpecError::new(
                    SpecErrorKind::NoClockFound,
                    format!("no 1-bit input of `{top_name}` looks like a clock"),
                )
            })?,
    };
    let spec = DesignSpec {
        top: top.name.clone(),
        ports: top.ports.iter().map(SpecPort::from).collect(),
        reset_polarity: ResetPolarity::from_name(&reset),
        clock,
        reset,
    };
    spec.validate()?;
    Ok(spec)
}
