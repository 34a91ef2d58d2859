//! Crash deduplication and the on-disk crash metadata format.

use std::collections::HashMap;

use hwfuzz_core::sim::{CrashKind, PointId, RunResult, TrapKind};

pub type DedupKey = (CrashKind, Option<PointId>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrashRecord {
    pub id: usize,
    pub bytes: Vec<u8>,
    pub kind: CrashKind,
    pub cycle: u64,
    pub last_point: Option<PointId>,
    pub message: String,
    /// Stimulus width of the design the bytes were decoded for.
    pub stimulus_width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed crash metadata: {0}")]
pub struct MetaError(pub String);

fn kind_str(kind: CrashKind) -> String {
    match kind {
        CrashKind::Assertion(id) => format!("assertion-{id}"),
        CrashKind::Trap(t) => t.as_str().to_string(),
    }
}

fn parse_kind(s: &str) -> Option<CrashKind> {
    if let Some(id) = s.strip_prefix("assertion-") {
        return id.parse().ok().map(CrashKind::Assertion);
    }
    match s {
        "div-by-zero" => Some(CrashKind::Trap(TrapKind::DivByZero)),
        "oob-select" => Some(CrashKind::Trap(TrapKind::OobSelect)),
        _ => None,
    }
}

impl CrashRecord {
    pub fn dedup_key(&self) -> DedupKey {
        (self.kind, self.last_point)
    }

    /// `<kind>@<last point>`, e.g. `assertion-0@7` or `div-by-zero@-`.
    pub fn key_string(&self) -> String {
        key_string(self.dedup_key())
    }

    pub fn file_name(&self) -> String {
        format!("crash_{}", self.id)
    }

    /// Text written next to the crash input as `crash_<n>.meta`.
    pub fn to_meta(&self) -> String {
        let assertion = match self.kind {
            CrashKind::Assertion(id) => id.to_string(),
            CrashKind::Trap(_) => "-".into(),
        };
        format!(
            "kind: {}\nassertion: {assertion}\ncycle: {}\ndedup_key: {}\nstimulus_width: {}\nmessage: {}\n",
            kind_str(self.kind),
            self.cycle,
            self.key_string(),
            self.stimulus_width,
            self.message
        )
    }

    /// Rebuilds a record from its metadata text and input bytes.
    pub fn from_meta(id: usize, meta: &str, bytes: Vec<u8>) -> Result<Self, MetaError> {
        let field = |name: &str| {
            meta.lines()
                .find_map(|l| l.strip_prefix(name).and_then(|r| r.strip_prefix(": ")))
                .ok_or_else(|| MetaError(format!("missing `{name}`")))
        };
        let kind = parse_kind(field("kind")?).ok_or_else(|| MetaError("unknown crash kind".into()))?;
        let cycle = field("cycle")?.parse().map_err(|_| MetaError("bad cycle".into()))?;
        let stimulus_width = field("stimulus_width")?
            .parse()
            .map_err(|_| MetaError("bad stimulus width".into()))?;
        let key = field("dedup_key")?;
        let last_point = match key.rsplit_once('@') {
            Some((_, "-")) => None,
            Some((_, p)) => Some(p.parse().map_err(|_| MetaError("bad dedup key".into()))?),
            None => return Err(MetaError("bad dedup key".into())),
        };
        Ok(CrashRecord {
            id,
            bytes,
            kind,
            cycle,
            last_point,
            message: field("message").unwrap_or_default().to_string(),
            stimulus_width,
        })
    }
}

pub fn key_string((kind, point): DedupKey) -> String {
    match point {
        Some(p) => format!("{}@{p}", kind_str(kind)),
        None => format!("{}@-", kind_str(kind)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Triage {
    /// Index of the new record.
    NewUnique(usize),
    Duplicate,
}

/// Unique crashes, one per dedup key, plus a count of every crash seen.
#[derive(Debug, Clone, Default)]
pub struct CrashSet {
    records: Vec<CrashRecord>,
    keys: HashMap<DedupKey, usize>,
    pub total: u64,
}

impl CrashSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[CrashRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn into_records(self) -> Vec<CrashRecord> {
        self.records
    }
}

/// Files a crashing run under its dedup key.
///
/// # Panics
///
/// If `result` did not crash.
pub fn triage_crash(result: &RunResult, bytes: &[u8], stimulus_width: u32, crashes: &mut CrashSet) -> Triage {
    let info = result.crash.as_ref().expect("triage_crash needs a crashing run");
    crashes.total += 1;
    let key = info.dedup_key();
    if crashes.keys.contains_key(&key) {
        return Triage::Duplicate;
    }
    let id = crashes.records.len();
    crashes.keys.insert(key, id);
    crashes.records.push(CrashRecord {
        id,
        bytes: bytes.to_vec(),
        kind: info.kind,
        cycle: info.cycle,
        last_point: info.last_point,
        message: info.message.clone(),
        stimulus_width,
    });
    Triage::NewUnique(id)
}
