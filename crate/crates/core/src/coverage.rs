//! AFL-style edge coverage plus exact statement and branch bitsets.
//!
//! Each consecutive pair `(p, q)` of fired points is an edge with index
//! `(mix(p) ^ (mix(q) >> 1)) mod 65536`, where `mix` is the SplitMix64
//! finalizer. Per-run edge counts are classified into eight buckets
//! (`1, 2, 3, 4-7, 8-15, 16-31, 32-127, 128+`), one bit each.
//!
//! Snapshot layout (little-endian):
//!
//! ```text
//! "HWCOV1"                 6 bytes magic
//! netlist hash             u64
//! n_points                 u32
//! stmt_hits                ceil(n_points / 8) bytes, bit i = point i (LSB first)
//! branch_hits              ceil(n_points / 8) bytes
//! edge buckets             65536 bytes
//! corpus hits              n_points x u32
//! max weighted score       u64
//! has_perf                 u8 (0 or 1)
//! perf maxima              65536 x u32, present iff has_perf = 1
//! ```

use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;

use crate::sim::{CovPoint, Netlist, PointId};

pub const MAP_SIZE: usize = 1 << 16;

/// The five scheduling/feedback strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EngineKind {
    Afl,
    Aflpp,
    Fairfuzz,
    Perffuzz,
    Tortoise,
}

impl EngineKind {
    pub const ALL: [EngineKind; 5] = [
        EngineKind::Afl,
        EngineKind::Aflpp,
        EngineKind::Fairfuzz,
        EngineKind::Perffuzz,
        EngineKind::Tortoise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Afl => "afl",
            EngineKind::Aflpp => "aflpp",
            EngineKind::Fairfuzz => "fairfuzz",
            EngineKind::Perffuzz => "perffuzz",
            EngineKind::Tortoise => "tortoise",
        }
    }

    /// Whether runs must collect per-edge hit counts.
    pub fn uses_perf(self) -> bool {
        self == EngineKind::Perffuzz
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EngineKind::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown engine `{s}` (expected afl, aflpp, fairfuzz, perffuzz or tortoise)"))
    }
}

/// SplitMix64 output function.
pub fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn edge_index(p: PointId, q: PointId) -> u16 {
    ((mix(u64::from(p)) ^ (mix(u64::from(q)) >> 1)) & 0xFFFF) as u16
}

/// Bucket bit for a raw hit count; 0 for no hits.
pub fn bucket(count: u32) -> u8 {
    match count {
        0 => 0,
        1 => 1,
        2 => 2,
        3 => 4,
        4..=7 => 8,
        8..=15 => 16,
        16..=31 => 32,
        32..=127 => 64,
        _ => 128,
    }
}

/// Coverage of a single run. Edges are stored sparsely, sorted by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMap {
    edges: Vec<(u16, u8)>,
    /// Raw hit count per entry of `edges`, when collected.
    perf: Option<Vec<u32>>,
    pub stmt_hits: FixedBitSet,
    pub branch_hits: FixedBitSet,
    /// Sum of the weights of the distinct points fired.
    pub weighted: u64,
}

impl CoverageMap {
    pub fn empty(n_points: usize) -> Self {
        CoverageMap {
            edges: Vec::new(),
            perf: None,
            stmt_hits: FixedBitSet::with_capacity(n_points),
            branch_hits: FixedBitSet::with_capacity(n_points),
            weighted: 0,
        }
    }

    /// Builds the map of a run from its fired-point sequence.
    pub fn from_fired(fired: &[PointId], points: &[CovPoint], perf: bool) -> Self {
        let mut map = CoverageMap::empty(points.len());
        for &p in fired {
            let point = &points[p as usize];
            let hits = if point.kind.is_statement() {
                &mut map.stmt_hits
            } else {
                &mut map.branch_hits
            };
            if !hits.put(p as usize) {
                map.weighted += u64::from(point.weight);
            }
        }
        let mut idx: Vec<u16> = fired.windows(2).map(|w| edge_index(w[0], w[1])).collect();
        idx.sort_unstable();
        let mut counts = Vec::new();
        for chunk in idx.chunk_by(|a, b| a == b) {
            let n = u32::try_from(chunk.len()).unwrap_or(u32::MAX);
            map.edges.push((chunk[0], bucket(n)));
            counts.push(n);
        }
        if perf {
            map.perf = Some(counts);
        }
        map
    }

    /// `(edge index, bucket mask)` of every touched edge, ascending.
    pub fn edges(&self) -> &[(u16, u8)] {
        &self.edges
    }

    /// `(edge index, raw count)` pairs when perf counts were collected.
    pub fn perf_counts(&self) -> Option<impl Iterator<Item = (u16, u32)> + '_> {
        self.perf
            .as_ref()
            .map(|c| self.edges.iter().zip(c).map(|(&(i, _), &n)| (i, n)))
    }

    pub fn bucket_at(&self, edge: u16) -> u8 {
        match self.edges.binary_search_by_key(&edge, |&(i, _)| i) {
            Ok(k) => self.edges[k].1,
            Err(_) => 0,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty() && self.stmt_hits.is_clear() && self.branch_hits.is_clear()
    }

    /// Points hit by the run, ascending.
    pub fn points(&self) -> impl Iterator<Item = usize> + '_ {
        self.stmt_hits.union(&self.branch_hits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interest {
    NewEdge,
    NewBucket,
    PerfGain,
    WeightedGain,
    None,
}

impl Interest {
    pub fn is_interesting(self) -> bool {
        self != Interest::None
    }
}

/// Coverage accumulated over a campaign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalCoverage {
    pub netlist_hash: u64,
    buckets: Vec<u8>,
    edge_count: usize,
    pub stmt_hits: FixedBitSet,
    pub branch_hits: FixedBitSet,
    /// Corpus entries hitting each point.
    pub corpus_hits: Vec<u32>,
    /// Highest raw count seen per edge; empty until a perf run is merged.
    perf_max: Vec<u32>,
    pub max_weighted: u64,
}

impl GlobalCoverage {
    pub fn new(netlist: &Netlist) -> Self {
        Self::with_points(netlist.hash, netlist.cov_points.len())
    }

    pub fn with_points(netlist_hash: u64, n_points: usize) -> Self {
        GlobalCoverage {
            netlist_hash,
            buckets: vec![0; MAP_SIZE],
            edge_count: 0,
            stmt_hits: FixedBitSet::with_capacity(n_points),
            branch_hits: FixedBitSet::with_capacity(n_points),
            corpus_hits: vec![0; n_points],
            perf_max: Vec::new(),
            max_weighted: 0,
        }
    }

    pub fn n_points(&self) -> usize {
        self.corpus_hits.len()
    }

    pub fn buckets(&self) -> &[u8] {
        &self.buckets
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn perf_max(&self, edge: u16) -> u32 {
        self.perf_max.get(edge as usize).copied().unwrap_or(0)
    }

    pub fn has_perf(&self) -> bool {
        !self.perf_max.is_empty()
    }

    /// Classifies `run` against the accumulated state.
    pub fn is_interesting(&self, run: &CoverageMap, engine: EngineKind) -> Interest {
        if !run.stmt_hits.is_subset(&self.stmt_hits) || !run.branch_hits.is_subset(&self.branch_hits) {
            return Interest::NewEdge;
        }
        let mut new_bucket = false;
        for &(i, m) in &run.edges {
            let g = self.buckets[i as usize];
            if g == 0 {
                return Interest::NewEdge;
            }
            new_bucket |= m & !g != 0;
        }
        if new_bucket {
            return Interest::NewBucket;
        }
        match engine {
            EngineKind::Perffuzz => {
                if let Some(mut counts) = run.perf_counts() {
                    if counts.any(|(i, n)| n > self.perf_max(i)) {
                        return Interest::PerfGain;
                    }
                }
            }
            EngineKind::Tortoise if run.weighted > self.max_weighted => return Interest::WeightedGain,
            _ => {}
        }
        Interest::None
    }

    /// ORs `run` into the accumulated map and raises perf and weighted
    /// maxima. Corpus hit counts are left alone; see
    /// [`GlobalCoverage::record_corpus_entry`].
    pub fn merge(&mut self, run: &CoverageMap) {
        for &(i, m) in &run.edges {
            let slot = &mut self.buckets[i as usize];
            if *slot == 0 {
                self.edge_count += 1;
            }
            *slot |= m;
        }
        self.stmt_hits.union_with(&run.stmt_hits);
        self.branch_hits.union_with(&run.branch_hits);
        if let Some(counts) = run.perf_counts() {
            if self.perf_max.is_empty() {
                self.perf_max = vec![0; MAP_SIZE];
            }
            for (i, n) in counts {
                let slot = &mut self.perf_max[i as usize];
                *slot = (*slot).max(n);
            }
        }
        self.max_weighted = self.max_weighted.max(run.weighted);
    }

    /// Counts `run`'s points towards corpus rarity.
    pub fn record_corpus_entry(&mut self, run: &CoverageMap) {
        for p in run.points() {
            self.corpus_hits[p] += 1;
        }
    }

    /// Folds another campaign's coverage into this one.
    pub fn merge_global(&mut self, other: &GlobalCoverage) -> Result<(), SnapshotError> {
        if other.netlist_hash != self.netlist_hash || other.n_points() != self.n_points() {
            return Err(SnapshotError::NetlistMismatch);
        }
        for (i, &m) in other.buckets.iter().enumerate() {
            if m != 0 {
                if self.buckets[i] == 0 {
                    self.edge_count += 1;
                }
                self.buckets[i] |= m;
            }
        }
        self.stmt_hits.union_with(&other.stmt_hits);
        self.branch_hits.union_with(&other.branch_hits);
        for (a, b) in self.corpus_hits.iter_mut().zip(&other.corpus_hits) {
            *a = a.saturating_add(*b);
        }
        if other.has_perf() {
            if self.perf_max.is_empty() {
                self.perf_max = vec![0; MAP_SIZE];
            }
            for (a, b) in self.perf_max.iter_mut().zip(&other.perf_max) {
                *a = (*a).max(*b);
            }
        }
        self.max_weighted = self.max_weighted.max(other.max_weighted);
        Ok(())
    }

    pub fn to_snapshot(&self) -> Vec<u8> {
        let n = self.n_points();
        let mut out = Vec::with_capacity(6 + 8 + 4 + 2 * n.div_ceil(8) + MAP_SIZE + 4 * n + 9);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.netlist_hash.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        for set in [&self.stmt_hits, &self.branch_hits] {
            let mut bytes = vec![0u8; n.div_ceil(8)];
            for i in set.ones() {
                bytes[i / 8] |= 1 << (i % 8);
            }
            out.extend_from_slice(&bytes);
        }
        out.extend_from_slice(&self.buckets);
        for h in &self.corpus_hits {
            out.extend_from_slice(&h.to_le_bytes());
        }
        out.extend_from_slice(&self.max_weighted.to_le_bytes());
        out.push(u8::from(self.has_perf()));
        for m in &self.perf_max {
            out.extend_from_slice(&m.to_le_bytes());
        }
        out
    }

    pub fn from_snapshot(bytes: &[u8]) -> Result<Self, SnapshotError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(6)? != MAGIC {
            return Err(SnapshotError::Corrupt("bad magic".into()));
        }
        let hash = u64::from_le_bytes(r.array()?);
        let n = u32::from_le_bytes(r.array()?) as usize;
        let mut g = GlobalCoverage::with_points(hash, n);
        for set in [&mut g.stmt_hits, &mut g.branch_hits] {
            let bits = r.take(n.div_ceil(8))?;
            for i in 0..n {
                if bits[i / 8] >> (i % 8) & 1 == 1 {
                    set.insert(i);
                }
            }
            if !n.is_multiple_of(8) && bits[n / 8] >> (n % 8) != 0 {
                return Err(SnapshotError::Corrupt("bits set beyond the point count".into()));
            }
        }
        g.buckets.copy_from_slice(r.take(MAP_SIZE)?);
        g.edge_count = g.buckets.iter().filter(|&&b| b != 0).count();
        for h in &mut g.corpus_hits {
            *h = u32::from_le_bytes(r.array()?);
        }
        g.max_weighted = u64::from_le_bytes(r.array()?);
        match r.take(1)?[0] {
            0 => {}
            1 => {
                g.perf_max = (0..MAP_SIZE)
                    .map(|_| r.array().map(u32::from_le_bytes))
                    .collect::<Result<_, _>>()?;
            }
            other => return Err(SnapshotError::Corrupt(format!("perf flag {other}"))),
        }
        if r.pos != bytes.len() {
            return Err(SnapshotError::Corrupt("trailing bytes".into()));
        }
        Ok(g)
    }
}

const MAGIC: &[u8; 6] = b"HWCOV1";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SnapshotError {
    #[error("coverage snapshots come from different netlists (netlist-mismatch)")]
    NetlistMismatch,
    #[error("corrupt coverage snapshot: {0} (corrupt-snapshot)")]
    Corrupt(String),
}

impl SnapshotError {
    pub fn category(&self) -> &'static str {
        match self {
            SnapshotError::NetlistMismatch => "netlist-mismatch",
            SnapshotError::Corrupt(_) => "corrupt-snapshot",
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| SnapshotError::Corrupt("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], SnapshotError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveragePct {
    pub stmt: f64,
    pub branch: f64,
}

/// Percentages of statement-like and branch points hit; 0 when a design
/// has no points of a kind.
pub fn coverage_pct(global: &GlobalCoverage, netlist: &Netlist) -> CoveragePct {
    let pct = |hit: usize, total: usize| {
        if total == 0 {
            0.0
        } else {
            hit as f64 * 100.0 / total as f64
        }
    };
    CoveragePct {
        stmt: pct(global.stmt_hits.count_ones(..), netlist.statement_points()),
        branch: pct(global.branch_hits.count_ones(..), netlist.branch_points()),
    }
}
