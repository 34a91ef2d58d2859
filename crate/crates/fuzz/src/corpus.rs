//! Retained testcases and the per-path bookkeeping the schedulers read.

use std::collections::HashMap;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use hwfuzz_core::coverage::CoverageMap;
use hwfuzz_core::sim::PointId;

/// How a testcase was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    Seed,
    Flip,
    Arith,
    Interest,
    Dict,
    Havoc,
    Splice,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Seed => "seed",
            Origin::Flip => "flip",
            Origin::Arith => "arith",
            Origin::Interest => "interest",
            Origin::Dict => "dict",
            Origin::Havoc => "havoc",
            Origin::Splice => "splice",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: usize,
    pub bytes: Vec<u8>,
    pub coverage: CoverageMap,
    /// Simulated cycles of the run, the execution cost measure.
    pub cost: u64,
    /// Mutation generation; seeds are 0.
    pub depth: u32,
    /// Times selected for fuzzing.
    pub n_fuzzed: u32,
    /// Runs (of any input) that reproduced this entry's exact edge set.
    pub path_frequency: u32,
    pub path_hash: u64,
    pub favored: bool,
    /// Deterministic stages already applied.
    pub det_done: bool,
    /// Byte positions that keep the given branch firing when mutated.
    pub branch_mask: Option<(PointId, Vec<usize>)>,
    pub origin: Origin,
}

impl CorpusEntry {
    pub fn new(id: usize, bytes: Vec<u8>, coverage: CoverageMap, cost: u64, depth: u32, origin: Origin) -> Self {
        let path_hash = path_hash(&coverage);
        CorpusEntry {
            id,
            bytes,
            coverage,
            cost,
            depth,
            n_fuzzed: 0,
            path_frequency: 0,
            path_hash,
            favored: false,
            det_done: false,
            branch_mask: None,
            origin,
        }
    }

    /// `id_<6 digits>_<origin>`
    pub fn file_name(&self) -> String {
        format!("id_{:06}_{}", self.id, self.origin)
    }
}

/// Fingerprint of the edges and statements a run touched (counts ignored).
pub fn path_hash(map: &CoverageMap) -> u64 {
    let mut h = DefaultHasher::new();
    for &(edge, _) in map.edges() {
        edge.hash(&mut h);
    }
    map.stmt_hits.ones().for_each(|p| p.hash(&mut h));
    h.finish()
}

/// Mean cost and edge count over the corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Averages {
    pub cost: f64,
    pub edges: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    entries: Vec<CorpusEntry>,
    /// Run count per path hash.
    path_hits: HashMap<u64, u32>,
    by_path: HashMap<u64, Vec<usize>>,
    cost_sum: u64,
    edge_sum: u64,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn get(&self, idx: usize) -> &CorpusEntry {
        &self.entries[idx]
    }

    pub fn get_mut(&mut self, idx: usize) -> &mut CorpusEntry {
        &mut self.entries[idx]
    }

    /// Appends `entry`, assigning its id, and returns its index.
    pub fn push(&mut self, mut entry: CorpusEntry) -> usize {
        entry.id = self.entries.len();
        entry.path_frequency = self.path_hits.get(&entry.path_hash).copied().unwrap_or(0);
        self.cost_sum += entry.cost;
        self.edge_sum += entry.coverage.edge_count() as u64;
        self.by_path.entry(entry.path_hash).or_default().push(entry.id);
        self.entries.push(entry);
        self.entries.len() - 1
    }

    /// Counts one run along the path with fingerprint `hash`.
    pub fn record_path(&mut self, hash: u64) {
        let n = self.path_hits.entry(hash).or_insert(0);
        *n += 1;
        let n = *n;
        for &i in self.by_path.get(&hash).into_iter().flatten() {
            self.entries[i].path_frequency = n;
        }
    }

    pub fn averages(&self) -> Averages {
        let n = self.entries.len().max(1) as f64;
        Averages {
            cost: self.cost_sum as f64 / n,
            edges: self.edge_sum as f64 / n,
        }
    }

    pub fn into_entries(self) -> Vec<CorpusEntry> {
        self.entries
    }
}
