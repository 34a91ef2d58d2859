//! Seed selection and energy assignment for the five engines.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, RngExt};

use hwfuzz_core::coverage::{EngineKind, GlobalCoverage};
use hwfuzz_core::sim::{Executor, Netlist, PointId, RunConfig};
use hwfuzz_core::stimulus::Codec;

use crate::corpus::{Averages, Corpus, CorpusEntry};

pub const MIN_ENERGY: u32 = 16;
pub const MAX_ENERGY: u32 = 1600;
pub const BASE_ENERGY: f64 = 256.0;

/// Upper bound of the fast-schedule factor.
const MAX_FAST_FACTOR: f64 = 32.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub index: usize,
    /// Rare branch the entry was chosen for (fairfuzz).
    pub target_branch: Option<PointId>,
}

/// Queue cursor plus the favored-entry bookkeeping of the AFL family.
#[derive(Debug, Clone)]
pub struct Scheduler {
    engine: EngineKind,
    cursor: usize,
    /// Best (cost x length, entry) per edge.
    top_rated: BTreeMap<u16, (u64, usize)>,
    pending_favored: usize,
}

impl Scheduler {
    pub fn new(engine: EngineKind) -> Self {
        Scheduler {
            engine,
            cursor: 0,
            top_rated: BTreeMap::new(),
            pending_favored: 0,
        }
    }

    pub fn engine(&self) -> EngineKind {
        self.engine
    }

    /// Updates the favored set after `idx` joined the corpus.
    pub fn on_insert(&mut self, corpus: &mut Corpus, idx: usize) {
        let e = corpus.get(idx);
        let score = e.cost.max(1) * e.bytes.len().max(1) as u64;
        let mut changed = false;
        for &(edge, _) in e.coverage.edges() {
            let slot = self.top_rated.entry(edge).or_insert((u64::MAX, idx));
            if score < slot.0 {
                *slot = (score, idx);
                changed = true;
            }
        }
        if changed {
            self.cull(corpus);
        }
    }

    /// Marks a minimal set of entries that together hold every top-rated edge.
    fn cull(&mut self, corpus: &mut Corpus) {
        for i in 0..corpus.len() {
            corpus.get_mut(i).favored = false;
        }
        let mut covered = HashSet::new();
        for (&edge, &(_, idx)) in &self.top_rated {
            if covered.contains(&edge) {
                continue;
            }
            let e = corpus.get_mut(idx);
            e.favored = true;
            covered.extend(e.coverage.edges().iter().map(|&(i, _)| i));
        }
        self.pending_favored = corpus.entries().iter().filter(|e| e.favored && e.n_fuzzed == 0).count();
    }

    /// Records that `idx` was handed out for fuzzing.
    pub fn on_fuzzed(&mut self, corpus: &mut Corpus, idx: usize) {
        let e = corpus.get_mut(idx);
        if e.favored && e.n_fuzzed == 0 {
            self.pending_favored = self.pending_favored.saturating_sub(1);
        }
        e.n_fuzzed += 1;
    }

    /// Picks the next entry to fuzz.
    ///
    /// # Panics
    ///
    /// If the corpus is empty.
    pub fn select_next(
        &mut self,
        corpus: &Corpus,
        global: &GlobalCoverage,
        netlist: &Netlist,
        rng: &mut impl Rng,
    ) -> Selection {
        assert!(!corpus.is_empty(), "cannot select from an empty corpus");
        let plain = |index| Selection {
            index,
            target_branch: None,
        };
        match self.engine {
            EngineKind::Afl | EngineKind::Aflpp => plain(self.next_afl(corpus, rng)),
            EngineKind::Fairfuzz => self
                .next_rare(corpus, global, netlist)
                .unwrap_or_else(|| plain(self.next_afl(corpus, rng))),
            EngineKind::Perffuzz => {
                let idx = self
                    .next_matching(corpus, |e| {
                        e.coverage
                            .perf_counts()
                            .is_some_and(|mut c| c.any(|(edge, n)| n > 0 && n == global.perf_max(edge)))
                    })
                    .unwrap_or_else(|| self.next_afl(corpus, rng));
                plain(idx)
            }
            EngineKind::Tortoise => plain(tortoise_pick(corpus)),
        }
    }

    fn advance(&mut self, len: usize) -> usize {
        let i = self.cursor % len;
        self.cursor = (i + 1) % len;
        i
    }

    fn next_afl(&mut self, corpus: &Corpus, rng: &mut impl Rng) -> usize {
        loop {
            let i = self.advance(corpus.len());
            let e = corpus.get(i);
            if self.pending_favored > 0 {
                if (e.n_fuzzed > 0 || !e.favored) && rng.random_ratio(99, 100) {
                    continue;
                }
            } else if !e.favored && corpus.len() > 10 {
                let skip = if e.n_fuzzed == 0 { 75 } else { 95 };
                if rng.random_ratio(skip, 100) {
                    continue;
                }
            }
            return i;
        }
    }

    /// Next entry from the cursor satisfying `pred`, within one pass.
    fn next_matching(&mut self, corpus: &Corpus, pred: impl Fn(&CorpusEntry) -> bool) -> Option<usize> {
        for _ in 0..corpus.len() {
            let i = self.advance(corpus.len());
            if pred(corpus.get(i)) {
                return Some(i);
            }
        }
        None
    }

    fn next_rare(&mut self, corpus: &Corpus, global: &GlobalCoverage, netlist: &Netlist) -> Option<Selection> {
        let rare = rare_branches(global, netlist);
        if rare.is_empty() {
            return None;
        }
        let index = self.next_matching(corpus, |e| {
            rare.iter().any(|&(p, _)| e.coverage.branch_hits.contains(p as usize))
        })?;
        let hits = &corpus.get(index).coverage.branch_hits;
        // `rare` is sorted by hit count, then id
        let target = rare.iter().find(|&&(p, _)| hits.contains(p as usize)).map(|&(p, _)| p);
        Some(Selection {
            index,
            target_branch: target,
        })
    }
}

/// Branch points hit by at most the rarity cutoff of corpus entries
/// (the smallest power of two not below the minimum hit count), ordered by
/// hit count and then id.
pub fn rare_branches(global: &GlobalCoverage, netlist: &Netlist) -> Vec<(PointId, u32)> {
    let mut hit: Vec<(PointId, u32)> = netlist
        .cov_points
        .iter()
        .filter(|p| p.kind.is_branch())
        .map(|p| (p.id, global.corpus_hits[p.id as usize]))
        .filter(|&(_, n)| n > 0)
        .collect();
    let Some(min) = hit.iter().map(|&(_, n)| n).min() else {
        return Vec::new();
    };
    let cutoff = min.next_power_of_two();
    hit.retain(|&(_, n)| n <= cutoff);
    hit.sort_by_key(|&(p, n)| (n, p));
    hit
}

/// Entry maximising `(weighted + 1) / (n_fuzzed + 1)`; the lowest index wins ties.
fn tortoise_pick(corpus: &Corpus) -> usize {
    let score = |e: &CorpusEntry| (u128::from(e.coverage.weighted) + 1, u128::from(e.n_fuzzed) + 1);
    let mut best = 0;
    for (i, e) in corpus.entries().iter().enumerate().skip(1) {
        let (wn, wd) = score(e);
        let (bn, bd) = score(corpus.get(best));
        if wn * bd > bn * wd {
            best = i;
        }
    }
    best
}

/// AFL-style performance score: 256 for an average entry, scaled by cost
/// and coverage relative to the corpus averages and by depth. aflpp also
/// applies the fast power schedule. Clamped to `[16, 1600]`.
pub fn assign_energy(entry: &CorpusEntry, engine: EngineKind, avg: &Averages) -> u32 {
    let mut score = BASE_ENERGY;
    let cost = entry.cost as f64;
    score *= if cost * 0.1 > avg.cost {
        0.1
    } else if cost * 0.25 > avg.cost {
        0.25
    } else if cost * 0.5 > avg.cost {
        0.5
    } else if cost * 0.75 > avg.cost {
        0.75
    } else if cost * 4.0 < avg.cost {
        3.0
    } else if cost * 3.0 < avg.cost {
        2.0
    } else if cost * 2.0 < avg.cost {
        1.5
    } else {
        1.0
    };
    let edges = entry.coverage.edge_count() as f64;
    score *= if edges * 0.3 > avg.edges {
        3.0
    } else if edges * 0.5 > avg.edges {
        2.0
    } else if edges * 0.75 > avg.edges {
        1.5
    } else if edges * 3.0 < avg.edges {
        0.25
    } else if edges * 2.0 < avg.edges {
        0.5
    } else if edges * 1.5 < avg.edges {
        0.75
    } else {
        1.0
    };
    score *= match entry.depth {
        0..=3 => 1.0,
        4..=7 => 2.0,
        8..=13 => 3.0,
        14..=25 => 4.0,
        _ => 5.0,
    };
    if engine == EngineKind::Aflpp {
        score *= fast_factor(entry);
    }
    score.clamp(f64::from(MIN_ENERGY), f64::from(MAX_ENERGY)) as u32
}

/// `2^min(n_fuzzed, 16) / path_frequency`, capped at 32.
pub fn fast_factor(entry: &CorpusEntry) -> f64 {
    let level = f64::from(1u32 << entry.n_fuzzed.min(16));
    (level / f64::from(entry.path_frequency.max(1))).min(MAX_FAST_FACTOR)
}

/// Byte positions of `bytes` that can be inverted without losing `target`:
/// each byte is flipped in isolation and the input re-run, one run per byte.
pub fn fairfuzz_compute_mask(
    bytes: &[u8],
    target: PointId,
    exec: &mut Executor<'_>,
    codec: &Codec,
    cfg: &RunConfig,
) -> Vec<usize> {
    let mut flat = Vec::new();
    let mut probe = bytes.to_vec();
    let mut mask = Vec::new();
    for pos in 0..bytes.len() {
        probe[pos] ^= 0xFF;
        flat.clear();
        let frames = codec.decode_into(&probe, &mut flat);
        let run = exec.run_flat(&flat, frames, cfg);
        if run.coverage.branch_hits.contains(target as usize) {
            mask.push(pos);
        }
        probe[pos] ^= 0xFF;
    }
    mask
}
