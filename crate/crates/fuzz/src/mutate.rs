//! Deterministic stages and stacked havoc mutation.
//!
//! Block operations work on whole stimulus frames so that inserting or
//! deleting never shifts the bit alignment of later frames.

use rand::{Rng, RngExt};

use crate::corpus::Origin;

/// Single-byte values substituted by the interesting-value stage and havoc.
pub const INTERESTING_8: [u8; 9] = [0x80, 0xFF, 0, 1, 16, 32, 64, 100, 0x7F];

const ARITH_MAX: u8 = 35;

/// True when `xor` (the difference between two bytes) is a result the
/// walking bitflip or byte flip stages already produce.
pub fn could_be_bitflip(xor: u8) -> bool {
    if xor == 0 {
        return true;
    }
    let sh = xor.trailing_zeros();
    let v = xor >> sh;
    v == 1 || v == 3 || v == 15 || (sh == 0 && v == 0xFF)
}

fn could_be_arith(old: u8, new: u8) -> bool {
    let d = new.wrapping_sub(old);
    (1..=ARITH_MAX).contains(&d) || (1..=ARITH_MAX).contains(&d.wrapping_neg())
}

#[derive(Debug, Clone)]
pub struct Mutator {
    frame_bytes: usize,
    /// Stimulus bits per frame; the remaining bits of the last byte are
    /// ignored by the codec.
    width: u32,
    max_len: usize,
    dict: Vec<Vec<u8>>,
}

impl Mutator {
    /// `max_frames` bounds the length of generated inputs.
    pub fn new(frame_bytes: usize, width: u32, max_frames: usize, dict: Vec<Vec<u8>>) -> Self {
        Mutator {
            frame_bytes,
            width,
            max_len: frame_bytes * max_frames.max(1),
            dict: dict.into_iter().filter(|t| !t.is_empty()).collect(),
        }
    }

    pub fn frame_bytes(&self) -> usize {
        self.frame_bytes
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Bits of byte `pos` that reach the design.
    pub fn used_bits(&self, pos: usize) -> u8 {
        let first = (pos % self.frame_bytes) as u32 * 8;
        match self.width.saturating_sub(first) {
            0 => 0,
            n if n >= 8 => 0xFF,
            n => (1u8 << n) - 1,
        }
    }

    pub fn deterministic<'a>(&'a self, base: &'a [u8]) -> DetStages<'a> {
        DetStages {
            m: self,
            base,
            stage: 0,
            i: 0,
            last: (0, 0),
            ineffective: vec![false; base.len()],
        }
    }

    /// One havoc candidate: 1 to 64 stacked random mutations of `base`,
    /// optionally spliced with `partner` first. With a non-empty `mask`,
    /// only bytes at masked positions change, apart from whole frames
    /// appended at the end: later frames cannot alter earlier cycles, so
    /// appending never loses a branch the base input hits.
    pub fn havoc(
        &self,
        base: &[u8],
        partner: Option<&[u8]>,
        mask: Option<&[usize]>,
        rng: &mut impl Rng,
    ) -> (Vec<u8>, Origin) {
        let mask = mask.filter(|m| !m.is_empty());
        let mut out = base.to_vec();
        let mut origin = Origin::Havoc;
        if let (Some(p), None) = (partner, mask) {
            if rng.random_ratio(1, 8) && !p.is_empty() {
                let frames = out.len().min(p.len()) / self.frame_bytes;
                let cut = rng.random_range(0..=frames) * self.frame_bytes;
                out.truncate(cut);
                out.extend_from_slice(&p[cut.min(p.len())..]);
                out.truncate(self.max_len);
                origin = Origin::Splice;
            }
        }
        let stack = 1usize << rng.random_range(0..=6u32);
        for _ in 0..stack {
            match mask {
                Some(m) => self.masked_op(&mut out, base.len(), m, rng),
                None => self.op(&mut out, rng),
            }
        }
        (out, origin)
    }

    fn byte_op(&self, out: &mut [u8], pos: usize, op: u32, rng: &mut impl Rng) {
        let b = &mut out[pos];
        match op {
            0 => *b ^= 1 << rng.random_range(0..8),
            1 => *b = INTERESTING_8[rng.random_range(0..INTERESTING_8.len())],
            2 => *b = b.wrapping_add(rng.random_range(1..=ARITH_MAX)),
            3 => *b = b.wrapping_sub(rng.random_range(1..=ARITH_MAX)),
            _ => *b ^= rng.random_range(1..=255u8),
        }
    }

    fn masked_op(&self, out: &mut Vec<u8>, base_len: usize, mask: &[usize], rng: &mut impl Rng) {
        let f = self.frame_bytes;
        if rng.random_ratio(1, 8) {
            let room = self.max_len.saturating_sub(out.len()) / f;
            if room > 0 {
                let n = rng.random_range(1..=room.min(16));
                let frames = out.len() / f;
                if frames > 0 && rng.random_ratio(3, 4) {
                    let n = n.min(frames);
                    let from = rng.random_range(0..=frames - n) * f;
                    out.extend_from_within(from..from + n * f);
                } else {
                    let fill = rng.random::<u8>();
                    out.resize(out.len() + n * f, fill);
                }
            }
            return;
        }
        let tail = out.len() - base_len;
        let k = rng.random_range(0..mask.len() + tail);
        let pos = if k < mask.len() {
            mask[k]
        } else {
            base_len + k - mask.len()
        };
        if pos < out.len() {
            self.byte_op(out, pos, rng.random_range(0..5), rng);
        }
    }

    fn op(&self, out: &mut Vec<u8>, rng: &mut impl Rng) {
        let f = self.frame_bytes;
        let frames = out.len() / f;
        let ops = if self.dict.is_empty() { 8 } else { 10 };
        match rng.random_range(0..ops) {
            op @ 0..=4 => {
                if !out.is_empty() {
                    let pos = rng.random_range(0..out.len());
                    self.byte_op(out, pos, op, rng);
                }
            }
            5 if frames >= 2 => {
                let n = rng.random_range(1..=frames / 2);
                let at = rng.random_range(0..=frames - n);
                out.drain(at * f..(at + n) * f);
            }
            6 if out.len() + f <= self.max_len => {
                let room = (self.max_len - out.len()) / f;
                let n = rng.random_range(1..=room.min(16));
                let at = rng.random_range(0..=frames) * f;
                let block: Vec<u8> = if frames > 0 && rng.random_ratio(3, 4) {
                    let n = n.min(frames);
                    let from = rng.random_range(0..=frames - n) * f;
                    out[from..from + n * f].to_vec()
                } else {
                    let fill = rng.random::<u8>();
                    vec![fill; n * f]
                };
                out.splice(at..at, block);
            }
            7 if frames >= 2 => {
                let n = rng.random_range(1..=frames / 2);
                let from = rng.random_range(0..=frames - n) * f;
                let to = rng.random_range(0..=frames - n) * f;
                out.copy_within(from..from + n * f, to);
            }
            8 => {
                let tok = &self.dict[rng.random_range(0..self.dict.len())];
                if tok.len() <= out.len() {
                    let at = rng.random_range(0..=out.len() - tok.len());
                    out[at..at + tok.len()].copy_from_slice(tok);
                }
            }
            9 => {
                let tok = &self.dict[rng.random_range(0..self.dict.len())];
                if out.len() + tok.len() <= self.max_len {
                    let at = rng.random_range(0..=out.len());
                    out.splice(at..at, tok.iter().copied());
                }
            }
            _ => {}
        }
    }
}

/// Walking bit flips (1, 2, 4 bits), byte flips (1, 2, 4 bytes), 8-bit
/// arithmetic (±1..35), interesting-value substitution and dictionary
/// overwrites, in that order. Candidates that duplicate an earlier stage or
/// change only bits the codec ignores are skipped, as are the arithmetic,
/// interesting-value and dictionary candidates for bytes reported
/// ineffective during the single byte flip stage.
pub struct DetStages<'a> {
    m: &'a Mutator,
    base: &'a [u8],
    stage: usize,
    i: usize,
    /// Stage and index of the last candidate returned.
    last: (usize, usize),
    ineffective: Vec<bool>,
}

const ARITH_STEPS: usize = 2 * ARITH_MAX as usize;

impl DetStages<'_> {
    /// Byte position inverted by the last candidate, when it came from the
    /// single byte flip stage.
    pub fn last_byte_flip(&self) -> Option<usize> {
        (self.last.0 == 3).then_some(self.last.1)
    }

    /// Records that inverting byte `pos` left the execution path unchanged.
    pub fn mark_ineffective(&mut self, pos: usize) {
        if let Some(e) = self.ineffective.get_mut(pos) {
            *e = true;
        }
    }

    fn stage_len(&self, stage: usize) -> Option<usize> {
        let l = self.base.len();
        Some(match stage {
            0 => 8 * l,
            1 => (8 * l).saturating_sub(1),
            2 => (8 * l).saturating_sub(3),
            3 => l,
            4 => l.saturating_sub(1),
            5 => l.saturating_sub(3),
            6 => l * ARITH_STEPS,
            7 => l * INTERESTING_8.len(),
            8 => l * self.m.dict.len(),
            _ => return None,
        })
    }

    fn candidate(&self, stage: usize, i: usize) -> Option<(Vec<u8>, Origin)> {
        let base = self.base;
        let mut out = base.to_vec();
        let origin = match stage {
            0..=2 => {
                let bits = 1 << stage;
                for b in i..i + bits {
                    out[b / 8] ^= 1 << (b % 8);
                }
                Origin::Flip
            }
            3..=5 => {
                let bytes = 1 << (stage - 3);
                out[i..i + bytes].iter_mut().for_each(|b| *b ^= 0xFF);
                Origin::Flip
            }
            6 => {
                let (pos, step) = (i / ARITH_STEPS, i % ARITH_STEPS);
                if self.ineffective[pos] {
                    return None;
                }
                let delta = (step / 2 + 1) as u8;
                let old = base[pos];
                let new = if step % 2 == 0 {
                    old.wrapping_add(delta)
                } else {
                    old.wrapping_sub(delta)
                };
                if could_be_bitflip(old ^ new) {
                    return None;
                }
                out[pos] = new;
                Origin::Arith
            }
            7 => {
                let (pos, k) = (i / INTERESTING_8.len(), i % INTERESTING_8.len());
                let (old, new) = (base[pos], INTERESTING_8[k]);
                if self.ineffective[pos] || could_be_bitflip(old ^ new) || could_be_arith(old, new) {
                    return None;
                }
                out[pos] = new;
                Origin::Interest
            }
            _ => {
                let n = self.m.dict.len();
                let (pos, tok) = (i / n, &self.m.dict[i % n]);
                let end = pos + tok.len();
                if end > base.len() || base[pos..end] == tok[..] || self.ineffective[pos..end].iter().all(|&e| e) {
                    return None;
                }
                out[pos..end].copy_from_slice(tok);
                Origin::Dict
            }
        };
        let reaches_design = out
            .iter()
            .zip(base)
            .enumerate()
            .any(|(pos, (a, b))| (a ^ b) & self.m.used_bits(pos) != 0);
        reaches_design.then_some((out, origin))
    }
}

impl Iterator for DetStages<'_> {
    type Item = (Vec<u8>, Origin);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let len = self.stage_len(self.stage)?;
            if self.i >= len {
                self.stage += 1;
                self.i = 0;
                continue;
            }
            let i = self.i;
            self.i += 1;
            if let Some(c) = self.candidate(self.stage, i) {
                self.last = (self.stage, i);
                return Some(c);
            }
        }
    }
}
