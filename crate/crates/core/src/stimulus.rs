//! Byte-string to stimulus-frame codec.
//!
//! A frame is `F = ceil(W / 8)` bytes (1 when `W = 0`), where `W` is the
//! total width of the stimulus inputs. The frame's bytes form one
//! little-endian bit string; ports take consecutive bits in declaration
//! order, least significant bit first. Surplus high bits of the last byte
//! are ignored and a trailing partial frame is dropped, so every byte
//! string decodes, and byte `i` only ever affects frame `i / F`.

use crate::rtl::DesignSpec;

/// Stimulus input values in `DesignSpec::stimulus_ports` order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct StimulusFrame {
    pub values: Vec<u64>,
}

impl StimulusFrame {
    pub fn new(values: Vec<u64>) -> Self {
        StimulusFrame { values }
    }

    /// `(port name, value)` pairs.
    pub fn assignments<'s>(&'s self, spec: &'s DesignSpec) -> impl Iterator<Item = (&'s str, u64)> + 's {
        spec.stimulus_ports()
            .map(|p| p.name.as_str())
            .zip(self.values.iter().copied())
    }

    pub fn get(&self, spec: &DesignSpec, port: &str) -> Option<u64> {
        self.assignments(spec).find(|(n, _)| *n == port).map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub bytes: Vec<u8>,
    pub frames: Vec<StimulusFrame>,
}

impl TestCase {
    pub fn new(bytes: Vec<u8>, spec: &DesignSpec) -> Self {
        let frames = decode(&bytes, spec);
        TestCase { bytes, frames }
    }
}

/// Precomputed frame layout for one design.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codec {
    widths: Vec<u32>,
    frame_bytes: usize,
}

impl Codec {
    pub fn new(spec: &DesignSpec) -> Self {
        Codec {
            widths: spec.stimulus_ports().map(|p| p.width).collect(),
            frame_bytes: spec.frame_bytes(),
        }
    }

    pub fn frame_bytes(&self) -> usize {
        self.frame_bytes
    }

    pub fn ports(&self) -> usize {
        self.widths.len()
    }

    pub fn frame_count(&self, len: usize) -> usize {
        len / self.frame_bytes
    }

    /// Appends the decoded values of every whole frame to `out`
    /// (`ports()` values per frame) and returns the frame count.
    pub fn decode_into(&self, bytes: &[u8], out: &mut Vec<u64>) -> usize {
        let n = self.frame_count(bytes.len());
        out.reserve(n * self.widths.len());
        for frame in bytes.chunks_exact(self.frame_bytes) {
            let mut bit = 0usize;
            for &w in &self.widths {
                out.push(read_bits(frame, bit, w));
                bit += w as usize;
            }
        }
        n
    }

    pub fn decode(&self, bytes: &[u8]) -> Vec<StimulusFrame> {
        let mut flat = Vec::new();
        self.decode_into(bytes, &mut flat);
        if self.widths.is_empty() {
            return vec![StimulusFrame::default(); self.frame_count(bytes.len())];
        }
        flat.chunks_exact(self.widths.len())
            .map(|c| StimulusFrame::new(c.to_vec()))
            .collect()
    }

    pub fn encode(&self, frames: &[StimulusFrame]) -> Vec<u8> {
        let mut out = vec![0u8; frames.len() * self.frame_bytes];
        for (frame, chunk) in frames.iter().zip(out.chunks_exact_mut(self.frame_bytes)) {
            let mut bit = 0usize;
            for (&w, &v) in self.widths.iter().zip(&frame.values) {
                write_bits(chunk, bit, w, v);
                bit += w as usize;
            }
        }
        out
    }
}

fn read_bits(frame: &[u8], start: usize, width: u32) -> u64 {
    let mut v = 0u64;
    for i in 0..width as usize {
        let b = start + i;
        v |= u64::from((frame[b / 8] >> (b % 8)) & 1) << i;
    }
    v
}

fn write_bits(frame: &mut [u8], start: usize, width: u32, value: u64) {
    for i in 0..width as usize {
        let b = start + i;
        frame[b / 8] |= (((value >> i) & 1) as u8) << (b % 8);
    }
}

pub fn decode(bytes: &[u8], spec: &DesignSpec) -> Vec<StimulusFrame> {
    Codec::new(spec).decode(bytes)
}

pub fn encode(frames: &[StimulusFrame], spec: &DesignSpec) -> Vec<u8> {
    Codec::new(spec).encode(frames)
}
