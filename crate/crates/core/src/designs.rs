//! Bundled benchmark designs.

pub const KEY_STORE_DEBUG: &str = include_str!("../designs/key_store_debug.v");
pub const KEY_STORE_DEBUG_TB: &str = include_str!("../designs/key_store_debug_tb.v");
pub const COUNTER8: &str = include_str!("../designs/counter8.v");
pub const FSM_LOCK: &str = include_str!("../designs/fsm_lock.v");
pub const ALU8: &str = include_str!("../designs/alu8.v");

/// `(top module name, source)` for every bundled design.
pub const ALL: &[(&str, &str)] = &[
    ("key_store_debug", KEY_STORE_DEBUG),
    ("key_store_debug_tb", KEY_STORE_DEBUG_TB),
    ("counter8", COUNTER8),
    ("fsm_lock", FSM_LOCK),
    ("alu8", ALU8),
];

/// The four fuzzing benchmarks (the wrapper testbench excluded).
pub const BENCHMARKS: &[(&str, &str)] = &[
    ("key_store_debug", KEY_STORE_DEBUG),
    ("counter8", COUNTER8),
    ("fsm_lock", FSM_LOCK),
    ("alu8", ALU8),
];

/// Source for a bundled benchmark by top-module name.
pub fn source(top: &str) -> Option<&'static str> {
    ALL.iter().find(|(name, _)| *name == top).map(|(_, src)| *src)
}
