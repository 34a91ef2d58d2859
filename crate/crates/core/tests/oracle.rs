//! The instrumented simulator against an independent AST interpreter on
//! randomly generated designs.

mod support;

use rand::{RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use hwfuzz_core::rtl::{extract_spec, parse, print::print_module};
use hwfuzz_core::sim::{elaborate, CrashKind, Executor, RunConfig, TrapKind};
use hwfuzz_core::stimulus::StimulusFrame;
use support::netgen::random_module;
use support::reference::{reference_run, RefCrash};

const DESIGNS: u64 = 1000;
const CYCLES: usize = 16;

#[test]
fn simulator_matches_reference_interpreter() {
    let mut crashes = 0;
    for seed in 0..DESIGNS {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let source = print_module(&random_module(&mut rng));
        let modules = parse(&source).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{source}"));
        let spec = extract_spec(&modules, "gen_top", None, None).unwrap();
        let netlist = elaborate(&modules, &spec).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{source}"));

        let reset_cycles = rng.random_range(0..=2u32);
        let widths: Vec<u32> = spec.stimulus_ports().map(|p| p.width).collect();
        let frames: Vec<Vec<u64>> = (0..CYCLES - reset_cycles as usize)
            .map(|_| widths.iter().map(|&w| rng.random_range(0..1u64 << w)).collect())
            .collect();
        let cfg = RunConfig {
            reset_cycles,
            max_cycles: CYCLES as u32,
            trace: true,
            perf: false,
        };
        let stimulus: Vec<StimulusFrame> = frames.iter().map(|f| StimulusFrame::new(f.clone())).collect();
        let got = Executor::new(&netlist).run_frames(&stimulus, &cfg);
        let want = reference_run(&modules[0], &spec, &frames, reset_cycles, CYCLES as u32);

        let got_crash = got.crash.as_ref().map(|c| {
            let kind = match c.kind {
                CrashKind::Assertion(a) => RefCrash::Assertion(a),
                CrashKind::Trap(TrapKind::DivByZero) => RefCrash::DivByZero,
                CrashKind::Trap(TrapKind::OobSelect) => RefCrash::OobSelect,
            };
            (kind, c.cycle)
        });
        assert_eq!(got_crash, want.crash, "seed {seed}: crash\n{source}");
        crashes += usize::from(want.crash.is_some());

        let trace = got.trace.unwrap();
        let compared = match want.crash {
            Some((RefCrash::DivByZero | RefCrash::OobSelect, c)) => c as usize,
            _ => want.cycles.len(),
        };
        assert!(trace.len() >= compared, "seed {seed}: short trace");
        for (cycle, expected) in want.cycles.iter().take(compared).enumerate() {
            for (name, value) in expected {
                let id = netlist.signal_id(name).unwrap();
                assert_eq!(
                    trace[cycle][id.index()],
                    *value,
                    "seed {seed}: `{name}` at cycle {cycle}\n{source}"
                );
            }
        }
    }
    // the generator should exercise both outcomes
    assert!(crashes > 0 && crashes < DESIGNS as usize, "{crashes} crashing designs");
}
