use hwfuzz_core::designs;
use hwfuzz_core::rtl::{extract_spec, parse, DesignSpec, SourceModule};
use hwfuzz_core::sim::*;
use hwfuzz_core::stimulus::{StimulusFrame, TestCase};

const KEY: u64 = 0x0000_BADE_0000_ACEC;

fn build(src: &str, top: &str) -> (Vec<SourceModule>, DesignSpec, Netlist) {
    let modules = parse(src).unwrap();
    let spec = extract_spec(&modules, top, None, None).unwrap();
    let netlist = elaborate(&modules, &spec).unwrap();
    (modules, spec, netlist)
}

fn key_store() -> (DesignSpec, Netlist) {
    let (_, spec, netlist) = build(designs::KEY_STORE_DEBUG, "key_store_debug");
    (spec, netlist)
}

fn frames(values: &[u64]) -> Vec<StimulusFrame> {
    values.iter().map(|&v| StimulusFrame::new(vec![v])).collect()
}

fn tc(values: &[u64]) -> TestCase {
    let frames = frames(values);
    TestCase {
        bytes: values.iter().map(|&v| v as u8).collect(),
        frames,
    }
}

fn cfg() -> RunConfig {
    RunConfig::default()
}

fn elab_err(src: &str, top: &str) -> ElabErrorKind {
    let modules = parse(src).unwrap();
    let spec = extract_spec(&modules, top, None, None).unwrap();
    elaborate(&modules, &spec).unwrap_err().kind
}

#[test]
fn wrapper_flattens_instance() {
    let src = format!("{}\n{}", designs::KEY_STORE_DEBUG, designs::KEY_STORE_DEBUG_TB);
    let (_, _, n) = build(&src, "key_store_debug_tb");
    assert!(n.signal_id("cl.debug_info").is_some());
    assert!(n.signal_id("cl.out").is_some());
    assert_eq!(n.processes.len(), 1);
    assert!(n.cov_points.len() >= 6);
    let kinds: Vec<_> = n.cov_points.iter().map(|p| p.kind).collect();
    assert_eq!(kinds.iter().filter(|k| **k == PointKind::BranchTrue).count(), 2);
    assert_eq!(kinds.iter().filter(|k| **k == PointKind::BranchFalse).count(), 2);
    assert_eq!(n.assertions.len(), 2);
}

#[test]
fn key_store_point_inventory() {
    let (_, n) = key_store();
    // two ifs (statement + both directions), four assignments, one assign
    assert_eq!(n.cov_points.len(), 11);
    assert_eq!(n.statement_points(), 7);
    assert_eq!(n.branch_points(), 4);
    // the single process writes `out`, which feeds `key_out`
    assert!(n.cov_points.iter().all(|p| p.weight == 1));
}

#[test]
fn elaboration_errors() {
    assert_eq!(
        elab_err(
            "module m(input clk, input rst, output y); wire a; wire b; assign a = b; assign b = a; assign y = a; endmodule",
            "m"
        ),
        ElabErrorKind::CombCycle
    );
    assert_eq!(
        elab_err(
            "module m(input clk, input rst, output y); wire a; assign a = a; endmodule",
            "m"
        ),
        ElabErrorKind::CombCycle
    );
    let child = "module c(input [63:0] d, output [63:0] q); assign q = d; endmodule\n";
    assert_eq!(
        elab_err(
            &format!(
                "{child}module m(input clk, input rst, input [7:0] a, output [63:0] y); c u(.d(a), .q(y)); endmodule"
            ),
            "m"
        ),
        ElabErrorKind::WidthMismatch
    );
    assert_eq!(
        elab_err("module m(input clk, input rst); nope u(.a(clk)); endmodule", "m"),
        ElabErrorKind::MissingModule
    );
    assert_eq!(
        elab_err(
            &format!("{child}module m(input clk, input rst, input [63:0] a); c u(.d(a), .bogus(a)); endmodule"),
            "m"
        ),
        ElabErrorKind::PortConnectionMismatch
    );
    assert_eq!(
        elab_err(
            "module m(input clk, input rst, output y); always @(posedge clk) y <= 1; endmodule",
            "m"
        ),
        ElabErrorKind::IllegalTarget
    );
    assert_eq!(
        elab_err(
            "module m(input clk, input rst, output reg y); always @(negedge clk) y <= 1; endmodule",
            "m"
        ),
        ElabErrorKind::Unsupported
    );
}

#[test]
fn unsized_literal_connects_to_any_width() {
    let src = "module c(input [7:0] d, output [7:0] q); assign q = d; endmodule
        module m(input clk, input rst, output [7:0] y); c u(.d(3), .q(y)); endmodule";
    let (_, spec, n) = build(src, "m");
    let r = run_testcase(&n, &TestCase::new(vec![], &spec), &cfg());
    assert_eq!(r.outputs, vec![("y".to_string(), 3)]);
}

#[test]
fn key_out_during_and_after_reset() {
    let (_, n) = key_store();
    let key_out = n.signal_id("key_out").unwrap();
    let rst = n.signal_id("rst_n_in").unwrap();
    let debug = n.signal_id("debug_mode").unwrap();
    let mut state = SimState::new(&n);
    // `out` is reassigned after the if/else, so the key appears even in reset
    step_cycle(&n, &mut state, &[(rst, 0), (debug, 0)]).unwrap();
    assert_eq!(state.value(key_out), KEY);
    assert_eq!(state.value(n.signal_id("debug_info").unwrap()), 0);
    let step = step_cycle(&n, &mut state, &[(rst, 1), (debug, 0)]).unwrap();
    assert_eq!(state.value(key_out), KEY);
    assert!(step.failures.is_empty());
    assert_eq!(state.cycle, 2);
}

#[test]
fn assertion_evaluation() {
    let (_, n) = key_store();
    let mut state = SimState::new(&n);
    let set = |state: &mut SimState, name: &str, v: u64| state.values[n.signal_id(name).unwrap().index()] = v;
    set(&mut state, "rst_n_in", 1);
    set(&mut state, "debug_mode", 1);
    set(&mut state, "key_out", KEY);
    let f = eval_assertions(&n, &state).unwrap();
    assert_eq!(f.iter().map(|f| f.assertion).collect::<Vec<_>>(), vec![0]);
    set(&mut state, "rst_n_in", 0);
    assert!(eval_assertions(&n, &state).unwrap().is_empty());
    set(&mut state, "rst_n_in", 1);
    set(&mut state, "debug_mode", 0);
    assert!(eval_assertions(&n, &state).unwrap().is_empty());
}

#[test]
fn division_by_zero_traps() {
    let src = "module m(input clk, input rst, input [3:0] a, input [3:0] b, output reg [3:0] y);
        always @(posedge clk) y <= a / b;
      endmodule";
    let (_, spec, n) = build(src, "m");
    let mut state = SimState::new(&n);
    let err = step_cycle(&n, &mut state, &[]).unwrap_err();
    assert_eq!(err.kind, TrapKind::DivByZero);
    assert_eq!(err.cycle, 0);
    let r = run_testcase(&n, &TestCase::new(vec![], &spec), &cfg());
    assert_eq!(r.crash.unwrap().kind, CrashKind::Trap(TrapKind::DivByZero));
}

#[test]
fn dynamic_select_out_of_range_traps() {
    let src = "module m(input clk, input rst, input [2:0] i, input [4:0] v, output reg y);
        always @(posedge clk) if (!rst) y <= v[i];
      endmodule";
    let (_, spec, n) = build(src, "m");
    // frame: i in bits 0..3, v in bits 3..8
    let ok = run_testcase(&n, &TestCase::new(vec![0b1111_1100], &spec), &cfg());
    assert_eq!(ok.outcome, Outcome::Completed);
    assert_eq!(ok.outputs[0].1, 1);
    let bad = run_testcase(&n, &TestCase::new(vec![0b0000_0101], &spec), &cfg());
    let crash = bad.crash.unwrap();
    assert_eq!(crash.kind, CrashKind::Trap(TrapKind::OobSelect));
    assert_eq!(crash.cycle, 2);
}

#[test]
fn debug_frame_crashes_after_reset() {
    let (_, n) = key_store();
    let r = run_testcase(&n, &tc(&[1]), &cfg());
    assert_eq!(r.outcome, Outcome::Crash);
    let crash = r.crash.unwrap();
    assert_eq!(crash.kind, CrashKind::Assertion(0));
    assert_eq!(crash.cycle, 2);
    assert_eq!(r.cycles_run, 3);
}

#[test]
fn empty_testcase_runs_reset_only() {
    let (_, n) = key_store();
    let r = run_testcase(&n, &tc(&[]), &cfg());
    assert_eq!(r.outcome, Outcome::Completed);
    assert!(r.crash.is_none());
    assert_eq!(r.cycles_run, 2);
    let r = run_testcase(
        &n,
        &tc(&[]),
        &RunConfig {
            reset_cycles: 5,
            ..cfg()
        },
    );
    assert_eq!(r.cycles_run, 5);
}

#[test]
fn debug_branch_untouched_without_debug_mode() {
    let (_, n) = key_store();
    let r = run_testcase(&n, &tc(&[0; 5]), &cfg());
    assert_eq!(r.outcome, Outcome::Completed);
    assert_eq!(r.cycles_run, 7);
    // points in allocation order: if, T, F, two reset assigns, if, T, F, ...
    let debug_true = n
        .cov_points
        .iter()
        .filter(|p| p.kind == PointKind::BranchTrue)
        .nth(1)
        .unwrap()
        .id;
    assert!(!r.coverage.branch_hits.contains(debug_true as usize));
    let debug_false = n
        .cov_points
        .iter()
        .filter(|p| p.kind == PointKind::BranchFalse)
        .nth(1)
        .unwrap()
        .id;
    assert!(r.coverage.branch_hits.contains(debug_false as usize));
}

#[test]
fn max_cycles_caps_the_run() {
    let (_, n) = key_store();
    let r = run_testcase(
        &n,
        &tc(&[0; 50]),
        &RunConfig {
            max_cycles: 10,
            ..cfg()
        },
    );
    assert_eq!(r.cycles_run, 10);
    assert_eq!(r.outcome, Outcome::Completed);
}

#[test]
fn runs_are_deterministic() {
    let (_, spec, n) = build(designs::ALU8, "alu8");
    let bytes: Vec<u8> = (0..90u32).map(|i| (i.wrapping_mul(37) ^ 0x5A) as u8).collect();
    let t = TestCase::new(bytes, &spec);
    let a = run_testcase(&n, &t, &RunConfig { perf: true, ..cfg() });
    let b = run_testcase(&n, &t, &RunConfig { perf: true, ..cfg() });
    assert_eq!(a.coverage, b.coverage);
    assert_eq!(a.outputs, b.outputs);
    assert_eq!(a.cycles_run, b.cycles_run);
}

#[test]
fn nonblocking_shift_register() {
    let src = "module sr(input clk, input rst, input [7:0] a, output reg [7:0] b, output reg [7:0] c);
        always @(posedge clk) begin
          b <= a;
          c <= b;
        end
      endmodule";
    let (_, _, n) = build(src, "sr");
    let a = n.signal_id("a").unwrap();
    let c = n.signal_id("c").unwrap();
    let mut state = SimState::new(&n);
    let inputs: Vec<u64> = (0..20).map(|k| (k * 13 + 7) % 256).collect();
    for (k, &v) in inputs.iter().enumerate() {
        step_cycle(&n, &mut state, &[(a, v)]).unwrap();
        if k >= 1 {
            // after cycle k (0-based) c holds the value applied at cycle k-1
            assert_eq!(state.value(c), inputs[k - 1]);
        }
    }
}

#[test]
fn blocking_assigns_are_immediate() {
    let src = "module m(input clk, input rst, input [7:0] a, output reg [7:0] b, output reg [7:0] c);
        always @(posedge clk) begin
          b = a;
          c = b;
        end
      endmodule";
    let (_, _, n) = build(src, "m");
    let a = n.signal_id("a").unwrap();
    let mut state = SimState::new(&n);
    step_cycle(&n, &mut state, &[(a, 42)]).unwrap();
    assert_eq!(state.value(n.signal_id("c").unwrap()), 42);
}

#[test]
fn values_stay_within_width() {
    let (_, spec, n) = build(designs::COUNTER8, "counter8");
    let bytes: Vec<u8> = (0..400u32).map(|i| (i * 97 % 251) as u8).collect();
    let mut state = SimState::new(&n).with_trace();
    let t = TestCase::new(bytes, &spec);
    let en = n.stimulus_inputs.clone();
    for f in &t.frames {
        let drive: Vec<_> = en.iter().copied().zip(f.values.iter().copied()).collect();
        step_cycle(&n, &mut state, &drive).unwrap();
    }
    for values in state.trace.as_ref().unwrap() {
        for (s, v) in n.signals.iter().zip(values) {
            assert!(*v <= mask(s.width), "{} = {v}", s.name);
        }
    }
}

#[test]
fn fired_points_only_grow() {
    let (_, spec, n) = build(designs::FSM_LOCK, "fsm_lock");
    let t = TestCase::new(vec![0xA5, 0x3C, 0xE7, 0x00, 0x11], &spec);
    let mut state = SimState::new(&n);
    let mut last = 0;
    let rst = n.reset.unwrap();
    let code = n.stimulus_inputs[0];
    for c in 0..2 {
        let s = step_cycle(&n, &mut state, &[(rst, 0), (code, 0)]).unwrap();
        assert_eq!(s.fired.start, last, "cycle {c}");
        last = s.fired.end;
    }
    for f in &t.frames {
        let s = step_cycle(&n, &mut state, &[(rst, 1), (code, f.values[0])]).unwrap();
        assert_eq!(s.fired.start, last);
        assert!(s.fired.end >= s.fired.start);
        last = s.fired.end;
    }
    assert_eq!(state.value(n.signal_id("state").unwrap()), 0);
}

#[test]
fn fsm_lock_opens_with_the_code() {
    let (_, spec, n) = build(designs::FSM_LOCK, "fsm_lock");
    let r = run_testcase(&n, &TestCase::new(vec![0xA5, 0x3C, 0xE7], &spec), &cfg());
    assert_eq!(r.outcome, Outcome::Completed);
    assert_eq!(r.outputs, vec![("unlocked".to_string(), 1), ("state".to_string(), 3)]);
}

#[test]
fn async_reset_edge_triggers_process() {
    let src = "module m(input clk, input rst_n, input go, output reg [3:0] n);
        always @(negedge rst_n) n <= n + 1;
      endmodule";
    let (_, _, net) = build(src, "m");
    let rst = net.signal_id("rst_n").unwrap();
    let mut state = SimState::new(&net);
    for level in [1, 0, 0, 1, 0, 1, 1, 0] {
        step_cycle(&net, &mut state, &[(rst, level)]).unwrap();
    }
    assert_eq!(state.value(net.signal_id("n").unwrap()), 3);
}

#[test]
fn vcd_for_two_cycles() {
    let (_, n) = key_store();
    let r = run_testcase(&n, &tc(&[]), &RunConfig { trace: true, ..cfg() });
    let trace = r.trace.unwrap();
    assert_eq!(trace.len(), 2);
    let text = emit_vcd(&n, &trace);
    assert_eq!(text.lines().filter(|l| l.starts_with('#')).count(), 2);
    let code = id_code(n.signal_id("key_out").unwrap().index());
    assert!(text.contains(&format!("b{KEY:b} {code}")));
    assert!(text.contains("$timescale 1ns $end"));
}

#[test]
fn vcd_without_cycles_is_header_only() {
    let (_, n) = key_store();
    let text = emit_vcd(&n, &[]);
    assert!(text.ends_with("$enddefinitions $end\n"));
    assert!(!text.lines().any(|l| l.starts_with('#')));
}

#[test]
fn vcd_reparses_to_the_trace() {
    let src = format!("{}\n{}", designs::KEY_STORE_DEBUG, designs::KEY_STORE_DEBUG_TB);
    let (_, spec, n) = build(&src, "key_store_debug_tb");
    let r = run_testcase(
        &n,
        &TestCase::new(vec![0, 0, 1, 0, 1], &spec),
        &RunConfig { trace: true, ..cfg() },
    );
    let trace = r.trace.unwrap();
    let text = emit_vcd(&n, &trace);

    let mut parser = vcd::Parser::new(text.as_bytes());
    let header = parser.parse_header().unwrap();
    let mut codes = std::collections::HashMap::new();
    for s in &n.signals {
        let path: Vec<&str> = std::iter::once(n.top.as_str()).chain(s.name.split('.')).collect();
        let var = header.find_var(&path).unwrap_or_else(|| panic!("{}", s.name));
        assert_eq!(var.size, s.width);
        codes.insert(var.code, s.name.clone());
    }
    let mut current: std::collections::HashMap<String, u64> = std::collections::HashMap::new();
    let mut snapshots = Vec::new();
    let mut time = None;
    let snapshot = |current: &std::collections::HashMap<String, u64>| -> Vec<u64> {
        n.signals.iter().map(|s| current[&s.name]).collect()
    };
    for cmd in parser {
        match cmd.unwrap() {
            vcd::Command::Timestamp(t) => {
                if time.is_some() {
                    snapshots.push(snapshot(&current));
                }
                time = Some(t);
            }
            vcd::Command::ChangeScalar(code, v) => {
                current.insert(codes[&code].clone(), u64::from(v == vcd::Value::V1));
            }
            vcd::Command::ChangeVector(code, bits) => {
                let v = bits
                    .iter()
                    .fold(0u64, |acc, b| (acc << 1) | u64::from(b == vcd::Value::V1));
                current.insert(codes[&code].clone(), v);
            }
            _ => {}
        }
    }
    snapshots.push(snapshot(&current));
    assert_eq!(snapshots, trace);
}

const REPLAY: &str = "module tb;
  reg clk_in;
  reg rst_n_in;
  reg debug_mode;
  wire [63:0] key_out;
  key_store_debug dut(.clk_in(clk_in), .rst_n_in(rst_n_in), .debug_mode(debug_mode), .key_out(key_out));
  always #5 clk_in = ~clk_in;
  initial begin
    clk_in = 0;
    rst_n_in = 0;
    debug_mode = 0;
    @(posedge clk_in);
    @(posedge clk_in);
    rst_n_in = 1;
    debug_mode = 0;
    @(posedge clk_in);
    @(negedge clk_in);
    debug_mode = 1;
    @(posedge clk_in);
    @(negedge clk_in);
    $finish;
  end
endmodule
";

#[test]
fn testbench_reproduces_the_crash() {
    let modules = parse(&format!("{}\n{REPLAY}", designs::KEY_STORE_DEBUG)).unwrap();
    let tb = elaborate_testbench(&modules, "tb").unwrap();
    assert_eq!(tb.half_period, 5);
    let run = simulate_testbench(&tb, 1000, true);
    let crash = run.crash.clone().unwrap();
    assert_eq!(crash.kind, CrashKind::Assertion(0));
    assert_eq!(crash.cycle, 3);
    assert_eq!(run.trace().len(), 4);

    // the same stimulus through the fuzzing entry point gives the same key
    let (_, n) = key_store();
    let direct = run_testcase(&n, &tc(&[0, 1]), &cfg()).crash.unwrap();
    assert_eq!(direct.dedup_key(), crash.dedup_key());
    assert_eq!(direct.cycle, crash.cycle);
    assert_eq!(tb.netlist.cov_points.len(), n.cov_points.len());
}

#[test]
fn testbench_finish_stops_cleanly() {
    let src = format!(
        "{}\n{}",
        designs::KEY_STORE_DEBUG,
        REPLAY.replace("debug_mode = 1;", "debug_mode = 0;")
    );
    let tb = elaborate_testbench(&parse(&src).unwrap(), "tb").unwrap();
    let run = simulate_testbench(&tb, 1000, false);
    assert!(run.crash.is_none());
    assert!(run.finished);
    assert_eq!(run.cycles, 4);
}

#[test]
fn testbench_requires_a_clock_generator() {
    let src = format!(
        "{}\n{}",
        designs::KEY_STORE_DEBUG,
        REPLAY.replace("always #5 clk_in = ~clk_in;", "")
    );
    let err = elaborate_testbench(&parse(&src).unwrap(), "tb").unwrap_err();
    assert_eq!(err.kind, ElabErrorKind::Unsupported);
}
