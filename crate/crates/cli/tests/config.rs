use std::path::PathBuf;

use hwfuzz::config::{parse_config, parse_dict, parse_seed};
use hwfuzz_core::coverage::EngineKind;
use hwfuzz_fuzz::ConfigErrorKind;

#[test]
fn one_hour_fairfuzz_campaign() {
    let cfg = parse_config("{engine: fairfuzz, duration_secs: 3600}", None).unwrap();
    assert_eq!(cfg.engine, EngineKind::Fairfuzz);
    assert_eq!(cfg.duration_secs, Some(3600));
    assert_eq!(cfg.max_execs, None);
    assert_eq!((cfg.reset_cycles, cfg.max_cycles, cfg.workers), (2, 256, 1));
    assert_eq!(cfg.rng_seed, 0);
    assert_eq!(cfg.out_dir, PathBuf::from("hwfuzz-out"));
    let c = cfg.campaign();
    assert_eq!(c.duration, Some(std::time::Duration::from_secs(3600)));
    assert_eq!(c.run.reset_cycles, 2);
}

#[test]
fn missing_stop_condition_is_an_invariant_violation() {
    let err = parse_config("{engine: afl}", None).unwrap_err();
    assert_eq!(err.kind, ConfigErrorKind::InvariantViolation);
}

#[test]
fn zero_exec_budget_is_valid() {
    let cfg = parse_config("{engine: aflpp, max_execs: 0}", None).unwrap();
    assert_eq!(cfg.max_execs, Some(0));
}

#[test]
fn multi_line_hjson_with_comments() {
    let text = r#"
        // campaign for the lock
        {
          # scheduler
          engine: tortoise
          max_execs: 100
          /* several
             workers */
          workers: 3
          out_dir: runs/lock
          "top": "fsm_lock"
          dict: tokens.dict
        }
    "#;
    let cfg = parse_config(text, None).unwrap();
    assert_eq!(cfg.engine, EngineKind::Tortoise);
    assert_eq!(cfg.workers, 3);
    assert_eq!(cfg.top.as_deref(), Some("fsm_lock"));
    assert_eq!(cfg.dict, Some(PathBuf::from("tokens.dict")));
    assert_eq!(cfg.out_dir, PathBuf::from("runs/lock"));
}

#[test]
fn error_kinds() {
    let unknown = parse_config("{engine: afl, max_execs: 1, colour: red}", None).unwrap_err();
    assert_eq!(unknown.kind, ConfigErrorKind::UnknownKey);
    assert!(unknown.message.contains("colour"));
    let engine = parse_config("{engine: libfuzzer, max_execs: 1}", None).unwrap_err();
    assert_eq!(engine.kind, ConfigErrorKind::InvariantViolation);
    assert_eq!(
        parse_config("{engine: afl, max_execs: 1", None).unwrap_err().kind,
        ConfigErrorKind::Parse
    );
    assert_eq!(
        parse_config("{max_execs: 1}", None).unwrap_err().kind,
        ConfigErrorKind::Parse
    );
    assert_eq!(
        parse_config("{engine: afl, max_execs: lots}", None).unwrap_err().kind,
        ConfigErrorKind::Parse
    );
    for bad in ["reset_cycles: 0", "max_cycles: 0", "workers: 0", "target_stmt_pct: 101"] {
        let err = parse_config(&format!("{{engine: afl, max_execs: 1, {bad}}}"), None).unwrap_err();
        assert_eq!(err.kind, ConfigErrorKind::InvariantViolation, "{bad}");
    }
}

#[test]
fn seed_override() {
    let cfg = parse_config("{engine: afl, max_execs: 1, rng_seed: 5}", Some("0x10")).unwrap();
    assert_eq!(cfg.rng_seed, 16);
    let cfg = parse_config("{engine: afl, max_execs: 1, rng_seed: 5}", Some("77")).unwrap();
    assert_eq!(cfg.rng_seed, 77);
    assert!(parse_config("{engine: afl, max_execs: 1}", Some("seven")).is_err());
    assert_eq!(parse_seed("18446744073709551615"), Some(u64::MAX));
    assert_eq!(parse_seed("0xffffffffffffffff"), Some(u64::MAX));
    assert_eq!(parse_seed("18446744073709551616"), None);
}

#[test]
fn dictionary_tokens() {
    let text = "# tokens\nkw1=\"unlock\"\n\n\"\\xA5\\x00\"\n\"a\\\"b\\\\\"\n";
    assert_eq!(
        parse_dict(text).unwrap(),
        vec![b"unlock".to_vec(), vec![0xA5, 0x00], b"a\"b\\".to_vec()]
    );
    assert!(parse_dict("\"\\x4\"").is_err());
    assert!(parse_dict("plain").is_err());
    assert!(parse_dict("\"\"").is_err());
    assert!(parse_dict("\"open").is_err());
}
