//! Configuration parsing: defaults, measure sources and located errors.

use mq_cli::config::{parse_config, parse_config_with, RunConfig};
use mq_core::lattice::fixtures;
use mq_core::limits::DEFAULT_RADII;
use mq_core::processes::WalkKind;
use mq_core::{Error, Point, Vec2};

fn line_of(e: Error) -> usize {
    match e {
        Error::Config { line, .. } => line,
        other => panic!("expected a located configuration error, got {other}"),
    }
}

#[test]
fn empty_text_gives_the_documented_defaults() {
    let cfg = parse_config("# nothing\n\n").unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(cfg.measure, fixtures::m1());
    assert_eq!(cfg.radii, DEFAULT_RADII.to_vec());
    assert_eq!(cfg.tolerance, 0.08);
}

#[test]
fn measure_block_and_keys_are_read() {
    let text = "name = nn\nq = 1, 1\nkind = halfplane1\nradii =\npoints = 1,2; 3,4\n[measure]\n1 0 0.35\n-1 0 0.15 # west\n0 1 0.35\n0 -1 0.15\n";
    let cfg = parse_config(text).unwrap();
    assert_eq!(cfg.name, "nn");
    assert_eq!(cfg.measure, fixtures::m1());
    assert_eq!(cfg.q, Vec2::new(1.0, 1.0));
    assert_eq!(cfg.kind, WalkKind::HalfPlane1);
    assert_eq!(cfg.radii, DEFAULT_RADII.to_vec());
    assert_eq!(cfg.points, vec![Point::new(1, 2), Point::new(3, 4)]);
}

#[test]
fn measure_file_is_resolved_through_the_reader() {
    let read = |p: &str| {
        assert_eq!(p, "m2.txt");
        Ok("1 0 0.3\n0 1 0.3\n-1 -1 0.2\n1 1 0.1\n-1 0 0.05\n0 -1 0.05\n".to_string())
    };
    let cfg = parse_config_with("measure_file = m2.txt\n", &read).unwrap();
    assert_eq!(cfg.measure, fixtures::m2());
}

#[test]
fn bad_mass_sum_is_reported_with_the_sum() {
    let e = parse_config("seed = 3\n[measure]\n1 0 0.5\n0 1 0.49\n").unwrap_err();
    let text = e.to_string();
    assert!(text.contains("0.99"), "{text}");
    assert_eq!(line_of(e), 2);
}

#[test]
fn errors_carry_line_numbers() {
    assert_eq!(line_of(parse_config("seed = 1\n\nbogus = 2\n").unwrap_err()), 3);
    assert_eq!(line_of(parse_config("seed = 1\nseed = 2\n").unwrap_err()), 2);
    assert_eq!(line_of(parse_config("q = 1\n").unwrap_err()), 1);
    assert_eq!(line_of(parse_config("[other]\n").unwrap_err()), 1);
    assert_eq!(line_of(parse_config("measure = m2\n[measure]\n1 0 1\n").unwrap_err()), 2);
    assert_eq!(line_of(parse_config("[measure]\n1 0 0.5\n1 0 0.5\n").unwrap_err()), 3);
    assert!(parse_config("no equals sign\n").unwrap_err().to_string().contains("key = value"));
}
