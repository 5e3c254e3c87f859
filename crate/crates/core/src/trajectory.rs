//! Trajectory files: a header line, then one comma-separated line per tick
//! with the tick index and x, y, theta for the prey and predators 0..2,
//! six decimals each.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use crate::arena::{ArenaConfig, Pose};
use crate::episode::Frame;
use crate::error::{Error, Result};

pub const HEADER: &str = "tick,prey_x,prey_y,prey_theta,\
predator0_x,predator0_y,predator0_theta,\
predator1_x,predator1_y,predator1_theta,\
predator2_x,predator2_y,predator2_theta";

const FIELDS: usize = 13;

/// Slack for values that went through six-decimal rounding.
const ROUNDING_TOLERANCE: f64 = 1e-5;

pub fn to_csv(frames: &[Frame]) -> String {
    let mut out = String::with_capacity(frames.len() * 100 + HEADER.len());
    out.push_str(HEADER);
    out.push('\n');
    for (tick, frame) in frames.iter().enumerate() {
        write!(out, "{tick}").unwrap();
        for p in frame {
            write!(out, ",{:.6},{:.6},{:.6}", p.x, p.y, p.theta).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn save(path: &Path, frames: &[Frame]) -> Result<()> {
    std::fs::write(path, to_csv(frames)).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Parses a trajectory. `path` only labels errors.
pub fn parse(text: &str, path: &Path) -> Result<Vec<Frame>> {
    let malformed = |line: usize, message: String| Error::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    match lines.next() {
        None => return Err(malformed(1, "empty file".into())),
        Some(h) if h.trim() != HEADER => return Err(malformed(1, "unexpected header".into())),
        Some(_) => {}
    }
    let mut frames = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        if line.trim().is_empty() {
            return Err(malformed(lineno, "blank line".into()));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != FIELDS {
            return Err(malformed(lineno, format!("expected {FIELDS} fields, found {}", fields.len())));
        }
        let tick: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| malformed(lineno, format!("bad tick {:?}", fields[0])))?;
        if tick != frames.len() {
            return Err(malformed(lineno, format!("expected tick {}, found {tick}", frames.len())));
        }
        let mut values = [0.0; FIELDS - 1];
        for (k, v) in fields[1..].iter().enumerate() {
            values[k] = v
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| malformed(lineno, format!("bad number {v:?} in column {}", k + 2)))?;
        }
        frames.push(std::array::from_fn(|r| {
            Pose::new(values[3 * r], values[3 * r + 1], values[3 * r + 2])
        }));
    }
    if frames.is_empty() {
        return Err(malformed(1, "no ticks after the header".into()));
    }
    Ok(frames)
}

pub fn load(path: &Path) -> Result<Vec<Frame>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse(&text, path)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplaySummary {
    pub ticks: usize,
    pub caught: bool,
    pub catcher: Option<usize>,
    pub t: f64,
}

impl fmt::Display for ReplaySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.catcher {
            Some(i) => write!(f, "valid, caught at t={:.1} by predator {i} ({} ticks)", self.t, self.ticks),
            None => write!(f, "valid, not caught, t={:.1} ({} ticks)", self.t, self.ticks),
        }
    }
}

fn min_distance(frame: &Frame) -> (usize, f64) {
    (1..4)
        .map(|k| (k - 1, frame[0].distance_to(&frame[k])))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// Re-checks a parsed trajectory: every body inside the walls, no catch
/// before the last tick, and the last tick either a catch or the timeout.
pub fn verify(frames: &[Frame], arena: &ArenaConfig, path: &Path) -> Result<ReplaySummary> {
    let violation = |tick: usize, message: String| Error::Violation {
        path: path.to_path_buf(),
        tick: tick as u32,
        message,
    };
    let max_ticks = arena.max_ticks() as usize;
    if frames.len() > max_ticks + 1 {
        return Err(violation(max_ticks + 1, format!("episode runs past {max_ticks} ticks")));
    }
    let names = ["prey", "predator 0", "predator 1", "predator 2"];
    for (tick, frame) in frames.iter().enumerate() {
        for (k, p) in frame.iter().enumerate() {
            if !arena.contains_body(p.x, p.y, ROUNDING_TOLERANCE) {
                return Err(violation(tick, format!("{} at ({}, {}) is outside the arena", names[k], p.x, p.y)));
            }
        }
        let (_, d) = min_distance(frame);
        let last = tick + 1 == frames.len();
        if !last && d < arena.catch_radius - ROUNDING_TOLERANCE {
            return Err(violation(tick, format!("prey within catch radius ({d:.6}) but episode continues")));
        }
    }
    let last = frames.len() - 1;
    let (nearest, d) = min_distance(&frames[last]);
    let caught = d <= arena.catch_radius + ROUNDING_TOLERANCE;
    if !caught && last != max_ticks {
        return Err(violation(last, format!("episode ends at tick {last} without a catch")));
    }
    let catcher = caught.then(|| {
        (0..3)
            .find(|&i| frames[last][0].distance_to(&frames[last][i + 1]) <= arena.catch_radius + ROUNDING_TOLERANCE)
            .unwrap_or(nearest)
    });
    Ok(ReplaySummary {
        ticks: last,
        caught,
        catcher,
        t: arena.time_at(last as u32),
    })
}

pub fn replay_file(path: &Path, arena: &ArenaConfig) -> Result<ReplaySummary> {
    verify(&load(path)?, arena, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::Constant;
    use crate::episode::run_controllers;
    use crate::sensors::CameraModel;

    fn caught_episode() -> Vec<Frame> {
        let arena = ArenaConfig::default();
        let full = Constant::predator(1.0, 1.0);
        run_controllers([&full, &full, &full], &Constant::stationary_prey(), &arena, &CameraModel::default(), 3)
            .unwrap()
            .trajectory
    }

    #[test]
    fn round_trip_and_verify() {
        let frames = caught_episode();
        let text = to_csv(&frames);
        let parsed = parse(&text, Path::new("t.csv")).unwrap();
        assert_eq!(parsed.len(), frames.len());
        assert_eq!(to_csv(&parsed), text);
        let s = verify(&parsed, &ArenaConfig::default(), Path::new("t.csv")).unwrap();
        assert!(s.caught);
        assert_eq!(s.catcher, Some(1));
        assert!((s.t - 2.7).abs() < 1e-9);
        assert_eq!(s.to_string(), "valid, caught at t=2.7 by predator 1 (27 ticks)");
    }

    #[test]
    fn malformed_inputs() {
        let p = Path::new("x.csv");
        let err = |text: &str| match parse(text, p) {
            Err(Error::Malformed { line, .. }) => line,
            other => panic!("{other:?}"),
        };
        assert_eq!(err(""), 1);
        assert_eq!(err("tick,x\n"), 1);
        assert_eq!(err(&format!("{HEADER}\n")), 1);
        let good = to_csv(&caught_episode());
        let mut lines: Vec<String> = good.lines().map(String::from).collect();
        lines[4] = lines[4].replacen(",", ",abc", 1);
        assert_eq!(err(&lines.join("\n")), 5);
        let mut lines: Vec<String> = good.lines().map(String::from).collect();
        lines.remove(3);
        assert_eq!(err(&lines.join("\n")), 4);
    }

    #[test]
    fn corrupted_pose_is_a_violation() {
        let mut frames = caught_episode();
        frames[7][2].x = 4.5;
        match verify(&frames, &ArenaConfig::default(), Path::new("t.csv")) {
            Err(Error::Violation { tick, .. }) => assert_eq!(tick, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn early_end_without_catch_is_a_violation() {
        let frames = caught_episode();
        let cut = &frames[..10];
        assert!(matches!(
            verify(cut, &ArenaConfig::default(), Path::new("t.csv")),
            Err(Error::Violation { tick: 9, .. })
        ));
    }
}
