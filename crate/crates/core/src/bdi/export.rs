//! Line-oriented text records.
//!
//! Trajectories: one `grid` record per grid point and one `event` record per
//! jump, in time order; the event record carries the configuration right
//! after the jump. Lists inside a field are space separated. Observations
//! carry positions only.

use std::io::{BufRead, Write};

use super::engine::{Trajectory, TrajectoryPoint};
use super::{Configuration, EventKind, EventLogEntry, Observation, Particles};
use crate::error::{Error, Result};

const TRAJECTORY_COLUMNS: &str = "record,time,grid_index,kind,parent_id,immigrant_id,child_ids,child_offsets,positions,ids";
const OBSERVATION_COLUMNS: &str = "index,time,n,positions";

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn join_f(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f(x)).collect::<Vec<_>>().join(" ")
}

fn join_u(xs: &[u64]) -> String {
    xs.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
}

fn opt_u(x: Option<u64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

pub fn write_trajectory<W: Write>(traj: &Trajectory, out: &mut W) -> Result<()> {
    writeln!(out, "# dim={}", traj.dim)?;
    writeln!(out, "# dt={}", fmt_f(traj.dt))?;
    writeln!(out, "{TRAJECTORY_COLUMNS}")?;
    let mut events = traj.events.iter();
    for p in &traj.points {
        let cfg = format!("{},{}", join_f(p.config.flat_positions()), join_u(p.config.ids()));
        match p.grid_index {
            Some(k) => writeln!(out, "grid,{},{k},,,,,,{cfg}", fmt_f(p.time))?,
            None => {
                let e = events.next().ok_or_else(|| Error::Parse {
                    line: 0,
                    reason: "more jump points than events".into(),
                })?;
                let kind = match e.kind {
                    EventKind::Death => "death".to_string(),
                    EventKind::Branch(k) => format!("branch({k})"),
                    EventKind::Immigration => "immigration".to_string(),
                };
                writeln!(
                    out,
                    "event,{},,{kind},{},{},{},{},{cfg}",
                    fmt_f(e.time),
                    opt_u(e.parent_id),
                    opt_u(e.immigrant_id),
                    join_u(&e.child_ids),
                    join_f(&e.child_offsets),
                )?;
            }
        }
    }
    Ok(())
}

fn header_value(line: &str, key: &str) -> Option<String> {
    let rest = line.strip_prefix('#')?.trim();
    let (k, v) = rest.split_once('=')?;
    (k.trim() == key).then(|| v.trim().to_string())
}

fn parse_list<T: std::str::FromStr>(field: &str, line: usize) -> Result<Vec<T>> {
    field
        .split_whitespace()
        .map(|s| {
            s.parse().map_err(|_| Error::Parse {
                line,
                reason: format!("bad list entry {s:?}"),
            })
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(field: &str, line: usize) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        line,
        reason: format!("bad value {field:?}"),
    })
}

fn parse_opt(field: &str, line: usize) -> Result<Option<u64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_one(field, line).map(Some)
    }
}

pub fn read_trajectory<R: BufRead>(input: R) -> Result<Trajectory> {
    let mut dim = None;
    let mut dt = None;
    let mut points = Vec::new();
    let mut events = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let ln = n + 1;
        if line.starts_with('#') {
            if let Some(v) = header_value(&line, "dim") {
                dim = Some(parse_one::<usize>(&v, ln)?);
            }
            if let Some(v) = header_value(&line, "dt") {
                dt = Some(parse_one::<f64>(&v, ln)?);
            }
            continue;
        }
        if line.is_empty() || line == TRAJECTORY_COLUMNS {
            continue;
        }
        let d = dim.ok_or(Error::Parse {
            line: ln,
            reason: "missing dim header".into(),
        })?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(Error::Parse {
                line: ln,
                reason: format!("expected 10 fields, found {}", f.len()),
            });
        }
        let time: f64 = parse_one(f[1], ln)?;
        let config = Configuration::with_ids(d, parse_list(f[8], ln)?, parse_list(f[9], ln)?);
        match f[0] {
            "grid" => points.push(TrajectoryPoint {
                time,
                grid_index: Some(parse_one(f[2], ln)?),
                config,
            }),
            "event" => {
                let kind = match f[3] {
                    "death" => EventKind::Death,
                    "immigration" => EventKind::Immigration,
                    s => {
                        let k = s
                            .strip_prefix("branch(")
                            .and_then(|r| r.strip_suffix(')'))
                            .ok_or_else(|| Error::Parse {
                                line: ln,
                                reason: format!("unknown event kind {s:?}"),
                            })?;
                        EventKind::Branch(parse_one(k, ln)?)
                    }
                };
                events.push(EventLogEntry {
                    time,
                    kind,
                    parent_id: parse_opt(f[4], ln)?,
                    immigrant_id: parse_opt(f[5], ln)?,
                    child_ids: parse_list(f[6], ln)?,
                    child_offsets: parse_list(f[7], ln)?,
                });
                points.push(TrajectoryPoint {
                    time,
                    grid_index: None,
                    config,
                });
            }
            s => {
                return Err(Error::Parse {
                    line: ln,
                    reason: format!("unknown record {s:?}"),
                })
            }
        }
    }
    Ok(Trajectory {
        dim: dim.ok_or(Error::Parse {
            line: 0,
            reason: "missing dim header".into(),
        })?,
        dt: dt.ok_or(Error::Parse {
            line: 0,
            reason: "missing dt header".into(),
        })?,
        points,
        events,
    })
}

/// Writes `η_{iΔ}` for each observation, without identities.
pub fn write_observations<W: Write>(observations: &[Observation], delta: f64, out: &mut W) -> Result<()> {
    let dim = observations.first().map_or(1, |o| o.dim());
    writeln!(out, "# dim={dim}")?;
    writeln!(out, "# delta={}", fmt_f(delta))?;
    writeln!(out, "{OBSERVATION_COLUMNS}")?;
    for (i, o) in observations.iter().enumerate() {
        writeln!(out, "{i},{},{},{}", fmt_f(i as f64 * delta), o.len(), join_f(o.flat_positions()))?;
    }
    Ok(())
}

/// Returns the observations and `Δ`.
pub fn read_observations<R: BufRead>(input: R) -> Result<(Vec<Observation>, f64)> {
    let mut dim = None;
    let mut delta = None;
    let mut obs = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let ln = n + 1;
        if line.starts_with('#') {
            if let Some(v) = header_value(&line, "dim") {
                dim = Some(parse_one::<usize>(&v, ln)?);
            }
            if let Some(v) = header_value(&line, "delta") {
                delta = Some(parse_one::<f64>(&v, ln)?);
            }
            continue;
        }
        if line.is_empty() || line == OBSERVATION_COLUMNS {
            continue;
        }
        let d = dim.ok_or(Error::Parse {
            line: ln,
            reason: "missing dim header".into(),
        })?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(Error::Parse {
                line: ln,
                reason: format!("expected 4 fields, found {}", f.len()),
            });
        }
        let positions: Vec<f64> = parse_list(f[3], ln)?;
        let n: usize = parse_one(f[2], ln)?;
        if positions.len() != n * d {
            return Err(Error::Parse {
                line: ln,
                reason: "particle count does not match positions".into(),
            });
        }
        obs.push(Observation::new(d, positions));
    }
    let delta = delta.ok_or(Error::Parse {
        line: 0,
        reason: "missing delta header".into(),
    })?;
    Ok((obs, delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdi::{observe, simulate};
    use crate::model::builtin_preset;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trajectory_roundtrip_is_exact() {
        let spec = builtin_preset("binary-spread").unwrap();
        let traj = simulate(&spec, Configuration::void(1), 10.0, 0.01, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(!traj.events.is_empty());
        let mut buf = Vec::new();
        write_trajectory(&traj, &mut buf).unwrap();
        let back = read_trajectory(buf.as_slice()).unwrap();
        assert_eq!(back, traj);
    }

    #[test]
    fn observations_roundtrip_without_ids() {
        let spec = builtin_preset("binary-spread").unwrap();
        let traj = simulate(&spec, Configuration::void(1), 10.0, 0.01, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let (obs, _) = observe(&traj, 0.1).unwrap();
        let mut buf = Vec::new();
        write_observations(&obs, 0.1, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains("ids"));
        let (back, delta) = read_observations(buf.as_slice()).unwrap();
        assert_eq!(delta, 0.1);
        assert_eq!(back, obs);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        let text = "# dim=1\n# dt=1e-1\ngrid,0.0,0\n";
        assert!(matches!(read_trajectory(text.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }
}
