//! Check-in files in the SNAP location-based social network layout:
//! `user<TAB>time<TAB>lat<TAB>lon<TAB>venue`, time as ISO 8601 or epoch
//! seconds.

use std::io::BufRead;
use std::path::Path;

use chrono::DateTime;
use elastic_core::eval::CheckinRecord;

use crate::error::{GeoError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Malformed {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckinLoad {
    pub records: Vec<CheckinRecord>,
    /// Skipped lines, in file order.
    pub malformed: Vec<Malformed>,
}

pub fn parse_time(s: &str) -> Option<i64> {
    if let Ok(t) = s.parse::<i64>() {
        return Some(t);
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.timestamp());
    }
    chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").ok().map(|t| t.and_utc().timestamp())
}

fn parse_line(line: &str) -> std::result::Result<CheckinRecord, String> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() != 5 {
        return Err(format!("expected 5 tab-separated fields, found {}", f.len()));
    }
    let user = f[0].trim();
    if user.is_empty() {
        return Err("empty user".into());
    }
    let t = parse_time(f[1].trim()).ok_or_else(|| format!("bad time `{}`", f[1]))?;
    let lat: f64 = f[2].trim().parse().map_err(|_| format!("bad latitude `{}`", f[2]))?;
    let lon: f64 = f[3].trim().parse().map_err(|_| format!("bad longitude `{}`", f[3]))?;
    CheckinRecord::new(user, t, lat, lon, f[4].trim()).map_err(|e| e.to_string())
}

/// Reads every line; malformed lines are collected rather than fatal.
pub fn read_checkins<R: BufRead>(path: &Path, input: R) -> Result<CheckinLoad> {
    let mut out = CheckinLoad::default();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| GeoError::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line) {
            Ok(r) => out.records.push(r),
            Err(reason) => out.malformed.push(Malformed { line: i as u64 + 1, reason }),
        }
    }
    Ok(out)
}

pub fn load_checkins(path: &Path) -> Result<CheckinLoad> {
    let f = std::fs::File::open(path).map_err(|e| GeoError::io(path, e))?;
    read_checkins(path, std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snap_lines() {
        let text = "0\t2010-10-19T23:55:27Z\t30.2359091167\t-97.7951395833\t22847\n\
                    0\t1287532527\t30.26\t-97.75\tv2\n\
                    bad line\n\
                    1\t2010-10-19T23:55:27Z\t95.0\t0\tx\n\
                    \n\
                    2\tyesterday\t1\t1\tx\r\n";
        let load = read_checkins(Path::new("c"), text.as_bytes()).unwrap();
        assert_eq!(load.records.len(), 2);
        assert_eq!(load.records[0].timestamp, 1287532527);
        assert_eq!(load.records[0].timestamp, load.records[1].timestamp);
        assert_eq!(load.records[0].venue, "22847");
        let lines: Vec<u64> = load.malformed.iter().map(|m| m.line).collect();
        assert_eq!(lines, vec![3, 4, 6]);
    }

    #[test]
    fn times() {
        assert_eq!(parse_time("0"), Some(0));
        assert_eq!(parse_time("1970-01-01T00:01:00+00:00"), Some(60));
        assert_eq!(parse_time("1970-01-01T00:00:10"), Some(10));
        assert_eq!(parse_time("noon"), None);
    }
}
