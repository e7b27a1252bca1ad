//! Capacity sweeps over the power budget or one interference cap.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use sharecap_core::{solve_with, ProblemInstance, Solution, SolverError, SolverSettings};

use crate::json::format_f64;

/// Swept parameter. User indices are 1-based on the command line and in
/// CSV headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    TotalPower,
    Cap(usize),
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "pt" {
            return Ok(Param::TotalPower);
        }
        let k = s
            .strip_prefix("pi:")
            .ok_or_else(|| format!("expected `pt` or `pi:k`, got `{s}`"))?;
        match k.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Param::Cap(k - 1)),
            _ => Err(format!("user index in `{s}` must be a positive integer")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("expected start:stop:points, got `{s}`"));
        };
        let start: f64 = a.parse().map_err(|_| format!("bad start `{a}`"))?;
        let stop: f64 = b.parse().map_err(|_| format!("bad stop `{b}`"))?;
        let points: usize = n.parse().map_err(|_| format!("bad point count `{n}`"))?;
        if points == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(format!("invalid grid `{s}`"));
        }
        Ok(Grid { start, stop, points })
    }
}

impl Grid {
    /// Evenly spaced values, or geometrically spaced ones when `log` is set
    /// (both ends must then be positive).
    pub fn values(&self, log: bool) -> Result<Vec<f64>, String> {
        if log && (self.start <= 0.0 || self.stop <= 0.0) {
            return Err("a logarithmic grid needs positive end points".into());
        }
        let n = self.points;
        Ok((0..n)
            .map(|i| {
                if n == 1 {
                    return self.start;
                }
                let t = i as f64 / (n - 1) as f64;
                if i == n - 1 {
                    self.stop
                } else if log {
                    10f64.powf(self.start.log10() + t * (self.stop.log10() - self.start.log10()))
                } else {
                    self.start + t * (self.stop - self.start)
                }
            })
            .collect())
    }
}

pub struct SweepRow {
    pub value: f64,
    pub result: Result<Solution, SolverError>,
}

pub fn instance_at(instance: &ProblemInstance, param: Param, value: f64) -> Result<ProblemInstance, String> {
    match param {
        Param::TotalPower => instance.with_total_power(value),
        Param::Cap(k) => instance.with_cap(k, value),
    }
    .map_err(|e| e.to_string())
}

/// Solves every grid point on a pool of `jobs` threads. Rows come back in
/// grid order.
pub fn run(
    instance: &ProblemInstance,
    param: Param,
    values: &[f64],
    settings: &SolverSettings,
    jobs: usize,
) -> Result<Vec<SweepRow>, String> {
    let instances = values
        .iter()
        .map(|&v| instance_at(instance, param, v))
        .collect::<Result<Vec<_>, _>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| e.to_string())?;
    Ok(pool.install(|| {
        instances
            .par_iter()
            .zip(values.par_iter())
            .map(|(inst, &value)| {
                let result = solve_with(inst, settings);
                if let Err(e) = &result {
                    log::error!("grid point {value}: {e}");
                }
                SweepRow { value, result }
            })
            .collect()
    }))
}

pub fn csv_header(users: usize) -> String {
    let mut h = String::from("param,capacity_nats,trace_R,mu1");
    for k in 1..=users {
        write!(h, ",interference_{k}").unwrap();
    }
    h.push_str(",active_tpc");
    for k in 1..=users {
        write!(h, ",active_ipc_{k}").unwrap();
    }
    h.push_str(",method");
    h
}

/// CSV text for the rows; `nan` fields mark points that failed.
pub fn to_csv(instance: &ProblemInstance, rows: &[SweepRow]) -> String {
    let users = instance.num_users();
    let mut out = csv_header(users);
    out.push('\n');
    for row in rows {
        out.push_str(&format_f64(row.value));
        match &row.result {
            Ok(s) => {
                let numbers = [s.capacity_nats, s.covariance.trace(), s.duals.power];
                for x in numbers {
                    write!(out, ",{}", format_f64(x)).unwrap();
                }
                for k in 0..users {
                    let p = s.covariance.trace_product(&instance.users()[k].gram);
                    write!(out, ",{}", format_f64(p)).unwrap();
                }
                write!(out, ",{}", u8::from(s.active.power)).unwrap();
                for &a in &s.active.interference {
                    write!(out, ",{}", u8::from(a)).unwrap();
                }
                write!(out, ",{}", s.method).unwrap();
            }
            Err(_) => {
                for _ in 0..(4 + 2 * users) {
                    out.push_str(",nan");
                }
                out.push_str(",failed");
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_param() {
        assert_eq!("pt".parse::<Param>(), Ok(Param::TotalPower));
        assert_eq!("pi:2".parse::<Param>(), Ok(Param::Cap(1)));
        assert!("pi:0".parse::<Param>().is_err());
        assert!("mu".parse::<Param>().is_err());
    }

    #[test]
    fn grids() {
        let g: Grid = "1:1e6:7".parse().unwrap();
        let v = g.values(true).unwrap();
        assert_eq!(v.len(), 7);
        assert_eq!(v[6], 1e6);
        assert_eq!(v[3], 1e3);
        let lin: Grid = "0:1:3".parse().unwrap();
        assert_eq!(lin.values(false).unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(lin.values(true).is_err());
        assert!("1:2".parse::<Grid>().is_err());
    }

    #[test]
    fn header() {
        assert_eq!(
            csv_header(2),
            "param,capacity_nats,trace_R,mu1,interference_1,interference_2,active_tpc,active_ipc_1,active_ipc_2,method"
        );
    }
}
