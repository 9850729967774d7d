//! Time-ordered command/tension recordings and their CSV form.
//!
//! Each record pairs the command `q` issued at time `t` with the filtered
//! tension frame the plant returned for that tick (measured at `t + 1/rate`).

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{is_finite3, Vec3};
use crate::seqmodels::SequenceWindow;

pub const CSV_HEADER: [&str; 8] = ["t", "q1", "q2", "q3", "T1", "T2", "T3", "session"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    /// s
    pub t: f64,
    /// mm
    pub q: Vec3,
    /// N
    pub tension: Vec3,
    pub session: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    t: f64,
    q1: f64,
    q2: f64,
    q3: f64,
    #[serde(rename = "T1")]
    t1: f64,
    #[serde(rename = "T2")]
    t2: f64,
    #[serde(rename = "T3")]
    t3: f64,
    session: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Hz
    pub rate: f64,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(rate: f64) -> Self {
        Self { rate, records: Vec::new() }
    }

    pub fn from_records(rate: f64, records: Vec<Record>) -> Result<Self> {
        let mut d = Self::new(rate);
        for r in records {
            d.push(r)?;
        }
        Ok(d)
    }

    /// Appends a record, enforcing a fixed rate within a session and
    /// non-decreasing session ids.
    pub fn push(&mut self, r: Record) -> Result<()> {
        if !(r.t.is_finite() && is_finite3(&r.q) && is_finite3(&r.tension)) {
            return Err(Error::Dataset(format!("non-finite record at t = {}", r.t)));
        }
        if let Some(last) = self.records.last() {
            if r.session < last.session {
                return Err(Error::Dataset("session ids must not decrease".into()));
            }
            if r.t <= last.t {
                return Err(Error::Dataset(format!("time not increasing at t = {}", r.t)));
            }
            if r.session == last.session {
                let gap = (r.t - last.t) * self.rate;
                if (gap - 1.0).abs() > 1e-6 {
                    return Err(Error::Dataset(format!("rate gap within session at t = {}", r.t)));
                }
            }
        }
        self.records.push(r);
        Ok(())
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Whether a window of `n` commands ending at record `i` stays inside one session.
    pub fn window_fits(&self, i: usize, n: usize) -> bool {
        n > 0 && i < self.records.len() && i + 1 >= n && self.records[i + 1 - n].session == self.records[i].session
    }

    /// Records that can serve as a prediction target for windows of `n` commands.
    pub fn window_targets(&self, n: usize) -> Vec<usize> {
        (0..self.records.len()).filter(|&i| self.window_fits(i, n)).collect()
    }

    /// Commands `i+1-n ..= i`, oldest first.
    pub fn history(&self, i: usize, n: usize) -> Result<Vec<Vec3>> {
        if !self.window_fits(i, n) {
            return Err(Error::Dataset(format!("window of {n} ending at {i} crosses a boundary")));
        }
        Ok(self.records[i + 1 - n..=i].iter().map(|r| r.q).collect())
    }

    pub fn window(&self, i: usize, n: usize) -> Result<SequenceWindow> {
        SequenceWindow::from_history(&self.history(i, n)?, 1.0 / self.rate)
    }

    /// Contiguous temporal split: the first `frac` of records train, the rest validate.
    pub fn split(&self, frac: f64) -> Result<(Dataset, Dataset)> {
        if self.records.is_empty() {
            return Err(Error::Dataset("cannot split an empty dataset".into()));
        }
        if !(0.0..=1.0).contains(&frac) {
            return Err(Error::Dataset(format!("split fraction {frac} outside [0, 1]")));
        }
        let cut = (self.records.len() as f64 * frac).round() as usize;
        Ok((
            Dataset { rate: self.rate, records: self.records[..cut].to_vec() },
            Dataset { rate: self.rate, records: self.records[cut..].to_vec() },
        ))
    }

    /// Population standard deviation of each cable's tension.
    pub fn tension_std(&self) -> Vec3 {
        let n = self.records.len().max(1) as f64;
        let mut mean = [0.0; 3];
        for r in &self.records {
            for i in 0..3 {
                mean[i] += r.tension[i] / n;
            }
        }
        let mut var = [0.0; 3];
        for r in &self.records {
            for i in 0..3 {
                var[i] += (r.tension[i] - mean[i]).powi(2) / n;
            }
        }
        var.map(f64::sqrt)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.records {
            wr.serialize(CsvRow {
                t: r.t,
                q1: r.q[0],
                q2: r.q[1],
                q3: r.q[2],
                t1: r.tension[0],
                t2: r.tension[1],
                t3: r.tension[2],
                session: r.session,
            })?;
        }
        if self.records.is_empty() {
            wr.write_record(CSV_HEADER)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(rate: f64, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        if header != CSV_HEADER {
            return Err(Error::Dataset(format!("unexpected CSV header {header:?}")));
        }
        let mut d = Dataset::new(rate);
        for row in rd.deserialize() {
            let row: CsvRow = row?;
            d.push(Record {
                t: row.t,
                q: [row.q1, row.q2, row.q3],
                tension: [row.t1, row.t2, row.t3],
                session: row.session,
            })?;
        }
        Ok(d)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path, rate: f64) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(rate, std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(n: usize, sessions: &[usize]) -> Dataset {
        let mut d = Dataset::new(100.0);
        let mut tick = 0usize;
        for i in 0..n {
            let session = sessions.iter().filter(|&&s| s <= i).count() as u32;
            if sessions.contains(&i) {
                tick += 7;
            }
            d.push(Record {
                t: tick as f64 / 100.0,
                q: [i as f64 * 0.01, 1.0, 2.0],
                tension: [3.0, (i as f64).sin(), 0.5],
                session,
            })
            .unwrap();
            tick += 1;
        }
        d
    }

    #[test]
    fn split_sizes() {
        let d = synthetic(1000, &[]);
        let (a, b) = d.split(0.8).unwrap();
        assert_eq!((a.len(), b.len()), (800, 200));
        assert_eq!(a.records().last().unwrap().t, 7.99);
        assert_eq!(b.records()[0].t, 8.0);
        assert!(Dataset::new(100.0).split(0.8).is_err());
    }

    #[test]
    fn windows_near_split_boundary_rejected() {
        let d = synthetic(1000, &[]);
        let (a, b) = d.split(0.8).unwrap();
        let n = 50;
        // Windows that would need both sides of the cut exist in neither split.
        assert!(!b.window_fits(10, n));
        assert_eq!(b.window_targets(n)[0], n - 1);
        assert_eq!(*a.window_targets(n).last().unwrap(), 799);
        assert!(a.window_targets(n).len() + b.window_targets(n).len() < d.window_targets(n).len());
    }

    #[test]
    fn windows_do_not_straddle_sessions() {
        let d = synthetic(300, &[120]);
        let targets = d.window_targets(30);
        assert!(!targets.contains(&130));
        assert!(targets.contains(&149));
        assert!(targets.contains(&119));
        assert!(d.history(130, 30).is_err());
        let w = d.window(149, 30).unwrap();
        assert_eq!(w.newest()[0], 149.0 * 0.01);
    }

    #[test]
    fn rejects_rate_gaps_and_nan() {
        let mut d = synthetic(3, &[]);
        let bad = Record { t: 0.05, q: [0.0; 3], tension: [0.0; 3], session: 0 };
        assert!(d.push(bad).is_err());
        let nan = Record { t: 0.03, q: [f64::NAN, 0.0, 0.0], tension: [0.0; 3], session: 0 };
        assert!(d.push(nan).is_err());
    }

    #[test]
    fn header_is_fixed() {
        let mut buf = Vec::new();
        synthetic(2, &[]).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,q1,q2,q3,T1,T2,T3,session\n"));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(vals in prop::collection::vec(prop::array::uniform6(-100.0f64..100.0), 1..40)) {
            let mut d = Dataset::new(100.0);
            for (i, v) in vals.iter().enumerate() {
                d.push(Record { t: i as f64 / 100.0, q: [v[0], v[1], v[2]], tension: [v[3], v[4], v[5]], session: 0 }).unwrap();
            }
            let mut buf = Vec::new();
            d.write_csv(&mut buf).unwrap();
            let back = Dataset::read_csv(100.0, buf.as_slice()).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
