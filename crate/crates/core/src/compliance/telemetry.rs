use std::io::Write;

use crate::error::Result;
use crate::geometry::Vec3;

pub const TELEMETRY_HEADER: [&str; 16] = [
    "t", "q1", "q2", "q3", "T1", "T2", "T3", "Fint1", "Fint2", "Fint3", "Fext1", "Fext2", "Fext3", "v1", "v2", "v3",
];

/// One control tick: time (s), command (mm), measured, predicted internal
/// and estimated external tension (N), commanded velocity (mm/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRecord {
    pub t: f64,
    pub q: Vec3,
    pub tension: Vec3,
    pub f_int: Vec3,
    pub f_ext: Vec3,
    pub velocity: Vec3,
}

impl TelemetryRecord {
    fn fields(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        out[0] = self.t;
        for (k, v) in [self.q, self.tension, self.f_int, self.f_ext, self.velocity].iter().enumerate() {
            out[1 + 3 * k..4 + 3 * k].copy_from_slice(v);
        }
        out
    }
}

pub fn write_telemetry_csv<W: Write>(w: W, records: &[TelemetryRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(TELEMETRY_HEADER)?;
    for r in records {
        wr.write_record(r.fields().iter().map(|v| v.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}
