use std::io::{self, Write};

use crate::scalar::Real;

/// Column header of the trace CSV. Stable; downstream plotting relies on it.
pub const TRACE_CSV_HEADER: &str = "k,t,r,y,y_noisy,w,x1,x2,x1hat,x2hat,x3hat,v,e_u,u,est_ops";

/// One logged sample.
///
/// `u` is the input held over `[t, t + T)`. During estimator warm-up the
/// estimates, `v` and `e_u` are zero. `x3`, `e_u_true` and `sigma` are kept
/// in memory only (not part of the CSV schema).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T> {
    pub k: u64,
    pub t: T,
    pub r: T,
    pub y: T,
    pub y_noisy: T,
    /// First internal state, zero for plants without internal dynamics.
    pub w: T,
    pub x1: T,
    pub x2: T,
    pub xhat: [T; 3],
    pub v: T,
    pub e_u: T,
    pub u: T,
    pub est_ops: usize,
    /// True extended state `a + b u`.
    pub x3: T,
    /// `v` evaluated on the true state minus the true extended state.
    pub e_u_true: T,
    pub sigma: T,
    pub estimator_ready: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceEvent {
    pub time: f64,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace<T> {
    pub sampling_time: T,
    pub log_stride: usize,
    pub records: Vec<TraceRecord<T>>,
    pub divergence: Option<DivergenceEvent>,
}

impl<T: Real> Trace<T> {
    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord<T>> {
        self.records.last()
    }

    /// Writes the trace as CSV with [`TRACE_CSV_HEADER`]. Numbers use Rust's
    /// shortest round-trip `Display` form; lines end in `\n`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for rec in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                rec.k,
                rec.t,
                rec.r,
                rec.y,
                rec.y_noisy,
                rec.w,
                rec.x1,
                rec.x2,
                rec.xhat[0],
                rec.xhat[1],
                rec.xhat[2],
                rec.v,
                rec.e_u,
                rec.u,
                rec.est_ops
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}
