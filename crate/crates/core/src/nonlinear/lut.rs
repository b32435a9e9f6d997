use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp16::{self, f16};

pub const LUT_SEGMENTS: usize = 64;

/// One linear piece `a * x + b`, coefficients stored as binary16.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutSegment {
    pub a: f16,
    pub b: f16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LutMethod {
    /// Chord through `exp` at both segment endpoints.
    Endpoint,
    /// Best uniform (equioscillating) line on each segment.
    Minimax,
}

impl FromStr for LutMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "endpoint" => Ok(LutMethod::Endpoint),
            "minimax" => Ok(LutMethod::Minimax),
            _ => Err(Error::Config(format!("unknown LUT method '{s}'"))),
        }
    }
}

/// 64 uniform piecewise-linear segments approximating `exp` on a
/// non-positive domain. Below the domain the output is 0; above it,
/// `exp(domain_hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LutTable {
    pub segments: Vec<LutSegment>,
    pub domain_lo: f64,
    pub domain_hi: f64,
}

impl Default for LutTable {
    fn default() -> Self {
        build_lut(-8.0, 0.0, LutMethod::Endpoint).expect("default range is valid")
    }
}

pub fn build_lut(domain_lo: f64, domain_hi: f64, method: LutMethod) -> Result<LutTable> {
    if !(domain_lo.is_finite()
        && domain_hi.is_finite()
        && domain_lo < domain_hi
        && domain_hi <= 0.0)
    {
        return Err(Error::InvalidRange {
            lo: domain_lo,
            hi: domain_hi,
        });
    }
    use LutMethod::{Endpoint, Minimax};
    let width = (domain_hi - domain_lo) / LUT_SEGMENTS as f64;
    let segments = (0..LUT_SEGMENTS)
        .map(|i| {
            let x0 = domain_lo + width * i as f64;
            let x1 = x0 + width;
            let (y0, y1) = (x0.exp(), x1.exp());
            let a = (y1 - y0) / width;
            let b = match method {
                Endpoint => y1 - a * x1,
                Minimax => {
                    // exp is convex: the chord overshoots by at most
                    // exp(t) - (a t + b_chord) at t = ln a; split the gap.
                    let chord_b = y1 - a * x1;
                    let t = a.ln();
                    let gap = (a * t + chord_b) - t.exp();
                    chord_b - gap / 2.0
                }
            };
            LutSegment {
                a: fp16::from_f64(a),
                b: fp16::from_f64(b),
            }
        })
        .collect();
    let mut lut = LutTable {
        segments,
        domain_lo,
        domain_hi,
    };
    lut.enforce_monotone();
    Ok(lut)
}

fn next_up(x: f16) -> f16 {
    let bits = x.to_bits();
    if x.to_f32() == 0.0 {
        f16::from_bits(1)
    } else if bits & 0x8000 == 0 {
        f16::from_bits(bits + 1)
    } else {
        f16::from_bits(bits - 1)
    }
}

fn next_down(x: f16) -> f16 {
    let bits = x.to_bits();
    if x.to_f32() == 0.0 {
        f16::from_bits(0x8001)
    } else if bits & 0x8000 == 0 {
        f16::from_bits(bits - 1)
    } else {
        f16::from_bits(bits + 1)
    }
}

fn eval_segment(seg: LutSegment, x: f16) -> f16 {
    fp16::add(fp16::mul(seg.a, x), seg.b)
}

impl LutTable {
    /// Within a segment the rounded `a * x + b` is monotone (a > 0), so only
    /// boundaries can step down after coefficient rounding. Raise each
    /// intercept by single ulps until its first input is not below the last
    /// output of the segment beneath it.
    fn enforce_monotone(&mut self) {
        for i in 1..self.segments.len() {
            let lo = fp16::from_f64(self.segment_bounds(i).0);
            // first binary16 input that lands in segment i
            let first = if self.segment_index(lo.to_f64()) == i {
                lo
            } else {
                next_up(lo)
            };
            let last_prev = next_down(first);
            let floor = eval_segment(self.segments[i - 1], last_prev);
            while eval_segment(self.segments[i], first) < floor {
                self.segments[i].b = next_up(self.segments[i].b);
            }
        }
    }

    pub fn segment_width(&self) -> f64 {
        (self.domain_hi - self.domain_lo) / self.segments.len() as f64
    }

    /// Segment bounds `[lo, hi)` of entry `i`.
    pub fn segment_bounds(&self, i: usize) -> (f64, f64) {
        let w = self.segment_width();
        let lo = self.domain_lo + w * i as f64;
        (lo, lo + w)
    }

    pub fn segment_index(&self, x: f64) -> usize {
        let i = ((x - self.domain_lo) / self.segment_width()).floor() as isize;
        i.clamp(0, self.segments.len() as isize - 1) as usize
    }

    /// Evaluate in the binary16 datapath: one multiply and one add, each rounded.
    pub fn eval(&self, x: f16) -> f16 {
        let xv = x.to_f64();
        if xv.is_nan() {
            return x;
        }
        if xv < self.domain_lo {
            return f16::ZERO;
        }
        if xv > self.domain_hi {
            return fp16::from_f64(self.domain_hi.exp());
        }
        let y = eval_segment(self.segments[self.segment_index(xv)], x);
        if y.to_f32() < 0.0 {
            f16::ZERO
        } else {
            y
        }
    }

    /// Write as CSV: `index,lo,hi,a,b`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "lo", "hi", "a", "b"])?;
        for (i, s) in self.segments.iter().enumerate() {
            let (lo, hi) = self.segment_bounds(i);
            w.write_record([
                i.to_string(),
                lo.to_string(),
                hi.to_string(),
                s.a.to_f32().to_string(),
                s.b.to_f32().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut rows: Vec<(usize, f64, f64, f16, f16)> = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != 5 {
                return Err(Error::Config(format!("LUT row has {} fields", rec.len())));
            }
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("LUT field '{}': {e}", &rec[i])))
            };
            rows.push((
                num(0)? as usize,
                num(1)?,
                num(2)?,
                fp16::from_f64(num(3)?),
                fp16::from_f64(num(4)?),
            ));
        }
        if rows.len() != LUT_SEGMENTS {
            return Err(Error::Config(format!(
                "LUT must have {LUT_SEGMENTS} rows, found {}",
                rows.len()
            )));
        }
        rows.sort_by_key(|r| r.0);
        if rows.iter().enumerate().any(|(i, r)| r.0 != i) {
            return Err(Error::Config("LUT indices must be 0..63".into()));
        }
        let domain_lo = rows[0].1;
        let domain_hi = rows[LUT_SEGMENTS - 1].2;
        if !(domain_lo < domain_hi && domain_hi <= 0.0) {
            return Err(Error::InvalidRange {
                lo: domain_lo,
                hi: domain_hi,
            });
        }
        Ok(LutTable {
            segments: rows.iter().map(|r| LutSegment { a: r.3, b: r.4 }).collect(),
            domain_lo,
            domain_hi,
        })
    }

    /// Max absolute error against `exp` over `points` evenly spaced inputs
    /// (inputs are rounded to binary16 first, as the datapath would).
    pub fn max_abs_error(&self, points: usize) -> f64 {
        let span = self.domain_hi - self.domain_lo;
        (0..points)
            .map(|i| {
                let x = fp16::from_f64(self.domain_lo + span * i as f64 / (points - 1) as f64);
                (self.eval(x).to_f64() - x.to_f64().exp()).abs()
            })
            .fold(0.0, f64::max)
    }
}
