//! Time-domain reflectometry: converts step-response voltage records to
//! instantaneous impedance, synthesizes records from piecewise line models
//! (the forward oracle), and segments extracted impedance back into a model.
//!
//! Everything is expressed against the round-trip time axis; no
//! time-to-distance conversion is applied unless a velocity factor is
//! supplied by the caller.

use serde::{Deserialize, Serialize};
use std::collections::BinaryHeap;
use thiserror::Error;

use crate::io::TdrTrace;
use crate::math;

#[derive(Debug, Error)]
pub enum TdrError {
    #[error("segment {index}: {msg}")]
    BadSegment { index: usize, msg: String },
    #[error("profile has no segments")]
    EmptyProfile,
    #[error("source impedance must be positive, got {0}")]
    BadSource(f64),
    #[error("sample_dt must be positive, got {0}")]
    BadSampleDt(f64),
    #[error("total_time {total} s does not cover the 2x cumulative delay {needed} s")]
    TotalTimeTooShort { total: f64, needed: f64 },
    #[error("characteristic impedance must be positive, got {0}")]
    BadZc(f64),
    #[error("trace too short or degenerate: {0}")]
    DegenerateTrace(String),
}

/// One uniform stretch of line: one-way delay, characteristic impedance,
/// and the total series resistance distributed across it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Segment {
    pub one_way_delay_s: f64,
    pub z_ohm: f64,
    #[serde(default)]
    pub r_series_ohm: f64,
}

/// Piecewise transmission-line model seen from a matched source.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ImpedanceProfile {
    pub segments: Vec<Segment>,
    /// Source / reference impedance, ohms.
    pub z_source_ohm: f64,
}

impl ImpedanceProfile {
    pub fn new(segments: Vec<Segment>, z_source_ohm: f64) -> Result<Self, TdrError> {
        if segments.is_empty() {
            return Err(TdrError::EmptyProfile);
        }
        if !(z_source_ohm > 0.0) {
            return Err(TdrError::BadSource(z_source_ohm));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.one_way_delay_s > 0.0) {
                return Err(TdrError::BadSegment {
                    index: i,
                    msg: format!("delay must be positive, got {}", seg.one_way_delay_s),
                });
            }
            if !(seg.z_ohm > 0.0) {
                return Err(TdrError::BadSegment {
                    index: i,
                    msg: format!("impedance must be positive, got {}", seg.z_ohm),
                });
            }
            if seg.r_series_ohm < 0.0 {
                return Err(TdrError::BadSegment {
                    index: i,
                    msg: format!("series resistance must be >= 0, got {}", seg.r_series_ohm),
                });
            }
        }
        Ok(Self {
            segments,
            z_source_ohm,
        })
    }

    /// Total round-trip time to the far end of the profile.
    pub fn round_trip_s(&self) -> f64 {
        2.0 * self.segments.iter().map(|s| s.one_way_delay_s).sum::<f64>()
    }
}

/// Reflection order used by [`synthesize_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SynthesisOrder {
    /// Each point of the profile maps directly to the reflected voltage of
    /// its local impedance against the source; no re-reflections.
    #[default]
    First,
    /// Full bounce diagram with re-reflections down to 1e-6 of the step.
    Multi,
}

/// Re-reflection amplitudes below this fraction of the incident step are
/// dropped from the bounce diagram.
const BOUNCE_CUTOFF: f64 = 1e-6;

/// Margin used when mapping reflection ratios to open/short markers.
const MARKER_EPS: f64 = 1e-9;

/// Converts a voltage record to first-order instantaneous impedance
/// `Z(t) = Zc (1 + xi)/(1 - xi)`, `xi = (V_meas - V+)/V+`, per sample.
///
/// Ratios at or beyond the open/short limits map to `f64::INFINITY` and
/// `0.0` markers respectively.
pub fn impedance_from_trace(trace: &TdrTrace, z_c: f64) -> Result<Vec<f64>, TdrError> {
    if !(z_c > 0.0) {
        return Err(TdrError::BadZc(z_c));
    }
    let vp = trace.v_plus();
    Ok(trace
        .v_meas()
        .iter()
        .map(|&v| {
            let xi = (v - vp) / vp;
            if xi >= 1.0 - MARKER_EPS {
                f64::INFINITY
            } else if xi <= -1.0 + MARKER_EPS {
                0.0
            } else {
                z_c * (1.0 + xi) / (1.0 - xi)
            }
        })
        .collect())
}

/// The impedance seen at round-trip time `t` in the first-order picture:
/// the local characteristic impedance plus all series resistance
/// accumulated up to that point (ramping linearly within a segment).
/// Samples within `slack` of a boundary belong to the later segment.
fn first_order_impedance_at(profile: &ImpedanceProfile, t: f64, slack: f64) -> f64 {
    let mut t_start = 0.0;
    let mut r_acc = 0.0;
    for seg in &profile.segments {
        let t_end = t_start + 2.0 * seg.one_way_delay_s;
        if t < t_end - slack {
            let frac = ((t - t_start) / (t_end - t_start)).clamp(0.0, 1.0);
            return seg.z_ohm + r_acc + seg.r_series_ohm * frac;
        }
        r_acc += seg.r_series_ohm;
        t_start = t_end;
    }
    let last = profile.segments.last().unwrap();
    last.z_ohm + r_acc
}

#[derive(PartialEq)]
struct Edge {
    time: f64,
    boundary: usize,
    toward_load: bool,
    amplitude: f64,
}

impl Eq for Edge {}

impl Ord for Edge {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap on time
        other.time.total_cmp(&self.time)
    }
}

impl PartialOrd for Edge {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Bounce-diagram port events for the multi-reflection mode. Each segment's
/// series resistance is lumped at its entry boundary.
fn bounce_events(profile: &ImpedanceProfile, v_plus: f64) -> Vec<(f64, f64)> {
    let segs = &profile.segments;
    let n_seg = segs.len();
    // media 0..=n_seg: medium 0 is the zero-length reference at the port
    let z = |medium: usize| -> f64 {
        if medium == 0 {
            profile.z_source_ohm
        } else {
            segs[medium - 1].z_ohm
        }
    };
    let delay = |medium: usize| -> f64 {
        if medium == 0 {
            0.0
        } else {
            segs[medium - 1].one_way_delay_s
        }
    };
    let mut events: Vec<(f64, f64)> = Vec::new();
    let mut heap = BinaryHeap::new();
    heap.push(Edge {
        time: 0.0,
        boundary: 0,
        toward_load: true,
        amplitude: v_plus,
    });
    let cutoff = BOUNCE_CUTOFF * v_plus;
    let mut budget = 2_000_000usize;
    while let Some(e) = heap.pop() {
        if e.amplitude.abs() < cutoff {
            continue;
        }
        budget -= 1;
        if budget == 0 {
            break;
        }
        // boundary j joins medium j (source side) and j+1 (load side), with
        // segment j+1's series resistance lumped there
        let j = e.boundary;
        let (za, zb) = (z(j), z(j + 1));
        let r = segs[j].r_series_ohm;
        if e.toward_load {
            let gamma = (zb + r - za) / (zb + r + za);
            let tau = 2.0 * zb / (zb + r + za);
            // reflection travels back through medium j
            let refl = e.amplitude * gamma;
            if j == 0 {
                events.push((e.time, refl));
            } else if refl.abs() >= cutoff {
                heap.push(Edge {
                    time: e.time + delay(j),
                    boundary: j - 1,
                    toward_load: false,
                    amplitude: refl,
                });
            }
            // transmission continues into medium j+1
            let trans = e.amplitude * tau;
            if j + 1 < n_seg && trans.abs() >= cutoff {
                heap.push(Edge {
                    time: e.time + delay(j + 1),
                    boundary: j + 1,
                    toward_load: true,
                    amplitude: trans,
                });
            }
        } else {
            // wave in medium j+1 arriving at boundary j from the load side
            let gamma = (za + r - zb) / (za + r + zb);
            let tau = 2.0 * za / (za + r + zb);
            let refl = e.amplitude * gamma;
            if j + 1 < n_seg && refl.abs() >= cutoff {
                heap.push(Edge {
                    time: e.time + delay(j + 1),
                    boundary: j + 1,
                    toward_load: true,
                    amplitude: refl,
                });
            }
            let trans = e.amplitude * tau;
            if j == 0 {
                // emerges at the matched port: recorded, never re-reflected
                events.push((e.time, trans));
            } else if trans.abs() >= cutoff {
                heap.push(Edge {
                    time: e.time + delay(j),
                    boundary: j - 1,
                    toward_load: false,
                    amplitude: trans,
                });
            }
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    events
}

/// Synthesizes the voltage record a matched-source step reflectometer would
/// measure for `profile`. Samples run from 0 to `total_time` every
/// `sample_dt`; `total_time` must cover the full round trip.
pub fn synthesize_trace(
    profile: &ImpedanceProfile,
    v_plus: f64,
    sample_dt: f64,
    total_time: f64,
    order: SynthesisOrder,
) -> Result<TdrTrace, TdrError> {
    if !(sample_dt > 0.0) {
        return Err(TdrError::BadSampleDt(sample_dt));
    }
    let needed = profile.round_trip_s();
    // relative slack absorbs 1-ulp differences between summed delays and
    // sampled times so exact-boundary inputs behave consistently
    let slack = 1e-12 * needed.max(total_time);
    if total_time < needed - slack {
        return Err(TdrError::TotalTimeTooShort {
            total: total_time,
            needed,
        });
    }
    let n = (total_time / sample_dt + slack).floor() as usize + 1;
    let times: Vec<f64> = (0..n).map(|i| i as f64 * sample_dt).collect();
    let volts: Vec<f64> = match order {
        SynthesisOrder::First => times
            .iter()
            .map(|&t| {
                let z = first_order_impedance_at(profile, t, slack);
                let xi = (z - profile.z_source_ohm) / (z + profile.z_source_ohm);
                v_plus * (1.0 + xi)
            })
            .collect(),
        SynthesisOrder::Multi => {
            let events = bounce_events(profile, v_plus);
            let mut out = Vec::with_capacity(n);
            let mut acc = 0.0;
            let mut next = 0usize;
            for &t in &times {
                while next < events.len() && events[next].0 <= t + slack {
                    acc += events[next].1;
                    next += 1;
                }
                out.push(v_plus + acc);
            }
            out
        }
    };
    TdrTrace::new(times, volts, v_plus).map_err(|e| TdrError::DegenerateTrace(e.to_string()))
}

/// Segments an extracted impedance record into a piecewise model: step
/// boundaries above `min_step` ohms split the record; each segment reports
/// its mean impedance and its fitted total rise as series resistance.
pub fn profile_from_trace(
    trace: &TdrTrace,
    z_c: f64,
    min_step: f64,
) -> Result<ImpedanceProfile, TdrError> {
    let z = impedance_from_trace(trace, z_c)?;
    if z.len() < 8 {
        return Err(TdrError::DegenerateTrace(format!(
            "need at least 8 samples, got {}",
            z.len()
        )));
    }
    if z.iter().any(|v| !v.is_finite() || *v == 0.0) {
        return Err(TdrError::DegenerateTrace(
            "open or short markers present; profile extraction needs a settled finite response"
                .into(),
        ));
    }
    let zf = math::median_filter(&z, 5);
    let times = trace.times();

    // boundary = first sample index of each new level
    let mut boundaries: Vec<usize> = Vec::new();
    let mut i = 0;
    while i + 1 < zf.len() {
        if (zf[i + 1] - zf[i]).abs() > min_step {
            boundaries.push(i + 1);
            i += 2; // skip past the step
        } else {
            i += 1;
        }
    }

    let mut starts = vec![0usize];
    starts.extend(&boundaries);
    let mut segments = Vec::with_capacity(starts.len());
    let mut prev_rt = times[0];
    for (si, &start) in starts.iter().enumerate() {
        let end = if si + 1 < starts.len() {
            starts[si + 1]
        } else {
            z.len()
        };
        let seg_t = &times[start..end];
        let seg_z = &z[start..end];
        let (mean, rise) = if seg_z.len() >= 2 {
            let (_, slope) = math::linear_fit(seg_t, seg_z);
            let mean = seg_z.iter().sum::<f64>() / seg_z.len() as f64;
            // series resistance is nonnegative; tiny negative slopes are noise
            (mean, (slope * (seg_t[seg_t.len() - 1] - seg_t[0])).max(0.0))
        } else {
            (seg_z[0], 0.0)
        };
        // boundary round-trip time: the new level starts at its first sample
        let rt_end = if si + 1 < starts.len() {
            times[starts[si + 1]]
        } else {
            times[times.len() - 1]
        };
        segments.push(Segment {
            one_way_delay_s: (rt_end - prev_rt) / 2.0,
            z_ohm: mean,
            r_series_ohm: rise,
        });
        prev_rt = rt_end;
    }
    ImpedanceProfile::new(segments, z_c)
}
