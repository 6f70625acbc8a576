//! Frequency-domain network analysis: impedance-matrix conversion, input
//! impedance, VSWR, phase/group delay, band isolation, and classification of
//! transmission dips as resonant or not.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

use crate::io::NetworkData;
use crate::math;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("Z undefined for ideal through: (I - S) singular at {freq_hz} Hz")]
    SingularAtFrequency { freq_hz: f64 },
    #[error("(Z + Zc) singular at point {index}")]
    SingularImpedance { index: usize },
    #[error("input impedance undefined: denominator Z22 {sign} ZL vanishes")]
    VanishingDenominator { sign: char },
    #[error("|S11| = {mag} >= 1: reflection is not passive")]
    NonPassiveReflection { mag: f64 },
    #[error("need a 2x2 impedance matrix, got {rows}x{cols}")]
    NotTwoPort { rows: usize, cols: usize },
    #[error("operation requires a 4-port network, got {ports} ports")]
    NotFourPort { ports: usize },
    #[error("band [{f_lo}, {f_hi}] Hz outside data range [{data_lo}, {data_hi}] Hz")]
    BandOutOfRange {
        f_lo: f64,
        f_hi: f64,
        data_lo: f64,
        data_hi: f64,
    },
    #[error("frequency grid is not uniform (spread {spread:.2e}); resample first, e.g. with resample_uniform")]
    NonUniformGrid { spread: f64 },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("no local |S{m}{n}| minimum inside the window")]
    NoLocalMinimum { m: usize, n: usize },
    #[error("window [{f_lo}, {f_hi}] Hz selects fewer than {needed} points")]
    WindowTooNarrow { f_lo: f64, f_hi: f64, needed: usize },
}

/// Derived per-frequency quantities of a two-port sweep.
#[derive(Debug, Clone, Serialize)]
pub struct MicrowaveParams {
    pub freqs_hz: Vec<f64>,
    pub z_in_re_ohm: Vec<f64>,
    pub z_in_im_ohm: Vec<f64>,
    pub vswr_in: Vec<f64>,
    pub tau_phi_s: Vec<f64>,
    pub tau_g_s: Vec<f64>,
}

/// Sign convention for the terminated-two-port input impedance denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadSign {
    /// Textbook form, denominator `Z22 + ZL`.
    #[default]
    Sum,
    /// Alternate printed form, denominator `Z22 - ZL`; provided for
    /// cross-checking against sources that use it.
    Difference,
}

/// Converts scattering to impedance matrices,
/// `Z = sqrt(Zc) (I + S)(I - S)^-1 sqrt(Zc)`, one matrix per frequency.
pub fn z_from_s(net: &NetworkData) -> Result<Vec<DMatrix<Complex64>>, NetworkError> {
    let p = net.ports();
    let eye = DMatrix::<Complex64>::identity(p, p);
    net.freqs()
        .iter()
        .zip(net.matrices())
        .map(|(&f, s)| {
            let den = (&eye - s)
                .try_inverse()
                .ok_or(NetworkError::SingularAtFrequency { freq_hz: f })?;
            Ok((&eye + s) * den * Complex64::new(net.z_ref(), 0.0))
        })
        .collect()
}

/// Inverse map of [`z_from_s`]: `S = (Z - Zc I)(Z + Zc I)^-1` at scalar
/// reference impedance. Also serves as the independent algebraic check of
/// the forward conversion.
pub fn s_from_z(
    z: &[DMatrix<Complex64>],
    z_ref: f64,
) -> Result<Vec<DMatrix<Complex64>>, NetworkError> {
    z.iter()
        .enumerate()
        .map(|(k, zm)| {
            let p = zm.nrows();
            let zc = DMatrix::<Complex64>::identity(p, p) * Complex64::new(z_ref, 0.0);
            let den = (zm + &zc)
                .try_inverse()
                .ok_or(NetworkError::SingularImpedance { index: k })?;
            Ok((zm - &zc) * den)
        })
        .collect()
}

/// Input impedance of a terminated two-port,
/// `Z_in = Z11 - Z12 Z21 / (Z22 +/- ZL)` per the chosen [`LoadSign`].
pub fn input_impedance(
    z: &DMatrix<Complex64>,
    z_load: Complex64,
    sign: LoadSign,
) -> Result<Complex64, NetworkError> {
    if z.nrows() != 2 || z.ncols() != 2 {
        return Err(NetworkError::NotTwoPort {
            rows: z.nrows(),
            cols: z.ncols(),
        });
    }
    let (den, ch) = match sign {
        LoadSign::Sum => (z[(1, 1)] + z_load, '+'),
        LoadSign::Difference => (z[(1, 1)] - z_load, '-'),
    };
    let scale = z[(1, 1)].norm().max(z_load.norm()).max(1.0);
    if den.norm() < 1e-12 * scale {
        return Err(NetworkError::VanishingDenominator { sign: ch });
    }
    Ok(z[(0, 0)] - z[(0, 1)] * z[(1, 0)] / den)
}

/// Voltage standing wave ratio of a reflection coefficient,
/// `(1 + |s11|)/(1 - |s11|)`. Requires `|s11| < 1`.
pub fn vswr(s11: Complex64) -> Result<f64, NetworkError> {
    let m = s11.norm();
    if m >= 1.0 {
        return Err(NetworkError::NonPassiveReflection { mag: m });
    }
    Ok((1.0 + m) / (1.0 - m))
}

/// Removes 2-pi jumps so consecutive differences land in (-pi, pi].
/// Assumes sampling dense enough that true steps stay below pi.
pub fn unwrap_phase(angles: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(angles.len());
    for (i, &a) in angles.iter().enumerate() {
        if i == 0 {
            out.push(a);
            continue;
        }
        let delta = a - angles[i - 1];
        let wrapped = delta - 2.0 * PI * ((delta - PI) / (2.0 * PI)).ceil();
        out.push(out[i - 1] + wrapped);
    }
    out
}

fn unwrapped_angle(net: &NetworkData, m: usize, n: usize) -> Vec<f64> {
    let angles: Vec<f64> = (0..net.len()).map(|k| net.s_param(k, m, n).arg()).collect();
    unwrap_phase(&angles)
}

/// Phase delay `tau_phi = -(1/2pi) angle(S_mn)/f` per point, with the angle
/// unwrapped over the sweep.
pub fn phase_delay(net: &NetworkData, m: usize, n: usize) -> Vec<f64> {
    let phase = unwrapped_angle(net, m, n);
    net.freqs()
        .iter()
        .zip(&phase)
        .map(|(&f, &ph)| -ph / (2.0 * PI * f))
        .collect()
}

// 6th-order first-derivative weights on 7 points. Interior points use the
// central stencil /60h, the three points at each edge the one-sided
// stencils /420h.
const CENTRAL7: [f64; 7] = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0];
const EDGE7: [[f64; 7]; 3] = [
    [-1029.0, 2520.0, -3150.0, 2800.0, -1575.0, 504.0, -70.0],
    [-70.0, -539.0, 1050.0, -700.0, 350.0, -105.0, 14.0],
    [14.0, -168.0, -245.0, 560.0, -210.0, 56.0, -7.0],
];

fn derivative_order6(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    debug_assert!(n >= 7);
    let mut out = vec![0.0; n];
    for i in 0..n {
        if i >= 3 && i + 3 < n {
            let mut acc = 0.0;
            for (j, c) in CENTRAL7.iter().enumerate() {
                acc += c * y[i - 3 + j];
            }
            out[i] = acc / (60.0 * h);
        } else if i < 3 {
            let mut acc = 0.0;
            for (j, c) in EDGE7[i].iter().enumerate() {
                acc += c * y[j];
            }
            out[i] = acc / (420.0 * h);
        } else {
            // right edge: negated mirror of the left-edge stencils
            let k = n - 1 - i;
            let mut acc = 0.0;
            for (j, c) in EDGE7[k].iter().enumerate() {
                acc -= c * y[n - 1 - j];
            }
            out[i] = acc / (420.0 * h);
        }
    }
    out
}

fn check_uniform(freqs: &[f64]) -> Result<f64, NetworkError> {
    if freqs.len() < 7 {
        return Err(NetworkError::TooFewPoints {
            needed: 7,
            got: freqs.len(),
        });
    }
    let h = (freqs[freqs.len() - 1] - freqs[0]) / (freqs.len() - 1) as f64;
    let spread = freqs
        .windows(2)
        .map(|w| ((w[1] - w[0]) - h).abs())
        .fold(0.0f64, f64::max)
        / h;
    if spread > 1e-6 {
        return Err(NetworkError::NonUniformGrid { spread });
    }
    Ok(h)
}

/// Group delay `tau_g = -(1/2pi) d(angle S_mn)/df` on a uniform grid via the
/// 6th-order stencil, then smoothed with a centered moving average whose
/// window is 1% of the point count (odd-rounded, minimum 1).
pub fn group_delay(net: &NetworkData, m: usize, n: usize) -> Result<Vec<f64>, NetworkError> {
    let raw = group_delay_unsmoothed(net, m, n)?;
    let mut w = (0.01 * net.len() as f64).round() as usize;
    if w % 2 == 0 {
        w += 1;
    }
    Ok(math::moving_average(&raw, w.max(1)))
}

/// [`group_delay`] without the 1% smoothing pass.
pub fn group_delay_unsmoothed(
    net: &NetworkData,
    m: usize,
    n: usize,
) -> Result<Vec<f64>, NetworkError> {
    let h = check_uniform(net.freqs())?;
    let phase = unwrapped_angle(net, m, n);
    Ok(derivative_order6(&phase, h)
        .into_iter()
        .map(|d| -d / (2.0 * PI))
        .collect())
}

/// Resamples a network onto `n_points` uniformly spaced frequencies by
/// linear interpolation of the real and imaginary parts.
pub fn resample_uniform(net: &NetworkData, n_points: usize) -> Result<NetworkData, NetworkError> {
    if n_points < 2 {
        return Err(NetworkError::TooFewPoints {
            needed: 2,
            got: n_points,
        });
    }
    let f0 = net.freqs()[0];
    let f1 = net.freqs()[net.len() - 1];
    let p = net.ports();
    let mut freqs = Vec::with_capacity(n_points);
    let mut mats = Vec::with_capacity(n_points);
    let mut hi = 1usize;
    for i in 0..n_points {
        let f = f0 + (f1 - f0) * i as f64 / (n_points - 1) as f64;
        while hi < net.len() - 1 && net.freqs()[hi] < f {
            hi += 1;
        }
        let lo = hi - 1;
        let t = (f - net.freqs()[lo]) / (net.freqs()[hi] - net.freqs()[lo]);
        let mut mmat = DMatrix::<Complex64>::zeros(p, p);
        for r in 0..p {
            for c in 0..p {
                let a = net.matrix(lo)[(r, c)];
                let b = net.matrix(hi)[(r, c)];
                mmat[(r, c)] = a + (b - a) * Complex64::new(t, 0.0);
            }
        }
        freqs.push(f);
        mats.push(mmat);
    }
    NetworkData::new(p, freqs, mats, net.z_ref())
        .map_err(|_| NetworkError::TooFewPoints { needed: 2, got: 0 })
}

/// Full parameter sweep of a two-port: input impedance (port 1 driven, port
/// 2 terminated in `z_load`), input VSWR, and phase/group delay of S21.
pub fn microwave_params(
    net: &NetworkData,
    z_load: Complex64,
    sign: LoadSign,
) -> Result<MicrowaveParams, NetworkError> {
    let z = z_from_s(net)?;
    let mut z_in_re = Vec::with_capacity(net.len());
    let mut z_in_im = Vec::with_capacity(net.len());
    let mut vs = Vec::with_capacity(net.len());
    for (k, zm) in z.iter().enumerate() {
        let two = if net.ports() == 2 {
            zm.clone()
        } else {
            DMatrix::from_fn(2, 2, |r, c| zm[(r, c)])
        };
        let zin = input_impedance(&two, z_load, sign)?;
        z_in_re.push(zin.re);
        z_in_im.push(zin.im);
        vs.push(vswr(net.s_param(k, 1, 1))?);
    }
    Ok(MicrowaveParams {
        freqs_hz: net.freqs().to_vec(),
        z_in_re_ohm: z_in_re,
        z_in_im_ohm: z_in_im,
        vswr_in: vs,
        tau_phi_s: phase_delay(net, 2, 1),
        tau_g_s: group_delay(net, 2, 1)?,
    })
}

/// Worst-case isolation over a band of a 4-port network.
#[derive(Debug, Clone, Serialize)]
pub struct IsolationReport {
    /// `-max 20 log10 |S|` over the crosstalk entries in band, dB.
    pub isolation_db: f64,
    pub worst_freq_hz: f64,
    /// 1-based (to, from) ports of the worst coupler.
    pub worst_pair: (usize, usize),
}

/// Scans the crosstalk entries S31, S41, S32, S42 over `[f_lo, f_hi]` and
/// reports the worst-case isolation and where it occurs.
pub fn band_isolation(
    net: &NetworkData,
    f_lo: f64,
    f_hi: f64,
) -> Result<IsolationReport, NetworkError> {
    if net.ports() != 4 {
        return Err(NetworkError::NotFourPort { ports: net.ports() });
    }
    let data_lo = net.freqs()[0];
    let data_hi = net.freqs()[net.len() - 1];
    if f_lo < data_lo || f_hi > data_hi || f_lo >= f_hi {
        return Err(NetworkError::BandOutOfRange {
            f_lo,
            f_hi,
            data_lo,
            data_hi,
        });
    }
    const PAIRS: [(usize, usize); 4] = [(3, 1), (4, 1), (3, 2), (4, 2)];
    let mut worst = f64::NEG_INFINITY;
    let mut at = (data_lo, PAIRS[0]);
    for (k, &f) in net.freqs().iter().enumerate() {
        if f < f_lo || f > f_hi {
            continue;
        }
        for &(m, n) in &PAIRS {
            let mag = net.s_param(k, m, n).norm();
            if mag > worst {
                worst = mag;
                at = (f, (m, n));
            }
        }
    }
    Ok(IsolationReport {
        isolation_db: -20.0 * worst.log10(),
        worst_freq_hz: at.0,
        worst_pair: at.1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DipClass {
    Resonance,
    NonResonantAnomaly,
}

/// A transmission dip characterized within a frequency window.
#[derive(Debug, Clone, Serialize)]
pub struct DipReport {
    pub center_freq_hz: f64,
    /// Dip depth below the local baseline, dB (> 0).
    pub depth_db: f64,
    /// Width of the dip 3 dB below baseline (half-depth for shallow dips), Hz.
    pub bandwidth_3db_hz: f64,
    /// Unwrapped phase excursion of the baseline-removed deviation, radians.
    pub phase_excursion_rad: f64,
    pub classification: DipClass,
}

/// Phase excursion above which a dip is called a resonance. A true notch
/// sweeps ~pi around the dip once the linear baseline is removed; a
/// magnitude-only anomaly sweeps ~0.
const RESONANCE_EXCURSION_RAD: f64 = PI / 2.0;

/// Classifies a local `|S_mn|` minimum inside `[f_lo, f_hi]` as a resonance
/// or a non-resonant anomaly.
///
/// A complex baseline (log-magnitude and phase, each linear in f) is fitted
/// on the window wings and divided out. The deviation from unit transmission
/// of a resonant notch sweeps ~pi radians across the dip, while a dip with
/// line-like phase stays flat; the split is at pi/2.
pub fn classify_dip(
    net: &NetworkData,
    m: usize,
    n: usize,
    f_lo: f64,
    f_hi: f64,
) -> Result<DipReport, NetworkError> {
    const MIN_POINTS: usize = 16;
    let idx: Vec<usize> = (0..net.len())
        .filter(|&k| net.freqs()[k] >= f_lo && net.freqs()[k] <= f_hi)
        .collect();
    if idx.len() < MIN_POINTS {
        return Err(NetworkError::WindowTooNarrow {
            f_lo,
            f_hi,
            needed: MIN_POINTS,
        });
    }
    let freqs: Vec<f64> = idx.iter().map(|&k| net.freqs()[k]).collect();
    let s: Vec<Complex64> = idx.iter().map(|&k| net.s_param(k, m, n)).collect();

    // Wing-fitted complex baseline: ln|S| and unwrapped phase, linear in f.
    let wing = (idx.len() / 10).max(3);
    let mags: Vec<f64> = s.iter().map(|c| c.norm().max(1e-300).ln()).collect();
    let phases = unwrap_phase(&s.iter().map(|c| c.arg()).collect::<Vec<_>>());
    let mut wx = Vec::with_capacity(2 * wing);
    let mut wm = Vec::with_capacity(2 * wing);
    let mut wp = Vec::with_capacity(2 * wing);
    for i in (0..wing).chain(idx.len() - wing..idx.len()) {
        wx.push(freqs[i]);
        wm.push(mags[i]);
        wp.push(phases[i]);
    }
    let (a_m, b_m) = math::linear_fit(&wx, &wm);
    let (a_p, b_p) = math::linear_fit(&wx, &wp);
    let norm: Vec<Complex64> = freqs
        .iter()
        .zip(&s)
        .map(|(&f, c)| {
            let base = Complex64::from_polar((a_m + b_m * f).exp(), a_p + b_p * f);
            c / base
        })
        .collect();

    // Local minimum of normalized magnitude, strictly inside the window.
    let nmags: Vec<f64> = norm.iter().map(|c| c.norm()).collect();
    let k_min = nmags
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    if k_min == 0 || k_min == nmags.len() - 1 || nmags[k_min] >= 1.0 {
        return Err(NetworkError::NoLocalMinimum { m, n });
    }
    let depth_db = -20.0 * nmags[k_min].log10();

    // Phase excursion of the deviation from unit transmission, taken over
    // the contiguous run around the dip where the deviation is significant
    // (tiny deviations have numerically meaningless phases).
    let dev: Vec<Complex64> = norm.iter().map(|c| c - Complex64::new(1.0, 0.0)).collect();
    let dev_max = dev.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let thresh = 0.05 * dev_max;
    let mut lo = k_min;
    while lo > 0 && dev[lo - 1].norm() >= thresh {
        lo -= 1;
    }
    let mut hi = k_min;
    while hi + 1 < dev.len() && dev[hi + 1].norm() >= thresh {
        hi += 1;
    }
    let run: Vec<f64> = dev[lo..=hi].iter().map(|c| c.arg()).collect();
    let unwrapped = unwrap_phase(&run);
    let excursion = unwrapped.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - unwrapped.iter().fold(f64::INFINITY, |a, &b| a.min(b));

    // Bandwidth at 3 dB below baseline, or half depth for shallow dips.
    let level_db = -(3.0f64).min(depth_db / 2.0);
    let db: Vec<f64> = nmags.iter().map(|&x| 20.0 * x.log10()).collect();
    let mut f_left = freqs[0];
    for i in (0..k_min).rev() {
        if db[i] > level_db {
            let t = (level_db - db[i]) / (db[i + 1] - db[i]);
            f_left = freqs[i] + t * (freqs[i + 1] - freqs[i]);
            break;
        }
    }
    let mut f_right = freqs[freqs.len() - 1];
    for i in k_min..freqs.len() - 1 {
        if db[i + 1] > level_db {
            let t = (level_db - db[i]) / (db[i + 1] - db[i]);
            f_right = freqs[i] + t * (freqs[i + 1] - freqs[i]);
            break;
        }
    }

    Ok(DipReport {
        center_freq_hz: freqs[k_min],
        depth_db,
        bandwidth_3db_hz: f_right - f_left,
        phase_excursion_rad: excursion,
        classification: if excursion > RESONANCE_EXCURSION_RAD {
            DipClass::Resonance
        } else {
            DipClass::NonResonantAnomaly
        },
    })
}
