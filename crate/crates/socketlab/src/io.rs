//! Measured-data ingestion: Touchstone v1 scattering-parameter files
//! (2-port and 4-port), step-response trace CSV, and complex sweep CSV.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Default reference impedance when the option line omits `R`.
pub const DEFAULT_Z_REF: f64 = 50.0;

/// Default incident step amplitude for reflectometry traces, volts.
pub const DEFAULT_V_PLUS: f64 = 0.25;

/// Nominal step-generator rise time carried as trace metadata, seconds.
pub const DEFAULT_RISE_TIME: f64 = 20e-12;

/// Magnitudes below this are written as `DB_FLOOR` dB instead of -inf.
const DB_FLOOR: f64 = -400.0;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: malformed option line: {msg}")]
    OptionLine { line: usize, msg: String },
    #[error("line {line}: Touchstone v2 keyword `{keyword}` not supported (v1 only)")]
    V2Keyword { line: usize, keyword: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse `{token}` as a number")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: frequency {freq} Hz does not increase over previous point")]
    NonMonotonic { line: usize, freq: f64 },
    #[error("line {line}: non-finite value")]
    NonFinite { line: usize },
    #[error("unsupported port count {ports} (only 2 and 4 ports)")]
    UnsupportedPorts { ports: usize },
    #[error("no data rows found")]
    Empty,
    #[error("row {row}: cannot parse `{token}` as a number")]
    BadRow { row: usize, token: String },
    #[error("row {row}: expected 2 columns, found {found}")]
    RowColumns { row: usize, found: usize },
    #[error("row {row}: time {time} s does not increase over previous sample")]
    NonMonotonicTime { row: usize, time: f64 },
    #[error("invalid network data: {0}")]
    InvalidNetwork(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
}

/// A frequency sweep of complex scattering matrices at a common reference
/// impedance.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkData {
    ports: usize,
    freqs: Vec<f64>,
    s: Vec<DMatrix<Complex64>>,
    z_ref: f64,
}

impl NetworkData {
    /// Builds a network, enforcing strictly increasing positive frequencies,
    /// one `ports`x`ports` finite matrix per point, and `z_ref > 0`.
    pub fn new(
        ports: usize,
        freqs: Vec<f64>,
        s: Vec<DMatrix<Complex64>>,
        z_ref: f64,
    ) -> Result<Self, IoError> {
        if ports != 2 && ports != 4 {
            return Err(IoError::UnsupportedPorts { ports });
        }
        if freqs.is_empty() {
            return Err(IoError::Empty);
        }
        if freqs.len() != s.len() {
            return Err(IoError::InvalidNetwork(format!(
                "{} frequencies but {} matrices",
                freqs.len(),
                s.len()
            )));
        }
        if !(z_ref > 0.0) || !z_ref.is_finite() {
            return Err(IoError::InvalidNetwork(format!(
                "reference impedance must be positive, got {z_ref}"
            )));
        }
        let mut prev = 0.0;
        for &f in &freqs {
            if !f.is_finite() || f <= prev {
                return Err(IoError::InvalidNetwork(format!(
                    "frequencies must be strictly increasing and positive, got {f}"
                )));
            }
            prev = f;
        }
        for m in &s {
            if m.nrows() != ports || m.ncols() != ports {
                return Err(IoError::InvalidNetwork(format!(
                    "matrix is {}x{}, expected {ports}x{ports}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(IoError::InvalidNetwork("non-finite entry".into()));
            }
        }
        Ok(Self {
            ports,
            freqs,
            s,
            z_ref,
        })
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn z_ref(&self) -> f64 {
        self.z_ref
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Scattering matrix at frequency index `k`.
    pub fn matrix(&self, k: usize) -> &DMatrix<Complex64> {
        &self.s[k]
    }

    pub fn matrices(&self) -> &[DMatrix<Complex64>] {
        &self.s
    }

    /// `S_mn` at frequency index `k`; ports are 1-based as in S21.
    pub fn s_param(&self, k: usize, m: usize, n: usize) -> Complex64 {
        assert!(
            (1..=self.ports).contains(&m) && (1..=self.ports).contains(&n),
            "port index out of range"
        );
        self.s[k][(m - 1, n - 1)]
    }

    /// The full sweep of one `S_mn` entry.
    pub fn s_sweep(&self, m: usize, n: usize) -> Vec<Complex64> {
        (0..self.len()).map(|k| self.s_param(k, m, n)).collect()
    }
}

/// Time-sampled reflected-voltage record with its incident step amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct TdrTrace {
    times: Vec<f64>,
    v_meas: Vec<f64>,
    v_plus: f64,
    rise_time: f64,
}

impl TdrTrace {
    pub fn new(times: Vec<f64>, v_meas: Vec<f64>, v_plus: f64) -> Result<Self, IoError> {
        Self::with_rise_time(times, v_meas, v_plus, DEFAULT_RISE_TIME)
    }

    pub fn with_rise_time(
        times: Vec<f64>,
        v_meas: Vec<f64>,
        v_plus: f64,
        rise_time: f64,
    ) -> Result<Self, IoError> {
        if times.is_empty() {
            return Err(IoError::Empty);
        }
        if times.len() != v_meas.len() {
            return Err(IoError::InvalidTrace(format!(
                "{} times but {} voltage samples",
                times.len(),
                v_meas.len()
            )));
        }
        if !(v_plus > 0.0) || !v_plus.is_finite() {
            return Err(IoError::InvalidTrace(format!(
                "incident amplitude must be positive, got {v_plus}"
            )));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(IoError::InvalidTrace(format!(
                    "times must be strictly increasing near t = {}",
                    w[0]
                )));
            }
        }
        if times.iter().chain(&v_meas).any(|x| !x.is_finite()) {
            return Err(IoError::InvalidTrace("non-finite sample".into()));
        }
        Ok(Self {
            times,
            v_meas,
            v_plus,
            rise_time,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn v_meas(&self) -> &[f64] {
        &self.v_meas
    }

    pub fn v_plus(&self) -> f64 {
        self.v_plus
    }

    /// Instrument rise time, metadata only; the algebra here treats steps as
    /// instantaneous.
    pub fn rise_time(&self) -> f64 {
        self.rise_time
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SParamFormat {
    Ri,
    Ma,
    Db,
}

impl SParamFormat {
    fn decode(self, a: f64, b: f64) -> Complex64 {
        match self {
            SParamFormat::Ri => Complex64::new(a, b),
            SParamFormat::Ma => Complex64::from_polar(a, b.to_radians()),
            SParamFormat::Db => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
        }
    }

    fn encode(self, c: Complex64) -> (f64, f64) {
        match self {
            SParamFormat::Ri => (c.re, c.im),
            SParamFormat::Ma => (c.norm(), c.arg().to_degrees()),
            SParamFormat::Db => {
                let m = c.norm();
                let db = if m > 0.0 {
                    (20.0 * m.log10()).max(DB_FLOOR)
                } else {
                    DB_FLOOR
                };
                (db, c.arg().to_degrees())
            }
        }
    }

    fn keyword(self) -> &'static str {
        match self {
            SParamFormat::Ri => "RI",
            SParamFormat::Ma => "MA",
            SParamFormat::Db => "DB",
        }
    }
}

struct OptionLine {
    unit_hz: f64,
    format: SParamFormat,
    z_ref: f64,
}

fn parse_option_line(line: &str, lineno: usize) -> Result<OptionLine, IoError> {
    let err = |msg: String| IoError::OptionLine { line: lineno, msg };
    let mut unit_hz = None;
    let mut format = None;
    let mut param = None;
    let mut z_ref = None;
    let mut tokens = line[1..].split_whitespace().peekable();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => unit_hz = Some(1.0),
            "KHZ" => unit_hz = Some(1e3),
            "MHZ" => unit_hz = Some(1e6),
            "GHZ" => unit_hz = Some(1e9),
            "S" => param = Some("S"),
            "Y" | "Z" | "G" | "H" => {
                return Err(err(format!("parameter `{tok}` not supported, S only")))
            }
            "RI" => format = Some(SParamFormat::Ri),
            "MA" => format = Some(SParamFormat::Ma),
            "DB" => format = Some(SParamFormat::Db),
            "R" => {
                let v = tokens
                    .next()
                    .ok_or_else(|| err("`R` without an impedance value".into()))?;
                let z: f64 = v
                    .parse()
                    .map_err(|_| err(format!("bad reference impedance `{v}`")))?;
                if !(z > 0.0) {
                    return Err(err(format!("reference impedance must be positive: {z}")));
                }
                z_ref = Some(z);
            }
            _ => return Err(err(format!("unrecognized token `{tok}`"))),
        }
    }
    let _ = param; // S is the default parameter in v1
    Ok(OptionLine {
        unit_hz: unit_hz.unwrap_or(1e9),
        format: format.unwrap_or(SParamFormat::Ma),
        z_ref: z_ref.unwrap_or(DEFAULT_Z_REF),
    })
}

/// Strips trailing `!` comments; returns None for blank or pure-comment lines.
fn significant(line: &str) -> Option<&str> {
    let body = match line.find('!') {
        Some(i) => &line[..i],
        None => line,
    };
    let body = body.trim();
    if body.is_empty() {
        None
    } else {
        Some(body)
    }
}

fn parse_numbers(body: &str, lineno: usize) -> Result<Vec<f64>, IoError> {
    body.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| IoError::BadNumber {
                line: lineno,
                token: tok.to_string(),
            })
        })
        .collect()
}

/// Parses Touchstone v1 text into a [`NetworkData`].
///
/// The port count is inferred from the row layout: a 2-port point is one
/// 9-column row (freq + 4 complex pairs, S11 S21 S12 S22), a 4-port point is
/// a 9-column row followed by three 8-column continuation rows (row-major
/// matrix, one row per line). Comment (`!`) and blank lines are allowed
/// anywhere; `[...]` v2 keywords are rejected.
pub fn parse_touchstone(text: &str) -> Result<NetworkData, IoError> {
    let mut option: Option<OptionLine> = None;
    // (lineno, numbers) for every data line, in order
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let Some(body) = significant(raw) else {
            continue;
        };
        if let Some(rest) = body.strip_prefix('[') {
            let keyword = rest.split(']').next().unwrap_or(rest).to_string();
            return Err(IoError::V2Keyword {
                line: lineno,
                keyword,
            });
        }
        if let Some(stripped) = body.strip_prefix('#') {
            if option.is_some() {
                return Err(IoError::OptionLine {
                    line: lineno,
                    msg: "duplicate option line".into(),
                });
            }
            option = Some(parse_option_line(&format!("#{stripped}"), lineno)?);
            continue;
        }
        if option.is_none() {
            return Err(IoError::OptionLine {
                line: lineno,
                msg: "data before option line".into(),
            });
        }
        rows.push((lineno, parse_numbers(body, lineno)?));
    }
    let option = option.ok_or(IoError::Empty)?;
    if rows.is_empty() {
        return Err(IoError::Empty);
    }

    // Infer port count from the shape of the first point.
    let first_cols = rows[0].1.len();
    let ports = match first_cols {
        9 => {
            if rows.len() > 1 && rows[1].1.len() == 8 {
                4
            } else {
                2
            }
        }
        3 => return Err(IoError::UnsupportedPorts { ports: 1 }),
        7 => return Err(IoError::UnsupportedPorts { ports: 3 }),
        n => {
            return Err(IoError::ColumnCount {
                line: rows[0].0,
                expected: 9,
                found: n,
            })
        }
    };

    let mut freqs = Vec::new();
    let mut mats = Vec::new();
    let mut it = rows.into_iter();
    while let Some((lineno, vals)) = it.next() {
        if vals.len() != 9 {
            return Err(IoError::ColumnCount {
                line: lineno,
                expected: 9,
                found: vals.len(),
            });
        }
        let f = vals[0] * option.unit_hz;
        if let Some(&prev) = freqs.last() {
            if f <= prev {
                return Err(IoError::NonMonotonic { line: lineno, freq: f });
            }
        }
        if !f.is_finite() || f <= 0.0 {
            return Err(IoError::NonFinite { line: lineno });
        }
        let mut m = DMatrix::<Complex64>::zeros(ports, ports);
        let mut check_line = lineno;
        if ports == 2 {
            // v1 two-port order: S11 S21 S12 S22
            m[(0, 0)] = option.format.decode(vals[1], vals[2]);
            m[(1, 0)] = option.format.decode(vals[3], vals[4]);
            m[(0, 1)] = option.format.decode(vals[5], vals[6]);
            m[(1, 1)] = option.format.decode(vals[7], vals[8]);
        } else {
            for j in 0..4 {
                m[(0, j)] = option.format.decode(vals[1 + 2 * j], vals[2 + 2 * j]);
            }
            for row in 1..4 {
                let (lineno2, cont) = it.next().ok_or(IoError::ColumnCount {
                    line: check_line,
                    expected: 8,
                    found: 0,
                })?;
                check_line = lineno2;
                if cont.len() != 8 {
                    return Err(IoError::ColumnCount {
                        line: lineno2,
                        expected: 8,
                        found: cont.len(),
                    });
                }
                for j in 0..4 {
                    m[(row, j)] = option.format.decode(cont[2 * j], cont[2 * j + 1]);
                }
            }
        }
        if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(IoError::NonFinite { line: check_line });
        }
        freqs.push(f);
        mats.push(m);
    }
    NetworkData::new(ports, freqs, mats, option.z_ref)
}

/// Writes Touchstone v1 text (frequencies in Hz) that reparses to the same
/// network within 1e-9 relative. Numbers use shortest round-trip formatting.
pub fn write_touchstone(net: &NetworkData, format: SParamFormat) -> String {
    let mut out = String::new();
    out.push_str(&format!("# Hz S {} R {}\n", format.keyword(), net.z_ref()));
    for (k, &f) in net.freqs().iter().enumerate() {
        let m = net.matrix(k);
        if net.ports() == 2 {
            let mut line = format!("{f}");
            for &(i, j) in &[(0, 0), (1, 0), (0, 1), (1, 1)] {
                let (a, b) = format.encode(m[(i, j)]);
                line.push_str(&format!(" {a} {b}"));
            }
            out.push_str(&line);
            out.push('\n');
        } else {
            for row in 0..4 {
                let mut line = if row == 0 {
                    format!("{f}")
                } else {
                    String::new()
                };
                for col in 0..4 {
                    let (a, b) = format.encode(m[(row, col)]);
                    if line.is_empty() && col == 0 {
                        line.push_str(&format!("{a} {b}"));
                    } else {
                        line.push_str(&format!(" {a} {b}"));
                    }
                }
                out.push_str(&line);
                out.push('\n');
            }
        }
    }
    out
}

/// Splits a two-or-three-column CSV row; accepts comma or whitespace
/// separation.
fn split_row(body: &str) -> Vec<&str> {
    if body.contains(',') {
        body.split(',').map(str::trim).collect()
    } else {
        body.split_whitespace().collect()
    }
}

/// Parses a `time_s, volts` CSV into a [`TdrTrace`] with the supplied
/// incident amplitude. A single non-numeric header line is skipped.
pub fn parse_tdr_csv(text: &str, v_plus: f64) -> Result<TdrTrace, IoError> {
    let mut times = Vec::new();
    let mut volts = Vec::new();
    let mut saw_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let row = idx + 1;
        let body = raw.trim();
        if body.is_empty() {
            continue;
        }
        let fields = split_row(body);
        if fields.len() != 2 {
            return Err(IoError::RowColumns {
                row,
                found: fields.len(),
            });
        }
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|t| t.parse::<f64>()).collect();
        match parsed {
            Err(_) if !saw_data && times.is_empty() => continue, // header line
            Err(_) => {
                let bad = fields
                    .iter()
                    .find(|t| t.parse::<f64>().is_err())
                    .unwrap_or(&"");
                return Err(IoError::BadRow {
                    row,
                    token: bad.to_string(),
                });
            }
            Ok(v) => {
                if let Some(&prev) = times.last() {
                    if v[0] <= prev {
                        return Err(IoError::NonMonotonicTime { row, time: v[0] });
                    }
                }
                times.push(v[0]);
                volts.push(v[1]);
                saw_data = true;
            }
        }
    }
    TdrTrace::new(times, volts, v_plus)
}

/// Formats a trace as `time_s,volts` CSV with a header line.
pub fn write_tdr_csv(trace: &TdrTrace) -> String {
    let mut out = String::from("time_s,volts\n");
    for (&t, &v) in trace.times().iter().zip(trace.v_meas()) {
        out.push_str(&format!("{t},{v}\n"));
    }
    out
}

/// Parses a `freq_hz, re, im` CSV sweep (optional single header line) into
/// frequencies and complex transmission samples.
pub fn parse_sweep_csv(text: &str) -> Result<(Vec<f64>, Vec<Complex64>), IoError> {
    let mut freqs = Vec::new();
    let mut vals = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let row = idx + 1;
        let body = raw.trim();
        if body.is_empty() {
            continue;
        }
        let fields = split_row(body);
        if fields.len() != 3 {
            return Err(IoError::RowColumns {
                row,
                found: fields.len(),
            });
        }
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|t| t.parse::<f64>()).collect();
        match parsed {
            Err(_) if freqs.is_empty() => continue, // header line
            Err(_) => {
                let bad = fields
                    .iter()
                    .find(|t| t.parse::<f64>().is_err())
                    .unwrap_or(&"");
                return Err(IoError::BadRow {
                    row,
                    token: bad.to_string(),
                });
            }
            Ok(v) => {
                if let Some(&prev) = freqs.last() {
                    if v[0] <= prev {
                        return Err(IoError::NonMonotonicTime { row, time: v[0] });
                    }
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(IoError::NonFinite { line: row });
                }
                freqs.push(v[0]);
                vals.push(Complex64::new(v[1], v[2]));
            }
        }
    }
    if freqs.is_empty() {
        return Err(IoError::Empty);
    }
    Ok((freqs, vals))
}

/// Formats a complex sweep as `freq_hz,re,im` CSV with a header line.
pub fn write_sweep_csv(freqs: &[f64], s21: &[Complex64]) -> String {
    let mut out = String::from("freq_hz,re,im\n");
    for (&f, c) in freqs.iter().zip(s21) {
        out.push_str(&format!("{f},{},{}\n", c.re, c.im));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_ri_two_port_through() {
        let net = parse_touchstone("# GHz S RI R 50\n1.0 0 0 1 0 1 0 0 0\n").unwrap();
        assert_eq!(net.ports(), 2);
        assert_eq!(net.freqs(), &[1e9]);
        assert_eq!(net.s_param(0, 2, 1), Complex64::new(1.0, 0.0));
        assert_eq!(net.s_param(0, 1, 2), Complex64::new(1.0, 0.0));
        assert_eq!(net.s_param(0, 1, 1), Complex64::new(0.0, 0.0));
        assert_eq!(net.z_ref(), 50.0);
    }

    #[test]
    fn db_format_magnitude_is_exact_power_law() {
        let net =
            parse_touchstone("# MHz S DB R 50\n100 -13.8 0 0 0 0 0 0 0\n").unwrap();
        let s11 = net.s_param(0, 1, 1);
        assert_relative_eq!(s11.norm(), 10f64.powf(-13.8 / 20.0), epsilon = 0.0);
        assert_relative_eq!(s11.norm(), 0.2041737944669529, epsilon = 1e-15);
        assert_eq!(net.freqs()[0], 100e6);
    }

    #[test]
    fn ma_format_decodes_polar_degrees() {
        let net = parse_touchstone("# Hz S MA R 50\n10 0.5 90 0 0 0 0 0 0\n").unwrap();
        let s11 = net.s_param(0, 1, 1);
        assert_relative_eq!(s11.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(s11.im, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn two_port_column_order_is_s11_s21_s12_s22() {
        let net = parse_touchstone("# Hz S RI R 50\n5 1 0 2 0 3 0 4 0\n").unwrap();
        assert_eq!(net.s_param(0, 1, 1).re, 1.0);
        assert_eq!(net.s_param(0, 2, 1).re, 2.0);
        assert_eq!(net.s_param(0, 1, 2).re, 3.0);
        assert_eq!(net.s_param(0, 2, 2).re, 4.0);
    }

    #[test]
    fn four_port_wrapped_rows_are_row_major() {
        let mut text = String::from("# Hz S RI R 50\n");
        text.push_str("1 11 0 12 0 13 0 14 0\n");
        text.push_str("21 0 22 0 23 0 24 0\n");
        text.push_str("31 0 32 0 33 0 34 0\n");
        text.push_str("41 0 42 0 43 0 44 0\n");
        let net = parse_touchstone(&text).unwrap();
        assert_eq!(net.ports(), 4);
        assert_eq!(net.s_param(0, 3, 2).re, 32.0);
        assert_eq!(net.s_param(0, 1, 4).re, 14.0);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "! header comment\n\n# GHz S RI R 75 ! trailing\n1 0 0 1 0 1 0 0 0 ! row\n";
        let net = parse_touchstone(text).unwrap();
        assert_eq!(net.z_ref(), 75.0);
    }

    #[test]
    fn option_line_defaults_are_ghz_ma_r50() {
        let net = parse_touchstone("# S\n1 1 0 0 0 0 0 1 0\n").unwrap();
        assert_eq!(net.freqs()[0], 1e9);
        assert_eq!(net.z_ref(), 50.0);
    }

    #[test]
    fn rejects_v2_keyword() {
        let err = parse_touchstone("[Version] 2.0\n# Hz S RI R 50\n").unwrap_err();
        assert!(matches!(err, IoError::V2Keyword { line: 1, .. }));
    }

    #[test]
    fn rejects_malformed_option_line() {
        let err = parse_touchstone("# GHz S XX R 50\n1 0 0 0 0 0 0 0 0\n").unwrap_err();
        assert!(matches!(err, IoError::OptionLine { line: 1, .. }));
    }

    #[test]
    fn rejects_non_monotonic_frequency_with_line_number() {
        let err =
            parse_touchstone("# Hz S RI R 50\n2 0 0 0 0 0 0 0 0\n1 0 0 0 0 0 0 0 0\n")
                .unwrap_err();
        assert!(matches!(err, IoError::NonMonotonic { line: 3, .. }));
    }

    #[test]
    fn rejects_wrong_column_count() {
        let err = parse_touchstone("# Hz S RI R 50\n1 0 0 0\n").unwrap_err();
        assert!(matches!(err, IoError::ColumnCount { line: 2, .. }));
    }

    #[test]
    fn rejects_one_port() {
        let err = parse_touchstone("# Hz S RI R 50\n1 0.5 0\n").unwrap_err();
        assert!(matches!(err, IoError::UnsupportedPorts { ports: 1 }));
    }

    #[test]
    fn roundtrip_identity_two_port() {
        let net = parse_touchstone("# GHz S RI R 50\n1.0 0 0 1 0 1 0 0 0\n").unwrap();
        for fmt in [SParamFormat::Ri, SParamFormat::Ma, SParamFormat::Db] {
            let text = write_touchstone(&net, fmt);
            let back = parse_touchstone(&text).unwrap();
            assert_eq!(back.ports(), 2);
            let d = (back.s_param(0, 2, 1) - net.s_param(0, 2, 1)).norm();
            assert!(d < 1e-9, "format {fmt:?} drifted by {d}");
        }
    }

    #[test]
    fn db_write_of_unit_magnitude_is_zero_db() {
        let net = parse_touchstone("# Hz S RI R 50\n1 0 0 1 0 1 0 0 0\n").unwrap();
        let text = write_touchstone(&net, SParamFormat::Db);
        let data_line = text.lines().nth(1).unwrap();
        let cols: Vec<&str> = data_line.split_whitespace().collect();
        assert_eq!(cols[3], "0"); // S21 magnitude field in dB
    }

    #[test]
    fn tdr_csv_flat_matched_line() {
        let trace = parse_tdr_csv("0,0.25\n1e-12,0.25\n", 0.25).unwrap();
        assert_eq!(trace.len(), 2);
        assert_eq!(trace.v_meas(), &[0.25, 0.25]);
        assert_eq!(trace.v_plus(), 0.25);
    }

    #[test]
    fn tdr_csv_skips_single_header() {
        let trace = parse_tdr_csv("time_s,v\n0,0.1\n1e-12,0.2\n", 0.25).unwrap();
        assert_eq!(trace.len(), 2);
    }

    #[test]
    fn tdr_csv_bad_row_reports_index() {
        let err = parse_tdr_csv("0,0.1\nabc,0.1\n", 0.25).unwrap_err();
        assert!(matches!(err, IoError::BadRow { row: 2, .. }));
    }

    #[test]
    fn tdr_csv_rejects_decreasing_time() {
        let err = parse_tdr_csv("0,0.1\n-1e-12,0.1\n", 0.25).unwrap_err();
        assert!(matches!(err, IoError::NonMonotonicTime { row: 2, .. }));
    }

    #[test]
    fn tdr_csv_rejects_empty() {
        assert!(matches!(parse_tdr_csv("", 0.25), Err(IoError::Empty)));
    }

    #[test]
    fn sweep_csv_roundtrip() {
        let freqs = vec![1e9, 2e9, 3e9];
        let s: Vec<Complex64> = vec![
            Complex64::new(0.1, -0.2),
            Complex64::new(0.3, 0.4),
            Complex64::new(-0.5, 0.0),
        ];
        let (f2, s2) = parse_sweep_csv(&write_sweep_csv(&freqs, &s)).unwrap();
        assert_eq!(freqs, f2);
        assert_eq!(s, s2);
    }
}
