//! Unary spike-burst coding of numerals: a value v is a burst of v spikes
//! spaced by the intra-burst interval, and successive values are separated
//! by a longer silence. Times are fixed-point milliseconds (microsecond
//! resolution) so encode/decode stay exact.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

/// A time in milliseconds with microsecond resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TimeMs {
    micros: u64,
}

impl TimeMs {
    pub fn from_micros(micros: u64) -> TimeMs {
        TimeMs { micros }
    }

    pub fn from_ms(ms: u64) -> TimeMs {
        TimeMs { micros: ms * 1000 }
    }

    pub fn micros(self) -> u64 {
        self.micros
    }

    pub fn zero() -> TimeMs {
        TimeMs { micros: 0 }
    }

    fn checked_add(self, other: TimeMs) -> Option<TimeMs> {
        self.micros
            .checked_add(other.micros)
            .map(|micros| TimeMs { micros })
    }
}

impl fmt::Display for TimeMs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.micros / 1000;
        let frac = self.micros % 1000;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let s = format!("{frac:03}");
            write!(f, "{whole}.{}", s.trim_end_matches('0'))
        }
    }
}

impl FromStr for TimeMs {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CodecError::BadTime(s.to_string());
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() || frac.len() > 3 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let whole: u64 = whole.parse().map_err(|_| bad())?;
        let mut frac_micros = 0u64;
        if !frac.is_empty() {
            let padded = format!("{frac:0<3}");
            frac_micros = padded.parse().map_err(|_| bad())?;
        }
        whole
            .checked_mul(1000)
            .and_then(|w| w.checked_add(frac_micros))
            .map(TimeMs::from_micros)
            .ok_or_else(bad)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("invalid burst config: {0}")]
    InvalidConfig(String),
    #[error("numerals start at 1; 0 cannot be burst-coded")]
    ZeroValue,
    #[error("value {0} too large to render as a burst")]
    ValueTooLarge(BigUint),
    #[error("empty spike train")]
    EmptyTrain,
    #[error("ambiguous spacing at spike {position}: interval {interval} lies between isi and gap")]
    AmbiguousSpacing { position: usize, interval: TimeMs },
    #[error("timestamps not strictly increasing at spike {position}")]
    NonMonotonic { position: usize },
    #[error("malformed time {0:?}")]
    BadTime(String),
    #[error("train text line {line}: {message}")]
    Text { line: usize, message: String },
}

/// Timing parameters: `gap` must exceed `isi` or bursts are not decodable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BurstConfig {
    pub isi: TimeMs,
    pub gap: TimeMs,
}

impl BurstConfig {
    pub fn new(isi: TimeMs, gap: TimeMs) -> Result<BurstConfig, CodecError> {
        if isi.micros() == 0 || gap.micros() == 0 {
            return Err(CodecError::InvalidConfig(
                "intervals must be positive".to_string(),
            ));
        }
        if gap <= isi {
            return Err(CodecError::InvalidConfig(format!(
                "gap {gap} must exceed isi {isi}"
            )));
        }
        Ok(BurstConfig { isi, gap })
    }
}

impl Default for BurstConfig {
    fn default() -> BurstConfig {
        BurstConfig {
            isi: TimeMs::from_ms(2),
            gap: TimeMs::from_ms(20),
        }
    }
}

/// A strictly increasing sequence of spike times.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpikeTrain {
    timestamps: Vec<TimeMs>,
}

impl SpikeTrain {
    pub fn from_timestamps(timestamps: Vec<TimeMs>) -> Result<SpikeTrain, CodecError> {
        for (i, w) in timestamps.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(CodecError::NonMonotonic { position: i + 1 });
            }
        }
        Ok(SpikeTrain { timestamps })
    }

    pub fn timestamps(&self) -> &[TimeMs] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// One timestamp per line, decimal milliseconds.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.timestamps {
            out.push_str(&t.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<SpikeTrain, CodecError> {
        let mut timestamps = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let t: TimeMs = line.parse().map_err(|e: CodecError| CodecError::Text {
                line: i + 1,
                message: e.to_string(),
            })?;
            timestamps.push(t);
        }
        SpikeTrain::from_timestamps(timestamps)
    }
}

/// Renders the values as bursts: the k-th value becomes a burst of exactly
/// v_k spikes spaced `isi`, bursts separated by `gap`.
pub fn encode(values: &[BigUint], cfg: &BurstConfig, t0: TimeMs) -> Result<SpikeTrain, CodecError> {
    let mut timestamps = Vec::new();
    let mut t = t0;
    for (i, v) in values.iter().enumerate() {
        if v.is_zero() {
            return Err(CodecError::ZeroValue);
        }
        let v = v
            .to_u64()
            .ok_or_else(|| CodecError::ValueTooLarge(v.clone()))?;
        if i > 0 {
            t = t
                .checked_add(cfg.gap)
                .ok_or_else(|| CodecError::ValueTooLarge(v.into()))?;
        }
        for k in 0..v {
            if k > 0 {
                t = t
                    .checked_add(cfg.isi)
                    .ok_or_else(|| CodecError::ValueTooLarge(v.into()))?;
            }
            timestamps.push(t);
        }
    }
    Ok(SpikeTrain { timestamps })
}

/// Splits the train at silences of at least `gap` and reads each burst's
/// spike count as a numeral. Any interval other than exactly `isi` or a
/// silence of at least `gap` is ambiguous.
pub fn decode(train: &SpikeTrain, cfg: &BurstConfig) -> Result<Vec<BigUint>, CodecError> {
    if train.is_empty() {
        return Err(CodecError::EmptyTrain);
    }
    let mut values = Vec::new();
    let mut burst: u64 = 1;
    for (i, w) in train.timestamps.windows(2).enumerate() {
        let interval = TimeMs::from_micros(w[1].micros() - w[0].micros());
        if interval == cfg.isi {
            burst += 1;
        } else if interval >= cfg.gap {
            values.push(BigUint::from(burst));
            burst = 1;
        } else {
            return Err(CodecError::AmbiguousSpacing {
                position: i + 1,
                interval,
            });
        }
    }
    values.push(BigUint::from(burst));
    Ok(values)
}
