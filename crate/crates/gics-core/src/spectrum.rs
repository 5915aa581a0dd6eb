use serde::{Deserialize, Serialize};

/// Where a spectrum estimate came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Direct transform of the known transmission function.
    Oracle,
    /// Compressive reconstruction; the label records the sensing mode.
    Gics { mode: String },
    /// Intensity-fluctuation correlation baseline.
    Cgi,
}

/// Magnitude spectrum samples `|T(f)|` on a physical frequency axis
/// (cycles per meter), normalized to unit peak.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    pub freqs: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub provenance: Provenance,
}

impl SpectrumEstimate {
    /// Builds an estimate, rescaling the magnitudes to unit peak.
    /// An all-zero (or non-positive) input stays all-zero.
    pub fn unit_peak(freqs: Vec<f64>, magnitude: Vec<f64>, provenance: Provenance) -> Self {
        assert_eq!(freqs.len(), magnitude.len(), "axis/magnitude length mismatch");
        let peak = magnitude.iter().cloned().fold(0.0_f64, f64::max);
        let magnitude = if peak > 0.0 {
            magnitude.iter().map(|m| m / peak).collect()
        } else {
            vec![0.0; magnitude.len()]
        };
        Self { freqs, magnitude, provenance }
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Index of the largest magnitude (first one on ties).
    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, &v) in self.magnitude.iter().enumerate() {
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_peak_normalizes() {
        let e = SpectrumEstimate::unit_peak(vec![0.0, 1.0], vec![2.0, 4.0], Provenance::Cgi);
        assert_eq!(e.magnitude, vec![0.5, 1.0]);
        assert_eq!(e.peak_index(), 1);
    }

    #[test]
    fn zero_spectrum_stays_zero() {
        let e = SpectrumEstimate::unit_peak(vec![0.0, 1.0], vec![0.0, 0.0], Provenance::Cgi);
        assert_eq!(e.magnitude, vec![0.0, 0.0]);
    }
}
