//! Orthonormal discrete wavelet transform.
//!
//! Filters are stored in synthesis orientation: `lowpass` is the scaling
//! filter `h` with `sum(h) = sqrt(2)` and `highpass[k] = (-1)^k h[L-1-k]`.
//! One analysis step computes
//!
//! ```text
//! approx[n] = sum_k h[k] * ext[2n + k]
//! detail[n] = sum_k g[k] * ext[2n + k]
//! ```
//!
//! where `ext` is the boundary-extended input. Two boundary rules exist:
//!
//! * [`Boundary::Symmetric`] (default): half-sample mirror extension with
//!   `L - 2` samples prepended. Each band has `floor((N + L - 1) / 2)`
//!   coefficients, which is what makes reconstruction exact for
//!   non-symmetric filters. Values agree with PyWavelets' `symmetric` mode.
//! * [`Boundary::Periodization`]: circular extension, `ceil(N / 2)`
//!   coefficients per band. The transform is orthogonal on the (evenly
//!   extended) signal, so energy is preserved per level.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result, WdanError};

const HAAR: [f64; 2] = [0.7071067811865476, 0.7071067811865476];

const DB4: [f64; 8] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];

const COIF1: [f64; 6] = [
    -0.07273261951252645,
    0.3378976624574818,
    0.8525720202116004,
    0.3848648468648578,
    -0.07273261951252645,
    -0.015655728135791993,
];

const COIF2: [f64; 12] = [
    0.01638733646320364,
    -0.04146493678687178,
    -0.0673725547237256,
    0.3861100668227629,
    0.8127236354494135,
    0.4170051844232391,
    -0.07648859907828076,
    -0.05943441864643109,
    0.02368017194684777,
    0.005611434819368834,
    -0.0018232088709110323,
    -0.000720549445520347,
];

const COIF3: [f64; 18] = [
    -0.003793512864380802,
    0.007782596425672746,
    0.023452696142077168,
    -0.06577191128146936,
    -0.06112339000297255,
    0.40517690240911824,
    0.7937772226260872,
    0.42848347637737,
    -0.07179982161915484,
    -0.08230192710629983,
    0.03455502757329774,
    0.015880544863669452,
    -0.009007976136730624,
    -0.0025745176881367972,
    0.0011175187708306303,
    0.0004662169598204029,
    -7.0983302506379e-05,
    -3.459977319727278e-05,
];

/// Identifiers accepted by [`make_basis`].
pub const SUPPORTED_WAVELETS: &[&str] = &["haar", "db1", "db4", "coif1", "coif2", "coif3"];

/// Boundary extension rule used by the analysis step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Symmetric,
    Periodization,
}

/// An orthonormal two-channel filter pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    name: String,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletBasis {
    /// Builds a basis from a scaling filter, deriving the quadrature-mirror
    /// high-pass and checking orthonormality.
    pub fn from_lowpass(name: impl Into<String>, lowpass: Vec<f64>) -> Result<Self> {
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|k| {
                let v = lowpass[len - 1 - k];
                if k % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect();
        let basis = WaveletBasis {
            name: name.into(),
            lowpass,
            highpass,
        };
        basis.validate()?;
        Ok(basis)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    /// Filter length.
    pub fn support(&self) -> usize {
        self.lowpass.len()
    }

    /// Checks every invariant of an orthonormal scaling/wavelet filter pair.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(WdanError::InvalidBasis {
                name: self.name.clone(),
                reason,
            })
        };
        let h = &self.lowpass;
        let g = &self.highpass;
        let len = h.len();
        if len == 0 || len % 2 != 0 {
            return fail(format!("filter length {len} must be even and positive"));
        }
        if g.len() != len {
            return fail("low-pass and high-pass lengths differ".into());
        }
        let sum: f64 = h.iter().sum();
        if (sum - std::f64::consts::SQRT_2).abs() > 1e-10 {
            return fail(format!("low-pass sum {sum} is not sqrt(2)"));
        }
        for shift in 0..len / 2 {
            let dot: f64 = (0..len - 2 * shift).map(|k| h[k] * h[k + 2 * shift]).sum();
            let want = if shift == 0 { 1.0 } else { 0.0 };
            if (dot - want).abs() > 1e-10 {
                return fail(format!("even-shift autocorrelation at shift {shift} is {dot}"));
            }
        }
        for k in 0..len {
            let mirror = if k % 2 == 0 { h[len - 1 - k] } else { -h[len - 1 - k] };
            if (g[k] - mirror).abs() > 1e-12 {
                return fail(format!("high-pass tap {k} is not the quadrature mirror"));
            }
        }
        Ok(())
    }
}

/// Looks up a basis by name from the embedded coefficient tables.
pub fn make_basis(name: &str) -> Result<WaveletBasis> {
    let taps: &[f64] = match name.to_ascii_lowercase().as_str() {
        "haar" | "db1" => &HAAR,
        "db4" => &DB4,
        "coif1" => &COIF1,
        "coif2" => &COIF2,
        "coif3" => &COIF3,
        _ => return Err(WdanError::UnsupportedWavelet(name.to_string())),
    };
    WaveletBasis::from_lowpass(name.to_ascii_lowercase(), taps.to_vec())
}

/// Number of coefficients per band produced by one analysis step.
pub fn coeff_len(signal_len: usize, filter_len: usize, boundary: Boundary) -> usize {
    match boundary {
        Boundary::Symmetric => (signal_len + filter_len - 1) / 2,
        Boundary::Periodization => signal_len.div_ceil(2),
    }
}

/// Half-sample symmetric index into a signal of length `len`.
fn mirror_index(i: isize, len: usize) -> usize {
    let period = 2 * len as isize;
    let r = i.rem_euclid(period) as usize;
    if r < len {
        r
    } else {
        2 * len - 1 - r
    }
}

fn extend(signal: &[f64], filter_len: usize, out_len: usize, boundary: Boundary) -> Vec<f64> {
    let ext_len = 2 * (out_len - 1) + filter_len;
    match boundary {
        Boundary::Symmetric => {
            let offset = filter_len as isize - 2;
            (0..ext_len)
                .map(|i| signal[mirror_index(i as isize - offset, signal.len())])
                .collect()
        }
        Boundary::Periodization => {
            let n = signal.len();
            let even = n + n % 2;
            (0..ext_len)
                .map(|i| {
                    let j = i % even;
                    // odd lengths repeat the last sample once
                    signal[j.min(n - 1)]
                })
                .collect()
        }
    }
}

/// One analysis step with symmetric extension.
pub fn dwt_level(signal: &[f64], basis: &WaveletBasis) -> Result<(Vec<f64>, Vec<f64>)> {
    dwt_level_with(signal, basis, Boundary::Symmetric)
}

pub fn dwt_level_with(
    signal: &[f64],
    basis: &WaveletBasis,
    boundary: Boundary,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if signal.len() < 2 {
        return Err(WdanError::SignalTooShort { len: signal.len() });
    }
    let h = basis.lowpass();
    let g = basis.highpass();
    let out_len = coeff_len(signal.len(), h.len(), boundary);
    let ext = extend(signal, h.len(), out_len, boundary);
    let mut approx = Vec::with_capacity(out_len);
    let mut detail = Vec::with_capacity(out_len);
    for n in 0..out_len {
        let seg = &ext[2 * n..2 * n + h.len()];
        let (mut a, mut d) = (0.0, 0.0);
        for ((&x, &hk), &gk) in seg.iter().zip(h).zip(g) {
            a += hk * x;
            d += gk * x;
        }
        approx.push(a);
        detail.push(d);
    }
    Ok((approx, detail))
}

/// One synthesis step with symmetric-extension bookkeeping.
pub fn idwt_level(
    approx: &[f64],
    detail: &[f64],
    basis: &WaveletBasis,
    target_len: usize,
) -> Result<Vec<f64>> {
    idwt_level_with(approx, detail, basis, target_len, Boundary::Symmetric)
}

pub fn idwt_level_with(
    approx: &[f64],
    detail: &[f64],
    basis: &WaveletBasis,
    target_len: usize,
    boundary: Boundary,
) -> Result<Vec<f64>> {
    check_len("idwt detail length", approx.len(), detail.len())?;
    synthesize(Some(approx), Some(detail), approx.len(), basis, target_len, boundary)
}

/// Synthesis with either band optionally treated as all zeros.
fn synthesize(
    approx: Option<&[f64]>,
    detail: Option<&[f64]>,
    n_coeffs: usize,
    basis: &WaveletBasis,
    target_len: usize,
    boundary: Boundary,
) -> Result<Vec<f64>> {
    if target_len < 2 {
        return Err(WdanError::SignalTooShort { len: target_len });
    }
    let expected = coeff_len(target_len, basis.support(), boundary);
    check_len("idwt coefficient length", expected, n_coeffs)?;
    let h = basis.lowpass();
    let g = basis.highpass();
    let len = h.len();
    match boundary {
        Boundary::Symmetric => {
            let shift = len - 2;
            let mut out = vec![0.0; target_len];
            for (p, slot) in out.iter_mut().enumerate() {
                let q = p + shift;
                let mut acc = 0.0;
                // taps with k = q - 2n, 0 <= n < n_coeffs
                let mut k = q % 2;
                while k < len && k <= q {
                    let n = (q - k) / 2;
                    if n < n_coeffs {
                        if let Some(a) = approx {
                            acc += h[k] * a[n];
                        }
                        if let Some(d) = detail {
                            acc += g[k] * d[n];
                        }
                    }
                    k += 2;
                }
                *slot = acc;
            }
            Ok(out)
        }
        Boundary::Periodization => {
            let even = 2 * n_coeffs;
            let mut out = vec![0.0; even];
            for n in 0..n_coeffs {
                let a = approx.map_or(0.0, |a| a[n]);
                let d = detail.map_or(0.0, |d| d[n]);
                for k in 0..len {
                    out[(2 * n + k) % even] += h[k] * a + g[k] * d;
                }
            }
            out.truncate(target_len);
            Ok(out)
        }
    }
}

/// Multi-level analysis of one signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Final-level approximation coefficients.
    pub approx: Vec<f64>,
    /// Detail coefficients, finest level first.
    pub details: Vec<Vec<f64>>,
    pub levels: usize,
    pub original_length: usize,
    /// Input length seen by each level (`level_lengths[0] == original_length`).
    pub level_lengths: Vec<usize>,
    pub boundary: Boundary,
}

/// Low-frequency trend and aggregated high-frequency residual of a window.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSplit {
    pub trend: Vec<f64>,
    pub residual: Vec<f64>,
}

pub fn decompose(signal: &[f64], basis: &WaveletBasis, levels: usize) -> Result<Decomposition> {
    decompose_with(signal, basis, levels, Boundary::Symmetric)
}

pub fn decompose_with(
    signal: &[f64],
    basis: &WaveletBasis,
    levels: usize,
    boundary: Boundary,
) -> Result<Decomposition> {
    if levels == 0 {
        return Err(WdanError::InvalidLevels);
    }
    if levels >= usize::BITS as usize || signal.len() < (1usize << levels) {
        return Err(WdanError::TooManyLevels {
            levels,
            len: signal.len(),
        });
    }
    let mut current = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    let mut level_lengths = Vec::with_capacity(levels);
    for _ in 0..levels {
        level_lengths.push(current.len());
        let (a, d) = dwt_level_with(&current, basis, boundary)?;
        details.push(d);
        current = a;
    }
    Ok(Decomposition {
        approx: current,
        details,
        levels,
        original_length: signal.len(),
        level_lengths,
        boundary,
    })
}

/// Runs the synthesis chain from `start_level` (1-based) down to the signal
/// domain, starting from the given coefficient bands at that level.
fn synthesize_from(
    d: &Decomposition,
    basis: &WaveletBasis,
    start_level: usize,
    approx: Option<&[f64]>,
    detail: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let n_coeffs = approx.or(detail).map_or(0, <[f64]>::len);
    let mut current = synthesize(
        approx,
        detail,
        n_coeffs,
        basis,
        d.level_lengths[start_level - 1],
        d.boundary,
    )?;
    for level in (1..start_level).rev() {
        let n = current.len();
        current = synthesize(
            Some(&current),
            None,
            n,
            basis,
            d.level_lengths[level - 1],
            d.boundary,
        )?;
    }
    Ok(current)
}

fn check_decomposition(d: &Decomposition) -> Result<()> {
    check_len("decomposition details", d.levels, d.details.len())?;
    check_len("decomposition level lengths", d.levels, d.level_lengths.len())?;
    if d.levels == 0 {
        return Err(WdanError::InvalidLevels);
    }
    Ok(())
}

/// Full inverse transform.
pub fn reconstruct(d: &Decomposition, basis: &WaveletBasis) -> Result<Vec<f64>> {
    check_decomposition(d)?;
    let mut current = d.approx.clone();
    for level in (1..=d.levels).rev() {
        current = idwt_level_with(
            &current,
            &d.details[level - 1],
            basis,
            d.level_lengths[level - 1],
            d.boundary,
        )?;
    }
    Ok(current)
}

/// Trend from the approximation band alone; residual as the sum of
/// per-level detail reconstructions.
pub fn split_components(d: &Decomposition, basis: &WaveletBasis) -> Result<ComponentSplit> {
    check_decomposition(d)?;
    let trend = synthesize_from(d, basis, d.levels, Some(&d.approx), None)?;
    let mut residual = vec![0.0; d.original_length];
    for level in 1..=d.levels {
        let part = synthesize_from(d, basis, level, None, Some(&d.details[level - 1]))?;
        for (r, p) in residual.iter_mut().zip(&part) {
            *r += p;
        }
    }
    Ok(ComponentSplit { trend, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn haar_filters_are_forced() {
        let b = make_basis("haar").unwrap();
        let r = 1.0 / SQRT_2;
        assert!(close(b.lowpass(), &[r, r], 1e-15));
        assert!(close(b.highpass(), &[r, -r], 1e-15));
        assert_eq!(make_basis("db1").unwrap().lowpass(), b.lowpass());
    }

    #[test]
    fn every_table_validates() {
        for name in SUPPORTED_WAVELETS {
            make_basis(name).unwrap().validate().unwrap();
        }
        assert_eq!(make_basis("coif3").unwrap().support(), 18);
        assert_eq!(make_basis("db4").unwrap().support(), 8);
    }

    #[test]
    fn unknown_name_rejected() {
        assert!(matches!(
            make_basis("xyz"),
            Err(WdanError::UnsupportedWavelet(_))
        ));
    }

    #[test]
    fn corrupted_filter_fails_validation() {
        let mut taps = COIF3.to_vec();
        taps[4] += 1e-6;
        assert!(matches!(
            WaveletBasis::from_lowpass("bad", taps),
            Err(WdanError::InvalidBasis { .. })
        ));
        assert!(WaveletBasis::from_lowpass("odd", vec![1.0, 0.2, 0.2]).is_err());
    }

    #[test]
    fn haar_step_by_hand() {
        let b = make_basis("haar").unwrap();
        let (a, d) = dwt_level(&[1.0, 2.0, 3.0, 4.0], &b).unwrap();
        assert!(close(&a, &[3.0 / SQRT_2, 7.0 / SQRT_2], 1e-15));
        assert!(close(&d, &[-1.0 / SQRT_2, -1.0 / SQRT_2], 1e-15));
        let back = idwt_level(&a, &d, &b, 4).unwrap();
        assert!(close(&back, &[1.0, 2.0, 3.0, 4.0], 1e-14));
    }

    #[test]
    fn constant_has_no_detail() {
        let b = make_basis("haar").unwrap();
        let (a, d) = dwt_level(&[2.5; 6], &b).unwrap();
        assert!(a.iter().all(|v| (v - 2.5 * SQRT_2).abs() < 1e-14));
        assert!(d.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn too_short_signal() {
        let b = make_basis("haar").unwrap();
        assert!(matches!(
            dwt_level(&[1.0], &b),
            Err(WdanError::SignalTooShort { len: 1 })
        ));
    }

    #[test]
    fn idwt_rejects_inconsistent_lengths() {
        let b = make_basis("coif3").unwrap();
        let (a, d) = dwt_level(&[0.5; 20], &b).unwrap();
        assert!(matches!(
            idwt_level(&a, &d[1..], &b, 20),
            Err(WdanError::LengthMismatch { .. })
        ));
        assert!(matches!(
            idwt_level(&a, &d, &b, 40),
            Err(WdanError::LengthMismatch { .. })
        ));
    }

    // Reference values from PyWavelets 1.x, mode="symmetric", on
    // x[i] = sin(0.3 i) + 0.01 i^2, i = 0..20.
    #[test]
    fn coif3_matches_pywavelets_symmetric_mode() {
        let x: Vec<f64> = (0..20)
            .map(|i| (0.3 * i as f64).sin() + 0.01 * (i * i) as f64)
            .collect();
        let b = make_basis("coif3").unwrap();
        let (a, d) = dwt_level(&x, &b).unwrap();
        assert_eq!(a.len(), 18);
        let want_a = [
            1.7498571662590459,
            1.914276668833291,
            1.7615387345197315,
            1.2449556182195487,
        ];
        let want_d = [
            0.005117879697874394,
            -0.0220511311883122,
            0.06386074203181775,
            -0.05606873474178124,
        ];
        assert!(close(&a[..4], &want_a, 1e-12));
        assert!(close(&d[..4], &want_d, 1e-12));

        let dec = decompose(&x, &b, 2).unwrap();
        assert_eq!(dec.approx.len(), 17);
        assert_eq!(
            dec.details.iter().map(Vec::len).collect::<Vec<_>>(),
            [18, 17]
        );
        let split = split_components(&dec, &b).unwrap();
        assert!((split.trend[0] - 0.2409131948828113).abs() < 1e-12);
        assert!((split.trend[5] - 1.221222398138804).abs() < 1e-12);
        assert!((split.trend[19] - 2.711897683922314).abs() < 1e-12);
    }

    #[test]
    fn zero_levels_rejected() {
        let b = make_basis("haar").unwrap();
        assert!(matches!(
            decompose(&[1.0; 8], &b, 0),
            Err(WdanError::InvalidLevels)
        ));
        assert!(matches!(
            decompose(&[1.0; 7], &b, 3),
            Err(WdanError::TooManyLevels { .. })
        ));
    }

    #[test]
    fn single_level_equals_dwt_level() {
        let b = make_basis("db4").unwrap();
        let x: Vec<f64> = (0..13).map(|i| (i as f64 * 0.7).cos()).collect();
        let d = decompose(&x, &b, 1).unwrap();
        let (a, det) = dwt_level(&x, &b).unwrap();
        assert_eq!(d.approx, a);
        assert_eq!(d.details, vec![det]);
    }

    #[test]
    fn alternating_signal_is_all_detail_for_haar() {
        let b = make_basis("haar").unwrap();
        let x: Vec<f64> = (0..16).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let split = split_components(&decompose(&x, &b, 1).unwrap(), &b).unwrap();
        assert!(split.trend.iter().all(|v| v.abs() < 1e-14));
        assert!(close(&split.residual, &x, 1e-14));
    }

    #[test]
    fn constant_is_all_trend() {
        for name in SUPPORTED_WAVELETS {
            let b = make_basis(name).unwrap();
            let x = vec![3.25; 50];
            let split = split_components(&decompose(&x, &b, 3).unwrap(), &b).unwrap();
            assert!(close(&split.trend, &x, 1e-10), "{name}");
            assert!(split.residual.iter().all(|v| v.abs() < 1e-10), "{name}");
        }
    }

    #[test]
    fn periodization_lengths_and_round_trip() {
        let b = make_basis("coif3").unwrap();
        for n in [2usize, 3, 9, 16, 31] {
            let x: Vec<f64> = (0..n).map(|i| ((i * 7 % 5) as f64) - 1.5).collect();
            let (a, d) = dwt_level_with(&x, &b, Boundary::Periodization).unwrap();
            assert_eq!(a.len(), n.div_ceil(2));
            let back = idwt_level_with(&a, &d, &b, n, Boundary::Periodization).unwrap();
            assert!(close(&back, &x, 1e-12), "n={n}");
        }
    }
}
