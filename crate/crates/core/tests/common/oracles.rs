use wdan::wavelet::WaveletBasis;

/// Direct convolution in the decomposition-filter convention: pad with
/// `L - 1` mirrored samples each side, correlate with the reversed
/// reconstruction filter, keep odd positions.
pub fn oracle_dwt(x: &[f64], basis: &WaveletBasis) -> (Vec<f64>, Vec<f64>) {
    let l = basis.lowpass().len();
    let n = x.len();
    let mut padded = Vec::with_capacity(n + 2 * (l - 1));
    for k in (0..l - 1).rev() {
        padded.push(x[reflect(-(k as isize) - 1, n)]);
    }
    padded.extend_from_slice(x);
    for k in 0..l - 1 {
        padded.push(x[reflect((n + k) as isize, n)]);
    }
    let dec_lo: Vec<f64> = basis.lowpass().iter().rev().copied().collect();
    let dec_hi: Vec<f64> = basis.highpass().iter().rev().copied().collect();
    // a[i] = sum_j dec[j] * x_ext[2i + 1 - j]; x_ext[k] lives at padded[k + l - 1]
    let full_len = n + l - 1;
    let conv = |f: &[f64], pos: usize| -> f64 { (0..l).map(|j| f[j] * padded[pos + l - 1 - j]).sum() };
    let out_len = (n + l - 1) / 2;
    let mut a = Vec::with_capacity(out_len);
    let mut d = Vec::with_capacity(out_len);
    for i in 0..out_len {
        let pos = 2 * i + 1;
        assert!(pos < full_len);
        a.push(conv(&dec_lo, pos));
        d.push(conv(&dec_hi, pos));
    }
    (a, d)
}

/// Half-sample symmetric reflection (`x[-1] = x[0]`, `x[n] = x[n-1]`).
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}
