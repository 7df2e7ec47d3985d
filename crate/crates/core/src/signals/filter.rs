//! IIR filter design and zero-phase application.
//!
//! Butterworth lowpass/bandpass filters are designed the classical way:
//! analog prototype, frequency transform with prewarped edges, bilinear
//! transform, then factored into second-order sections. The notch is a single
//! second-order section with zeros pinned on the unit circle at the center
//! frequency.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Quality factor of the powerline notch (bandwidth = center / Q).
pub const NOTCH_Q: f64 = 30.0;

/// One second-order IIR section, coefficients normalized so `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sos {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

/// Designs a digital Butterworth lowpass of the given (even) order.
pub fn butter_lowpass(order: usize, cutoff_hz: f64, fs: f64) -> Result<Vec<Sos>> {
    check_order(order)?;
    if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
        return Err(Error::InvalidFilter(format!(
            "lowpass cutoff {cutoff_hz} Hz outside (0, {}) at fs = {fs} Hz",
            fs / 2.0
        )));
    }
    let wc = prewarp(cutoff_hz, fs);
    let poles: Vec<Complex64> = prototype_poles(order).into_iter().map(|p| p * wc).collect();
    let gain = wc.powi(order as i32);
    // No finite analog zeros; all digital zeros land at z = -1.
    let (zd, pd, kd) = bilinear(&[], &poles, gain, fs);
    to_sections(&zd, &pd, kd)
}

/// Designs a digital Butterworth bandpass from an (even) order-`order`
/// lowpass prototype; the resulting transfer function has `2 * order` poles.
pub fn butter_bandpass(order: usize, low_hz: f64, high_hz: f64, fs: f64) -> Result<Vec<Sos>> {
    check_order(order)?;
    if !(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0) {
        return Err(Error::InvalidFilter(format!(
            "bandpass edges ({low_hz}, {high_hz}) Hz invalid at fs = {fs} Hz (need 0 < low < high < {})",
            fs / 2.0
        )));
    }
    let wl = prewarp(low_hz, fs);
    let wh = prewarp(high_hz, fs);
    let w0 = (wl * wh).sqrt();
    let bw = wh - wl;

    let mut poles = Vec::with_capacity(2 * order);
    for p in prototype_poles(order) {
        // s^2 - p*bw*s + w0^2 = 0
        let half = p * (bw / 2.0);
        let disc = (half * half - Complex64::new(w0 * w0, 0.0)).sqrt();
        poles.push(half + disc);
        poles.push(half - disc);
    }
    let zeros = vec![Complex64::new(0.0, 0.0); order];
    let gain = bw.powi(order as i32);
    let (zd, pd, kd) = bilinear(&zeros, &poles, gain, fs);
    to_sections(&zd, &pd, kd)
}

/// Second-order notch with zeros on the unit circle at `center_hz`.
pub fn notch(center_hz: f64, q: f64, fs: f64) -> Result<Vec<Sos>> {
    if !(center_hz > 0.0 && center_hz < fs / 2.0) {
        return Err(Error::InvalidFilter(format!(
            "notch center {center_hz} Hz outside (0, {}) at fs = {fs} Hz",
            fs / 2.0
        )));
    }
    let w0 = 2.0 * std::f64::consts::PI * center_hz / fs;
    let alpha = w0.sin() / (2.0 * q);
    let a0 = 1.0 + alpha;
    Ok(vec![Sos {
        b: [1.0 / a0, -2.0 * w0.cos() / a0, 1.0 / a0],
        a: [1.0, -2.0 * w0.cos() / a0, (1.0 - alpha) / a0],
    }])
}

/// Runs the cascade forward over `x` with zero initial state.
pub fn sosfilt(sos: &[Sos], x: &[f64]) -> Vec<f64> {
    filt_inner(sos, x, None)
}

/// Per-section steady-state (z1, z2) for a unit constant input, each scaled
/// by the DC gain accumulated over the preceding sections. Seeding the
/// transposed direct-form-II state with `zi · x[0]` removes the step
/// transient a zero state would produce at the signal edge.
fn sosfilt_zi(sos: &[Sos]) -> Vec<(f64, f64)> {
    let mut scale = 1.0;
    sos.iter()
        .map(|s| {
            let h = (s.b[0] + s.b[1] + s.b[2]) / (1.0 + s.a[1] + s.a[2]);
            let zi = ((h - s.b[0]) * scale, (s.b[2] - s.a[2] * h) * scale);
            scale *= h;
            zi
        })
        .collect()
}

fn filt_inner(sos: &[Sos], x: &[f64], zi: Option<&[(f64, f64)]>) -> Vec<f64> {
    let x0 = x.first().copied().unwrap_or(0.0);
    let mut y = x.to_vec();
    for (k, s) in sos.iter().enumerate() {
        let (mut z1, mut z2) = match zi {
            Some(zi) => (zi[k].0 * x0, zi[k].1 * x0),
            None => (0.0, 0.0),
        };
        for v in y.iter_mut() {
            let input = *v;
            let out = s.b[0] * input + z1;
            z1 = s.b[1] * input - s.a[1] * out + z2;
            z2 = s.b[2] * input - s.a[2] * out;
            *v = out;
        }
    }
    y
}

/// Zero-phase (forward-backward) application with odd-reflection padding at
/// both ends and steady-state initial conditions at each pass. Squares the
/// magnitude response and cancels phase.
pub fn sosfiltfilt(sos: &[Sos], x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let padlen = (3 * (2 * sos.len() + 1)).min(x.len() - 1);
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * padlen);
    for i in (1..=padlen).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=padlen {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    let zi = sosfilt_zi(sos);
    let mut y = filt_inner(sos, &ext, Some(&zi));
    y.reverse();
    let mut y = filt_inner(sos, &y, Some(&zi));
    y.reverse();
    y[padlen..padlen + n].to_vec()
}

/// Magnitude of the cascade's frequency response at `f_hz` for a single pass.
/// The forward-backward response is the square of this.
pub fn response_magnitude(sos: &[Sos], f_hz: f64, fs: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f_hz / fs;
    let z1 = Complex64::from_polar(1.0, -w);
    let z2 = z1 * z1;
    let mut h = Complex64::new(1.0, 0.0);
    for s in sos {
        let num = Complex64::new(s.b[0], 0.0) + s.b[1] * z1 + s.b[2] * z2;
        let den = Complex64::new(s.a[0], 0.0) + s.a[1] * z1 + s.a[2] * z2;
        h *= num / den;
    }
    h.norm()
}

/// Left-half-plane poles of the normalized analog Butterworth prototype.
fn prototype_poles(order: usize) -> Vec<Complex64> {
    (1..=order)
        .map(|k| {
            let theta = std::f64::consts::PI * (2 * k + order - 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

fn prewarp(f_hz: f64, fs: f64) -> f64 {
    2.0 * fs * (std::f64::consts::PI * f_hz / fs).tan()
}

/// Bilinear transform of an analog zero/pole/gain system. Poles and zeros map
/// through `z = (2 fs + s) / (2 fs - s)`; missing zeros land at `z = -1`.
fn bilinear(
    zeros: &[Complex64],
    poles: &[Complex64],
    gain: f64,
    fs: f64,
) -> (Vec<Complex64>, Vec<Complex64>, f64) {
    let fs2 = Complex64::new(2.0 * fs, 0.0);
    let mut num = Complex64::new(gain, 0.0);
    for z in zeros {
        num *= fs2 - z;
    }
    let mut den = Complex64::new(1.0, 0.0);
    for p in poles {
        den *= fs2 - p;
    }
    let kd = (num / den).re;

    let zd: Vec<Complex64> = zeros
        .iter()
        .map(|z| (fs2 + z) / (fs2 - z))
        .chain(std::iter::repeat_n(
            Complex64::new(-1.0, 0.0),
            poles.len() - zeros.len(),
        ))
        .collect();
    let pd: Vec<Complex64> = poles.iter().map(|p| (fs2 + p) / (fs2 - p)).collect();
    (zd, pd, kd)
}

/// Factors a digital zero/pole/gain system with conjugate-paired poles into
/// second-order sections. The total gain is spread evenly across sections.
fn to_sections(zeros: &[Complex64], poles: &[Complex64], gain: f64) -> Result<Vec<Sos>> {
    let n_sections = poles.len() / 2;
    let pairs = conjugate_pairs(poles)?;
    // Zeros arrive in two flavors only: at +1 (from analog zeros at s = 0)
    // and at -1 (from zeros at infinity); count each kind.
    let n_plus = zeros.iter().filter(|z| z.re > 0.0).count();
    let n_minus = 2 * n_sections - n_plus;
    let bandpass_layout = n_plus == n_sections && n_minus == n_sections;
    let lowpass_layout = n_plus == 0 && n_minus == 2 * n_sections;
    if !(bandpass_layout || lowpass_layout) {
        return Err(Error::InvalidFilter("unsupported zero layout".into()));
    }

    if gain <= 0.0 || !gain.is_finite() {
        return Err(Error::Numerical(format!(
            "non-positive digital gain {gain:.3e} in filter design"
        )));
    }
    let g = gain.powf(1.0 / n_sections as f64);

    let mut sections = Vec::with_capacity(n_sections);
    for p in pairs {
        let a1 = -2.0 * p.re;
        let a2 = p.norm_sqr();
        // Bandpass sections pair one zero at +1 with one at -1; pure lowpass
        // sections take two zeros at -1.
        let b = if bandpass_layout {
            [g, 0.0, -g]
        } else {
            [g, 2.0 * g, g]
        };
        sections.push(Sos { b, a: [1.0, a1, a2] });
    }
    Ok(sections)
}

/// Groups poles into conjugate pairs, sorted by distance to the unit circle
/// (closest last) for a deterministic, well-conditioned cascade order.
fn conjugate_pairs(poles: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut upper: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > 1e-12).collect();
    if upper.len() * 2 != poles.len() {
        return Err(Error::InvalidFilter(
            "filter design produced unpaired real poles; use an even order".into(),
        ));
    }
    upper.sort_by(|a, b| {
        a.norm()
            .partial_cmp(&b.norm())
            .unwrap()
            .then(a.re.partial_cmp(&b.re).unwrap())
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(upper)
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 || order % 2 != 0 {
        return Err(Error::InvalidFilter(format!(
            "butterworth order must be a positive even number, got {order}"
        )));
    }
    Ok(())
}
