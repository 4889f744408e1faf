//! The deterministic limit shapes G♯_ε: the Fourier series over integers
//! supported on the small primes of a signature, truncated with a certified
//! uniform error.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::accum::{pairwise_sum, CompensatedSum, ComplexSum};
use crate::arith::{enumerate_smooth, primes_up_to, EpsilonSignature};
use crate::paths::PathSample;
use crate::{e_ratio, frac_mul, invalid, Error, Result};

/// Largest truncation considered; enumerated integers stay exact in f64.
pub const MAX_LOG2_B: u32 = 53;

/// e(x) − 1 without cancellation near integers.
#[inline]
pub(crate) fn e_minus_one(x: f64) -> Complex64 {
    let s = (PI * x).sin();
    Complex64::new(-2.0 * s * s, (TAU * x).sin())
}

/// A truncated limit shape with its certified error.
#[derive(Clone, Debug, Serialize)]
pub struct ShapeSpec {
    pub signature: EpsilonSignature,
    pub tolerance: f64,
    pub b: u64,
    pub tail_bound: f64,
    #[serde(skip)]
    terms: Vec<(u64, i8)>,
}

impl ShapeSpec {
    /// Picks the smallest power-of-two truncation whose certified tail is
    /// within `tolerance`.
    pub fn new(signature: &EpsilonSignature, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return invalid(format!("tolerance {tolerance} must be positive"));
        }
        let tail_at = |k: u32| certified_tail(signature, 1u64 << k);
        if tail_at(MAX_LOG2_B) > tolerance {
            return Err(Error::Budget(format!(
                "tolerance {tolerance} not reachable with truncation 2^{MAX_LOG2_B} for {signature}"
            )));
        }
        let (mut lo, mut hi) = (1u32, MAX_LOG2_B);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if tail_at(mid) <= tolerance {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Self::with_truncation(signature, lo, tolerance)
    }

    /// Fixed truncation B = 2^k, with the tolerance set to its tail bound
    /// when not otherwise requested.
    pub fn with_truncation(signature: &EpsilonSignature, log2_b: u32, tolerance: f64) -> Result<Self> {
        if !(1..=MAX_LOG2_B).contains(&log2_b) {
            return invalid(format!("truncation exponent {log2_b} outside 1..={MAX_LOG2_B}"));
        }
        let b = 1u64 << log2_b;
        let tail_bound = certified_tail(signature, b);
        Ok(Self {
            signature: signature.clone(),
            tolerance: tolerance.max(tail_bound),
            b,
            tail_bound,
            terms: enumerate_smooth(signature, b),
        })
    }

    /// Number of smooth |n| ≤ B carried by the truncation.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Signed indices k = n + 1 with coefficients ε_n, the drift excluded.
    fn shifted_terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.terms.iter().flat_map(|&(m, eps)| {
            let eps = eps as f64;
            let pos = Some(((m + 1) as f64, eps));
            let neg = (m != 1).then(|| (1.0 - m as f64, eps));
            pos.into_iter().chain(neg)
        })
    }
}

/// Upper bound on sup_t of the discarded part of the series beyond |n| = B:
/// each sign contributes at most (2/π)·Σ_{smooth m > B} 1/m, and that
/// remainder is the exact Euler product minus the enumerated partial sum.
pub fn certified_tail(sig: &EpsilonSignature, b: u64) -> f64 {
    let euler: f64 = sig
        .support()
        .iter()
        .map(|&p| p as f64 / (p as f64 - 1.0))
        .product();
    let mut partial = CompensatedSum::new();
    for (m, _) in enumerate_smooth(sig, b) {
        partial.add(1.0 / m as f64);
    }
    let remainder = (euler - partial.value()).max(0.0) + 4.0 * f64::EPSILON * euler;
    4.0 / PI * remainder
}

/// G♯(t) for the truncated series.
pub fn gsharp_eval(spec: &ShapeSpec, t: f64) -> Result<Complex64> {
    if !(0.0..=1.0).contains(&t) {
        return invalid(format!("t = {t} outside [0, 1]"));
    }
    let mut s = ComplexSum::new();
    for (k, eps) in spec.shifted_terms() {
        let d = e_minus_one(frac_mul(k, t));
        // d / (2πi k) = (d.im − i d.re) / (2π k)
        s.add(Complex64::new(d.im, -d.re) * (eps / (TAU * k)));
    }
    Ok(s.value() + t)
}

/// G♯(a/q + h) − G♯(a/q), with t₀ = a/q handled exactly so that tiny h keep
/// full relative accuracy.
pub fn gsharp_increment(spec: &ShapeSpec, a: i64, q: u64, h: f64) -> Complex64 {
    let mut s = ComplexSum::new();
    for (k, eps) in spec.shifted_terms() {
        let rot = e_ratio(k as i128 * a as i128, q);
        let d = e_minus_one(frac_mul(k, h));
        s.add(rot * Complex64::new(d.im, -d.re) * (eps / (TAU * k)));
    }
    s.value() + h
}

/// Σ_k w_k (e(kt)−1)/(2πik) + t on t = i/R. Terms are folded by k mod R and
/// the grid comes from one inverse FFT; both endpoints are exact.
pub(crate) fn folded_grid(r: usize, terms: impl Iterator<Item = (i64, f64)>) -> Vec<Complex64> {
    let mut bins = vec![ComplexSum::new(); r];
    for (k, w) in terms {
        bins[k.rem_euclid(r as i64) as usize].add(Complex64::new(0.0, -w / (TAU * k as f64)));
    }
    let mut buf: Vec<Complex64> = bins.iter().map(|b| b.value()).collect();
    let total = pairwise_sum(&buf);
    FftPlanner::new().plan_fft_inverse(r).process(&mut buf);
    let mut values: Vec<Complex64> = (0..r)
        .map(|i| buf[i] - total + i as f64 / r as f64)
        .collect();
    values[0] = Complex64::new(0.0, 0.0);
    values.push(Complex64::new(1.0, 0.0));
    values
}

/// The shape on the grid t = i/R.
pub fn gsharp_grid(spec: &ShapeSpec, r: usize) -> Result<PathSample> {
    if r == 0 {
        return invalid("grid resolution must be >= 1");
    }
    let values = folded_grid(r, spec.shifted_terms().map(|(k, eps)| (k as i64, eps)));
    Ok(PathSample {
        resolution: r,
        values,
        label: spec.signature.tag(),
    })
}

/// All 2·3^{π(Z)−1} signatures, lexicographic in prime order with −1 < 0 < 1.
pub fn enumerate_signatures(z: u64) -> Result<Vec<EpsilonSignature>> {
    if z < 2 {
        return invalid(format!("enumerate_signatures: Z = {z} < 2"));
    }
    let n = primes_up_to(z).len();
    let mut out = Vec::new();
    let mut cur = vec![0i8; n];
    fn rec(i: usize, cur: &mut Vec<i8>, z: u64, out: &mut Vec<EpsilonSignature>) {
        if i == cur.len() {
            out.push(EpsilonSignature::new(z, cur).expect("valid by construction"));
            return;
        }
        let choices: &[i8] = if i == 0 { &[-1, 1] } else { &[-1, 0, 1] };
        for &v in choices {
            cur[i] = v;
            rec(i + 1, cur, z, out);
        }
    }
    rec(0, &mut cur, z, &mut out);
    Ok(out)
}
