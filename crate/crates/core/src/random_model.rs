//! The completely multiplicative random model X_n and the random Fourier
//! series G*, G*_ε built from it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{primes_up_to, EpsilonSignature, FactorSieve};
use crate::atlas::{folded_grid, gsharp_grid, ShapeSpec};
use crate::paths::{sup_distance, PathSample};
use crate::{invalid, Result};

/// One draw of (X_p)_{p ≤ y}, with the primes of an optional signature frozen.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MultiplicativeSample {
    pub seed: u64,
    pub stream: u64,
    pub y: u64,
    pub truncation_primes: Vec<u64>,
    pub values: Vec<i8>,
    pub fixed: Option<EpsilonSignature>,
}

/// X_p from one uniform 64-bit word: 0 with probability 1/(p+1), ±1 with
/// probability p/(2(p+1)) each; X_2 = ±1 with probability 1/2.
fn draw(p: u64, word: u64) -> i8 {
    if p == 2 {
        return if word >> 63 == 0 { 1 } else { -1 };
    }
    let k = ((word as u128 * (2 * (p + 1)) as u128) >> 64) as u64;
    if k < 2 {
        0
    } else if k < p + 2 {
        1
    } else {
        -1
    }
}

/// Independent draws per prime; the word for the i-th prime sits at a fixed
/// position of the (seed, stream) keystream, so values do not depend on
/// evaluation order.
pub fn sample_multiplicative_stream(
    y: u64,
    sig: Option<&EpsilonSignature>,
    seed: u64,
    stream: u64,
) -> Result<MultiplicativeSample> {
    if y < 2 {
        return invalid(format!("prime cutoff y = {y} < 2"));
    }
    let primes = primes_up_to(y);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let values = primes
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if let Some(v) = sig.and_then(|s| s.get(p)) {
                return v;
            }
            rng.set_word_pos(2 * i as u128);
            draw(p, rng.next_u64())
        })
        .collect();
    Ok(MultiplicativeSample {
        seed,
        stream,
        y,
        truncation_primes: primes,
        values,
        fixed: sig.cloned(),
    })
}

pub fn sample_multiplicative(
    y: u64,
    sig: Option<&EpsilonSignature>,
    seed: u64,
) -> Result<MultiplicativeSample> {
    sample_multiplicative_stream(y, sig, seed, 0)
}

impl MultiplicativeSample {
    pub fn prime_value(&self, p: u64) -> Option<i8> {
        self.truncation_primes
            .binary_search(&p)
            .ok()
            .map(|i| self.values[i])
    }

    /// X_n by complete multiplicativity; X_{−n} = X_n and X_0 = 0.
    pub fn value(&self, n: i64) -> Result<i8> {
        let mut m = n.unsigned_abs();
        if m == 0 {
            return Ok(0);
        }
        let mut x = 1i8;
        let mut p = 2u64;
        while p * p <= m {
            while m % p == 0 {
                x *= self.prime_value(p).expect("p ≤ sqrt(n) is sampled when n ≤ y");
                m /= p;
            }
            p += 1;
        }
        if m > 1 {
            match self.prime_value(m) {
                Some(v) => x *= v,
                None => return invalid(format!("X_{n} needs the unsampled prime {m}")),
            }
        }
        Ok(x)
    }

    /// X_0..=X_limit, using a smallest-prime-factor table.
    pub fn table(&self, limit: usize, sieve: &FactorSieve) -> Result<Vec<i8>> {
        if limit as u64 > self.y || sieve.limit() < limit {
            return invalid(format!(
                "table up to {limit} needs primes up to {limit} (sampled to {})",
                self.y
            ));
        }
        let mut x = vec![0i8; limit + 1];
        if limit >= 1 {
            x[1] = 1;
        }
        for n in 2..=limit {
            let p = sieve.spf(n);
            let xp = if p == n {
                self.prime_value(n as u64).expect("sampled prime")
            } else {
                x[p]
            };
            x[n] = xp * x[n / p];
        }
        Ok(x)
    }
}

/// Σ_{n≠−1,0, |n+1|≤N} X_n (e((n+1)t)−1)/(2πi(n+1)) + t on t = i/R.
pub fn sample_limit_path(sample: &MultiplicativeSample, n: u64, r: usize) -> Result<PathSample> {
    sample_limit_path_with(sample, n, r, &FactorSieve::new(n as usize + 1))
}

pub fn sample_limit_path_with(
    sample: &MultiplicativeSample,
    n: u64,
    r: usize,
    sieve: &FactorSieve,
) -> Result<PathSample> {
    if n < 2 {
        return invalid(format!("truncation N = {n} < 2"));
    }
    if r == 0 {
        return invalid("grid resolution must be >= 1");
    }
    let x = sample.table(n as usize + 1, sieve)?;
    let n = n as i64;
    let terms = (-n..=n)
        .filter(|&k| k != 0 && k != 1)
        .map(|k| (k, x[(k - 1).unsigned_abs() as usize] as f64))
        .filter(|t| t.1 != 0.0);
    let label = match &sample.fixed {
        Some(s) => format!("sample_{}_{}_{}", s.tag(), sample.seed, sample.stream),
        None => format!("sample_{}_{}", sample.seed, sample.stream),
    };
    Ok(PathSample {
        resolution: r,
        values: folded_grid(r, terms),
        label,
    })
}

/// Sup-distance between the truncations at N and 2N of one draw; the sample
/// must cover primes up to 2N + 1.
pub fn doubling_gap(sample: &MultiplicativeSample, n: u64, r: usize, sieve: &FactorSieve) -> Result<f64> {
    let coarse = sample_limit_path_with(sample, n, r, sieve)?;
    let fine = sample_limit_path_with(sample, 2 * n, r, sieve)?;
    sup_distance(&coarse, &fine)
}

/// Number of leading trials checked by the doubling diagnostic.
pub const DOUBLING_TRIALS: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct DeviationReport {
    #[serde(rename = "Z")]
    pub z: u64,
    pub signature: EpsilonSignature,
    pub delta: f64,
    pub trials: usize,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "R")]
    pub r: usize,
    pub seed: u64,
    pub estimate: f64,
    pub stderr: f64,
    /// Largest N-versus-2N gap over the first few trials.
    pub doubling_gap: f64,
    pub distances: Vec<f64>,
}

/// Shape tolerance used as the reference in deviation estimates.
pub const DEVIATION_SHAPE_TOLERANCE: f64 = 1e-6;

/// Fraction of sampled G*_ε with sup-distance at least δ from G♯_ε; trial i
/// uses keystream i of the seed.
pub fn estimate_deviation_prob(
    sig: &EpsilonSignature,
    delta: f64,
    trials: usize,
    n: u64,
    r: usize,
    seed: u64,
) -> Result<DeviationReport> {
    if !(delta > 0.0) {
        return invalid(format!("delta = {delta} must be positive"));
    }
    if trials == 0 {
        return invalid("trials must be >= 1");
    }
    let shape = gsharp_grid(&ShapeSpec::new(sig, DEVIATION_SHAPE_TOLERANCE)?, r)?;
    let sieve = FactorSieve::new(2 * n as usize + 1);
    let runs = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = sample_multiplicative_stream(2 * n + 1, Some(sig), seed, i)?;
            let d = sup_distance(&sample_limit_path_with(&s, n, r, &sieve)?, &shape)?;
            let gap = if (i as usize) < DOUBLING_TRIALS {
                doubling_gap(&s, n, r, &sieve)?
            } else {
                0.0
            };
            Ok((d, gap))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let distances: Vec<f64> = runs.iter().map(|x| x.0).collect();
    let doubling_gap = runs.iter().map(|x| x.1).fold(0.0, f64::max);
    let hits = distances.iter().filter(|&&d| d >= delta).count();
    let p = hits as f64 / trials as f64;
    Ok(DeviationReport {
        z: sig.z(),
        signature: sig.clone(),
        delta,
        trials,
        n,
        r,
        seed,
        estimate: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        doubling_gap,
        distances,
    })
}
