//! Integer and number-theoretic primitives: Jacobi symbols, the weights
//! η and η_Z, signatures of small-prime residue symbols, modulus
//! families and smooth-number enumeration.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::{invalid, Result};

/// Exact rational used for the η weights.
pub type Rational = Ratio<i128>;

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: i64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a as i128).rem_euclid(m as i128));
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(m as i128) as u64)
}

/// Jacobi symbol `(a/n)` for odd positive `n`.
pub fn jacobi(a: i64, n: u64) -> Result<i8> {
    if n == 0 || n % 2 == 0 {
        return invalid(format!("jacobi: modulus {n} must be odd and positive"));
    }
    Ok(jacobi_u((a as i128).rem_euclid(n as i128) as u64, n))
}

/// Jacobi symbol for `0 <= a` and odd `n`; no validation.
#[inline]
pub fn jacobi_u(mut a: u64, mut n: u64) -> i8 {
    let mut t = 1i8;
    a %= n;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz & 1 == 1 && (n % 8 == 3 || n % 8 == 5) {
            t = -t;
        }
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        (a, n) = (n % a, a);
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes up to and including `n`.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Prime factorization by trial division, as (prime, exponent) pairs.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut k = 0;
            while n % p == 0 {
                n /= p;
                k += 1;
            }
            out.push((p, k));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

pub fn is_squarefree(n: u64) -> bool {
    n != 0 && factorize(n).iter().all(|&(_, k)| k == 1)
}

pub fn is_square(n: u64) -> bool {
    let r = (n as f64).sqrt() as u64;
    (r.saturating_sub(1)..=r + 1).any(|s| s.checked_mul(s) == Some(n))
}

/// Membership in the set of squarefree moduli congruent to 1 mod 4.
pub fn in_d(c: u64) -> bool {
    c % 4 == 1 && is_squarefree(c)
}

/// Least `k >= 1` with `a^k = 1 mod q`.
pub fn multiplicative_order(a: i64, q: u64) -> Result<u64> {
    if q < 2 {
        return invalid(format!("multiplicative_order: modulus {q} < 2"));
    }
    let a = (a as i128).rem_euclid(q as i128) as u64;
    if gcd(a, q) != 1 {
        return invalid(format!("multiplicative_order: gcd({a}, {q}) != 1"));
    }
    let mut k = euler_phi(q);
    for (r, _) in factorize(k) {
        while k % r == 0 && pow_mod(a, k / r, q) == 1 {
            k /= r;
        }
    }
    Ok(k)
}

/// Smallest primitive root modulo an odd prime `p`.
pub fn primitive_root(p: u64) -> Result<u64> {
    if p < 3 || !is_prime(p) {
        return invalid(format!("primitive_root: {p} is not an odd prime"));
    }
    let fs = factorize(p - 1);
    Ok((2..p)
        .find(|&g| fs.iter().all(|&(r, _)| pow_mod(g, (p - 1) / r, p) != 1))
        .expect("odd primes have primitive roots"))
}

/// Smallest-prime-factor table.
#[derive(Clone, Debug)]
pub struct FactorSieve {
    spf: Vec<u32>,
}

impl FactorSieve {
    pub fn new(n: usize) -> Self {
        let mut spf = vec![0u32; n + 1];
        for i in 2..=n {
            if spf[i] == 0 {
                let mut j = i;
                while j <= n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Self { spf }
    }

    pub fn limit(&self) -> usize {
        self.spf.len() - 1
    }

    /// Smallest prime factor of `n >= 2`.
    #[inline]
    pub fn spf(&self, n: usize) -> usize {
        self.spf[n] as usize
    }

    pub fn is_prime(&self, n: usize) -> bool {
        n >= 2 && self.spf[n] as usize == n
    }

    pub fn factor(&self, mut n: usize) -> Vec<(usize, u32)> {
        let mut out: Vec<(usize, u32)> = Vec::new();
        while n > 1 {
            let p = self.spf(n);
            n /= p;
            match out.last_mut() {
                Some((q, k)) if *q == p => *k += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }
}

/// η(h) = ∏ p/(p+1) over odd primes p dividing h, with η(0) = 0.
pub fn eta(h: i64) -> Rational {
    if h == 0 {
        return Rational::from_integer(0);
    }
    eta_of_factors(&factorize(h.unsigned_abs()))
}

fn eta_of_factors(fs: &[(u64, u32)]) -> Rational {
    fs.iter()
        .filter(|&&(p, _)| p > 2)
        .fold(Rational::from_integer(1), |acc, &(p, _)| {
            acc * Rational::new(p as i128, p as i128 + 1)
        })
}

pub fn eta_f64(h: i64) -> f64 {
    let r = eta(h);
    *r.numer() as f64 / *r.denom() as f64
}

/// η_Z(h) = ε_{h_Z}·η(h^Z) when the Z-rough part h^Z is a square, else 0.
pub fn eta_z(h: i64, sig: &EpsilonSignature) -> Rational {
    if h == 0 {
        return Rational::from_integer(0);
    }
    let (smooth, rough) = sig.split(h.unsigned_abs());
    if !is_square(rough) {
        return Rational::from_integer(0);
    }
    let eps = sig.eps_of(smooth) as i128;
    eta(rough as i64) * eps
}

/// A choice of ε_p ∈ {−1, 0, 1} for every prime p ≤ Z, with ε_2 ≠ 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EpsilonSignature {
    z: u64,
    primes: Vec<u64>,
    values: Vec<i8>,
}

impl EpsilonSignature {
    /// Values listed in increasing prime order.
    pub fn new(z: u64, values: &[i8]) -> Result<Self> {
        if z < 2 {
            return invalid(format!("signature: Z = {z} < 2"));
        }
        let primes = primes_up_to(z);
        if primes.len() != values.len() {
            return invalid(format!(
                "signature: {} values given for {} primes <= {z}",
                values.len(),
                primes.len()
            ));
        }
        if let Some(v) = values.iter().find(|v| !(-1..=1).contains(*v)) {
            return invalid(format!("signature: value {v} not in {{-1,0,1}}"));
        }
        if values[0] == 0 {
            return invalid("signature: epsilon_2 must be +1 or -1");
        }
        Ok(Self {
            z,
            primes,
            values: values.to_vec(),
        })
    }

    /// From explicit (prime, value) pairs; every prime ≤ Z must appear once.
    pub fn from_pairs(z: u64, pairs: &[(u64, i8)]) -> Result<Self> {
        let primes = primes_up_to(z);
        let mut values = Vec::with_capacity(primes.len());
        for &p in &primes {
            let found: Vec<i8> = pairs.iter().filter(|e| e.0 == p).map(|e| e.1).collect();
            match found.as_slice() {
                [v] => values.push(*v),
                [] => return invalid(format!("signature: missing value for prime {p}")),
                _ => return invalid(format!("signature: duplicate entry for prime {p}")),
            }
        }
        if let Some(&(p, _)) = pairs.iter().find(|e| !primes.contains(&e.0)) {
            return invalid(format!("signature: {p} is not a prime <= {z}"));
        }
        Self::new(z, &values)
    }

    pub fn z(&self) -> u64 {
        self.z
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn get(&self, p: u64) -> Option<i8> {
        self.primes.iter().position(|&q| q == p).map(|i| self.values[i])
    }

    /// Primes p ≤ Z with ε_p ≠ 0.
    pub fn support(&self) -> Vec<u64> {
        self.pairs().filter(|e| e.1 != 0).map(|e| e.0).collect()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (u64, i8)> + '_ {
        self.primes.iter().copied().zip(self.values.iter().copied())
    }

    /// ε_n = ∏ ε_p^{a_p} over the primes p ≤ Z dividing n (n ≠ 0).
    pub fn eps_of(&self, mut n: u64) -> i8 {
        let mut s = 1i8;
        for (p, v) in self.pairs() {
            while n % p == 0 {
                n /= p;
                s *= v;
            }
        }
        s
    }

    /// Splits n into its Z-smooth and Z-rough parts.
    pub fn split(&self, n: u64) -> (u64, u64) {
        let mut smooth = 1;
        let mut rough = n;
        for &p in &self.primes {
            while rough % p == 0 {
                rough /= p;
                smooth *= p;
            }
        }
        (smooth, rough)
    }

    /// File-name tag, e.g. `eps_p1_m1_p0`.
    pub fn tag(&self) -> String {
        let parts: Vec<&str> = self
            .values
            .iter()
            .map(|v| match v {
                1 => "p1",
                -1 => "m1",
                _ => "p0",
            })
            .collect();
        format!("eps_{}", parts.join("_"))
    }
}

impl fmt::Display for EpsilonSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.values.iter().map(|x| x.to_string()).collect();
        write!(f, "Z={} ({})", self.z, v.join(","))
    }
}

/// Squarefree moduli c ≡ 1 mod 4 in [Q, 2Q], optionally restricted by a
/// signature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModulusFamily {
    pub q: u64,
    pub signature: Option<EpsilonSignature>,
    pub members: Vec<u64>,
}

impl ModulusFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn enumerate_family(q: u64, sig: Option<&EpsilonSignature>) -> Result<ModulusFamily> {
    if q < 3 {
        return invalid(format!("enumerate_family: Q = {q} < 3"));
    }
    if q > 1 << 31 {
        return invalid(format!("enumerate_family: Q = {q} exceeds 2^31"));
    }
    let lo = q;
    let hi = 2 * q;
    let mut ok = vec![true; (hi - lo + 1) as usize];
    let root = (hi as f64).sqrt() as u64 + 1;
    for p in primes_up_to(root).into_iter().skip(1) {
        let sq = p * p;
        if sq > hi {
            break;
        }
        let mut m = lo.div_ceil(sq) * sq;
        while m <= hi {
            ok[(m - lo) as usize] = false;
            m += sq;
        }
    }
    let members = (lo..=hi)
        .filter(|&c| c % 4 == 1 && ok[(c - lo) as usize])
        .filter(|&c| match sig {
            None => true,
            Some(s) => s.pairs().all(|(p, v)| jacobi_u(p, c) == v),
        })
        .collect();
    Ok(ModulusFamily {
        q,
        signature: sig.cloned(),
        members,
    })
}

/// All n in [1, bound] supported on {p ≤ Z : ε_p ≠ 0}, with ε_n, ascending.
pub fn enumerate_smooth(sig: &EpsilonSignature, bound: u64) -> Vec<(u64, i8)> {
    let support: Vec<(u64, i8)> = sig.pairs().filter(|e| e.1 != 0).collect();
    let mut out = Vec::new();
    if bound == 0 {
        return out;
    }
    fn walk(support: &[(u64, i8)], n: u64, eps: i8, bound: u64, out: &mut Vec<(u64, i8)>) {
        let Some((&(p, v), rest)) = support.split_first() else {
            out.push((n, eps));
            return;
        };
        let (mut m, mut s) = (n, eps);
        loop {
            walk(rest, m, s, bound, out);
            match m.checked_mul(p) {
                Some(next) if next <= bound => {
                    m = next;
                    s *= v;
                }
                _ => break,
            }
        }
    }
    walk(&support, 1, 1, bound, &mut out);
    out.sort_unstable();
    out
}
