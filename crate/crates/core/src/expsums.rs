//! Complete exponential sums over products of small-prime powers, the
//! generalized Gauss power sums they reduce to, Dirichlet character tables,
//! and the local constants that decide whether a limit shape has a cusp at
//! a rational point.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::accum::ComplexSum;
use crate::arith::{
    euler_phi, factorize, gcd, is_prime, jacobi_u, multiplicative_order, pow_mod,
    primes_up_to, primitive_root, EpsilonSignature,
};
use crate::atlas::{gsharp_increment, ShapeSpec};
use crate::{e_ratio, invalid, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn reduce(a: i64, m: u64) -> u64 {
    (a as i128).rem_euclid(m as i128) as u64
}

fn check_coprime(a: i64, m: u64) -> Result<()> {
    if m < 2 {
        return invalid(format!("modulus {m} < 2"));
    }
    if gcd(reduce(a, m), m) != 1 {
        return invalid(format!("gcd({a}, {m}) != 1"));
    }
    Ok(())
}

/// (p, ε_p) for support primes not dividing `m`.
fn active(sig: &EpsilonSignature, m: u64) -> Vec<(u64, i8)> {
    sig.pairs().filter(|&(p, v)| v != 0 && m % p != 0).collect()
}

fn roots(m: u64) -> Vec<Complex64> {
    (0..m).map(|k| e_ratio(k as i128, m)).collect()
}

/// Σ over tuples 0 ≤ m_p < 2φ(m) of e(a·∏p^{δ'·m_p}/m)·∏ε_p^{m_p}, over the
/// support primes not dividing m'. With `unsigned` the ε_p are replaced by
/// |ε_p|. This is the unnormalized sum; s* is it divided by (2φ(m))^{|P|}.
pub fn s_generalized(
    a: i64,
    m: u64,
    sig: &EpsilonSignature,
    delta_prime: u64,
    m_prime: u64,
    unsigned: bool,
) -> Result<Complex64> {
    check_coprime(a, m)?;
    let range = 2 * euler_phi(m) as usize;
    let ps: Vec<(u64, f64)> = sig
        .pairs()
        .filter(|&(p, v)| v != 0 && m_prime % p != 0)
        .map(|(p, v)| (pow_mod(p, delta_prime, m), if unsigned { 1.0 } else { v as f64 }))
        .collect();
    let table = roots(m);
    let a = reduce(a, m);
    let mut idx = vec![0usize; ps.len()];
    // Running products per level so each step costs one multiplication.
    let mut prod = vec![a % m; ps.len() + 1];
    let mut sign = vec![1.0f64; ps.len() + 1];
    let mut total = ComplexSum::new();
    loop {
        total.add(table[prod[ps.len()] as usize] * sign[ps.len()]);
        let mut level = ps.len();
        loop {
            if level == 0 {
                return Ok(total.value());
            }
            level -= 1;
            idx[level] += 1;
            if idx[level] < range {
                prod[level + 1] = crate::arith::mul_mod(prod[level + 1], ps[level].0, m);
                sign[level + 1] *= ps[level].1;
                break;
            }
            idx[level] = 0;
            prod[level + 1] = prod[level];
            sign[level + 1] = sign[level];
        }
        for l in level + 1..ps.len() {
            prod[l + 1] = prod[l];
            sign[l + 1] = sign[l];
        }
    }
}

/// s(a/m)[δ', m'] for m = m1·m2 coprime, assembled from the two factors: with
/// δ = gcd(φ(m1), φ(m2)), it is (4δ)^{−|P|} Σ over μ ∈ [0, 2δ)^P of
/// ε^μ · s(a·m̄2·p^{δ'μ}/m1; |ε|)[2δδ', m'] · s(a·m̄1·p^{δ'μ}/m2; |ε|)[2δδ', m'].
pub fn s_generalized_factored(
    a: i64,
    m1: u64,
    m2: u64,
    sig: &EpsilonSignature,
    delta_prime: u64,
    m_prime: u64,
) -> Result<Complex64> {
    if gcd(m1, m2) != 1 {
        return invalid(format!("factors {m1} and {m2} are not coprime"));
    }
    let m = m1 * m2;
    check_coprime(a, m)?;
    let delta = gcd(euler_phi(m1), euler_phi(m2));
    let ps: Vec<(u64, i8)> = sig
        .pairs()
        .filter(|&(p, v)| v != 0 && m_prime % p != 0)
        .collect();
    let m2_inv = crate::arith::inv_mod(m2 as i64, m1).expect("coprime") as i128;
    let m1_inv = crate::arith::inv_mod(m1 as i64, m2).expect("coprime") as i128;
    let mut mu = vec![0u64; ps.len()];
    let mut total = ComplexSum::new();
    loop {
        let mut sign = 1.0;
        let (mut x1, mut x2) = (1u64, 1u64);
        for (&(p, v), &k) in ps.iter().zip(&mu) {
            sign *= (v as f64).powi(k as i32);
            x1 = crate::arith::mul_mod(x1, pow_mod(p % m1, delta_prime * k, m1), m1);
            x2 = crate::arith::mul_mod(x2, pow_mod(p % m2, delta_prime * k, m2), m2);
        }
        let a1 = (a as i128 * m2_inv % m1 as i128 * x1 as i128 % m1 as i128) as i64;
        let a2 = (a as i128 * m1_inv % m2 as i128 * x2 as i128 % m2 as i128) as i64;
        let s1 = s_generalized(a1, m1, sig, 2 * delta * delta_prime, m_prime, true)?;
        let s2 = s_generalized(a2, m2, sig, 2 * delta * delta_prime, m_prime, true)?;
        total.add(s1 * s2 * sign);
        let mut i = 0;
        while i < mu.len() {
            mu[i] += 1;
            if mu[i] < 2 * delta {
                break;
            }
            mu[i] = 0;
            i += 1;
        }
        if i == mu.len() {
            break;
        }
    }
    Ok(total.value() / (4.0 * delta as f64).powi(ps.len() as i32))
}

/// s*(a/m; ε) by direct enumeration of all (2φ(m))^{|P|} tuples.
pub fn s_star(a: i64, m: u64, sig: &EpsilonSignature) -> Result<Complex64> {
    let s = s_generalized(a, m, sig, 1, m, false)?;
    let n = active(sig, m).len() as i32;
    Ok(s / (2.0 * euler_phi(m) as f64).powi(n))
}

/// Weights w_r with s*(a/m) = Σ_r w_r e(ar/m): each exponent is reduced
/// modulo its period lcm(ord_m p, 2) and the tuple average becomes a
/// convolution over residues.
#[derive(Clone, Debug)]
pub struct ResidueWeights {
    m: u64,
    weights: Vec<f64>,
}

impl ResidueWeights {
    pub fn s_star(m: u64, sig: &EpsilonSignature) -> Result<Self> {
        if m < 2 {
            return invalid(format!("modulus {m} < 2"));
        }
        let factors: Vec<(u64, Vec<f64>)> = active(sig, m)
            .into_iter()
            .map(|(p, v)| {
                let ord = multiplicative_order(p as i64, m).expect("p coprime to m");
                let period = if v < 0 { lcm(ord, 2) } else { ord } as usize;
                let w = (0..period)
                    .map(|j| (v as f64).powi(j as i32) / period as f64)
                    .collect();
                (p, w)
            })
            .collect();
        Ok(Self {
            m,
            weights: convolve(m, &factors),
        })
    }

    /// Weights for the sawtooth-weighted sum s̃_{q*}(·/b).
    pub fn s_tilde(b: u64, q_star: u64, sig: &EpsilonSignature) -> Result<Self> {
        check_support_coprime(b, sig)?;
        if sig.get(q_star).unwrap_or(0) == 0 {
            return invalid(format!("{q_star} is not in the signature support"));
        }
        let phi = euler_phi(b);
        let factors: Vec<(u64, Vec<f64>)> = active(sig, b)
            .into_iter()
            .map(|(p, v)| {
                let v = v as f64;
                if p == q_star {
                    let n = 2 * phi as usize;
                    let w = (0..n)
                        .map(|j| {
                            let x = (j as f64 + 0.5) / phi as f64;
                            (x - x.floor() - 0.5) * v.powi(j as i32) / n as f64
                        })
                        .collect();
                    (p, w)
                } else {
                    let ord = multiplicative_order(p as i64, b).expect("coprime");
                    let period = if v < 0.0 { lcm(ord, 2) } else { ord } as usize;
                    (p, (0..period).map(|j| v.powi(j as i32) / period as f64).collect())
                }
            })
            .collect();
        let weights = convolve(b, &factors)
            .into_iter()
            .map(|w| -(phi as f64) * w)
            .collect();
        Ok(Self { m: b, weights })
    }

    pub fn eval(&self, a: i64) -> Complex64 {
        let a = reduce(a, self.m);
        let mut s = ComplexSum::new();
        for (r, &w) in self.weights.iter().enumerate() {
            if w != 0.0 {
                s.add(e_ratio(a as i128 * r as i128, self.m) * w);
            }
        }
        s.value()
    }
}

fn convolve(m: u64, factors: &[(u64, Vec<f64>)]) -> Vec<f64> {
    let mut dist = vec![0.0; m as usize];
    dist[(1 % m) as usize] = 1.0;
    for (p, w) in factors {
        let mut next = vec![0.0; m as usize];
        for (r, &d) in dist.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let mut x = r as u64;
            for &wj in w {
                next[x as usize] += d * wj;
                x = x * p % m;
            }
        }
        dist = next;
    }
    dist
}

/// s*(a/m; ε) through the period-reduced residue weights.
pub fn s_star_periodic(a: i64, m: u64, sig: &EpsilonSignature) -> Result<Complex64> {
    check_coprime(a, m)?;
    Ok(ResidueWeights::s_star(m, sig)?.eval(a))
}

fn odd_prime_power(q: u64) -> Option<(u64, u32)> {
    match factorize(q).as_slice() {
        [(p, k)] if *p > 2 => Some((*p, *k)),
        _ => None,
    }
}

fn check_support_coprime(q: u64, sig: &EpsilonSignature) -> Result<()> {
    if let Some(p) = sig.support().into_iter().find(|p| q % p == 0) {
        return invalid(format!("modulus {q} shares the support prime {p}"));
    }
    Ok(())
}

/// σ_d^ι(a/q) = Σ over units x of (x/q)^ι e(a x^d / q), q an odd prime power.
pub fn sigma_power_sum(a: i64, q: u64, d: u64, iota: u8) -> Result<Complex64> {
    check_coprime(a, q)?;
    if odd_prime_power(q).is_none() {
        return invalid(format!("{q} is not an odd prime power"));
    }
    let phi = euler_phi(q);
    if d == 0 || phi % d != 0 {
        return invalid(format!("d = {d} does not divide phi({q}) = {phi}"));
    }
    if iota > 1 {
        return invalid("iota must be 0 or 1");
    }
    let a = reduce(a, q);
    let mut s = ComplexSum::new();
    for x in 1..q {
        if gcd(x, q) != 1 {
            continue;
        }
        let chi = if iota == 1 { jacobi_u(x, q) as f64 } else { 1.0 };
        let arg = crate::arith::mul_mod(a, pow_mod(x, d, q), q);
        s.add(e_ratio(arg as i128, q) * chi);
    }
    Ok(s.value())
}

/// The split of the support used by the closed-form evaluation at an odd
/// prime power q.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReducedCase {
    pub d_q: u64,
    pub plus: Vec<u64>,
    pub minus: Vec<u64>,
    /// `Some(ι)` when the sum is σ_{d_q}^ι/φ(q), `None` when it vanishes.
    pub iota: Option<u8>,
}

pub fn reduced_case(q: u64, sig: &EpsilonSignature) -> Result<ReducedCase> {
    if odd_prime_power(q).is_none() {
        return invalid(format!("{q} is not an odd prime power"));
    }
    check_support_coprime(q, sig)?;
    let phi = euler_phi(q);
    let support: Vec<(u64, i8)> = sig.pairs().filter(|e| e.1 != 0).collect();
    let l = support.iter().fold(1, |acc, &(p, _)| {
        lcm(acc, multiplicative_order(p as i64, q).expect("coprime"))
    });
    let d_q = phi / l;
    // x lies in the subgroup of k-th powers iff x^{φ/gcd(k,φ)} = 1.
    let e = phi / gcd(2 * d_q, phi);
    let (plus, minus): (Vec<(u64, i8)>, Vec<(u64, i8)>) =
        support.iter().partition(|&&(p, _)| pow_mod(p, e, q) == 1);
    let iota = if plus.iter().any(|e| e.1 != 1) {
        None
    } else {
        match minus.first() {
            None => Some(0),
            Some(&(_, v)) if minus.iter().all(|e| e.1 == v) => Some(if v == 1 { 0 } else { 1 }),
            _ => None,
        }
    };
    Ok(ReducedCase {
        d_q,
        plus: plus.iter().map(|e| e.0).collect(),
        minus: minus.iter().map(|e| e.0).collect(),
        iota,
    })
}

/// s*(a/q) from the case table: σ_{d_q}^ι(a/q)/φ(q) or 0.
pub fn s_star_reduced(a: i64, q: u64, sig: &EpsilonSignature) -> Result<Complex64> {
    check_coprime(a, q)?;
    let case = reduced_case(q, sig)?;
    match case.iota {
        None => Ok(Complex64::new(0.0, 0.0)),
        Some(iota) => Ok(sigma_power_sum(a, q, case.d_q, iota)? / euler_phi(q) as f64),
    }
}

/// s̃_{q*}(a/b; ε), the sawtooth-weighted tuple sum.
pub fn s_tilde_q(a: i64, b: u64, q_star: u64, sig: &EpsilonSignature) -> Result<Complex64> {
    check_coprime(a, b)?;
    Ok(ResidueWeights::s_tilde(b, q_star, sig)?.eval(a))
}

/// Dirichlet characters modulo an odd prime via a discrete-log table.
#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub q: u64,
    pub generator: u64,
    dlog: Vec<u64>,
    pub gauss_sums: Vec<Complex64>,
}

impl CharacterTable {
    pub fn new(q: u64) -> Result<Self> {
        if q < 3 || !is_prime(q) {
            return invalid(format!("character tables need an odd prime modulus, got {q}"));
        }
        let g = primitive_root(q)?;
        let phi = q - 1;
        let mut dlog = vec![0u64; q as usize];
        let mut x = 1u64;
        for j in 0..phi {
            dlog[x as usize] = j;
            x = x * g % q;
        }
        let mut table = Self {
            q,
            generator: g,
            dlog,
            gauss_sums: Vec::new(),
        };
        table.gauss_sums = (0..phi)
            .map(|k| {
                let mut s = ComplexSum::new();
                for x in 1..q {
                    s.add(table.chi(k, x as i64) * e_ratio(x as i128, q));
                }
                s.value()
            })
            .collect();
        Ok(table)
    }

    pub fn phi(&self) -> u64 {
        self.q - 1
    }

    /// log_g x for x coprime to q.
    pub fn dlog(&self, x: i64) -> Option<u64> {
        let x = reduce(x, self.q);
        (x != 0).then(|| self.dlog[x as usize])
    }

    /// χ_k(x), with χ_k(g^j) = e(kj/φ).
    pub fn chi(&self, k: u64, x: i64) -> Complex64 {
        match self.dlog(x) {
            None => Complex64::new(0.0, 0.0),
            Some(j) => e_ratio(k as i128 * j as i128, self.phi()),
        }
    }

    /// χ_k(x) when it is real (±1), read off exactly from the exponent.
    pub fn chi_sign(&self, k: u64, x: i64) -> Option<i8> {
        let j = self.dlog(x)?;
        let r = (k as u128 * j as u128 % self.phi() as u128) as u64;
        if r == 0 {
            Some(1)
        } else if 2 * r == self.phi() {
            Some(-1)
        } else {
            None
        }
    }
}

/// (2/φ(b)) Σ over χ with χ(−1) = ε and χ(p) = ε_p on the support of
/// conj(G(χ))·χ(−a).
pub fn s_eps_char(a: i64, b: u64, eps_sign: i8, sig: &EpsilonSignature) -> Result<Complex64> {
    s_eps_char_with(&CharacterTable::new(b)?, a, eps_sign, sig)
}

pub fn s_eps_char_with(
    table: &CharacterTable,
    a: i64,
    eps_sign: i8,
    sig: &EpsilonSignature,
) -> Result<Complex64> {
    let b = table.q;
    check_coprime(a, b)?;
    check_support_coprime(b, sig)?;
    let support: Vec<(u64, i8)> = sig.pairs().filter(|e| e.1 != 0).collect();
    let mut s = ComplexSum::new();
    for k in 0..table.phi() {
        if table.chi_sign(k, -1) != Some(eps_sign) {
            continue;
        }
        if support
            .iter()
            .any(|&(p, v)| table.chi_sign(k, p as i64) != Some(v))
        {
            continue;
        }
        s.add(table.gauss_sums[k as usize].conj() * table.chi(k, -a));
    }
    Ok(s.value() * (2.0 / table.phi() as f64))
}

/// The companion character sum for s̃_q: characters agree with ε off q,
/// χ(q) ≠ ε_q, weighted by (1 − χ(q)ε_q)^{−1}.
pub fn s_eps_q_char(
    a: i64,
    b: u64,
    eps_sign: i8,
    q_star: u64,
    sig: &EpsilonSignature,
) -> Result<Complex64> {
    let table = CharacterTable::new(b)?;
    check_coprime(a, b)?;
    check_support_coprime(b, sig)?;
    let eq = match sig.get(q_star) {
        Some(v) if v != 0 => v as f64,
        _ => return invalid(format!("{q_star} is not in the signature support")),
    };
    let others: Vec<(u64, i8)> = sig.pairs().filter(|e| e.1 != 0 && e.0 != q_star).collect();
    let mut s = ComplexSum::new();
    for k in 0..table.phi() {
        if table.chi_sign(k, -1) != Some(eps_sign) {
            continue;
        }
        if others.iter().any(|&(p, v)| table.chi_sign(k, p as i64) != Some(v)) {
            continue;
        }
        if table.chi_sign(k, q_star as i64) == Some(eq as i8) {
            continue;
        }
        let w = Complex64::new(1.0, 0.0) - table.chi(k, q_star as i64) * eq;
        s.add(table.gauss_sums[k as usize].conj() * table.chi(k, -a) / w);
    }
    Ok(s.value() * (2.0 / table.phi() as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Cusp,
    SmoothThrough,
    LogSingularity,
    Undetermined,
}

/// Local constants of G♯ at t₀ = a/q.
#[derive(Clone, Debug, Serialize)]
pub struct CuspReport {
    pub a: i64,
    pub q: u64,
    pub signature: EpsilonSignature,
    pub s_star: Complex64,
    pub s_tilde: Vec<(u64, Complex64)>,
    pub c_eps: f64,
    pub c_prime_plus_const: f64,
    pub c_plus: f64,
    pub c_prime: f64,
    pub c_minus: f64,
    pub slope_plus: f64,
    pub slope_minus: f64,
    /// c′/c⁻, so that the one-sided slopes read ±(1 ± δ)c⁻.
    pub delta: Option<f64>,
    pub negative_support: Vec<u64>,
    pub all_qrs: bool,
    pub classification: Classification,
}

/// c_ε = 1/(|P|!·∏ log p).
pub fn c_eps(sig: &EpsilonSignature) -> f64 {
    let s = sig.support();
    let fact: f64 = (1..=s.len()).map(|k| k as f64).product();
    1.0 / (fact * s.iter().map(|&p| (p as f64).ln()).product::<f64>())
}

/// c′⁺_ε = −(log 2π + γ − 1) + ½ Σ log p.
pub fn c_prime_plus(sig: &EpsilonSignature) -> f64 {
    let half: f64 = sig.support().iter().map(|&p| (p as f64).ln()).sum::<f64>() / 2.0;
    -((2.0 * PI).ln() + EULER_GAMMA - 1.0) + half
}

/// Whether the positive-sign support primes generate the squares mod q.
pub fn all_qrs(q: u64, sig: &EpsilonSignature) -> bool {
    let order = sig
        .pairs()
        .filter(|e| e.1 == 1)
        .fold(1, |acc, (p, _)| lcm(acc, multiplicative_order(p as i64, q).expect("coprime")));
    order == (q - 1) / 2
}

const ZERO_TOL: f64 = 1e-12;

pub fn cusp_constants(a: i64, q: u64, sig: &EpsilonSignature) -> Result<CuspReport> {
    if !is_prime(q) || q <= sig.z() {
        return invalid(format!("cusp_constants: q = {q} must be a prime > Z = {}", sig.z()));
    }
    check_coprime(a, q)?;
    let support = sig.support();
    let n = support.len() as f64;
    let s = s_star_periodic(a, q, sig)?;
    let s_tilde: Vec<(u64, Complex64)> = support
        .iter()
        .map(|&p| Ok((p, s_tilde_q(a, q, p, sig)?)))
        .collect::<Result<_>>()?;
    let ce = c_eps(sig);
    let cpp = c_prime_plus(sig);
    let c_plus = ce * 2.0 * s.re;
    let c_minus = -ce * n * PI * s.im;
    let inner: Complex64 = s * cpp
        + s_tilde
            .iter()
            .map(|&(p, st)| st * (p as f64).ln())
            .sum::<Complex64>();
    let c_prime = ce * n * 2.0 * inner.re;
    let slope_plus = c_prime + c_minus;
    let slope_minus = c_prime - c_minus;
    let negative_support: Vec<u64> = sig.pairs().filter(|e| e.1 == -1).map(|e| e.0).collect();
    let qrs = all_qrs(q, sig);
    let classification = if s.re.abs() > ZERO_TOL {
        Classification::SmoothThrough
    } else if negative_support.len() == 1 && !qrs {
        Classification::Undetermined
    } else if slope_plus * slope_minus < 0.0 {
        Classification::Cusp
    } else if slope_plus * slope_minus > 0.0 {
        Classification::LogSingularity
    } else {
        Classification::Undetermined
    };
    Ok(CuspReport {
        a,
        q,
        signature: sig.clone(),
        s_star: s,
        s_tilde,
        c_eps: ce,
        c_prime_plus_const: cpp,
        c_plus,
        c_prime,
        c_minus,
        slope_plus,
        slope_minus,
        delta: (c_minus.abs() > ZERO_TOL).then(|| c_prime / c_minus),
        negative_support,
        all_qrs: qrs,
        classification,
    })
}

/// Primes Z < q ≤ qmax with q ≡ 3 mod 4 and (p/q) = ε_p on the support,
/// each with its all-QRs flag.
pub fn find_cusp_points(sig: &EpsilonSignature, qmax: u64) -> Vec<(u64, bool)> {
    let support: Vec<(u64, i8)> = sig.pairs().filter(|e| e.1 != 0).collect();
    primes_up_to(qmax)
        .into_par_iter()
        .filter(|&q| q > sig.z() && q % 4 == 3)
        .filter(|&q| support.iter().all(|&(p, v)| jacobi_u(p, q) == v))
        .map(|q| (q, all_qrs(q, sig)))
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProbeRow {
    pub offset: f64,
    pub quotient: Complex64,
    pub error_bound: f64,
}

/// (G♯(t₀+h) − G♯(t₀)) / (e(t₀)·h·ℓ^{|P|−1}) with ℓ = |log|h||, t₀ = a/q.
pub fn local_slope_probe(
    sig: &EpsilonSignature,
    a: i64,
    q: u64,
    offsets: &[f64],
    tolerance: f64,
) -> Result<Vec<ProbeRow>> {
    if q == 0 {
        return invalid("q must be positive");
    }
    if let Some(h) = offsets.iter().find(|h| **h == 0.0 || h.abs() > 0.1 || !h.is_finite()) {
        return invalid(format!("offset {h} must be nonzero with |h| <= 0.1"));
    }
    let spec = ShapeSpec::new(sig, tolerance)?;
    let power = sig.support().len() as i32 - 1;
    let rot = e_ratio(a as i128, q);
    Ok(offsets
        .par_iter()
        .map(|&h| {
            let ell = h.abs().ln().abs();
            let norm = h * ell.powi(power);
            ProbeRow {
                offset: h,
                quotient: gsharp_increment(&spec, a, q, h) / (rot * norm),
                error_bound: 2.0 * spec.tail_bound / norm.abs(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig5(v: &[i8]) -> EpsilonSignature {
        EpsilonSignature::new(5, v).unwrap()
    }

    #[test]
    fn s_star_small_examples() {
        let s = sig5(&[1, 0, 1]);
        let v = s_star(1, 3, &s).unwrap();
        assert!((v - Complex64::new(-0.5, 0.0)).norm() < 1e-12);
        let s = sig5(&[1, 1, -1]);
        let v = s_star(1, 23, &s).unwrap();
        let want = Complex64::new(0.0, 23f64.sqrt() / 22.0);
        assert!((v - want).norm() < 1e-12);
        for a in [2, 5, -7] {
            let x = s_star(a, 23, &s).unwrap();
            let y = s_star(-a, 23, &s).unwrap();
            assert!((x - y.conj()).norm() < 1e-12);
        }
        assert!(s_star(23, 23, &s).is_err());
    }

    #[test]
    fn periodic_agrees_with_direct() {
        for v in [[1i8, 1, -1], [-1, 0, 1], [1, -1, -1], [1, 1, 1]] {
            let s = sig5(&v);
            for m in [7u64, 11, 13, 23, 49, 77] {
                for a in 1..m as i64 {
                    if gcd(a as u64, m) != 1 {
                        continue;
                    }
                    let d = s_star(a, m, &s).unwrap();
                    let p = s_star_periodic(a, m, &s).unwrap();
                    assert!((d - p).norm() < 1e-12, "{v:?} {a}/{m}");
                }
            }
        }
    }

    #[test]
    fn multiplicativity_normalization() {
        for v in [[1i8, 1, 1], [-1, 1, 1], [1, 0, 1], [1, -1, 0]] {
            let s = sig5(&v);
            for a in [1i64, 2, 13, -4] {
                let lhs = s_generalized(a, 77, &s, 1, 77, false).unwrap();
                let rhs = s_generalized_factored(a, 7, 11, &s, 1, 77).unwrap();
                assert!((lhs - rhs).norm() < 1e-9 * lhs.norm().max(1.0), "{v:?} a={a}");
            }
        }
        assert!(s_generalized_factored(1, 7, 14, &sig5(&[1, 1, 1]), 1, 98).is_err());
    }

    #[test]
    fn sigma_examples() {
        for p in [7u64, 11, 23] {
            for a in 1..p as i64 {
                let v = sigma_power_sum(a, p, 1, 0).unwrap();
                assert!((v + 1.0).norm() < 1e-12);
            }
        }
        let v = sigma_power_sum(1, 23, 1, 1).unwrap();
        assert!((v - Complex64::new(0.0, 23f64.sqrt())).norm() < 1e-12);
        assert!(sigma_power_sum(1, 9, 1, 0).unwrap().norm() < 1e-12);
        assert!(sigma_power_sum(1, 9, 1, 1).unwrap().norm() < 1e-12);
        assert!(sigma_power_sum(1, 23, 3, 0).is_err());
        assert!(sigma_power_sum(1, 15, 1, 0).is_err());
    }

    #[test]
    fn reduced_examples() {
        let s = sig5(&[1, 1, -1]);
        let case = reduced_case(23, &s).unwrap();
        assert_eq!(case.d_q, 1);
        assert_eq!(case.minus, vec![5]);
        assert_eq!(case.iota, Some(1));
        let s = sig5(&[1, 1, 1]);
        let case = reduced_case(71, &s).unwrap();
        assert_eq!(case.d_q, 2);
        assert!(case.minus.is_empty());
        assert_eq!(case.iota, Some(0));
        assert!(reduced_case(25, &s).is_err());
        assert!(reduced_case(21, &s).is_err());
    }

    #[test]
    fn character_table_invariants() {
        let t = CharacterTable::new(23).unwrap();
        for k in 0..22 {
            for l in 0..22 {
                let s: Complex64 = (1..23).map(|x| t.chi(k, x) * t.chi(l, x).conj()).sum();
                let want = if k == l { 22.0 } else { 0.0 };
                assert!((s - want).norm() < 1e-10);
            }
            if k != 0 {
                assert!((t.gauss_sums[k as usize].norm() - 23f64.sqrt()).abs() < 1e-10);
            }
        }
        assert!(CharacterTable::new(21).is_err());
    }

    #[test]
    fn char_side_examples() {
        let s = sig5(&[1, 1, -1]);
        let v = s_eps_char(1, 23, 1, &s).unwrap();
        assert!(v.norm() < 1e-12);
        // Characters with χ(2) = 1 and χ(−1) = 1 mod 7 exist; none has χ(2) = −1,
        // since 2 has odd order 3.
        let s = EpsilonSignature::new(2, &[-1]).unwrap();
        assert!(s_eps_char(1, 7, 1, &s).unwrap().norm() < 1e-15);
        assert!(s_eps_char(1, 7, -1, &s).unwrap().norm() < 1e-15);
    }

    #[test]
    fn sawtooth_sums() {
        let s = sig5(&[1, 1, -1]);
        for a in 1..23i64 {
            for q in [2u64, 3, 5] {
                let x = s_tilde_q(a, 23, q, &s).unwrap();
                let y = s_tilde_q(-a, 23, q, &s).unwrap();
                assert!((x - y.conj()).norm() < 1e-12);
                for eps in [1i8, -1] {
                    let chars = s_eps_q_char(a, 23, eps, q, &s).unwrap();
                    assert!((chars - (x + y * eps as f64)).norm() < 1e-10, "a={a} q={q} eps={eps}");
                }
            }
            // All-QRs regime: only the principal character survives for p1 = 5.
            let x = s_tilde_q(a, 23, 5, &s).unwrap();
            assert!((2.0 * x.re + 1.0 / 22.0).abs() < 1e-12);
        }
        // Two negative entries: s̃ is purely imaginary.
        let s = sig5(&[-1, 1, -1]);
        for q in find_cusp_points(&s, 200).into_iter().map(|e| e.0) {
            for p in [2u64, 3, 5] {
                assert!(s_tilde_q(1, q, p, &s).unwrap().re.abs() < 1e-12, "q={q} p={p}");
            }
        }
    }

    #[test]
    fn constants_at_23() {
        let s = sig5(&[1, 1, -1]);
        assert_eq!(find_cusp_points(&s, 30), vec![(23, true)]);
        for a in 1..23 {
            let r = cusp_constants(a, 23, &s).unwrap();
            assert_eq!(r.classification, Classification::Cusp, "a={a}");
            assert!(r.delta.unwrap().abs() < 0.5);
            assert!(r.s_star.re.abs() < 1e-12);
        }
    }

    #[test]
    fn cusp_search_examples() {
        let s = sig5(&[1, 1, 1]);
        assert!(find_cusp_points(&s, 100).iter().any(|e| e.0 == 71));
        assert!(find_cusp_points(&s, 6).is_empty());
    }
}
