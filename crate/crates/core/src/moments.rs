//! Complex moments of Gauss paths over modulus families, and the limiting
//! moments of the random model as sums over h-tuples with square H.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::accum::{CompensatedSum, ComplexSum};
use crate::arith::{enumerate_family, primes_up_to, EpsilonSignature, FactorSieve, ModulusFamily};
use crate::atlas::e_minus_one;
use crate::paths::path_eval_many;
use crate::{frac_mul, invalid, Error, Result};

pub const DEFAULT_DEGREE_CAP: u32 = 6;
pub const DEFAULT_TERM_BUDGET: u64 = 100_000_000;

/// Default Hmax by total degree.
pub fn default_hmax(degree: u32) -> u64 {
    match degree {
        0..=2 => 10_000,
        3 => 1_000,
        4 => 300,
        _ => 30,
    }
}

/// Points t_i with exponents: the moment is E ∏ conj(G(t_i))^{m_i} G(t_i)^{n_i}.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentOrder {
    pub t: Vec<f64>,
    pub m: Vec<u32>,
    pub n: Vec<u32>,
}

impl MomentOrder {
    pub fn new(t: Vec<f64>, m: Vec<u32>, n: Vec<u32>) -> Result<Self> {
        Self::with_cap(t, m, n, DEFAULT_DEGREE_CAP)
    }

    pub fn with_cap(t: Vec<f64>, m: Vec<u32>, n: Vec<u32>, cap: u32) -> Result<Self> {
        if t.len() != m.len() || t.len() != n.len() {
            return invalid(format!(
                "order lengths differ: t {}, m {}, n {}",
                t.len(),
                m.len(),
                n.len()
            ));
        }
        if let Some(x) = t.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return invalid(format!("t = {x} outside [0, 1]"));
        }
        let order = Self { t, m, n };
        if order.degree() > cap {
            return invalid(format!("total degree {} exceeds the cap {cap}", order.degree()));
        }
        Ok(order)
    }

    pub fn degree(&self) -> u32 {
        self.m.iter().chain(&self.n).sum()
    }

    /// One (t, conjugated) pair per factor: the n_j plain slots of t_j, then
    /// its m_j conjugated ones.
    fn slots(&self) -> Vec<(f64, bool)> {
        let mut out = Vec::new();
        for j in 0..self.t.len() {
            out.extend(std::iter::repeat_n((self.t[j], false), self.n[j] as usize));
            out.extend(std::iter::repeat_n((self.t[j], true), self.m[j] as usize));
        }
        out
    }

    fn combine(&self, g: &[Complex64]) -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for j in 0..self.t.len() {
            p *= g[j].powu(self.n[j]) * g[j].conj().powu(self.m[j]);
        }
        p
    }
}

/// β(h;t) = (e(ht)−1)/(2πih), and β(0;t) = t.
pub fn beta_coeff(h: i64, t: f64) -> Result<Complex64> {
    if !(0.0..=1.0).contains(&t) {
        return invalid(format!("t = {t} outside [0, 1]"));
    }
    Ok(beta_unchecked(h, t))
}

fn beta_unchecked(h: i64, t: f64) -> Complex64 {
    if h == 0 {
        return Complex64::new(t, 0.0);
    }
    let d = e_minus_one(frac_mul(h as f64, t));
    Complex64::new(d.im, -d.re) / (std::f64::consts::TAU * h as f64)
}

/// One contributing h-tuple.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HTupleTerm {
    pub h: Vec<i64>,
    #[serde(rename = "H")]
    pub big_h: i128,
    pub beta: Complex64,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EmpiricalMoment {
    pub value: Complex64,
    pub roundoff: f64,
    pub count: usize,
}

/// Uniform average over the family of ∏ conj(G(t_i;c))^{m_i} G(t_i;c)^{n_i}.
pub fn empirical_moment(order: &MomentOrder, family: &ModulusFamily) -> Result<EmpiricalMoment> {
    if family.is_empty() {
        return invalid("empirical_moment: empty family");
    }
    let top = *family.members.iter().max().expect("nonempty") as usize;
    let sieve = FactorSieve::new(top);
    let vals = family
        .members
        .par_iter()
        .map(|&c| Ok(order.combine(&path_eval_many(c, &order.t, Some(&sieve))?)))
        .collect::<Result<Vec<Complex64>>>()?;
    let mut acc = ComplexSum::new();
    for v in &vals {
        acc.add(*v);
    }
    let n = vals.len() as f64;
    Ok(EmpiricalMoment {
        value: acc.value() / n,
        roundoff: acc.roundoff() / n,
        count: vals.len(),
    })
}

/// Arithmetic of the slot values a = 1 − h: the squarefree kernel and odd
/// radical of the part that must form a square, the ε-weight of the rest.
struct SlotTables {
    hmax: i64,
    kernel: Vec<u64>,
    rad: Vec<u64>,
    eps: Vec<i8>,
    eta: Vec<f64>,
    smooth: Vec<u64>,
    rough: Vec<u64>,
}

impl SlotTables {
    fn new(hmax: u64, sig: Option<&EpsilonSignature>) -> Self {
        let amax = hmax as usize + 1;
        let sieve = FactorSieve::new(amax);
        let z = sig.map_or(1, |s| s.z()) as usize;
        let (mut kernel, mut rad, mut eps, mut eta) =
            (vec![1u64; amax + 1], vec![1u64; amax + 1], vec![1i8; amax + 1], vec![1.0; amax + 1]);
        for n in 2..=amax {
            let p = sieve.spf(n);
            let m = n / p;
            let pu = p as u64;
            eta[n] = if m % p == 0 || p == 2 { eta[m] } else { eta[m] * pu as f64 / (pu + 1) as f64 };
            if p <= z {
                kernel[n] = kernel[m];
                rad[n] = rad[m];
                eps[n] = eps[m] * sig.and_then(|s| s.get(pu)).unwrap_or(1);
            } else {
                kernel[n] = if kernel[m] % pu == 0 { kernel[m] / pu } else { kernel[m] * pu };
                rad[n] = if p == 2 || rad[m] % pu == 0 { rad[m] } else { rad[m] * pu };
                eps[n] = eps[m];
            }
        }
        let smooth = (1..=amax).filter(|&n| kernel[n] == 1 && rad[n] == 1 && eps[n] != 0);
        let smooth: Vec<u64> = smooth
            .filter(|&n| sieve.factor(n).iter().all(|&(p, _)| p <= z))
            .map(|n| n as u64)
            .collect();
        let rough = (1..=amax)
            .take_while(|f| f * f <= amax)
            .filter(|&f| sieve.factor(f).iter().all(|&(p, _)| p > z))
            .map(|f| f as u64)
            .collect();
        Self {
            hmax: hmax as i64,
            kernel,
            rad,
            eps,
            eta,
            smooth,
            rough,
        }
    }

    fn range(&self) -> impl Iterator<Item = i64> + Clone {
        let h = self.hmax;
        (1 - h..=1 + h).filter(|&a| a != 0)
    }

    fn in_range(&self, a: i64) -> bool {
        a != 0 && (1 - self.hmax..=1 + self.hmax).contains(&a)
    }
}

#[derive(Clone, Copy)]
struct State {
    kernel: u128,
    rad: u128,
    weight: f64,
}

const START: State = State {
    kernel: 1,
    rad: 1,
    weight: 1.0,
};

impl State {
    fn push(self, tab: &SlotTables, a: i64) -> Option<State> {
        let i = a.unsigned_abs() as usize;
        let e = tab.eps[i];
        if e == 0 {
            return None;
        }
        let k = tab.kernel[i] as u128;
        let g = gcd128(self.kernel, k);
        let r = tab.rad[i] as u128;
        let fresh = r / gcd128(self.rad, r);
        Some(State {
            kernel: (self.kernel / g) * (k / g),
            rad: self.rad * fresh,
            weight: self.weight * e as f64 * tab.eta[fresh as usize],
        })
    }
}

fn gcd128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Enumerates every slot tuple (a_1, ..., a_u), a_i = 1 − h_i with |h_i| ≤
/// Hmax, whose square-relevant part multiplies to a square, with its weight
/// ε·η. The last slot (or the last two, from degree 4 on) is generated from
/// the kernel of the prefix instead of being scanned.
struct Enumerator {
    u: usize,
    tab: SlotTables,
    pairs: Option<HashMap<u128, Vec<(i64, i64)>>>,
}

impl Enumerator {
    fn new(u: usize, hmax: u64, sig: Option<&EpsilonSignature>, budget: u64) -> Result<Self> {
        if hmax < 2 {
            return invalid(format!("Hmax = {hmax} < 2"));
        }
        let bits = u as f64 * ((hmax + 1) as f64).log2();
        if bits > 126.0 {
            return Err(Error::Budget(format!(
                "degree {u} with Hmax = {hmax} overflows the exact kernel arithmetic"
            )));
        }
        let width = 2.0 * hmax as f64;
        let head = u.saturating_sub(if u >= 4 { 2 } else { 1 });
        let prefixes = width.powi(head as i32);
        let table = if u >= 4 { width * width } else { 0.0 };
        if prefixes + table > budget as f64 {
            return Err(Error::Budget(format!(
                "degree {u} with Hmax = {hmax} needs ~{:.2e} enumeration steps (budget {budget})",
                prefixes + table
            )));
        }
        let tab = SlotTables::new(hmax, sig);
        let pairs = (u >= 4).then(|| {
            let mut map: HashMap<u128, Vec<(i64, i64)>> = HashMap::new();
            for a in tab.range() {
                for b in tab.range() {
                    let ka = tab.kernel[a.unsigned_abs() as usize] as u128;
                    let kb = tab.kernel[b.unsigned_abs() as usize] as u128;
                    let g = gcd128(ka, kb);
                    map.entry((ka / g) * (kb / g)).or_default().push((a, b));
                }
            }
            map
        });
        let e = Self { u, tab, pairs };
        if u >= 4 {
            let mut leaves = 0u64;
            e.each_prefix(&mut |_, s| {
                leaves += e.pairs.as_ref().unwrap().get(&s.kernel).map_or(0, |v| v.len() as u64);
            });
            if leaves > budget {
                return Err(Error::Budget(format!(
                    "degree {u} with Hmax = {hmax} has {leaves} candidate terms (budget {budget})"
                )));
            }
        }
        Ok(e)
    }

    fn head_len(&self) -> usize {
        self.u.saturating_sub(if self.pairs.is_some() { 2 } else { 1 })
    }

    fn each_prefix(&self, f: &mut dyn FnMut(&[i64], State)) {
        let mut buf = Vec::with_capacity(self.u);
        self.prefix_rec(&mut buf, START, self.head_len(), f);
    }

    fn prefix_rec(&self, buf: &mut Vec<i64>, s: State, depth: usize, f: &mut dyn FnMut(&[i64], State)) {
        if buf.len() == depth {
            f(buf, s);
            return;
        }
        for a in self.tab.range() {
            if let Some(next) = s.push(&self.tab, a) {
                buf.push(a);
                self.prefix_rec(buf, next, depth, f);
                buf.pop();
            }
        }
    }

    /// Completes a prefix to full tuples.
    fn complete(&self, prefix: &[i64], s: State, f: &mut dyn FnMut(&[i64], f64)) {
        let mut buf = prefix.to_vec();
        if let Some(pairs) = &self.pairs {
            for &(a, b) in pairs.get(&s.kernel).map_or(&[][..], |v| v.as_slice()) {
                if let Some(w) = s.push(&self.tab, a).and_then(|x| x.push(&self.tab, b)) {
                    buf.extend([a, b]);
                    f(&buf, w.weight);
                    buf.truncate(prefix.len());
                }
            }
            return;
        }
        let k = s.kernel;
        let amax = (self.tab.hmax + 1) as u128;
        if k > amax {
            return;
        }
        for &sm in &self.tab.smooth {
            let base = sm as u128 * k;
            if base > amax {
                break;
            }
            for &f2 in &self.tab.rough {
                let abs = base * (f2 * f2) as u128;
                if abs > amax {
                    break;
                }
                for a in [abs as i64, -(abs as i64)] {
                    if !self.tab.in_range(a) {
                        continue;
                    }
                    if let Some(w) = s.push(&self.tab, a) {
                        buf.push(a);
                        f(&buf, w.weight);
                        buf.pop();
                    }
                }
            }
        }
    }

    /// Runs `f` over all terms, split by the first slot for parallelism; the
    /// partial results come back in slot order.
    fn map_reduce<T: Send>(
        &self,
        init: impl Fn() -> T + Sync,
        f: impl Fn(&mut T, &[i64], f64) + Sync,
    ) -> Vec<T> {
        if self.head_len() == 0 {
            let mut acc = init();
            self.complete(&[], START, &mut |t, w| f(&mut acc, t, w));
            return vec![acc];
        }
        let firsts: Vec<i64> = self.tab.range().collect();
        firsts
            .par_iter()
            .map(|&a| {
                let mut acc = init();
                if let Some(s) = START.push(&self.tab, a) {
                    let mut buf = vec![a];
                    self.prefix_rec_from(&mut buf, s, &mut |p, st| {
                        self.complete(p, st, &mut |t, w| f(&mut acc, t, w))
                    });
                }
                acc
            })
            .collect()
    }

    fn prefix_rec_from(&self, buf: &mut Vec<i64>, s: State, f: &mut dyn FnMut(&[i64], State)) {
        self.prefix_rec(buf, s, self.head_len(), f);
    }
}

/// All contributing h-tuples for an order, generated from square kernels.
pub fn square_tuples(
    order: &MomentOrder,
    hmax: u64,
    sig: Option<&EpsilonSignature>,
) -> Result<Vec<HTupleTerm>> {
    let slots = order.slots();
    let en = Enumerator::new(slots.len(), hmax, sig, DEFAULT_TERM_BUDGET)?;
    let parts = en.map_reduce(Vec::new, |acc: &mut Vec<HTupleTerm>, a, w| {
        let h: Vec<i64> = a.iter().map(|x| 1 - x).collect();
        acc.push(HTupleTerm {
            big_h: a.iter().map(|&x| x as i128).product(),
            beta: slot_beta(&slots, &h),
            h,
            weight: w,
        })
    });
    Ok(parts.into_iter().flatten().collect())
}

fn slot_beta(slots: &[(f64, bool)], h: &[i64]) -> Complex64 {
    slots
        .iter()
        .zip(h)
        .map(|(&(t, conj), &h)| {
            let b = beta_unchecked(h, t);
            if conj {
                b.conj()
            } else {
                b
            }
        })
        .product()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LimitMoment {
    pub value: Complex64,
    pub error_bound: f64,
    pub roundoff: f64,
    pub terms: u64,
}

/// Σ β(h⃗;t)·η(H) over h-tuples with |h_i| ≤ Hmax and |H| square; with a
/// signature, η_Z and the square condition on the Z-rough part.
pub fn limit_moment(order: &MomentOrder, hmax: u64, sig: Option<&EpsilonSignature>) -> Result<LimitMoment> {
    limit_moment_with_budget(order, hmax, sig, DEFAULT_TERM_BUDGET)
}

pub fn limit_moment_with_budget(
    order: &MomentOrder,
    hmax: u64,
    sig: Option<&EpsilonSignature>,
    budget: u64,
) -> Result<LimitMoment> {
    let slots = order.slots();
    let u = slots.len();
    if u == 0 {
        if hmax < 2 {
            return invalid(format!("Hmax = {hmax} < 2"));
        }
        return Ok(LimitMoment {
            value: Complex64::new(1.0, 0.0),
            error_bound: 0.0,
            roundoff: 0.0,
            terms: 1,
        });
    }
    let en = Enumerator::new(u, hmax, sig, budget)?;
    let off = hmax as i64 - 1;
    let tables: Vec<Vec<Complex64>> = slots
        .iter()
        .map(|&(t, conj)| {
            en.tab
                .range()
                .map(|a| {
                    let b = beta_unchecked(1 - a, t);
                    if conj {
                        b.conj()
                    } else {
                        b
                    }
                })
                .collect()
        })
        .collect();
    // range() skips a = 0, so indices above it shift down by one.
    let idx = |a: i64| (a + off) as usize - usize::from(a > 0);
    let parts = en.map_reduce(
        || (ComplexSum::new(), 0u64),
        |acc, a, w| {
            let mut p = Complex64::new(w, 0.0);
            for (j, &x) in a.iter().enumerate() {
                p *= tables[j][idx(x)];
            }
            acc.0.add(p);
            acc.1 += 1;
        },
    );
    let mut total = ComplexSum::new();
    let mut roundoff = 0.0;
    let mut terms = 0;
    for (s, n) in &parts {
        total.add(s.value());
        roundoff += s.roundoff();
        terms += n;
    }
    Ok(LimitMoment {
        value: total.value(),
        error_bound: tail_bound(u, hmax, sig),
        roundoff: roundoff + total.roundoff(),
        terms,
    })
}

/// Bound on the omitted tuples. Every slot has |β(h;t)| ≤ 1/|1−h| and an
/// omitted tuple has some |1−h| ≥ Hmax, so its product n = ∏|a_i| is at
/// least Hmax. Counting ordered tuples and both signs per slot, the tail is
/// at most 2^u Σ τ_u(n)/n over admissible n ≥ Hmax (n a square, or a
/// Z-smooth number times a Z-rough square), which is the Euler product for
/// the full series minus the enumerated part below Hmax.
pub fn tail_bound(u: usize, hmax: u64, sig: Option<&EpsilonSignature>) -> f64 {
    const PMAX: u64 = 2_000_000;
    let z = sig.map_or(1, |s| s.z());
    let ui = u as i32;
    let mut log_full = CompensatedSum::new();
    for p in primes_up_to(PMAX) {
        let x = 1.0 / p as f64;
        let factor = if p <= z {
            (1.0 - x).powi(-ui)
        } else {
            0.5 * ((1.0 - x).powi(-ui) + (1.0 + x).powi(-ui))
        };
        log_full.add(factor.ln());
    }
    // Beyond PMAX each factor is at most 1 + C(u+1,2)·x²·(1−x)^{−u−2}.
    let x = 1.0 / PMAX as f64;
    log_full.add((u * (u + 1)) as f64 / 2.0 * (1.0 - x).powi(-ui - 2) / PMAX as f64);
    let full = log_full.value().exp();

    let limit = hmax as usize;
    let sieve = FactorSieve::new(limit.max(2));
    let mut partial = CompensatedSum::new();
    for n in 1..limit {
        let fs = sieve.factor(n);
        if fs.iter().any(|&(p, e)| p as u64 > z && e % 2 == 1) {
            continue;
        }
        let tau: f64 = fs.iter().map(|&(_, e)| binomial(e as u64 + u as u64 - 1, u as u64 - 1)).product();
        partial.add(tau / n as f64);
    }
    2f64.powi(ui) * ((full - partial.value()).max(0.0) + 1e-12 * full)
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "Q")]
    pub q: u64,
    pub family_size: usize,
    pub empirical: Complex64,
    pub limit: Complex64,
    pub abs_diff: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub order: MomentOrder,
    #[serde(rename = "Hmax")]
    pub hmax: u64,
    pub signature: Option<EpsilonSignature>,
    pub limit: LimitMoment,
    pub rows: Vec<ConvergenceRow>,
    pub slope: Option<f64>,
}

/// |M_Q − M*| over increasing Q, with the least-squares slope of
/// log|M_Q − M*| against log Q.
pub fn convergence_report(
    order: &MomentOrder,
    q_list: &[u64],
    hmax: u64,
    sig: Option<&EpsilonSignature>,
) -> Result<ConvergenceReport> {
    if q_list.is_empty() || q_list.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("Q list must be nonempty and strictly increasing");
    }
    let limit = limit_moment(order, hmax, sig)?;
    let rows = q_list
        .iter()
        .map(|&q| {
            let fam = enumerate_family(q, sig)?;
            let emp = empirical_moment(order, &fam)?;
            Ok(ConvergenceRow {
                q,
                family_size: fam.len(),
                empirical: emp.value,
                limit: limit.value,
                abs_diff: (emp.value - limit.value).norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport {
        order: order.clone(),
        hmax,
        signature: sig.cloned(),
        limit,
        slope: loglog_slope(&rows),
        rows,
    })
}

fn loglog_slope(rows: &[ConvergenceRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.abs_diff > 0.0)
        .map(|r| ((r.q as f64).ln(), r.abs_diff.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
