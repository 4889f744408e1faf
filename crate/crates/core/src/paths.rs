//! Quadratic Gauss paths G(t;c): the polygon through the normalized
//! partial sums g_j of the Gauss sum, its sharp-cutoff variant G̃, and
//! grid sampling.

use num_complex::Complex64;
use serde::Serialize;

use crate::accum::ComplexSum;
use crate::arith::{in_d, jacobi_u, primes_up_to, EpsilonSignature, FactorSieve};
use crate::{e_ratio, invalid, Result};

const RENORM_PERIOD: usize = 1 << 16;

/// Values of a path on the uniform grid t = i/R, i = 0..=R.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathSample {
    pub resolution: usize,
    pub values: Vec<Complex64>,
    pub label: String,
}

impl PathSample {
    pub fn t(&self, i: usize) -> f64 {
        i as f64 / self.resolution as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Accumulation {
    Naive,
    Compensated,
}

/// A point on the polygon: node index j and offset in [0, 1) toward j+1.
#[derive(Clone, Copy, Debug, PartialEq)]
struct NodePos {
    j: usize,
    frac: f64,
}

fn check_modulus(c: u64) -> Result<()> {
    if c < 5 || !in_d(c) {
        return invalid(format!("{c} is not a squarefree modulus = 1 mod 4 (>= 5)"));
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return invalid(format!("t = {t} outside [0, 1]"));
    }
    Ok(())
}

/// Snaps s to the nearest integer when it is within rounding noise of it.
fn snap(s: f64) -> f64 {
    let r = s.round();
    if (s - r).abs() <= 8.0 * f64::EPSILON * s.abs().max(1.0) {
        r
    } else {
        s
    }
}

fn node_pos(c: u64, t: f64) -> NodePos {
    let s = snap((c - 1) as f64 * t);
    let j = (s.floor() as usize).min(c as usize - 1);
    NodePos {
        j,
        frac: (s - j as f64).max(0.0),
    }
}

fn grid_pos(c: u64, i: usize, r: usize) -> NodePos {
    let num = (c - 1) as u128 * i as u128;
    NodePos {
        j: (num / r as u128) as usize,
        frac: (num % r as u128) as f64 / r as f64,
    }
}

/// Streams g_1, ..., g_upto for modulus c to `visit`.
///
/// Characters come from the smallest-prime-factor table when it covers the
/// range, otherwise from the Jacobi algorithm directly. e(m/c) is advanced by
/// rotation and re-anchored exactly every 2^16 steps.
fn walk<F: FnMut(usize, Complex64)>(
    c: u64,
    upto: usize,
    sieve: Option<&FactorSieve>,
    acc: Accumulation,
    mut visit: F,
) {
    let norm = 1.0 / (c as f64).sqrt();
    let step = e_ratio(1, c);
    let mut z = Complex64::new(1.0, 0.0);
    let sieve = sieve.filter(|s| s.limit() >= upto);
    let mut chi: Vec<i8> = Vec::new();
    if sieve.is_some() {
        chi = vec![0; upto + 1];
    }
    let mut naive = Complex64::new(0.0, 0.0);
    let mut comp = ComplexSum::new();
    for m in 1..=upto {
        if m % RENORM_PERIOD == 0 {
            z = e_ratio(m as i128, c);
        } else {
            z *= step;
        }
        let x = match sieve {
            Some(s) => {
                let p = s.spf(m);
                let v = if m == 1 {
                    1
                } else if p == m {
                    jacobi_u(p as u64, c)
                } else {
                    chi[p] * chi[m / p]
                };
                chi[m] = v;
                v
            }
            None => jacobi_u(m as u64, c),
        };
        let g = match x {
            0 => match acc {
                Accumulation::Naive => naive,
                Accumulation::Compensated => comp.value(),
            },
            _ => {
                let term = if x > 0 { z } else { -z };
                match acc {
                    Accumulation::Naive => {
                        naive += term;
                        naive
                    }
                    Accumulation::Compensated => {
                        comp.add(term);
                        comp.value()
                    }
                }
            }
        };
        visit(m, g * norm);
    }
}

/// All partial sums g_0, ..., g_{c−1}.
pub fn gauss_path(c: u64) -> Result<Vec<Complex64>> {
    gauss_path_with(c, Accumulation::Compensated)
}

pub fn gauss_path_with(c: u64, acc: Accumulation) -> Result<Vec<Complex64>> {
    check_modulus(c)?;
    let n = c as usize;
    let sieve = FactorSieve::new(n);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    walk(c, n - 1, Some(&sieve), acc, |m, g| out[m] = g);
    Ok(out)
}

/// Evaluates the path at several polygon positions in one pass.
fn eval_positions(c: u64, pos: &[NodePos], sieve: Option<&FactorSieve>) -> Vec<Complex64> {
    let mut need: Vec<usize> = pos
        .iter()
        .flat_map(|p| [p.j, (p.j + 1).min(c as usize - 1)])
        .collect();
    need.sort_unstable();
    need.dedup();
    let upto = need.last().copied().unwrap_or(0);
    let mut vals = vec![Complex64::new(0.0, 0.0); need.len()];
    let mut k = need.partition_point(|&j| j == 0);
    walk(c, upto, sieve, Accumulation::Compensated, |m, g| {
        if k < need.len() && need[k] == m {
            vals[k] = g;
            k += 1;
        }
    });
    let at = |j: usize| vals[need.binary_search(&j).expect("requested node")];
    pos.iter()
        .map(|p| {
            let a = at(p.j);
            if p.frac == 0.0 {
                a
            } else {
                a + (at(p.j + 1) - a) * p.frac
            }
        })
        .collect()
}

/// G(t;c), linear interpolation of the g_j at the nodes t = j/(c−1).
pub fn path_eval(c: u64, t: f64) -> Result<Complex64> {
    check_modulus(c)?;
    check_t(t)?;
    Ok(eval_positions(c, &[node_pos(c, t)], None)[0])
}

/// G(t_i;c) for several t in a single pass over the partial sums.
pub fn path_eval_many(c: u64, ts: &[f64], sieve: Option<&FactorSieve>) -> Result<Vec<Complex64>> {
    check_modulus(c)?;
    for &t in ts {
        check_t(t)?;
    }
    let pos: Vec<NodePos> = ts.iter().map(|&t| node_pos(c, t)).collect();
    Ok(eval_positions(c, &pos, sieve))
}

/// G̃(t;c): the partial sum over 1 ≤ x ≤ floor((c−1)t), no interpolation.
pub fn tilde_path_eval(c: u64, t: f64) -> Result<Complex64> {
    check_modulus(c)?;
    check_t(t)?;
    let j = node_pos(c, t).j;
    Ok(eval_positions(c, &[NodePos { j, frac: 0.0 }], None)[0])
}

/// The completed form of G̃: c^{−3/2} Σ_h G(1−h, c) Σ_{1≤x≤j} e(hx/c) with
/// the unnormalized Gauss sums G(a, c) = Σ_x (x/c) e(ax/c) summed directly.
#[derive(Clone, Debug)]
pub struct CompletedTilde {
    c: u64,
    roots: Vec<Complex64>,
    gauss: Vec<Complex64>,
}

impl CompletedTilde {
    pub fn new(c: u64) -> Result<Self> {
        check_modulus(c)?;
        let n = c as usize;
        let roots: Vec<Complex64> = (0..n).map(|k| e_ratio(k as i128, c)).collect();
        let chi: Vec<i8> = (0..c).map(|x| jacobi_u(x, c)).collect();
        let gauss = (0..n)
            .map(|h| {
                let a = (1 + n - h) % n;
                let mut s = ComplexSum::new();
                for x in 1..n {
                    if chi[x] != 0 {
                        s.add(roots[a * x % n] * chi[x] as f64);
                    }
                }
                s.value()
            })
            .collect();
        Ok(Self { c, roots, gauss })
    }

    pub fn eval(&self, t: f64) -> Result<Complex64> {
        check_t(t)?;
        let n = self.c as usize;
        let j = node_pos(self.c, t).j;
        let mut total = ComplexSum::new();
        for h in 0..n {
            let mut inner = ComplexSum::new();
            for x in 1..=j {
                inner.add(self.roots[h * x % n]);
            }
            total.add(self.gauss[h] * inner.value());
        }
        Ok(total.value() / (self.c as f64).powf(1.5))
    }
}

pub fn completed_tilde_eval(c: u64, t: f64) -> Result<Complex64> {
    CompletedTilde::new(c)?.eval(t)
}

/// PathSample with values[i] = G(i/R; c).
pub fn path_grid(c: u64, r: usize) -> Result<PathSample> {
    path_grid_with(c, r, None)
}

pub fn path_grid_with(c: u64, r: usize, sieve: Option<&FactorSieve>) -> Result<PathSample> {
    check_modulus(c)?;
    if r == 0 {
        return invalid("grid resolution must be >= 1");
    }
    let pos: Vec<NodePos> = (0..=r).map(|i| grid_pos(c, i, r)).collect();
    Ok(PathSample {
        resolution: r,
        values: eval_positions(c, &pos, sieve),
        label: format!("c={c}"),
    })
}

/// ε_p = (p/c) for every prime p ≤ Z.
pub fn eps_signature(c: u64, z: u64) -> Result<EpsilonSignature> {
    if c % 2 == 0 {
        return invalid(format!("eps_signature: modulus {c} must be odd"));
    }
    let values: Vec<i8> = primes_up_to(z).iter().map(|&p| jacobi_u(p, c)).collect();
    EpsilonSignature::new(z, &values)
}

/// max_i |A_i − B_i| over a common grid.
pub fn sup_distance(a: &PathSample, b: &PathSample) -> Result<f64> {
    if a.resolution != b.resolution || a.values.len() != b.values.len() {
        return invalid(format!(
            "sup_distance: resolutions {} and {} differ",
            a.resolution, b.resolution
        ));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::e;

    fn direct(c: u64, j: u64) -> Complex64 {
        let s: Complex64 = (1..=j)
            .map(|m| e(m as f64 / c as f64) * jacobi_u(m, c) as f64)
            .sum();
        s / (c as f64).sqrt()
    }

    #[test]
    fn partial_sums_match_direct_summation() {
        let g = gauss_path(13).unwrap();
        assert_eq!(g.len(), 13);
        assert_eq!(g[0], Complex64::new(0.0, 0.0));
        assert!((g[1] - e(1.0 / 13.0) / 13f64.sqrt()).norm() < 1e-15);
        assert!((g[12] - 1.0).norm() < 1e-9);
        for c in [13u64, 101, 1001] {
            let g = gauss_path(c).unwrap();
            for j in (0..c).step_by(7) {
                assert!((g[j as usize] - direct(c, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_moduli_and_t() {
        assert!(gauss_path(15).is_err());
        assert!(gauss_path(45).is_err());
        assert!(path_eval(13, 1.5).is_err());
        assert!(tilde_path_eval(13, -0.1).is_err());
    }

    #[test]
    fn path_eval_examples() {
        let g = gauss_path(13).unwrap();
        assert_eq!(path_eval(13, 0.0).unwrap(), Complex64::new(0.0, 0.0));
        assert!((path_eval(13, 1.0).unwrap() - g[12]).norm() < 1e-15);
        assert!((path_eval(13, 1.0 / 24.0).unwrap() - (g[0] + g[1]) / 2.0).norm() < 1e-15);
        for j in 0..=12 {
            let t = j as f64 / 12.0;
            assert!((tilde_path_eval(13, t).unwrap() - g[j]).norm() < 1e-15);
        }
    }

    #[test]
    fn completed_form_small_case() {
        let a = tilde_path_eval(17, 0.3).unwrap();
        let b = completed_tilde_eval(17, 0.3).unwrap();
        assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn grid_examples() {
        let g = gauss_path(13).unwrap();
        let p = path_grid(13, 1).unwrap();
        assert_eq!(p.values.len(), 2);
        assert!((p.values[1] - g[12]).norm() < 1e-15);
        let p = path_grid(13, 12).unwrap();
        for j in 0..=12 {
            assert!((p.values[j] - g[j]).norm() < 1e-15);
        }
        let many = path_eval_many(13, &[0.5, 0.25, 1.0 / 24.0], None).unwrap();
        assert!((many[0] - g[6]).norm() < 1e-15);
        assert!((many[2] - (g[0] + g[1]) / 2.0).norm() < 1e-15);
    }

    #[test]
    fn signature_examples() {
        assert_eq!(eps_signature(13, 5).unwrap().values(), &[-1, 1, -1]);
        assert_eq!(eps_signature(17, 2).unwrap().values(), &[1]);
        assert_eq!(eps_signature(15, 5).unwrap().values(), &[1, 0, 0]);
        assert!(eps_signature(14, 5).is_err());
    }

    #[test]
    fn sup_distance_examples() {
        let a = path_grid(13, 12).unwrap();
        assert_eq!(sup_distance(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b.values.iter_mut().for_each(|v| *v += 1.0);
        assert!((sup_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        let c = path_grid(13, 6).unwrap();
        assert!(sup_distance(&a, &c).is_err());
    }
}
