//! Brute-force oracles: every joint draw outcome is enumerated explicitly,
//! with per-draw value laws computed from raw box overlaps.

#![allow(dead_code)]

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use stratorder::{ExactDist, ExactFn, ExactPartition, Rational, Scalar};

pub fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn overlap(lo_a: &[Rational], hi_a: &[Rational], lo_b: &[Rational], hi_b: &[Rational]) -> Rational {
    let mut vol = Rational::one();
    for j in 0..lo_a.len() {
        let lo = if lo_a[j] > lo_b[j] { &lo_a[j] } else { &lo_b[j] };
        let hi = if hi_a[j] < hi_b[j] { &hi_a[j] } else { &hi_b[j] };
        if hi <= lo {
            return Rational::zero();
        }
        vol *= hi - lo;
    }
    vol
}

/// Value law of one uniform draw from stratum `i`, as `(value, probability)`.
pub fn draw_law(f: &ExactFn, p: &ExactPartition, i: usize) -> Vec<(Rational, Rational)> {
    let s = &p.strata()[i];
    let mut law: BTreeMap<Rational, Rational> = BTreeMap::new();
    for (cell, v) in f.cells() {
        for b in s.boxes() {
            let w = overlap(cell.lower(), cell.upper(), b.lower(), b.upper());
            if !w.is_zero() {
                *law.entry(v.clone()).or_insert_with(Rational::zero) += w / s.mass().clone();
            }
        }
    }
    law.into_iter().collect()
}

/// Per-draw laws in draw order: stratum `i` contributes `k_i` copies.
pub fn all_draws(f: &ExactFn, p: &ExactPartition) -> Vec<Vec<(Rational, Rational)>> {
    (0..p.len()).flat_map(|i| std::iter::repeat_n(draw_law(f, p, i), p.strata()[i].allocation())).collect()
}

/// Every joint outcome `(values, probability)` of the independent draws.
pub fn joint_outcomes(draws: &[Vec<(Rational, Rational)>]) -> Vec<(Vec<Rational>, Rational)> {
    let mut out = vec![(Vec::new(), Rational::one())];
    for law in draws {
        let mut next = Vec::with_capacity(out.len() * law.len());
        for (vals, pr) in &out {
            for (v, w) in law {
                let mut vs = vals.clone();
                vs.push(v.clone());
                next.push((vs, pr * w));
            }
        }
        out = next;
    }
    out
}

fn tabulate(pairs: impl IntoIterator<Item = (Rational, Rational)>) -> BTreeMap<Rational, Rational> {
    let mut law = BTreeMap::new();
    for (x, w) in pairs {
        *law.entry(x).or_insert_with(Rational::zero) += w;
    }
    law.retain(|_, w| !w.is_zero());
    law
}

pub fn as_map(d: &ExactDist) -> BTreeMap<Rational, Rational> {
    d.iter().map(|(x, w)| (x.clone(), w.clone())).collect()
}

pub fn sup_law(f: &ExactFn, p: &ExactPartition) -> BTreeMap<Rational, Rational> {
    tabulate(joint_outcomes(&all_draws(f, p)).into_iter().map(|(vs, w)| (vs.into_iter().max().expect("n >= 1"), w)))
}

pub fn integral_law(f: &ExactFn, p: &ExactPartition) -> BTreeMap<Rational, Rational> {
    let n = Rational::from_count(p.n());
    tabulate(joint_outcomes(&all_draws(f, p)).into_iter().map(|(vs, w)| (vs.into_iter().sum::<Rational>() / n.clone(), w)))
}

/// Each draw is accepted with probability equal to its value; the estimate
/// is the accepted fraction.
pub fn censored_integral_law(f: &ExactFn, p: &ExactPartition) -> BTreeMap<Rational, Rational> {
    let n = Rational::from_count(p.n());
    let mut pairs = Vec::new();
    for (vs, w) in joint_outcomes(&all_draws(f, p)) {
        let mut counts = vec![w];
        for v in &vs {
            let mut next = vec![Rational::zero(); counts.len() + 1];
            for (c, pr) in counts.iter().enumerate() {
                next[c] += pr * (Rational::one() - v);
                next[c + 1] += pr * v;
            }
            counts = next;
        }
        pairs.extend(counts.into_iter().enumerate().map(|(c, pr)| (Rational::from_count(c) / n.clone(), pr)));
    }
    tabulate(pairs)
}

/// `P(W_CS <= t) = E ∏_j (1 - (v_j - t)_+)`, averaged over joint values.
pub fn censored_sup_cdf(outcomes: &[(Vec<Rational>, Rational)], t: &Rational) -> Rational {
    outcomes
        .iter()
        .map(|(vs, w)| {
            vs.iter().fold(w.clone(), |acc, v| {
                let excess = v - t;
                if excess > Rational::zero() {
                    acc * (Rational::one() - excess)
                } else {
                    acc
                }
            })
        })
        .sum()
}

pub fn mean(law: &BTreeMap<Rational, Rational>) -> Rational {
    law.iter().map(|(x, w)| x * w).sum()
}

pub fn variance(law: &BTreeMap<Rational, Rational>) -> Rational {
    let m = mean(law);
    law.iter().map(|(x, w)| (x - &m) * (x - &m) * w).sum()
}

/// `E[(X - t)_+]`.
pub fn stop_loss(law: &BTreeMap<Rational, Rational>, t: &Rational) -> Rational {
    law.iter().filter(|(x, _)| *x > t).map(|(x, w)| (x - t) * w).sum()
}

/// Convex order by definition on finite supports: equal means and stop-loss
/// dominance at every atom of either law.
pub fn cx_by_stop_loss(lo: &BTreeMap<Rational, Rational>, hi: &BTreeMap<Rational, Rational>) -> bool {
    mean(lo) == mean(hi) && lo.keys().chain(hi.keys()).all(|t| stop_loss(lo, t) <= stop_loss(hi, t))
}

/// Survival dominance at every atom of either law.
pub fn st_by_survival(lo: &BTreeMap<Rational, Rational>, hi: &BTreeMap<Rational, Rational>) -> bool {
    let surv = |law: &BTreeMap<Rational, Rational>, t: &Rational| -> Rational { law.iter().filter(|(x, _)| *x > t).map(|(_, w)| w.clone()).sum() };
    lo.keys().chain(hi.keys()).all(|t| surv(lo, t) <= surv(hi, t))
}

/// Law with atoms `values` and probabilities proportional to `weights`.
pub fn law_from(values: &[i64], weights: &[u32], den: i64) -> ExactDist {
    let total: u32 = weights.iter().sum();
    let pairs = values.iter().zip(weights).map(|(&v, &w)| (q(v, den), q(w as i64, total as i64))).collect();
    ExactDist::from_pairs(pairs).unwrap()
}

/// Mean-preserving contraction: atom `i` moves to the conditional mean of
/// its group `labels[i] % groups`. The result is below `d` in convex order.
pub fn contract(d: &ExactDist, labels: &[usize], groups: usize) -> ExactDist {
    let mut mass = vec![Rational::zero(); groups];
    let mut moment = vec![Rational::zero(); groups];
    for (i, (x, w)) in d.iter().enumerate() {
        let g = labels[i % labels.len()] % groups;
        mass[g] += w;
        moment[g] += x * w;
    }
    let pairs = mass.into_iter().zip(moment).filter(|(m, _)| !m.is_zero()).map(|(m, s)| (s / m.clone(), m)).collect();
    ExactDist::from_pairs(pairs).unwrap()
}

/// Applies T-transforms `(i, j, λ)`: `(x_i, x_j) -> (λx_i + (1-λ)x_j, (1-λ)x_i + λx_j)`.
/// Each step yields a vector majorized by its input.
pub fn t_transforms(x: &[Rational], steps: &[(usize, usize, Rational)]) -> Vec<Rational> {
    let mut y = x.to_vec();
    for (i, j, l) in steps {
        let (i, j) = (i % y.len(), j % y.len());
        let (a, b) = (y[i].clone(), y[j].clone());
        let m = Rational::one() - l;
        y[i] = l * &a + &m * &b;
        y[j] = m * a + l * b;
    }
    y
}
