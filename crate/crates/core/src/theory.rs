//! Analytical side: relative entropy, the `q(p)` and `rho` root finders, the
//! minimum population size estimate, exact pair distributions of
//! FIHC-optimized blocks, and the pairwise-independence (undecidability)
//! classification.
//!
//! Every exact quantity is a big-integer rational. Floating point only enters
//! the population-size estimate, which is a ratio of logarithms.

use std::fmt;
use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{MonotonicityProfile, UnitationFunction};

/// Bisection stops once the bracket is at most this wide.
pub const BISECTION_TOLERANCE: f64 = 1.0 / (1u64 << 50) as f64;

/// Kullback-Leibler divergence `H_q(p)` of `(p, 1-p)` from `(q, 1-q)`.
pub fn relative_entropy(p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::Parameter(format!(
            "relative entropy needs p, q in [0, 1], got p = {p}, q = {q}"
        )));
    }
    let term = |a: f64, b: f64| -> Result<f64> {
        if a == 0.0 {
            Ok(0.0)
        } else if b == 0.0 {
            Err(Error::InfiniteDivergence { p, q })
        } else {
            Ok(a * (a / b).ln())
        }
    };
    Ok(term(p, q)? + term(1.0 - p, 1.0 - q)?)
}

/// Entropy of `(q, 1/2 - q, 1/2 - q, q)`.
pub fn symmetric_pair_entropy(q: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    2.0 * h(q) + 2.0 * h(0.5 - q)
}

fn bisect(mut lo: f64, mut hi: f64, mut go_right: impl FnMut(f64) -> bool) -> f64 {
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if go_right(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The unique `q in (1/4, p)` with `H(P) - 2 H(Q) + log 4 = 0`, where `P` and
/// `Q` are the symmetric pair distributions built on `p` and `q`.
pub fn q_of_p(p: f64) -> Result<f64> {
    if !(p > 0.25 && p < 0.5) {
        return Err(Error::Parameter(format!("q(p) needs 1/4 < p < 1/2, got {p}")));
    }
    let target = symmetric_pair_entropy(p) + 4f64.ln();
    // Residual is increasing in q on [1/4, p].
    Ok(bisect(0.25, p, |q| target - 2.0 * symmetric_pair_entropy(q) < 0.0))
}

/// Residual `H_{2q~}(2 rho) - H_{1/4}(q(rho))`, decreasing in `rho`.
pub fn rho_residual(q_tilde: f64, rho: f64) -> Result<f64> {
    let q = q_of_p(rho)?;
    Ok(relative_entropy(2.0 * rho, 2.0 * q_tilde)? - relative_entropy(q, 0.25)?)
}

fn check_q_tilde(q_tilde: f64) -> Result<()> {
    if q_tilde <= 0.25 {
        return Err(Error::Undecidable);
    }
    if !(q_tilde <= 0.5) {
        return Err(Error::Parameter(format!("q~ must lie in (1/4, 1/2], got {q_tilde}")));
    }
    Ok(())
}

/// The unique `rho in (1/4, q~)` balancing both Chernoff exponents.
///
/// At `q~ = 1/2` a dependent pair can never look independent, the dependent
/// exponent is infinite and the balance point degenerates to `rho = 1/2`.
pub fn solve_rho(q_tilde: f64) -> Result<f64> {
    check_q_tilde(q_tilde)?;
    if q_tilde == 0.5 {
        return Ok(0.5);
    }
    Ok(bisect(0.25, q_tilde, |rho| {
        rho_residual(q_tilde, rho).expect("rho inside (1/4, q~)") > 0.0
    }))
}

/// Number of union-bound terms: `r C(k,2) + 8 C(r,2) k^2`.
pub fn pair_budget(k: usize, r: usize) -> u128 {
    let (k, r) = (k as u128, r as u128);
    r * (k * (k - 1) / 2) + 8 * (r * (r.saturating_sub(1)) / 2) * k * k
}

/// Intermediate and final values of the population-size estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub q_tilde: f64,
    /// True when `q~` is the probability of `01` rather than `00`.
    pub q_tilde_from_01: bool,
    pub rho: f64,
    pub q_of_rho: f64,
    pub exponent: f64,
    pub pair_budget: u128,
    /// Tolerated failure probability.
    pub alpha: f64,
    pub s_min: u64,
}

/// Population size at which the DSM of `r` blocks of order `k` fails to be
/// perfect with probability at most `alpha`, i.e. the smallest `s` with
/// `pair_budget * exp(-s * exponent) <= alpha`.
///
/// `alpha = 0.1` therefore asks for a perfect decomposition in at least 90%
/// of populations, matching the 90th-percentile experiments.
pub fn s_min(q_tilde: f64, k: usize, r: usize, alpha: f64) -> Result<EstimateResult> {
    check_q_tilde(q_tilde)?;
    if k < 2 || r < 1 {
        return Err(Error::Parameter(format!("need k >= 2 and r >= 1, got k = {k}, r = {r}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let rho = solve_rho(q_tilde)?;
    let (q_of_rho, exponent) = if rho == 0.5 {
        (0.5, relative_entropy(0.5, 0.25)?)
    } else {
        (q_of_p(rho)?, relative_entropy(2.0 * rho, 2.0 * q_tilde)?)
    };
    let budget = pair_budget(k, r);
    let s = ((budget as f64 / alpha).ln() / exponent).ceil();
    Ok(EstimateResult {
        q_tilde,
        q_tilde_from_01: false,
        rho,
        q_of_rho,
        exponent,
        pair_budget: budget,
        alpha,
        s_min: (s as u64).max(1),
    })
}

/// Estimate for a symmetric exact distribution.
pub fn s_min_for(dist: &SymmetricPairDistribution, k: usize, r: usize, alpha: f64) -> Result<EstimateResult> {
    let mut est = s_min(dist.to_f64(), k, r, alpha)?;
    est.q_tilde_from_01 = dist.from_01;
    Ok(est)
}

/// Estimate for `r` concatenated copies of `g`. Requires a distribution with
/// `p(00) = p(11)`, which holds for every symmetric `g`.
pub fn estimate_for_function(g: &UnitationFunction, r: usize, alpha: f64) -> Result<EstimateResult> {
    let profile = MonotonicityProfile::extract(g)?;
    let dist = theoretical_distribution(&profile)?;
    let sym = SymmetricPairDistribution::from_theoretical(&dist)?;
    s_min_for(&sym, g.k(), r, alpha)
}

/// `exp(-s H_{2q~}(2t))` and `exp(-s H_{1/4}(u))`: the tail bounds for one
/// dependent and one independent pair at thresholds `t` and `u`.
pub fn chernoff_diagnostics(q_tilde: f64, t: f64, u: f64, s: f64) -> Result<(f64, f64)> {
    if !(0.25 < u && u < t && t < q_tilde && q_tilde <= 0.5) || s < 0.0 {
        return Err(Error::Parameter(format!(
            "need 1/4 < u < t < q~ <= 1/2 and s >= 0, got u = {u}, t = {t}, q~ = {q_tilde}, s = {s}"
        )));
    }
    let dep = if s == 0.0 {
        1.0
    } else {
        match relative_entropy(2.0 * t, 2.0 * q_tilde) {
            Ok(h) => (-s * h).exp(),
            Err(Error::InfiniteDivergence { .. }) => 0.0,
            Err(e) => return Err(e),
        }
    };
    let indep = (-s * relative_entropy(u, 0.25)?).exp();
    Ok((dep, indep))
}

fn rat(n: impl Into<BigInt>, d: impl Into<BigInt>) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn pow2(e: usize) -> BigInt {
    BigInt::one() << e
}

/// Row `m` of Pascal's triangle.
pub fn binomial_row(m: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for i in 0..m {
        let next = &row[i] * BigInt::from(m - i) / BigInt::from(i + 1);
        row.push(next);
    }
    row
}

/// Exact `(q1, q2, q2, q3)` distribution of a dependent gene pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TheoreticalPairDistribution {
    pub q1: BigRational,
    pub q2: BigRational,
    pub q3: BigRational,
}

impl TheoreticalPairDistribution {
    pub fn new(q1: BigRational, q2: BigRational, q3: BigRational) -> Result<Self> {
        let zero = BigRational::zero();
        if q1 < zero || q2 < zero || q3 < zero {
            return Err(Error::Parameter("negative probability".into()));
        }
        if &q1 + &q2 + &q2 + &q3 != BigRational::one() {
            return Err(Error::Parameter("q1 + 2 q2 + q3 != 1".into()));
        }
        Ok(Self { q1, q2, q3 })
    }

    /// Swaps the roles of 0 and 1.
    pub fn mirror(&self) -> Self {
        Self {
            q1: self.q3.clone(),
            q2: self.q2.clone(),
            q3: self.q1.clone(),
        }
    }

    pub fn as_f64(&self) -> [f64; 4] {
        let f = |q: &BigRational| q.to_f64().expect("probability is finite");
        [f(&self.q1), f(&self.q2), f(&self.q2), f(&self.q3)]
    }
}

impl fmt::Display for TheoreticalPairDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.q1, self.q2, self.q2, self.q3)
    }
}

/// `(q~, 1/2 - q~, 1/2 - q~, q~)` with `q~ = max(p(00), p(01)) >= 1/4`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricPairDistribution {
    pub q_tilde: BigRational,
    /// True when the maximum was `p(01)`.
    pub from_01: bool,
}

impl SymmetricPairDistribution {
    /// Canonical form from `p(00)`; `p(01) = 1/2 - p(00)`.
    pub fn from_p00(p00: BigRational) -> Result<Self> {
        let half = rat(1, 2);
        if p00 < BigRational::zero() || p00 > half {
            return Err(Error::Parameter(format!("p(00) = {p00} outside [0, 1/2]")));
        }
        let p01 = &half - &p00;
        Ok(if p01 > p00 {
            Self { q_tilde: p01, from_01: true }
        } else {
            Self { q_tilde: p00, from_01: false }
        })
    }

    pub fn from_theoretical(d: &TheoreticalPairDistribution) -> Result<Self> {
        if d.q1 != d.q3 {
            return Err(Error::Parameter(format!(
                "distribution {d} has p(00) != p(11); the estimate needs a symmetric pair distribution"
            )));
        }
        Self::from_p00(d.q1.clone())
    }

    pub fn to_f64(&self) -> f64 {
        self.q_tilde.to_f64().expect("finite")
    }

    pub fn is_independent(&self) -> bool {
        self.q_tilde == rat(1, 4)
    }
}

/// `q~` for the bimodal function of order `2l`.
pub fn q_tilde_bimodal(l: usize) -> Result<SymmetricPairDistribution> {
    if l == 0 {
        return Err(Error::Parameter("l must be positive".into()));
    }
    // p(01) = l (2^{2l-2} - 1) / ((2l - 1) 2^{2l-1})
    let p01 = rat(
        BigInt::from(l) * (pow2(2 * l - 2) - 1),
        BigInt::from(2 * l - 1) * pow2(2 * l - 1),
    );
    SymmetricPairDistribution::from_p00(rat(1, 2) - p01)
}

/// `q~` for the reverted bimodal function of order `2l`.
pub fn q_tilde_reverted(l: usize) -> Result<SymmetricPairDistribution> {
    if l == 0 {
        return Err(Error::Parameter("l must be positive".into()));
    }
    // p(01) = C(2l-2, l-1) / 2^{2l-1}
    let p01 = rat(binomial_row(2 * l - 2)[l - 1].clone(), pow2(2 * l - 1));
    SymmetricPairDistribution::from_p00(rat(1, 2) - p01)
}

/// Exact distribution of a dependent pair after FIHC for any function with
/// the given monotonicity profile.
pub fn theoretical_distribution(profile: &MonotonicityProfile) -> Result<TheoreticalPairDistribution> {
    let k = profile.k();
    Ok(distribution_with_rows(profile, &binomial_row(k.saturating_sub(1)), &binomial_row(k)))
}

fn distribution_with_rows(
    profile: &MonotonicityProfile,
    row_km1: &[BigInt],
    row_k: &[BigInt],
) -> TheoreticalPairDistribution {
    let k = profile.k();
    let maxima = profile.maxima();
    let minima = profile.minima();
    let mut q1 = BigRational::zero();
    let mut q2 = BigRational::zero();
    if !maxima.is_empty() {
        // Probability mass ending at interior maximum k_i, times 2^{k-1}.
        let mut w1 = BigInt::zero();
        let mut w2 = BigInt::zero();
        for (i, &ki) in maxima.iter().enumerate() {
            let mass: BigInt = row_km1[minima[i]..minima[i + 1]].iter().sum();
            w2 += BigInt::from(ki * (k - ki)) * &mass;
            w1 += BigInt::from((k - ki) * (k - ki - 1)) * &mass;
        }
        let den = pow2(k - 1) * BigInt::from(k * (k - 1));
        q1 = rat(w1, den.clone());
        q2 = rat(w2, den);
    }
    let l0 = minima[0];
    if l0 > 0 {
        // All-zero block reached from below l0 or from l0 going down first.
        let below: BigInt = row_k[..l0].iter().sum();
        q1 += rat(below + &row_km1[l0 - 1], pow2(k));
    }
    let q3 = BigRational::one() - &q1 - &q2 - &q2;
    TheoreticalPairDistribution { q1, q2, q3 }
}

/// True iff the pair is stochastically independent, i.e. `q1 = (q1 + q2)^2`.
pub fn is_sll_undecidable(d: &TheoreticalPairDistribution) -> bool {
    let m = &d.q1 + &d.q2;
    d.q1 == &m * &m
}

/// One row of a profile scan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanEntry {
    pub profile: MonotonicityProfile,
    pub distribution: TheoreticalPairDistribution,
    pub undecidable: bool,
}

/// All profiles of order `k` with exactly `n` interior maxima, ordered by
/// `(maxima, minima)`.
pub fn profiles_with(k: usize, n: usize) -> Vec<MonotonicityProfile> {
    let picks = 2 * n + 1;
    let mut out = Vec::new();
    if picks > k + 1 {
        return out;
    }
    let mut idx: Vec<usize> = (0..picks).collect();
    loop {
        let minima = idx.iter().step_by(2).copied().collect();
        let maxima = idx.iter().skip(1).step_by(2).copied().collect();
        out.push(MonotonicityProfile::new(k, maxima, minima).expect("strictly increasing picks interleave"));
        // Next combination of `picks` values from 0..=k.
        let mut i = picks;
        loop {
            if i == 0 {
                out.sort_by(|a, b| (a.maxima(), a.minima()).cmp(&(b.maxima(), b.minima())));
                return out;
            }
            i -= 1;
            if idx[i] < k + 1 - picks + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..picks {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Every profile with `1..=n_max` interior maxima for each `k`, with its
/// exact distribution. Order: `k`, then `N`, then `(maxima, minima)`.
pub fn scan_profiles(k_range: RangeInclusive<usize>, n_max: usize) -> Vec<ScanEntry> {
    let ks: Vec<usize> = k_range.collect();
    ks.par_iter()
        .map(|&k| {
            let row_km1 = binomial_row(k.saturating_sub(1));
            let row_k = binomial_row(k);
            (1..=n_max)
                .flat_map(|n| profiles_with(k, n))
                .map(|profile| {
                    let distribution = distribution_with_rows(&profile, &row_km1, &row_k);
                    let undecidable = is_sll_undecidable(&distribution);
                    ScanEntry { profile, distribution, undecidable }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// The undecidable subset of [`scan_profiles`].
pub fn scan_undecidable(k_range: RangeInclusive<usize>, n_max: usize) -> Vec<ScanEntry> {
    scan_profiles(k_range, n_max)
        .into_iter()
        .filter(|e| e.undecidable)
        .collect()
}

/// Writes `k,MAX_g,MIN_g,q1,q2,q3,undecidable` rows; sequences are
/// space-separated, probabilities exact fractions.
pub fn write_scan_csv<W: std::io::Write>(entries: &[ScanEntry], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "MAX_g", "MIN_g", "q1", "q2", "q3", "undecidable"])?;
    let join = |xs: &[usize]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    for e in entries {
        w.write_record([
            e.profile.k().to_string(),
            join(e.profile.maxima()),
            join(e.profile.minima()),
            e.distribution.q1.to_string(),
            e.distribution.q2.to_string(),
            e.distribution.q3.to_string(),
            e.undecidable.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
