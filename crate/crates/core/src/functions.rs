//! Unitation-based block functions, their concatenations, and monotonicity
//! profiles.
//!
//! A block function is stored as a dense table `values[u] = g(u)` for
//! `u in 0..=k`. Only the pattern of rises and falls between neighbouring
//! entries matters to a bit-flip hill climber, which is what
//! [`MonotonicityProfile`] captures.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of ones in `bits`.
pub fn unitation(bits: &[bool]) -> usize {
    bits.iter().filter(|&&b| b).count()
}

/// A function `g: {0..k} -> R` given by its value table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitationFunction {
    k: usize,
    name: String,
    values: Vec<f64>,
}

impl UnitationFunction {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Parameter(
                "a unitation function needs at least k = 1 (two values)".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite function value {v}")));
        }
        Ok(Self {
            k: values.len() - 1,
            name: name.into(),
            values,
        })
    }

    /// Loads a function record `{ "k": .., "name": .., "values": [..] }`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: UnitationFunction = serde_json::from_str(text)?;
        if raw.values.len() != raw.k + 1 {
            return Err(Error::Dimension {
                expected: raw.k + 1,
                actual: raw.values.len(),
            });
        }
        Self::new(raw.name, raw.values)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("function record serializes")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn eval(&self, u: usize) -> f64 {
        self.values[u]
    }

    /// Largest value of the table.
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `g'(u) = g(k - u)`.
    pub fn mirror(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            k: self.k,
            name: format!("{}-mirror", self.name),
            values,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..=self.k).all(|i| self.values[i] == self.values[self.k - i])
    }

    /// Builds a function whose rises and falls follow `profile` exactly.
    ///
    /// Every local minimum gets value 0 and every local maximum (including
    /// the boundary ones) gets `2k`; values fall by one per step away from
    /// the nearest maximum.
    pub fn realize(profile: &MonotonicityProfile) -> Self {
        let k = profile.k();
        let peak = 2.0 * k as f64;
        let mut peaks: Vec<usize> = Vec::with_capacity(profile.maxima().len() + 2);
        if profile.has_zero_maximum() {
            peaks.push(0);
        }
        peaks.extend_from_slice(profile.maxima());
        if profile.has_top_maximum() {
            peaks.push(k);
        }
        let minima = profile.minima();
        let values = (0..=k)
            .map(|u| {
                if minima.contains(&u) {
                    0.0
                } else {
                    // Nearest peak not separated from u by a minimum.
                    let d = peaks
                        .iter()
                        .filter(|&&p| {
                            let (lo, hi) = if p < u { (p, u) } else { (u, p) };
                            !minima.iter().any(|&m| lo < m && m < hi)
                        })
                        .map(|&p| p.abs_diff(u))
                        .min()
                        .expect("every non-minimum lies on a slope to some maximum");
                    peak - d as f64
                }
            })
            .collect();
        Self {
            k,
            name: format!("profile-{profile}"),
            values,
        }
    }
}

/// A [`UnitationFunction`] checked to satisfy `g(i) == g(k - i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricUnitationFunction(UnitationFunction);

impl SymmetricUnitationFunction {
    pub fn new(g: UnitationFunction) -> Result<Self> {
        if !g.is_symmetric() {
            return Err(Error::Parameter(format!(
                "function {} is not symmetric (g(i) != g(k-i))",
                g.name()
            )));
        }
        Ok(Self(g))
    }

    pub fn inner(&self) -> &UnitationFunction {
        &self.0
    }

    pub fn into_inner(self) -> UnitationFunction {
        self.0
    }
}

/// `f(x) = sum_b g(u(x[b*k..(b+1)*k]))` over `r` disjoint blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcatenatedProblem {
    g: UnitationFunction,
    r: usize,
}

impl ConcatenatedProblem {
    pub fn new(g: UnitationFunction, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::Parameter("number of blocks r must be positive".into()));
        }
        Ok(Self { g, r })
    }

    pub fn g(&self) -> &UnitationFunction {
        &self.g
    }

    pub fn k(&self) -> usize {
        self.g.k()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.g.k() * self.r
    }

    pub fn block_of(&self, gene: usize) -> usize {
        gene / self.g.k()
    }

    pub fn block_range(&self, block: usize) -> std::ops::Range<usize> {
        let k = self.g.k();
        block * k..(block + 1) * k
    }

    pub fn evaluate(&self, bits: &[bool]) -> Result<f64> {
        if bits.len() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                actual: bits.len(),
            });
        }
        Ok(self.evaluate_unchecked(bits))
    }

    pub(crate) fn evaluate_unchecked(&self, bits: &[bool]) -> f64 {
        bits.chunks_exact(self.g.k())
            .map(|block| self.g.eval(unitation(block)))
            .sum()
    }

    /// Per-block unitations.
    pub fn unitations(&self, bits: &[bool]) -> Vec<usize> {
        bits.chunks_exact(self.g.k()).map(unitation).collect()
    }

    /// Optimum fitness `r * max g`.
    pub fn optimum(&self) -> f64 {
        self.r as f64 * self.g.max_value()
    }

    /// True iff every block sits at a global maximum of `g`.
    pub fn is_optimal(&self, bits: &[bool]) -> bool {
        let best = self.g.max_value();
        bits.chunks_exact(self.g.k())
            .all(|block| self.g.eval(unitation(block)) == best)
    }
}

/// The built-in function families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Trap,
    Bimodal,
    RevertedBimodal,
    NoisedBimodal,
    Ridge2,
    Ridge4,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Trap,
        Family::Bimodal,
        Family::RevertedBimodal,
        Family::NoisedBimodal,
        Family::Ridge2,
        Family::Ridge4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Trap => "trap",
            Family::Bimodal => "bimodal",
            Family::RevertedBimodal => "reverted-bimodal",
            Family::NoisedBimodal => "noised-bimodal",
            Family::Ridge2 => "ridge2",
            Family::Ridge4 => "ridge4",
        }
    }

    /// Value table of the family member of order `k`.
    pub fn build(self, k: usize) -> Result<UnitationFunction> {
        let even = |what: &str| -> Result<usize> {
            if k >= 2 && k % 2 == 0 {
                Ok(k / 2)
            } else {
                Err(Error::Parameter(format!("{what} needs an even k >= 2, got {k}")))
            }
        };
        let values: Vec<f64> = match self {
            Family::Trap => {
                if k == 0 {
                    return Err(Error::Parameter("trap needs k >= 1".into()));
                }
                (0..=k)
                    .map(|u| if u == k { k as f64 } else { (k - u - 1) as f64 })
                    .collect()
            }
            Family::Bimodal => {
                let l = even("bimodal")? as i64;
                (0..=2 * l).map(|u| bimodal(l, u) as f64).collect()
            }
            Family::RevertedBimodal => {
                let l = even("reverted bimodal")? as i64;
                (0..=2 * l)
                    .map(|u| if u == l { (2 * l) as f64 } else { (l - u).abs() as f64 })
                    .collect()
            }
            Family::NoisedBimodal => {
                if k != 10 {
                    return Err(Error::Parameter(format!(
                        "noised bimodal is defined for k = 10 only, got {k}"
                    )));
                }
                (0..=10)
                    .map(|u| (bimodal(5, u) + noise10(u)) as f64)
                    .collect()
            }
            Family::Ridge2 => {
                even("ridge2")?;
                (0..=k)
                    .map(|u| match u {
                        _ if u == k => 2.0,
                        _ if u % 2 == 1 => 0.0,
                        _ => 1.0,
                    })
                    .collect()
            }
            Family::Ridge4 => {
                even("ridge4")?;
                (0..=k)
                    .map(|u| match u {
                        _ if u == k => 3.0,
                        _ if u % 2 == 1 => 1.0,
                        _ if u % 4 == 0 => 2.0,
                        _ => 0.0,
                    })
                    .collect()
            }
        };
        UnitationFunction::new(format!("{}-{k}", self.as_str()), values)
    }
}

fn bimodal(l: i64, u: i64) -> i64 {
    if u == 0 || u == 2 * l {
        l
    } else {
        l - (u - l).abs() - 1
    }
}

fn noise10(u: i64) -> i64 {
    match u {
        5 => -2,
        0 | 3 | 7 | 10 => -1,
        1 | 4 | 6 | 9 => 0,
        2 | 8 => 1,
        _ => unreachable!("noise table covers 0..=10"),
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "trap" => Family::Trap,
            "bimodal" => Family::Bimodal,
            "reverted" | "reverted-bimodal" | "rev-bimodal" | "reverted_bimodal" => {
                Family::RevertedBimodal
            }
            "noised" | "noised-bimodal" | "noised_bimodal" => Family::NoisedBimodal,
            "ridge2" | "ridge-2" | "ridge_2" => Family::Ridge2,
            "ridge4" | "ridge-4" | "ridge_4" => Family::Ridge4,
            other => return Err(Error::Parameter(format!("unknown function family '{other}'"))),
        })
    }
}

/// Looks up a built-in by family name and order.
pub fn builtin(name: &str, k: usize) -> Result<UnitationFunction> {
    name.parse::<Family>()?.build(k)
}

/// Resolves a function name that may carry its order inline, such as
/// `ridge12_4`, `bimodal6`, `trap-5` or `noised-bimodal`. An explicit `k`
/// wins over one embedded in the name when both are given and agree;
/// disagreement is an error.
pub fn resolve_function(name: &str, k: Option<usize>) -> Result<UnitationFunction> {
    let lower = name.to_ascii_lowercase();
    let (family, inline_k) = parse_compact_name(&lower)?;
    let k = match (k, inline_k, family) {
        (Some(a), Some(b), _) if a != b => {
            return Err(Error::Parameter(format!(
                "order {a} conflicts with order {b} in function name '{name}'"
            )))
        }
        (Some(a), _, _) | (None, Some(a), _) => a,
        (None, None, Family::NoisedBimodal) => 10,
        (None, None, _) => {
            return Err(Error::Parameter(format!("function '{name}' needs an order k")))
        }
    };
    family.build(k)
}

fn parse_compact_name(s: &str) -> Result<(Family, Option<usize>)> {
    if let Ok(f) = s.parse::<Family>() {
        return Ok((f, None));
    }
    // ridge<K>_<2|4>
    if let Some(rest) = s.strip_prefix("ridge") {
        let rest = rest.trim_start_matches(['-', '_']);
        if let Some((k, v)) = rest.split_once(['_', '-']) {
            let k: usize = k
                .parse()
                .map_err(|_| Error::Parameter(format!("bad ridge order in '{s}'")))?;
            let fam = match v {
                "2" => Family::Ridge2,
                "4" => Family::Ridge4,
                _ => return Err(Error::Parameter(format!("bad ridge variant in '{s}'"))),
            };
            return Ok((fam, Some(k)));
        }
    }
    let split = s
        .find(|c: char| c.is_ascii_digit())
        .ok_or_else(|| Error::Parameter(format!("unknown function '{s}'")))?;
    let (head, digits) = s.split_at(split);
    let family = head.trim_end_matches(['-', '_']).parse::<Family>()?;
    let k = digits
        .parse::<usize>()
        .map_err(|_| Error::Parameter(format!("bad order in '{s}'")))?;
    Ok((family, Some(k)))
}

/// Local maxima and minima of a block function.
///
/// `maxima` holds the interior maxima `k_1 < .. < k_N` (in `1..k`), `minima`
/// holds all local minima `l_0 < .. < l_N` including boundary ones, and they
/// interleave as `l_{i-1} < k_i < l_i`. A maximum at 0 exists iff `l_0 > 0`,
/// and a maximum at `k` exists iff `l_N < k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotonicityProfile {
    k: usize,
    maxima: Vec<usize>,
    minima: Vec<usize>,
}

impl MonotonicityProfile {
    pub fn new(k: usize, maxima: Vec<usize>, minima: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Profile("k must be positive".into()));
        }
        if minima.len() != maxima.len() + 1 {
            return Err(Error::Profile(format!(
                "{} maxima need {} minima, got {}",
                maxima.len(),
                maxima.len() + 1,
                minima.len()
            )));
        }
        if minima.iter().chain(&maxima).any(|&v| v > k) {
            return Err(Error::Profile(format!("entries must lie in 0..={k}")));
        }
        for (i, &m) in maxima.iter().enumerate() {
            if !(minima[i] < m && m < minima[i + 1]) {
                return Err(Error::Profile(format!(
                    "interleaving violated: need l{} = {} < k{} = {} < l{} = {}",
                    i,
                    minima[i],
                    i + 1,
                    m,
                    i + 1,
                    minima[i + 1]
                )));
            }
        }
        Ok(Self { k, maxima, minima })
    }

    /// Scans the value table for local extrema. Fails on any plateau.
    pub fn extract(g: &UnitationFunction) -> Result<Self> {
        let v = g.values();
        let k = g.k();
        if let Some(at) = (0..k).find(|&u| v[u] == v[u + 1]) {
            return Err(Error::Plateau { at });
        }
        let mut maxima = Vec::new();
        let mut minima = Vec::new();
        for u in 0..=k {
            let below_left = u == 0 || v[u - 1] > v[u];
            let below_right = u == k || v[u + 1] > v[u];
            let above_left = u == 0 || v[u - 1] < v[u];
            let above_right = u == k || v[u + 1] < v[u];
            if below_left && below_right {
                minima.push(u);
            } else if above_left && above_right && u != 0 && u != k {
                maxima.push(u);
            }
        }
        Self::new(k, maxima, minima)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Interior maxima `k_1..k_N`.
    pub fn maxima(&self) -> &[usize] {
        &self.maxima
    }

    /// Minima `l_0..l_N`.
    pub fn minima(&self) -> &[usize] {
        &self.minima
    }

    /// Number of interior maxima, `N`.
    pub fn interior_maxima(&self) -> usize {
        self.maxima.len()
    }

    /// `k_0 = 0` exists.
    pub fn has_zero_maximum(&self) -> bool {
        self.minima[0] > 0
    }

    /// `k_{N+1} = k` exists.
    pub fn has_top_maximum(&self) -> bool {
        *self.minima.last().expect("at least one minimum") < self.k
    }

    /// Profile of `u -> g(k - u)`.
    pub fn mirror(&self) -> Self {
        let flip = |xs: &[usize]| xs.iter().rev().map(|&x| self.k - x).collect::<Vec<_>>();
        Self {
            k: self.k,
            maxima: flip(&self.maxima),
            minima: flip(&self.minima),
        }
    }

    pub fn is_mirror_symmetric(&self) -> bool {
        *self == self.mirror()
    }

    /// Loads `{ "k", "maxima", "minima" }`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MonotonicityProfile = serde_json::from_str(text)?;
        Self::new(raw.k, raw.maxima, raw.minima)
    }
}

impl fmt::Display for MonotonicityProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |xs: &[usize]| {
            xs.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        write!(
            f,
            "k={} MAX=({}) MIN=({})",
            self.k,
            join(&self.maxima),
            join(&self.minima)
        )
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn sharp_table() -> impl Strategy<Value = Vec<f64>> {
        (2usize..14).prop_flat_map(|k| {
            proptest::collection::vec(prop_oneof![Just(-1.0), Just(1.0)], k).prop_map(|steps| {
                let mut v = vec![0.0];
                for s in steps {
                    let last = *v.last().unwrap();
                    v.push(last + s);
                }
                v
            })
        })
    }

    proptest! {
        #[test]
        fn mirror_profiles_are_mirrored(half in proptest::collection::vec(-5i32..5, 2..8)) {
            // Symmetric table from a random left half with sharp steps.
            let mut left: Vec<f64> = Vec::new();
            let mut acc = 0.0;
            for h in &half {
                acc += if *h >= 0 { 1.0 + *h as f64 } else { *h as f64 - 1.0 };
                left.push(acc);
            }
            let mut values = left.clone();
            values.extend(left.iter().rev().skip(1));
            let g = UnitationFunction::new("sym", values).unwrap();
            prop_assume!(g.is_symmetric());
            let p = MonotonicityProfile::extract(&g).unwrap();
            let pm = MonotonicityProfile::extract(&g.mirror()).unwrap();
            prop_assert_eq!(pm, p.mirror());
        }

        #[test]
        fn mirror_commutes_with_extraction(values in sharp_table()) {
            let g = UnitationFunction::new("walk", values).unwrap();
            let p = MonotonicityProfile::extract(&g).unwrap();
            prop_assert_eq!(MonotonicityProfile::extract(&g.mirror()).unwrap(), p.mirror());
            prop_assert_eq!(MonotonicityProfile::extract(&UnitationFunction::realize(&p)).unwrap(), p);
        }

        #[test]
        fn evaluate_is_additive(
            values in proptest::collection::vec(-10.0f64..10.0, 2..8),
            r in 1usize..6,
            seed in any::<u64>(),
        ) {
            let g = UnitationFunction::new("g", values).unwrap();
            let k = g.k();
            let p = ConcatenatedProblem::new(g.clone(), r).unwrap();
            let single = ConcatenatedProblem::new(g, 1).unwrap();
            let bits: Vec<bool> = (0..k * r).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
            let total = p.evaluate(&bits).unwrap();
            let sum: f64 = bits.chunks(k).map(|b| single.evaluate(b).unwrap()).sum();
            prop_assert_eq!(total, sum);
        }
    }
}
