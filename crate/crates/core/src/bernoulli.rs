//! Distribution of the number of successes among independent, non-identical
//! Bernoulli trials (the Poisson-binomial distribution).
//!
//! Two independent algorithms compute the same distribution:
//!
//! * [`poisson_binomial_recurrence`] fills the dynamic program
//!   `P(i, j) = P(i-1, j-1) * p_j + P(i, j-1) * (1 - p_j)` one trial at a time,
//!   reusing a single row.
//! * [`generating_function`] expands `prod_j (1 - p_j + p_j x)` as a polynomial,
//!   collecting like exponents after each multiplication. The coefficient of
//!   `x^k` is `P(exactly k successes)`.
//!
//! Both are `O(N^2)` and generic over [`Scalar`], so they also run on exact
//! rationals.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Success probabilities of independent trials.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliVector<S> {
    probs: Vec<S>,
}

impl<S: Scalar> BernoulliVector<S> {
    pub fn new(probs: Vec<S>) -> Result<Self> {
        for (i, p) in probs.iter().enumerate() {
            let finite = p.to_f64().is_some_and(f64::is_finite);
            if !finite || *p < S::zero() || *p > S::one() {
                return Err(Error::InvalidArgument(format!(
                    "trial {i} has probability {p:?} outside [0, 1]"
                )));
            }
        }
        Ok(BernoulliVector { probs })
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Probability mass over `0..=N` successes.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution<S> {
    mass: Vec<S>,
}

/// Negative round-off down to this value is clamped to zero.
const NEGATIVE_CLAMP: f64 = -1e-15;

impl<S: Scalar> CountDistribution<S> {
    fn from_kernel(mut mass: Vec<S>) -> Self {
        let floor: S = lit(NEGATIVE_CLAMP);
        for m in mass.iter_mut() {
            if *m < S::zero() {
                assert!(
                    *m >= floor,
                    "internal consistency: negative probability mass {m:?}"
                );
                *m = S::zero();
            }
        }
        CountDistribution { mass }
    }

    /// `mass()[k]` is the probability of exactly `k` successes.
    pub fn mass(&self) -> &[S] {
        &self.mass
    }

    pub fn into_mass(self) -> Vec<S> {
        self.mass
    }

    /// Number of trials `N`; the distribution has `N + 1` entries.
    pub fn trials(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn prob(&self, k: usize) -> S {
        self.mass.get(k).cloned().unwrap_or_else(S::zero)
    }

    /// `P(count <= k)`.
    pub fn cdf(&self, k: usize) -> S {
        self.mass
            .iter()
            .take(k.saturating_add(1))
            .fold(S::zero(), |acc, m| acc + m.clone())
    }

    pub fn total(&self) -> S {
        self.mass.iter().fold(S::zero(), |acc, m| acc + m.clone())
    }
}

/// Which algorithm computes count distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    /// Poisson-binomial recurrence (production default).
    #[default]
    Recurrence,
    /// Iterative generating-function expansion.
    GeneratingFunction,
}

impl Kernel {
    pub fn count_distribution<S: Scalar>(self, p: &BernoulliVector<S>) -> CountDistribution<S> {
        match self {
            Kernel::Recurrence => poisson_binomial_recurrence(p),
            Kernel::GeneratingFunction => generating_function(p),
        }
    }
}

/// Poisson-binomial recurrence with a single reused row.
pub fn poisson_binomial_recurrence<S: Scalar>(p: &BernoulliVector<S>) -> CountDistribution<S> {
    let n = p.len();
    let mut row = vec![S::zero(); n + 1];
    row[0] = S::one();
    for (j, pj) in p.probs().iter().enumerate() {
        let qj = S::one() - pj.clone();
        // Descending so row[i - 1] still holds the previous trial's value.
        for i in (1..=j + 1).rev() {
            row[i] = row[i - 1].clone() * pj.clone() + row[i].clone() * qj.clone();
        }
        row[0] = row[0].clone() * qj;
    }
    CountDistribution::from_kernel(row)
}

/// A polynomial stored as `(exponent, coefficient)` terms.
#[derive(Debug, Clone)]
struct Polynomial<S> {
    terms: Vec<(usize, S)>,
}

impl<S: Scalar> Polynomial<S> {
    fn one() -> Self {
        Polynomial {
            terms: vec![(0, S::one())],
        }
    }

    /// `(1 - p) + p x`
    fn trial(p: &S) -> Self {
        Polynomial {
            terms: vec![(0, S::one() - p.clone()), (1, p.clone())],
        }
    }

    /// Multiplies out every pair of terms, then unifies like exponents.
    fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                terms.push((ea + eb, ca.clone() * cb.clone()));
            }
        }
        terms.sort_by_key(|(e, _)| *e);
        let mut unified: Vec<(usize, S)> = Vec::with_capacity(terms.len() / 2 + 1);
        for (e, c) in terms {
            match unified.last_mut() {
                Some((last, acc)) if *last == e => *acc = acc.clone() + c,
                _ => unified.push((e, c)),
            }
        }
        Polynomial { terms: unified }
    }

    fn into_coefficients(self, degree: usize) -> Vec<S> {
        let mut out = vec![S::zero(); degree + 1];
        for (e, c) in self.terms {
            out[e] = c;
        }
        out
    }
}

/// Generating-function expansion `F^k = F^(k-1) * ((1 - p_k) + p_k x)`.
pub fn generating_function<S: Scalar>(p: &BernoulliVector<S>) -> CountDistribution<S> {
    let expanded = p
        .probs()
        .iter()
        .fold(Polynomial::one(), |acc, pk| acc.mul(&Polynomial::trial(pk)));
    CountDistribution::from_kernel(expanded.into_coefficients(p.len()))
}
