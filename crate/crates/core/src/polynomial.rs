//! Canonical sparse multivariate polynomials with big-integer coefficients.
//!
//! Terms are kept in strictly decreasing lexicographic order of their
//! exponent vectors, with the comparison following the user-supplied
//! variable order. The zero polynomial has no terms.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exponent of a single variable.
pub type Exponent = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolynomialError {
    #[error("term has {found} exponents but the polynomial has {expected} variables")]
    ArityMismatch { expected: usize, found: usize },
    #[error("the zero polynomial has no degree")]
    UndefinedDegree,
    #[error("variable index {index} out of range for {count} variables")]
    VariableOutOfRange { index: usize, count: usize },
    #[error("split exponent {exponent} must lie in 1..={degree}")]
    SplitOutOfRange { exponent: Exponent, degree: Exponent },
    #[error("operands are over different variable lists")]
    VariableMismatch,
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
}

/// A single monomial `coefficient * x_0^e_0 * ... * x_k^e_k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub coefficient: BigInt,
    pub exponents: Vec<Exponent>,
}

impl Term {
    pub fn new(coefficient: impl Into<BigInt>, exponents: Vec<Exponent>) -> Self {
        Term {
            coefficient: coefficient.into(),
            exponents,
        }
    }

    /// Total degree (sum of all exponents).
    pub fn total_degree(&self) -> u64 {
        self.exponents.iter().map(|&e| u64::from(e)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    variables: Vec<String>,
    terms: Vec<Term>,
}

impl Polynomial {
    /// Builds a canonical polynomial from arbitrary terms: like terms are
    /// merged, zero terms dropped and the remaining terms sorted in
    /// decreasing lexicographic order.
    pub fn canonicalize(
        raw_terms: impl IntoIterator<Item = Term>,
        variables: Vec<String>,
    ) -> Result<Self, PolynomialError> {
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].contains(v) {
                return Err(PolynomialError::DuplicateVariable(v.clone()));
            }
        }
        let mut terms: Vec<Term> = Vec::new();
        for term in raw_terms {
            if term.exponents.len() != variables.len() {
                return Err(PolynomialError::ArityMismatch {
                    expected: variables.len(),
                    found: term.exponents.len(),
                });
            }
            terms.push(term);
        }
        terms.sort_by(|a, b| b.exponents.cmp(&a.exponents));

        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for term in terms {
            match merged.last_mut() {
                Some(last) if last.exponents == term.exponents => {
                    last.coefficient += term.coefficient;
                }
                _ => {
                    // Merging is finished for the previous run of equal monomials.
                    if merged.last().is_some_and(|t| t.coefficient.is_zero()) {
                        merged.pop();
                    }
                    merged.push(term);
                }
            }
        }
        if merged.last().is_some_and(|t| t.coefficient.is_zero()) {
            merged.pop();
        }
        Ok(Polynomial {
            variables,
            terms: merged,
        })
    }

    /// Wraps terms that are already canonical. Only checked in debug builds.
    pub(crate) fn from_canonical_terms(variables: Vec<String>, terms: Vec<Term>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].exponents > w[1].exponents));
        debug_assert!(terms.iter().all(|t| !t.coefficient.is_zero()));
        debug_assert!(terms.iter().all(|t| t.exponents.len() == variables.len()));
        Polynomial { variables, terms }
    }

    pub fn zero(variables: Vec<String>) -> Self {
        Polynomial {
            variables,
            terms: Vec::new(),
        }
    }

    pub fn constant(value: impl Into<BigInt>, variables: Vec<String>) -> Self {
        let value = value.into();
        let arity = variables.len();
        let terms = if value.is_zero() {
            Vec::new()
        } else {
            vec![Term::new(value, vec![0; arity])]
        };
        Polynomial { variables, terms }
    }

    /// Univariate polynomial in `var` from dense coefficients, constant first.
    pub fn univariate_dense<I, C>(var: &str, coefficients: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: Into<BigInt>,
    {
        let terms = coefficients
            .into_iter()
            .enumerate()
            .map(|(k, c)| Term::new(c.into(), vec![k as Exponent]));
        Self::canonicalize(terms, vec![var.to_string()]).expect("single variable")
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Term> {
        self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// The constant value if the polynomial has no variable dependence.
    pub fn as_constant(&self) -> Option<BigInt> {
        match self.terms.as_slice() {
            [] => Some(BigInt::zero()),
            [t] if t.exponents.iter().all(|&e| e == 0) => Some(t.coefficient.clone()),
            _ => None,
        }
    }

    /// Maximum exponent of one variable across all terms.
    pub fn degree(&self, variable_index: usize) -> Result<Exponent, PolynomialError> {
        self.check_variable(variable_index)?;
        self.terms
            .iter()
            .map(|t| t.exponents[variable_index])
            .max()
            .ok_or(PolynomialError::UndefinedDegree)
    }

    /// Writes `self = a * x^e + b` where `x` is the chosen variable, `a`
    /// collects the terms of exponent at least `e` (reduced by `e`) and `b`
    /// the rest.
    pub fn split_at(
        &self,
        variable_index: usize,
        e: Exponent,
    ) -> Result<(Polynomial, Polynomial), PolynomialError> {
        let degree = self.degree(variable_index)?;
        if e == 0 || e > degree {
            return Err(PolynomialError::SplitOutOfRange {
                exponent: e,
                degree,
            });
        }
        let mut high = Vec::new();
        let mut low = Vec::new();
        for term in &self.terms {
            if term.exponents[variable_index] >= e {
                let mut t = term.clone();
                t.exponents[variable_index] -= e;
                high.push(t);
            } else {
                low.push(term.clone());
            }
        }
        // Only the first variable keeps its order under the shift; others
        // need a re-sort.
        let a = Self::canonicalize(high, self.variables.clone())?;
        let b = Polynomial::from_canonical_terms(self.variables.clone(), low);
        Ok((a, b))
    }

    /// Multiplies by `x_var^e`.
    pub fn shift(&self, variable_index: usize, e: Exponent) -> Result<Polynomial, PolynomialError> {
        self.check_variable(variable_index)?;
        let terms = self.terms.iter().map(|t| {
            let mut t = t.clone();
            t.exponents[variable_index] += e;
            t
        });
        Self::canonicalize(terms, self.variables.clone())
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial, PolynomialError> {
        self.check_same_variables(other)?;
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            let (a, b) = (&self.terms[i], &other.terms[j]);
            match a.exponents.cmp(&b.exponents) {
                Ordering::Greater => {
                    out.push(a.clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(b.clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &a.coefficient + &b.coefficient;
                    if !c.is_zero() {
                        out.push(Term::new(c, a.exponents.clone()));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&other.terms[j..]);
        Ok(Polynomial::from_canonical_terms(self.variables.clone(), out))
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial, PolynomialError> {
        self.check_same_variables(other)?;
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let exponents = a
                    .exponents
                    .iter()
                    .zip(&b.exponents)
                    .map(|(x, y)| x + y)
                    .collect();
                raw.push(Term::new(&a.coefficient * &b.coefficient, exponents));
            }
        }
        Self::canonicalize(raw, self.variables.clone())
    }

    /// Term-by-term evaluation at integer values, one per variable.
    pub fn eval_terms(&self, point: &[BigInt]) -> BigInt {
        assert_eq!(point.len(), self.variables.len(), "point arity");
        let mut sum = BigInt::zero();
        for term in &self.terms {
            let mut value = term.coefficient.clone();
            for (x, &e) in point.iter().zip(&term.exponents) {
                value *= num_traits::pow(x.clone(), e as usize);
            }
            sum += value;
        }
        sum
    }

    fn check_variable(&self, index: usize) -> Result<(), PolynomialError> {
        if index < self.variables.len() {
            Ok(())
        } else {
            Err(PolynomialError::VariableOutOfRange {
                index,
                count: self.variables.len(),
            })
        }
    }

    fn check_same_variables(&self, other: &Polynomial) -> Result<(), PolynomialError> {
        if self.variables == other.variables {
            Ok(())
        } else {
            Err(PolynomialError::VariableMismatch)
        }
    }
}

/// Renders in the expanded grammar accepted by the parser, e.g.
/// `3*x^8-x^7+2*x*y^2-1`.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, term) in self.terms.iter().enumerate() {
            let negative = term.coefficient.is_negative();
            if negative {
                f.write_str("-")?;
            } else if i > 0 {
                f.write_str("+")?;
            }
            let magnitude = term.coefficient.abs();
            let mut factors = term
                .exponents
                .iter()
                .zip(&self.variables)
                .filter(|(e, _)| **e > 0)
                .peekable();
            let has_factors = factors.peek().is_some();
            if !magnitude.is_one() || !has_factors {
                write!(f, "{magnitude}")?;
                if has_factors {
                    f.write_str("*")?;
                }
            }
            let mut first = true;
            for (&e, name) in factors {
                if !first {
                    f.write_str("*")?;
                }
                first = false;
                if e == 1 {
                    f.write_str(name)?;
                } else {
                    write!(f, "{name}^{e}")?;
                }
            }
        }
        Ok(())
    }
}
