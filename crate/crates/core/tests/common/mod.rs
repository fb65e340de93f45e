//! Independent oracles and random inputs shared by the integration tests.
//! Nothing here calls into the library's evaluation code.
#![allow(dead_code)]

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Zero};
use polyeval::{Exponent, Polynomial, Term};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const EXAMPLE: &str = "3*x^8-x^7+2*x^6+x^5-4*x^4+9*x^3-3*x^2-2*x+1";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pow_naive<T: Clone + One + std::ops::Mul<Output = T>>(x: &T, e: Exponent) -> T {
    let mut acc = T::one();
    for _ in 0..e {
        acc = acc * x.clone();
    }
    acc
}

/// Sum over terms of `c * x_0^e_0 * ...`, powers by repeated multiplication.
pub fn term_sum(p: &Polynomial, point: &[BigInt]) -> BigInt {
    let mut total = BigInt::zero();
    for t in p.terms() {
        let mut m = t.coefficient.clone();
        for (x, &e) in point.iter().zip(&t.exponents) {
            m *= pow_naive(x, e);
        }
        total += m;
    }
    total
}

/// Exact value of a univariate polynomial at a rational point.
pub fn term_sum_rational(p: &Polynomial, x: &BigRational) -> BigRational {
    let mut total = BigRational::zero();
    for t in p.terms() {
        total += BigRational::from(t.coefficient.clone()) * pow_naive(x, t.exponents[0]);
    }
    total
}

/// Uniform integer in `[-2^bits, 2^bits]`.
pub fn signed_bits(rng: &mut impl Rng, bits: u32) -> BigInt {
    let words = (bits / 32 + 1) as usize;
    let digits: Vec<u32> = (0..words).map(|_| rng.gen()).collect();
    let span = (BigInt::one() << bits) * 2 + 1;
    let raw = BigInt::from_slice(Sign::Plus, &digits) % &span;
    raw - (BigInt::one() << bits)
}

pub fn nonzero(rng: &mut impl Rng, bits: u32) -> BigInt {
    loop {
        let c = signed_bits(rng, bits);
        if !c.is_zero() {
            return c;
        }
    }
}

/// Every coefficient of degrees `0..=degree` nonzero.
pub fn dense(rng: &mut impl Rng, degree: Exponent, bits: u32) -> Polynomial {
    let coefficients: Vec<BigInt> = (0..=degree).map(|_| nonzero(rng, bits)).collect();
    Polynomial::univariate_dense("x", coefficients)
}

/// A handful of random monomials of degree at most `max_degree`.
pub fn sparse(rng: &mut impl Rng, max_degree: Exponent, bits: u32) -> Polynomial {
    let count = rng.gen_range(1..=8);
    let terms = (0..count).map(|_| Term::new(nonzero(rng, bits), vec![rng.gen_range(0..=max_degree)]));
    Polynomial::canonicalize(terms, vec!["x".into()]).unwrap()
}

/// Dense or sparse with equal probability.
pub fn mixed(rng: &mut impl Rng, max_degree: Exponent, bits: u32) -> Polynomial {
    let degree = rng.gen_range(0..=max_degree);
    if rng.gen_bool(0.5) {
        dense(rng, degree, bits)
    } else {
        sparse(rng, max_degree, bits)
    }
}
