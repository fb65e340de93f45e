//! Polynomial evaluation compiler.
//!
//! Polynomials are split recursively according to a [`FunctionScheme`]
//! (Hörner, Estrin, Balanced, ...) into an [`EvaluationTree`], compiled
//! into a flat [`CompiledProgram`] and then evaluated over any
//! [`RingDomain`]: big integers, floats, intervals or polynomials.
//!
//! ```
//! use num_bigint::BigInt;
//! use polyeval::{build, compile, parse_polynomial, FunctionScheme, IntegerDomain};
//!
//! let p = parse_polynomial("3*x^8-x^7+2*x^6+x^5-4*x^4+9*x^3-3*x^2-2*x+1", None).unwrap();
//! let scheme: FunctionScheme = "balanced".parse().unwrap();
//! let program = compile(&build(&p, &scheme, 0).unwrap());
//! let value = program.evaluate(IntegerDomain, &[BigInt::from(2)]).unwrap();
//! assert_eq!(value, BigInt::from(793));
//! ```

pub mod bench;
pub mod eval;
pub mod numeric;
pub mod parser;
pub mod polynomial;
pub mod powers;
pub mod scheme;
pub mod tree;

pub use eval::{compile, CompiledProgram, EvalError, Evaluator, Session};
pub use numeric::{
    CountingDomain, FloatDomain, IntegerDomain, Interval, IntervalDomain, PolynomialDomain, RingDomain,
};
pub use parser::{parse_point, parse_polynomial, DomainTag, Literal, ParseError, PointAssignment};
pub use polynomial::{Exponent, Polynomial, PolynomialError, Term};
pub use powers::{build_power_table, required_exponents, ExponentSet, PowerTable};
pub use scheme::{Builtin, FunctionScheme, SchemeError};
pub use tree::{build, build_multivariate, reference_eval, EvaluationTree, TreeError};
