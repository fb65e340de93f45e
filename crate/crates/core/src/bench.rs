//! Timing harness: evaluation time of each scheme on random dense
//! big-integer polynomials, normalized by the Balanced scheme.

use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use num_bigint::{BigInt, BigUint, Sign};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::eval::compile;
use crate::numeric::IntegerDomain;
use crate::polynomial::{Exponent, Polynomial};
use crate::scheme::{Builtin, FunctionScheme};
use crate::tree::build;

pub const CSV_HEADER: &str = "scheme,degree,terms,coeff_bits,point_bits,workers,reps,median_ns,ratio_vs_balanced";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark spec: {0}")]
    InvalidSpec(String),
    #[error("schemes disagree on degree {degree}: `{scheme}` differs from balanced")]
    Mismatch { degree: Exponent, scheme: String },
}

/// Degrees to sweep: `start:stop:step` (inclusive), a comma list, or one value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Degrees(Vec<Exponent>);

impl Degrees {
    pub fn list(degrees: Vec<Exponent>) -> Self {
        Degrees(degrees)
    }

    pub fn as_slice(&self) -> &[Exponent] {
        &self.0
    }
}

impl FromStr for Degrees {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad degree spec `{s}` (expected start:stop:step, a list, or a number)");
        let parse = |t: &str| t.trim().parse::<Exponent>().map_err(|_| bad());
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [start, stop, step] = parts.as_slice() else {
                return Err(bad());
            };
            let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
            if step == 0 || start > stop {
                return Err(bad());
            }
            Ok(Degrees((start..=stop).step_by(step as usize).collect()))
        } else {
            s.split(',').map(parse).collect::<Result<_, _>>().map(Degrees)
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub schemes: Vec<FunctionScheme>,
    pub degrees: Degrees,
    pub coeff_bits: u32,
    pub point_bits: u32,
    pub workers: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    /// Also time tree construction, compilation and power tables.
    pub measure_setup: bool,
}

impl BenchSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |m: &str| Err(BenchError::InvalidSpec(m.to_string()));
        if self.repetitions < 3 {
            return fail("repetitions must be at least 3");
        }
        if self.degrees.0.is_empty() {
            return fail("no degrees");
        }
        if self.schemes.is_empty() {
            return fail("no schemes");
        }
        if self.coeff_bits == 0 || self.point_bits == 0 {
            return fail("bit sizes must be at least 1");
        }
        if self.workers.is_empty() || self.workers.contains(&0) {
            return fail("worker counts must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub scheme: String,
    pub degree: Exponent,
    pub term_count: usize,
    pub coeff_bits: u32,
    pub point_bits: u32,
    pub workers: usize,
    pub repetitions: usize,
    pub median_ns: u64,
    pub ratio_vs_balanced: f64,
    pub setup_ns: Option<u64>,
}

/// Uniform in `[0, 2^bits)`.
fn random_bits(rng: &mut impl Rng, bits: u32) -> BigUint {
    let mut bytes = vec![0u8; bits.div_ceil(8) as usize];
    rng.fill(bytes.as_mut_slice());
    let extra = bytes.len() as u32 * 8 - bits;
    if let Some(last) = bytes.last_mut() {
        *last &= 0xff >> extra;
    }
    BigUint::from_bytes_le(&bytes)
}

fn degree_rng(seed: u64, degree: Exponent) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (u64::from(degree)).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Dense polynomial of the given degree with random nonzero coefficients of
/// at most `bits` bits and random signs, plus a positive `point_bits`-bit point.
pub fn random_instance(seed: u64, degree: Exponent, coeff_bits: u32, point_bits: u32) -> (Polynomial, BigInt) {
    let mut rng = degree_rng(seed, degree);
    let coefficients: Vec<BigInt> = (0..=degree)
        .map(|_| loop {
            let magnitude = random_bits(&mut rng, coeff_bits);
            if magnitude != BigUint::default() {
                let sign = if rng.gen::<bool>() { Sign::Minus } else { Sign::Plus };
                break BigInt::from_biguint(sign, magnitude);
            }
        })
        .collect();
    let top = BigUint::from(1u8) << (point_bits - 1);
    let point = BigInt::from(random_bits(&mut rng, point_bits - 1) | top);
    (Polynomial::univariate_dense("x", coefficients), point)
}

fn median(mut samples: Vec<u64>) -> u64 {
    samples.sort_unstable();
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2
    }
}

fn elapsed_ns(start: Instant) -> u64 {
    u64::try_from(start.elapsed().as_nanos()).unwrap_or(u64::MAX).max(1)
}

struct Timing {
    median_ns: u64,
    setup_ns: Option<u64>,
}

fn time_scheme(
    p: &Polynomial,
    point: &BigInt,
    scheme: &FunctionScheme,
    workers: usize,
    spec: &BenchSpec,
) -> Result<(Timing, BigInt), BenchError> {
    let program = compile(&build(p, scheme, 0).map_err(|e| BenchError::InvalidSpec(e.to_string()))?);
    let evaluator = program.prepare(IntegerDomain);
    let point = [point.clone()];
    let session = evaluator.session(&point).expect("univariate point");
    let value = session.evaluate_parallel(workers);

    let samples = (0..spec.repetitions)
        .map(|_| {
            let start = Instant::now();
            let v = session.evaluate_parallel(workers);
            let ns = elapsed_ns(start);
            std::hint::black_box(v);
            ns
        })
        .collect();

    let setup_ns = spec.measure_setup.then(|| {
        let samples = (0..spec.repetitions)
            .map(|_| {
                let start = Instant::now();
                let program = compile(&build(p, scheme, 0).expect("built above"));
                let evaluator = program.prepare(IntegerDomain);
                let session = evaluator.session(&point).expect("univariate point");
                std::hint::black_box(session.power_tables().len());
                elapsed_ns(start)
            })
            .collect();
        median(samples)
    });

    Ok((
        Timing {
            median_ns: median(samples),
            setup_ns,
        },
        value,
    ))
}

/// Runs every (degree, scheme, workers) combination. Before timing, each
/// scheme's result is checked against Balanced on the same instance.
pub fn run_grid(spec: &BenchSpec) -> Result<Vec<BenchRecord>, BenchError> {
    spec.validate()?;
    let balanced = FunctionScheme::builtin(Builtin::Balanced);
    let mut records = Vec::new();
    for &degree in spec.degrees.as_slice() {
        let (p, point) = random_instance(spec.seed, degree, spec.coeff_bits, spec.point_bits);
        let (baseline, expected) = time_scheme(&p, &point, &balanced, 1, spec)?;

        for scheme in &spec.schemes {
            for &workers in &spec.workers {
                let is_baseline = scheme.name() == balanced.name() && workers == 1;
                let timing = if is_baseline {
                    Timing {
                        median_ns: baseline.median_ns,
                        setup_ns: baseline.setup_ns,
                    }
                } else {
                    let (timing, value) = time_scheme(&p, &point, scheme, workers, spec)?;
                    if value != expected {
                        return Err(BenchError::Mismatch {
                            degree,
                            scheme: scheme.name().to_string(),
                        });
                    }
                    timing
                };
                records.push(BenchRecord {
                    scheme: scheme.name().to_string(),
                    degree,
                    term_count: p.term_count(),
                    coeff_bits: spec.coeff_bits,
                    point_bits: spec.point_bits,
                    workers,
                    repetitions: spec.repetitions,
                    median_ns: timing.median_ns,
                    ratio_vs_balanced: timing.median_ns as f64 / baseline.median_ns as f64,
                    setup_ns: timing.setup_ns,
                });
            }
        }
    }
    Ok(records)
}

/// Header plus one row per record, sorted by (degree, scheme, workers).
pub fn write_csv(records: &[BenchRecord], mut out: impl Write) -> io::Result<()> {
    let mut sorted: Vec<&BenchRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (a.degree, &a.scheme, a.workers).cmp(&(b.degree, &b.scheme, b.workers))
    });
    writeln!(out, "{CSV_HEADER}")?;
    for r in sorted {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.4}",
            r.scheme,
            r.degree,
            r.term_count,
            r.coeff_bits,
            r.point_bits,
            r.workers,
            r.repetitions,
            r.median_ns,
            r.ratio_vs_balanced
        )?;
    }
    out.flush()
}
