//! Compiled evaluation: a flat walk over the nodes in topological order
//! using a small register file indexed by lazy height.
//!
//! For each record `(c, d, h)` the walk computes `v = (m[h] + c) * x^d`,
//! clears `m[h]`, and adds `v` into the parent's register. The root is the
//! last record and yields the result.

use std::thread;

use num_bigint::BigInt;
use thiserror::Error;

use crate::numeric::RingDomain;
use crate::polynomial::Exponent;
use crate::powers::{build_power_table, required_exponents, ExponentSet, PowerTable};
use crate::tree::{Coefficient, EvaluationTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("point has {found} values but the program has {expected} variables")]
    PointArity { expected: usize, found: usize },
    #[error("register {slot} misused at record {record}: {detail}")]
    RegisterViolation {
        record: usize,
        slot: usize,
        detail: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompiledCoefficient {
    Scalar(BigInt),
    Nested(Block),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub coefficient: CompiledCoefficient,
    /// Index into the exponent list of the block's variable; `None` for `d = 0`.
    pub power_slot: Option<usize>,
    pub lazy_slot: usize,
    pub parent: Option<usize>,
    /// Register of the parent, i.e. its lazy height.
    pub parent_slot: Option<usize>,
    pub has_children: bool,
}

/// The records of one tree, over one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    variable: usize,
    records: Vec<Record>,
    register_count: usize,
    root_children: Vec<usize>,
}

impl Block {
    fn compile(tree: &EvaluationTree, exponents: &[ExponentSet]) -> Block {
        let var = tree.variable();
        let records: Vec<Record> = tree
            .nodes()
            .iter()
            .map(|node| {
                let coefficient = match node.coefficient() {
                    Coefficient::Scalar(c) => CompiledCoefficient::Scalar(c.clone()),
                    Coefficient::Nested(t) => CompiledCoefficient::Nested(Block::compile(t, exponents)),
                };
                let d = node.partial_degree();
                Record {
                    coefficient,
                    power_slot: (d > 0).then(|| {
                        exponents[var].slot(d).expect("exponent list covers the tree")
                    }),
                    lazy_slot: node.lazy_height() as usize,
                    parent: node.parent(),
                    parent_slot: node.parent().map(|p| tree.nodes()[p].lazy_height() as usize),
                    has_children: !node.children().is_empty(),
                }
            })
            .collect();
        let register_count = 1 + records.iter().map(|r| r.lazy_slot).max().unwrap_or(0);
        Block {
            variable: var,
            records,
            register_count,
            root_children: tree.root().children().to_vec(),
        }
    }

    pub fn variable(&self) -> usize {
        self.variable
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn register_count(&self) -> usize {
        self.register_count
    }

    fn for_each_block<'a>(&'a self, f: &mut impl FnMut(&'a Block)) {
        f(self);
        for r in &self.records {
            if let CompiledCoefficient::Nested(b) = &r.coefficient {
                b.for_each_block(f);
            }
        }
    }
}

/// Immutable, domain-independent evaluation artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledProgram {
    variables: Vec<String>,
    exponents: Vec<ExponentSet>,
    root: Block,
}

/// Lays the tree out as records. Exponent lists are per variable, shared by
/// every (nested) tree over that variable.
pub fn compile(tree: &EvaluationTree) -> CompiledProgram {
    let variables = tree.variables().to_vec();
    let mut exponents = vec![ExponentSet::default(); variables.len().max(1)];
    tree.for_each_tree(&mut |t| {
        let var = t.variable();
        exponents[var] = exponents[var].union(&required_exponents(t));
    });
    exponents.truncate(variables.len());
    let root = Block::compile(tree, &exponents);
    CompiledProgram {
        variables,
        exponents,
        root,
    }
}

impl CompiledProgram {
    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Exponents whose powers are needed, per variable.
    pub fn exponents(&self) -> &[ExponentSet] {
        &self.exponents
    }

    pub fn root_block(&self) -> &Block {
        &self.root
    }

    pub fn records(&self) -> &[Record] {
        &self.root.records
    }

    /// Registers needed by the outermost block.
    pub fn register_count(&self) -> usize {
        self.root.register_count
    }

    /// Injects the coefficients into `domain` once, for repeated evaluation.
    pub fn prepare<D: RingDomain>(&self, domain: D) -> Evaluator<'_, D> {
        let coefficients = Prepared::new(&self.root, &domain);
        Evaluator {
            program: self,
            domain,
            coefficients,
        }
    }

    pub fn evaluate<D: RingDomain>(&self, domain: D, point: &[D::Value]) -> Result<D::Value, EvalError> {
        self.prepare(domain).evaluate(point)
    }
}

struct Prepared<V> {
    coefficients: Vec<PreparedCoefficient<V>>,
}

enum PreparedCoefficient<V> {
    Value(V),
    Nested(Prepared<V>),
}

impl<V> Prepared<V> {
    fn new<D: RingDomain<Value = V>>(block: &Block, domain: &D) -> Self {
        let coefficients = block
            .records
            .iter()
            .map(|r| match &r.coefficient {
                CompiledCoefficient::Scalar(c) => PreparedCoefficient::Value(domain.from_integer(c)),
                CompiledCoefficient::Nested(b) => PreparedCoefficient::Nested(Prepared::new(b, domain)),
            })
            .collect();
        Prepared { coefficients }
    }
}

/// A program bound to a domain.
pub struct Evaluator<'p, D: RingDomain> {
    program: &'p CompiledProgram,
    domain: D,
    coefficients: Prepared<D::Value>,
}

impl<'p, D: RingDomain> Evaluator<'p, D> {
    pub fn domain(&self) -> &D {
        &self.domain
    }

    pub fn program(&self) -> &'p CompiledProgram {
        self.program
    }

    /// Builds the power tables for a point.
    pub fn session(&self, point: &[D::Value]) -> Result<Session<'_, 'p, D>, EvalError> {
        let expected = self.program.variables.len();
        if point.len() != expected {
            return Err(EvalError::PointArity {
                expected,
                found: point.len(),
            });
        }
        let tables = point
            .iter()
            .zip(&self.program.exponents)
            .map(|(x, set)| build_power_table(x, set, &self.domain))
            .collect();
        Ok(Session {
            evaluator: self,
            tables,
        })
    }

    pub fn evaluate(&self, point: &[D::Value]) -> Result<D::Value, EvalError> {
        Ok(self.session(point)?.evaluate())
    }

    pub fn evaluate_parallel(&self, point: &[D::Value], workers: usize) -> Result<D::Value, EvalError> {
        Ok(self.session(point)?.evaluate_parallel(workers))
    }

    /// Like [`Evaluator::evaluate`] but tracks register ownership and fails
    /// on any read of a foreign value or a register left dirty.
    pub fn evaluate_checked(&self, point: &[D::Value]) -> Result<D::Value, EvalError> {
        self.session(point)?.evaluate_checked()
    }
}

/// An evaluator together with the power tables of one point.
pub struct Session<'e, 'p, D: RingDomain> {
    evaluator: &'e Evaluator<'p, D>,
    tables: Vec<PowerTable<D::Value>>,
}

impl<D: RingDomain> Session<'_, '_, D> {
    pub fn power_tables(&self) -> &[PowerTable<D::Value>] {
        &self.tables
    }

    pub fn evaluate(&self) -> D::Value {
        let root = &self.evaluator.program.root;
        let walker = self.walker();
        let mut m = vec![walker.domain.zero(); root.register_count];
        walker
            .walk(root, &self.evaluator.coefficients, &mut m, 0, root.records.len() - 1, &mut NoCheck)
            .expect("unchecked walk cannot fail")
    }

    pub fn evaluate_checked(&self) -> Result<D::Value, EvalError> {
        let root = &self.evaluator.program.root;
        self.walker().walk_full_checked(root, &self.evaluator.coefficients)
    }

    /// Splits the root's children among up to `workers` threads, each with
    /// its own registers, then sums their values in child order and applies
    /// the root. The reduction order equals the sequential one, so results
    /// match [`Session::evaluate`] exactly in every domain.
    pub fn evaluate_parallel(&self, workers: usize) -> D::Value {
        let root = &self.evaluator.program.root;
        let children = &root.root_children;
        if workers <= 1 || children.len() <= 1 {
            return self.evaluate();
        }
        let walker = self.walker();
        let prepared = &self.evaluator.coefficients;

        // Child j owns the records (children[j-1], children[j]].
        let ranges: Vec<(usize, usize)> = children
            .iter()
            .enumerate()
            .map(|(j, &c)| (if j == 0 { 0 } else { children[j - 1] + 1 }, c))
            .collect();
        let groups = partition(&ranges, workers);

        let run_group = |group: &[(usize, usize)]| -> Vec<D::Value> {
            let mut m = vec![walker.domain.zero(); root.register_count];
            group
                .iter()
                .map(|&(lo, hi)| {
                    walker
                        .walk(root, prepared, &mut m, lo, hi, &mut NoCheck)
                        .expect("unchecked walk cannot fail")
                })
                .collect()
        };
        let values: Vec<Vec<D::Value>> = thread::scope(|scope| {
            let handles: Vec<_> = groups[1..]
                .iter()
                .map(|g| scope.spawn(|| run_group(g)))
                .collect();
            let mut out = vec![run_group(groups[0])];
            out.extend(handles.into_iter().map(|h| h.join().expect("worker panicked")));
            out
        });

        let domain = walker.domain;
        let mut acc = domain.zero();
        for v in values.iter().flatten() {
            domain.add_assign(&mut acc, v);
        }
        let last = root.records.len() - 1;
        walker.finish_record(root, prepared, last, acc, &mut NoCheck)
    }

    fn walker(&self) -> Walker<'_, D> {
        Walker {
            domain: &self.evaluator.domain,
            tables: &self.tables,
        }
    }
}

/// Contiguous groups of roughly equal record counts, at most `workers`.
fn partition(ranges: &[(usize, usize)], workers: usize) -> Vec<&[(usize, usize)]> {
    let total: usize = ranges.iter().map(|(lo, hi)| hi - lo + 1).sum();
    let target = total.div_ceil(workers);
    let mut groups = Vec::new();
    let mut start = 0;
    let mut weight = 0;
    for (i, (lo, hi)) in ranges.iter().enumerate() {
        weight += hi - lo + 1;
        if i + 1 == ranges.len() || (weight >= target && groups.len() + 1 < workers) {
            groups.push(&ranges[start..=i]);
            start = i + 1;
            weight = 0;
        }
    }
    groups
}

trait Monitor {
    const CHECKED: bool;

    fn read(&mut self, record: usize, slot: usize) -> Result<(), EvalError>;
    fn write(&mut self, record: usize, parent: usize, slot: usize) -> Result<(), EvalError>;
}

struct NoCheck;

impl Monitor for NoCheck {
    const CHECKED: bool = false;

    #[inline(always)]
    fn read(&mut self, _: usize, _: usize) -> Result<(), EvalError> {
        Ok(())
    }

    #[inline(always)]
    fn write(&mut self, _: usize, _: usize, _: usize) -> Result<(), EvalError> {
        Ok(())
    }
}

/// Which node each register's pending value belongs to.
struct Ownership(Vec<Option<usize>>);

impl Monitor for Ownership {
    const CHECKED: bool = true;

    fn read(&mut self, record: usize, slot: usize) -> Result<(), EvalError> {
        match self.0[slot].take() {
            Some(owner) if owner == record => Ok(()),
            other => Err(EvalError::RegisterViolation {
                record,
                slot,
                detail: format!("expected pending value for {record}, found {other:?}"),
            }),
        }
    }

    fn write(&mut self, record: usize, parent: usize, slot: usize) -> Result<(), EvalError> {
        match self.0[slot] {
            None => {
                self.0[slot] = Some(parent);
                Ok(())
            }
            Some(owner) if owner == parent => Ok(()),
            Some(owner) => Err(EvalError::RegisterViolation {
                record,
                slot,
                detail: format!("writing for {parent} over pending value of {owner}"),
            }),
        }
    }
}

struct Walker<'a, D: RingDomain> {
    domain: &'a D,
    tables: &'a [PowerTable<D::Value>],
}

impl<D: RingDomain> Walker<'_, D> {
    /// Runs records `lo..=hi` and returns the value of record `hi` without
    /// adding it to its parent.
    fn walk(
        &self,
        block: &Block,
        prepared: &Prepared<D::Value>,
        m: &mut [D::Value],
        lo: usize,
        hi: usize,
        monitor: &mut impl Monitor,
    ) -> Result<D::Value, EvalError> {
        for i in lo..hi {
            let record = &block.records[i];
            let start = if record.has_children {
                monitor.read(i, record.lazy_slot)?;
                Some(std::mem::replace(&mut m[record.lazy_slot], self.domain.zero()))
            } else {
                None
            };
            let v = self.apply(block, prepared, i, start, monitor)?;
            let (parent, slot) = (
                record.parent.expect("only the last record is a root"),
                record.parent_slot.expect("non-root records have a parent slot"),
            );
            monitor.write(i, parent, slot)?;
            self.domain.add_assign(&mut m[slot], &v);
        }
        let record = &block.records[hi];
        let start = if record.has_children {
            monitor.read(hi, record.lazy_slot)?;
            Some(std::mem::replace(&mut m[record.lazy_slot], self.domain.zero()))
        } else {
            None
        };
        self.apply(block, prepared, hi, start, monitor)
    }

    /// `(children + c) * x^d` for one record; `children` is `None` for leaves.
    fn apply(
        &self,
        block: &Block,
        prepared: &Prepared<D::Value>,
        i: usize,
        children: Option<D::Value>,
        monitor: &mut impl Monitor,
    ) -> Result<D::Value, EvalError> {
        let record = &block.records[i];
        let nested;
        let c = match (&prepared.coefficients[i], &record.coefficient) {
            (PreparedCoefficient::Value(v), _) => v,
            (PreparedCoefficient::Nested(p), CompiledCoefficient::Nested(b)) => {
                nested = self.walk_nested(b, p, monitor)?;
                &nested
            }
            _ => unreachable!("prepared coefficients mirror the block"),
        };
        let mut v = match children {
            Some(mut acc) => {
                self.domain.add_assign(&mut acc, c);
                acc
            }
            None => c.clone(),
        };
        if let Some(slot) = record.power_slot {
            self.domain.mul_assign(&mut v, self.tables[block.variable].at_slot(slot));
        }
        Ok(v)
    }

    fn finish_record(
        &self,
        block: &Block,
        prepared: &Prepared<D::Value>,
        i: usize,
        children: D::Value,
        monitor: &mut impl Monitor,
    ) -> D::Value {
        self.apply(block, prepared, i, Some(children), monitor)
            .expect("unchecked walk cannot fail")
    }

    fn walk_nested<M: Monitor>(
        &self,
        block: &Block,
        prepared: &Prepared<D::Value>,
        _outer: &mut M,
    ) -> Result<D::Value, EvalError> {
        // Nested blocks get their own register file.
        if M::CHECKED {
            self.walk_full_checked(block, prepared)
        } else {
            let mut m = vec![self.domain.zero(); block.register_count];
            self.walk(block, prepared, &mut m, 0, block.records.len() - 1, &mut NoCheck)
        }
    }

    fn walk_full_checked(&self, block: &Block, prepared: &Prepared<D::Value>) -> Result<D::Value, EvalError> {
        let mut m = vec![self.domain.zero(); block.register_count];
        let mut owners = Ownership(vec![None; block.register_count]);
        let last = block.records.len() - 1;
        let v = self.walk(block, prepared, &mut m, 0, last, &mut owners)?;
        if let Some(slot) = owners.0.iter().position(Option::is_some) {
            return Err(EvalError::RegisterViolation {
                record: last,
                slot,
                detail: "register still holds a pending value after the walk".into(),
            });
        }
        Ok(v)
    }
}

/// Largest partial degree over all blocks, for reporting.
pub fn max_exponent(program: &CompiledProgram) -> Exponent {
    program.exponents.iter().filter_map(ExponentSet::max).max().unwrap_or(0)
}

/// Records in all blocks.
pub fn total_records(program: &CompiledProgram) -> usize {
    let mut n = 0;
    program.root.for_each_block(&mut |b| n += b.records.len());
    n
}
