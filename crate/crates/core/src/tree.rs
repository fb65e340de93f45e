//! Evaluation trees.
//!
//! A tree for `p` has one node per term. Node `i` holds the `i`-th term in
//! decreasing order, so children always precede their parent and the root
//! (the lowest term) comes last. A node evaluates to
//! `(c + sum of children) * x^d` where `d` is its partial degree; partial
//! degrees along a root path add up to the degree of the node's monomial.

use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::numeric::RingDomain;
use crate::polynomial::{Exponent, Polynomial, PolynomialError, Term};
use crate::scheme::FunctionScheme;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("scheme `{scheme}` returned split {split} for degree {k}, expected 1..={k}")]
    InvalidSplit {
        scheme: String,
        k: Exponent,
        split: Exponent,
    },
    #[error("expected {expected} schemes (one per variable), got {found}")]
    SchemeCount { expected: usize, found: usize },
    #[error("polynomial depends on variables other than `{0}`")]
    NotUnivariate(String),
    #[error(transparent)]
    Polynomial(#[from] PolynomialError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Scalar(BigInt),
    /// A tree over a later variable.
    Nested(Box<EvaluationTree>),
}

impl Coefficient {
    fn render(&self) -> String {
        match self {
            Coefficient::Scalar(c) => c.to_string(),
            Coefficient::Nested(t) => t.to_polynomial().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    coefficient: Coefficient,
    partial_degree: Exponent,
    children: Vec<usize>,
    parent: Option<usize>,
    lazy_height: u32,
}

impl TreeNode {
    pub fn coefficient(&self) -> &Coefficient {
        &self.coefficient
    }

    pub fn partial_degree(&self) -> Exponent {
        self.partial_degree
    }

    /// Child indices, greatest term first.
    pub fn children(&self) -> &[usize] {
        &self.children
    }

    pub fn parent(&self) -> Option<usize> {
        self.parent
    }

    pub fn lazy_height(&self) -> u32 {
        self.lazy_height
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationTree {
    variables: Arc<Vec<String>>,
    variable: usize,
    nodes: Vec<TreeNode>,
}

/// Builds the tree of `p` seen as a univariate polynomial in one variable.
pub fn build(
    p: &Polynomial,
    scheme: &FunctionScheme,
    variable_index: usize,
) -> Result<EvaluationTree, TreeError> {
    let count = p.variables().len();
    if variable_index >= count {
        return Err(PolynomialError::VariableOutOfRange {
            index: variable_index,
            count,
        }
        .into());
    }
    let mut level: Vec<(Exponent, Coefficient)> = Vec::with_capacity(p.term_count());
    for term in p.terms() {
        let others = term
            .exponents
            .iter()
            .enumerate()
            .any(|(j, &e)| j != variable_index && e != 0);
        if others {
            return Err(TreeError::NotUnivariate(p.variables()[variable_index].clone()));
        }
        level.push((
            term.exponents[variable_index],
            Coefficient::Scalar(term.coefficient.clone()),
        ));
    }
    level.sort_by_key(|g| std::cmp::Reverse(g.0));
    let variables = Arc::new(p.variables().to_vec());
    build_level(variables, variable_index, level, scheme)
}

/// Builds the tree in the first variable; node coefficients that still
/// depend on other variables become trees over the next variable they use.
pub fn build_multivariate(
    p: &Polynomial,
    schemes: &[FunctionScheme],
) -> Result<EvaluationTree, TreeError> {
    let count = p.variables().len();
    if schemes.len() != count {
        return Err(TreeError::SchemeCount {
            expected: count,
            found: schemes.len(),
        });
    }
    let variables = Arc::new(p.variables().to_vec());
    if count == 0 {
        // A constant with no variables at all still gets a one-node tree.
        let c = p.as_constant().unwrap_or_default();
        return Ok(EvaluationTree::single(variables, 0, c));
    }
    build_nested(&variables, 0, p.terms(), schemes)
}

/// Terms must be canonical and use no variable before `var`.
fn build_nested(
    variables: &Arc<Vec<String>>,
    var: usize,
    terms: &[Term],
    schemes: &[FunctionScheme],
) -> Result<EvaluationTree, TreeError> {
    let mut level = Vec::new();
    let mut start = 0;
    while start < terms.len() {
        let e = terms[start].exponents[var];
        let end = start + terms[start..].partition_point(|t| t.exponents[var] == e);
        let group: Vec<Term> = terms[start..end]
            .iter()
            .map(|t| {
                let mut t = t.clone();
                t.exponents[var] = 0;
                t
            })
            .collect();
        let next = group
            .iter()
            .filter_map(|t| t.exponents.iter().position(|&x| x != 0))
            .min();
        let coefficient = match next {
            None => Coefficient::Scalar(group[0].coefficient.clone()),
            Some(w) => Coefficient::Nested(Box::new(build_nested(variables, w, &group, schemes)?)),
        };
        level.push((e, coefficient));
        start = end;
    }
    build_level(variables.clone(), var, level, &schemes[var])
}

/// Core of the construction over one variable. `level` is sorted by
/// strictly decreasing exponent.
fn build_level(
    variables: Arc<Vec<String>>,
    variable: usize,
    level: Vec<(Exponent, Coefficient)>,
    scheme: &FunctionScheme,
) -> Result<EvaluationTree, TreeError> {
    if level.is_empty() {
        return Ok(EvaluationTree::single(variables, variable, BigInt::zero()));
    }
    let exps: Vec<Exponent> = level.iter().map(|(e, _)| *e).collect();
    let n = exps.len();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];

    // Each task is a contiguous run of terms whose exponents have `offset`
    // already factored out. The root of a run is its lowest term; every
    // split `a * x^e + b` with nonzero `b` hangs the tree of `a` under that
    // root and continues with `b`. An empty `b` only shifts the offset.
    let mut stack = vec![(0usize, n, 0 as Exponent)];
    while let Some((mut lo, hi, mut offset)) = stack.pop() {
        let root = hi - 1;
        while hi - lo > 1 {
            let k = exps[lo] - offset;
            let e = scheme.split(k);
            if e == 0 || e > k {
                return Err(TreeError::InvalidSplit {
                    scheme: scheme.name().to_string(),
                    k,
                    split: e,
                });
            }
            let mid = lo + exps[lo..hi].partition_point(|&x| x - offset >= e);
            if mid == hi {
                offset += e;
                continue;
            }
            let child = mid - 1;
            parent[child] = Some(root);
            children[root].push(child);
            stack.push((lo, mid, offset + e));
            lo = mid;
        }
    }

    let nodes = level
        .into_iter()
        .enumerate()
        .map(|(i, (exp, coefficient))| {
            let partial_degree = match parent[i] {
                Some(p) => exp - exps[p],
                None => exp,
            };
            TreeNode {
                coefficient,
                partial_degree,
                children: std::mem::take(&mut children[i]),
                parent: parent[i],
                lazy_height: 0,
            }
        })
        .collect();
    let mut tree = EvaluationTree {
        variables,
        variable,
        nodes,
    };
    tree.compute_lazy_heights();
    Ok(tree)
}

impl EvaluationTree {
    fn single(variables: Arc<Vec<String>>, variable: usize, c: BigInt) -> Self {
        EvaluationTree {
            variables,
            variable,
            nodes: vec![TreeNode {
                coefficient: Coefficient::Scalar(c),
                partial_degree: 0,
                children: Vec::new(),
                parent: None,
                lazy_height: 0,
            }],
        }
    }

    /// Assigns register indices (lazy heights).
    ///
    /// A node with zero or one child gets 0. Otherwise it gets one more
    /// than the highest register used anywhere below its second, third, ...
    /// children. The first child is evaluated before anything is pending
    /// for the node, so it is free to reuse the node's register. Taking the
    /// maximum over whole subtrees (rather than just the children) keeps the
    /// assignment sound when a one-child node with a deep subtree is not a
    /// first child; for every other shape the two coincide.
    pub fn compute_lazy_heights(&mut self) {
        let mut subtree_max = vec![0u32; self.nodes.len()];
        for i in 0..self.nodes.len() {
            let node = &self.nodes[i];
            let lh = if node.children.len() <= 1 {
                0
            } else {
                1 + node.children[1..]
                    .iter()
                    .map(|&c| subtree_max[c])
                    .max()
                    .unwrap_or(0)
            };
            let below = node.children.iter().map(|&c| subtree_max[c]).max().unwrap_or(0);
            subtree_max[i] = lh.max(below);
            self.nodes[i].lazy_height = lh;
        }
        for node in &mut self.nodes {
            if let Coefficient::Nested(t) = &mut node.coefficient {
                t.compute_lazy_heights();
            }
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Index of the variable this tree is over.
    pub fn variable(&self) -> usize {
        self.variable
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root_index(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[self.nodes.len() - 1]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes in this tree and all nested coefficient trees.
    pub fn total_node_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match &n.coefficient {
                Coefficient::Scalar(_) => 1,
                Coefficient::Nested(t) => 1 + t.total_node_count(),
            })
            .sum()
    }

    /// Over this tree only.
    pub fn max_lazy_height(&self) -> u32 {
        self.nodes.iter().map(|n| n.lazy_height).max().unwrap_or(0)
    }

    pub fn max_partial_degree(&self) -> Exponent {
        self.nodes.iter().map(|n| n.partial_degree).max().unwrap_or(0)
    }

    /// Calls `f` on this tree and every nested tree, outermost first.
    pub fn for_each_tree<'a>(&'a self, f: &mut impl FnMut(&'a EvaluationTree)) {
        f(self);
        for node in &self.nodes {
            if let Coefficient::Nested(t) = &node.coefficient {
                t.for_each_tree(f);
            }
        }
    }

    /// Degree of the monomial of each node: partial degrees summed from the
    /// node up to the root, inclusive.
    pub fn monomial_degrees(&self) -> Vec<Exponent> {
        let mut degrees = vec![0; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            let above = self.nodes[i].parent.map_or(0, |p| degrees[p]);
            degrees[i] = above + self.nodes[i].partial_degree;
        }
        degrees
    }

    /// Expands the tree back into the polynomial it evaluates.
    pub fn to_polynomial(&self) -> Polynomial {
        let vars = self.variables.to_vec();
        let mut raw = Vec::new();
        for (node, degree) in self.nodes.iter().zip(self.monomial_degrees()) {
            match &node.coefficient {
                Coefficient::Scalar(c) => {
                    let mut exponents = vec![0; vars.len()];
                    exponents[self.variable] = degree;
                    raw.push(Term::new(c.clone(), exponents));
                }
                Coefficient::Nested(t) => {
                    for term in t.to_polynomial().into_terms() {
                        let mut term = term;
                        term.exponents[self.variable] += degree;
                        raw.push(term);
                    }
                }
            }
        }
        Polynomial::canonicalize(raw, vars).expect("exponent vectors match the variable list")
    }

    /// DOT digraph with one `c=.. d=.. lh=..` labelled node per term and
    /// parent to child edges, root first. Nested coefficients are shown as
    /// polynomials.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph evaluation_tree {\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let _ = writeln!(
                out,
                "  n{i} [label=\"c={} d={} lh={}\"];",
                node.coefficient.render(),
                node.partial_degree,
                node.lazy_height
            );
        }
        for (i, node) in self.nodes.iter().enumerate().rev() {
            for c in &node.children {
                let _ = writeln!(out, "  n{i} -> n{c};");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Evaluates a tree straight from its definition: every node is
/// `(c + sum of children) * x^d`, with `x^d` by square and multiply.
/// `point` holds one value per variable.
pub fn reference_eval<D: RingDomain>(
    tree: &EvaluationTree,
    point: &[D::Value],
    domain: &D,
) -> D::Value {
    let x = &point[tree.variable];
    let mut values: Vec<Option<D::Value>> = vec![None; tree.nodes.len()];
    for i in 0..tree.nodes.len() {
        let node = &tree.nodes[i];
        let mut acc = match &node.coefficient {
            Coefficient::Scalar(c) => domain.from_integer(c),
            Coefficient::Nested(t) => reference_eval(t, point, domain),
        };
        for &c in &node.children {
            let child = values[c].take().expect("children precede parents");
            acc = domain.add(&acc, &child);
        }
        if node.partial_degree > 0 {
            acc = domain.mul(&acc, &square_and_multiply(domain, x, node.partial_degree));
        }
        values[i] = Some(acc);
    }
    values.pop().flatten().expect("tree has a root")
}

fn square_and_multiply<D: RingDomain>(domain: &D, base: &D::Value, e: Exponent) -> D::Value {
    let mut result: Option<D::Value> = None;
    let mut square = base.clone();
    let mut e = e;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => square.clone(),
                Some(r) => domain.mul(&r, &square),
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        square = domain.mul(&square, &square);
    }
    result.unwrap_or_else(|| domain.from_integer(&BigInt::from(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::IntegerDomain;
    use crate::scheme::Builtin;

    fn example() -> Polynomial {
        Polynomial::univariate_dense("x", [1, -2, -3, 9, -4, 1, 2, -1, 3])
    }

    fn tree(p: &Polynomial, b: Builtin) -> EvaluationTree {
        build(p, &FunctionScheme::builtin(b), 0).unwrap()
    }

    fn scalar(node: &TreeNode) -> i64 {
        match node.coefficient() {
            Coefficient::Scalar(c) => c.try_into().unwrap(),
            Coefficient::Nested(_) => panic!("nested"),
        }
    }

    #[test]
    fn horner_is_a_chain() {
        let t = tree(&example(), Builtin::Horner);
        assert_eq!(t.node_count(), 9);
        assert_eq!(scalar(t.root()), 1);
        assert_eq!(t.root().partial_degree(), 0);
        for (i, node) in t.nodes().iter().enumerate().take(8) {
            assert_eq!(node.partial_degree(), 1);
            assert_eq!(node.parent(), Some(i + 1));
        }
        assert_eq!(scalar(&t.nodes()[0]), 3);
        assert_eq!(t.max_lazy_height(), 0);
    }

    #[test]
    fn direct_is_flat() {
        let t = tree(&example(), Builtin::Direct);
        assert_eq!(t.root().children(), &[0, 1, 2, 3, 4, 5, 6, 7]);
        let degrees: Vec<_> = t.nodes().iter().map(|n| n.partial_degree()).collect();
        assert_eq!(degrees, [8, 7, 6, 5, 4, 3, 2, 1, 0]);
        assert_eq!(t.max_lazy_height(), 1);
    }

    #[test]
    fn example_lazy_heights() {
        let p = example();
        assert_eq!(tree(&p, Builtin::Balanced).max_lazy_height(), 1);
        // Definition-mechanical value for Estrin on this polynomial.
        assert_eq!(tree(&p, Builtin::Estrin).max_lazy_height(), 2);
    }

    #[test]
    fn balanced_has_lower_partial_degrees() {
        let p = example();
        assert_eq!(tree(&p, Builtin::Balanced).max_partial_degree(), 4);
        assert_eq!(tree(&p, Builtin::Estrin).max_partial_degree(), 8);
    }

    #[test]
    fn single_term() {
        let p = Polynomial::canonicalize([Term::new(7, vec![3])], vec!["x".into()]).unwrap();
        for b in Builtin::ALL {
            let t = tree(&p, b);
            assert_eq!(t.node_count(), 1);
            assert_eq!(scalar(t.root()), 7);
            assert_eq!(t.root().partial_degree(), 3);
        }
    }

    #[test]
    fn zero_polynomial_is_one_zero_node() {
        let t = tree(&Polynomial::zero(vec!["x".into()]), Builtin::Balanced);
        assert_eq!(t.node_count(), 1);
        assert_eq!(scalar(t.root()), 0);
        assert_eq!(t.root().partial_degree(), 0);
    }

    #[test]
    fn sparse_without_constant_term() {
        // x^8 + x^5: split at 4 leaves an empty remainder.
        let p = Polynomial::canonicalize(
            [Term::new(1, vec![8]), Term::new(1, vec![5])],
            vec!["x".into()],
        )
        .unwrap();
        let t = tree(&p, Builtin::Balanced);
        assert_eq!(t.root().partial_degree(), 5);
        assert_eq!(t.nodes()[0].partial_degree(), 3);
        assert_eq!(t.to_polynomial(), p);
    }

    #[test]
    fn reference_values() {
        let d = IntegerDomain;
        for b in Builtin::ALL {
            let t = tree(&example(), b);
            let at = |v: i64| reference_eval(&t, &[BigInt::from(v)], &d);
            assert_eq!(at(2), BigInt::from(793));
            assert_eq!(at(0), BigInt::from(1));
            assert_eq!(at(1), BigInt::from(6));
        }
    }

    #[test]
    fn invalid_custom_split() {
        let bad = FunctionScheme::custom("half", |k| k / 2);
        let err = build(&example(), &bad, 0).unwrap_err();
        assert!(matches!(err, TreeError::InvalidSplit { k: 1, split: 0, .. }));
    }

    #[test]
    fn build_rejects_other_variables() {
        let p = Polynomial::canonicalize([Term::new(1, vec![1, 1])], vec!["x".into(), "y".into()]).unwrap();
        assert!(matches!(build(&p, &Builtin::Horner.into(), 0), Err(TreeError::NotUnivariate(_))));
    }

    #[test]
    fn multivariate_horner() {
        let vars = vec!["x".to_string(), "y".to_string()];
        let p = Polynomial::canonicalize(
            [Term::new(1, vec![2, 2]), Term::new(2, vec![1, 1]), Term::new(1, vec![0, 0])],
            vars,
        )
        .unwrap();
        let h = FunctionScheme::builtin(Builtin::Horner);
        let t = build_multivariate(&p, &[h.clone(), h]).unwrap();
        assert_eq!(t.node_count(), 3);
        let rendered: Vec<_> = t.nodes().iter().map(|n| n.coefficient().render()).collect();
        assert_eq!(rendered, ["y^2", "2*y", "1"]);
        assert!(matches!(t.root().coefficient(), Coefficient::Scalar(_)));
        let Coefficient::Nested(inner) = t.nodes()[0].coefficient() else { panic!() };
        assert_eq!(inner.variable(), 1);
        assert_eq!(t.to_polynomial(), p);
        let v = reference_eval(&t, &[BigInt::from(2), BigInt::from(3)], &IntegerDomain);
        assert_eq!(v, BigInt::from(49));
    }

    #[test]
    fn multivariate_of_univariate_matches_build() {
        let p = example();
        let s = FunctionScheme::builtin(Builtin::Estrin);
        assert_eq!(build_multivariate(&p, std::slice::from_ref(&s)).unwrap(), build(&p, &s, 0).unwrap());
    }

    #[test]
    fn multivariate_constant() {
        let p = Polynomial::constant(5, vec!["x".into(), "y".into()]);
        let h = FunctionScheme::builtin(Builtin::Horner);
        let t = build_multivariate(&p, &[h.clone(), h]).unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(scalar(t.root()), 5);
        assert_eq!(t.root().partial_degree(), 0);
    }

    #[test]
    fn dot_single_node() {
        let p = Polynomial::canonicalize([Term::new(7, vec![3])], vec!["x".into()]).unwrap();
        let dot = tree(&p, Builtin::Balanced).to_dot();
        assert_eq!(dot, "digraph evaluation_tree {\n  n0 [label=\"c=7 d=3 lh=0\"];\n}\n");
    }

    #[test]
    fn dot_edge_shapes() {
        let horner = tree(&example(), Builtin::Horner).to_dot();
        let edges: Vec<_> = horner.lines().filter(|l| l.contains("->")).collect();
        assert_eq!(edges.len(), 8);
        for k in 0..8 {
            assert!(edges.contains(&format!("  n{} -> n{};", k + 1, k).as_str()));
        }
        let direct = tree(&example(), Builtin::Direct).to_dot();
        let edges: Vec<_> = direct.lines().filter(|l| l.contains("->")).collect();
        assert_eq!(edges.len(), 8);
        assert!(edges.iter().all(|e| e.starts_with("  n8 -> ")));
    }
}
