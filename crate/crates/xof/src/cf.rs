//! Code fragments: small Boolean expression trees used as building blocks
//! for rule conditions.
//!
//! A code fragment (CF) is a binary tree whose internal nodes apply a
//! two-argument connective and whose leaves read one input attribute.
//! Negation is *not* a node of its own: every node carries a `negated`
//! flag that complements its value. This keeps the structural accounting
//! simple — the number of leaves always exceeds the number of internal
//! nodes by exactly one, and the complexity of a CF is defined as its
//! leaf count.
//!
//! CFs are immutable once built and are interned through a [`CfRegistry`]
//! that deduplicates structurally identical trees (up to the commutativity
//! of the connectives) and hands out stable [`CfId`]s.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Binary connectives allowed at internal nodes.
///
/// All four are commutative, which the canonical key exploits. Negation is
/// handled by the per-node flag, never as a connective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CfFunction {
    And,
    Or,
    Nand,
    Xor,
}

impl CfFunction {
    pub const ALL: [CfFunction; 4] = [
        CfFunction::And,
        CfFunction::Or,
        CfFunction::Nand,
        CfFunction::Xor,
    ];

    #[inline]
    pub fn apply(self, a: bool, b: bool) -> bool {
        match self {
            CfFunction::And => a && b,
            CfFunction::Or => a || b,
            CfFunction::Nand => !(a && b),
            CfFunction::Xor => a != b,
        }
    }

    /// Infix symbol used by the textual notation (`×` for XOR, like the
    /// usual shorthand in the literature).
    fn symbol(self) -> &'static str {
        match self {
            CfFunction::And => "∧",
            CfFunction::Or => "∨",
            CfFunction::Nand => " nand ",
            CfFunction::Xor => "×",
        }
    }

    /// One-byte code used by canonical keys.
    fn code(self) -> char {
        match self {
            CfFunction::And => '&',
            CfFunction::Or => '|',
            CfFunction::Nand => '~',
            CfFunction::Xor => '^',
        }
    }
}

#[derive(Debug, Clone)]
pub enum CfNodeKind {
    /// Reads one input attribute (0-based).
    Leaf(u32),
    /// Applies a connective to exactly two children.
    Internal(CfFunction, Arc<CfNode>, Arc<CfNode>),
}

/// One node of a CF tree. The `negated` flag complements the node's value.
#[derive(Debug, Clone)]
pub struct CfNode {
    pub negated: bool,
    pub kind: CfNodeKind,
}

impl CfNode {
    pub fn leaf(attr: u32) -> Self {
        CfNode {
            negated: false,
            kind: CfNodeKind::Leaf(attr),
        }
    }

    pub fn leaf_negated(attr: u32) -> Self {
        CfNode {
            negated: true,
            kind: CfNodeKind::Leaf(attr),
        }
    }

    pub fn internal(function: CfFunction, left: CfNode, right: CfNode) -> Self {
        CfNode {
            negated: false,
            kind: CfNodeKind::Internal(function, Arc::new(left), Arc::new(right)),
        }
    }

    /// A copy of this node with the negation flag flipped. Subtrees are
    /// shared, so this is cheap at any size.
    pub fn negate(&self) -> Self {
        CfNode {
            negated: !self.negated,
            kind: self.kind.clone(),
        }
    }

    /// Evaluates the tree on a full input state. Leaf indices must be in
    /// range; out-of-range indices are a structural error and panic.
    pub fn eval(&self, state: &[bool]) -> bool {
        let value = match &self.kind {
            CfNodeKind::Leaf(attr) => state[*attr as usize],
            CfNodeKind::Internal(f, left, right) => f.apply(left.eval(state), right.eval(state)),
        };
        value != self.negated
    }

    /// Leaf count. Negation flags do not contribute.
    pub fn complexity(&self) -> u32 {
        match &self.kind {
            CfNodeKind::Leaf(_) => 1,
            CfNodeKind::Internal(_, left, right) => left.complexity() + right.complexity(),
        }
    }

    /// Number of internal (connective) nodes; always `complexity() - 1`.
    pub fn internal_count(&self) -> u32 {
        match &self.kind {
            CfNodeKind::Leaf(_) => 0,
            CfNodeKind::Internal(_, left, right) => {
                1 + left.internal_count() + right.internal_count()
            }
        }
    }

    /// Tree depth; a bare leaf has depth 0.
    pub fn depth(&self) -> u32 {
        match &self.kind {
            CfNodeKind::Leaf(_) => 0,
            CfNodeKind::Internal(_, left, right) => 1 + left.depth().max(right.depth()),
        }
    }

    /// Largest attribute index read anywhere in the tree.
    pub fn max_attr(&self) -> u32 {
        match &self.kind {
            CfNodeKind::Leaf(attr) => *attr,
            CfNodeKind::Internal(_, left, right) => left.max_attr().max(right.max_attr()),
        }
    }

    /// Deterministic serialization used for structural identity.
    ///
    /// Children of the (commutative) connectives are ordered by their own
    /// serialized form so that mirrored trees collapse to one key. Negation
    /// flags are part of the key: a CF and its negation are distinct.
    pub fn canonical_key(&self) -> String {
        let mut out = String::new();
        self.write_key(&mut out);
        out
    }

    fn write_key(&self, out: &mut String) {
        if self.negated {
            out.push('!');
        }
        match &self.kind {
            CfNodeKind::Leaf(attr) => {
                out.push_str(&attr.to_string());
            }
            CfNodeKind::Internal(f, left, right) => {
                let a = left.canonical_key();
                let b = right.canonical_key();
                let (first, second) = if a <= b { (a, b) } else { (b, a) };
                out.push('(');
                out.push(f.code());
                out.push(' ');
                out.push_str(&first);
                out.push(' ');
                out.push_str(&second);
                out.push(')');
            }
        }
    }

    fn write_notation(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(out, "!")?;
        }
        match &self.kind {
            CfNodeKind::Leaf(attr) => write!(out, "D{attr}"),
            CfNodeKind::Internal(f, left, right) => {
                write!(out, "(")?;
                left.write_child(out)?;
                write!(out, "{}", f.symbol())?;
                right.write_child(out)?;
                write!(out, ")")
            }
        }
    }

    // Negated children get their own parentheses: (!D3)×D4, not !D3×D4.
    fn write_child(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(out, "(")?;
            self.write_notation(out)?;
            write!(out, ")")
        } else {
            self.write_notation(out)
        }
    }
}

impl fmt::Display for CfNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_notation(f)
    }
}

/// Stable identity of an interned code fragment. Ids are assigned in
/// interning order, so they are deterministic for a deterministic run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CfId(u64);

impl CfId {
    pub fn raw(self) -> u64 {
        self.0
    }
}

impl fmt::Display for CfId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cf{}", self.0)
    }
}

/// An interned code fragment with cached structural measures.
#[derive(Debug)]
pub struct CodeFragment {
    id: CfId,
    root: Arc<CfNode>,
    complexity: u32,
    depth: u32,
}

impl CodeFragment {
    pub fn id(&self) -> CfId {
        self.id
    }

    pub fn root(&self) -> &CfNode {
        &self.root
    }

    pub fn root_arc(&self) -> Arc<CfNode> {
        self.root.clone()
    }

    pub fn eval(&self, state: &[bool]) -> bool {
        self.root.eval(state)
    }

    /// Leaf count, independent of negation flags.
    pub fn complexity(&self) -> u32 {
        self.complexity
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn canonical_key(&self) -> String {
        self.root.canonical_key()
    }
}

impl fmt::Display for CodeFragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// Raised when combining two CFs would exceed the configured depth limit.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("combined tree depth {depth} exceeds the limit {limit}")]
pub struct DepthLimitExceeded {
    pub depth: u32,
    pub limit: u32,
}

/// Interning registry for code fragments.
///
/// Structurally identical trees (same canonical key) share one
/// [`CodeFragment`] and one [`CfId`]. The registry is append-only.
#[derive(Debug, Default)]
pub struct CfRegistry {
    by_key: HashMap<String, Arc<CodeFragment>>,
    by_id: Vec<Arc<CodeFragment>>,
}

impl CfRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn get(&self, id: CfId) -> &Arc<CodeFragment> {
        &self.by_id[id.0 as usize]
    }

    /// Interns a tree, returning the shared fragment for its canonical key.
    pub fn intern(&mut self, node: CfNode) -> Arc<CodeFragment> {
        let key = node.canonical_key();
        if let Some(cf) = self.by_key.get(&key) {
            return cf.clone();
        }
        let cf = Arc::new(CodeFragment {
            id: CfId(self.by_id.len() as u64),
            complexity: node.complexity(),
            depth: node.depth(),
            root: Arc::new(node),
        });
        self.by_id.push(cf.clone());
        self.by_key.insert(key, cf.clone());
        cf
    }

    pub fn leaf(&mut self, attr: u32, negated: bool) -> Arc<CodeFragment> {
        let node = if negated {
            CfNode::leaf_negated(attr)
        } else {
            CfNode::leaf(attr)
        };
        self.intern(node)
    }

    /// The semantic complement of `cf`: same tree, root flag flipped.
    /// Complexity and depth are unchanged.
    pub fn negated(&mut self, cf: &CodeFragment) -> Arc<CodeFragment> {
        self.intern(cf.root().negate())
    }

    /// Joins two fragments under a fresh connective node (not negated).
    /// The result has `complexity(a) + complexity(b)` leaves; combinations
    /// deeper than `max_depth` are rejected.
    pub fn combine(
        &mut self,
        a: &CodeFragment,
        b: &CodeFragment,
        function: CfFunction,
        max_depth: u32,
    ) -> Result<Arc<CodeFragment>, DepthLimitExceeded> {
        let depth = a.depth().max(b.depth()) + 1;
        if depth > max_depth {
            return Err(DepthLimitExceeded {
                depth,
                limit: max_depth,
            });
        }
        Ok(self.intern(CfNode {
            negated: false,
            kind: CfNodeKind::Internal(function, a.root_arc(), b.root_arc()),
        }))
    }
}

/// Cached evaluation of interned CFs against problem states.
///
/// For small problems (`n <= 12`) the evaluator materializes each CF's full
/// truth table once, via the production [`CodeFragment::eval`] path, and
/// answers later queries with a bit test. For larger `n` it memoizes per
/// state instead. Either way results are identical to calling `eval`
/// directly; this is purely a speedup for the learning loop.
#[derive(Debug)]
pub struct CfEvaluator {
    n: u32,
    tables: HashMap<CfId, Vec<u64>>,
    memo: HashMap<CfId, bool>,
}

/// Largest attribute count for which full truth tables are cached.
const TABLE_CACHE_MAX_BITS: u32 = 12;

impl CfEvaluator {
    pub fn new(n: u32) -> Self {
        CfEvaluator {
            n,
            tables: HashMap::new(),
            memo: HashMap::new(),
        }
    }

    pub fn attributes(&self) -> u32 {
        self.n
    }

    /// Must be called once per fresh state before `eval` when `n > 12`;
    /// harmless otherwise.
    pub fn begin_state(&mut self) {
        if self.n > TABLE_CACHE_MAX_BITS {
            self.memo.clear();
        }
    }

    pub fn eval(&mut self, cf: &CodeFragment, state: &[bool]) -> bool {
        debug_assert_eq!(state.len(), self.n as usize);
        if self.n > TABLE_CACHE_MAX_BITS {
            if let Some(&v) = self.memo.get(&cf.id()) {
                return v;
            }
            let v = cf.eval(state);
            self.memo.insert(cf.id(), v);
            return v;
        }
        let idx = state
            .iter()
            .enumerate()
            .fold(0u32, |acc, (k, &b)| acc | ((b as u32) << k));
        if let Some(table) = self.tables.get(&cf.id()) {
            return table[(idx >> 6) as usize] >> (idx & 63) & 1 == 1;
        }
        let table = self.build_table(cf);
        let hit = table[(idx >> 6) as usize] >> (idx & 63) & 1 == 1;
        self.tables.insert(cf.id(), table);
        hit
    }

    fn build_table(&self, cf: &CodeFragment) -> Vec<u64> {
        let states = 1u32 << self.n;
        let mut table = vec![0u64; states.div_ceil(64) as usize];
        let mut state = vec![false; self.n as usize];
        for idx in 0..states {
            for (k, slot) in state.iter_mut().enumerate() {
                *slot = (idx >> k) & 1 == 1;
            }
            if cf.eval(&state) {
                table[(idx >> 6) as usize] |= 1u64 << (idx & 63);
            }
        }
        table
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor(l: CfNode, r: CfNode) -> CfNode {
        CfNode::internal(CfFunction::Xor, l, r)
    }

    #[test]
    fn eval_xor_pair() {
        let cf = xor(CfNode::leaf(0), CfNode::leaf(1));
        assert!(cf.eval(&[true, false]));
        assert!(!cf.eval(&[true, true]));
        assert!(!cf.eval(&[false, false]));
    }

    #[test]
    fn eval_nested_negations() {
        // (!((!D3)×D4))×D5 on (D3,D4,D5) = (0,0,0) evaluates to 0.
        let inner = xor(CfNode::leaf_negated(3), CfNode::leaf(4));
        let cf = xor(inner.negate(), CfNode::leaf(5));
        let mut state = vec![false; 6];
        assert!(!cf.eval(&state));
        state[3] = true;
        assert!(cf.eval(&state));
    }

    #[test]
    fn eval_negated_leaf() {
        let cf = CfNode::leaf_negated(6);
        let mut state = vec![false; 7];
        state[6] = true;
        assert!(!cf.eval(&state));
    }

    #[test]
    fn complexity_counts_leaves_only() {
        assert_eq!(CfNode::leaf(0).complexity(), 1);
        let pair = xor(CfNode::leaf(0), CfNode::leaf(1));
        assert_eq!(pair.complexity(), 2);
        assert_eq!(pair.negate().complexity(), 2);

        // Left-deep 11-leaf chain.
        let mut chain = CfNode::leaf(0);
        for attr in 1..11 {
            chain = xor(chain, CfNode::leaf(attr));
        }
        assert_eq!(chain.complexity(), 11);
        assert_eq!(chain.internal_count(), 10);
        assert_eq!(chain.depth(), 10);
    }

    #[test]
    fn negate_is_complement_and_involution() {
        let cf = xor(
            CfNode::leaf_negated(0),
            CfNode::internal(CfFunction::Nand, CfNode::leaf(1), CfNode::leaf(2)),
        );
        let neg = cf.negate();
        let back = neg.negate();
        for idx in 0..8u32 {
            let state: Vec<bool> = (0..3).map(|k| (idx >> k) & 1 == 1).collect();
            assert_ne!(cf.eval(&state), neg.eval(&state));
            assert_eq!(cf.eval(&state), back.eval(&state));
        }
        assert_eq!(cf.canonical_key(), back.canonical_key());
        assert_ne!(cf.canonical_key(), neg.canonical_key());
    }

    #[test]
    fn canonical_key_normalizes_commutative_children() {
        let a = CfNode::internal(CfFunction::And, CfNode::leaf(0), CfNode::leaf(1));
        let b = CfNode::internal(CfFunction::And, CfNode::leaf(1), CfNode::leaf(0));
        assert_eq!(a.canonical_key(), b.canonical_key());

        let or = CfNode::internal(CfFunction::Or, CfNode::leaf(0), CfNode::leaf(1));
        assert_ne!(a.canonical_key(), or.canonical_key());
    }

    #[test]
    fn registry_dedups_by_key() {
        let mut reg = CfRegistry::new();
        let a = reg.intern(CfNode::internal(
            CfFunction::And,
            CfNode::leaf(0),
            CfNode::leaf(1),
        ));
        let b = reg.intern(CfNode::internal(
            CfFunction::And,
            CfNode::leaf(1),
            CfNode::leaf(0),
        ));
        assert_eq!(a.id(), b.id());
        assert_eq!(reg.len(), 1);

        let neg = reg.negated(&a);
        assert_ne!(neg.id(), a.id());
        assert_eq!(neg.complexity(), a.complexity());
        assert_eq!(neg.depth(), a.depth());
    }

    #[test]
    fn combine_adds_complexities_and_checks_depth() {
        let mut reg = CfRegistry::new();
        let d0 = reg.leaf(0, false);
        let d1 = reg.leaf(1, false);
        let pair = reg.combine(&d0, &d1, CfFunction::Xor, 20).unwrap();
        assert_eq!(pair.complexity(), 2);
        assert_eq!(pair.depth(), 1);

        let d2 = reg.leaf(2, false);
        let triple = reg.combine(&pair, &d2, CfFunction::Xor, 20).unwrap();
        assert_eq!(triple.complexity(), 3);
        assert_eq!(triple.depth(), 2);

        // Two depth-20 chains cannot be joined under the default limit.
        let mut deep = reg.leaf(0, false);
        for _ in 0..20 {
            let d = reg.leaf(1, false);
            deep = reg.combine(&deep, &d, CfFunction::Xor, 20).unwrap();
        }
        assert_eq!(deep.depth(), 20);
        let err = reg.combine(&deep, &deep, CfFunction::Xor, 20).unwrap_err();
        assert_eq!(err, DepthLimitExceeded { depth: 21, limit: 20 });
    }

    #[test]
    fn notation_matches_convention() {
        let inner = xor(CfNode::leaf_negated(3), CfNode::leaf(4));
        let cf = xor(inner.negate(), CfNode::leaf(5));
        assert_eq!(cf.to_string(), "((!((!D3)×D4))×D5)");
        assert_eq!(CfNode::leaf_negated(7).to_string(), "!D7");
        let and = CfNode::internal(CfFunction::And, CfNode::leaf(0), CfNode::leaf(1));
        assert_eq!(and.to_string(), "(D0∧D1)");
    }

    #[test]
    fn evaluator_agrees_with_direct_eval() {
        let mut reg = CfRegistry::new();
        let d0 = reg.leaf(0, false);
        let d2 = reg.leaf(2, true);
        let cf = reg.combine(&d0, &d2, CfFunction::Nand, 20).unwrap();
        let mut eval = CfEvaluator::new(3);
        for idx in 0..8u32 {
            let state: Vec<bool> = (0..3).map(|k| (idx >> k) & 1 == 1).collect();
            eval.begin_state();
            assert_eq!(eval.eval(&cf, &state), cf.eval(&state));
        }
    }
}
