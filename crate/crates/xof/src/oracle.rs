//! Independent brute-force ground truth for CF semantics and rule
//! generality.
//!
//! Everything here enumerates complete state spaces. The evaluator is a
//! deliberate reimplementation — an iterative, stack-based walk over
//! integer-indexed states — so that it shares no code path with
//! [`CfNode::eval`](crate::cf::CfNode::eval). Agreement between the two is
//! what the equivalence suites check.
//!
//! State indexing convention: attribute `D0` is the least-significant bit
//! of the state index, so state `i` assigns `Dk = (i >> k) & 1`.

use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::cf::{CfFunction, CfNode, CfNodeKind, CodeFragment};
use crate::problems::Problem;
use crate::rule::Classifier;

/// Anything above this makes full enumeration unreasonable here.
pub const MAX_TABLE_BITS: u32 = 22;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("{n} attributes is beyond the enumeration bound of {MAX_TABLE_BITS}")]
    TooManyAttributes { n: u32 },
    #[error("tree reads attribute D{attr} but only {n} attributes exist")]
    AttributeOutOfRange { attr: u32, n: u32 },
    #[error("no analytic optimum is defined for problem `{name}`")]
    UnsupportedProblem { name: String },
}

/// Dense truth table over all `2^n` states of an `n`-attribute problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    n: u32,
    bits: Vec<u64>,
}

impl TruthTable {
    fn empty(n: u32) -> Self {
        let words = (1usize << n).div_ceil(64);
        TruthTable {
            n,
            bits: vec![0; words],
        }
    }

    /// All-ones table; what an empty conjunction matches.
    pub fn full(n: u32) -> Self {
        let mut t = Self::empty(n);
        for (word, slot) in t.bits.iter_mut().enumerate() {
            *slot = Self::word_mask(n, word);
        }
        t
    }

    fn word_mask(n: u32, word: usize) -> u64 {
        let states = 1u64 << n;
        let lo = (word as u64) * 64;
        if states >= lo + 64 {
            u64::MAX
        } else if states <= lo {
            0
        } else {
            (1u64 << (states - lo)) - 1
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn get(&self, idx: u32) -> bool {
        self.bits[(idx >> 6) as usize] >> (idx & 63) & 1 == 1
    }

    fn set(&mut self, idx: u32) {
        self.bits[(idx >> 6) as usize] |= 1 << (idx & 63);
    }

    /// Number of states mapped to 1.
    pub fn ones(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn complement(&self) -> Self {
        let mut out = self.clone();
        for (word, slot) in out.bits.iter_mut().enumerate() {
            *slot = !*slot & Self::word_mask(self.n, word);
        }
        out
    }

    pub fn and(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (slot, w) in out.bits.iter_mut().zip(&other.bits) {
            *slot &= w;
        }
        out
    }
}

/// Evaluates a tree on the state with the given index, iteratively.
///
/// Kept free of any call into the production evaluator, including
/// `CfFunction::apply`.
pub fn eval_indexed(root: &CfNode, idx: u32) -> bool {
    enum Step<'a> {
        Node(&'a CfNode),
        Combine(CfFunction, bool),
    }

    let mut work = vec![Step::Node(root)];
    let mut values: Vec<bool> = Vec::new();
    while let Some(step) = work.pop() {
        match step {
            Step::Node(node) => match &node.kind {
                CfNodeKind::Leaf(attr) => {
                    let bit = (idx >> attr) & 1 == 1;
                    values.push(bit != node.negated);
                }
                CfNodeKind::Internal(f, left, right) => {
                    work.push(Step::Combine(*f, node.negated));
                    work.push(Step::Node(right));
                    work.push(Step::Node(left));
                }
            },
            Step::Combine(f, negated) => {
                let b = values.pop().expect("value stack underflow");
                let a = values.pop().expect("value stack underflow");
                let v = match f {
                    CfFunction::And => a && b,
                    CfFunction::Or => a || b,
                    CfFunction::Nand => !(a && b),
                    CfFunction::Xor => a ^ b,
                };
                values.push(v != negated);
            }
        }
    }
    values.pop().expect("empty tree evaluation")
}

/// Full truth table of a tree over `n` attributes.
pub fn truth_table(root: &CfNode, n: u32) -> Result<TruthTable, OracleError> {
    if n > MAX_TABLE_BITS {
        return Err(OracleError::TooManyAttributes { n });
    }
    let max = root.max_attr();
    if max >= n {
        return Err(OracleError::AttributeOutOfRange { attr: max, n });
    }
    let mut table = TruthTable::empty(n);
    for idx in 0..(1u32 << n) {
        if eval_indexed(root, idx) {
            table.set(idx);
        }
    }
    Ok(table)
}

/// Exact match fraction of a conjunction of CFs over all `2^n` states.
/// An empty condition matches everything.
pub fn condition_generality(
    condition: &[Arc<CodeFragment>],
    n: u32,
) -> Result<f64, OracleError> {
    let mut acc = TruthTable::full(n);
    for cf in condition {
        acc = acc.and(&truth_table(cf.root(), n)?);
    }
    Ok(acc.ones() as f64 / (1u64 << n) as f64)
}

/// Exact match fraction of a classifier's condition.
pub fn exact_generality(cl: &Classifier, n: u32) -> Result<f64, OracleError> {
    condition_generality(cl.condition(), n)
}

/// Truth-table equality of two trees over `n` attributes.
pub fn semantically_equal(a: &CfNode, b: &CfNode, n: u32) -> Result<bool, OracleError> {
    Ok(truth_table(a, n)? == truth_table(b, n)?)
}

/// Left-deep XOR chain over the given attributes: evaluates to 1 iff an odd
/// number of them are set. Panics on an empty slice.
pub fn parity_chain(attrs: &[u32]) -> CfNode {
    let mut iter = attrs.iter();
    let first = *iter.next().expect("parity chain needs at least one attribute");
    let mut chain = CfNode::leaf(first);
    for &attr in iter {
        chain = CfNode::internal(CfFunction::Xor, chain, CfNode::leaf(attr));
    }
    chain
}

/// Uniformly random CF tree for equivalence testing: random connectives,
/// random negation flags, depth at most `max_depth`.
pub fn random_cf(rng: &mut impl Rng, attrs: u32, max_depth: u32) -> CfNode {
    let mut node = if max_depth == 0 || rng.gen_bool(0.3) {
        CfNode::leaf(rng.gen_range(0..attrs))
    } else {
        let f = CfFunction::ALL[rng.gen_range(0..CfFunction::ALL.len())];
        CfNode::internal(
            f,
            random_cf(rng, attrs, max_depth - 1),
            random_cf(rng, attrs, max_depth - 1),
        )
    };
    node.negated = rng.gen_bool(0.5);
    node
}

/// Best generality rate achievable by a single accurate rule, per problem.
///
/// For parity the optimum is the full XOR chain: generality 1/2 over
/// complexity `n`. For the multiplexer it is the address-plus-selected-bit
/// rule. For the hierarchical problems the optimum is searched exhaustively
/// over rules built from chunk-parity CFs: each of the six bit chunks is
/// either unconstrained or pinned to one parity, and every candidate is
/// checked for accuracy and generality over the (uniform) meta-bit space.
pub fn optimal_generality_rate(problem: &Problem) -> Result<f64, OracleError> {
    match problem {
        Problem::EvenParity { n, .. } => Ok(0.5 / *n as f64),
        Problem::Multiplexer { address_bits } => {
            let k = *address_bits;
            let complexity = (k + 1) as f64;
            Ok(0.5f64.powi(k as i32 + 1) / complexity)
        }
        Problem::HierarchicalMultiplexer18 | Problem::HierarchicalMajorityOn18 { .. } => {
            Ok(best_chunk_rule_rate(problem))
        }
    }
}

// Searches conditions that pin a subset of the six meta bits. Hierarchical
// labels factor through the meta bits, and every meta state covers the same
// number of raw states, so enumerating the 64 meta states is exact.
fn best_chunk_rule_rate(problem: &Problem) -> f64 {
    let mut best = 0.0f64;
    // Ternary encoding: digit 0 = unconstrained, 1 = meta 0, 2 = meta 1.
    for mask in 0..3u32.pow(6) {
        let mut digits = [0u32; 6];
        let mut rest = mask;
        for d in digits.iter_mut() {
            *d = rest % 3;
            rest /= 3;
        }
        let constrained = digits.iter().filter(|&&d| d != 0).count() as u32;
        if constrained == 0 {
            continue;
        }
        let complexity = (3 * constrained) as f64;
        for action in [0u8, 1u8] {
            let mut matched = 0u32;
            let mut accurate = true;
            for meta in 0..64u32 {
                let consistent = digits.iter().enumerate().all(|(i, &d)| {
                    d == 0 || ((meta >> i) & 1 == 1) == (d == 2)
                });
                if !consistent {
                    continue;
                }
                matched += 1;
                if problem.label_of_meta(meta) != action {
                    accurate = false;
                    break;
                }
            }
            if accurate && matched > 0 {
                let generality = matched as f64 / 64.0;
                best = best.max(generality / complexity);
            }
        }
    }
    best
}

/// Aggregated result of the self-check suites run by `xof oracle-check`.
#[derive(Debug, Default)]
pub struct OracleReport {
    pub passed: u64,
    pub failed: u64,
    pub lines: Vec<String>,
}

impl OracleReport {
    fn suite(&mut self, name: &str, passed: u64, failed: u64) {
        self.passed += passed;
        self.failed += failed;
        let status = if failed == 0 { "ok" } else { "FAILED" };
        self.lines
            .push(format!("{name}: {passed} passed, {failed} failed ... {status}"));
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// Runs the equivalence suites: production evaluation against the
/// table oracle, negation properties, and the benchmark label counts.
pub fn oracle_check(rng: &mut impl Rng) -> OracleReport {
    let mut report = OracleReport::default();
    let mut reg = crate::cf::CfRegistry::new();

    let n = 8u32;
    let mut eval_pass = 0;
    let mut eval_fail = 0;
    let mut neg_pass = 0;
    let mut neg_fail = 0;
    for _ in 0..1000 {
        let node = random_cf(rng, n, 6);
        let cf = reg.intern(node.clone());
        let table = truth_table(&node, n).expect("in-range table");
        let neg_table = truth_table(&node.negate(), n).expect("in-range table");
        let mut state = vec![false; n as usize];
        let mut ok = true;
        for idx in 0..(1u32 << n) {
            for (k, slot) in state.iter_mut().enumerate() {
                *slot = (idx >> k) & 1 == 1;
            }
            if cf.eval(&state) != table.get(idx) {
                ok = false;
                break;
            }
        }
        if ok {
            eval_pass += 1;
        } else {
            eval_fail += 1;
        }
        if neg_table == table.complement() {
            neg_pass += 1;
        } else {
            neg_fail += 1;
        }
    }
    report.suite("eval vs truth-table oracle (1000 random CFs)", eval_pass, eval_fail);
    report.suite("negation complements the table", neg_pass, neg_fail);

    // Chunk CF identity: the nested construction equals the plain XOR chain.
    let inner = CfNode::internal(CfFunction::Xor, CfNode::leaf_negated(3), CfNode::leaf(4));
    let chunk = CfNode::internal(CfFunction::Xor, inner.negate(), CfNode::leaf(5));
    let chain = parity_chain(&[3, 4, 5]);
    let equal = semantically_equal(&chunk, &chain, 6).expect("small table");
    report.suite("chunk construction equals 3-bit parity", equal as u64, !equal as u64);

    // Benchmark label counts over full enumeration.
    let counts: [(&str, Problem, u64, u64); 3] = [
        ("parity-11 labels", Problem::even_parity(11), 11, 1024),
        (
            "hmux18 labels",
            Problem::hierarchical_multiplexer_18(),
            18,
            131_072,
        ),
        (
            "hmaj18 labels",
            Problem::hierarchical_majority_on_18(),
            18,
            90_112,
        ),
    ];
    for (name, problem, n, expect_ones) in counts {
        let mut ones = 0u64;
        for idx in 0..(1u64 << n) as u32 {
            if problem.label_of_index(idx) == 1 {
                ones += 1;
            }
        }
        let ok = ones == expect_ones;
        report.suite(name, ok as u64, !ok as u64);
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::CfRegistry;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn single_leaf_table() {
        let t = truth_table(&CfNode::leaf(0), 1).unwrap();
        assert!(!t.get(0));
        assert!(t.get(1));
        assert_eq!(t.ones(), 1);
    }

    #[test]
    fn xor_pair_table() {
        // State index convention: D0 is the least-significant bit, so the
        // table over (D0, D1) reads [0, 1, 1, 0].
        let cf = CfNode::internal(CfFunction::Xor, CfNode::leaf(0), CfNode::leaf(1));
        let t = truth_table(&cf, 2).unwrap();
        let bits: Vec<bool> = (0..4).map(|i| t.get(i)).collect();
        assert_eq!(bits, vec![false, true, true, false]);
    }

    #[test]
    fn negation_complements_table() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..50 {
            let cf = random_cf(&mut rng, 5, 4);
            let t = truth_table(&cf, 5).unwrap();
            let neg = truth_table(&cf.negate(), 5).unwrap();
            assert_eq!(neg, t.complement());
            assert_eq!(t.ones() + neg.ones(), 32);
        }
    }

    #[test]
    fn rejects_out_of_range_and_oversized() {
        let cf = CfNode::leaf(9);
        assert_eq!(
            truth_table(&cf, 4).unwrap_err(),
            OracleError::AttributeOutOfRange { attr: 9, n: 4 }
        );
        assert_eq!(
            truth_table(&cf, 30).unwrap_err(),
            OracleError::TooManyAttributes { n: 30 }
        );
    }

    #[test]
    fn condition_generality_basics() {
        let mut reg = CfRegistry::new();
        assert_eq!(condition_generality(&[], 6).unwrap(), 1.0);
        let d0 = reg.leaf(0, false);
        assert_eq!(condition_generality(&[d0.clone()], 6).unwrap(), 0.5);
        let d1 = reg.leaf(1, true);
        assert_eq!(condition_generality(&[d0, d1], 6).unwrap(), 0.25);
    }

    #[test]
    fn optimal_parity_rule_has_half_generality() {
        let mut reg = CfRegistry::new();
        let attrs: Vec<u32> = (0..11).collect();
        let chain = reg.intern(parity_chain(&attrs).negate());
        let generality = condition_generality(&[chain.clone()], 11).unwrap();
        assert_eq!(generality, 0.5);
        assert_eq!(chain.complexity(), 11);
    }

    #[test]
    fn semantic_equality_examples() {
        let a = CfNode::internal(CfFunction::And, CfNode::leaf(0), CfNode::leaf(1));
        let b = CfNode::internal(CfFunction::And, CfNode::leaf(1), CfNode::leaf(0));
        assert!(semantically_equal(&a, &b, 4).unwrap());
        assert!(!semantically_equal(&a, &a.negate(), 4).unwrap());

        // The decorated chunk construction is exactly the 3-bit parity chain.
        let inner = CfNode::internal(CfFunction::Xor, CfNode::leaf_negated(3), CfNode::leaf(4));
        let chunk = CfNode::internal(CfFunction::Xor, inner.negate(), CfNode::leaf(5));
        assert!(semantically_equal(&chunk, &parity_chain(&[3, 4, 5]), 6).unwrap());
    }

    #[test]
    fn eval_indexed_matches_production_on_randoms() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..200 {
            let cf = random_cf(&mut rng, 6, 5);
            for idx in 0..64u32 {
                let state: Vec<bool> = (0..6).map(|k| (idx >> k) & 1 == 1).collect();
                assert_eq!(eval_indexed(&cf, idx), cf.eval(&state));
            }
        }
    }

    #[test]
    fn optimal_rates() {
        let parity11 = optimal_generality_rate(&Problem::even_parity(11)).unwrap();
        assert!((parity11 - 0.5 / 11.0).abs() < 1e-12);
        assert!((parity11 - 0.04545).abs() < 1e-4);

        let parity7 = optimal_generality_rate(&Problem::even_parity(7)).unwrap();
        assert!((parity7 - 0.5 / 7.0).abs() < 1e-12);

        let mux = optimal_generality_rate(&Problem::multiplexer(2)).unwrap();
        assert!((mux - 0.125 / 3.0).abs() < 1e-12);

        // Hierarchical optima come from the chunk-rule search: pinning the
        // two address metas plus the selected data meta (hmux), or three
        // zero metas (hmaj under the strict tie rule), costs 9 leaves for
        // 1/8 generality either way.
        let hmux = optimal_generality_rate(&Problem::hierarchical_multiplexer_18()).unwrap();
        assert!((hmux - 0.125 / 9.0).abs() < 1e-12);
        let hmaj = optimal_generality_rate(&Problem::hierarchical_majority_on_18()).unwrap();
        assert!((hmaj - 0.125 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn hmux_optimum_agrees_with_exact_generality() {
        // Cross-check one representative optimal rule against the full
        // 2^18 enumeration: pin m0 = 1, m1 = 0 (address 2) and m4 = 0,
        // predicting 0.
        let mut reg = CfRegistry::new();
        let m0 = reg.intern(parity_chain(&[0, 1, 2]));
        let m1_off = reg.intern(parity_chain(&[3, 4, 5]).negate());
        let m4_off = reg.intern(parity_chain(&[12, 13, 14]).negate());
        let condition = vec![m0, m1_off, m4_off];
        let generality = condition_generality(&condition, 18).unwrap();
        assert_eq!(generality, 0.125);

        let problem = Problem::hierarchical_multiplexer_18();
        let complexity: u32 = condition.iter().map(|cf| cf.complexity()).sum();
        assert_eq!(complexity, 9);
        assert!(
            (generality / complexity as f64
                - optimal_generality_rate(&problem).unwrap())
            .abs()
                < 1e-12
        );
    }
}
