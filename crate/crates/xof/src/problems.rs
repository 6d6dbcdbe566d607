//! Boolean benchmark environments: uniform instance sampling plus a
//! deterministic labeling function per problem.
//!
//! The hierarchical 18-bit problems factor through six "meta bits", one per
//! non-overlapping three-bit chunk: meta `i` is the XOR of bits
//! `D(3i)..D(3i+2)`. The multiplexer variant then applies a 6-bit
//! multiplexer to the metas; the majority variant counts them.

use std::fmt;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProblemError {
    #[error("unknown problem name `{0}` (expected parity-<n>, mux-<k>, hmux18 or hmaj18)")]
    UnknownName(String),
    #[error("parity needs at least 2 attributes, got {0}")]
    ParityTooSmall(u32),
    #[error("multiplexer address width must be in 1..=4, got {0}")]
    MuxAddressWidth(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Problem {
    /// Labels 1 when the number of set bits has the configured parity
    /// (even, by default).
    EvenParity { n: u32, even_is_one: bool },
    /// `k` address bits (D0 most significant) select one of `2^k` data bits.
    Multiplexer { address_bits: u32 },
    /// 6-bit multiplexer over the six chunk-parity meta bits.
    HierarchicalMultiplexer18,
    /// 1 when at least four of the six meta bits are set; an exact
    /// three-three split labels 0 unless `ties_are_on`.
    HierarchicalMajorityOn18 { ties_are_on: bool },
}

impl Problem {
    pub fn even_parity(n: u32) -> Self {
        assert!(n >= 2, "parity needs at least 2 attributes");
        Problem::EvenParity {
            n,
            even_is_one: true,
        }
    }

    /// Parity with an explicit label polarity. Both classes cover half the
    /// space either way; the flag only swaps the class names.
    pub fn even_parity_with_polarity(n: u32, even_is_one: bool) -> Self {
        assert!(n >= 2, "parity needs at least 2 attributes");
        Problem::EvenParity { n, even_is_one }
    }

    pub fn multiplexer(address_bits: u32) -> Self {
        assert!((1..=4).contains(&address_bits));
        Problem::Multiplexer { address_bits }
    }

    pub fn hierarchical_multiplexer_18() -> Self {
        Problem::HierarchicalMultiplexer18
    }

    pub fn hierarchical_majority_on_18() -> Self {
        Problem::HierarchicalMajorityOn18 { ties_are_on: false }
    }

    pub fn hierarchical_majority_on_18_with_ties(ties_are_on: bool) -> Self {
        Problem::HierarchicalMajorityOn18 { ties_are_on }
    }

    /// Parses the CLI names: `parity-<n>`, `mux-<k>`, `hmux18`, `hmaj18`.
    pub fn parse(name: &str) -> Result<Self, ProblemError> {
        if let Some(n) = name.strip_prefix("parity-") {
            let n: u32 = n
                .parse()
                .map_err(|_| ProblemError::UnknownName(name.to_string()))?;
            if n < 2 {
                return Err(ProblemError::ParityTooSmall(n));
            }
            return Ok(Problem::even_parity(n));
        }
        if let Some(k) = name.strip_prefix("mux-") {
            let k: u32 = k
                .parse()
                .map_err(|_| ProblemError::UnknownName(name.to_string()))?;
            if !(1..=4).contains(&k) {
                return Err(ProblemError::MuxAddressWidth(k));
            }
            return Ok(Problem::Multiplexer { address_bits: k });
        }
        match name {
            "hmux18" => Ok(Problem::HierarchicalMultiplexer18),
            "hmaj18" => Ok(Problem::hierarchical_majority_on_18()),
            _ => Err(ProblemError::UnknownName(name.to_string())),
        }
    }

    pub fn attributes(&self) -> u32 {
        match self {
            Problem::EvenParity { n, .. } => *n,
            Problem::Multiplexer { address_bits } => address_bits + (1 << address_bits),
            Problem::HierarchicalMultiplexer18 => 18,
            Problem::HierarchicalMajorityOn18 { .. } => 18,
        }
    }

    /// Ground-truth class of a state. Pure: equal states always get equal
    /// labels. Panics if the state length disagrees with [`attributes`].
    ///
    /// [`attributes`]: Problem::attributes
    pub fn label(&self, state: &[bool]) -> u8 {
        assert_eq!(
            state.len(),
            self.attributes() as usize,
            "state length does not match the problem"
        );
        match self {
            Problem::EvenParity { even_is_one, .. } => {
                let ones = state.iter().filter(|&&b| b).count();
                ((ones % 2 == 0) == *even_is_one) as u8
            }
            Problem::Multiplexer { address_bits } => {
                let k = *address_bits as usize;
                let mut addr = 0usize;
                for &bit in &state[..k] {
                    addr = (addr << 1) | bit as usize;
                }
                state[k + addr] as u8
            }
            Problem::HierarchicalMultiplexer18 => {
                let m = meta_bits(state);
                let addr = ((m[0] as usize) << 1) | m[1] as usize;
                m[2 + addr] as u8
            }
            Problem::HierarchicalMajorityOn18 { ties_are_on } => {
                let ones = meta_bits(state).iter().filter(|&&b| b).count();
                let threshold = if *ties_are_on { 3 } else { 4 };
                (ones >= threshold) as u8
            }
        }
    }

    /// Label of the state with the given index (D0 = least-significant bit).
    pub fn label_of_index(&self, idx: u32) -> u8 {
        let n = self.attributes();
        let state: Vec<bool> = (0..n).map(|k| (idx >> k) & 1 == 1).collect();
        self.label(&state)
    }

    /// Label as a function of the six meta bits, for the hierarchical
    /// problems only (meta `i` at bit `i` of `meta`).
    pub fn label_of_meta(&self, meta: u32) -> u8 {
        match self {
            Problem::HierarchicalMultiplexer18 => {
                let m: Vec<bool> = (0..6).map(|i| (meta >> i) & 1 == 1).collect();
                let addr = ((m[0] as usize) << 1) | m[1] as usize;
                m[2 + addr] as u8
            }
            Problem::HierarchicalMajorityOn18 { ties_are_on } => {
                let ones = (meta & 0x3f).count_ones();
                let threshold = if *ties_are_on { 3 } else { 4 };
                (ones >= threshold) as u8
            }
            _ => panic!("meta bits are only defined for the hierarchical problems"),
        }
    }

    /// Draws a state uniformly from `{0,1}^n`.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<bool> {
        (0..self.attributes()).map(|_| rng.gen_bool(0.5)).collect()
    }

    pub fn name(&self) -> String {
        match self {
            Problem::EvenParity { n, .. } => format!("parity-{n}"),
            Problem::Multiplexer { address_bits } => format!("mux-{address_bits}"),
            Problem::HierarchicalMultiplexer18 => "hmux18".to_string(),
            Problem::HierarchicalMajorityOn18 { .. } => "hmaj18".to_string(),
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

fn meta_bits(state: &[bool]) -> [bool; 6] {
    let mut m = [false; 6];
    for (i, chunk) in state.chunks_exact(3).enumerate() {
        m[i] = chunk[0] ^ chunk[1] ^ chunk[2];
    }
    m
}
