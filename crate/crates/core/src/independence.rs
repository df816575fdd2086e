//! Static and dynamic bit-independence tests.
//!
//! Every test has the same shape. A universe of samples pairs a conditioning
//! word `c` with a target word `t`. For each mask `A` of `r` known bits of `c`
//! and each target bit `j`, the samples are split by the pattern `c & A`, and
//! `P(t_j = 1 | pattern)` is compared against `P(t_j = 1)`. The largest
//! absolute gap over patterns is the record's deviation; `I(c_A; t_j)` is
//! reported alongside.
//!
//! | test     | condition on | measure     | universe                              |
//! |----------|--------------|-------------|---------------------------------------|
//! | `stat_io`| `x`          | `y = S(x)`  | inputs                                |
//! | `stat_oi`| `y`          | `x`         | inputs                                |
//! | `stat_oo`| `y`          | other `y`   | inputs                                |
//! | `dyn_io` | `dx`         | `dy`        | pairs with `dx != 0`                  |
//! | `dyn_oi` | `dy`         | `dx`        | pairs with `dx != 0`                  |
//! | `dyn_oo` | `dy`         | other `dy`  | pairs, grouped by the full `dx` value |
//!
//! Bit `k` of a word is `(w >> k) & 1`. In exhaustive mode the universe is
//! every input (static) or every ordered pair of distinct inputs (dynamic),
//! uniformly weighted. In empirical mode it comes from byte streams, and
//! patterns seen fewer than `min_support` times are skipped and counted.
//! Marginals are taken over the samples that fall in retained patterns.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infotheory::{entropy, mutual_information, Distribution, JointDistribution};
use crate::sbox::{BitPermutation, SBox};
use crate::substitution::ByteSubstitution;

/// Largest word width accepted by the exhaustive universes.
pub const MAX_EXHAUSTIVE_BITS: u32 = 12;

pub const DEFAULT_EMPIRICAL_EPSILON: f64 = 0.01;
pub const DEFAULT_EXHAUSTIVE_EPSILON: f64 = 1e-9;
pub const DEFAULT_MIN_SUPPORT: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Empirical,
}

impl Mode {
    pub fn default_epsilon(self) -> f64 {
        match self {
            Mode::Exhaustive => DEFAULT_EXHAUSTIVE_EPSILON,
            Mode::Empirical => DEFAULT_EMPIRICAL_EPSILON,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exhaustive => "exhaustive",
            Mode::Empirical => "empirical",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    StatIo,
    StatOi,
    StatOo,
    DynIo,
    DynOi,
    DynOo,
}

impl TestKind {
    pub const STATIC: [TestKind; 3] = [TestKind::StatIo, TestKind::StatOi, TestKind::StatOo];
    pub const DYNAMIC: [TestKind; 3] = [TestKind::DynIo, TestKind::DynOi, TestKind::DynOo];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::StatIo => "stat_io",
            TestKind::StatOi => "stat_oi",
            TestKind::StatOo => "stat_oo",
            TestKind::DynIo => "dyn_io",
            TestKind::DynOi => "dyn_oi",
            TestKind::DynOo => "dyn_oo",
        }
    }

    pub fn is_dynamic(self) -> bool {
        matches!(self, TestKind::DynIo | TestKind::DynOi | TestKind::DynOo)
    }

    /// Whether the target bits live in the conditioning word.
    fn self_conditioned(self) -> bool {
        matches!(self, TestKind::StatOo | TestKind::DynOo)
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Selection of known bits in an `m`-bit word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitMask {
    width: u32,
    bits: u32,
}

impl BitMask {
    pub fn new(width: u32, bits: u32) -> Self {
        debug_assert!(width == 32 || bits >> width == 0);
        BitMask { width, bits }
    }

    pub fn width(self) -> u32 {
        self.width
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    /// Number of known bits.
    pub fn r(self) -> u32 {
        self.bits.count_ones()
    }

    pub fn contains(self, bit: u32) -> bool {
        (self.bits >> bit) & 1 == 1
    }

    /// Every pattern the known bits can take, as words restricted to the mask.
    pub fn patterns(self) -> impl Iterator<Item = u32> {
        let mask = self.bits;
        let mut next = Some(mask);
        std::iter::from_fn(move || {
            let p = next?;
            next = if p == 0 { None } else { Some((p - 1) & mask) };
            Some(p)
        })
    }
}

impl fmt::Display for BitMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.bits, width = self.width as usize)
    }
}

/// All masks of popcount `r` over `width` bits, ascending as integers.
pub fn enumerate_masks(width: u32, r: u32) -> Result<Vec<BitMask>> {
    if r > width || width > 31 {
        return Err(Error::BadR { r, width });
    }
    let mut out = Vec::new();
    if r == 0 {
        out.push(BitMask::new(width, 0));
        return Ok(out);
    }
    // Gosper's hack: next larger integer with the same popcount.
    let limit = 1u64 << width;
    let mut v: u64 = (1 << r) - 1;
    while v < limit {
        out.push(BitMask::new(width, v as u32));
        let c = v & v.wrapping_neg();
        let ripple = v + c;
        v = (((ripple ^ v) >> 2) / c) | ripple;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestConfig {
    pub mode: Mode,
    /// Number of known bits.
    pub r: u32,
    /// Largest tolerated deviation, in probability units.
    pub epsilon: f64,
    /// Smallest pattern population evaluated in empirical mode.
    pub min_support: u64,
}

impl TestConfig {
    pub fn exhaustive(r: u32) -> Self {
        TestConfig { mode: Mode::Exhaustive, r, epsilon: DEFAULT_EXHAUSTIVE_EPSILON, min_support: DEFAULT_MIN_SUPPORT }
    }

    pub fn empirical(r: u32) -> Self {
        TestConfig { mode: Mode::Empirical, r, epsilon: DEFAULT_EMPIRICAL_EPSILON, min_support: DEFAULT_MIN_SUPPORT }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_min_support(mut self, min_support: u64) -> Self {
        self.min_support = min_support;
        self
    }

    /// Rejects a non-positive epsilon and a zero support threshold.
    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::BadConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.min_support == 0 {
            return Err(Error::BadConfig("min_support must be at least 1".into()));
        }
        Ok(())
    }

    fn effective_support(&self) -> u64 {
        match self.mode {
            Mode::Exhaustive => 1,
            Mode::Empirical => self.min_support,
        }
    }
}

/// A plaintext stream and its substitution.
#[derive(Debug, Clone, Copy)]
pub struct StreamPair<'a> {
    pub input: &'a [u8],
    pub output: &'a [u8],
}

impl<'a> StreamPair<'a> {
    pub fn new(input: &'a [u8], output: &'a [u8]) -> Result<Self> {
        if input.len() != output.len() {
            return Err(Error::LengthMismatch(input.len(), output.len()));
        }
        Ok(StreamPair { input, output })
    }
}

/// Two plaintext streams and their substitutions.
#[derive(Debug, Clone, Copy)]
pub struct PairedStreams<'a> {
    pub input1: &'a [u8],
    pub input2: &'a [u8],
    pub output1: &'a [u8],
    pub output2: &'a [u8],
}

impl<'a> PairedStreams<'a> {
    pub fn new(input1: &'a [u8], input2: &'a [u8], output1: &'a [u8], output2: &'a [u8]) -> Result<Self> {
        let len = input1.len();
        for other in [input2, output1, output2] {
            if other.len() != len {
                return Err(Error::LengthMismatch(len, other.len()));
            }
        }
        Ok(PairedStreams { input1, input2, output1, output2 })
    }
}

/// Position-wise XOR differences `(dx, dy)` of paired streams.
pub fn make_difference_stream(p: &PairedStreams<'_>) -> Result<(Vec<u8>, Vec<u8>)> {
    let p = PairedStreams::new(p.input1, p.input2, p.output1, p.output2)?;
    let dx = p.input1.iter().zip(p.input2).map(|(a, b)| a ^ b).collect();
    let dy = p.output1.iter().zip(p.output2).map(|(a, b)| a ^ b).collect();
    Ok((dx, dy))
}

/// Stream data for an empirical run.
#[derive(Debug, Clone, Copy)]
pub enum TestData<'a> {
    Static(StreamPair<'a>),
    Dynamic(PairedStreams<'a>),
}

/// Outcome for one `(mask, target bit)` combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRecord {
    pub mask: u32,
    pub target_bit: u32,
    pub max_deviation: f64,
    pub mutual_information_bits: f64,
    pub support: u64,
}

/// Word-level entropies accompanying the output/output tests: the output
/// entropy is expected to equal `min(H_in, m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyBound {
    pub input_entropy: f64,
    pub output_entropy: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceResult {
    pub test_kind: TestKind,
    pub mode: Mode,
    pub r: u32,
    pub epsilon: f64,
    pub worst_deviation: f64,
    pub worst_mutual_information: f64,
    pub passed: bool,
    pub skipped_patterns: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_bound: Option<EntropyBound>,
    pub records: Vec<MaskRecord>,
}

/// Per-word sample counts for one conditioning context.
struct Tally {
    bits: usize,
    /// samples per conditioning word
    count: Vec<u64>,
    /// `ones[c * bits + j]`: samples with conditioning word `c` and target bit `j` set
    ones: Vec<u64>,
}

impl Tally {
    fn new(n: usize, bits: usize) -> Self {
        Tally { bits, count: vec![0; n], ones: vec![0; n * bits] }
    }

    #[inline]
    fn add(&mut self, cond: u32, target: u32) {
        let c = cond as usize;
        self.count[c] += 1;
        let row = &mut self.ones[c * self.bits..(c + 1) * self.bits];
        for (j, slot) in row.iter_mut().enumerate() {
            *slot += u64::from((target >> j) & 1);
        }
    }

    fn total(&self) -> u64 {
        self.count.iter().sum()
    }

    /// Folds word counts into per-pattern counts for `mask`.
    fn by_pattern(&self, mask: u32) -> (Vec<u64>, Vec<u64>) {
        let n = self.count.len();
        let mut count = vec![0u64; n];
        let mut ones = vec![0u64; n * self.bits];
        for c in 0..n {
            let cnt = self.count[c];
            if cnt == 0 {
                continue;
            }
            let p = c & mask as usize;
            count[p] += cnt;
            let src = &self.ones[c * self.bits..(c + 1) * self.bits];
            let dst = &mut ones[p * self.bits..(p + 1) * self.bits];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
        (count, ones)
    }
}

/// Result of evaluating one target bit inside one context.
#[derive(Default)]
struct ContextOutcome {
    max_deviation: f64,
    mutual_information: f64,
    support: u64,
    skipped: u64,
}

fn evaluate_context(
    mask: BitMask,
    target: usize,
    bits: usize,
    count: &[u64],
    ones: &[u64],
    min_support: u64,
    count_unseen: bool,
) -> Result<ContextOutcome> {
    let mut kept: Vec<(u64, u64)> = Vec::new();
    let mut skipped = 0;
    for p in mask.patterns() {
        let n = count[p as usize];
        if n >= min_support {
            kept.push((n, ones[p as usize * bits + target]));
        } else if n > 0 || count_unseen {
            skipped += 1;
        }
    }
    let support: u64 = kept.iter().map(|&(n, _)| n).sum();
    if support == 0 {
        return Ok(ContextOutcome { skipped, ..Default::default() });
    }
    let set: u64 = kept.iter().map(|&(_, k)| k).sum();
    let marginal = set as f64 / support as f64;
    let max_deviation = kept.iter().map(|&(n, k)| (k as f64 / n as f64 - marginal).abs()).fold(0.0, f64::max);

    let cells: Vec<u64> = kept.iter().flat_map(|&(n, k)| [n - k, k]).collect();
    let joint = JointDistribution::from_counts(kept.len(), 2, &cells)?;
    let mutual_information = mutual_information(&joint).max(0.0);
    Ok(ContextOutcome { max_deviation, mutual_information, support, skipped })
}

/// The sample universe of one test: one tally per context.
struct Universe {
    bits: u32,
    contexts: Vec<Tally>,
    entropy_bound: Option<EntropyBound>,
}

fn word_entropy(counts: &[u64]) -> Result<f64> {
    Ok(entropy(&Distribution::from_counts(counts)?))
}

fn entropy_bound(input_counts: &[u64], output_counts: &[u64], bits: u32, tolerance: f64) -> Result<EntropyBound> {
    let input_entropy = word_entropy(input_counts)?;
    let output_entropy = word_entropy(output_counts)?;
    let bound = input_entropy.min(f64::from(bits));
    Ok(EntropyBound { input_entropy, output_entropy, bound, holds: (output_entropy - bound).abs() <= tolerance })
}

fn exhaustive_permutation(s: &SBox) -> Result<BitPermutation> {
    let p = s.bit_permutation()?;
    if p.bits() > MAX_EXHAUSTIVE_BITS {
        return Err(Error::TableTooLarge { n: p.len(), max: 1 << MAX_EXHAUSTIVE_BITS });
    }
    Ok(p)
}

/// Checks a byte box and that `outputs` are its image of `inputs`.
fn verify_image(s: &SBox, inputs: &[u8], outputs: &[u8]) -> Result<BitPermutation> {
    if s.len() != 256 {
        return Err(Error::NotByteBox { n: s.len() });
    }
    let p = s.bit_permutation()?;
    let sub = ByteSubstitution::new(s)?;
    if inputs.len() != outputs.len() {
        return Err(Error::LengthMismatch(inputs.len(), outputs.len()));
    }
    if let Some(offset) = inputs.iter().zip(outputs).position(|(&x, &y)| sub.byte(x) != y) {
        return Err(Error::StreamMismatch { offset });
    }
    Ok(p)
}

fn static_universe(
    kind: TestKind,
    p: &BitPermutation,
    samples: impl Iterator<Item = (u32, u32)>,
    tolerance: f64,
) -> Result<Universe> {
    let n = p.len();
    let bits = p.bits();
    let mut tally = Tally::new(n, bits as usize);
    let mut input_counts = vec![0u64; n];
    let mut output_counts = vec![0u64; n];
    for (x, y) in samples {
        input_counts[x as usize] += 1;
        output_counts[y as usize] += 1;
        match kind {
            TestKind::StatIo => tally.add(x, y),
            TestKind::StatOi => tally.add(y, x),
            _ => tally.add(y, y),
        }
    }
    if tally.total() == 0 {
        return Err(Error::EmptySample);
    }
    let entropy_bound = if kind == TestKind::StatOo {
        Some(entropy_bound(&input_counts, &output_counts, bits, tolerance)?)
    } else {
        None
    };
    Ok(Universe { bits, contexts: vec![tally], entropy_bound })
}

fn dynamic_universe(
    kind: TestKind,
    p: &BitPermutation,
    pairs: impl Iterator<Item = (u32, u32)>,
    tolerance: f64,
) -> Result<Universe> {
    let n = p.len();
    let bits = p.bits();
    let width = bits as usize;
    let mut contexts: Vec<Tally> = if kind == TestKind::DynOo {
        (0..n).map(|_| Tally::new(n, width)).collect()
    } else {
        vec![Tally::new(n, width)]
    };
    let mut dx_counts = vec![0u64; n];
    let mut dy_counts = vec![0u64; n];
    for (dx, dy) in pairs {
        if dx == 0 {
            continue;
        }
        dx_counts[dx as usize] += 1;
        dy_counts[dy as usize] += 1;
        match kind {
            TestKind::DynIo => contexts[0].add(dx, dy),
            TestKind::DynOi => contexts[0].add(dy, dx),
            _ => contexts[dx as usize].add(dy, dy),
        }
    }
    if dx_counts.iter().all(|&c| c == 0) {
        return Err(Error::DegenerateData);
    }
    contexts.retain(|t| t.total() > 0);
    let entropy_bound =
        if kind == TestKind::DynOo { Some(entropy_bound(&dx_counts, &dy_counts, bits, tolerance)?) } else { None };
    Ok(Universe { bits, contexts, entropy_bound })
}

fn build_universe(kind: TestKind, s: &SBox, cfg: &TestConfig, data: Option<TestData<'_>>) -> Result<Universe> {
    let tolerance = match cfg.mode {
        Mode::Exhaustive => 1e-9,
        Mode::Empirical => 1e-6,
    };
    match (cfg.mode, kind.is_dynamic()) {
        (Mode::Exhaustive, false) => {
            let p = exhaustive_permutation(s)?;
            let samples = (0..p.len()).map(|x| (x as u32, p.apply(x)));
            static_universe(kind, &p, samples, tolerance)
        }
        (Mode::Exhaustive, true) => {
            let p = exhaustive_permutation(s)?;
            let n = p.len();
            let pairs = (1..n).flat_map(|a| {
                let p = &p;
                (0..n).map(move |x| (a as u32, p.apply(x) ^ p.apply(x ^ a)))
            });
            dynamic_universe(kind, &p, pairs, tolerance)
        }
        (Mode::Empirical, false) => {
            let pair = match data {
                Some(TestData::Static(pair)) => pair,
                Some(TestData::Dynamic(p)) => StreamPair::new(p.input1, p.output1)?,
                None => return Err(Error::MissingData("an input stream")),
            };
            let p = verify_image(s, pair.input, pair.output)?;
            let samples = pair.input.iter().zip(pair.output).map(|(&x, &y)| (u32::from(x), u32::from(y)));
            static_universe(kind, &p, samples, tolerance)
        }
        (Mode::Empirical, true) => {
            let streams = match data {
                Some(TestData::Dynamic(p)) => p,
                _ => return Err(Error::MissingData("two input streams")),
            };
            let streams = PairedStreams::new(streams.input1, streams.input2, streams.output1, streams.output2)?;
            let p = verify_image(s, streams.input1, streams.output1)?;
            verify_image(s, streams.input2, streams.output2)?;
            let (dx, dy) = make_difference_stream(&streams)?;
            let pairs = dx.iter().zip(&dy).map(|(&a, &b)| (u32::from(a), u32::from(b)));
            dynamic_universe(kind, &p, pairs, tolerance)
        }
    }
}

/// Runs one of the six tests.
pub fn run_test(kind: TestKind, s: &SBox, cfg: &TestConfig, data: Option<TestData<'_>>) -> Result<IndependenceResult> {
    cfg.validate()?;
    let width = s.bit_width().ok_or(Error::NotPowerOfTwo(s.len()))?;
    if cfg.r > width {
        return Err(Error::BadR { r: cfg.r, width });
    }
    if kind.self_conditioned() && cfg.r == width {
        return Err(Error::BadMask { r: cfg.r, width });
    }
    if cfg.mode == Mode::Empirical && s.len() != 256 {
        return Err(Error::NotByteBox { n: s.len() });
    }
    let universe = build_universe(kind, s, cfg, data)?;
    let masks = enumerate_masks(universe.bits, cfg.r)?;
    let min_support = cfg.effective_support();
    let count_unseen = cfg.mode == Mode::Empirical;
    let bits = universe.bits as usize;

    let per_mask: Vec<(Vec<MaskRecord>, u64)> = masks
        .par_iter()
        .map(|&mask| {
            let folded: Vec<(Vec<u64>, Vec<u64>)> =
                universe.contexts.iter().map(|t| t.by_pattern(mask.bits())).collect();
            let mut records = Vec::new();
            let mut skipped = 0;
            for target in 0..universe.bits {
                if kind.self_conditioned() && mask.contains(target) {
                    continue;
                }
                let mut max_deviation: f64 = 0.0;
                let mut weighted_mi = 0.0;
                let mut support = 0u64;
                for (count, ones) in &folded {
                    let o = evaluate_context(mask, target as usize, bits, count, ones, min_support, count_unseen)?;
                    skipped += o.skipped;
                    if o.support == 0 {
                        continue;
                    }
                    max_deviation = max_deviation.max(o.max_deviation);
                    weighted_mi += o.mutual_information * o.support as f64;
                    support += o.support;
                }
                if support > 0 {
                    records.push(MaskRecord {
                        mask: mask.bits(),
                        target_bit: target,
                        max_deviation,
                        mutual_information_bits: weighted_mi / support as f64,
                        support,
                    });
                }
            }
            Ok((records, skipped))
        })
        .collect::<Result<_>>()?;

    let skipped_patterns = per_mask.iter().map(|(_, s)| s).sum();
    let records: Vec<MaskRecord> = per_mask.into_iter().flat_map(|(r, _)| r).collect();
    if records.is_empty() {
        return Err(Error::InsufficientSupport { min_support });
    }
    let worst_deviation = records.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    let worst_mutual_information = records.iter().map(|r| r.mutual_information_bits).fold(0.0, f64::max);
    Ok(IndependenceResult {
        test_kind: kind,
        mode: cfg.mode,
        r: cfg.r,
        epsilon: cfg.epsilon,
        worst_deviation,
        worst_mutual_information,
        passed: worst_deviation <= cfg.epsilon,
        skipped_patterns,
        entropy_bound: universe.entropy_bound,
        records,
    })
}

/// Known input bits against each output bit.
pub fn stat_io(s: &SBox, cfg: &TestConfig, data: Option<StreamPair<'_>>) -> Result<IndependenceResult> {
    run_test(TestKind::StatIo, s, cfg, data.map(TestData::Static))
}

/// Known output bits against each input bit.
pub fn stat_oi(s: &SBox, cfg: &TestConfig, data: Option<StreamPair<'_>>) -> Result<IndependenceResult> {
    run_test(TestKind::StatOi, s, cfg, data.map(TestData::Static))
}

/// Known output bits against each remaining output bit.
pub fn stat_oo(s: &SBox, cfg: &TestConfig, data: Option<StreamPair<'_>>) -> Result<IndependenceResult> {
    run_test(TestKind::StatOo, s, cfg, data.map(TestData::Static))
}

/// Known input-difference bits against each output-difference bit.
pub fn dyn_io(s: &SBox, cfg: &TestConfig, data: Option<PairedStreams<'_>>) -> Result<IndependenceResult> {
    run_test(TestKind::DynIo, s, cfg, data.map(TestData::Dynamic))
}

/// Known output-difference bits against each input-difference bit.
pub fn dyn_oi(s: &SBox, cfg: &TestConfig, data: Option<PairedStreams<'_>>) -> Result<IndependenceResult> {
    run_test(TestKind::DynOi, s, cfg, data.map(TestData::Dynamic))
}

/// Within each input difference, known output-difference bits against each
/// remaining output-difference bit.
pub fn dyn_oo(s: &SBox, cfg: &TestConfig, data: Option<PairedStreams<'_>>) -> Result<IndependenceResult> {
    run_test(TestKind::DynOo, s, cfg, data.map(TestData::Dynamic))
}
