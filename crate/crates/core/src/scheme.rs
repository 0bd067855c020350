//! The binary search pooling scheme.
//!
//! A group is either UNKNOWN (nothing known about it) or POSITIVE (known to
//! hold at least one contaminated item). An UNKNOWN group costs one pooled
//! test; if it comes back positive the group is handled as POSITIVE. A
//! POSITIVE group of one item is identified without further tests. A POSITIVE
//! group of `m >= 2` items is split into `floor(m/2)` and `ceil(m/2)` halves
//! and the left half is tested:
//!
//! * left negative: the right half must be positive, so it is handled as
//!   POSITIVE without its own test ([`SchemeVariant::PaperLazy`] only);
//! * left positive: the left half is handled as POSITIVE and the right half
//!   as UNKNOWN.
//!
//! [`SchemeVariant::NaiveBothHalves`] never infers and always treats the right
//! half as UNKNOWN. It exists for comparison; the closed forms in
//! [`crate::closed_form`] only describe the lazy variant.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::pmf::Pmf;

/// Largest population handled by exhaustive enumeration (`2^20` patterns).
pub const MAX_ENUMERATION_ITEMS: usize = 20;

/// Contamination pattern of one population: `true` marks a contaminated item.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ContaminationVector {
    items: Vec<bool>,
}

impl ContaminationVector {
    pub fn new(items: Vec<bool>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidInput(
                "contamination vector must hold at least one item".into(),
            ));
        }
        Ok(Self { items })
    }

    /// Items `0..len` taken from the low bits of `mask` (bit `i` is item `i`).
    pub fn from_mask(mask: u64, len: usize) -> Result<Self> {
        if len > 64 {
            return Err(Error::InvalidInput(format!("mask patterns hold at most 64 items, got {len}")));
        }
        Self::new((0..len).map(|i| mask >> i & 1 == 1).collect())
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(pattern: &str) -> Result<Self> {
        let items = pattern
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidInput(format!("unexpected character {other:?} in pattern"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(items)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[bool] {
        &self.items
    }

    pub fn contaminated_indices(&self) -> Vec<usize> {
        self.items
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| c.then_some(i))
            .collect()
    }

    /// Copy with one more item appended.
    pub fn extended(&self, extra: bool) -> Self {
        let mut items = self.items.clone();
        items.push(extra);
        Self { items }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SchemeVariant {
    /// Skips the right half's test when the left half of a positive group is
    /// negative.
    #[default]
    PaperLazy,
    /// Tests both halves of every positive group.
    NaiveBothHalves,
}

impl SchemeVariant {
    pub fn name(self) -> &'static str {
        match self {
            SchemeVariant::PaperLazy => "lazy",
            SchemeVariant::NaiveBothHalves => "naive",
        }
    }
}

impl std::str::FromStr for SchemeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lazy" => Ok(SchemeVariant::PaperLazy),
            "naive" | "naive-both-halves" => Ok(SchemeVariant::NaiveBothHalves),
            other => Err(Error::InvalidInput(format!("unknown scheme variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestOutcome {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// A pooled test was run on the group.
    PhysicalTest(TestOutcome),
    /// The group is known to be positive without being tested.
    InferredPositive,
}

/// One step of a scheme execution. `group` is a zero-based half-open range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub group: Range<usize>,
    pub kind: TraceKind,
}

impl TraceEntry {
    pub fn is_physical(&self) -> bool {
        matches!(self.kind, TraceKind::PhysicalTest(_))
    }

    fn is_positive(&self) -> bool {
        matches!(
            self.kind,
            TraceKind::PhysicalTest(TestOutcome::Positive) | TraceKind::InferredPositive
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeResult {
    pub test_count: u64,
    pub trace: Vec<TraceEntry>,
}

impl SchemeResult {
    /// Items the trace identifies as contaminated: every single-item group
    /// that tested or was inferred positive.
    pub fn identified_contaminated(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .trace
            .iter()
            .filter(|e| e.group.len() == 1 && e.is_positive())
            .map(|e| e.group.start)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Items cleared by a negative pooled test.
    pub fn identified_clean(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .trace
            .iter()
            .filter(|e| e.kind == TraceKind::PhysicalTest(TestOutcome::Negative))
            .flat_map(|e| e.group.clone())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Answers pooled tests for a population.
pub trait GroupOracle {
    fn len(&self) -> usize;

    /// Whether any item in `range` is contaminated.
    fn any_contaminated(&self, range: Range<usize>) -> bool;
}

/// Dense pattern with prefix counts, `O(1)` per pooled test.
pub struct PrefixOracle {
    prefix: Vec<u32>,
}

impl PrefixOracle {
    pub fn new(items: &[bool]) -> Self {
        let mut prefix = Vec::with_capacity(items.len() + 1);
        let mut acc = 0u32;
        prefix.push(0);
        for &c in items {
            acc += c as u32;
            prefix.push(acc);
        }
        Self { prefix }
    }
}

impl GroupOracle for PrefixOracle {
    fn len(&self) -> usize {
        self.prefix.len() - 1
    }

    fn any_contaminated(&self, range: Range<usize>) -> bool {
        self.prefix[range.end] > self.prefix[range.start]
    }
}

/// Sparse pattern given by sorted contaminated positions.
pub struct SortedOracle<'a> {
    len: usize,
    positions: &'a [usize],
}

impl<'a> SortedOracle<'a> {
    /// `positions` must be strictly increasing and below `len`.
    pub fn new(len: usize, positions: &'a [usize]) -> Self {
        debug_assert!(positions.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(positions.last().is_none_or(|&x| x < len));
        Self { len, positions }
    }
}

impl GroupOracle for SortedOracle<'_> {
    fn len(&self) -> usize {
        self.len
    }

    fn any_contaminated(&self, range: Range<usize>) -> bool {
        let i = self.positions.partition_point(|&x| x < range.start);
        i < self.positions.len() && self.positions[i] < range.end
    }
}

/// Pattern packed into the low bits of a word.
struct MaskOracle {
    mask: u32,
    len: usize,
}

impl GroupOracle for MaskOracle {
    fn len(&self) -> usize {
        self.len
    }

    fn any_contaminated(&self, range: Range<usize>) -> bool {
        let width = range.end - range.start;
        let bits = if width >= 32 { u32::MAX } else { (1u32 << width) - 1 };
        (self.mask >> range.start) & bits != 0
    }
}

trait Recorder {
    fn tested(&mut self, group: Range<usize>, positive: bool);
    fn inferred(&mut self, group: Range<usize>);
}

struct Counter(u64);

impl Recorder for Counter {
    #[inline]
    fn tested(&mut self, _: Range<usize>, _: bool) {
        self.0 += 1;
    }

    #[inline]
    fn inferred(&mut self, _: Range<usize>) {}
}

impl Recorder for Vec<TraceEntry> {
    fn tested(&mut self, group: Range<usize>, positive: bool) {
        let outcome = if positive { TestOutcome::Positive } else { TestOutcome::Negative };
        self.push(TraceEntry { group, kind: TraceKind::PhysicalTest(outcome) });
    }

    fn inferred(&mut self, group: Range<usize>) {
        self.push(TraceEntry { group, kind: TraceKind::InferredPositive });
    }
}

struct Walker<'a, O, R> {
    oracle: &'a O,
    variant: SchemeVariant,
    rec: R,
}

impl<O: GroupOracle, R: Recorder> Walker<'_, O, R> {
    fn unknown(&mut self, group: Range<usize>) {
        let positive = self.oracle.any_contaminated(group.clone());
        self.rec.tested(group.clone(), positive);
        if positive {
            self.positive(group);
        }
    }

    fn positive(&mut self, group: Range<usize>) {
        let m = group.len();
        if m == 1 {
            return;
        }
        let mid = group.start + m / 2;
        let (left, right) = (group.start..mid, mid..group.end);
        let left_positive = self.oracle.any_contaminated(left.clone());
        self.rec.tested(left.clone(), left_positive);
        if left_positive {
            self.positive(left);
            self.unknown(right);
        } else {
            match self.variant {
                SchemeVariant::PaperLazy => {
                    self.rec.inferred(right.clone());
                    self.positive(right);
                }
                SchemeVariant::NaiveBothHalves => self.unknown(right),
            }
        }
    }
}

fn walk<O: GroupOracle, R: Recorder>(oracle: &O, variant: SchemeVariant, rec: R) -> R {
    let mut walker = Walker { oracle, variant, rec };
    walker.unknown(0..oracle.len());
    walker.rec
}

/// Runs the scheme on `v`, recording every pooled test and inference.
pub fn execute_scheme(v: &ContaminationVector, variant: SchemeVariant) -> SchemeResult {
    let oracle = PrefixOracle::new(v.items());
    let trace = walk(&oracle, variant, Vec::new());
    let test_count = trace.iter().filter(|e| e.is_physical()).count() as u64;
    SchemeResult { test_count, trace }
}

/// Number of pooled tests the scheme uses, without building a trace.
pub fn count_tests<O: GroupOracle>(oracle: &O, variant: SchemeVariant) -> u64 {
    if oracle.len() == 0 {
        return 0;
    }
    walk(oracle, variant, Counter(0)).0
}

/// Test count for the pattern held in the low `len` bits of `mask`.
pub fn count_tests_mask(mask: u32, len: usize, variant: SchemeVariant) -> u64 {
    debug_assert!((1..=32).contains(&len));
    count_tests(&MaskOracle { mask, len }, variant)
}

/// Exact PMF of the test count by running the scheme on all `2^N` patterns.
///
/// Patterns are first tallied by (number of contaminated items, test count)
/// in integers, then weighted by `p^k q^(N-k)` in ascending `k`, so the
/// result does not depend on visiting order.
pub fn enumerate_distribution(n: usize, q: f64, variant: SchemeVariant) -> Result<Pmf> {
    if n == 0 || n > MAX_ENUMERATION_ITEMS {
        return Err(Error::ResourceLimit(format!(
            "exhaustive enumeration supports 1 <= N <= {MAX_ENUMERATION_ITEMS}, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("q = {q} is outside [0, 1]")));
    }
    let p = 1.0 - q;
    let max_t = 2 * n - 1;
    let mut tally = vec![vec![0u64; max_t + 1]; n + 1];
    for mask in 0u32..(1u32 << n) {
        let t = count_tests_mask(mask, n, variant) as usize;
        tally[mask.count_ones() as usize][t] += 1;
    }
    let mut weights = vec![0.0; max_t + 1];
    for (k, row) in tally.iter().enumerate() {
        let w = p.powi(k as i32) * q.powi((n - k) as i32);
        for (t, &count) in row.iter().enumerate() {
            if count > 0 {
                weights[t] += count as f64 * w;
            }
        }
    }
    Ok(Pmf::from_weights(n as u64, weights))
}

/// Whether appending `extra` to `v` leaves the lazy scheme's test count the
/// same or larger.
pub fn check_monotone_extension(v: &ContaminationVector, extra: bool) -> bool {
    let base = execute_scheme(v, SchemeVariant::PaperLazy).test_count;
    let longer = execute_scheme(&v.extended(extra), SchemeVariant::PaperLazy).test_count;
    base <= longer
}
