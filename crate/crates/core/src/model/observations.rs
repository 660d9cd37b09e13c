use std::collections::BTreeMap;

/// Observed transition counts `O(z, s)`, keyed by state indices. Pairs that
/// were never recorded count as zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ObservationFunction {
    counts: BTreeMap<(usize, usize), u64>,
}

impl ObservationFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, from: usize, to: usize) -> u64 {
        self.counts.get(&(from, to)).copied().unwrap_or(0)
    }

    pub fn add(&mut self, from: usize, to: usize, count: u64) {
        if count > 0 {
            *self.counts.entry((from, to)).or_insert(0) += count;
        }
    }

    /// `Σ_s O(from, s)`
    pub fn total_from(&self, from: usize) -> u64 {
        self.counts
            .range((from, 0)..=(from, usize::MAX))
            .map(|(_, c)| *c)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Nonzero entries in `(from, to)` order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), u64)> + '_ {
        self.counts.iter().map(|(k, v)| (*k, *v))
    }

    pub fn merge_from(&mut self, other: &ObservationFunction) {
        for ((z, s), c) in other.iter() {
            self.add(z, s, c);
        }
    }
}

/// Pointwise sum of two observation functions.
pub fn merge_observations(a: &ObservationFunction, b: &ObservationFunction) -> ObservationFunction {
    let mut out = a.clone();
    out.merge_from(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obs(entries: &[((usize, usize), u64)]) -> ObservationFunction {
        let mut o = ObservationFunction::new();
        for ((z, s), c) in entries {
            o.add(*z, *s, *c);
        }
        o
    }

    #[test]
    fn pointwise_addition() {
        let a = obs(&[((2, 4), 3)]);
        let b = obs(&[((2, 4), 2), ((2, 3), 1)]);
        assert_eq!(merge_observations(&a, &b), obs(&[((2, 4), 5), ((2, 3), 1)]));
        assert_eq!(merge_observations(&a, &ObservationFunction::new()), a);
        assert!(merge_observations(&ObservationFunction::new(), &ObservationFunction::new()).is_empty());
    }

    #[test]
    fn totals_per_source() {
        let o = obs(&[((1, 0), 4), ((1, 7), 6), ((2, 1), 9)]);
        assert_eq!(o.total_from(1), 10);
        assert_eq!(o.total_from(2), 9);
        assert_eq!(o.total_from(0), 0);
        assert_eq!(o.get(5, 5), 0);
    }

    fn arb_obs() -> impl Strategy<Value = ObservationFunction> {
        prop::collection::vec(((0usize..4, 0usize..4), 0u64..50), 0..8).prop_map(|v| obs(&v))
    }

    proptest! {
        #[test]
        fn merge_is_commutative_and_associative(a in arb_obs(), b in arb_obs(), c in arb_obs()) {
            prop_assert_eq!(merge_observations(&a, &b), merge_observations(&b, &a));
            prop_assert_eq!(
                merge_observations(&merge_observations(&a, &b), &c),
                merge_observations(&a, &merge_observations(&b, &c))
            );
            prop_assert_eq!(merge_observations(&a, &ObservationFunction::new()), a);
        }
    }
}
