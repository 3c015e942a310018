use serde::Serialize;

use super::{FeatureBlock, SlotScore};
use crate::error::{Error, Result};

/// Bijection between complex slots and complex feature-channels.
///
/// `slot_map[k]` is the feature-channel carried by slot `k` (all indices are
/// 0-based). Acting on a block, slot `k` takes feature-channel pair
/// `(ψ(k), ψ(k)+K)`, so real and imaginary halves always move together.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PermutationRule {
    slot_map: Vec<usize>,
    inverse: Vec<usize>,
}

impl PermutationRule {
    pub fn identity(slots: usize) -> Self {
        PermutationRule {
            slot_map: (0..slots).collect(),
            inverse: (0..slots).collect(),
        }
    }

    pub fn from_slot_map(slot_map: Vec<usize>) -> Result<Self> {
        let k = slot_map.len();
        let mut inverse = vec![usize::MAX; k];
        for (slot, &channel) in slot_map.iter().enumerate() {
            if channel >= k || inverse[channel] != usize::MAX {
                return Err(Error::NotAPermutation(k));
            }
            inverse[channel] = slot;
        }
        Ok(PermutationRule { slot_map, inverse })
    }

    /// `ψ`: slot → feature-channel.
    pub fn slot_map(&self) -> &[usize] {
        &self.slot_map
    }

    /// `ψ⁻¹`: feature-channel → slot.
    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    pub fn len(&self) -> usize {
        self.slot_map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot_map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.slot_map.iter().enumerate().all(|(i, &c)| i == c)
    }

    /// Column action on all `C = 2K` feature-channels: output column `j`
    /// reads input column `columns()[j]`.
    pub fn columns(&self) -> Vec<usize> {
        let k = self.len();
        self.slot_map
            .iter()
            .copied()
            .chain(self.slot_map.iter().map(|&c| c + k))
            .collect()
    }
}

/// Assigns the i-th most important feature-channel to the slot with the i-th
/// smallest score. `importance_order` lists 0-based feature-channels, most
/// important first. Equal scores keep ascending slot order.
pub fn build_permutation(
    importance_order: &[usize],
    scores: &SlotScore,
) -> Result<PermutationRule> {
    let k = importance_order.len();
    if scores.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            actual: scores.len(),
        });
    }
    let mut seen = vec![false; k];
    for &c in importance_order {
        if c >= k || std::mem::replace(&mut seen[c], true) {
            return Err(Error::NotAPermutation(k));
        }
    }
    let mut slot_map = vec![0; k];
    for (&slot, &channel) in scores.ascending_slots().iter().zip(importance_order) {
        slot_map[slot] = channel;
    }
    PermutationRule::from_slot_map(slot_map)
}

fn reorder_columns(
    block: &FeatureBlock,
    rule: &PermutationRule,
    columns: &[usize],
) -> Result<FeatureBlock> {
    if block.slot_count() != rule.len() {
        return Err(Error::LengthMismatch {
            expected: rule.len(),
            actual: block.slot_count(),
        });
    }
    let values = block
        .rows()
        .flat_map(|row| columns.iter().map(move |&c| row[c]))
        .collect();
    FeatureBlock::new(block.token_count(), block.channel_count(), values)
}

/// `z = Ψ(F)`: slot `k` of the output carries feature-channel pair `ψ(k)`.
pub fn permute(block: &FeatureBlock, rule: &PermutationRule) -> Result<FeatureBlock> {
    reorder_columns(block, rule, &rule.columns())
}

/// `F̂ = Ψ⁻¹(ẑ)`.
pub fn inverse_permute(block: &FeatureBlock, rule: &PermutationRule) -> Result<FeatureBlock> {
    let k = rule.len();
    let columns: Vec<usize> = rule
        .inverse()
        .iter()
        .copied()
        .chain(rule.inverse().iter().map(|&s| s + k))
        .collect();
    reorder_columns(block, rule, &columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_based(map: &[usize]) -> Vec<usize> {
        map.iter().map(|c| c + 1).collect()
    }

    #[test]
    fn ranks_importance_onto_scores() {
        let scores = SlotScore::new(vec![0.5, 0.1, 0.9]).unwrap();
        let rule = build_permutation(&[0, 1, 2], &scores).unwrap();
        // channel 1 -> slot 2, channel 2 -> slot 1, channel 3 -> slot 3
        assert_eq!(one_based(rule.inverse()), vec![2, 1, 3]);
        assert_eq!(one_based(rule.slot_map()), vec![2, 1, 3]);

        let scores = SlotScore::new(vec![0.9, 0.1]).unwrap();
        let rule = build_permutation(&[1, 0], &scores).unwrap();
        // channel 2 -> slot 2, channel 1 -> slot 1
        assert!(rule.is_identity());
    }

    #[test]
    fn ties_keep_slot_order() {
        let scores = SlotScore::new(vec![0.3; 5]).unwrap();
        let rule = build_permutation(&[0, 1, 2, 3, 4], &scores).unwrap();
        assert!(rule.is_identity());
    }

    #[test]
    fn rejects_non_permutations() {
        let scores = SlotScore::new(vec![0.3; 3]).unwrap();
        assert!(matches!(
            build_permutation(&[0, 0, 1], &scores),
            Err(Error::NotAPermutation(3))
        ));
        assert!(build_permutation(&[0, 1, 3], &scores).is_err());
        assert!(build_permutation(&[0, 1], &scores).is_err());
        assert!(PermutationRule::from_slot_map(vec![1, 1]).is_err());
    }

    #[test]
    fn swap_moves_real_and_imaginary_together() {
        let f = FeatureBlock::from_rows(&[vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        let swap = PermutationRule::from_slot_map(vec![1, 0]).unwrap();
        let z = permute(&f, &swap).unwrap();
        assert_eq!(z.values(), &[2.0, 1.0, 4.0, 3.0]);
        assert_eq!(permute(&z, &swap).unwrap(), f);
        assert_eq!(inverse_permute(&z, &swap).unwrap(), f);
    }

    #[test]
    fn identity_is_noop() {
        let f = FeatureBlock::from_rows(&[vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]).unwrap();
        let id = PermutationRule::identity(3);
        assert_eq!(permute(&f, &id).unwrap(), f);
        assert_eq!(inverse_permute(&f, &id).unwrap(), f);
    }

    #[test]
    fn three_cycle_round_trips() {
        let f = FeatureBlock::from_rows(&[
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0],
        ])
        .unwrap();
        let rule = PermutationRule::from_slot_map(vec![2, 0, 1]).unwrap();
        let z = permute(&f, &rule).unwrap();
        assert_eq!(z.row(0), &[3.0, 1.0, 2.0, 6.0, 4.0, 5.0]);
        assert_eq!(inverse_permute(&z, &rule).unwrap(), f);
        assert_eq!(
            permute(&inverse_permute(&f, &rule).unwrap(), &rule).unwrap(),
            f
        );
    }

    #[test]
    fn dimension_mismatch() {
        let f = FeatureBlock::zeros(2, 4).unwrap();
        assert!(permute(&f, &PermutationRule::identity(3)).is_err());
    }
}
