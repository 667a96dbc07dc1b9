//! Lexicographic multi-index basis of Λ*R⁷ and the sign tables built on it.
//!
//! A multi-index is stored as a 7-bit mask (bit i set ⇔ index i+1 present).
//! Within each degree, masks are ordered lexicographically by their sorted
//! index tuples, so degree 3 runs (1,2,3) < (1,2,4) < … < (5,6,7).

use std::sync::OnceLock;

pub const N: usize = 7;
pub const DIMS: [usize; 8] = [1, 7, 21, 35, 35, 21, 7, 1];

#[inline]
pub const fn dim(p: usize) -> usize {
    DIMS[p]
}

/// One nonzero product e^A ∧ e^B = sign · e^C.
#[derive(Debug, Clone, Copy)]
pub struct WedgeEntry {
    pub a: u16,
    pub b: u16,
    pub c: u16,
    pub sign: f64,
}

/// One nonzero action of a basis covector: e^k ∧ e^I or ι_{e_k} e^I.
#[derive(Debug, Clone, Copy)]
pub struct SlotEntry {
    pub src: u16,
    pub dst: u16,
    pub sign: f64,
}

pub struct Tables {
    masks: [Vec<u8>; 8],
    rank: [u16; 128],
    wedge: Vec<Vec<Vec<WedgeEntry>>>,
    complement: [Vec<SlotEntry>; 8],
    exterior: [[Vec<SlotEntry>; N]; 8],
    interior: [[Vec<SlotEntry>; N]; 8],
}

/// Sign of the shuffle taking e^A ∧ e^B to e^{A∪B} (A, B disjoint).
pub fn merge_sign(a: u8, b: u8) -> f64 {
    let mut inversions = 0u32;
    for i in 0..N {
        if a & (1 << i) != 0 {
            // elements of b below i
            inversions += (b & ((1u8 << i) - 1)).count_ones();
        }
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn lex_masks(p: usize) -> Vec<u8> {
    fn rec(start: usize, left: usize, acc: u8, out: &mut Vec<u8>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        for i in start..N {
            rec(i + 1, left - 1, acc | (1 << i), out);
        }
    }
    let mut out = Vec::with_capacity(dim(p));
    rec(0, p, 0, &mut out);
    out
}

impl Tables {
    fn build() -> Self {
        let masks: [Vec<u8>; 8] = std::array::from_fn(lex_masks);
        let mut rank = [0u16; 128];
        for ms in &masks {
            for (i, &m) in ms.iter().enumerate() {
                rank[m as usize] = i as u16;
            }
        }
        let mut wedge = vec![vec![Vec::new(); 8]; 8];
        for p in 0..=N {
            for q in 0..=(N - p) {
                let mut entries = Vec::new();
                for (ia, &ma) in masks[p].iter().enumerate() {
                    for (ib, &mb) in masks[q].iter().enumerate() {
                        if ma & mb == 0 {
                            entries.push(WedgeEntry {
                                a: ia as u16,
                                b: ib as u16,
                                c: rank[(ma | mb) as usize],
                                sign: merge_sign(ma, mb),
                            });
                        }
                    }
                }
                wedge[p][q] = entries;
            }
        }
        let full = 0x7fu8;
        let complement = std::array::from_fn(|p| {
            masks[p]
                .iter()
                .map(|&m| SlotEntry {
                    src: rank[m as usize],
                    dst: rank[(full ^ m) as usize],
                    sign: merge_sign(m, full ^ m),
                })
                .collect()
        });
        let exterior = std::array::from_fn(|p| {
            std::array::from_fn(|k| {
                if p == N {
                    return Vec::new();
                }
                let bit = 1u8 << k;
                masks[p]
                    .iter()
                    .enumerate()
                    .filter(|(_, &m)| m & bit == 0)
                    .map(|(i, &m)| SlotEntry {
                        src: i as u16,
                        dst: rank[(m | bit) as usize],
                        sign: merge_sign(bit, m),
                    })
                    .collect()
            })
        });
        let interior = std::array::from_fn(|p| {
            std::array::from_fn(|k| {
                let bit = 1u8 << k;
                masks[p]
                    .iter()
                    .enumerate()
                    .filter(|(_, &m)| m & bit != 0)
                    .map(|(i, &m)| SlotEntry {
                        src: i as u16,
                        dst: rank[(m ^ bit) as usize],
                        sign: merge_sign(bit, m ^ bit),
                    })
                    .collect()
            })
        });
        Tables {
            masks,
            rank,
            wedge,
            complement,
            exterior,
            interior,
        }
    }

    pub fn get() -> &'static Tables {
        static TABLES: OnceLock<Tables> = OnceLock::new();
        TABLES.get_or_init(Tables::build)
    }

    #[inline]
    pub fn masks(&self, p: usize) -> &[u8] {
        &self.masks[p]
    }

    /// Position of a mask within its degree.
    #[inline]
    pub fn rank(&self, mask: u8) -> usize {
        self.rank[mask as usize] as usize
    }

    #[inline]
    pub fn wedge(&self, p: usize, q: usize) -> &[WedgeEntry] {
        &self.wedge[p][q]
    }

    /// I ↦ (complement J, sign) with e^I ∧ e^J = sign · e^{1…7}.
    #[inline]
    pub fn complement(&self, p: usize) -> &[SlotEntry] {
        &self.complement[p]
    }

    /// e^k ∧ (·) on degree p (k is 0-based).
    #[inline]
    pub fn exterior(&self, p: usize, k: usize) -> &[SlotEntry] {
        &self.exterior[p][k]
    }

    /// Plain interior product ι_{e_k} on degree p (k is 0-based).
    #[inline]
    pub fn interior(&self, p: usize, k: usize) -> &[SlotEntry] {
        &self.interior[p][k]
    }
}

/// Mask of a 1-based index list; returns the mask and the sign of the
/// sorting permutation, or `None` on a repeated or out-of-range index.
pub fn mask_of(indices: &[usize]) -> Option<(u8, f64)> {
    let mut mask = 0u8;
    let mut sign = 1.0;
    for &i in indices {
        if !(1..=N).contains(&i) {
            return None;
        }
        let bit = 1u8 << (i - 1);
        if mask & bit != 0 {
            return None;
        }
        // moving e^i left past larger indices already placed
        if (mask & !((bit << 1) - 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        mask |= bit;
    }
    Some((mask, sign))
}

/// 1-based sorted indices of a mask.
pub fn indices_of(mask: u8) -> Vec<usize> {
    (0..N).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_three_is_lexicographic() {
        let t = Tables::get();
        let first: Vec<_> = t.masks(3).iter().take(3).map(|&m| indices_of(m)).collect();
        assert_eq!(first, vec![vec![1, 2, 3], vec![1, 2, 4], vec![1, 2, 5]]);
        assert_eq!(indices_of(*t.masks(3).last().unwrap()), vec![5, 6, 7]);
        for p in 0..=N {
            assert_eq!(t.masks(p).len(), dim(p));
        }
    }

    #[test]
    fn sorting_sign() {
        assert_eq!(mask_of(&[2, 1]).unwrap().1, -1.0);
        assert_eq!(mask_of(&[3, 1, 2]).unwrap().1, 1.0);
        assert_eq!(mask_of(&[1, 2, 7]).unwrap().1, 1.0);
        assert!(mask_of(&[1, 1]).is_none());
    }

    #[test]
    fn complement_of_e12_is_positive() {
        let t = Tables::get();
        let (m, _) = mask_of(&[1, 2]).unwrap();
        let e = t.complement(2)[t.rank(m)];
        assert_eq!(indices_of(t.masks(5)[e.dst as usize]), vec![3, 4, 5, 6, 7]);
        assert_eq!(e.sign, 1.0);
    }
}
