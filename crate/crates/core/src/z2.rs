//! Dense bit rows over Z₂ and rank by elimination.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitRow {
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        BitRow { words: vec![0; len.div_ceil(64)] }
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    fn lowest_set(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

/// Rank over Z₂ of the matrix whose rows are given.
pub fn rank(rows: impl IntoIterator<Item = BitRow>) -> usize {
    // pivots[k] holds a reduced row whose lowest set bit is k
    let mut pivots: std::collections::BTreeMap<usize, BitRow> = Default::default();
    for mut row in rows {
        while let Some(low) = row.lowest_set() {
            match pivots.get(&low) {
                Some(p) => row.xor_assign(p),
                None => {
                    pivots.insert(low, row);
                    break;
                }
            }
        }
    }
    pivots.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(len: usize, bits: &[usize]) -> BitRow {
        let mut r = BitRow::zeros(len);
        for &b in bits {
            r.flip(b);
        }
        r
    }

    #[test]
    fn rank_of_small_matrices() {
        assert_eq!(rank(vec![row(3, &[0, 1]), row(3, &[1, 2]), row(3, &[0, 2])]), 2);
        assert_eq!(rank(vec![row(3, &[]), row(3, &[2])]), 1);
        assert_eq!(rank(Vec::new()), 0);
        let wide = vec![row(130, &[0, 129]), row(130, &[64]), row(130, &[0, 64, 129])];
        assert_eq!(rank(wide), 2);
    }

    #[test]
    fn flip_twice_cancels() {
        let mut r = BitRow::zeros(70);
        r.flip(67);
        assert!(r.get(67));
        r.flip(67);
        assert!(!r.get(67));
    }
}
