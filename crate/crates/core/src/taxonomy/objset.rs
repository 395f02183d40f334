use smallvec::{smallvec, SmallVec};

use crate::mdp::ObjId;

/// A set of objects over a universe of known size.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ObjSet {
    words: SmallVec<[u64; 2]>,
    n: usize,
}

impl ObjSet {
    pub fn empty(n: usize) -> Self {
        ObjSet { words: smallvec![0; n.div_ceil(64)], n }
    }

    pub fn full(n: usize) -> Self {
        let mut s = ObjSet { words: smallvec![!0u64; n.div_ceil(64)], n };
        s.trim();
        s
    }

    pub fn singleton(n: usize, o: ObjId) -> Self {
        let mut s = Self::empty(n);
        s.insert(o);
        s
    }

    fn trim(&mut self) {
        let r = self.n % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    pub fn universe_size(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, o: ObjId) {
        let i = o.index();
        if i < self.n {
            self.words[i / 64] |= 1 << (i % 64);
        }
    }

    pub fn contains(&self, o: ObjId) -> bool {
        let i = o.index();
        i < self.n && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn complement(&self) -> Self {
        let mut s = ObjSet { words: self.words.iter().map(|w| !w).collect(), n: self.n };
        s.trim();
        s
    }

    pub fn union_with(&mut self, other: &ObjSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &ObjSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn difference_with(&mut self, other: &ObjSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn is_subset(&self, other: &ObjSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ObjId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some(ObjId((wi * 64) as u32 + b))
            })
        })
    }

    pub fn to_vec(&self) -> Vec<ObjId> {
        self.iter().collect()
    }

    pub fn from_iter_n(n: usize, it: impl IntoIterator<Item = ObjId>) -> Self {
        let mut s = Self::empty(n);
        for o in it {
            s.insert(o);
        }
        s
    }
}
