use std::collections::HashMap;

use crate::error::{Error, Result};

/// Bits per mode in a packed occupation vector.
const BITS: u32 = 4;
const MASK: u64 = (1 << BITS) - 1;

pub const MAX_PARTICLES: usize = 8;
pub const MAX_MODES: usize = 12;

/// Occupation vectors packed four bits per mode.
pub type Packed = u64;

pub fn occupation(state: Packed, mode: usize) -> usize {
    ((state >> (BITS * mode as u32)) & MASK) as usize
}

fn with_occupation(state: Packed, mode: usize, n: usize) -> Packed {
    let shift = BITS * mode as u32;
    (state & !(MASK << shift)) | ((n as u64) << shift)
}

pub fn pack(occupations: &[usize]) -> Packed {
    occupations
        .iter()
        .enumerate()
        .fold(0, |acc, (m, &n)| with_occupation(acc, m, n))
}

pub fn unpack(state: Packed, modes: usize) -> Vec<usize> {
    (0..modes).map(|m| occupation(state, m)).collect()
}

/// `C(n, k)` in floating point, used for cost estimates.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All occupation vectors with `n` bosons in `k` modes, in a fixed order
/// starting from the fully condensed state `(n, 0, …, 0)`.
#[derive(Debug, Clone)]
pub struct FockBasis {
    particles: usize,
    modes: usize,
    states: Vec<Packed>,
    index: HashMap<Packed, usize>,
}

impl FockBasis {
    pub fn new(particles: usize, modes: usize) -> Result<FockBasis> {
        if particles == 0 || particles > MAX_PARTICLES {
            return Err(Error::InvalidParameter(format!(
                "particle number must lie in 1..={MAX_PARTICLES}, got {particles}"
            )));
        }
        if modes == 0 || modes > MAX_MODES {
            return Err(Error::Ceiling(format!(
                "mode count {modes} outside 1..={MAX_MODES}"
            )));
        }
        let mut states = Vec::new();
        let mut occ = vec![0usize; modes];
        enumerate(&mut occ, 0, particles, &mut states);
        let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(FockBasis {
            particles,
            modes,
            states,
            index,
        })
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Packed] {
        &self.states
    }

    pub fn state(&self, i: usize) -> Packed {
        self.states[i]
    }

    pub fn index_of(&self, state: Packed) -> Option<usize> {
        self.index.get(&state).copied()
    }
}

fn enumerate(occ: &mut [usize], mode: usize, remaining: usize, out: &mut Vec<Packed>) {
    if mode + 1 == occ.len() {
        occ[mode] = remaining;
        out.push(pack(occ));
        occ[mode] = 0;
        return;
    }
    for n in (0..=remaining).rev() {
        occ[mode] = n;
        enumerate(occ, mode + 1, remaining - n, out);
    }
    occ[mode] = 0;
}

/// A multiset of `r` modes, stored both as counts and as a sorted mode list.
#[derive(Debug, Clone)]
pub struct Multiset {
    pub counts: Packed,
    pub members: Vec<usize>,
}

impl Multiset {
    /// Distinct orderings of the members.
    pub fn orderings(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(self.members.len());
        let mut used = vec![false; self.members.len()];
        permute(&self.members, &mut used, &mut current, &mut out);
        out
    }

    /// Whether the multiset can be removed from `state`.
    pub fn fits(&self, state: Packed, modes: usize) -> bool {
        (0..modes).all(|m| occupation(self.counts, m) <= occupation(state, m))
    }
}

fn permute(items: &[usize], used: &mut [bool], current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() == items.len() {
        out.push(current.clone());
        return;
    }
    for i in 0..items.len() {
        // Members are sorted; skipping equal unused neighbours removes duplicates.
        if used[i] || (i > 0 && items[i] == items[i - 1] && !used[i - 1]) {
            continue;
        }
        used[i] = true;
        current.push(items[i]);
        permute(items, used, current, out);
        current.pop();
        used[i] = false;
    }
}

/// All multisets of size `r` over `modes` modes, in lexicographic order.
pub fn multisets(modes: usize, r: usize) -> Vec<Multiset> {
    let mut out = Vec::new();
    let mut members = Vec::with_capacity(r);
    fn rec(modes: usize, r: usize, start: usize, members: &mut Vec<usize>, out: &mut Vec<Multiset>) {
        if members.len() == r {
            let mut counts = vec![0usize; modes];
            for &m in members.iter() {
                counts[m] += 1;
            }
            out.push(Multiset {
                counts: pack(&counts),
                members: members.clone(),
            });
            return;
        }
        for m in start..modes {
            members.push(m);
            rec(modes, r, m, members, out);
            members.pop();
        }
    }
    rec(modes, r, 0, &mut members, &mut out);
    out
}

/// Applies `Π a_m` for the members of `removed`, then `Π a†_m` for `added`.
/// Returns the target state and the squared amplitude, an exact integer.
pub fn transition(state: Packed, removed: &Multiset, added: &Multiset, modes: usize) -> (Packed, u64) {
    let mut factor: u64 = 1;
    let mut s = state;
    for m in 0..modes {
        let c = occupation(removed.counts, m);
        let n = occupation(s, m);
        for t in 0..c {
            factor *= (n - t) as u64;
        }
        s = with_occupation(s, m, n - c);
    }
    for m in 0..modes {
        let c = occupation(added.counts, m);
        let n = occupation(s, m);
        for t in 1..=c {
            factor *= (n + t) as u64;
        }
        s = with_occupation(s, m, n + c);
    }
    (s, factor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_is_binomial() {
        for (n, k) in [(3, 4), (4, 8), (5, 8), (3, 12)] {
            let b = FockBasis::new(n, k).unwrap();
            assert_eq!(b.dimension() as f64, binomial(n + k - 1, n));
            assert_eq!(b.state(0), pack(&[n]));
            for (i, &s) in b.states().iter().enumerate() {
                assert_eq!(b.index_of(s), Some(i));
                assert_eq!(unpack(s, k).iter().sum::<usize>(), n);
            }
        }
    }

    #[test]
    fn multiset_counts_and_orderings() {
        assert_eq!(multisets(12, 3).len(), 364);
        assert_eq!(multisets(5, 2).len(), 15);
        let m = Multiset {
            counts: pack(&[2, 1]),
            members: vec![0, 0, 1],
        };
        assert_eq!(m.orderings().len(), 3);
    }

    #[test]
    fn transition_amplitudes() {
        // a†_1 a_0 on |3, 0⟩ gives √3 |2, 1⟩.
        let rm = Multiset { counts: pack(&[1]), members: vec![0] };
        let ad = Multiset { counts: pack(&[0, 1]), members: vec![1] };
        let (s, f) = transition(pack(&[3, 0]), &rm, &ad, 2);
        assert_eq!(s, pack(&[2, 1]));
        assert_eq!(f, 3);
        // a†_0 a†_0 a_0 a_0 on |3⟩ = n(n-1) = 6.
        let two = Multiset { counts: pack(&[2]), members: vec![0, 0] };
        assert_eq!(transition(pack(&[3]), &two, &two, 1).1, 36);
    }
}
