//! Occupation-number index space of the hierarchy.
//!
//! Indices `n = (n_0, …, n_{M−1})` with `Σ n_a ≤ L` are stored tier by tier;
//! within a tier they are in ascending lexicographic order. A combinatorial
//! rank gives the slot of any index, and neighbour tables give `n ± e_a` in
//! constant time.

use super::HierarchyError;

pub const NO_NEIGHBOR: usize = usize::MAX;

/// `C(n, k)` or `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    m: usize,
    l: usize,
    occ: Vec<u16>,
    tier: Vec<u16>,
    tier_start: Vec<usize>,
    up: Vec<usize>,
    down: Vec<usize>,
}

/// Number of indices with `Σ n_a ≤ L` over `M` labels, `C(M + L, L)`.
pub fn catalog_size(m: usize, l: usize) -> Option<u128> {
    binomial((m + l) as u64, l as u64)
}

/// Builds the catalog, refusing sizes above `max_slots`.
pub fn enumerate_indices(m: usize, l: usize, max_slots: Option<usize>) -> Result<Catalog, HierarchyError> {
    if m == 0 {
        return Err(HierarchyError::InvalidInput("the hierarchy needs at least one dissipaton label".into()));
    }
    if l > u16::MAX as usize {
        return Err(HierarchyError::InvalidInput(format!("truncation tier {l} is too large")));
    }
    let size = catalog_size(m, l);
    let budget = max_slots.unwrap_or(usize::MAX);
    let size = match size {
        Some(s) if s <= budget as u128 => s as usize,
        other => {
            return Err(HierarchyError::BudgetExceeded {
                size: other.map(|s| s.to_string()).unwrap_or_else(|| "overflow".into()),
                budget,
            })
        }
    };

    let mut occ = Vec::with_capacity(size * m);
    let mut tier = Vec::with_capacity(size);
    let mut tier_start = Vec::with_capacity(l + 2);
    let mut cur = vec![0u16; m];
    for n in 0..=l {
        tier_start.push(tier.len());
        // lexicographically smallest composition of n: all weight in the last slot
        cur.iter_mut().for_each(|v| *v = 0);
        cur[m - 1] = n as u16;
        loop {
            occ.extend_from_slice(&cur);
            tier.push(n as u16);
            if !next_lex(&mut cur) {
                break;
            }
        }
    }
    tier_start.push(tier.len());
    debug_assert_eq!(tier.len(), size);

    let mut cat = Catalog { m, l, occ, tier, tier_start, up: vec![NO_NEIGHBOR; size * m], down: vec![NO_NEIGHBOR; size * m] };
    let mut buf = vec![0u16; m];
    for s in 0..size {
        buf.copy_from_slice(cat.occupation(s));
        for a in 0..m {
            if (cat.tier[s] as usize) < l {
                buf[a] += 1;
                cat.up[s * m + a] = cat.rank(&buf).expect("in range");
                buf[a] -= 1;
            }
            if buf[a] > 0 {
                buf[a] -= 1;
                cat.down[s * m + a] = cat.rank(&buf).expect("in range");
                buf[a] += 1;
            }
        }
    }
    Ok(cat)
}

/// Next composition with the same sum in ascending lexicographic order.
fn next_lex(c: &mut [u16]) -> bool {
    let m = c.len();
    // rightmost position i < m−1 that can grow by taking from the tail
    let tail_sum = |c: &[u16], i: usize| c[i + 1..].iter().map(|&v| v as u32).sum::<u32>();
    for i in (0..m.saturating_sub(1)).rev() {
        let rest = tail_sum(c, i);
        if rest > 0 {
            c[i] += 1;
            for v in c[i + 1..].iter_mut() {
                *v = 0;
            }
            c[m - 1] = (rest - 1) as u16;
            return true;
        }
    }
    false
}

impl Catalog {
    pub fn labels(&self) -> usize {
        self.m
    }

    pub fn max_tier(&self) -> usize {
        self.l
    }

    pub fn len(&self) -> usize {
        self.tier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tier.is_empty()
    }

    pub fn occupation(&self, slot: usize) -> &[u16] {
        &self.occ[slot * self.m..(slot + 1) * self.m]
    }

    pub fn tier(&self, slot: usize) -> usize {
        self.tier[slot] as usize
    }

    /// Slots of tier `n`.
    pub fn tier_range(&self, n: usize) -> std::ops::Range<usize> {
        self.tier_start[n]..self.tier_start[n + 1]
    }

    /// Slot of `n + e_a`, or [`NO_NEIGHBOR`] beyond tier `L`.
    #[inline]
    pub fn up(&self, slot: usize, a: usize) -> usize {
        self.up[slot * self.m + a]
    }

    /// Slot of `n − e_a`, or [`NO_NEIGHBOR`] when `n_a = 0`.
    #[inline]
    pub fn down(&self, slot: usize, a: usize) -> usize {
        self.down[slot * self.m + a]
    }

    /// Combinatorial rank of `n`, or `None` if it lies outside the catalog.
    pub fn rank(&self, n: &[u16]) -> Option<usize> {
        if n.len() != self.m {
            return None;
        }
        let total: usize = n.iter().map(|&v| v as usize).sum();
        if total > self.l {
            return None;
        }
        let mut r = self.tier_start[total];
        let mut rem = total;
        for i in 0..self.m - 1 {
            let parts = (self.m - i - 1) as u64;
            // compositions with a smaller entry at position i
            for v in 0..n[i] as usize {
                let left = (rem - v) as u64;
                r += binomial(left + parts - 1, parts - 1).expect("fits") as usize;
            }
            rem -= n[i] as usize;
        }
        Some(r)
    }

    /// Slot of the singly occupied index `e_a`.
    pub fn single(&self, a: usize) -> Option<usize> {
        if self.l == 0 || a >= self.m {
            return None;
        }
        Some(self.up(0, a))
    }
}
