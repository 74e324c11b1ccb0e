//! Bit-twiddling helpers shared by the Pauli algebra and the dense kernels.
//!
//! Site sets are stored as `u64` masks, so every routine here is branch-free
//! and cheap enough for the innermost loops.

/// Parity of `x` as 0/1.
#[inline(always)]
pub fn parity(x: u64) -> u32 {
    (x.count_ones()) & 1
}

/// (-1)^popcount(x) as f64.
#[inline(always)]
pub fn parity_sign(x: u64) -> f64 {
    if parity(x) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Iterator over the set bit positions of a mask, ascending.
pub fn iter_bits(mask: u64) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let b = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(b)
        }
    })
}

/// Insert a zero bit at position `pos`, shifting higher bits up.
///
/// Used to enumerate basis indices with one site pinned: `expand_bit(i, j)`
/// runs over all indices whose bit `j` is 0 as `i` runs over `0..2^(n-1)`.
#[inline(always)]
pub fn expand_bit(i: usize, pos: usize) -> usize {
    let low = i & ((1 << pos) - 1);
    let high = i >> pos;
    (high << (pos + 1)) | low
}

/// Deterministic sum of per-item contributions, independent of thread count.
///
/// Items are accumulated in fixed chunks and the partial sums are added in
/// chunk order, so results are bit-identical whether or not the closure runs
/// in parallel somewhere upstream.
pub fn chunked_sum<F: Fn(usize) -> f64>(n: usize, chunk: usize, f: F) -> f64 {
    let mut total = 0.0;
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let mut part = 0.0;
        for i in start..end {
            part += f(i);
        }
        total += part;
        start = end;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expand_bit_enumerates_cleared_positions() {
        // n = 4 sites, pin bit 2: the 8 expanded indices are exactly those
        // with bit 2 clear, in ascending order.
        let got: Vec<usize> = (0..8).map(|i| expand_bit(i, 2)).collect();
        let want: Vec<usize> = (0..16).filter(|i| i & 4 == 0).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn iter_bits_round_trip() {
        let mask: u64 = 0b1011_0100_0001;
        let rebuilt: u64 = iter_bits(mask).map(|b| 1u64 << b).sum();
        assert_eq!(rebuilt, mask);
    }

    #[test]
    fn chunked_sum_matches_sequential() {
        let f = |i: usize| (i as f64).sin();
        let seq: f64 = (0..1000).map(f).sum();
        let chunked = chunked_sum(1000, 64, f);
        assert!((seq - chunked).abs() < 1e-12);
    }
}
