//! Sobol low-discrepancy sequence (Joe-Kuo direction numbers), up to ten
//! dimensions, with an optional digital shift.

use alloc::vec::Vec;

use crate::error::{Error, Result};

const BITS: usize = 32;

/// `(s, a, m_1..m_s)` for dimensions 2..=10.
const DIRECTIONS: [(u32, u32, &[u32]); 9] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
];

pub const MAX_DIM: usize = DIRECTIONS.len() + 1;

fn direction_vectors(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (i, x) in v.iter_mut().enumerate() {
            *x = 1 << (BITS - 1 - i);
        }
        return v;
    }
    let (s, a, m) = DIRECTIONS[dim - 1];
    let s = s as usize;
    for i in 0..s {
        v[i] = m[i] << (BITS - 1 - i);
    }
    for i in s..BITS {
        v[i] = v[i - s] ^ (v[i - s] >> s);
        for k in 1..s {
            if (a >> (s - 1 - k)) & 1 == 1 {
                v[i] ^= v[i - k];
            }
        }
    }
    v
}

/// First `n` points of the `dim`-dimensional sequence, each coordinate
/// XOR-ed with `shift[d]` before scaling to `[0, 1)`.
pub fn sobol_points(n: usize, dim: usize, shift: &[u32]) -> Result<Vec<Vec<f64>>> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidInput("sobol dimension must be in 1..=10"));
    }
    if shift.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: shift.len(),
        });
    }
    let dirs: Vec<[u32; BITS]> = (0..dim).map(direction_vectors).collect();
    let mut x = alloc::vec![0u32; dim];
    let scale = 1.0 / (1u64 << BITS) as f64;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            // Gray-code order: flip the direction of the lowest zero bit of i-1
            let c = (!(i - 1)).trailing_zeros() as usize;
            for d in 0..dim {
                x[d] ^= dirs[d][c];
            }
        }
        out.push(
            (0..dim)
                .map(|d| (x[d] ^ shift[d]) as f64 * scale)
                .collect(),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_reference_points() {
        // reference: scipy.stats.qmc.Sobol(d=10, scramble=False)
        let pts = sobol_points(8, 10, &[0; 10]).unwrap();
        let expected: [[f64; 10]; 8] = [
            [0.0; 10],
            [0.5; 10],
            [0.75, 0.25, 0.25, 0.25, 0.75, 0.75, 0.25, 0.75, 0.75, 0.75],
            [0.25, 0.75, 0.75, 0.75, 0.25, 0.25, 0.75, 0.25, 0.25, 0.25],
            [0.375, 0.375, 0.625, 0.875, 0.375, 0.125, 0.375, 0.875, 0.875, 0.625],
            [0.875, 0.875, 0.125, 0.375, 0.875, 0.625, 0.875, 0.375, 0.375, 0.125],
            [0.625, 0.125, 0.875, 0.625, 0.625, 0.875, 0.125, 0.125, 0.125, 0.375],
            [0.125, 0.625, 0.375, 0.125, 0.125, 0.375, 0.625, 0.625, 0.625, 0.875],
        ];
        for (p, e) in pts.iter().zip(expected.iter()) {
            assert_eq!(p.as_slice(), e.as_slice());
        }
    }

    #[test]
    fn matches_reference_deep_points() {
        let pts = sobol_points(1001, 10, &[0; 10]).unwrap();
        let p37 = [
            0.921875, 0.640625, 0.578125, 0.921875, 0.765625, 0.296875, 0.171875, 0.796875,
            0.609375, 0.171875,
        ];
        let p1000 = [
            0.2197265625, 0.0966796875, 0.5185546875, 0.6767578125, 0.2802734375, 0.9072265625,
            0.0458984375, 0.8994140625, 0.5009765625, 0.0693359375,
        ];
        assert_eq!(pts[37].as_slice(), p37.as_slice());
        assert_eq!(pts[1000].as_slice(), p1000.as_slice());
    }

    #[test]
    fn power_of_two_prefix_is_stratified() {
        // each of the 64 intervals [k/64, (k+1)/64) holds one point per axis
        let pts = sobol_points(64, 10, &[0x1234_5678; 10]).unwrap();
        for d in 0..10 {
            let mut cells = [0usize; 64];
            for p in &pts {
                cells[(p[d] * 64.0) as usize] += 1;
            }
            assert!(cells.iter().all(|&c| c == 1), "dim {d}");
        }
    }
}
