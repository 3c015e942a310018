/// Raster indices of an `n × n` tile in zig-zag frequency order.
pub fn zigzag_order(n: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(n * n);
    for s in 0..(2 * n).saturating_sub(1) {
        let lo = s.saturating_sub(n - 1);
        let hi = s.min(n - 1);
        if s % 2 == 1 {
            for row in lo..=hi {
                order.push(row * n + (s - row));
            }
        } else {
            for row in (lo..=hi).rev() {
                order.push(row * n + (s - row));
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    // JPEG (ITU T.81) zig-zag sequence for 8×8 blocks
    const JPEG_ZIGZAG: [usize; 64] = [
        0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27,
        20, 13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
        58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
    ];

    #[test]
    fn matches_jpeg_table() {
        assert_eq!(zigzag_order(8), JPEG_ZIGZAG);
    }

    #[test]
    fn is_a_permutation() {
        for n in 1..=16 {
            let mut z = zigzag_order(n);
            z.sort_unstable();
            assert_eq!(z, (0..n * n).collect::<Vec<_>>());
        }
    }
}
