use std::sync::OnceLock;

use num_integer::Integer;

use crate::media::Frame;

/// Side of the working grid every frame is reduced to.
pub const GRID: usize = 32;

/// Output rows/columns `[start, end)` of source pixels feeding each grid cell.
/// Longer axes are box-averaged; shorter ones replicate the nearest pixel.
fn axis_ranges(len: usize) -> [(usize, usize); GRID] {
    let mut r = [(0, 0); GRID];
    for (i, slot) in r.iter_mut().enumerate() {
        *slot = if len >= GRID {
            (i * len / GRID, (i + 1) * len / GRID)
        } else {
            let s = i * len / GRID;
            (s, s + 1)
        };
    }
    r
}

/// Area-averaged reduction to a 32x32 grid, row-major.
pub fn downscale(frame: &Frame) -> Vec<f64> {
    let (w, h) = (frame.width(), frame.height());
    let cols = axis_ranges(w);
    let rows = axis_ranges(h);
    let px = frame.pixels();
    let mut out = vec![0.0; GRID * GRID];
    let mut acc = [0u64; GRID];
    for (oy, &(y0, y1)) in rows.iter().enumerate() {
        acc.fill(0);
        for y in y0..y1 {
            let row = &px[y * w..(y + 1) * w];
            for (ox, &(x0, x1)) in cols.iter().enumerate() {
                acc[ox] += row[x0..x1].iter().map(|&v| v as u64).sum::<u64>();
            }
        }
        for (ox, &(x0, x1)) in cols.iter().enumerate() {
            let area = ((y1 - y0) * (x1 - x0)) as f64;
            out[oy * GRID + ox] = acc[ox] as f64 / area;
        }
    }
    out
}

/// The 32x32 grid with its mean removed, computed exactly in integers: cell
/// sums are brought to a common denominator (the lcm of the cell areas)
/// before subtracting the mean, so adding a constant to every pixel leaves
/// the result bit-for-bit unchanged.
pub fn demeaned_grid(frame: &Frame) -> Vec<f64> {
    let (w, h) = (frame.width(), frame.height());
    let cols = axis_ranges(w);
    let rows = axis_ranges(h);
    let px = frame.pixels();
    let mut sums = vec![0u64; GRID * GRID];
    let mut areas = vec![0u64; GRID * GRID];
    for (oy, &(y0, y1)) in rows.iter().enumerate() {
        for y in y0..y1 {
            let row = &px[y * w..(y + 1) * w];
            for (ox, &(x0, x1)) in cols.iter().enumerate() {
                sums[oy * GRID + ox] += row[x0..x1].iter().map(|&v| v as u64).sum::<u64>();
            }
        }
        for (ox, &(x0, x1)) in cols.iter().enumerate() {
            areas[oy * GRID + ox] = ((y1 - y0) * (x1 - x0)) as u64;
        }
    }
    let l = areas.iter().fold(1u64, |acc, &a| acc.lcm(&a)) as i128;
    let scaled: Vec<i128> = sums
        .iter()
        .zip(&areas)
        .map(|(&s, &a)| s as i128 * (l / a as i128))
        .collect();
    let total: i128 = scaled.iter().sum();
    let n = (GRID * GRID) as i128;
    let denom = (n * l) as f64;
    scaled
        .iter()
        .map(|&v| (n * v - total) as f64 / denom)
        .collect()
}

/// Orthonormal DCT-II basis rows `basis[u][x]` for a 32-point transform.
fn basis() -> &'static [[f64; GRID]; GRID] {
    static BASIS: OnceLock<[[f64; GRID]; GRID]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let n = GRID as f64;
        let mut b = [[0.0; GRID]; GRID];
        for (u, row) in b.iter_mut().enumerate() {
            let alpha = if u == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            };
            for (x, v) in row.iter_mut().enumerate() {
                *v = alpha
                    * (std::f64::consts::PI * (2 * x + 1) as f64 * u as f64 / (2.0 * n)).cos();
            }
        }
        b
    })
}

/// Top-left `block x block` coefficients of the orthonormal 2-D DCT-II of a
/// 32x32 grid, row-major by vertical frequency.
pub fn dct_block(grid: &[f64], block: usize) -> Vec<f64> {
    assert_eq!(grid.len(), GRID * GRID);
    assert!(block <= GRID);
    let b = basis();
    // rows first: tmp[y][u] = sum_x grid[y][x] * b[u][x]
    let mut tmp = vec![0.0; GRID * block];
    for y in 0..GRID {
        let row = &grid[y * GRID..(y + 1) * GRID];
        for u in 0..block {
            tmp[y * block + u] = row.iter().zip(&b[u]).map(|(a, c)| a * c).sum();
        }
    }
    let mut out = vec![0.0; block * block];
    for v in 0..block {
        for u in 0..block {
            out[v * block + u] = (0..GRID).map(|y| b[v][y] * tmp[y * block + u]).sum();
        }
    }
    out
}
