//! Grouping of similar patches inside a search window.

use ndarray::ArrayView2;
use num_complex::Complex64;

use super::hosvd::Tensor;
use super::DenoiseConfig;
use crate::error::{Error, Result};

/// Top-left corner of a patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatchCoord {
    pub row: usize,
    pub col: usize,
}

impl PatchCoord {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// Matched patches; `members[0]` is the reference itself.
#[derive(Debug, Clone)]
pub struct PatchGroup {
    pub reference: PatchCoord,
    pub members: Vec<PatchCoord>,
    /// Per-pixel squared distance of each member to the reference.
    pub distances: Vec<f64>,
    /// `patch_rows × patch_cols × members` stack.
    pub tensor: Tensor<Complex64>,
}

/// Stacks the patches at `members` into a `rows × cols × K` tensor.
pub fn stack_patches(
    image: ArrayView2<'_, Complex64>,
    members: &[PatchCoord],
    rows: usize,
    cols: usize,
) -> Tensor<Complex64> {
    let k = members.len();
    let mut data = vec![Complex64::new(0.0, 0.0); rows * cols * k];
    for (m, p) in members.iter().enumerate() {
        for i in 0..rows {
            for j in 0..cols {
                data[(i * cols + j) * k + m] = image[[p.row + i, p.col + j]];
            }
        }
    }
    Tensor::new(vec![rows, cols, k], data)
}

impl PatchGroup {
    /// Same coordinates, patches taken from another image of equal shape.
    pub fn restack(&self, image: ArrayView2<'_, Complex64>) -> Tensor<Complex64> {
        let d = self.tensor.dims();
        stack_patches(image, &self.members, d[0], d[1])
    }
}

fn patch_distance(
    img: &[Complex64],
    width: usize,
    a: PatchCoord,
    b: PatchCoord,
    rows: usize,
    cols: usize,
    stop: f64,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..rows {
        let ra = &img[(a.row + i) * width + a.col..][..cols];
        let rb = &img[(b.row + i) * width + b.col..][..cols];
        for (x, y) in ra.iter().zip(rb) {
            acc += (x - y).norm_sqr();
        }
        if acc > stop {
            break;
        }
    }
    acc
}

/// Finds up to `max_group_size` patches closest to the reference.
///
/// Candidates are every patch position within `search_radius` of the
/// reference, ranked by `‖P_ref − P‖² / (N₁M₁)`, ties broken by `(row, col)`.
/// Candidates farther than `match_threshold` are dropped; the reference is
/// always the first member.
pub fn block_match(image: ArrayView2<'_, Complex64>, reference: PatchCoord, cfg: &DenoiseConfig) -> Result<PatchGroup> {
    let (h, w) = image.dim();
    let (pr, pc) = (cfg.patch_rows, cfg.patch_cols);
    if pr == 0 || pc == 0 || pr > h || pc > w || reference.row + pr > h || reference.col + pc > w {
        return Err(Error::OutOfBounds {
            x: reference.col,
            y: reference.row,
            rows: h,
            cols: w,
        });
    }
    let owned;
    let img: &[Complex64] = match image.as_slice() {
        Some(s) => s,
        None => {
            owned = image.as_standard_layout().into_owned();
            owned.as_slice().expect("standard layout")
        }
    };
    let area = (pr * pc) as f64;
    let limit = cfg.match_threshold.map_or(f64::INFINITY, |t| t * area);
    let k = cfg.max_group_size.max(1);

    let r0 = reference.row.saturating_sub(cfg.search_radius);
    let r1 = (reference.row + cfg.search_radius).min(h - pr);
    let c0 = reference.col.saturating_sub(cfg.search_radius);
    let c1 = (reference.col + cfg.search_radius).min(w - pc);

    // (sum of squared differences, coord); sorted lexicographically
    let mut best: Vec<(f64, PatchCoord)> = Vec::with_capacity(k + 1);
    for row in r0..=r1 {
        for col in c0..=c1 {
            let cand = PatchCoord::new(row, col);
            if cand == reference {
                continue;
            }
            let stop = if best.len() + 1 >= k {
                best.last().map_or(limit, |b| b.0.min(limit))
            } else {
                limit
            };
            let d = patch_distance(img, w, reference, cand, pr, pc, stop);
            if d > limit {
                continue;
            }
            if best.len() + 1 >= k {
                match best.last() {
                    Some(last) if (d, cand) >= (last.0, last.1) => continue,
                    None if k == 1 => continue,
                    _ => {}
                }
            }
            let pos = best.partition_point(|b| (b.0, b.1) < (d, cand));
            best.insert(pos, (d, cand));
            best.truncate(k - 1);
        }
    }

    let mut members = Vec::with_capacity(best.len() + 1);
    let mut distances = Vec::with_capacity(best.len() + 1);
    members.push(reference);
    distances.push(0.0);
    for (d, c) in best {
        members.push(c);
        distances.push(d / area);
    }
    let tensor = stack_patches(image, &members, pr, pc);
    Ok(PatchGroup {
        reference,
        members,
        distances,
        tensor,
    })
}

/// Positions `0, step, 2·step, …` with the last one moved to `len − patch`
/// so the final patch touches the edge.
pub fn grid_positions(len: usize, patch: usize, step: usize) -> Vec<usize> {
    let last = len - patch;
    let mut v: Vec<usize> = (0..=last).step_by(step.max(1)).collect();
    if *v.last().unwrap() != last {
        v.push(last);
    }
    v
}

/// Reference patches in row-major order.
pub fn reference_grid(rows: usize, cols: usize, cfg: &DenoiseConfig) -> Vec<PatchCoord> {
    let rs = grid_positions(rows, cfg.patch_rows, cfg.patch_step);
    let cs = grid_positions(cols, cfg.patch_cols, cfg.patch_step);
    rs.iter()
        .flat_map(|&r| cs.iter().map(move |&c| PatchCoord::new(r, c)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn cfg(k: usize, radius: usize) -> DenoiseConfig {
        DenoiseConfig {
            patch_rows: 4,
            patch_cols: 4,
            max_group_size: k,
            search_radius: radius,
            ..DenoiseConfig::default()
        }
    }

    #[test]
    fn constant_image_takes_scan_order() {
        let img = Array2::from_elem((12, 12), Complex64::new(0.5, -1.0));
        let g = block_match(img.view(), PatchCoord::new(4, 4), &cfg(5, 3)).unwrap();
        assert_eq!(g.members[0], PatchCoord::new(4, 4));
        assert_eq!(
            &g.members[1..],
            &[
                PatchCoord::new(1, 1),
                PatchCoord::new(1, 2),
                PatchCoord::new(1, 3),
                PatchCoord::new(1, 4)
            ]
        );
        assert!(g.distances.iter().all(|&d| d == 0.0));
        assert_eq!(g.tensor.dims(), &[4, 4, 5]);
    }

    #[test]
    fn threshold_can_isolate_reference() {
        let mut img = Array2::from_elem((12, 12), Complex64::new(0.0, 0.0));
        for i in 0..4 {
            for j in 0..4 {
                img[[4 + i, 4 + j]] = Complex64::new(10.0, 0.0);
            }
        }
        let c = DenoiseConfig {
            match_threshold: Some(1.0),
            ..cfg(8, 6)
        };
        let g = block_match(img.view(), PatchCoord::new(4, 4), &c).unwrap();
        assert_eq!(g.members, vec![PatchCoord::new(4, 4)]);
    }

    #[test]
    fn exact_copy_is_found() {
        let mut img = Array2::from_shape_fn((20, 20), |(r, c)| Complex64::new(((r * 7 + c * 13) % 5) as f64, (r * c % 3) as f64));
        let texture = Array2::from_shape_fn((4, 4), |(i, j)| Complex64::new(9.0 + i as f64, -(j as f64)));
        for i in 0..4 {
            for j in 0..4 {
                img[[2 + i, 3 + j]] = texture[[i, j]];
                img[[11 + i, 14 + j]] = texture[[i, j]];
            }
        }
        let g = block_match(img.view(), PatchCoord::new(2, 3), &cfg(4, 15)).unwrap();
        assert_eq!(g.members[1], PatchCoord::new(11, 14));
        assert_eq!(g.distances[1], 0.0);
    }

    #[test]
    fn out_of_bounds_reference() {
        let img = Array2::from_elem((8, 8), Complex64::new(0.0, 0.0));
        assert!(matches!(
            block_match(img.view(), PatchCoord::new(5, 0), &cfg(4, 2)),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn matches_brute_force_ranking() {
        let img = Array2::from_shape_fn((16, 16), |(r, c)| {
            Complex64::new(((r * 31 + c * 17) % 11) as f64, ((r * 5 + c * 3) % 7) as f64)
        });
        let c = cfg(6, 5);
        let reference = PatchCoord::new(6, 7);
        let g = block_match(img.view(), reference, &c).unwrap();
        let mut all = Vec::new();
        for r in 1..=11 {
            for cc in 2..=12 {
                let p = PatchCoord::new(r, cc);
                if p == reference {
                    continue;
                }
                let mut d = 0.0;
                for i in 0..4 {
                    for j in 0..4 {
                        d += (img[[6 + i, 7 + j]] - img[[r + i, cc + j]]).norm_sqr();
                    }
                }
                all.push((d / 16.0, p));
            }
        }
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected: Vec<PatchCoord> = all.iter().take(5).map(|x| x.1).collect();
        assert_eq!(&g.members[1..], &expected[..]);
    }

    #[test]
    fn grid_touches_edges() {
        assert_eq!(grid_positions(16, 8, 3), vec![0, 3, 6, 8]);
        assert_eq!(grid_positions(8, 8, 3), vec![0]);
        assert_eq!(grid_positions(14, 8, 3), vec![0, 3, 6]);
    }
}
