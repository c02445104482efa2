//! Plaintext-matrix x encrypted-vector products via generalized diagonals,
//! with baby-step/giant-step rotation grouping, and the TotalSum rotate-and-
//! add slot summation.
//!
//! The input ciphertext must carry the vector replicated with period
//! `cols_padded` so wraparound rotations read the right coordinates. The
//! output holds row i mod rows_padded in slot i, i.e. the result replicated
//! with period rows_padded. Exactly one level is consumed (a single rescale
//! after accumulation).

use hefl_ckks::{
    mod_switch_to, mult_plain_lazy, rescale, rotate, Ciphertext, CkksError, Context, EvalKeys,
};

use crate::Result;

#[derive(Debug, Clone)]
pub struct PlainMatrix {
    pub rows: usize,
    pub cols: usize,
    pub rows_padded: usize,
    pub cols_padded: usize,
    /// Row-major rows_padded x cols_padded with zero padding.
    entries: Vec<f64>,
}

impl PlainMatrix {
    pub fn new(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(CkksError::Framing(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        let rows_padded = rows.next_power_of_two();
        let cols_padded = cols.next_power_of_two();
        let mut entries = vec![0.0f64; rows_padded * cols_padded];
        for r in 0..rows {
            entries[r * cols_padded..r * cols_padded + cols]
                .copy_from_slice(&data[r * cols..(r + 1) * cols]);
        }
        Ok(Self { rows, cols, rows_padded, cols_padded, entries })
    }

    pub fn at_padded(&self, r: usize, c: usize) -> f64 {
        self.entries[r * self.cols_padded + c]
    }

    /// Generalized diagonal k over the full slot range:
    /// diag_k[i] = A[i mod rows_padded, (i + k) mod cols_padded].
    fn diagonal(&self, k: usize, slots: usize) -> Vec<f64> {
        (0..slots)
            .map(|i| self.at_padded(i % self.rows_padded, (i + k) % self.cols_padded))
            .collect()
    }

    fn diagonal_is_zero(&self, k: usize) -> bool {
        (0..self.rows_padded).all(|r| self.at_padded(r, (r + k) % self.cols_padded) == 0.0)
    }
}

/// Baby-step size for a diagonal count (power of two ~ sqrt).
fn bsgs_split(diag_count: usize) -> (usize, usize) {
    if diag_count <= 4 {
        return (diag_count, 1); // plain loop below the BSGS break-even
    }
    let mut n1 = 1usize;
    while n1 * n1 < diag_count {
        n1 <<= 1;
    }
    (n1, diag_count / n1)
}

/// Rotation steps `mat_vec` will request for a matrix with this many padded
/// columns (callers generate the keys up front).
pub fn matvec_rotation_steps(cols_padded: usize, slots: usize) -> Vec<usize> {
    let (n1, n2) = bsgs_split(cols_padded);
    let mut steps = Vec::new();
    for b in 1..n1 {
        steps.push(b % slots);
    }
    for g in 1..n2 {
        steps.push((g * n1) % slots);
    }
    steps.retain(|&s| s != 0);
    steps.sort_unstable();
    steps.dedup();
    steps
}

/// Powers of two used by TotalSum.
pub fn total_sum_steps(slots: usize) -> Vec<usize> {
    (0..slots.trailing_zeros()).map(|j| 1usize << j).collect()
}

/// A * v with v replicated at period cols_padded. One level consumed.
pub fn mat_vec(
    ctx: &Context,
    keys: &EvalKeys,
    matrix: &PlainMatrix,
    ct: &Ciphertext,
) -> Result<Ciphertext> {
    if ct.level < 1 {
        return Err(CkksError::LevelExhausted { needed: 1, have: 0 });
    }
    let slots = ctx.params.slots;
    if matrix.cols_padded > slots || matrix.rows_padded > slots {
        return Err(CkksError::TooManySlots {
            len: matrix.rows_padded.max(matrix.cols_padded),
            slots,
        });
    }
    let d = matrix.cols_padded;
    let (n1, n2) = bsgs_split(d);
    let level = ct.level;
    let pt_scale = ctx.params.prime(level) as f64;

    // Baby rotations of the input are shared across all giant groups.
    let mut baby: Vec<Option<Ciphertext>> = vec![None; n1];
    let mut acc: Option<Ciphertext> = None;

    for g in 0..n2 {
        let mut inner: Option<Ciphertext> = None;
        for b in 0..n1 {
            let k = g * n1 + b;
            if k >= d || matrix.diagonal_is_zero(k) {
                continue;
            }
            // Giant-step correction: pre-rotate the diagonal right by g*n1.
            let diag = matrix.diagonal(k, slots);
            let shifted: Vec<f64> =
                (0..slots).map(|i| diag[(i + slots - (g * n1) % slots) % slots]).collect();
            let rotated = match &baby[b] {
                Some(c) => c.clone(),
                None => {
                    let c = if b == 0 { ct.clone() } else { rotate(ctx, keys, ct, b)? };
                    baby[b] = Some(c.clone());
                    c
                }
            };
            let pt = ctx.encode(&shifted, level, pt_scale)?;
            let term = mult_plain_lazy(ctx, &rotated, &pt)?;
            inner = Some(match inner {
                None => term,
                Some(s) => hefl_ckks::add(ctx, &s, &term)?,
            });
        }
        if let Some(s) = inner {
            let outer = if g == 0 { s } else { rotate(ctx, keys, &s, (g * n1) % slots)? };
            acc = Some(match acc {
                None => outer,
                Some(a) => hefl_ckks::add(ctx, &a, &outer)?,
            });
        }
    }

    let acc = match acc {
        Some(a) => a,
        // all-zero matrix: a valid encryption of zero at one level down
        None => {
            let zero = ctx.encode(&[0.0], level, pt_scale)?;
            mult_plain_lazy(ctx, &mod_switch_to(ct, level), &zero)?
        }
    };
    rescale(ctx, &acc)
}

/// Replicate the slotwise sum into every slot: log2(slots) rotations and
/// additions, no level consumed.
pub fn total_sum(ctx: &Context, keys: &EvalKeys, ct: &Ciphertext) -> Result<Ciphertext> {
    let slots = ctx.params.slots;
    let mut acc = ct.clone();
    let mut step = 1usize;
    while step < slots {
        let rot = rotate(ctx, keys, &acc, step)?;
        acc = hefl_ckks::add(ctx, &acc, &rot)?;
        step <<= 1;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bsgs_split_shapes() {
        assert_eq!(bsgs_split(4), (4, 1));
        assert_eq!(bsgs_split(8), (4, 2));
        assert_eq!(bsgs_split(64), (8, 8));
        assert_eq!(bsgs_split(256), (16, 16));
    }

    #[test]
    fn diagonal_wraparound() {
        // 2x4 matrix: diag_1[i] = A[i mod 2, (i+1) mod 4]
        let m = PlainMatrix::new(2, 4, &[1., 2., 3., 4., 5., 6., 7., 8.]).unwrap();
        let d = m.diagonal(1, 8);
        assert_eq!(d[0], 2.0); // A[0,1]
        assert_eq!(d[1], 7.0); // A[1,2]
        assert_eq!(d[2], 4.0); // A[0,3]
        assert_eq!(d[3], 5.0); // A[1,0]
    }

    #[test]
    fn rotation_step_lists() {
        let steps = matvec_rotation_steps(64, 1024);
        // n1 = 8: babies 1..7, giants 8,16,...,56
        assert_eq!(steps, vec![1, 2, 3, 4, 5, 6, 7, 8, 16, 24, 32, 40, 48, 56]);
        assert_eq!(total_sum_steps(8), vec![1, 2, 4]);
    }
}
