//! Generic parity-check-matrix LDPC coding and bit interleaving.
//!
//! A code is defined entirely by a sparse binary parity-check matrix **H**
//! (`r` checks over `n` bits), supplied either as an alist file, as explicit
//! sparse entries, or by the random regular Gallager construction. The
//! systematic encoder is derived by GF(2) Gaussian elimination with column
//! pivoting: information bits occupy the non-pivot columns of the original
//! column order, parity bits the pivot columns, so `k = n - rank(H)` even
//! for rank-deficient matrices.
//!
//! Decoding is flooding-schedule sum-product in the LLR domain
//! (`llr = ln P(0)/P(1)`, matching the demapper, so no sign flips exist
//! anywhere in the chain), with the tanh magnitudes clipped just below one
//! and early exit on a zero syndrome.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // required by the no_std build
use num_traits::Float;
use rand::Rng;

use crate::seeds::{self, stream};
use crate::{Error, Result};

/// Tanh-domain magnitude clip for the check-node update.
const TANH_CLIP: f64 = 0.999_999_9;

/// A binary LDPC code with a derived systematic encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct LdpcCode {
    n: usize,
    num_checks: usize,
    k: usize,
    /// Per check node, the sorted variable indices it touches.
    row_adj: Vec<Vec<u32>>,
    /// Per variable node, the sorted check indices touching it.
    col_adj: Vec<Vec<u32>>,
    /// Columns carrying information bits (ascending original order).
    info_cols: Vec<u32>,
    /// Pivot columns carrying parity bits, in elimination order.
    parity_cols: Vec<u32>,
    /// Row `i`: bitmask over the `k` info positions whose XOR gives the
    /// parity bit at `parity_cols[i]`.
    gen_rows: Vec<Vec<u64>>,
}

/// Outcome of a belief-propagation decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpResult {
    /// Hard decisions on the posterior LLRs (`0` iff posterior > 0).
    pub bits: Vec<u8>,
    /// True when the syndrome reached zero before the iteration cap.
    pub converged: bool,
    /// Iterations actually executed.
    pub iterations: usize,
}

impl LdpcCode {
    /// Builds a code from sparse `(check, variable)` entries of **H**.
    pub fn from_parity_check(rows: usize, cols: usize, entries: &[(usize, usize)]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidCode(String::from("empty parity-check matrix")));
        }
        let mut row_adj = vec![Vec::new(); rows];
        let mut col_adj = vec![Vec::new(); cols];
        for &(r, c) in entries {
            if r >= rows || c >= cols {
                return Err(Error::InvalidCode(format!("entry ({r}, {c}) out of bounds")));
            }
            row_adj[r].push(c as u32);
            col_adj[c].push(r as u32);
        }
        for adj in row_adj.iter_mut().chain(col_adj.iter_mut()) {
            adj.sort_unstable();
            if adj.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidCode(String::from(
                    "duplicate entry in parity-check matrix",
                )));
            }
        }
        let (info_cols, parity_cols, gen_rows) = derive_encoder(rows, cols, &row_adj)?;
        let k = info_cols.len();
        Ok(Self { n: cols, num_checks: rows, k, row_adj, col_adj, info_cols, parity_cols, gen_rows })
    }

    /// Parses the standard alist text format (1-indexed adjacency, optional
    /// zero padding up to the stated maximum degrees) and cross-checks the
    /// row and column lists against each other.
    pub fn parse_alist(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut next_ints = |expect: &str| -> Result<Vec<i64>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidCode(format!("alist truncated before {expect}")))?;
            line.split_whitespace()
                .map(|t| {
                    t.parse::<i64>()
                        .map_err(|_| Error::InvalidCode(format!("bad integer {t:?} in {expect}")))
                })
                .collect()
        };

        let head = next_ints("size line")?;
        if head.len() != 2 || head[0] <= 0 || head[1] <= 0 {
            return Err(Error::InvalidCode(String::from("alist size line must be `n r`")));
        }
        let (n, r) = (head[0] as usize, head[1] as usize);
        let maxdeg = next_ints("max-degree line")?;
        if maxdeg.len() != 2 || maxdeg[0] < 0 || maxdeg[1] < 0 {
            return Err(Error::InvalidCode(String::from("alist max-degree line must be `dv dc`")));
        }
        let (max_col, max_row) = (maxdeg[0] as usize, maxdeg[1] as usize);

        let col_deg = next_ints("column degree list")?;
        let row_deg = next_ints("row degree list")?;
        if col_deg.len() != n || row_deg.len() != r {
            return Err(Error::InvalidCode(String::from("degree list length mismatch")));
        }

        let mut parse_adj = |count: usize,
                             degrees: &[i64],
                             max_deg: usize,
                             limit: usize,
                             what: &str|
         -> Result<Vec<Vec<u32>>> {
            let mut out = Vec::with_capacity(count);
            for (i, &deg) in degrees.iter().enumerate().take(count) {
                let line = lines.next().ok_or_else(|| {
                    Error::InvalidCode(format!("alist truncated in {what} adjacency"))
                })?;
                let mut ids = Vec::new();
                let mut tokens = 0usize;
                for t in line.split_whitespace() {
                    let v: i64 = t.parse().map_err(|_| {
                        Error::InvalidCode(format!("bad integer {t:?} in {what} adjacency"))
                    })?;
                    tokens += 1;
                    if v == 0 {
                        continue; // padding
                    }
                    if v < 0 || v as usize > limit {
                        return Err(Error::InvalidCode(format!("{what} index {v} out of range")));
                    }
                    ids.push((v - 1) as u32);
                }
                if deg < 0 || ids.len() != deg as usize {
                    return Err(Error::InvalidCode(format!(
                        "{what} {i}: degree list says {deg}, adjacency has {}",
                        ids.len()
                    )));
                }
                if tokens > max_deg.max(deg as usize) {
                    return Err(Error::InvalidCode(format!(
                        "{what} {i}: more entries than the maximum degree"
                    )));
                }
                out.push(ids);
            }
            Ok(out)
        };

        let col_lists = parse_adj(n, &col_deg, max_col, r, "column")?;
        let row_lists = parse_adj(r, &row_deg, max_row, n, "row")?;

        // The two adjacency views must describe the same edge set.
        let mut col_edges: Vec<(u32, u32)> = Vec::new();
        for (c, checks) in col_lists.iter().enumerate() {
            for &chk in checks {
                col_edges.push((chk, c as u32));
            }
        }
        let mut row_edges: Vec<(u32, u32)> = Vec::new();
        for (chk, vars) in row_lists.iter().enumerate() {
            for &v in vars {
                row_edges.push((chk as u32, v));
            }
        }
        col_edges.sort_unstable();
        row_edges.sort_unstable();
        if col_edges != row_edges {
            return Err(Error::InvalidCode(String::from(
                "alist column and row adjacency lists disagree",
            )));
        }

        let entries: Vec<(usize, usize)> = row_edges
            .iter()
            .map(|&(chk, v)| (chk as usize, v as usize))
            .collect();
        Self::from_parity_check(r, n, &entries)
    }

    /// Random regular Gallager construction: `col_weight` stacked bands of
    /// `n / row_weight` rows, the first band contiguous, later bands applying
    /// a seeded column permutation. Deterministic per seed.
    pub fn generate_gallager(
        n: usize,
        col_weight: usize,
        row_weight: usize,
        seed: u64,
    ) -> Result<Self> {
        if col_weight < 2 || row_weight < 2 {
            return Err(Error::InvalidCode(String::from("Gallager weights must be at least 2")));
        }
        if n == 0 || n % row_weight != 0 || (n * col_weight) % row_weight != 0 {
            return Err(Error::InvalidCode(format!(
                "Gallager construction needs n divisible by row weight (n={n}, wr={row_weight})"
            )));
        }
        let rows_per_band = n / row_weight;
        let mut entries = Vec::with_capacity(n * col_weight);
        let mut perm: Vec<usize> = (0..n).collect();
        for band in 0..col_weight {
            if band > 0 {
                let mut rng = seeds::rng_for(seed, stream::GALLAGER, band as u64);
                for i in (1..n).rev() {
                    let j = rng.random_range(0..=i);
                    perm.swap(i, j);
                }
            }
            for row in 0..rows_per_band {
                for t in 0..row_weight {
                    entries.push((band * rows_per_band + row, perm[row * row_weight + t]));
                }
            }
        }
        Self::from_parity_check(col_weight * rows_per_band, n, &entries)
    }

    /// Codeword length `n`.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Information bits per codeword, `n - rank(H)`.
    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of parity checks (rows of **H**, including dependent ones).
    #[inline]
    pub fn num_checks(&self) -> usize {
        self.num_checks
    }

    /// Code rate `k / n`.
    #[inline]
    pub fn coderate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Columns (codeword positions) that carry the information bits.
    #[inline]
    pub fn info_positions(&self) -> &[u32] {
        &self.info_cols
    }

    /// Systematic encode: `info` goes to the designated positions, parity
    /// fills the pivot columns so that every check is satisfied.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k {
            return Err(Error::LengthMismatch { left: info.len(), right: self.k });
        }
        let words = self.k.div_ceil(64);
        let mut info_word = vec![0u64; words];
        for (j, &b) in info.iter().enumerate() {
            if b & 1 == 1 {
                info_word[j / 64] |= 1 << (j % 64);
            }
        }
        let mut out = vec![0u8; self.n];
        for (j, &col) in self.info_cols.iter().enumerate() {
            out[col as usize] = info[j] & 1;
        }
        for (i, &col) in self.parity_cols.iter().enumerate() {
            let mut acc = 0u64;
            for (w, &g) in self.gen_rows[i].iter().enumerate() {
                acc ^= g & info_word[w];
            }
            out[col as usize] = (acc.count_ones() & 1) as u8;
        }
        Ok(out)
    }

    /// True when `bits` satisfies every parity check.
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.n
            && self
                .row_adj
                .iter()
                .all(|vars| vars.iter().fold(0u8, |acc, &v| acc ^ (bits[v as usize] & 1)) == 0)
    }

    /// Number of length-4 cycles in the Tanner graph (pairs of checks
    /// sharing at least two variables). Reported, never repaired.
    pub fn count_4cycles(&self) -> usize {
        let mut cycles = 0usize;
        for a in 0..self.num_checks {
            for b in (a + 1)..self.num_checks {
                let shared = count_common(&self.row_adj[a], &self.row_adj[b]);
                cycles += shared * shared.saturating_sub(1) / 2;
            }
        }
        cycles
    }

    /// Flooding-schedule sum-product decoding of channel LLRs
    /// (`ln P(0)/P(1)` convention). Early exit on a zero syndrome; hard
    /// decisions are taken on the posterior LLRs. A bit whose posterior is
    /// exactly zero is undecided, so a zero-information input can never be
    /// declared converged no matter how its ties break.
    pub fn decode_bp(&self, llrs: &[f64], max_iter: usize) -> Result<BpResult> {
        if llrs.len() != self.n {
            return Err(Error::LengthMismatch { left: llrs.len(), right: self.n });
        }
        if max_iter < 1 {
            return Err(Error::InvalidHyperparameter("max_iter must be at least 1"));
        }

        // Edge storage in variable-major order.
        let mut var_edge_start = Vec::with_capacity(self.n + 1);
        var_edge_start.push(0usize);
        for adj in &self.col_adj {
            var_edge_start.push(var_edge_start.last().unwrap() + adj.len());
        }
        let num_edges = *var_edge_start.last().unwrap();
        // For each check, the edge indices of its variables.
        let mut check_edges = Vec::with_capacity(self.num_checks);
        for (chk, vars) in self.row_adj.iter().enumerate() {
            let mut edges = Vec::with_capacity(vars.len());
            for &v in vars {
                let pos = self.col_adj[v as usize]
                    .iter()
                    .position(|&c| c as usize == chk)
                    .expect("adjacency views are consistent by construction");
                edges.push(var_edge_start[v as usize] + pos);
            }
            check_edges.push(edges);
        }

        let mut v2c = vec![0.0f64; num_edges];
        let mut c2v = vec![0.0f64; num_edges];
        for v in 0..self.n {
            for e in var_edge_start[v]..var_edge_start[v + 1] {
                v2c[e] = llrs[v];
            }
        }

        let mut hard = vec![0u8; self.n];
        let mut tanh_buf: Vec<f64> = Vec::new();
        for iter in 1..=max_iter {
            let mut undecided = false;
            // Check-node update, tanh rule with clipping.
            for edges in &check_edges {
                tanh_buf.clear();
                tanh_buf.extend(edges.iter().map(|&e| (0.5 * v2c[e]).tanh()));
                for (i, &e) in edges.iter().enumerate() {
                    let mut prod = 1.0f64;
                    for (j, &t) in tanh_buf.iter().enumerate() {
                        if j != i {
                            prod *= t;
                        }
                    }
                    c2v[e] = 2.0 * prod.clamp(-TANH_CLIP, TANH_CLIP).atanh();
                }
            }
            // Variable-node update and posteriors.
            for v in 0..self.n {
                let start = var_edge_start[v];
                let end = var_edge_start[v + 1];
                let mut total = llrs[v];
                for e in start..end {
                    total += c2v[e];
                }
                hard[v] = if total > 0.0 { 0 } else { 1 };
                undecided |= total == 0.0;
                for e in start..end {
                    v2c[e] = total - c2v[e];
                }
            }
            if !undecided && self.is_codeword(&hard) {
                return Ok(BpResult { bits: hard, converged: true, iterations: iter });
            }
        }
        Ok(BpResult { bits: hard, converged: false, iterations: max_iter })
    }
}

/// GF(2) row reduction with column pivoting over the sparse row adjacency.
/// Returns (info columns ascending, pivot columns in elimination order,
/// generator rows over the info positions).
fn derive_encoder(
    rows: usize,
    cols: usize,
    row_adj: &[Vec<u32>],
) -> Result<(Vec<u32>, Vec<u32>, Vec<Vec<u64>>)> {
    let words = cols.div_ceil(64);
    let mut mat: Vec<Vec<u64>> = vec![vec![0u64; words]; rows];
    for (r, adj) in row_adj.iter().enumerate() {
        for &c in adj {
            mat[r][c as usize / 64] |= 1 << (c as usize % 64);
        }
    }
    let bit = |row: &[u64], c: usize| (row[c / 64] >> (c % 64)) & 1 == 1;

    let mut pivot_cols: Vec<u32> = Vec::new();
    let mut rank = 0usize;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).find(|&r| bit(&mat[r], col)) else {
            continue;
        };
        mat.swap(rank, pivot);
        let pivot_row = mat[rank].clone();
        for (r, row) in mat.iter_mut().enumerate() {
            if r != rank && bit(row, col) {
                for (w, p) in row.iter_mut().zip(&pivot_row) {
                    *w ^= p;
                }
            }
        }
        pivot_cols.push(col as u32);
        rank += 1;
        if rank == rows {
            break;
        }
    }
    if rank == 0 {
        return Err(Error::InvalidCode(String::from("parity-check matrix has rank zero")));
    }
    if rank >= cols {
        return Err(Error::InvalidCode(String::from("code has no information bits (rank = n)")));
    }

    let is_pivot = {
        let mut mask = vec![false; cols];
        for &c in &pivot_cols {
            mask[c as usize] = true;
        }
        mask
    };
    let info_cols: Vec<u32> = (0..cols as u32).filter(|&c| !is_pivot[c as usize]).collect();
    let info_index = {
        let mut map = vec![0usize; cols];
        for (j, &c) in info_cols.iter().enumerate() {
            map[c as usize] = j;
        }
        map
    };

    // Row i of the reduced matrix reads: c[pivot_cols[i]] = XOR of the info
    // bits it touches.
    let k = info_cols.len();
    let gen_words = k.div_ceil(64);
    let mut gen_rows = vec![vec![0u64; gen_words]; rank];
    for (i, gen) in gen_rows.iter_mut().enumerate() {
        for col in 0..cols {
            if !is_pivot[col] && bit(&mat[i], col) {
                let j = info_index[col];
                gen[j / 64] |= 1 << (j % 64);
            }
        }
    }
    Ok((info_cols, pivot_cols, gen_rows))
}

fn count_common(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut common) = (0usize, 0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    common
}

/// A seeded Fisher-Yates bit interleaver over a fixed block length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<u32>,
    inv: Vec<u32>,
}

impl Interleaver {
    /// Builds the permutation for blocks of `len` symbols.
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<u32> = (0..len as u32).collect();
        let mut rng = seeds::rng_for(seed, stream::INTERLEAVER, 0);
        for i in (1..len).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        let mut inv = vec![0u32; len];
        for (i, &p) in perm.iter().enumerate() {
            inv[p as usize] = i as u32;
        }
        Self { perm, inv }
    }

    /// Block length.
    #[inline]
    pub fn len(&self) -> usize {
        self.perm.len()
    }

    /// True for the empty permutation.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Permutes one block.
    pub fn interleave<T: Copy>(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.perm.len() {
            return Err(Error::LengthMismatch { left: x.len(), right: self.perm.len() });
        }
        Ok(self.perm.iter().map(|&p| x[p as usize]).collect())
    }

    /// Exact inverse of [`interleave`](Self::interleave).
    pub fn deinterleave<T: Copy>(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.inv.len() {
            return Err(Error::LengthMismatch { left: x.len(), right: self.inv.len() });
        }
        Ok(self.inv.iter().map(|&p| x[p as usize]).collect())
    }
}
