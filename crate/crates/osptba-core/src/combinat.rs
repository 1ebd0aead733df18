//! Partitions, skew diagrams, the graded alphabet and admissible tableaux.
//!
//! Symbols are stored as codes `1..=2s+1` in the total order
//! `1 < 2 < ... < s < 0 < s̄ < ... < 1̄`, so comparisons are integer
//! comparisons and the zero symbol is code `s+1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition(Vec<usize>);

impl Partition {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidPartition(parts));
        }
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Ok(Partition(parts))
    }

    pub fn empty() -> Self {
        Partition(Vec::new())
    }

    pub fn row(a: usize) -> Self {
        Partition(if a == 0 { vec![] } else { vec![a] })
    }

    /// The `m x a` rectangle `(a^m)`.
    pub fn rectangle(a: usize, m: usize) -> Self {
        if a == 0 || m == 0 {
            return Partition::empty();
        }
        Partition(vec![a; m])
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    /// Number of nonzero rows.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn size(&self) -> usize {
        self.0.iter().sum()
    }

    /// Row length with 1-based index; zero past the last row.
    pub fn part(&self, i: usize) -> usize {
        if i == 0 {
            return 0;
        }
        self.0.get(i - 1).copied().unwrap_or(0)
    }

    pub fn conjugate(&self) -> Partition {
        let width = self.part(1);
        Partition(
            (1..=width)
                .map(|j| self.0.iter().filter(|&&p| p >= j).count())
                .collect(),
        )
    }

    pub fn contains(&self, other: &Partition) -> bool {
        other.len() <= self.len() && (1..=other.len()).all(|i| other.part(i) <= self.part(i))
    }

    /// All partitions fitting in a `rows x cols` box, including the empty one.
    pub fn all_in_box(rows: usize, cols: usize) -> Vec<Partition> {
        fn rec(rows: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
            out.push(Partition::new(cur.clone()).expect("decreasing by construction"));
            if cur.len() == rows {
                return;
            }
            for p in 1..=max {
                cur.push(p);
                rec(rows, p, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(rows, cols, &mut Vec::new(), &mut out);
        out.sort();
        out
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Partition::new(v)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.0
    }
}

impl std::fmt::Display for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// Skew diagram `mu / lambda`. Cells are `(row, column)`, both 1-based, with
/// `(1,1)` the top-left corner of `mu`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SkewShape {
    outer: Partition,
    inner: Partition,
}

impl SkewShape {
    pub fn new(outer: Partition, inner: Partition) -> Result<Self> {
        if !outer.contains(&inner) {
            return Err(Error::NotContained);
        }
        Ok(SkewShape { outer, inner })
    }

    pub fn straight(mu: Partition) -> Self {
        SkewShape {
            outer: mu,
            inner: Partition::empty(),
        }
    }

    pub fn outer(&self) -> &Partition {
        &self.outer
    }

    pub fn inner(&self) -> &Partition {
        &self.inner
    }

    pub fn contains_cell(&self, j: usize, k: usize) -> bool {
        j >= 1 && k > self.inner.part(j) && k <= self.outer.part(j)
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        (1..=self.outer.len())
            .flat_map(|j| (self.inner.part(j) + 1..=self.outer.part(j)).map(move |k| (j, k)))
            .collect()
    }

    pub fn num_cells(&self) -> usize {
        self.outer.size() - self.inner.size()
    }

    pub fn is_empty(&self) -> bool {
        self.num_cells() == 0
    }

    /// Length of the longest row segment.
    pub fn max_row_length(&self) -> usize {
        (1..=self.outer.len())
            .map(|j| self.outer.part(j) - self.inner.part(j))
            .max()
            .unwrap_or(0)
    }

    /// All skew shapes `mu / lambda` with `mu` in a `rows x cols` box.
    pub fn all_in_box(rows: usize, cols: usize) -> Vec<SkewShape> {
        let ps = Partition::all_in_box(rows, cols);
        let mut out = Vec::new();
        for mu in &ps {
            for lam in &ps {
                if mu.contains(lam) {
                    out.push(SkewShape {
                        outer: mu.clone(),
                        inner: lam.clone(),
                    });
                }
            }
        }
        out
    }
}

impl std::fmt::Display for SkewShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.inner.is_empty() {
            write!(f, "{}", self.outer)
        } else {
            write!(f, "{}/{}", self.outer, self.inner)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Unbarred(usize),
    Zero,
    Barred(usize),
}

/// Alphabet symbol as its position `1..=2s+1` in the total order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol(pub usize);

impl Symbol {
    pub fn unbarred(a: usize) -> Self {
        Symbol(a)
    }

    pub fn zero(s: usize) -> Self {
        Symbol(s + 1)
    }

    pub fn barred(a: usize, s: usize) -> Self {
        Symbol(2 * s + 2 - a)
    }

    pub fn kind(self, s: usize) -> SymbolKind {
        let c = self.0;
        debug_assert!((1..=2 * s + 1).contains(&c));
        if c <= s {
            SymbolKind::Unbarred(c)
        } else if c == s + 1 {
            SymbolKind::Zero
        } else {
            SymbolKind::Barred(2 * s + 2 - c)
        }
    }

    pub fn parity(self, s: usize) -> u8 {
        u8::from(self.0 != s + 1)
    }

    pub fn label(self, s: usize) -> String {
        match self.kind(s) {
            SymbolKind::Unbarred(a) => a.to_string(),
            SymbolKind::Zero => "0".into(),
            SymbolKind::Barred(a) => format!("{a}bar"),
        }
    }
}

/// All `2s+1` symbols in order.
pub fn alphabet(s: usize) -> Vec<Symbol> {
    (1..=2 * s + 1).map(Symbol).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tableau {
    pub shape: SkewShape,
    /// Entries aligned with `shape.cells()`.
    pub entries: Vec<Symbol>,
}

impl Tableau {
    pub fn get(&self, j: usize, k: usize) -> Option<Symbol> {
        self.shape
            .cells()
            .iter()
            .position(|&c| c == (j, k))
            .map(|i| self.entries[i])
    }

    /// Rows of symbol codes, skipping the cells of the inner partition.
    pub fn rows(&self) -> Vec<Vec<usize>> {
        let mut rows = vec![Vec::new(); self.shape.outer().len()];
        for (&(j, _), b) in self.shape.cells().iter().zip(&self.entries) {
            rows[j - 1].push(b.0);
        }
        rows
    }

    pub fn is_admissible(&self, s: usize) -> bool {
        self.entries.iter().all(|b| (1..=2 * s + 1).contains(&b.0))
            && self.shape.cells().iter().all(|&(j, k)| {
                let b = self.get(j, k).unwrap();
                let right = self.get(j, k + 1).is_none_or(|r| b < r);
                let below = self.get(j + 1, k).is_none_or(|d| b <= d);
                right && below
            })
    }
}

/// `b_i = mu'_i - mu'_{i+1}` for `i < s`, `b_s = 2 mu'_s`.
pub fn kac_dynkin(mu: &Partition, s: usize) -> Result<Vec<usize>> {
    if mu.part(1) > s {
        return Err(Error::KacDynkinRange { mu1: mu.part(1), s });
    }
    let c = mu.conjugate();
    let mut b: Vec<usize> = (1..s).map(|i| c.part(i) - c.part(i + 1)).collect();
    b.push(2 * c.part(s));
    Ok(b)
}

/// `n = -mu_1 + mu'_1 - 2j + 2k`; the cell carries spectral argument `v - (i/2) n`.
pub fn cell_shift_index(shape: &SkewShape, j: usize, k: usize) -> Result<i64> {
    if !shape.contains_cell(j, k) {
        return Err(Error::CellOutside(j, k));
    }
    let mu = shape.outer();
    Ok(-(mu.part(1) as i64) + mu.len() as i64 - 2 * j as i64 + 2 * k as i64)
}

/// Whether the shape contains an `m x a` rectangle with `a >= 2s+2`.
/// Rows of a skew diagram are contiguous, so one long row suffices.
pub fn contains_wide_rectangle(shape: &SkewShape, s: usize) -> bool {
    shape.max_row_length() >= 2 * s + 2
}

/// Admissible fillings: strict increase along rows, weak increase down
/// columns. Output is ordered lexicographically by entries read column by column.
pub fn enumerate_tableaux(shape: &SkewShape, s: usize) -> Vec<Tableau> {
    let cells = shape.cells();
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by_key(|&i| (cells[i].1, cells[i].0));
    let index_of = |j: usize, k: usize| cells.iter().position(|&c| c == (j, k));
    // predecessor constraints: left neighbour (strict) and upper neighbour (weak)
    let left: Vec<Option<usize>> = cells.iter().map(|&(j, k)| index_of(j, k.wrapping_sub(1))).collect();
    let up: Vec<Option<usize>> = cells.iter().map(|&(j, k)| index_of(j.wrapping_sub(1), k)).collect();

    let top = 2 * s + 1;
    let mut fill = vec![0usize; cells.len()];
    let mut out = Vec::new();

    fn rec(
        pos: usize,
        order: &[usize],
        left: &[Option<usize>],
        up: &[Option<usize>],
        top: usize,
        fill: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if pos == order.len() {
            out.push(fill.clone());
            return;
        }
        let c = order[pos];
        let mut lo = 1;
        if let Some(l) = left[c] {
            lo = lo.max(fill[l] + 1);
        }
        if let Some(u) = up[c] {
            lo = lo.max(fill[u]);
        }
        for x in lo..=top {
            fill[c] = x;
            rec(pos + 1, order, left, up, top, fill, out);
        }
        fill[c] = 0;
    }

    let mut raw = Vec::new();
    rec(0, &order, &left, &up, top, &mut fill, &mut raw);
    for f in raw {
        out.push(Tableau {
            shape: shape.clone(),
            entries: f.into_iter().map(Symbol).collect(),
        });
    }
    out
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: &[usize]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn conjugate_examples() {
        assert_eq!(p(&[2, 1]).conjugate(), p(&[2, 1]));
        assert_eq!(p(&[3, 1]).conjugate(), p(&[2, 1, 1]));
        assert_eq!(Partition::empty().conjugate(), Partition::empty());
    }

    #[test]
    fn partition_rejects_increasing_and_strips_zeros() {
        assert!(Partition::new(vec![1, 2]).is_err());
        assert_eq!(p(&[2, 1, 0, 0]).parts(), &[2, 1]);
    }

    #[test]
    fn conjugate_is_involution_up_to_eight_boxes() {
        let all = Partition::all_in_box(8, 8);
        let small: Vec<_> = all.into_iter().filter(|q| q.size() <= 8).collect();
        assert_eq!(small.len(), 1 + 1 + 2 + 3 + 5 + 7 + 11 + 15 + 22);
        for q in small {
            assert_eq!(q.conjugate().conjugate(), q);
        }
    }

    #[test]
    fn kac_dynkin_examples() {
        assert_eq!(kac_dynkin(&p(&[1]), 2).unwrap(), vec![1, 0]);
        assert_eq!(kac_dynkin(&p(&[1, 1]), 2).unwrap(), vec![2, 0]);
        assert_eq!(kac_dynkin(&p(&[2]), 2).unwrap(), vec![0, 2]);
        assert!(matches!(
            kac_dynkin(&p(&[3]), 2),
            Err(Error::KacDynkinRange { mu1: 3, s: 2 })
        ));
    }

    #[test]
    fn cell_shift_examples() {
        let one = SkewShape::straight(p(&[1]));
        assert_eq!(cell_shift_index(&one, 1, 1).unwrap(), 0);
        let col = SkewShape::straight(p(&[1, 1]));
        assert_eq!(cell_shift_index(&col, 2, 1).unwrap(), -1);
        let row = SkewShape::straight(p(&[2]));
        assert_eq!(cell_shift_index(&row, 1, 2).unwrap(), 1);
        assert_eq!(cell_shift_index(&row, 2, 1), Err(Error::CellOutside(2, 1)));
    }

    #[test]
    fn wide_rectangle_examples() {
        assert!(contains_wide_rectangle(&SkewShape::straight(p(&[6])), 2));
        assert!(!contains_wide_rectangle(&SkewShape::straight(p(&[5])), 2));
        assert!(!contains_wide_rectangle(&SkewShape::straight(Partition::empty()), 3));
    }

    #[test]
    fn fixture_counts() {
        let count = |v: &[usize]| enumerate_tableaux(&SkewShape::straight(p(v)), 2).len();
        assert_eq!(count(&[1]), 5);
        assert_eq!(count(&[1, 1]), 15);
        assert_eq!(count(&[2]), 10);
        assert_eq!(count(&[]), 1);
    }

    #[test]
    fn single_box_lists_alphabet_in_order() {
        let t = enumerate_tableaux(&SkewShape::straight(p(&[1])), 2);
        let labels: Vec<String> = t.iter().map(|t| t.entries[0].label(2)).collect();
        assert_eq!(labels, ["1", "2", "0", "2bar", "1bar"]);
    }

    #[test]
    fn symbol_kinds_and_parity() {
        let s = 3;
        assert_eq!(Symbol(3).kind(s), SymbolKind::Unbarred(3));
        assert_eq!(Symbol(4).kind(s), SymbolKind::Zero);
        assert_eq!(Symbol(7).kind(s), SymbolKind::Barred(1));
        assert_eq!(Symbol::barred(2, s), Symbol(6));
        assert_eq!(Symbol::zero(s).parity(s), 0);
        assert_eq!(alphabet(s).iter().map(|b| b.parity(s) as usize).sum::<usize>(), 6);
    }

    #[test]
    fn skew_cells_and_rows() {
        let sh = SkewShape::new(p(&[3, 2]), p(&[1])).unwrap();
        assert_eq!(sh.cells(), vec![(1, 2), (1, 3), (2, 1), (2, 2)]);
        assert!(SkewShape::new(p(&[1]), p(&[2])).is_err());
        let t = &enumerate_tableaux(&sh, 1)[0];
        assert_eq!(t.rows(), vec![vec![1, 2], vec![1, 2]]);
    }

    #[test]
    fn output_is_sorted_and_admissible() {
        for sh in SkewShape::all_in_box(3, 3) {
            let ts = enumerate_tableaux(&sh, 1);
            let cells = sh.cells();
            let mut idx: Vec<usize> = (0..cells.len()).collect();
            idx.sort_by_key(|&i| (cells[i].1, cells[i].0));
            let keys: Vec<Vec<usize>> = ts
                .iter()
                .map(|t| idx.iter().map(|&i| t.entries[i].0).collect())
                .collect();
            assert!(keys.windows(2).all(|w| w[0] < w[1]));
            assert!(ts.iter().all(|t| t.is_admissible(1)));
        }
    }

    // independent brute force: every filling, filtered by the order rules
    fn brute_count(sh: &SkewShape, s: usize) -> usize {
        let cells = sh.cells();
        let d = 2 * s + 1;
        let n = cells.len();
        let total = d.pow(n as u32);
        let mut count = 0;
        for code in 0..total {
            let mut c = code;
            let vals: Vec<usize> = (0..n)
                .map(|_| {
                    let x = c % d + 1;
                    c /= d;
                    x
                })
                .collect();
            let at = |j: usize, k: usize| cells.iter().position(|&q| q == (j, k)).map(|i| vals[i]);
            let ok = cells.iter().enumerate().all(|(i, &(j, k))| {
                at(j, k + 1).is_none_or(|r| vals[i] < r) && at(j + 1, k).is_none_or(|b| vals[i] <= b)
            });
            if ok {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn brute_force_agrees_inside_four_by_four() {
        for s in 1..=2 {
            for sh in SkewShape::all_in_box(4, 4) {
                if sh.num_cells() > 6 {
                    continue;
                }
                assert_eq!(enumerate_tableaux(&sh, s).len(), brute_count(&sh, s), "{sh} s={s}");
            }
        }
    }

    #[test]
    fn straight_shapes_in_four_by_four_s1() {
        // full brute force for all straight shapes up to 9 cells, s = 1
        for mu in Partition::all_in_box(4, 4) {
            if mu.size() <= 9 {
                let sh = SkewShape::straight(mu);
                assert_eq!(enumerate_tableaux(&sh, 1).len(), brute_count(&sh, 1), "{sh}");
            }
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(6, 2), 15);
        assert_eq!(binomial(3, 4), 0);
    }

    proptest! {
        #[test]
        fn row_and_column_counts(s in 1usize..4, len in 1usize..8) {
            let g = 2 * s as u64 + 1;
            let row = enumerate_tableaux(&SkewShape::straight(Partition::row(len)), s).len() as u64;
            prop_assert_eq!(row, binomial(g, len as u64));
            let col = enumerate_tableaux(&SkewShape::straight(Partition::rectangle(1, len)), s).len() as u64;
            prop_assert_eq!(col, binomial(2 * s as u64 + len as u64, len as u64));
        }

        #[test]
        fn row_empty_iff_wide(s in 1usize..4, len in 1usize..10) {
            let sh = SkewShape::straight(Partition::row(len));
            prop_assert_eq!(enumerate_tableaux(&sh, s).is_empty(), contains_wide_rectangle(&sh, s));
        }

        #[test]
        fn conjugate_involution(parts in proptest::collection::vec(0usize..7, 0..7)) {
            let mut parts = parts;
            parts.sort_unstable_by(|a, b| b.cmp(a));
            let q = Partition::new(parts).unwrap();
            prop_assert_eq!(q.conjugate().conjugate(), q.clone());
            prop_assert_eq!(q.conjugate().size(), q.size());
        }
    }
}
