//! Finitely generated subgroups of the reals containing 1.
//!
//! A lattice is presented by generators in the ground field; a Z-basis is
//! computed once by Hermite normal form reduction of the integer coordinate
//! matrix obtained after clearing denominators.  Coordinates, divisibility
//! tests and the constructive positive independent sets used by the flip
//! invariants all live here.

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::ground::{Field, GroundNum, Rat};
use crate::{Error, Result};

/// Default round budget for `independentize`.
pub const INDEPENDENTIZE_BUDGET: usize = 10_000;

// ---------------------------------------------------------------------------
// integer matrix helpers

/// Row Hermite normal form.  Returns the nonzero rows (pivots positive,
/// entries above each pivot reduced into `[0, pivot)`) and the pivot columns.
pub(crate) fn hnf_rows(mut m: Vec<Vec<BigInt>>) -> (Vec<Vec<BigInt>>, Vec<usize>) {
    if m.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let ncols = m[0].len();
    let mut row = 0;
    let mut pivots = Vec::new();
    for col in 0..ncols {
        // clear column `col` below `row` by repeated remainder steps
        loop {
            let mut best: Option<usize> = None;
            for r in row..m.len() {
                if !m[r][col].is_zero() {
                    best = match best {
                        None => Some(r),
                        Some(b) => {
                            if m[r][col].abs() < m[b][col].abs() {
                                Some(r)
                            } else {
                                Some(b)
                            }
                        }
                    };
                }
            }
            let Some(b) = best else { break };
            m.swap(row, b);
            let mut any = false;
            for r in row + 1..m.len() {
                if !m[r][col].is_zero() {
                    let q = m[r][col].div_floor(&m[row][col]);
                    for c in col..ncols {
                        let sub = &q * &m[row][c];
                        m[r][c] = &m[r][c] - sub;
                    }
                    if !m[r][col].is_zero() {
                        any = true;
                    }
                }
            }
            if !any {
                break;
            }
        }
        if m[row..].iter().all(|r| r[col].is_zero()) {
            continue;
        }
        if m[row][col].is_negative() {
            for c in col..ncols {
                m[row][c] = -m[row][c].clone();
            }
        }
        // reduce the entries above the pivot
        for r in 0..row {
            if !m[r][col].is_zero() {
                let q = m[r][col].div_floor(&m[row][col]);
                for c in col..ncols {
                    let sub = &q * &m[row][c];
                    m[r][c] = &m[r][c] - sub;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    m.truncate(row);
    (m, pivots)
}

/// Solve `sum_k c_k rows[k] = v` over the integers against HNF rows.
pub(crate) fn hnf_solve(
    rows: &[Vec<BigInt>],
    pivots: &[usize],
    v: &[BigInt],
) -> Option<Vec<BigInt>> {
    let mut v = v.to_vec();
    let mut coeffs = vec![BigInt::zero(); rows.len()];
    for (k, &p) in pivots.iter().enumerate() {
        let (q, r) = v[p].div_rem(&rows[k][p]);
        if !r.is_zero() {
            return None;
        }
        if !q.is_zero() {
            for c in 0..v.len() {
                let sub = &q * &rows[k][c];
                v[c] = &v[c] - sub;
            }
        }
        coeffs[k] = q;
    }
    if v.iter().all(|c| c.is_zero()) {
        Some(coeffs)
    } else {
        None
    }
}

/// Rank over Q of a rational matrix (rows).
pub(crate) fn rational_rank(mut m: Vec<Vec<Rat>>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let ncols = m[0].len();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let inv = BigRational::one() / m[rank][col].clone();
        for r in 0..m.len() {
            if r != rank && !m[r][col].is_zero() {
                let factor = &m[r][col] * &inv;
                for c in col..ncols {
                    let sub = &factor * &m[rank][c];
                    m[r][c] = &m[r][c] - sub;
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

// ---------------------------------------------------------------------------
// the lattice

struct LatticeInner {
    field: Field,
    basis: Vec<GroundNum>,
    // scaled integer coordinates: basis[i] = hnf[i] / scale in the power basis
    hnf: Vec<Vec<BigInt>>,
    pivots: Vec<usize>,
    scale: BigInt,
    dense: bool,
}

/// A finitely generated subgroup of the reals containing 1, with a Z-basis.
#[derive(Clone)]
pub struct Lattice(Arc<LatticeInner>);

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.field == other.0.field
                && self.0.scale == other.0.scale
                && self.0.hnf == other.0.hnf)
    }
}

impl Eq for Lattice {}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lattice(rank {})", self.rank())
    }
}

impl Lattice {
    /// Z-span of the generators together with 1.
    pub fn from_generators(field: &Field, gens: &[GroundNum]) -> Result<Lattice> {
        let mut all: Vec<GroundNum> = vec![field.one()];
        for g in gens {
            if g.field() != field {
                return Err(Error::MixedContexts);
            }
            all.push(g.clone());
        }
        // common denominator over every coordinate
        let mut scale = BigInt::one();
        for g in &all {
            for c in g.coords() {
                scale = scale.lcm(c.denom());
            }
        }
        let rows: Vec<Vec<BigInt>> = all
            .iter()
            .map(|g| {
                g.coords()
                    .iter()
                    .map(|c| (c * Rat::from(scale.clone())).to_integer())
                    .collect()
            })
            .collect();
        let (hnf, pivots) = hnf_rows(rows);
        let basis: Vec<GroundNum> = hnf
            .iter()
            .map(|row| {
                let coords: Vec<Rat> = row
                    .iter()
                    .map(|c| Rat::new(c.clone(), scale.clone()))
                    .collect();
                field.from_coords(coords).expect("row length matches degree")
            })
            .collect();
        let dense = basis.len() >= 2;
        Ok(Lattice(Arc::new(LatticeInner {
            field: field.clone(),
            basis,
            hnf,
            pivots,
            scale,
            dense,
        })))
    }

    pub fn field(&self) -> &Field {
        &self.0.field
    }

    pub fn rank(&self) -> usize {
        self.0.basis.len()
    }

    pub fn basis(&self) -> &[GroundNum] {
        &self.0.basis
    }

    pub fn is_dense(&self) -> bool {
        self.0.dense
    }

    pub fn zero(&self) -> GroundNum {
        self.0.field.zero()
    }

    pub fn one(&self) -> GroundNum {
        self.0.field.one()
    }

    pub fn contains(&self, x: &GroundNum) -> bool {
        self.coordinates_of(x).is_ok()
    }

    /// Integer coordinates of `x` in the basis.
    pub fn coordinates_of(&self, x: &GroundNum) -> Result<Vec<BigInt>> {
        if x.field() != &self.0.field {
            return Err(Error::MixedContexts);
        }
        let mut v = Vec::with_capacity(x.coords().len());
        for c in x.coords() {
            let scaled = c * Rat::from(self.0.scale.clone());
            if !scaled.is_integer() {
                return Err(Error::NotInLattice);
            }
            v.push(scaled.to_integer());
        }
        hnf_solve(&self.0.hnf, &self.0.pivots, &v).ok_or(Error::NotInLattice)
    }

    /// The lattice element with the given basis coordinates.
    pub fn element_from_coords(&self, coords: &[BigInt]) -> GroundNum {
        assert_eq!(coords.len(), self.rank());
        let mut acc = self.0.field.zero();
        for (c, b) in coords.iter().zip(&self.0.basis) {
            acc = acc.add_ref(&b.scale(&Rat::from(c.clone())));
        }
        acc
    }

    /// Is every coordinate of `x` divisible by `k`?
    pub fn divisible_by(&self, x: &GroundNum, k: u32) -> Result<bool> {
        let coords = self.coordinates_of(x)?;
        let k = BigInt::from(k);
        Ok(coords.iter().all(|c| (c % &k).is_zero()))
    }

    /// Exact half of `x` when `x` is divisible by 2 in the lattice.
    pub fn half_of(&self, x: &GroundNum) -> Result<Option<GroundNum>> {
        if self.divisible_by(x, 2)? {
            Ok(Some(x.scale(&Rat::new(BigInt::one(), BigInt::from(2)))))
        } else {
            Ok(None)
        }
    }

    /// Some positive lattice element strictly below `bound`, by subtractive
    /// reduction on two independent positive elements.
    pub fn small_positive(&self, bound: &GroundNum) -> Result<GroundNum> {
        if !self.0.dense {
            return Err(Error::NotDense);
        }
        if bound.sign() <= 0 {
            return Err(Error::OutOfRange("bound must be positive".into()));
        }
        let pos = |g: &GroundNum| if g.sign() < 0 { g.neg_ref() } else { g.clone() };
        let mut u = pos(&self.0.basis[0]);
        let mut v = pos(&self.0.basis[1]);
        if u < v {
            std::mem::swap(&mut u, &mut v);
        }
        loop {
            if v.sub_ref(bound).sign() < 0 {
                return Ok(v);
            }
            // u >= v > 0 and u/v irrational, so the remainder is nonzero
            let q = u.div_ref(&v)?.floor();
            let r = u.sub_ref(&v.scale(&Rat::from(q)));
            u = v;
            v = r;
        }
    }

    /// Positive independent set through which a family of targets factors
    /// with nonnegative integer coefficients.
    pub fn independentize(&self, targets: &[GroundNum]) -> Result<IndependentSet> {
        self.independentize_with_budget(targets, INDEPENDENTIZE_BUDGET)
    }

    /// Reduce-by-smallest settles quickly when the targets are nearly
    /// independent, and its output keeps the targets themselves whenever they
    /// already form an independent set; but with more targets than the rank
    /// it can wander (unit-power values regenerate themselves forever), so
    /// after a bounded number of rounds we switch to a continued-fraction
    /// positive basis of the target sublattice, which always settles in rank
    /// at most 2.
    pub fn independentize_with_budget(
        &self,
        targets: &[GroundNum],
        budget: usize,
    ) -> Result<IndependentSet> {
        for t in targets {
            if t.field() != self.field() {
                return Err(Error::MixedContexts);
            }
            if t.sign() <= 0 {
                return Err(Error::OutOfRange("targets must be positive".into()));
            }
            if !self.contains(t) {
                return Err(Error::NotInLattice);
            }
        }
        match self.reduce_by_smallest(targets, budget.min(16)) {
            Err(Error::BudgetExceeded(_)) => self.positive_basis_expansion(targets, budget),
            other => other,
        }
    }

    fn reduce_by_smallest(
        &self,
        targets: &[GroundNum],
        budget: usize,
    ) -> Result<IndependentSet> {
        // working set with expansion bookkeeping: target[i] = sum_j exp[i][j] * set[j]
        let mut set: Vec<GroundNum> = Vec::new();
        let mut exp: Vec<Vec<BigUint>> = vec![Vec::new(); targets.len()];
        for (i, t) in targets.iter().enumerate() {
            let j = match set.iter().position(|s| s == t) {
                Some(j) => j,
                None => {
                    set.push(t.clone());
                    for row in exp.iter_mut() {
                        row.push(BigUint::zero());
                    }
                    set.len() - 1
                }
            };
            exp[i][j] += BigUint::one();
        }
        let mut rounds = 0;
        while !self.is_independent(&set) {
            rounds += 1;
            if rounds > budget {
                return Err(Error::BudgetExceeded(format!(
                    "independentize did not settle within {budget} rounds"
                )));
            }
            // reduce everything by the smallest element
            let min_idx = (0..set.len())
                .min_by(|&a, &b| set[a].cmp(&set[b]))
                .expect("set is nonempty");
            let m = set[min_idx].clone();
            let mut new_set: Vec<GroundNum> = Vec::new();
            let mut col_map: Vec<Option<usize>> = Vec::new(); // old column -> new column
            let mut ks: Vec<BigUint> = Vec::new(); // multiplier of m absorbed per old column
            fn push(new_set: &mut Vec<GroundNum>, v: GroundNum) -> usize {
                match new_set.iter().position(|s| *s == v) {
                    Some(j) => j,
                    None => {
                        new_set.push(v);
                        new_set.len() - 1
                    }
                }
            }
            for (j, x) in set.iter().enumerate() {
                if j == min_idx {
                    let nj = push(&mut new_set, m.clone());
                    col_map.push(Some(nj));
                    ks.push(BigUint::zero());
                    continue;
                }
                let k = x.div_ref(&m)?.floor();
                debug_assert!(k >= BigInt::one());
                let r = x.sub_ref(&m.scale(&Rat::from(k.clone())));
                let k = k.to_biguint().expect("positive quotient");
                if r.is_zero() {
                    col_map.push(None);
                } else {
                    let nj = push(&mut new_set, r);
                    col_map.push(Some(nj));
                }
                ks.push(k);
            }
            let min_new = new_set
                .iter()
                .position(|s| *s == m)
                .expect("reducer stays in the set");
            let mut new_exp: Vec<Vec<BigUint>> = Vec::new();
            for row in &exp {
                let mut new_row = vec![BigUint::zero(); new_set.len()];
                for (j, c) in row.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    if let Some(nj) = col_map[j] {
                        new_row[nj] += c;
                    }
                    if j != min_idx {
                        new_row[min_new] += c * &ks[j];
                    }
                }
                new_exp.push(new_row);
            }
            set = new_set;
            exp = new_exp;
        }
        let out = IndependentSet {
            lattice: self.clone(),
            elements: set,
            targets: targets.to_vec(),
            expansions: exp,
        };
        out.verify()?;
        Ok(out)
    }

    fn is_independent(&self, set: &[GroundNum]) -> bool {
        let rows: Vec<Vec<Rat>> = set.iter().map(|g| g.coords().to_vec()).collect();
        rational_rank(rows) == set.len()
    }

    /// Positive basis of the sublattice generated by the targets, refined by
    /// remainder steps (largest modulo smallest) until every target has
    /// nonnegative coordinates.
    fn positive_basis_expansion(
        &self,
        targets: &[GroundNum],
        budget: usize,
    ) -> Result<IndependentSet> {
        let field = self.field();
        // integer basis of the sublattice generated by the targets
        let mut scale = BigInt::one();
        for t in targets {
            for c in t.coords() {
                scale = scale.lcm(c.denom());
            }
        }
        let rows: Vec<Vec<BigInt>> = targets
            .iter()
            .map(|t| {
                t.coords()
                    .iter()
                    .map(|c| (c * Rat::from(scale.clone())).to_integer())
                    .collect()
            })
            .collect();
        let (hnf, _pivots) = hnf_rows(rows);
        let mut basis: Vec<GroundNum> = hnf
            .iter()
            .map(|row| {
                let coords: Vec<Rat> = row
                    .iter()
                    .map(|c| Rat::new(c.clone(), scale.clone()))
                    .collect();
                let g = field.from_coords(coords).expect("row length matches degree");
                if g.sign() < 0 {
                    g.neg_ref()
                } else {
                    g
                }
            })
            .collect();
        // coordinates of a target over the current basis (always integral)
        let coords_over = |basis: &[GroundNum], x: &GroundNum| -> Vec<BigInt> {
            let deg = field.degree();
            let n = basis.len();
            let mut aug: Vec<Vec<Rat>> = (0..deg)
                .map(|row| {
                    let mut r: Vec<Rat> =
                        basis.iter().map(|b| b.coords()[row].clone()).collect();
                    r.push(x.coords()[row].clone());
                    r
                })
                .collect();
            let mut rank = 0usize;
            let mut pivot_cols = Vec::new();
            for col in 0..n {
                let Some(p) = (rank..deg).find(|&r| !aug[r][col].is_zero()) else {
                    continue;
                };
                aug.swap(rank, p);
                let inv = Rat::one() / aug[rank][col].clone();
                for c in col..=n {
                    aug[rank][c] = &aug[rank][c] * &inv;
                }
                for r in 0..deg {
                    if r != rank && !aug[r][col].is_zero() {
                        let factor = aug[r][col].clone();
                        for c in col..=n {
                            let sub = &factor * &aug[rank][c];
                            aug[r][c] = &aug[r][c] - sub;
                        }
                    }
                }
                pivot_cols.push(col);
                rank += 1;
            }
            let mut out = vec![BigInt::zero(); n];
            for (r, &col) in pivot_cols.iter().enumerate() {
                debug_assert!(aug[r][n].is_integer());
                out[col] = aug[r][n].to_integer();
            }
            out
        };
        for _round in 0..budget {
            let mut all_nonneg = true;
            let mut exp: Vec<Vec<BigUint>> = Vec::with_capacity(targets.len());
            for t in targets {
                let c = coords_over(&basis, t);
                if c.iter().any(|v| v.is_negative()) {
                    all_nonneg = false;
                    break;
                }
                exp.push(
                    c.into_iter()
                        .map(|v| v.to_biguint().expect("nonnegative"))
                        .collect(),
                );
            }
            if all_nonneg {
                let out = IndependentSet {
                    lattice: self.clone(),
                    elements: basis,
                    targets: targets.to_vec(),
                    expansions: exp,
                };
                out.verify()?;
                return Ok(out);
            }
            if basis.len() < 2 {
                break; // rank 1 with a negative coefficient cannot happen
            }
            // replace the largest element by its remainder modulo the smallest
            let mut max_i = 0;
            let mut min_i = 0;
            for i in 1..basis.len() {
                if basis[i] > basis[max_i] {
                    max_i = i;
                }
                if basis[i] < basis[min_i] {
                    min_i = i;
                }
            }
            let q = basis[max_i].div_ref(&basis[min_i])?.floor();
            let r = basis[max_i].sub_ref(&basis[min_i].scale(&Rat::from(q)));
            debug_assert!(r.sign() > 0);
            basis[max_i] = r;
        }
        Err(Error::BudgetExceeded(format!(
            "independentize did not settle within {budget} rounds"
        )))
    }
}

/// A positive Z-independent subset of the lattice with stored expansions of
/// the targets it was built from.
#[derive(Clone, Debug)]
pub struct IndependentSet {
    lattice: Lattice,
    elements: Vec<GroundNum>,
    targets: Vec<GroundNum>,
    expansions: Vec<Vec<BigUint>>,
}

impl IndependentSet {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn elements(&self) -> &[GroundNum] {
        &self.elements
    }

    pub fn targets(&self) -> &[GroundNum] {
        &self.targets
    }

    pub fn expansions(&self) -> &[Vec<BigUint>] {
        &self.expansions
    }

    /// Nonnegative integer expansion of an arbitrary value over the set,
    /// solved through the rational coordinate system.
    pub fn expand(&self, x: &GroundNum) -> Result<Vec<BigUint>> {
        if x.field() != self.lattice.field() {
            return Err(Error::MixedContexts);
        }
        // solve sum_j c_j s_j = x over Q; independence makes it unique
        let deg = self.lattice.field().degree();
        let n = self.elements.len();
        let mut aug: Vec<Vec<Rat>> = Vec::with_capacity(deg);
        for row in 0..deg {
            let mut r: Vec<Rat> = self
                .elements
                .iter()
                .map(|s| s.coords()[row].clone())
                .collect();
            r.push(x.coords()[row].clone());
            aug.push(r);
        }
        let mut rank = 0usize;
        let mut pivot_cols = Vec::new();
        for col in 0..n {
            let Some(p) = (rank..deg).find(|&r| !aug[r][col].is_zero()) else {
                continue;
            };
            aug.swap(rank, p);
            let inv = Rat::one() / aug[rank][col].clone();
            for c in col..=n {
                aug[rank][c] = &aug[rank][c] * &inv;
            }
            for r in 0..deg {
                if r != rank && !aug[r][col].is_zero() {
                    let factor = aug[r][col].clone();
                    for c in col..=n {
                        let sub = &factor * &aug[rank][c];
                        aug[r][c] = &aug[r][c] - sub;
                    }
                }
            }
            pivot_cols.push(col);
            rank += 1;
        }
        for r in rank..deg {
            if !aug[r][n].is_zero() {
                return Err(Error::NotRepresentableOverS);
            }
        }
        let mut coeffs = vec![Rat::zero(); n];
        for (r, &col) in pivot_cols.iter().enumerate() {
            coeffs[col] = aug[r][n].clone();
        }
        let mut out = Vec::with_capacity(n);
        for c in coeffs {
            if !c.is_integer() || c.is_negative() {
                return Err(Error::NotRepresentableOverS);
            }
            out.push(c.to_integer().to_biguint().expect("nonnegative"));
        }
        // exact re-evaluation
        let mut acc = self.lattice.field().zero();
        for (c, s) in out.iter().zip(&self.elements) {
            acc = acc.add_ref(&s.scale(&Rat::from(BigInt::from(c.clone()))));
        }
        if &acc != x {
            return Err(Error::NotRepresentableOverS);
        }
        Ok(out)
    }

    fn verify(&self) -> Result<()> {
        let rows: Vec<Vec<Rat>> = self.elements.iter().map(|g| g.coords().to_vec()).collect();
        if rational_rank(rows) != self.elements.len() {
            return Err(Error::BudgetExceeded(
                "independent set verification failed: rank deficiency".into(),
            ));
        }
        for s in &self.elements {
            if s.sign() <= 0 {
                return Err(Error::BudgetExceeded(
                    "independent set verification failed: nonpositive element".into(),
                ));
            }
        }
        for (t, row) in self.targets.iter().zip(&self.expansions) {
            let mut acc = self.lattice.field().zero();
            for (c, s) in row.iter().zip(&self.elements) {
                acc = acc.add_ref(&s.scale(&Rat::from(BigInt::from(c.clone()))));
            }
            if &acc != t {
                return Err(Error::BudgetExceeded(
                    "independent set verification failed: expansion mismatch".into(),
                ));
            }
        }
        Ok(())
    }
}
