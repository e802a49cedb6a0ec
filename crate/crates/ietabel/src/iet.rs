//! The group of interval exchange transformations with breakpoints in a
//! lattice: canonical combinatorial descriptions, group arithmetic, the SAF
//! homomorphism, the signature into the skew-symmetric square, order
//! computation and the constructive decompositions.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::ground::{GroundNum, Rat};
use crate::lattice::Lattice;
use crate::regions::RectangleSet;
use crate::tensor2::{wedge, SW2};
use crate::{Error, Result};

/// Default round budget for the order decision's partition stabilization.
pub const ORDER_ROUNDS_BUDGET: usize = 10_000;
const ORDER_POINTS_CAP: usize = 100_000;

/// An interval exchange transformation in canonical combinatorial form:
/// breakpoints `0 = x_0 < ... < x_n = 1` in the lattice and the arrival rank
/// of each source interval.  No two adjacent intervals are mergeable.
#[derive(Clone, PartialEq, Eq)]
pub struct IetMap {
    lattice: Lattice,
    breaks: Vec<GroundNum>,
    tau: Vec<usize>,
}

impl IetMap {
    // -- construction ------------------------------------------------------

    pub fn identity(lattice: &Lattice) -> IetMap {
        IetMap {
            lattice: lattice.clone(),
            breaks: vec![lattice.zero(), lattice.one()],
            tau: vec![0],
        }
    }

    /// Build from interval lengths and the arrival rank of each interval
    /// (0-based).  Mergeable adjacent intervals are merged.
    pub fn from_description(
        lattice: &Lattice,
        alphas: &[GroundNum],
        tau: &[usize],
    ) -> Result<IetMap> {
        let n = alphas.len();
        if n == 0 || tau.len() != n {
            return Err(Error::OutOfRange(
                "description needs matching nonempty lengths and permutation".into(),
            ));
        }
        let mut seen = vec![false; n];
        for &t in tau {
            if t >= n || seen[t] {
                return Err(Error::OutOfRange("tau is not a permutation".into()));
            }
            seen[t] = true;
        }
        let mut sum = lattice.zero();
        for a in alphas {
            if a.sign() <= 0 {
                return Err(Error::OutOfRange("interval lengths must be positive".into()));
            }
            if !lattice.contains(a) {
                return Err(Error::NotInLattice);
            }
            sum = sum.add_ref(a);
        }
        if sum != lattice.one() {
            return Err(Error::OutOfRange("lengths must sum to 1".into()));
        }
        // arrival slot starts
        let mut inv = vec![0usize; n];
        for (i, &t) in tau.iter().enumerate() {
            inv[t] = i;
        }
        let mut astart = Vec::with_capacity(n);
        let mut acc = lattice.zero();
        for k in 0..n {
            astart.push(acc.clone());
            acc = acc.add_ref(&alphas[inv[k]]);
        }
        let mut pieces = Vec::with_capacity(n);
        let mut lo = lattice.zero();
        for i in 0..n {
            let hi = lo.add_ref(&alphas[i]);
            let t = astart[tau[i]].sub_ref(&lo);
            pieces.push((lo.clone(), hi.clone(), t));
            lo = hi;
        }
        Ok(IetMap::from_pieces(lattice.clone(), pieces))
    }

    /// Translation by `b` on `[offset, offset+a)` and by `-a` on
    /// `[offset+a, offset+a+b)`.
    pub fn restricted_rotation(
        lattice: &Lattice,
        a: &GroundNum,
        b: &GroundNum,
        offset: &GroundNum,
    ) -> Result<IetMap> {
        if a.sign() <= 0 || b.sign() <= 0 {
            return Err(Error::OutOfRange("rotation type must be positive".into()));
        }
        if offset.sign() < 0 {
            return Err(Error::OutOfRange("offset must be nonnegative".into()));
        }
        for v in [a, b, offset] {
            if !lattice.contains(v) {
                return Err(Error::NotInLattice);
            }
        }
        let end = offset.add_ref(a).add_ref(b);
        if end.sub_ref(&lattice.one()).sign() > 0 {
            return Err(Error::OutOfRange("rotation does not fit in [0,1)".into()));
        }
        let mut pieces = Vec::new();
        if offset.sign() > 0 {
            pieces.push((lattice.zero(), offset.clone(), lattice.zero()));
        }
        let mid = offset.add_ref(a);
        pieces.push((offset.clone(), mid.clone(), b.clone()));
        pieces.push((mid, end.clone(), a.neg_ref()));
        if end != lattice.one() {
            pieces.push((end, lattice.one(), lattice.zero()));
        }
        Ok(IetMap::from_pieces(lattice.clone(), pieces))
    }

    /// Swap of `[pos1, pos1+a)` and `[pos2, pos2+a)`.
    pub fn transposition(
        lattice: &Lattice,
        a: &GroundNum,
        pos1: &GroundNum,
        pos2: &GroundNum,
    ) -> Result<IetMap> {
        if a.sign() <= 0 {
            return Err(Error::OutOfRange("transposition type must be positive".into()));
        }
        for v in [a, pos1, pos2] {
            if !lattice.contains(v) {
                return Err(Error::NotInLattice);
            }
        }
        let (p, q) = if pos1 <= pos2 {
            (pos1.clone(), pos2.clone())
        } else {
            (pos2.clone(), pos1.clone())
        };
        if p.sign() < 0 {
            return Err(Error::OutOfRange("positions must be nonnegative".into()));
        }
        if p.add_ref(a).sub_ref(&q).sign() > 0 {
            return Err(Error::Overlap);
        }
        if q.add_ref(a).sub_ref(&lattice.one()).sign() > 0 {
            return Err(Error::OutOfRange("transposition does not fit in [0,1)".into()));
        }
        let shift = q.sub_ref(&p);
        let mut pieces = Vec::new();
        if p.sign() > 0 {
            pieces.push((lattice.zero(), p.clone(), lattice.zero()));
        }
        let p_hi = p.add_ref(a);
        pieces.push((p.clone(), p_hi.clone(), shift.clone()));
        if p_hi != q {
            pieces.push((p_hi, q.clone(), lattice.zero()));
        }
        let q_hi = q.add_ref(a);
        pieces.push((q.clone(), q_hi.clone(), shift.neg_ref()));
        if q_hi != lattice.one() {
            pieces.push((q_hi, lattice.one(), lattice.zero()));
        }
        Ok(IetMap::from_pieces(lattice.clone(), pieces))
    }

    /// Canonicalize a piece list `(lo, hi, translation)` tiling `[0, 1)`.
    pub(crate) fn from_pieces(
        lattice: Lattice,
        mut pieces: Vec<(GroundNum, GroundNum, GroundNum)>,
    ) -> IetMap {
        assert!(!pieces.is_empty());
        pieces.sort_by(|a, b| a.0.cmp(&b.0));
        assert!(pieces[0].0.is_zero(), "pieces must start at 0");
        assert!(
            pieces.last().unwrap().1 == lattice.one(),
            "pieces must end at 1"
        );
        for w in pieces.windows(2) {
            assert!(w[0].1 == w[1].0, "pieces must tile without gaps");
        }
        // merge adjacent pieces with equal translation
        let mut merged: Vec<(GroundNum, GroundNum, GroundNum)> = Vec::new();
        for p in pieces {
            if let Some(last) = merged.last_mut() {
                if last.2 == p.2 {
                    last.1 = p.1;
                    continue;
                }
            }
            merged.push(p);
        }
        // arrival ranks from sorted image starts
        let mut order: Vec<usize> = (0..merged.len()).collect();
        order.sort_by(|&i, &j| {
            merged[i]
                .0
                .add_ref(&merged[i].2)
                .cmp(&merged[j].0.add_ref(&merged[j].2))
        });
        let mut tau = vec![0usize; merged.len()];
        for (rank, &i) in order.iter().enumerate() {
            tau[i] = rank;
        }
        // images must tile [0,1)
        let mut acc = lattice.zero();
        for &i in &order {
            assert!(
                merged[i].0.add_ref(&merged[i].2) == acc,
                "images do not tile [0,1)"
            );
            acc = acc.add_ref(&merged[i].1.sub_ref(&merged[i].0));
        }
        assert!(acc == lattice.one());
        let mut breaks = Vec::with_capacity(merged.len() + 1);
        for p in &merged {
            breaks.push(p.0.clone());
        }
        breaks.push(lattice.one());
        IetMap {
            lattice,
            breaks,
            tau,
        }
    }

    // -- accessors ----------------------------------------------------------

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Number of intervals of the canonical (minimal) partition.
    pub fn interval_count(&self) -> usize {
        self.tau.len()
    }

    /// Canonical breakpoints `0 = x_0 < ... < x_n = 1`.
    pub fn breakpoints(&self) -> &[GroundNum] {
        &self.breaks
    }

    /// Arrival rank of each source interval (0-based).
    pub fn tau(&self) -> &[usize] {
        &self.tau
    }

    pub fn lengths(&self) -> Vec<GroundNum> {
        self.breaks
            .windows(2)
            .map(|w| w[1].sub_ref(&w[0]))
            .collect()
    }

    /// Start of each arrival slot, in arrival order.
    fn arrival_starts(&self) -> Vec<GroundNum> {
        let n = self.tau.len();
        let lengths = self.lengths();
        let mut inv = vec![0usize; n];
        for (i, &t) in self.tau.iter().enumerate() {
            inv[t] = i;
        }
        let mut out = Vec::with_capacity(n);
        let mut acc = self.lattice.zero();
        for k in 0..n {
            out.push(acc.clone());
            acc = acc.add_ref(&lengths[inv[k]]);
        }
        out
    }

    /// Translation value on each source interval.
    pub fn translations(&self) -> Vec<GroundNum> {
        let astart = self.arrival_starts();
        (0..self.tau.len())
            .map(|i| astart[self.tau[i]].sub_ref(&self.breaks[i]))
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.tau.len() == 1
    }

    /// Lebesgue measure of the support.
    pub fn support_measure(&self) -> GroundNum {
        let lengths = self.lengths();
        let trans = self.translations();
        let mut acc = self.lattice.zero();
        for (len, t) in lengths.iter().zip(&trans) {
            if !t.is_zero() {
                acc = acc.add_ref(len);
            }
        }
        acc
    }

    // -- group structure ----------------------------------------------------

    fn piece_index(&self, x: &GroundNum) -> usize {
        // largest i with breaks[i] <= x (x in [0,1))
        let mut lo = 0usize;
        let mut hi = self.tau.len(); // breaks has n+1 entries
        while lo + 1 < hi {
            let mid = (lo + hi) / 2;
            if self.breaks[mid].sub_ref(x).sign() <= 0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Exact image of a point of `[0, 1)`.
    pub fn apply(&self, x: &GroundNum) -> Result<GroundNum> {
        if x.sign() < 0 || x.sub_ref(&self.lattice.one()).sign() >= 0 {
            return Err(Error::OutOfRange("point must lie in [0,1)".into()));
        }
        let i = self.piece_index(x);
        Ok(x.add_ref(&self.translations()[i]))
    }

    /// Preimage of a point of `[0, 1)`.
    pub fn apply_inverse(&self, y: &GroundNum) -> Result<GroundNum> {
        self.inverse().apply(y)
    }

    /// `self` after `g` (function composition `self ∘ g`).
    pub fn compose(&self, g: &IetMap) -> Result<IetMap> {
        if self.lattice != g.lattice {
            return Err(Error::MixedContexts);
        }
        let g_trans = g.translations();
        let f_trans = self.translations();
        // cut points: g's breakpoints plus pullbacks of f's interior breakpoints
        let mut cuts: Vec<GroundNum> = g.breaks.clone();
        let g_inv = g.inverse();
        for b in &self.breaks[1..self.breaks.len() - 1] {
            cuts.push(g_inv.apply(b)?);
        }
        cuts.sort();
        cuts.dedup();
        let mut pieces = Vec::with_capacity(cuts.len() - 1);
        for w in cuts.windows(2) {
            let (p, q) = (&w[0], &w[1]);
            let tg = &g_trans[g.piece_index(p)];
            let y = p.add_ref(tg);
            let tf = &f_trans[self.piece_index(&y)];
            pieces.push((p.clone(), q.clone(), tg.add_ref(tf)));
        }
        Ok(IetMap::from_pieces(self.lattice.clone(), pieces))
    }

    pub fn inverse(&self) -> IetMap {
        let lengths = self.lengths();
        let trans = self.translations();
        let astart = self.arrival_starts();
        let mut pieces = Vec::with_capacity(self.tau.len());
        for i in 0..self.tau.len() {
            let lo = astart[self.tau[i]].clone();
            let hi = lo.add_ref(&lengths[i]);
            pieces.push((lo, hi, trans[i].neg_ref()));
        }
        IetMap::from_pieces(self.lattice.clone(), pieces)
    }

    /// `self` to the power `k` (binary exponentiation; `k` may be negative).
    pub fn pow(&self, k: i64) -> Result<IetMap> {
        if k < 0 {
            return self.inverse().pow(-k);
        }
        let mut acc = IetMap::identity(&self.lattice);
        let mut base = self.clone();
        let mut k = k as u64;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.compose(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.compose(&base)?;
            }
        }
        Ok(acc)
    }

    // -- invariants ----------------------------------------------------------

    /// SAF homomorphism value.
    pub fn saf(&self) -> SW2 {
        saf_from_description(&self.lattice, &self.lengths(), &self.tau)
            .expect("canonical description is valid")
    }

    /// Signature value (closed inversion-count formula).
    pub fn signature(&self) -> SW2 {
        signature_from_description(&self.lattice, &self.lengths(), &self.tau)
            .expect("canonical description is valid")
    }

    /// The inversion set as a union of source-partition rectangles.
    pub fn inversion_rectangles(&self) -> RectangleSet {
        let n = self.tau.len();
        let mut rects = Vec::new();
        for j in 0..n {
            for i in 0..j {
                if self.tau[i] > self.tau[j] {
                    rects.push((
                        (self.breaks[i].clone(), self.breaks[i + 1].clone()),
                        (self.breaks[j].clone(), self.breaks[j + 1].clone()),
                    ));
                }
            }
        }
        RectangleSet::from_rects(&self.lattice, rects).expect("breakpoints are lattice points")
    }

    /// Signature recomputed through the region measure (independent route).
    pub fn signature_via_rectangles(&self) -> SW2 {
        self.inversion_rectangles().measure_t2().project()
    }

    pub fn in_ker_saf(&self) -> bool {
        self.saf().is_zero()
    }

    /// Membership in the derived subgroup (kernel of the signature).
    pub fn in_derived(&self) -> bool {
        self.signature().is_zero()
    }

    // -- order ---------------------------------------------------------------

    pub fn order(&self) -> Result<Order> {
        self.order_with_budget(ORDER_ROUNDS_BUDGET)
    }

    /// Decide the order.  The structural `Infinite` verdict comes from the
    /// exterior part of the signature; otherwise the breakpoint set is
    /// saturated under the action until it stabilizes, which must happen for
    /// finite-order elements.
    pub fn order_with_budget(&self, budget: usize) -> Result<Order> {
        if self.is_identity() {
            return Ok(Order::Finite(1));
        }
        // f^n = id forces the exterior (torsion-free) part of the signature
        // to vanish
        if !self.signature().to_exterior().is_zero() {
            return Ok(Order::Infinite);
        }
        let mut points: Vec<GroundNum> = self.breaks.clone();
        let trans = self.translations();
        let lengths = self.lengths();
        let _ = lengths;
        let mut rounds = 0usize;
        loop {
            rounds += 1;
            if rounds > budget || points.len() > ORDER_POINTS_CAP {
                return Err(Error::BudgetExceeded(format!(
                    "order stabilization did not settle ({} points after {} rounds)",
                    points.len(),
                    rounds - 1
                )));
            }
            let mut new_points: Vec<GroundNum> = Vec::new();
            for w in points.windows(2) {
                let i = self.piece_index(&w[0]);
                let y_lo = w[0].add_ref(&trans[i]);
                let y_hi = w[1].add_ref(&trans[i]);
                new_points.push(y_lo);
                new_points.push(y_hi);
            }
            let before = points.len();
            points.extend(new_points);
            points.sort();
            points.dedup();
            if points.len() == before {
                break;
            }
        }
        // f permutes the stabilized partition; read off the permutation
        let n = points.len() - 1;
        let mut perm = vec![usize::MAX; n];
        for i in 0..n {
            let j = self.piece_index(&points[i]);
            let y = points[i].add_ref(&trans[j]);
            let k = points.binary_search(&y).expect("stabilized set is closed");
            debug_assert!({
                let y_hi = points[i + 1].add_ref(&trans[j]);
                points[k + 1] == y_hi
            });
            perm[i] = k;
        }
        let mut seen = vec![false; n];
        let mut order: u128 = 1;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0u128;
            let mut cur = start;
            while !seen[cur] {
                seen[cur] = true;
                cur = perm[cur];
                len += 1;
            }
            order = lcm_u128(order, len);
        }
        let order_u64 = order.to_u64().ok_or_else(|| {
            Error::BudgetExceeded("order exceeds u64 range".into())
        })?;
        // verify by fast exponentiation
        let p = self.pow(order_u64 as i64)?;
        assert!(p.is_identity(), "computed order failed verification");
        Ok(Order::Finite(order_u64))
    }
}

fn lcm_u128(a: u128, b: u128) -> u128 {
    fn gcd(mut a: u128, mut b: u128) -> u128 {
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }
    a / gcd(a, b) * b
}

/// Order of a transformation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Finite(u64),
    Infinite,
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(n) => write!(f, "{n}"),
            Order::Infinite => write!(f, "infinite"),
        }
    }
}

impl fmt::Debug for IetMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IetMap(n={}, tau={:?})", self.tau.len(), self.tau)
    }
}

// ---------------------------------------------------------------------------
// invariants from an arbitrary combinatorial description

/// SAF value of the description `(alphas, tau)`:
/// `sum_j (sum_{tau(i) < tau(j)} alpha_i - sum_{i < j} alpha_i) /\ alpha_j`.
pub fn saf_from_description(
    lattice: &Lattice,
    alphas: &[GroundNum],
    tau: &[usize],
) -> Result<SW2> {
    let n = alphas.len();
    let mut acc = SW2::zero(lattice);
    for j in 0..n {
        let mut v = lattice.zero();
        for i in 0..n {
            if tau[i] < tau[j] {
                v = v.add_ref(&alphas[i]);
            }
        }
        for alpha in alphas.iter().take(j) {
            v = v.sub_ref(alpha);
        }
        if !v.is_zero() {
            acc = acc.add(&wedge(lattice, &v, &alphas[j])?);
        }
    }
    Ok(acc)
}

/// Signature of the description: `sum_{i<j, tau(i)>tau(j)} alpha_i /\ alpha_j`.
pub fn signature_from_description(
    lattice: &Lattice,
    alphas: &[GroundNum],
    tau: &[usize],
) -> Result<SW2> {
    let n = alphas.len();
    let mut acc = SW2::zero(lattice);
    for j in 0..n {
        for i in 0..j {
            if tau[i] > tau[j] {
                acc = acc.add(&wedge(lattice, &alphas[i], &alphas[j])?);
            }
        }
    }
    Ok(acc)
}

/// Product `fs[0] ∘ fs[1] ∘ ... ∘ fs[k-1]` (the last factor acts first);
/// identity for an empty list.
pub fn compose_all(lattice: &Lattice, fs: &[IetMap]) -> Result<IetMap> {
    let mut acc = IetMap::identity(lattice);
    for f in fs.iter().rev() {
        acc = f.compose(&acc)?;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// restricted rotations as typed factors

/// A restricted rotation of type `(a, b)` acting at `offset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rotation {
    pub offset: GroundNum,
    pub a: GroundNum,
    pub b: GroundNum,
}

impl Rotation {
    pub fn to_map(&self, lattice: &Lattice) -> Result<IetMap> {
        IetMap::restricted_rotation(lattice, &self.a, &self.b, &self.offset)
    }

    pub fn type_pair(&self) -> (GroundNum, GroundNum) {
        (self.a.clone(), self.b.clone())
    }
}

/// Is the tuple balanced, i.e. does type `(a, b)` occur as often as `(b, a)`
/// for every pair?
pub fn is_balanced(rotations: &[Rotation]) -> bool {
    let mut counts: BTreeMap<(Vec<Rat>, Vec<Rat>), i64> = BTreeMap::new();
    for r in rotations {
        let a = r.a.coords().to_vec();
        let b = r.b.coords().to_vec();
        if a == b {
            continue; // (a,a) is self-balanced
        }
        *counts.entry((a.clone(), b.clone())).or_insert(0) += 1;
        *counts.entry((b, a)).or_insert(0) -= 1;
    }
    counts.values().all(|&c| c == 0)
}

/// Validate that `part` is an associated partition of `f`: lattice
/// breakpoints from 0 to 1 refining the canonical partition.
fn validate_partition(f: &IetMap, part: &[GroundNum]) -> Result<()> {
    if part.len() < 2 || !part[0].is_zero() || part.last().unwrap() != &f.lattice.one() {
        return Err(Error::NotAssociated);
    }
    for w in part.windows(2) {
        if w[0].sub_ref(&w[1]).sign() >= 0 {
            return Err(Error::NotAssociated);
        }
    }
    for p in part {
        if !f.lattice.contains(p) {
            return Err(Error::NotInLattice);
        }
    }
    for b in &f.breaks {
        if !part.contains(b) {
            return Err(Error::NotAssociated);
        }
    }
    Ok(())
}

/// Decompose `f` into restricted rotations whose types are pairs of interval
/// lengths of the given associated partition (selection sort by adjacent
/// block swaps).  The factors multiply to `f` in `compose_all` order.
pub fn decompose_rotations(f: &IetMap, part: &[GroundNum]) -> Result<Vec<Rotation>> {
    validate_partition(f, part)?;
    let lattice = f.lattice.clone();
    let n = part.len() - 1;
    let lengths: Vec<GroundNum> = part.windows(2).map(|w| w[1].sub_ref(&w[0])).collect();
    // arrival order of the blocks
    let image_start: Vec<GroundNum> = (0..n)
        .map(|i| f.apply(&part[i]).expect("partition point in [0,1)"))
        .collect();
    let mut target: Vec<usize> = (0..n).collect();
    target.sort_by(|&i, &j| image_start[i].cmp(&image_start[j]));
    // selection sort of the block arrangement
    let mut arr: Vec<usize> = (0..n).collect();
    let mut chronological: Vec<Rotation> = Vec::new();
    for k in 0..n {
        let j = (k..n)
            .find(|&j| arr[j] == target[k])
            .expect("target block is still to the right");
        for pos in (k + 1..=j).rev() {
            // swap blocks at positions pos-1, pos
            let mut offset = lattice.zero();
            for &blk in arr.iter().take(pos - 1) {
                offset = offset.add_ref(&lengths[blk]);
            }
            let a = lengths[arr[pos - 1]].clone();
            let b = lengths[arr[pos]].clone();
            chronological.push(Rotation {
                offset,
                a,
                b,
            });
            arr.swap(pos - 1, pos);
        }
    }
    // product order: first applied last
    chronological.reverse();
    let maps: Vec<IetMap> = chronological
        .iter()
        .map(|r| r.to_map(&lattice))
        .collect::<Result<_>>()?;
    let recomposed = compose_all(&lattice, &maps)?;
    assert!(recomposed == *f, "rotation decomposition failed to recompose");
    Ok(chronological)
}

/// Balanced decomposition of an element of the SAF kernel: refine the
/// canonical partition through a positive independent set of its lengths,
/// then decompose into rotations; the counts balance automatically and are
/// verified.
pub fn decompose_balanced(f: &IetMap) -> Result<Vec<Rotation>> {
    if !f.in_ker_saf() {
        return Err(Error::NotInSafKernel);
    }
    if f.is_identity() {
        return Ok(Vec::new());
    }
    let lattice = f.lattice.clone();
    let mut distinct: Vec<GroundNum> = f.lengths();
    distinct.sort();
    distinct.dedup();
    let indep = lattice.independentize(&distinct)?;
    // refine each canonical interval following its expansion
    let mut part: Vec<GroundNum> = vec![lattice.zero()];
    let lengths = f.lengths();
    for (i, len) in lengths.iter().enumerate() {
        let row = distinct
            .iter()
            .position(|d| d == len)
            .expect("length is among the distinct lengths");
        let expansion = &indep.expansions()[row];
        let mut cursor = f.breaks[i].clone();
        for (s, count) in indep.elements().iter().zip(expansion) {
            let mut c = count.clone();
            while !c.is_zero() {
                cursor = cursor.add_ref(s);
                part.push(cursor.clone());
                c -= 1u32;
            }
        }
        debug_assert!(cursor == f.breaks[i + 1]);
        // the cut hits the right endpoint exactly; avoid duplicates
        part.dedup();
    }
    let rotations = decompose_rotations(f, &part)?;
    assert!(is_balanced(&rotations), "balanced decomposition unbalanced");
    Ok(rotations)
}

/// Factor `f` into rotations of type `(a, b)` with `a + b <= eps` and
/// transpositions of type `a` with `2a <= eps`.
pub fn decompose_small(f: &IetMap, eps: &GroundNum) -> Result<Vec<IetMap>> {
    if eps.sign() <= 0 {
        return Err(Error::OutOfRange("eps must be positive".into()));
    }
    if !f.lattice.is_dense() {
        return Err(Error::NotDense);
    }
    if f.is_identity() {
        return Ok(Vec::new());
    }
    let lattice = f.lattice.clone();
    let w = lattice.small_positive(&eps.scale(&Rat::new(BigInt::one(), BigInt::from(2))))?;

    enum Move {
        Rot(Rotation),
        Transp {
            a: GroundNum,
            p: GroundNum,
            q: GroundNum,
        },
    }

    // phase 1: rotations, peeled until small
    let rotations = decompose_rotations(f, &f.breaks)?;
    let mut moves: Vec<Move> = Vec::new();
    for r in rotations {
        let mut lefts: Vec<Move> = Vec::new();
        let mut rights_rev: Vec<Move> = Vec::new();
        let mut a = r.a.clone();
        let mut b = r.b.clone();
        let x = r.offset.clone();
        loop {
            match a.cmp(&b) {
                std::cmp::Ordering::Equal => {
                    // rotation of type (a,a) is the adjacent transposition
                    lefts.push(Move::Transp {
                        a: a.clone(),
                        p: x.clone(),
                        q: x.add_ref(&a),
                    });
                    break;
                }
                _ if a.add_ref(&b).sub_ref(eps).sign() <= 0 => {
                    lefts.push(Move::Rot(Rotation {
                        offset: x.clone(),
                        a: a.clone(),
                        b: b.clone(),
                    }));
                    break;
                }
                std::cmp::Ordering::Greater => {
                    // rot(a,b) = transp_b([x,x+b) <-> [x+a,x+a+b)) ∘ rot(a-b,b)
                    lefts.push(Move::Transp {
                        a: b.clone(),
                        p: x.clone(),
                        q: x.add_ref(&a),
                    });
                    a = a.sub_ref(&b);
                }
                std::cmp::Ordering::Less => {
                    // rot(a,b) = rot(a,b-a) ∘ transp_a([x,x+a) <-> [x+b,x+a+b))
                    rights_rev.push(Move::Transp {
                        a: a.clone(),
                        p: x.clone(),
                        q: x.add_ref(&b),
                    });
                    b = b.sub_ref(&a);
                }
            }
        }
        moves.extend(lefts);
        moves.extend(rights_rev.into_iter().rev());
    }
    // phase 2: chunk oversized transpositions by w
    let mut out: Vec<IetMap> = Vec::new();
    let two = Rat::from(BigInt::from(2));
    for mv in moves {
        match mv {
            Move::Rot(r) => out.push(r.to_map(&lattice)?),
            Move::Transp { a, p, q } => {
                if a.scale(&two).sub_ref(eps).sign() <= 0 {
                    out.push(IetMap::transposition(&lattice, &a, &p, &q)?);
                } else {
                    let k = a.div_ref(&w)?.floor();
                    let u = a.sub_ref(&w.scale(&Rat::from(k.clone())));
                    let k = k.to_u64().expect("desk-scale chunk count");
                    let mut off = lattice.zero();
                    for _ in 0..k {
                        out.push(IetMap::transposition(
                            &lattice,
                            &w,
                            &p.add_ref(&off),
                            &q.add_ref(&off),
                        )?);
                        off = off.add_ref(&w);
                    }
                    if !u.is_zero() {
                        out.push(IetMap::transposition(
                            &lattice,
                            &u,
                            &p.add_ref(&off),
                            &q.add_ref(&off),
                        )?);
                    }
                }
            }
        }
    }
    let recomposed = compose_all(&lattice, &out)?;
    assert!(recomposed == *f, "small-support decomposition failed to recompose");
    Ok(out)
}

/// Structural classification of a canonical map as a single rotation or
/// transposition, if it is one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SmallKind {
    Rotation(GroundNum, GroundNum),
    Transposition(GroundNum),
}

pub fn small_factor_kind(f: &IetMap) -> Option<SmallKind> {
    let lengths = f.lengths();
    let trans = f.translations();
    let moved: Vec<usize> = (0..f.tau.len()).filter(|&i| !trans[i].is_zero()).collect();
    if moved.len() != 2 {
        return None;
    }
    let (i, j) = (moved[0], moved[1]);
    // blocks must swap: i goes where j was, j goes where i was
    let adjacent = f.breaks[i + 1] == f.breaks[j];
    if adjacent {
        // rotation of type (len_i, len_j) if translations match
        if trans[i] == lengths[j] && trans[j] == lengths[i].neg_ref() {
            return Some(SmallKind::Rotation(lengths[i].clone(), lengths[j].clone()));
        }
        None
    } else {
        // disjoint equal-length swap
        let shift = f.breaks[j].sub_ref(&f.breaks[i]);
        if lengths[i] == lengths[j] && trans[i] == shift && trans[j] == shift.neg_ref() {
            return Some(SmallKind::Transposition(lengths[i].clone()));
        }
        None
    }
}

/// The explicit pair of transpositions whose product has the requested order
/// (identity counts as a transposition for order 1 and 2).
pub fn two_transposition_example(lattice: &Lattice, n: u64) -> Result<(IetMap, IetMap)> {
    if n == 0 {
        return Err(Error::OutOfRange("order must be at least 1".into()));
    }
    let small_in = |slots: u64| -> Result<GroundNum> {
        let bound = lattice
            .field()
            .rational(Rat::new(BigInt::one(), BigInt::from(slots)));
        if lattice.is_dense() {
            lattice.small_positive(&bound)
        } else {
            // rank-1 lattice with basis 1/q
            let b = &lattice.basis()[0];
            let k = bound.div_ref(b)?.floor();
            if k < BigInt::one() {
                return Err(Error::NotRepresentable(format!(
                    "no lattice length below 1/{slots}"
                )));
            }
            Ok(b.scale(&Rat::from(k)))
        }
    };
    let at = |w: &GroundNum, k: u64| w.scale(&Rat::from(BigInt::from(k)));
    if n == 1 {
        let w = small_in(2)?;
        let t = IetMap::transposition(lattice, &w, &lattice.zero(), &w)?;
        return Ok((t.clone(), t));
    }
    if n % 2 == 0 {
        let m = n / 2;
        let w = small_in(2 * m)?;
        let g = IetMap::transposition(lattice, &at(&w, m), &lattice.zero(), &at(&w, m))?;
        let f = if m == 1 {
            IetMap::identity(lattice)
        } else {
            IetMap::transposition(lattice, &at(&w, m - 1), &lattice.zero(), &at(&w, m + 1))?
        };
        Ok((f, g))
    } else {
        let m = (n + 1) / 2; // n = 2m - 1, m >= 2
        let w = small_in(2 * m + 1)?;
        let f = IetMap::transposition(lattice, &at(&w, m - 1), &at(&w, 1), &at(&w, m + 2))?;
        let g = IetMap::transposition(lattice, &at(&w, m - 1), &at(&w, 1), &at(&w, m + 1))?;
        Ok((f, g))
    }
}
