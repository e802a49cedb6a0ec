//! Interval exchanges with flips, taken modulo finitely supported
//! permutations: signed combinatorial descriptions, the flip signature into
//! the mod-2 tensor square, positive substitutes, and the positive
//! contribution valued in the mod-2 skew-symmetric square.
//!
//! All semantics are on open intervals; endpoint images are never
//! represented, which realizes the quotient by finitely supported
//! permutations without any bookkeeping.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::ground::GroundNum;
use crate::iet::{IetMap, Order};
use crate::lattice::{IndependentSet, Lattice};
use crate::regions::RectangleSet;
use crate::tensor2::{tensor, wedge, SW2Mod2, T2, T2Mod2};
use crate::{Error, Result};

/// Default budget for the brute-force part of the order computation.
pub const FLIP_ORDER_ITER_BUDGET: u64 = 512;

/// One maximal piece of a flip map: `[src_lo, src_hi)` carried onto
/// `[img_lo, img_hi)`, order reversed iff `flipped`.
#[derive(Clone)]
pub(crate) struct Piece {
    pub(crate) src_lo: GroundNum,
    pub(crate) src_hi: GroundNum,
    pub(crate) img_lo: GroundNum,
    pub(crate) img_hi: GroundNum,
    pub(crate) flipped: bool,
}

impl Piece {
    /// Setwise image of a subinterval `[lo, hi)` of the piece.
    pub(crate) fn map_interval(&self, lo: &GroundNum, hi: &GroundNum) -> (GroundNum, GroundNum) {
        if self.flipped {
            let c = self.img_hi.add_ref(&self.src_lo);
            (c.sub_ref(hi), c.sub_ref(lo))
        } else {
            let t = self.img_lo.sub_ref(&self.src_lo);
            (lo.add_ref(&t), hi.add_ref(&t))
        }
    }
}

/// An interval exchange with flips in canonical combinatorial form.
#[derive(Clone, PartialEq, Eq)]
pub struct FlipMap {
    lattice: Lattice,
    breaks: Vec<GroundNum>,
    tau: Vec<usize>,
    signs: Vec<bool>, // true = order-reversing on that interval
}

impl FlipMap {
    pub fn identity(lattice: &Lattice) -> FlipMap {
        embed(&IetMap::identity(lattice))
    }

    /// The reflection reversing `[lo, hi)` and fixing the rest.
    pub fn reflection(lattice: &Lattice, lo: &GroundNum, hi: &GroundNum) -> Result<FlipMap> {
        for v in [lo, hi] {
            if !lattice.contains(v) {
                return Err(Error::NotInLattice);
            }
        }
        if lo.sign() < 0
            || lo.sub_ref(hi).sign() >= 0
            || hi.sub_ref(&lattice.one()).sign() > 0
        {
            return Err(Error::OutOfRange("reflection needs 0 <= lo < hi <= 1".into()));
        }
        let mut pieces = Vec::new();
        if lo.sign() > 0 {
            pieces.push(Piece {
                src_lo: lattice.zero(),
                src_hi: lo.clone(),
                img_lo: lattice.zero(),
                img_hi: lo.clone(),
                flipped: false,
            });
        }
        pieces.push(Piece {
            src_lo: lo.clone(),
            src_hi: hi.clone(),
            img_lo: lo.clone(),
            img_hi: hi.clone(),
            flipped: true,
        });
        if hi != &lattice.one() {
            pieces.push(Piece {
                src_lo: hi.clone(),
                src_hi: lattice.one(),
                img_lo: hi.clone(),
                img_hi: lattice.one(),
                flipped: false,
            });
        }
        Ok(FlipMap::from_piece_list(lattice.clone(), pieces))
    }

    /// Signed combinatorial description: lengths, arrival ranks, flip flags.
    pub fn from_description(
        lattice: &Lattice,
        alphas: &[GroundNum],
        tau: &[usize],
        signs: &[bool],
    ) -> Result<FlipMap> {
        if signs.len() != alphas.len() {
            return Err(Error::OutOfRange("one sign per interval required".into()));
        }
        // validate lengths/permutation through the positive constructor
        IetMap::from_description(lattice, alphas, tau)?;
        let n = alphas.len();
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
            pieces.push(Piece {
                src_lo: lo.clone(),
                src_hi: hi.clone(),
                img_lo: astart[tau[i]].clone(),
                img_hi: astart[tau[i]].add_ref(&alphas[i]),
                flipped: signs[i],
            });
            lo = hi;
        }
        Ok(FlipMap::from_piece_list(lattice.clone(), pieces))
    }

    pub(crate) fn from_piece_list(lattice: Lattice, mut pieces: Vec<Piece>) -> FlipMap {
        assert!(!pieces.is_empty());
        pieces.sort_by(|a, b| a.src_lo.cmp(&b.src_lo));
        assert!(pieces[0].src_lo.is_zero());
        assert!(pieces.last().unwrap().src_hi == lattice.one());
        for w in pieces.windows(2) {
            assert!(w[0].src_hi == w[1].src_lo, "pieces must tile");
        }
        // canonical merge: equal orientation and contiguous images
        let mut merged: Vec<Piece> = Vec::new();
        for p in pieces {
            if let Some(last) = merged.last_mut() {
                let mergeable = if !last.flipped && !p.flipped {
                    last.img_hi == p.img_lo
                } else if last.flipped && p.flipped {
                    last.img_lo == p.img_hi
                } else {
                    false
                };
                if mergeable {
                    last.src_hi = p.src_hi;
                    if last.flipped {
                        last.img_lo = p.img_lo;
                    } else {
                        last.img_hi = p.img_hi;
                    }
                    continue;
                }
            }
            merged.push(p);
        }
        // arrival ranks by image start
        let mut order: Vec<usize> = (0..merged.len()).collect();
        order.sort_by(|&i, &j| merged[i].img_lo.cmp(&merged[j].img_lo));
        let mut tau = vec![0usize; merged.len()];
        let mut acc = lattice.zero();
        for (rank, &i) in order.iter().enumerate() {
            tau[i] = rank;
            assert!(merged[i].img_lo == acc, "images do not tile [0,1)");
            acc = merged[i].img_hi.clone();
        }
        assert!(acc == lattice.one());
        let mut breaks: Vec<GroundNum> = merged.iter().map(|p| p.src_lo.clone()).collect();
        breaks.push(lattice.one());
        let signs = merged.iter().map(|p| p.flipped).collect();
        FlipMap {
            lattice,
            breaks,
            tau,
            signs,
        }
    }

    // -- accessors -----------------------------------------------------------

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn interval_count(&self) -> usize {
        self.tau.len()
    }

    pub fn breakpoints(&self) -> &[GroundNum] {
        &self.breaks
    }

    pub fn tau(&self) -> &[usize] {
        &self.tau
    }

    pub fn signs(&self) -> &[bool] {
        &self.signs
    }

    pub fn lengths(&self) -> Vec<GroundNum> {
        self.breaks
            .windows(2)
            .map(|w| w[1].sub_ref(&w[0]))
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.tau.len() == 1 && !self.signs[0]
    }

    pub fn is_orientation_preserving(&self) -> bool {
        self.signs.iter().all(|&s| !s)
    }

    /// Total length of the order-reversed intervals.
    pub fn total_flipped_length(&self) -> GroundNum {
        let lengths = self.lengths();
        let mut acc = self.lattice.zero();
        for (len, &s) in lengths.iter().zip(&self.signs) {
            if s {
                acc = acc.add_ref(len);
            }
        }
        acc
    }

    pub(crate) fn pieces(&self) -> Vec<Piece> {
        let n = self.tau.len();
        let lengths = self.lengths();
        let mut inv = vec![0usize; n];
        for (i, &t) in self.tau.iter().enumerate() {
            inv[t] = i;
        }
        let mut astart = Vec::with_capacity(n);
        let mut acc = self.lattice.zero();
        for k in 0..n {
            astart.push(acc.clone());
            acc = acc.add_ref(&lengths[inv[k]]);
        }
        (0..n)
            .map(|i| Piece {
                src_lo: self.breaks[i].clone(),
                src_hi: self.breaks[i + 1].clone(),
                img_lo: astart[self.tau[i]].clone(),
                img_hi: astart[self.tau[i]].add_ref(&lengths[i]),
                flipped: self.signs[i],
            })
            .collect()
    }

    fn piece_index(&self, x: &GroundNum) -> usize {
        let mut lo = 0usize;
        let mut hi = self.tau.len();
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

    // -- group structure -----------------------------------------------------

    /// `self ∘ g`.
    pub fn compose(&self, g: &FlipMap) -> Result<FlipMap> {
        if self.lattice != g.lattice {
            return Err(Error::MixedContexts);
        }
        let g_pieces = g.pieces();
        let f_pieces = self.pieces();
        // cut points: g's breaks plus preimages of f's interior breaks
        let mut cuts: Vec<GroundNum> = g.breaks.clone();
        for b in &self.breaks[1..self.breaks.len() - 1] {
            let gp = g_pieces
                .iter()
                .find(|p| p.img_lo.sub_ref(b).sign() <= 0 && b.sub_ref(&p.img_hi).sign() < 0)
                .expect("images tile [0,1)");
            let pre = if gp.flipped {
                gp.img_hi.add_ref(&gp.src_lo).sub_ref(b)
            } else {
                b.sub_ref(&gp.img_lo.sub_ref(&gp.src_lo))
            };
            cuts.push(pre);
        }
        cuts.sort();
        cuts.dedup();
        let mut out = Vec::with_capacity(cuts.len() - 1);
        for w in cuts.windows(2) {
            let (p, q) = (&w[0], &w[1]);
            let gp = &g_pieces[g.piece_index(p)];
            let (gl, gh) = gp.map_interval(p, q);
            let fp = &f_pieces[self.piece_index(&gl)];
            let (il, ih) = fp.map_interval(&gl, &gh);
            out.push(Piece {
                src_lo: p.clone(),
                src_hi: q.clone(),
                img_lo: il,
                img_hi: ih,
                flipped: gp.flipped ^ fp.flipped,
            });
        }
        Ok(FlipMap::from_piece_list(self.lattice.clone(), out))
    }

    pub fn inverse(&self) -> FlipMap {
        let pieces = self
            .pieces()
            .into_iter()
            .map(|p| Piece {
                src_lo: p.img_lo,
                src_hi: p.img_hi,
                img_lo: p.src_lo,
                img_hi: p.src_hi,
                flipped: p.flipped,
            })
            .collect();
        FlipMap::from_piece_list(self.lattice.clone(), pieces)
    }

    pub fn pow(&self, k: i64) -> Result<FlipMap> {
        if k < 0 {
            return self.inverse().pow(-k);
        }
        let mut acc = FlipMap::identity(&self.lattice);
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

    /// Recover the orientation-preserving map, failing if any interval is
    /// reversed.
    pub fn try_unflip(&self) -> Result<IetMap> {
        if !self.is_orientation_preserving() {
            return Err(Error::NotOrientationPreserving);
        }
        let pieces = self
            .pieces()
            .into_iter()
            .map(|p| {
                let t = p.img_lo.sub_ref(&p.src_lo);
                (p.src_lo, p.src_hi, t)
            })
            .collect();
        Ok(IetMap::from_pieces(self.lattice.clone(), pieces))
    }

    // -- invariants ----------------------------------------------------------

    /// Flip signature: measure of the symmetric inversion set, mod 2.
    pub fn eps_flip(&self) -> T2Mod2 {
        let lengths = self.lengths();
        let n = self.tau.len();
        let mut acc = T2::zero(&self.lattice);
        for j in 0..n {
            for i in 0..j {
                if self.tau[i] > self.tau[j] {
                    let t1 = tensor(&self.lattice, &lengths[i], &lengths[j])
                        .expect("lengths are lattice points");
                    let t2 = tensor(&self.lattice, &lengths[j], &lengths[i])
                        .expect("lengths are lattice points");
                    acc = acc.add(&t1).add(&t2);
                }
            }
        }
        for i in 0..n {
            if self.signs[i] {
                let t = tensor(&self.lattice, &lengths[i], &lengths[i])
                    .expect("lengths are lattice points");
                acc = acc.add(&t);
            }
        }
        acc.mod2()
    }

    /// The symmetric inversion set as a rectangle set (full squares over the
    /// flipped intervals; the diagonal is measure zero).
    pub fn inversion_rectangles(&self) -> RectangleSet {
        let n = self.tau.len();
        let mut rects = Vec::new();
        let iv = |i: usize| (self.breaks[i].clone(), self.breaks[i + 1].clone());
        for j in 0..n {
            for i in 0..j {
                if self.tau[i] > self.tau[j] {
                    rects.push((iv(i), iv(j)));
                    rects.push((iv(j), iv(i)));
                }
            }
        }
        for i in 0..n {
            if self.signs[i] {
                rects.push((iv(i), iv(i)));
            }
        }
        RectangleSet::from_rects(&self.lattice, rects).expect("breakpoints are lattice points")
    }

    /// Flip signature recomputed through the region measure.
    pub fn eps_flip_via_rectangles(&self) -> T2Mod2 {
        self.inversion_rectangles().measure_t2().mod2()
    }
}

impl fmt::Debug for FlipMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let signs: String = self.signs.iter().map(|&s| if s { '-' } else { '+' }).collect();
        write!(f, "FlipMap(n={}, tau={:?}, signs={})", self.tau.len(), self.tau, signs)
    }
}

/// Embed an orientation-preserving exchange.
pub fn embed(f: &IetMap) -> FlipMap {
    let lengths = f.lengths();
    let trans = f.translations();
    let pieces = (0..f.interval_count())
        .map(|i| {
            let src_lo = f.breakpoints()[i].clone();
            let src_hi = f.breakpoints()[i + 1].clone();
            let img_lo = src_lo.add_ref(&trans[i]);
            let img_hi = img_lo.add_ref(&lengths[i]);
            Piece {
                src_lo,
                src_hi,
                img_lo,
                img_hi,
                flipped: false,
            }
        })
        .collect();
    FlipMap::from_piece_list(f.lattice().clone(), pieces)
}

// ---------------------------------------------------------------------------
// positive substitutes

/// Result of extracting the orientation-preserving part over a partition.
#[derive(Clone, Debug)]
pub struct PositiveParts {
    /// The positive substitute: agrees with the element blockwise, order
    /// preserving on every block.
    pub positive: IetMap,
    /// Product of the arrival-interval reflections of the flipped blocks;
    /// `residual ∘ embed(positive)` recovers the element.
    pub residual: FlipMap,
}

fn validate_flip_partition(f: &FlipMap, part: &[GroundNum]) -> Result<()> {
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

/// Positive substitute of `f` over an associated partition, together with
/// the reflection residual.
pub fn positive_substitute(f: &FlipMap, part: &[GroundNum]) -> Result<PositiveParts> {
    validate_flip_partition(f, part)?;
    let lattice = f.lattice.clone();
    let pieces = f.pieces();
    let mut pos_pieces = Vec::with_capacity(part.len() - 1);
    let mut flipped_arrivals: Vec<(GroundNum, GroundNum)> = Vec::new();
    for w in part.windows(2) {
        let (p, q) = (&w[0], &w[1]);
        let fp = &pieces[f.piece_index(p)];
        let (il, ih) = fp.map_interval(p, q);
        pos_pieces.push((p.clone(), q.clone(), il.sub_ref(p)));
        if fp.flipped {
            flipped_arrivals.push((il, ih));
        }
    }
    let positive = IetMap::from_pieces(lattice.clone(), pos_pieces);
    // residual: reflections in place over the flipped arrival intervals
    flipped_arrivals.sort_by(|a, b| a.0.cmp(&b.0));
    let mut res_pieces = Vec::new();
    let mut cursor = lattice.zero();
    for (lo, hi) in &flipped_arrivals {
        if cursor.sub_ref(lo).sign() < 0 {
            res_pieces.push(Piece {
                src_lo: cursor.clone(),
                src_hi: lo.clone(),
                img_lo: cursor.clone(),
                img_hi: lo.clone(),
                flipped: false,
            });
        }
        res_pieces.push(Piece {
            src_lo: lo.clone(),
            src_hi: hi.clone(),
            img_lo: lo.clone(),
            img_hi: hi.clone(),
            flipped: true,
        });
        cursor = hi.clone();
    }
    if cursor != lattice.one() {
        res_pieces.push(Piece {
            src_lo: cursor.clone(),
            src_hi: lattice.one(),
            img_lo: cursor,
            img_hi: lattice.one(),
            flipped: false,
        });
    }
    let residual = FlipMap::from_piece_list(lattice, res_pieces);
    let check = residual.compose(&embed(&positive))?;
    assert!(check == *f, "positive substitute failed to reassemble");
    Ok(PositiveParts { positive, residual })
}

/// Arrival partition of `f` associated with `part`.
pub fn arrival_partition(f: &FlipMap, part: &[GroundNum]) -> Result<Vec<GroundNum>> {
    validate_flip_partition(f, part)?;
    let pieces = f.pieces();
    let mut out: Vec<GroundNum> = vec![f.lattice.one()];
    for w in part.windows(2) {
        let fp = &pieces[f.piece_index(&w[0])];
        let (il, _ih) = fp.map_interval(&w[0], &w[1]);
        out.push(il);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

// ---------------------------------------------------------------------------
// the positive contribution

/// A computed positive-contribution value together with the independent set
/// it was evaluated over.
#[derive(Clone, Debug)]
pub struct PsiValue {
    pub value: SW2Mod2,
    pub basis: IndependentSet,
}

/// Cut each canonical interval of `f` following its expansion over `s`.
fn s_partition(f: &FlipMap, s: &IndependentSet) -> Result<Vec<GroundNum>> {
    let lengths = f.lengths();
    let mut part: Vec<GroundNum> = vec![f.lattice.zero()];
    for (i, len) in lengths.iter().enumerate() {
        let expansion = s.expand(len)?;
        let mut cursor = f.breaks[i].clone();
        for (el, count) in s.elements().iter().zip(&expansion) {
            let mut c = count.clone();
            while !c.is_zero() {
                cursor = cursor.add_ref(el);
                part.push(cursor.clone());
                c -= 1u32;
            }
        }
        debug_assert!(cursor == f.breaks[i + 1]);
        part.dedup();
    }
    Ok(part)
}

/// The S-map: signature of the positive substitute over a partition into
/// S-intervals, mod 2.  Well-defined for a fixed independent set.
///
/// Computed in closed form rather than by materializing the refined
/// partition (whose size is the sum of all expansion coefficients): pairs of
/// pieces in different blocks contribute `L_i /\ L_j` by bilinearity exactly
/// when the blocks invert, and a flipped block reverses all of its internal
/// pairs, which mod 2 depends only on the expansion multiset of its length.
pub fn psi_at(f: &FlipMap, s: &IndependentSet) -> Result<SW2Mod2> {
    if s.lattice() != &f.lattice {
        return Err(Error::MixedContexts);
    }
    let lattice = &f.lattice;
    let lengths = f.lengths();
    let n = lengths.len();
    let mut acc = SW2Mod2::zero(lattice);
    for j in 0..n {
        for i in 0..j {
            if f.tau[i] > f.tau[j] {
                acc = acc.add(&wedge(lattice, &lengths[i], &lengths[j])?.mod2());
            }
        }
    }
    let els = s.elements();
    for i in 0..n {
        if !f.signs[i] {
            // every block still needs a valid expansion for f to lie in G_S
            s.expand(&lengths[i])?;
            continue;
        }
        let m = s.expand(&lengths[i])?;
        for (u, mu) in m.iter().enumerate() {
            // C(m_u, 2) is odd iff m_u = 2 or 3 (mod 4)
            let r = (mu % BigUint::from(4u32)).to_u32().unwrap_or(0);
            if r == 2 || r == 3 {
                acc = acc.add(&wedge(lattice, &els[u], &els[u])?.mod2());
            }
            for (v, mv) in m.iter().enumerate().skip(u + 1) {
                if mu.is_odd() && mv.is_odd() {
                    acc = acc.add(&wedge(lattice, &els[u], &els[v])?.mod2());
                }
            }
        }
    }
    Ok(acc)
}

/// Same value, computed by actually refining the partition and taking the
/// positive substitute.  Exponentially slower for large expansions; kept as
/// the definitional route for cross-checks.
pub fn psi_at_by_refinement(f: &FlipMap, s: &IndependentSet) -> Result<SW2Mod2> {
    if s.lattice() != &f.lattice {
        return Err(Error::MixedContexts);
    }
    let part = s_partition(f, s)?;
    let parts = positive_substitute(f, &part)?;
    Ok(parts.positive.signature().mod2())
}

/// Target list defining the canonical independent set for `f`: the distinct
/// canonical lengths, plus half the total flipped length when that total is
/// divisible by 2.  The halving target makes the value stable under further
/// refinement for every element of the flip-signature kernel.
pub fn canonical_psi_targets(f: &FlipMap) -> Result<Vec<GroundNum>> {
    let mut targets = f.lengths();
    targets.sort();
    targets.dedup();
    let flipped = f.total_flipped_length();
    if !flipped.is_zero() {
        if let Some(half) = f.lattice.half_of(&flipped)? {
            if half.sign() > 0 && !targets.contains(&half) {
                targets.push(half);
            }
        }
    }
    Ok(targets)
}

/// The positive contribution evaluated over the canonical independent set.
pub fn psi(f: &FlipMap) -> Result<PsiValue> {
    let targets = canonical_psi_targets(f)?;
    let basis = f.lattice.independentize(&targets)?;
    let value = psi_at(f, &basis)?;
    Ok(PsiValue { value, basis })
}

/// Evaluate psi for several elements over one common independent set (the
/// canonical targets of all of them together).
pub fn psi_common(fs: &[&FlipMap]) -> Result<Vec<SW2Mod2>> {
    let lattice = fs
        .first()
        .map(|f| f.lattice.clone())
        .ok_or_else(|| Error::OutOfRange("need at least one element".into()))?;
    let mut targets: Vec<GroundNum> = Vec::new();
    for f in fs {
        if f.lattice != lattice {
            return Err(Error::MixedContexts);
        }
        targets.extend(canonical_psi_targets(f)?);
    }
    targets.sort();
    targets.dedup();
    let basis = lattice.independentize(&targets)?;
    fs.iter().map(|f| psi_at(f, &basis)).collect()
}

// ---------------------------------------------------------------------------
// membership and abelianization data

/// Kernel of the flip signature (membership only; no coset witness).
pub fn in_ker_eps_flip(f: &FlipMap) -> Result<bool> {
    if !f.lattice.is_dense() {
        return Err(Error::NotDense);
    }
    Ok(f.eps_flip().is_zero())
}

/// Membership in the derived subgroup: both the flip signature and the
/// positive contribution vanish.
pub fn in_derived_flip(f: &FlipMap) -> Result<bool> {
    if !f.lattice.is_dense() {
        return Err(Error::NotDense);
    }
    if !f.eps_flip().is_zero() {
        return Ok(false);
    }
    Ok(psi(f)?.value.is_zero())
}

/// The pair of abelianization coordinates.
pub fn ab_image(f: &FlipMap) -> Result<(T2Mod2, SW2Mod2)> {
    if !f.lattice.is_dense() {
        return Err(Error::NotDense);
    }
    Ok((f.eps_flip(), psi(f)?.value))
}

// ---------------------------------------------------------------------------
// order

/// Order of a flip element; `Unknown` when neither the structural criterion
/// nor bounded iteration settles it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlipOrder {
    Finite(u64),
    Infinite,
    Unknown(u64),
}

impl fmt::Display for FlipOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlipOrder::Finite(n) => write!(f, "{n}"),
            FlipOrder::Infinite => write!(f, "infinite"),
            FlipOrder::Unknown(b) => write!(f, "unknown (budget {b})"),
        }
    }
}

pub fn order_flip(f: &FlipMap) -> Result<FlipOrder> {
    order_flip_with_budget(f, crate::iet::ORDER_ROUNDS_BUDGET, FLIP_ORDER_ITER_BUDGET)
}

pub fn order_flip_with_budget(
    f: &FlipMap,
    stab_budget: usize,
    iter_budget: u64,
) -> Result<FlipOrder> {
    if f.is_identity() {
        return Ok(FlipOrder::Finite(1));
    }
    if f.is_orientation_preserving() {
        return Ok(match f.try_unflip()?.order_with_budget(stab_budget)? {
            Order::Finite(n) => FlipOrder::Finite(n),
            Order::Infinite => FlipOrder::Infinite,
        });
    }
    // saturate the breakpoint set under image endpoints
    let mut points: Vec<GroundNum> = f.breaks.clone();
    let mut rounds = 0usize;
    let stabilized = loop {
        rounds += 1;
        if rounds > stab_budget || points.len() > 100_000 {
            break false;
        }
        let pieces = f.pieces();
        let mut new_points = Vec::new();
        for w in points.windows(2) {
            let p = &pieces[f.piece_index(&w[0])];
            let (il, ih) = p.map_interval(&w[0], &w[1]);
            new_points.push(il);
            new_points.push(ih);
        }
        let before = points.len();
        points.extend(new_points);
        points.sort();
        points.dedup();
        if points.len() == before {
            break true;
        }
    };
    if stabilized {
        let pieces = f.pieces();
        let n = points.len() - 1;
        let mut perm = vec![0usize; n];
        let mut flip = vec![false; n];
        for i in 0..n {
            let p = &pieces[f.piece_index(&points[i])];
            let (il, ih) = p.map_interval(&points[i], &points[i + 1]);
            let k = points.binary_search(&il).expect("stabilized set is closed");
            debug_assert!(points[k + 1] == ih);
            perm[i] = k;
            flip[i] = p.flipped;
        }
        let mut seen = vec![false; n];
        let mut order: u128 = 1;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0u128;
            let mut cur = start;
            let mut sign = false;
            while !seen[cur] {
                seen[cur] = true;
                sign ^= flip[cur];
                cur = perm[cur];
                len += 1;
            }
            let cycle_order = if sign { 2 * len } else { len };
            order = lcm_u128(order, cycle_order);
        }
        let order_u64 = order
            .to_u64()
            .ok_or_else(|| Error::BudgetExceeded("order exceeds u64 range".into()))?;
        let p = f.pow(order_u64 as i64)?;
        assert!(p.is_identity(), "computed flip order failed verification");
        return Ok(FlipOrder::Finite(order_u64));
    }
    // bounded brute force
    let mut g = f.clone();
    for k in 1..=iter_budget {
        if g.is_identity() {
            return Ok(FlipOrder::Finite(k - 1));
        }
        if k == iter_budget {
            break;
        }
        g = g.compose(f)?;
    }
    Ok(FlipOrder::Unknown(iter_budget))
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

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::{rat, Field};
    use crate::iet::IetMap;
    use crate::tensor2::wedge;

    fn zsqrt2() -> (Field, Lattice, GroundNum) {
        let f = Field::sqrt2();
        let t = f.theta();
        let l = Lattice::from_generators(&f, std::slice::from_ref(&t)).unwrap();
        (f, l, t)
    }

    #[test]
    fn reflection_squares_to_identity() {
        let (field, l, _t) = zsqrt2();
        let r = FlipMap::reflection(&l, &field.zero(), &field.one()).unwrap();
        assert!(r.compose(&r).unwrap().is_identity());
        assert_eq!(order_flip(&r).unwrap(), FlipOrder::Finite(2));
    }

    #[test]
    fn embed_unflip_roundtrip() {
        let (field, l, t) = zsqrt2();
        let a = field.integer(2).sub_ref(&t);
        let b = t.sub_ref(&field.one());
        let f = IetMap::restricted_rotation(&l, &a, &b, &field.zero()).unwrap();
        let e = embed(&f);
        assert!(e.is_orientation_preserving());
        assert!(e.try_unflip().unwrap() == f);
        let r = FlipMap::reflection(&l, &field.zero(), &b).unwrap();
        assert!(matches!(r.try_unflip(), Err(Error::NotOrientationPreserving)));
    }

    #[test]
    fn rotation_is_three_reflections() {
        let (field, l, t) = zsqrt2();
        let a = field.integer(2).sub_ref(&t);
        let b = t.sub_ref(&field.one());
        let i_end = a.clone();
        let j_end = a.add_ref(&b);
        let r_i = FlipMap::reflection(&l, &field.zero(), &i_end).unwrap();
        let r_j = FlipMap::reflection(&l, &i_end, &j_end).unwrap();
        let r_ij = FlipMap::reflection(&l, &field.zero(), &j_end).unwrap();
        let rot = embed(&IetMap::restricted_rotation(&l, &a, &b, &field.zero()).unwrap());
        let prod = r_ij.compose(&r_j.compose(&r_i).unwrap()).unwrap();
        assert!(prod == rot);
    }

    #[test]
    fn reflections_of_equal_type_are_conjugate() {
        let (field, l, t) = zsqrt2();
        let b = t.sub_ref(&field.one());
        let p = field.zero();
        let q = field.integer(2).sub_ref(&t);
        let r = FlipMap::reflection(&l, &p, &p.add_ref(&b)).unwrap();
        let s = FlipMap::reflection(&l, &q, &q.add_ref(&b)).unwrap();
        // conjugator: the transposition carrying one interval to the other
        let h = embed(&IetMap::transposition(&l, &b, &p, &q).unwrap());
        let conj = h.compose(&r).unwrap().compose(&h.inverse()).unwrap();
        assert!(conj == s);
    }

    #[test]
    fn reflection_conjugate_to_rotation() {
        // reflection of type 2a conjugated by the half reflection is the
        // rotation of type (a, a)
        let (field, l, t) = zsqrt2();
        let a = t.sub_ref(&field.one());
        let two_a = a.scale(&rat(2, 1));
        let r = FlipMap::reflection(&l, &field.zero(), &two_a).unwrap();
        let h = FlipMap::reflection(&l, &field.zero(), &a).unwrap();
        let conj = h.compose(&r).unwrap().compose(&h.inverse()).unwrap();
        let rot = embed(&IetMap::restricted_rotation(&l, &a, &a, &field.zero()).unwrap());
        assert!(conj == rot);
    }

    #[test]
    fn eps_flip_values() {
        let (field, l, t) = zsqrt2();
        let a = t.sub_ref(&field.one());
        let r = FlipMap::reflection(&l, &field.zero(), &a).unwrap();
        assert_eq!(r.eps_flip(), tensor(&l, &a, &a).unwrap().mod2());
        assert_eq!(r.eps_flip_via_rectangles(), r.eps_flip());
        // rotation of type (p, q): p(x)q + q(x)p mod 2
        let p = field.integer(2).sub_ref(&t);
        let q = a.clone();
        let rot = embed(&IetMap::restricted_rotation(&l, &p, &q, &field.zero()).unwrap());
        let expect = tensor(&l, &p, &q)
            .unwrap()
            .add(&tensor(&l, &q, &p).unwrap())
            .mod2();
        assert_eq!(rot.eps_flip(), expect);
        assert_eq!(rot.eps_flip_via_rectangles(), rot.eps_flip());
        // type 12 - 8 sqrt2 lies in 4*lattice: signature dies mod 2
        let big = field.integer(12).sub_ref(&t.scale(&rat(8, 1)));
        let r4 = FlipMap::reflection(&l, &field.zero(), &big).unwrap();
        assert!(r4.eps_flip().is_zero());
        assert!(FlipMap::identity(&l).eps_flip().is_zero());
    }

    #[test]
    fn positive_substitute_reflection_split() {
        // reflection of [x, x+a) split in two equal halves substitutes to the
        // rotation of type (a/2, a/2) at x
        let (field, l, t) = zsqrt2();
        let a = field.integer(6).sub_ref(&t.scale(&rat(4, 1)));
        let half = l.half_of(&a).unwrap().unwrap();
        let x = t.sub_ref(&field.one());
        let r = FlipMap::reflection(&l, &x, &x.add_ref(&a)).unwrap();
        let part = vec![
            field.zero(),
            x.clone(),
            x.add_ref(&half),
            x.add_ref(&a),
            field.one(),
        ];
        let parts = positive_substitute(&r, &part).unwrap();
        let rot = IetMap::restricted_rotation(&l, &half, &half, &x).unwrap();
        assert!(parts.positive == rot);
        // orientation-preserving elements substitute to themselves
        let f = IetMap::transposition(&l, &half, &field.zero(), &x).unwrap();
        let e = embed(&f);
        let parts = positive_substitute(&e, e.breakpoints()).unwrap();
        assert!(parts.positive == f);
        assert!(parts.residual.is_identity());
    }

    #[test]
    fn chain_rule_for_substitutes() {
        // block permutations (with signs) over a shared partition
        let (field, l, t) = zsqrt2();
        let w = t.sub_ref(&field.one());
        let tail = field.integer(3).sub_ref(&t.scale(&rat(2, 1))); // 1 - 2w
        let alphas = vec![w.clone(), w.clone(), tail.clone()];
        let f = FlipMap::from_description(&l, &alphas, &[1, 0, 2], &[true, false, false]).unwrap();
        let g = FlipMap::from_description(&l, &alphas, &[0, 1, 2], &[false, true, true]).unwrap();
        let part: Vec<GroundNum> = vec![
            field.zero(),
            w.clone(),
            w.scale(&rat(2, 1)),
            field.one(),
        ];
        let gf = g.compose(&f).unwrap();
        let lhs = positive_substitute(&gf, &part).unwrap().positive;
        let f_part = arrival_partition(&f, &part).unwrap();
        let g_pos = positive_substitute(&g, &f_part).unwrap().positive;
        let f_pos = positive_substitute(&f, &part).unwrap().positive;
        let rhs = g_pos.compose(&f_pos).unwrap();
        assert!(lhs == rhs);
    }

    #[test]
    fn psi_values() {
        let (field, l, t) = zsqrt2();
        let ell = t.sub_ref(&field.one()); // not in 2*lattice
        let two_ell = ell.scale(&rat(2, 1));
        let r = FlipMap::reflection(&l, &field.zero(), &two_ell).unwrap();
        let v = psi(&r).unwrap();
        assert_eq!(v.value, wedge(&l, &ell, &ell).unwrap().mod2());
        assert!(!v.value.is_zero());
        assert_eq!(v.value.diag(), &[true, true]);
        // embedded exchanges: psi = signature mod 2
        let a = field.integer(2).sub_ref(&t);
        let f = IetMap::restricted_rotation(&l, &a, &ell, &field.zero()).unwrap();
        let e = embed(&f);
        assert_eq!(psi(&e).unwrap().value, f.signature().mod2());
        assert!(psi(&FlipMap::identity(&l)).unwrap().value.is_zero());
    }

    #[test]
    fn membership_examples() {
        let (field, l, t) = zsqrt2();
        let ell = t.sub_ref(&field.one());
        // type 12 - 8 sqrt2 = 4(3 - 2 sqrt2): in the derived subgroup
        let big = field.integer(12).sub_ref(&t.scale(&rat(8, 1)));
        let r4 = FlipMap::reflection(&l, &field.zero(), &big).unwrap();
        assert!(in_derived_flip(&r4).unwrap());
        // type 2(sqrt2 - 1): in Ker eps but not derived
        let r2 = FlipMap::reflection(&l, &field.zero(), &ell.scale(&rat(2, 1))).unwrap();
        assert!(in_ker_eps_flip(&r2).unwrap());
        assert!(!in_derived_flip(&r2).unwrap());
        // squares are derived
        let a = field.integer(2).sub_ref(&t);
        let mix = r2
            .compose(&embed(
                &IetMap::restricted_rotation(&l, &a, &ell, &field.zero()).unwrap(),
            ))
            .unwrap();
        let sq = mix.compose(&mix).unwrap();
        assert!(in_derived_flip(&sq).unwrap());
        // density is required
        let fq = Field::rationals();
        let lq = Lattice::from_generators(&fq, &[fq.rational(rat(1, 2))]).unwrap();
        let rq = FlipMap::reflection(&lq, &fq.zero(), &fq.one()).unwrap();
        assert!(matches!(in_derived_flip(&rq), Err(Error::NotDense)));
    }

    #[test]
    fn flip_orders() {
        let (field, l, t) = zsqrt2();
        let ell = t.sub_ref(&field.one());
        let r = FlipMap::reflection(&l, &field.zero(), &ell).unwrap();
        assert_eq!(order_flip(&r).unwrap(), FlipOrder::Finite(2));
        // signed 2-cycle with negative sign product has order 4
        let f = Field::rationals();
        let l3 = Lattice::from_generators(&f, &[f.rational(rat(1, 3))]).unwrap();
        let third = f.rational(rat(1, 3));
        let rot = embed(
            &IetMap::restricted_rotation(&l3, &third, &third, &f.zero()).unwrap(),
        );
        let refl = FlipMap::reflection(&l3, &third, &third.scale(&rat(2, 1))).unwrap();
        let g = rot.compose(&refl).unwrap();
        assert_eq!(order_flip(&g).unwrap(), FlipOrder::Finite(4));
        assert!(g.pow(4).unwrap().is_identity());
        assert!(!g.pow(2).unwrap().is_identity());
        // embedded irrational rotation: infinite via the positive part
        let a = field.integer(2).sub_ref(&t);
        let rr = embed(&IetMap::restricted_rotation(&l, &a, &ell, &field.zero()).unwrap());
        assert_eq!(order_flip(&rr).unwrap(), FlipOrder::Infinite);
    }

    #[test]
    fn eps_flip_homomorphism_and_set_identities() {
        let (field, l, t) = zsqrt2();
        let ell = t.sub_ref(&field.one());
        let a = field.integer(2).sub_ref(&t);
        let f = FlipMap::reflection(&l, &field.zero(), &ell).unwrap();
        let g = embed(&IetMap::restricted_rotation(&l, &a, &ell, &field.zero()).unwrap())
            .compose(&FlipMap::reflection(&l, &ell, &a).unwrap())
            .unwrap();
        let fg = f.compose(&g).unwrap();
        assert_eq!(fg.eps_flip(), f.eps_flip().add(&g.eps_flip()));
        // set identities for the inversion sets
        let ef = f.inversion_rectangles();
        let eg = g.inversion_rectangles();
        let efg = fg.inversion_rectangles();
        let g_pre_ef = ef.act_flip(&g.inverse()).unwrap();
        let lhs = efg.union(&eg.intersect(&g_pre_ef).unwrap()).unwrap();
        let rhs = eg.union(&g_pre_ef).unwrap();
        assert!(lhs == rhs);
        assert!(efg
            .intersect(&eg)
            .unwrap()
            .intersect(&g_pre_ef)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn psi_additive_over_common_partition() {
        let (field, l, t) = zsqrt2();
        let w = t.sub_ref(&field.one());
        let tail = field.integer(3).sub_ref(&t.scale(&rat(2, 1)));
        let alphas = vec![w.clone(), w.clone(), tail.clone()];
        let f = FlipMap::from_description(&l, &alphas, &[1, 0, 2], &[true, true, false]).unwrap();
        let g = FlipMap::from_description(&l, &alphas, &[1, 0, 2], &[false, false, true]).unwrap();
        let basis = l.independentize(&[w.clone(), tail.clone()]).unwrap();
        let pf = psi_at(&f, &basis).unwrap();
        let pg = psi_at(&g, &basis).unwrap();
        let pfg = psi_at(&g.compose(&f).unwrap(), &basis).unwrap();
        assert_eq!(pfg, pf.add(&pg));
    }

    #[test]
    fn psi_closed_form_matches_refinement_route() {
        let (field, l, t) = zsqrt2();
        let w = t.sub_ref(&field.one());
        let tail = field.integer(3).sub_ref(&t.scale(&rat(2, 1)));
        let basis = l.independentize(&[w.clone(), tail.clone()]).unwrap();
        let alphas = vec![w.clone(), w.clone(), tail.clone()];
        let taus: [&[usize]; 3] = [&[1, 0, 2], &[0, 1, 2], &[2, 0, 1]];
        let sign_choices: [&[bool]; 4] = [
            &[false, false, false],
            &[true, false, true],
            &[true, true, false],
            &[true, true, true],
        ];
        for tau in taus {
            for signs in sign_choices {
                let f = FlipMap::from_description(&l, &alphas, tau, signs).unwrap();
                assert_eq!(
                    psi_at(&f, &basis).unwrap(),
                    psi_at_by_refinement(&f, &basis).unwrap()
                );
            }
        }
        // also across a finer set that splits w into two pieces
        let small = field.integer(17).sub_ref(&t.scale(&rat(12, 1)));
        let rest = w.sub_ref(&small);
        let fine = l
            .independentize(&[small.clone(), rest.clone(), tail.clone()])
            .unwrap();
        if fine.elements().len() == 2 {
            // rank-2 lattice: the three targets reduce to an independent pair
            let f =
                FlipMap::from_description(&l, &alphas, &[1, 0, 2], &[true, false, true]).unwrap();
            if let (Ok(a), Ok(b)) = (psi_at(&f, &fine), psi_at_by_refinement(&f, &fine)) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn compose_is_associative() {
        let (_field, l, _t) = zsqrt2();
        let mut rng = crate::sampling::Rng::new(17);
        for _ in 0..15 {
            let f = crate::sampling::random_flip(&mut rng, &l, 5);
            let g = crate::sampling::random_flip(&mut rng, &l, 5);
            let h = crate::sampling::random_flip(&mut rng, &l, 5);
            let lhs = f.compose(&g).unwrap().compose(&h).unwrap();
            let rhs = f.compose(&g.compose(&h).unwrap()).unwrap();
            assert!(lhs == rhs);
            assert!(f.compose(&f.inverse()).unwrap().is_identity());
        }
    }

    #[test]
    fn rank_one_signed_permutation_oracle() {
        // over (1/4)Z the group is the signed symmetric group on four slots;
        // the flip signature reads the flip parity and psi the permutation
        // parity, giving the rank-two elementary abelianization
        let field = Field::rationals();
        let l = Lattice::from_generators(&field, &[field.rational(rat(1, 4))]).unwrap();
        let e = field.rational(rat(1, 4));
        let alphas: Vec<GroundNum> = (0..4).map(|_| e.clone()).collect();
        let eps_unit = tensor(&l, &e, &e).unwrap().mod2();
        let psi_unit = wedge(&l, &e, &e).unwrap().mod2();
        let mut rng = crate::sampling::Rng::new(99);
        for _ in 0..40 {
            let tau = rng.permutation(4);
            let signs: Vec<bool> = (0..4).map(|_| rng.below(2) == 1).collect();
            let f = FlipMap::from_description(&l, &alphas, &tau, &signs).unwrap();
            let flip_parity = signs.iter().filter(|&&s| s).count() % 2 == 1;
            let mut inversions = 0;
            for j in 0..4 {
                for i in 0..j {
                    if tau[i] > tau[j] {
                        inversions += 1;
                    }
                }
            }
            let expected_eps = if flip_parity {
                eps_unit.clone()
            } else {
                crate::tensor2::T2Mod2::zero(&l)
            };
            assert_eq!(f.eps_flip(), expected_eps);
            let expected_psi = if inversions % 2 == 1 {
                psi_unit.clone()
            } else {
                SW2Mod2::zero(&l)
            };
            assert_eq!(psi(&f).unwrap().value, expected_psi);
        }
        // the two bits together span the full rank-one abelianization
        let pairs: Vec<(T2Mod2, SW2Mod2)> = vec![
            (eps_unit.clone(), SW2Mod2::zero(&l)),
            (crate::tensor2::T2Mod2::zero(&l), psi_unit.clone()),
        ];
        assert_eq!(crate::tensor2::f2_span_dim(&pairs).unwrap(), 2);
    }

    #[test]
    fn reversed_pieces_merge_in_canonical_form() {
        // two order-reversing pieces whose images are contiguous the other
        // way around collapse to one reversed interval
        let (field, l, t) = zsqrt2();
        let x = t.sub_ref(&field.one());
        let y = field.integer(2).sub_ref(&t);
        let f = FlipMap::from_description(&l, &[x.clone(), y.clone()], &[1, 0], &[true, true])
            .unwrap();
        assert_eq!(f.interval_count(), 1);
        assert_eq!(f.signs(), &[true]);
        let full = FlipMap::reflection(&l, &field.zero(), &field.one()).unwrap();
        assert!(f == full);
        // mixed signs do not merge
        let g = FlipMap::from_description(&l, &[x, y], &[1, 0], &[true, false]).unwrap();
        assert_eq!(g.interval_count(), 2);
    }

    #[test]
    fn psi_stability_across_independent_sets() {
        // On the kernel of the flip signature the value is provably stable
        // under refinement of the independent set (the halved flipped total
        // makes every expansion multiplicity even).  Off the kernel the
        // stability is only conjectural: mismatches are counted and surfaced,
        // not hidden.
        let (field, l, t) = zsqrt2();
        let ell = t.sub_ref(&field.one());
        let mut rng = crate::sampling::Rng::new(42);
        let mut off_kernel_mismatches = 0usize;
        let mut off_kernel_total = 0usize;
        for _ in 0..30 {
            let f = crate::sampling::random_flip(&mut rng, &l, 5);
            let targets = canonical_psi_targets(&f).unwrap();
            let Ok(basis) = l.independentize(&targets) else {
                continue;
            };
            // a strictly finer set: adjoin a small positive element
            let small = field.integer(17).sub_ref(&t.scale(&rat(12, 1)));
            let mut finer_targets = targets.clone();
            finer_targets.push(small);
            finer_targets.push(ell.clone());
            finer_targets.sort();
            finer_targets.dedup();
            let Ok(finer) = l.independentize(&finer_targets) else {
                continue;
            };
            let (Ok(v1), Ok(v2)) = (psi_at(&f, &basis), psi_at(&f, &finer)) else {
                continue;
            };
            if f.eps_flip().is_zero() {
                assert_eq!(v1, v2, "psi must be stable on the signature kernel");
            } else {
                off_kernel_total += 1;
                if v1 != v2 {
                    off_kernel_mismatches += 1;
                }
            }
        }
        // surfaced, not silenced: off the kernel the single-set value is a
        // representative, and refining the set can change it
        eprintln!(
            "psi stability off the kernel: {off_kernel_mismatches}/{off_kernel_total} refinements changed the value"
        );
    }

    #[test]
    fn psi_common_recomputes_over_union() {
        let (field, l, t) = zsqrt2();
        let ell = t.sub_ref(&field.one());
        let r2 = FlipMap::reflection(&l, &field.zero(), &ell.scale(&rat(2, 1))).unwrap();
        let a = field.integer(2).sub_ref(&t);
        let rot = embed(&IetMap::restricted_rotation(&l, &a, &ell, &field.zero()).unwrap());
        let vals = psi_common(&[&r2, &rot]).unwrap();
        assert_eq!(vals[0], wedge(&l, &ell, &ell).unwrap().mod2());
        assert_eq!(vals[1], rot.try_unflip().unwrap().signature().mod2());
    }
}
