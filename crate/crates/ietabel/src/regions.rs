//! The Boolean algebra of lattice-endpoint interval sets of `[0,1)`, its
//! product (rectangle sets), the group action, and the measures valued in
//! the ground field and the second tensor power.
//!
//! Rectangle sets are kept in a canonical slab form: maximal vertical slabs
//! with identical y-sections, which makes equality syntactic and Boolean
//! operations a sweep over a common x-grid.  Only right-open intervals are
//! representable, so finitely supported permutations act trivially by
//! construction.

use std::fmt;

use crate::flips::FlipMap;
use crate::ground::GroundNum;
use crate::iet::IetMap;
use crate::lattice::Lattice;
use crate::tensor2::{tensor, T2};
use crate::{Error, Result};

/// A finite union of right-open intervals with lattice endpoints in `[0,1]`,
/// normalized sorted, disjoint and merged.
#[derive(Clone, PartialEq, Eq)]
pub struct IntervalSet {
    lattice: Lattice,
    intervals: Vec<(GroundNum, GroundNum)>,
}

impl IntervalSet {
    pub fn empty(lattice: &Lattice) -> IntervalSet {
        IntervalSet {
            lattice: lattice.clone(),
            intervals: Vec::new(),
        }
    }

    pub fn from_intervals(
        lattice: &Lattice,
        intervals: Vec<(GroundNum, GroundNum)>,
    ) -> Result<IntervalSet> {
        for (lo, hi) in &intervals {
            check_endpoint(lattice, lo)?;
            check_endpoint(lattice, hi)?;
            if lo.sub_ref(hi).sign() >= 0 {
                return Err(Error::OutOfRange("interval must satisfy lo < hi".into()));
            }
        }
        Ok(IntervalSet {
            lattice: lattice.clone(),
            intervals: normalize(intervals),
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn intervals(&self) -> &[(GroundNum, GroundNum)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Lebesgue measure (total length).
    pub fn measure_len(&self) -> GroundNum {
        let mut acc = self.lattice.zero();
        for (lo, hi) in &self.intervals {
            acc = acc.add_ref(&hi.sub_ref(lo));
        }
        acc
    }

    pub fn union(&self, o: &IntervalSet) -> Result<IntervalSet> {
        self.boolean(o, BoolOp::Union)
    }

    pub fn intersect(&self, o: &IntervalSet) -> Result<IntervalSet> {
        self.boolean(o, BoolOp::Intersect)
    }

    pub fn diff(&self, o: &IntervalSet) -> Result<IntervalSet> {
        self.boolean(o, BoolOp::Diff)
    }

    pub fn symdiff(&self, o: &IntervalSet) -> Result<IntervalSet> {
        self.boolean(o, BoolOp::Symdiff)
    }

    fn boolean(&self, o: &IntervalSet, op: BoolOp) -> Result<IntervalSet> {
        if self.lattice != o.lattice {
            return Err(Error::MixedContexts);
        }
        Ok(IntervalSet {
            lattice: self.lattice.clone(),
            intervals: boolean_1d(&self.intervals, &o.intervals, op),
        })
    }
}

impl fmt::Debug for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntervalSet({} intervals)", self.intervals.len())
    }
}

fn check_endpoint(lattice: &Lattice, x: &GroundNum) -> Result<()> {
    if !lattice.contains(x) {
        return Err(Error::NotInLattice);
    }
    if x.sign() < 0 || x.sub_ref(&lattice.one()).sign() > 0 {
        return Err(Error::OutOfRange("endpoint must lie in [0,1]".into()));
    }
    Ok(())
}

fn normalize(mut v: Vec<(GroundNum, GroundNum)>) -> Vec<(GroundNum, GroundNum)> {
    v.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(GroundNum, GroundNum)> = Vec::new();
    for (lo, hi) in v {
        if let Some(last) = out.last_mut() {
            if lo.sub_ref(&last.1).sign() <= 0 {
                if hi.sub_ref(&last.1).sign() > 0 {
                    last.1 = hi;
                }
                continue;
            }
        }
        out.push((lo, hi));
    }
    out
}

#[derive(Clone, Copy)]
enum BoolOp {
    Union,
    Intersect,
    Diff,
    Symdiff,
}

fn boolean_1d(
    a: &[(GroundNum, GroundNum)],
    b: &[(GroundNum, GroundNum)],
    op: BoolOp,
) -> Vec<(GroundNum, GroundNum)> {
    // sweep over the merged endpoint grid
    let mut grid: Vec<GroundNum> = Vec::new();
    for (lo, hi) in a.iter().chain(b.iter()) {
        grid.push(lo.clone());
        grid.push(hi.clone());
    }
    grid.sort();
    grid.dedup();
    let covers = |set: &[(GroundNum, GroundNum)], lo: &GroundNum| -> bool {
        set.iter()
            .any(|(l, h)| l.sub_ref(lo).sign() <= 0 && lo.sub_ref(h).sign() < 0)
    };
    let mut out = Vec::new();
    for w in grid.windows(2) {
        let ina = covers(a, &w[0]);
        let inb = covers(b, &w[0]);
        let keep = match op {
            BoolOp::Union => ina || inb,
            BoolOp::Intersect => ina && inb,
            BoolOp::Diff => ina && !inb,
            BoolOp::Symdiff => ina ^ inb,
        };
        if keep {
            out.push((w[0].clone(), w[1].clone()));
        }
    }
    normalize(out)
}

// ---------------------------------------------------------------------------
// rectangle sets

/// A vertical slab `[x_lo, x_hi) x ys`.
#[derive(Clone, PartialEq, Eq)]
struct Slab {
    x_lo: GroundNum,
    x_hi: GroundNum,
    ys: Vec<(GroundNum, GroundNum)>,
}

/// An element of the product Boolean algebra: a finite union of rectangles
/// with lattice endpoints, in canonical slab form.
#[derive(Clone, PartialEq, Eq)]
pub struct RectangleSet {
    lattice: Lattice,
    slabs: Vec<Slab>,
}

type Rect = ((GroundNum, GroundNum), (GroundNum, GroundNum));

impl RectangleSet {
    pub fn empty(lattice: &Lattice) -> RectangleSet {
        RectangleSet {
            lattice: lattice.clone(),
            slabs: Vec::new(),
        }
    }

    /// Build from a list of (possibly overlapping) rectangles
    /// `(x_lo, x_hi) x (y_lo, y_hi)`.
    pub fn from_rects(lattice: &Lattice, rects: Vec<Rect>) -> Result<RectangleSet> {
        for ((xl, xh), (yl, yh)) in &rects {
            check_endpoint(lattice, xl)?;
            check_endpoint(lattice, xh)?;
            check_endpoint(lattice, yl)?;
            check_endpoint(lattice, yh)?;
            if xl.sub_ref(xh).sign() >= 0 || yl.sub_ref(yh).sign() >= 0 {
                return Err(Error::OutOfRange("rectangle must satisfy lo < hi".into()));
            }
        }
        Ok(RectangleSet {
            lattice: lattice.clone(),
            slabs: canonical_slabs(&rects),
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn is_empty(&self) -> bool {
        self.slabs.is_empty()
    }

    /// Number of rectangles in the canonical slab decomposition.
    pub fn rectangle_count(&self) -> usize {
        self.slabs.iter().map(|s| s.ys.len()).sum()
    }

    /// The canonical rectangles.
    pub fn rectangles(&self) -> Vec<Rect> {
        let mut out = Vec::new();
        for s in &self.slabs {
            for (yl, yh) in &s.ys {
                out.push(((s.x_lo.clone(), s.x_hi.clone()), (yl.clone(), yh.clone())));
            }
        }
        out
    }

    pub fn union(&self, o: &RectangleSet) -> Result<RectangleSet> {
        self.boolean(o, BoolOp::Union)
    }

    pub fn intersect(&self, o: &RectangleSet) -> Result<RectangleSet> {
        self.boolean(o, BoolOp::Intersect)
    }

    pub fn diff(&self, o: &RectangleSet) -> Result<RectangleSet> {
        self.boolean(o, BoolOp::Diff)
    }

    pub fn symdiff(&self, o: &RectangleSet) -> Result<RectangleSet> {
        self.boolean(o, BoolOp::Symdiff)
    }

    fn boolean(&self, o: &RectangleSet, op: BoolOp) -> Result<RectangleSet> {
        if self.lattice != o.lattice {
            return Err(Error::MixedContexts);
        }
        // common x-grid
        let mut xs: Vec<GroundNum> = Vec::new();
        for s in self.slabs.iter().chain(o.slabs.iter()) {
            xs.push(s.x_lo.clone());
            xs.push(s.x_hi.clone());
        }
        xs.sort();
        xs.dedup();
        let section = |set: &RectangleSet, x: &GroundNum| -> Vec<(GroundNum, GroundNum)> {
            for s in &set.slabs {
                if s.x_lo.sub_ref(x).sign() <= 0 && x.sub_ref(&s.x_hi).sign() < 0 {
                    return s.ys.clone();
                }
            }
            Vec::new()
        };
        let mut slabs = Vec::new();
        for w in xs.windows(2) {
            let ya = section(self, &w[0]);
            let yb = section(o, &w[0]);
            let ys = boolean_1d(&ya, &yb, op);
            if !ys.is_empty() {
                slabs.push(Slab {
                    x_lo: w[0].clone(),
                    x_hi: w[1].clone(),
                    ys,
                });
            }
        }
        Ok(RectangleSet {
            lattice: self.lattice.clone(),
            slabs: merge_slabs(slabs),
        })
    }

    /// Mirror across the diagonal: `{(y, x) | (x, y) in self}`.
    pub fn mirror(&self) -> RectangleSet {
        let rects: Vec<Rect> = self
            .rectangles()
            .into_iter()
            .map(|(x, y)| (y, x))
            .collect();
        RectangleSet {
            lattice: self.lattice.clone(),
            slabs: canonical_slabs(&rects),
        }
    }

    /// Product measure valued in the second tensor power:
    /// `w([a,b) x [c,d)) = (b-a) (x) (d-c)`, extended additively.
    pub fn measure_t2(&self) -> T2 {
        let mut acc = T2::zero(&self.lattice);
        for s in &self.slabs {
            let width = s.x_hi.sub_ref(&s.x_lo);
            for (yl, yh) in &s.ys {
                let height = yh.sub_ref(yl);
                acc = acc.add(
                    &tensor(&self.lattice, &width, &height)
                        .expect("endpoints are lattice points"),
                );
            }
        }
        acc
    }

    /// Image under the diagonal action `f.(x,y) = (f(x), f(y))` of an
    /// orientation-preserving exchange.
    pub fn act(&self, f: &IetMap) -> Result<RectangleSet> {
        if *f.lattice() != self.lattice {
            return Err(Error::MixedContexts);
        }
        let breaks = f.breakpoints();
        let trans = f.translations();
        let cut = |lo: &GroundNum, hi: &GroundNum| -> Vec<(GroundNum, GroundNum)> {
            // pieces of [lo,hi) refined against f's source partition, mapped
            let mut out = Vec::new();
            for (i, t) in trans.iter().enumerate() {
                let l = if breaks[i].sub_ref(lo).sign() > 0 {
                    breaks[i].clone()
                } else {
                    lo.clone()
                };
                let h = if breaks[i + 1].sub_ref(hi).sign() < 0 {
                    breaks[i + 1].clone()
                } else {
                    hi.clone()
                };
                if l.sub_ref(&h).sign() < 0 {
                    out.push((l.add_ref(t), h.add_ref(t)));
                }
            }
            out
        };
        let mut rects = Vec::new();
        for ((xl, xh), (yl, yh)) in self.rectangles() {
            let xs = cut(&xl, &xh);
            let ys = cut(&yl, &yh);
            for x in &xs {
                for y in &ys {
                    rects.push((x.clone(), y.clone()));
                }
            }
        }
        RectangleSet::from_rects(&self.lattice, rects)
    }

    /// Image under the diagonal action of an exchange with flips (setwise;
    /// reversed pieces map intervals onto intervals).
    pub fn act_flip(&self, f: &FlipMap) -> Result<RectangleSet> {
        if *f.lattice() != self.lattice {
            return Err(Error::MixedContexts);
        }
        let pieces = f.pieces();
        let cut = |lo: &GroundNum, hi: &GroundNum| -> Vec<(GroundNum, GroundNum)> {
            let mut out = Vec::new();
            for p in &pieces {
                let l = if p.src_lo.sub_ref(lo).sign() > 0 {
                    p.src_lo.clone()
                } else {
                    lo.clone()
                };
                let h = if p.src_hi.sub_ref(hi).sign() < 0 {
                    p.src_hi.clone()
                } else {
                    hi.clone()
                };
                if l.sub_ref(&h).sign() < 0 {
                    out.push(p.map_interval(&l, &h));
                }
            }
            out
        };
        let mut rects = Vec::new();
        for ((xl, xh), (yl, yh)) in self.rectangles() {
            let xs = cut(&xl, &xh);
            let ys = cut(&yl, &yh);
            for x in &xs {
                for y in &ys {
                    rects.push((x.clone(), y.clone()));
                }
            }
        }
        RectangleSet::from_rects(&self.lattice, rects)
    }
}

impl fmt::Debug for RectangleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RectangleSet({} rects)", self.rectangle_count())
    }
}

fn canonical_slabs(rects: &[Rect]) -> Vec<Slab> {
    if rects.is_empty() {
        return Vec::new();
    }
    let mut xs: Vec<GroundNum> = Vec::new();
    for ((xl, xh), _) in rects {
        xs.push(xl.clone());
        xs.push(xh.clone());
    }
    xs.sort();
    xs.dedup();
    let mut slabs = Vec::new();
    for w in xs.windows(2) {
        let mut ys = Vec::new();
        for ((xl, xh), (yl, yh)) in rects {
            if xl.sub_ref(&w[0]).sign() <= 0 && w[0].sub_ref(xh).sign() < 0 {
                ys.push((yl.clone(), yh.clone()));
            }
        }
        let ys = normalize(ys);
        if !ys.is_empty() {
            slabs.push(Slab {
                x_lo: w[0].clone(),
                x_hi: w[1].clone(),
                ys,
            });
        }
    }
    merge_slabs(slabs)
}

fn merge_slabs(slabs: Vec<Slab>) -> Vec<Slab> {
    let mut out: Vec<Slab> = Vec::new();
    for s in slabs {
        if let Some(last) = out.last_mut() {
            if last.x_hi == s.x_lo && last.ys == s.ys {
                last.x_hi = s.x_hi;
                continue;
            }
        }
        out.push(s);
    }
    out
}
