//! Deterministic SVG rendering of element graphs and their inversion sets.
//!
//! Source intervals run along the x-axis, arrival intervals along the
//! (upward) y-axis; inversion rectangles are shaded behind the graph.  The
//! output depends only on the element, never on time or environment.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::ground::{GroundNum, Rat};
use crate::textio::Element;

const VIEW: i64 = 1000;
const MARGIN: i64 = 20;
const SPAN: i64 = VIEW - 2 * MARGIN;

/// Map a value of `[0,1]` to a fixed-point viewport coordinate string with
/// three decimals (floor rounding, so the output is reproducible).
fn coord(x: &GroundNum) -> String {
    // (MARGIN + x * SPAN) * 1000, floored
    let scaled = x.scale(&Rat::from(BigInt::from(SPAN * 1000)));
    let milli = scaled.floor().to_i64().unwrap_or(0) + MARGIN * 1000;
    format!("{}.{:03}", milli / 1000, (milli % 1000).unsigned_abs())
}

fn coord_y(y: &GroundNum) -> String {
    // flip: viewport y grows downward
    let scaled = y.scale(&Rat::from(BigInt::from(SPAN * 1000)));
    let milli = scaled.floor().to_i64().unwrap_or(0) + MARGIN * 1000;
    let flipped = VIEW * 1000 - milli;
    format!("{}.{:03}", flipped / 1000, (flipped % 1000).unsigned_abs())
}

/// Render the graph of the element and its inversion set.
pub fn render(e: &Element) -> String {
    let flip = e.as_flip();
    let lattice = flip.lattice().clone();
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"0 0 {VIEW} {VIEW}\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{VIEW}\" height=\"{VIEW}\" fill=\"#ffffff\"/>\n"
    ));
    // inversion rectangles
    let inv = match e {
        Element::Iet(f) => f.inversion_rectangles(),
        Element::Flip(f) => f.inversion_rectangles(),
    };
    for ((xl, xh), (yl, yh)) in inv.rectangles() {
        let x = coord(&xl);
        let y = coord_y(&yh);
        let w = diff(&xh, &xl);
        let h = diff(&yh, &yl);
        out.push_str(&format!(
            "<rect x=\"{x}\" y=\"{y}\" width=\"{w}\" height=\"{h}\" fill=\"#bbbbbb\" fill-opacity=\"0.5\"/>\n"
        ));
    }
    // frame
    out.push_str(&format!(
        "<rect x=\"{m}\" y=\"{m}\" width=\"{s}\" height=\"{s}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n",
        m = MARGIN,
        s = SPAN
    ));
    // graph segments, one per interval
    let breaks = flip.breakpoints();
    let one = lattice.one();
    let _ = one;
    for (i, piece) in flip_pieces(&flip).into_iter().enumerate() {
        let (src_lo, src_hi, img_lo, img_hi, flipped) = piece;
        let _ = i;
        let (y_at_lo, y_at_hi) = if flipped {
            (img_hi.clone(), img_lo.clone())
        } else {
            (img_lo.clone(), img_hi.clone())
        };
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#1040c0\" stroke-width=\"2\"/>\n",
            coord(&src_lo),
            coord_y(&y_at_lo),
            coord(&src_hi),
            coord_y(&y_at_hi),
        ));
    }
    // breakpoint ticks
    for b in breaks {
        let x = coord(b);
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#888888\" stroke-width=\"1\"/>\n",
            VIEW - MARGIN,
            VIEW - MARGIN + 6
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn diff(hi: &GroundNum, lo: &GroundNum) -> String {
    let d = hi.sub_ref(lo).scale(&Rat::from(BigInt::from(SPAN * 1000)));
    let milli = d.floor().to_i64().unwrap_or(0);
    format!("{}.{:03}", milli / 1000, (milli % 1000).unsigned_abs())
}

fn flip_pieces(
    f: &crate::flips::FlipMap,
) -> Vec<(GroundNum, GroundNum, GroundNum, GroundNum, bool)> {
    // reconstruct piece data from the public description
    let breaks = f.breakpoints();
    let lengths = f.lengths();
    let tau = f.tau();
    let signs = f.signs();
    let n = tau.len();
    let mut inv = vec![0usize; n];
    for (i, &t) in tau.iter().enumerate() {
        inv[t] = i;
    }
    let mut astart = Vec::with_capacity(n);
    let mut acc = f.lattice().zero();
    for k in 0..n {
        astart.push(acc.clone());
        acc = acc.add_ref(&lengths[inv[k]]);
    }
    (0..n)
        .map(|i| {
            (
                breaks[i].clone(),
                breaks[i + 1].clone(),
                astart[tau[i]].clone(),
                astart[tau[i]].add_ref(&lengths[i]),
                signs[i],
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flips::FlipMap;
    use crate::ground::Field;
    use crate::iet::IetMap;
    use crate::lattice::Lattice;

    #[test]
    fn deterministic_output() {
        let field = Field::sqrt2();
        let t = field.theta();
        let l = Lattice::from_generators(&field, std::slice::from_ref(&t)).unwrap();
        let a = field.integer(2).sub_ref(&t);
        let b = t.sub_ref(&field.one());
        let f = IetMap::restricted_rotation(&l, &a, &b, &field.zero()).unwrap();
        let s1 = render(&Element::Iet(f.clone()));
        let s2 = render(&Element::Iet(f));
        assert_eq!(s1, s2);
        assert!(s1.starts_with("<svg"));
        assert!(s1.ends_with("</svg>\n"));
        let r = FlipMap::reflection(&l, &field.zero(), &b).unwrap();
        let s3 = render(&Element::Flip(r));
        assert!(s3.contains("fill-opacity"));
    }
}
