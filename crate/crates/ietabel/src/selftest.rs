//! Condensed property suite behind the `selftest` CLI verb.

use crate::flips::{self, FlipMap};
use crate::ground::{rat, Field};
use crate::iet::{self, IetMap};
use crate::lattice::Lattice;
use crate::sampling::{self, Rng};
use crate::tensor2::wedge;

/// Run the quick checks; returns the number of passed checks or a message
/// describing the first failure.
pub fn run() -> Result<usize, String> {
    let mut passed = 0usize;
    let mut check = |name: &str, ok: bool| -> Result<(), String> {
        if ok {
            passed += 1;
            Ok(())
        } else {
            Err(format!("selftest failed: {name}"))
        }
    };

    let field = Field::sqrt2();
    let t = field.theta();
    let lattice = Lattice::from_generators(&field, std::slice::from_ref(&t))
        .map_err(|e| format!("selftest setup: {e}"))?;
    let a = field.integer(2).sub_ref(&t);
    let b = t.sub_ref(&field.one());

    check("theta^2 = 2", t.mul_ref(&t) == field.integer(2))?;
    check("sign(3 - 2 sqrt2) > 0", {
        field.integer(3).sub_ref(&t.scale(&rat(2, 1))).sign() == 1
    })?;

    let mut rng = Rng::new(0xdecade);
    for _ in 0..20 {
        let f = sampling::random_iet(&mut rng, &lattice, 6);
        let g = sampling::random_iet(&mut rng, &lattice, 6);
        let fg = f.compose(&g).map_err(|e| e.to_string())?;
        check(
            "signature is a homomorphism",
            fg.signature() == f.signature().add(&g.signature()),
        )?;
        check(
            "2 eps = -saf",
            f.signature().scale(2) == f.saf().neg(),
        )?;
        check(
            "signature via rectangles agrees",
            f.signature_via_rectangles() == f.signature(),
        )?;
        check(
            "inverse composes to identity",
            f.compose(&f.inverse()).map_err(|e| e.to_string())?.is_identity(),
        )?;
    }

    for _ in 0..5 {
        let f = sampling::random_iet(&mut rng, &lattice, 6);
        let rot = iet::decompose_rotations(&f, f.breakpoints()).map_err(|e| e.to_string())?;
        let maps: Vec<IetMap> = rot
            .iter()
            .map(|r| r.to_map(&lattice))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        check(
            "rotation decomposition recomposes",
            iet::compose_all(&lattice, &maps).map_err(|e| e.to_string())? == f,
        )?;
    }

    let r = FlipMap::reflection(&lattice, &field.zero(), &b.scale(&rat(2, 1)))
        .map_err(|e| e.to_string())?;
    check(
        "flip signature of a reflection of doubled type vanishes",
        r.eps_flip().is_zero(),
    )?;
    check(
        "psi detects the doubled reflection",
        flips::psi(&r).map_err(|e| e.to_string())?.value
            == wedge(&lattice, &b, &b).map_err(|e| e.to_string())?.mod2(),
    )?;
    for _ in 0..10 {
        let f = sampling::random_flip(&mut rng, &lattice, 5);
        let g = sampling::random_flip(&mut rng, &lattice, 5);
        let fg = f.compose(&g).map_err(|e| e.to_string())?;
        check(
            "flip signature is a homomorphism",
            fg.eps_flip() == f.eps_flip().add(&g.eps_flip()),
        )?;
        let sq = f.compose(&f).map_err(|e| e.to_string())?;
        check(
            "squares land in the derived subgroup",
            flips::in_derived_flip(&sq).map_err(|e| e.to_string())?,
        )?;
    }

    let (tf, tg) = iet::two_transposition_example(&lattice, 10).map_err(|e| e.to_string())?;
    let prod = tg.compose(&tf).map_err(|e| e.to_string())?;
    check(
        "two-transposition product of order 10",
        prod.order().map_err(|e| e.to_string())? == iet::Order::Finite(10),
    )?;

    check("example a, b stay positive", a.sign() > 0 && b.sign() > 0)?;
    Ok(passed)
}
