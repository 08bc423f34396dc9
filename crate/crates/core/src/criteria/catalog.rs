//! The printed criteria, transcribed term by term.

use num_rational::Rational64;

use super::origin::{Factor, Origin};
use super::{CriterionSpec, Family, Scope};
use crate::expr::Poly;
use crate::moments::MomentBasis;

fn w(k: u8, l: u8) -> Poly {
    Poly::moment(k, l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Beam {
    S,
    I,
}

impl Beam {
    fn tag(self) -> &'static str {
        match self {
            Beam::S => "s",
            Beam::I => "i",
        }
    }

    fn factor(self) -> Factor {
        match self {
            Beam::S => Factor::Signal,
            Beam::I => Factor::Idler,
        }
    }
}

/// Marginal moment `<W_a^k>`.
fn m(a: Beam, k: u8) -> Poly {
    match a {
        Beam::S => w(k, 0),
        Beam::I => w(0, k),
    }
}

fn s(k: u8) -> Poly {
    w(k, 0)
}

fn i(k: u8) -> Poly {
    w(0, k)
}

fn half(p: Poly) -> Poly {
    p.scale(Rational64::new(1, 2))
}

use Factor::{Idler as Pi, Joint as Psi, Signal as Ps};

struct Builder {
    specs: Vec<CriterionSpec>,
}

impl Builder {
    fn push(&mut self, id: String, family: Family, scope: Scope, expr: Poly, origin: Option<Origin>) {
        self.specs.push(CriterionSpec {
            id,
            family,
            scope,
            basis: MomentBasis::Intensity,
            expr,
            origin,
            redundant: family == Family::AppendixA,
        });
    }

    fn get(&self, id: &str) -> Poly {
        self.specs.iter().find(|c| c.id == id).unwrap_or_else(|| panic!("{id} defined before use")).expr.clone()
    }
}

fn e_family(b: &mut Builder) {
    // <Ws^k Wi^l (Ws - Wi)^2>
    let e1 = |k: u8, l: u8| &(&w(k + 2, l) + &w(k, l + 2)) - &w(k + 1, l + 1).scale_int(2);
    for (k, l) in [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1), (3, 0), (0, 3), (2, 1), (1, 2)] {
        b.push(format!("E_{k}{l}1"), Family::E, Scope::Global, e1(k, l), Some(Origin::DifferencePower { k, l, m: 1 }));
    }
    let e2 = |k: u8, l: u8| {
        &(&(&(&w(k + 4, l) - &w(k + 3, l + 1).scale_int(4)) + &w(k + 2, l + 2).scale_int(6))
            - &w(k + 1, l + 3).scale_int(4))
            + &w(k, l + 4)
    };
    for (k, l) in [(0, 0), (1, 0), (0, 1)] {
        b.push(format!("E_{k}{l}2"), Family::E, Scope::Global, e2(k, l), Some(Origin::DifferencePower { k, l, m: 2 }));
    }
}

fn majorization_sums(b: &mut Builder) {
    let pair = |x: (u8, u8), y: (u8, u8)| &w(x.0, x.1) + &w(y.0, y.1);
    let rows: [(&str, Poly, [u8; 2], [u8; 2]); 8] = [
        ("Emaj_20_11", &pair((2, 0), (0, 2)) - &w(1, 1).scale_int(2), [2, 0], [1, 1]),
        ("Emaj_30_21", &pair((3, 0), (0, 3)) - &pair((2, 1), (1, 2)), [3, 0], [2, 1]),
        ("Emaj_40_31", &pair((4, 0), (0, 4)) - &pair((3, 1), (1, 3)), [4, 0], [3, 1]),
        ("Emaj_40_22", &pair((4, 0), (0, 4)) - &w(2, 2).scale_int(2), [4, 0], [2, 2]),
        ("Emaj_31_22", &pair((3, 1), (1, 3)) - &w(2, 2).scale_int(2), [3, 1], [2, 2]),
        ("Emaj_50_41", &pair((5, 0), (0, 5)) - &pair((4, 1), (1, 4)), [5, 0], [4, 1]),
        ("Emaj_50_32", &pair((5, 0), (0, 5)) - &pair((3, 2), (2, 3)), [5, 0], [3, 2]),
        ("Emaj_41_32", &pair((4, 1), (1, 4)) - &pair((3, 2), (2, 3)), [4, 1], [3, 2]),
    ];
    for (id, expr, major, minor) in rows {
        b.push(id.into(), Family::Emaj, Scope::Global, expr, Some(Origin::majorization(&major, &minor, &[Psi])));
    }
}

fn b_family(b: &mut Builder) {
    let rows: [(&str, Poly, [u8; 2], [u8; 2]); 6] = [
        ("B_20_11", &(&s(2) + &i(2)) - &(&s(1) * &i(1)).scale_int(2), [2, 0], [1, 1]),
        ("B_30_21", &(&s(3) + &i(3)) - &(&(&s(2) * &i(1)) + &(&s(1) * &i(2))), [3, 0], [2, 1]),
        ("B_40_31", &(&s(4) + &i(4)) - &(&(&s(3) * &i(1)) + &(&s(1) * &i(3))), [4, 0], [3, 1]),
        ("B_31_22", &(&(&s(3) * &i(1)) + &(&s(1) * &i(3))) - &(&s(2) * &i(2)).scale_int(2), [3, 1], [2, 2]),
        ("B_50_41", &(&s(5) + &i(5)) - &(&(&s(4) * &i(1)) + &(&s(1) * &i(4))), [5, 0], [4, 1]),
        (
            "B_41_32",
            &(&(&s(4) * &i(1)) + &(&s(1) * &i(4))) - &(&(&s(3) * &i(2)) + &(&s(2) * &i(3))),
            [4, 1],
            [3, 2],
        ),
    ];
    for (id, expr, major, minor) in rows {
        b.push(id.into(), Family::B, Scope::Local, expr, Some(Origin::majorization(&major, &minor, &[Ps, Pi])));
    }
}

fn l_family(b: &mut Builder) {
    for a in [Beam::S, Beam::I] {
        let rows: [(&str, Poly, [u8; 2], [u8; 2]); 6] = [
            ("20_11", &m(a, 2) - &(&m(a, 1) * &m(a, 1)), [2, 0], [1, 1]),
            ("30_21", &m(a, 3) - &(&m(a, 2) * &m(a, 1)), [3, 0], [2, 1]),
            ("40_31", &m(a, 4) - &(&m(a, 3) * &m(a, 1)), [4, 0], [3, 1]),
            ("31_22", &(&m(a, 3) * &m(a, 1)) - &(&m(a, 2) * &m(a, 2)), [3, 1], [2, 2]),
            ("50_41", &m(a, 5) - &(&m(a, 4) * &m(a, 1)), [5, 0], [4, 1]),
            ("41_32", &(&m(a, 4) * &m(a, 1)) - &(&m(a, 3) * &m(a, 2)), [4, 1], [3, 2]),
        ];
        for (idx, expr, major, minor) in rows {
            let f = a.factor();
            b.push(
                format!("aL_{idx}.{}", a.tag()),
                Family::L,
                Scope::Local,
                expr,
                Some(Origin::majorization(&major, &minor, &[f, f])),
            );
        }
    }
}

fn local_triple_family(b: &mut Builder) {
    for a in [Beam::S, Beam::I] {
        let f = a.factor();
        let (a1, a2) = (m(a, 1), m(a, 2));
        let s1i1 = &s(1) * &i(1);
        let b210 = &(&(&(&a2 * &a1) + &(&s(2) * &i(1))) + &(&i(2) * &s(1))) - &(&a1 * &s1i1).scale_int(3);
        b.push(
            format!("aB_210_111.{}", a.tag()),
            Family::B,
            Scope::Local,
            b210,
            Some(Origin::majorization(&[2, 1, 0], &[1, 1, 1], &[Ps, Pi, f])),
        );
        let a1sq = &a1 * &a1;
        let b220 = &(&(&(&(&a2 * &a2) + &(&s(2) * &i(2)).scale_int(2)) + &(&a1sq * &a2))
            - &(&a1sq * &(&s(2) + &i(2))))
            - &(&a2 * &s1i1).scale_int(2);
        b.push(
            format!("aB_220_211.{}", a.tag()),
            Family::B,
            Scope::Local,
            b220,
            Some(Origin::majorization(&[2, 2, 0], &[2, 1, 1], &[Ps, Pi, f])),
        );
        let b2110 = &(&(&a1sq * &(&s(2) + &i(2))) + &(&a2 * &s1i1).scale_int(2)) - &(&a1sq * &s1i1).scale_int(4);
        b.push(
            format!("aB_2110_1111.{}", a.tag()),
            Family::B,
            Scope::Local,
            b2110,
            Some(Origin::majorization(&[2, 1, 1, 0], &[1, 1, 1, 1], &[Ps, Pi, f, f])),
        );
    }
    let s1i1 = &s(1) * &i(1);
    let expr = &(&(&(&s(2) * &(&i(1) * &i(1))) + &(&(&s(1) * &s(1)) * &i(2))) + &(&(&s(2) + &i(2)) * &s1i1).scale_int(2))
        - &(&s1i1 * &s1i1).scale_int(6);
    b.push(
        "B_2110_1111".into(),
        Family::B,
        Scope::Local,
        expr,
        Some(Origin::majorization(&[2, 1, 1, 0], &[1, 1, 1, 1], &[Ps, Pi, Ps, Pi])),
    );
}

fn d_family(b: &mut Builder) {
    let w11 = w(1, 1);
    let cross3 = &w(2, 1) + &w(1, 2);
    let marg2 = &s(2) + &i(2);
    for a in [Beam::S, Beam::I] {
        let f = a.factor();
        let (a1, a2) = (m(a, 1), m(a, 2));
        let d210 = &(&(&(&(&a2 * &a1).scale_int(2) + &cross3) + &(&s(2) * &i(1))) + &(&s(1) * &i(2)))
            - &(&a1 * &w11).scale_int(6);
        b.push(
            format!("aD_210_111.{}", a.tag()),
            Family::D,
            Scope::Global,
            d210,
            Some(Origin::majorization(&[2, 1, 0], &[1, 1, 1], &[Psi, f])),
        );
        let d220 = &(&(&(&(&a2 * &a2) + &w(2, 2)) + &(&s(2) * &i(2))) - &(&a1 * &cross3)) - &(&a2 * &w11);
        b.push(
            format!("aD_220_211.{}", a.tag()),
            Family::D,
            Scope::Global,
            d220,
            Some(Origin::majorization(&[2, 2, 0], &[2, 1, 1], &[Psi, f])),
        );
    }
    let d2110 = &(&(&cross3 * &(&s(1) + &i(1))) + &(&w11 * &marg2)) - &(&w11 * &w11).scale_int(6);
    b.push(
        "D_2110_1111".into(),
        Family::D,
        Scope::Global,
        d2110,
        Some(Origin::majorization(&[2, 1, 1, 0], &[1, 1, 1, 1], &[Psi, Psi])),
    );
    let d2200 = &(&(&marg2 * &marg2) + &w(2, 2).scale_int(2)) - &(&w11 * &w11).scale_int(6);
    b.push(
        "D_2200_1111".into(),
        Family::D,
        Scope::Global,
        d2200,
        Some(Origin::majorization(&[2, 2, 0, 0], &[1, 1, 1, 1], &[Psi, Psi])),
    );
    let d4000 = &(&s(4) + &i(4)) - &(&w11 * &w11).scale_int(2);
    b.push(
        "D_4000_1111".into(),
        Family::D,
        Scope::Global,
        d4000,
        Some(Origin::majorization(&[4, 0, 0, 0], &[1, 1, 1, 1], &[Psi, Psi])),
    );
}

fn t_family(b: &mut Builder) {
    let w11 = w(1, 1);
    let cross3 = &w(2, 1) + &w(1, 2);
    let marg1 = &s(1) + &i(1);
    let marg2 = &s(2) + &i(2);
    let s1i1 = &s(1) * &i(1);
    let sq = |p: &Poly| p * p;
    for a in [Beam::S, Beam::I] {
        let f = a.factor();
        let (a1, a2) = (m(a, 1), m(a, 2));
        let t2100 = &(&(&(&(&(&a2 * &a1).scale_int(6) + &cross3) + &(&s(2) * &i(1)).scale_int(2))
            + &(&s(1) * &i(2)).scale_int(2))
            - &(&a1 * &w11).scale_int(6))
            - &(&sq(&a1) * &marg1).scale_int(3);
        b.push(
            format!("aT_2100_1110.{}", a.tag()),
            Family::T,
            Scope::Global,
            t2100,
            Some(Origin::majorization(&[2, 1, 0, 0], &[1, 1, 1, 0], &[Psi, f, f])),
        );
        let t2200 = &(&(&(&(&(&sq(&a2).scale_int(6) + &w(2, 2).scale_int(2)) + &(&s(2) * &i(2)).scale_int(4))
            - &(&sq(&a1) * &a2).scale_int(2))
            - &(&sq(&a1) * &marg2))
            - &(&a1 * &cross3).scale_int(2))
            - &(&a2 * &(&w11 + &s1i1)).scale_int(2);
        b.push(
            format!("aT_2200_2110.{}", a.tag()),
            Family::T,
            Scope::Global,
            t2200,
            Some(Origin::majorization(&[2, 2, 0, 0], &[2, 1, 1, 0], &[Psi, f, f])),
        );
        let t2110 = &(&(&(&(&a2 * &sq(&a1)).scale_int(2) + &(&a1 * &cross3).scale_int(2)) + &(&sq(&a1) * &marg2))
            + &(&a2 * &(&w11 + &s1i1)).scale_int(2))
            - &(&sq(&a1) * &w11).scale_int(12);
        b.push(
            format!("aT_2110_1111.{}", a.tag()),
            Family::T,
            Scope::Global,
            t2110,
            Some(Origin::majorization(&[2, 1, 1, 0], &[1, 1, 1, 1], &[Psi, f, f])),
        );
    }
    let scheme = [Psi, Ps, Pi];
    let t2100 = &(&(&(&(&(&(&(&s(2) * &s(1)).scale_int(2) + &(&i(2) * &i(1)).scale_int(2)) + &cross3)
        + &(&s(2) * &i(1)).scale_int(3))
        + &(&s(1) * &i(2)).scale_int(3))
        - &(&marg1 * &w11).scale_int(3))
        - &(&sq(&s(1)) * &i(1)).scale_int(3))
        - &(&s(1) * &sq(&i(1))).scale_int(3);
    b.push(
        "T_2100_1110".into(),
        Family::T,
        Scope::Global,
        t2100,
        Some(Origin::majorization(&[2, 1, 0, 0], &[1, 1, 1, 0], &scheme)),
    );
    let w11_2 = &w11 + &s1i1.scale_int(2);
    let t2200 = &(&(&(&(&(&(&sq(&s(2)).scale_int(2) + &sq(&i(2)).scale_int(2)) + &w(2, 2).scale_int(2))
        + &(&s(2) * &i(2)).scale_int(6))
        - &(&marg1 * &cross3))
        - &(&marg2 * &w11_2))
        - &(&s(2) * &sq(&i(1))))
        - &(&sq(&s(1)) * &i(2));
    b.push(
        "T_2200_2110".into(),
        Family::T,
        Scope::Global,
        t2200,
        Some(Origin::majorization(&[2, 2, 0, 0], &[2, 1, 1, 0], &scheme)),
    );
    let t2110 = &(&(&(&(&marg1 * &cross3) + &(&marg2 * &w11_2)) + &(&s(2) * &sq(&i(1)))) + &(&sq(&s(1)) * &i(2)))
        - &(&s1i1 * &w11).scale_int(12);
    b.push(
        "T_2110_1111".into(),
        Family::T,
        Scope::Global,
        t2110,
        Some(Origin::majorization(&[2, 1, 1, 0], &[1, 1, 1, 1], &scheme)),
    );
}

fn epoly_family(b: &mut Builder) {
    let ms = s(1);
    let ms2 = &ms * &ms;
    // <Ws^k Wi^l (Ws - <Ws>)^2>
    let base = |k: u8, l: u8| &(&w(k + 2, l) + &(&ms2 * &w(k, l))) - &(&ms * &w(k + 1, l)).scale_int(2);
    let mut signal: Vec<(String, Poly, Scope, (u8, u8, u8, u8))> = Vec::new();
    for l in 1..=3u8 {
        signal.push((format!("E_0{l}10"), base(0, l), Scope::Local, (0, l, 1, 0)));
    }
    for l in 1..=2u8 {
        signal.push((format!("E_1{l}10"), base(1, l), Scope::Local, (1, l, 1, 0)));
    }
    signal.push(("E_2110".into(), base(2, 1), Scope::Local, (2, 1, 1, 0)));
    let find = |v: &[(String, Poly, Scope, (u8, u8, u8, u8))], id: &str| v.iter().find(|x| x.0 == id).unwrap().1.clone();
    let l20 = &s(2) - &ms2;
    let l30 = &s(3) - &(&s(2) * &ms);
    let l40 = &s(4) - &(&s(3) * &ms);
    let l50 = &s(5) - &(&s(4) * &ms);
    let e0120 =
        &(&find(&signal, "E_2110") + &(&ms2 * &find(&signal, "E_0110"))) - &(&ms * &find(&signal, "E_1110")).scale_int(2);
    signal.push(("E_0120".into(), e0120, Scope::Local, (0, 1, 2, 0)));
    let e1010 = &l30 - &(&ms * &l20);
    let mi = i(1);
    let e1011 = &(&find(&signal, "E_1210") + &(&(&mi * &mi) * &e1010)) - &(&mi * &find(&signal, "E_1110")).scale_int(2);
    signal.push(("E_1011".into(), e1011, Scope::Global, (1, 0, 1, 1)));
    signal.push(("E_1010".into(), e1010, Scope::Local, (1, 0, 1, 0)));
    signal.push(("E_2010".into(), &l40 - &(&ms * &l30), Scope::Local, (2, 0, 1, 0)));
    signal.push(("E_3010".into(), &l50 - &(&ms * &l40), Scope::Local, (3, 0, 1, 0)));
    signal.push((
        "E_0020".into(),
        &(&l40 - &(&ms * &l30).scale_int(3)) + &(&ms2 * &l20).scale_int(3),
        Scope::Local,
        (0, 0, 2, 0),
    ));
    signal.push((
        "E_1020".into(),
        &(&(&l50 - &(&ms * &l40).scale_int(3)) + &(&ms2 * &l30).scale_int(3)) - &(&(&ms2 * &ms) * &l20),
        Scope::Local,
        (1, 0, 2, 0),
    ));
    let e0011 = &(&find(&signal, "E_0210") + &(&(&mi * &mi) * &l20)) - &(&mi * &find(&signal, "E_0110")).scale_int(2);
    for (id, expr, scope, (k, l, mm, n)) in &signal {
        b.push(id.clone(), Family::Epoly, *scope, expr.clone(), Some(Origin::CenteredPower { k: *k, l: *l, m: *mm, n: *n }));
    }
    for (id, expr, scope, (k, l, mm, n)) in &signal {
        let d = id.as_bytes();
        let mirrored = format!("E_{}{}{}{}", d[3] as char, d[2] as char, d[5] as char, d[4] as char);
        b.push(mirrored, Family::Epoly, *scope, expr.swapped(), Some(Origin::CenteredPower { k: *l, l: *k, m: *n, n: *mm }));
    }
    b.push("E_0011".into(), Family::Epoly, Scope::Global, e0011, Some(Origin::CenteredPower { k: 0, l: 0, m: 1, n: 1 }));
}

fn mc_family(b: &mut Builder) {
    let w11sq = &w(1, 1) * &w(1, 1);
    b.push("M_1100".into(), Family::M, Scope::Global, &w(2, 2) - &w11sq, Some(Origin::Gram { basis: vec![(1, 1), (0, 0)] }));
    b.push(
        "M_1001".into(),
        Family::M,
        Scope::Global,
        &(&s(2) * &i(2)) - &w11sq,
        Some(Origin::Gram { basis: vec![(1, 0), (0, 1)] }),
    );
    let s1i1 = &s(1) * &i(1);
    let m3 = &(&(&(&(&s(2) * &i(2)) + &(&w(1, 1) * &s1i1).scale_int(2)) - &w11sq) - &(&s(2) * &(&i(1) * &i(1))))
        - &(&(&s(1) * &s(1)) * &i(2));
    b.push("M_001001".into(), Family::M, Scope::Global, m3, Some(Origin::Gram { basis: vec![(0, 0), (1, 0), (0, 1)] }));
    let cs = [
        ("C_00_22", &w(2, 2) - &w11sq, (0, 0), (2, 2)),
        ("C_10_12", &(&w(1, 2) * &s(1)) - &w11sq, (1, 0), (1, 2)),
        ("C_20_02", &(&s(2) * &i(2)) - &w11sq, (2, 0), (0, 2)),
        ("C_21_01", &(&w(2, 1) * &i(1)) - &w11sq, (2, 1), (0, 1)),
    ];
    for (id, expr, f2, g2) in cs {
        b.push(id.into(), Family::C, Scope::Global, expr, Some(Origin::CauchySchwarz { f2, g2 }));
    }
}

fn n_family(b: &mut Builder) {
    let n = |k: u8, l: u8| Poly::moment(k, l);
    // sum over both beams of a marginal polynomial with coefficients for <n_a^1>..<n_a^5>
    let marg = |c: [i64; 5]| {
        let mut acc = Poly::zero();
        for (j, &cj) in c.iter().enumerate() {
            let k = j as u8 + 1;
            acc = &acc + &(&n(k, 0) + &n(0, k)).scale_int(cj);
        }
        acc
    };
    let rows: [(&str, Poly); 6] = [
        ("N_11", &marg([-1, 1, 0, 0, 0]) - &n(1, 1).scale_int(2)),
        ("N_21", &(&marg([1, -2, 1, 0, 0]) - &n(2, 1)) - &n(1, 2)),
        ("N_31", &(&(&marg([-3, 5, -3, 1, 0]) - &n(1, 1).scale_int(4)) - &n(3, 1)) - &n(1, 3)),
        ("N_22", &(&marg([-4, 7, -4, 1, 0]) - &n(1, 1).scale_int(2)) - &n(2, 2).scale_int(2)),
        ("N_41", &(&(&marg([-5, 2, 6, -4, 1]) - &n(1, 1).scale_int(12)) - &n(4, 1)) - &n(1, 4)),
        ("N_32", &(&marg([7, -17, 15, -6, 1]) - &n(3, 2)) - &n(2, 3)),
    ];
    for (id, expr) in rows {
        b.specs.push(CriterionSpec {
            id: id.into(),
            family: Family::N,
            scope: Scope::Global,
            basis: MomentBasis::PhotonNumber,
            expr,
            origin: None,
            redundant: false,
        });
    }
}

fn appendix_a(b: &mut Builder) {
    let e = |b: &Builder, id: &str| b.get(id);
    let l = |b: &Builder, idx: &str, a: Beam| b.get(&format!("aL_{idx}.{}", a.tag()));
    let ls = |b: &Builder, idx: &str| &l(b, idx, Beam::S) + &l(b, idx, Beam::I);
    let e3 = |b: &Builder| &e(b, "E_101") + &e(b, "E_011");
    let e4 = |b: &Builder| &(&e(b, "E_201") + &e(b, "E_111")) + &e(b, "E_021");
    let mut rows: Vec<(String, Poly, Origin)> = Vec::new();
    let pairs: [(&str, &str, &str, [u8; 3], [u8; 3]); 4] = [
        ("200_110", "20_11", "B_20_11", [2, 0, 0], [1, 1, 0]),
        ("300_210", "30_21", "B_30_21", [3, 0, 0], [2, 1, 0]),
        ("400_310", "40_31", "B_40_31", [4, 0, 0], [3, 1, 0]),
        ("310_220", "31_22", "B_31_22", [3, 1, 0], [2, 2, 0]),
    ];
    for a in [Beam::S, Beam::I] {
        let f = a.factor();
        for (sup, lidx, bid, major, minor) in pairs {
            rows.push((
                format!("aB_{sup}.{}", a.tag()),
                &l(b, lidx, a) + &e(b, bid),
                Origin::majorization(&major, &minor, &[Ps, Pi, f]),
            ));
        }
    }
    let four: [(&str, &str, &str, [u8; 4], [u8; 4]); 4] = [
        ("2000_1100", "20_11", "B_20_11", [2, 0, 0, 0], [1, 1, 0, 0]),
        ("3000_2100", "30_21", "B_30_21", [3, 0, 0, 0], [2, 1, 0, 0]),
        ("4000_3100", "40_31", "B_40_31", [4, 0, 0, 0], [3, 1, 0, 0]),
        ("3100_2200", "31_22", "B_31_22", [3, 1, 0, 0], [2, 2, 0, 0]),
    ];
    for (sup, lidx, bid, major, minor) in four {
        for a in [Beam::S, Beam::I] {
            let f = a.factor();
            rows.push((
                format!("aB_{sup}.{}", a.tag()),
                &l(b, lidx, a).scale_int(2) + &e(b, bid),
                Origin::majorization(&major, &minor, &[Ps, Pi, f, f]),
            ));
        }
        rows.push((
            format!("B_{sup}"),
            &ls(b, lidx) + &e(b, bid).scale_int(2),
            Origin::majorization(&major, &minor, &[Ps, Pi, Ps, Pi]),
        ));
    }
    for a in [Beam::S, Beam::I] {
        let f = a.factor();
        rows.push((
            format!("aB_2100_1110.{}", a.tag()),
            &(&m(a, 1) * &l(b, "20_11", a)) + &b.get(&format!("aB_210_111.{}", a.tag())),
            Origin::majorization(&[2, 1, 0, 0], &[1, 1, 1, 0], &[Ps, Pi, f, f]),
        ));
        rows.push((
            format!("aB_2200_2110.{}", a.tag()),
            &(&m(a, 2) * &l(b, "20_11", a)) + &b.get(&format!("aB_220_211.{}", a.tag())),
            Origin::majorization(&[2, 2, 0, 0], &[2, 1, 1, 0], &[Ps, Pi, f, f]),
        ));
    }
    rows.push((
        "B_2100_1110".into(),
        &b.get("aB_210_111.s") + &b.get("aB_210_111.i"),
        Origin::majorization(&[2, 1, 0, 0], &[1, 1, 1, 0], &[Ps, Pi, Ps, Pi]),
    ));
    rows.push((
        "B_2200_2110".into(),
        &b.get("aB_220_211.s") + &b.get("aB_220_211.i"),
        Origin::majorization(&[2, 2, 0, 0], &[2, 1, 1, 0], &[Ps, Pi, Ps, Pi]),
    ));

    // two moments per product
    for a in [Beam::S, Beam::I] {
        let f = a.factor();
        let t = a.tag();
        let sch = [Psi, f];
        rows.push((
            format!("aD_200_110.{t}"),
            &l(b, "20_11", a) + &half(&e(b, "E_001") + &e(b, "B_20_11")),
            Origin::majorization(&[2, 0, 0], &[1, 1, 0], &sch),
        ));
        rows.push((
            format!("aD_300_210.{t}"),
            &(&l(b, "30_21", a).scale_int(2) + &e3(b)) + &e(b, "B_30_21"),
            Origin::majorization(&[3, 0, 0], &[2, 1, 0], &sch),
        ));
        rows.push((
            format!("aD_400_310.{t}"),
            &(&l(b, "40_31", a).scale_int(2) + &e4(b)) + &e(b, "B_40_31"),
            Origin::majorization(&[4, 0, 0], &[3, 1, 0], &sch),
        ));
        rows.push((
            format!("aD_310_220.{t}"),
            &(&l(b, "31_22", a).scale_int(2) + &e(b, "E_111")) + &e(b, "B_31_22"),
            Origin::majorization(&[3, 1, 0], &[2, 2, 0], &sch),
        ));
    }
    let dd = [Psi, Psi];
    rows.push((
        "D_2000_1100".into(),
        &(&ls(b, "20_11") + &e(b, "E_001")) + &e(b, "B_20_11"),
        Origin::majorization(&[2, 0, 0, 0], &[1, 1, 0, 0], &dd),
    ));
    rows.push((
        "D_3000_2100".into(),
        &(&ls(b, "30_21") + &e3(b)) + &e(b, "B_30_21"),
        Origin::majorization(&[3, 0, 0, 0], &[2, 1, 0, 0], &dd),
    ));
    rows.push((
        "D_2100_1110".into(),
        half(&b.get("aD_210_111.s") + &b.get("aD_210_111.i")),
        Origin::majorization(&[2, 1, 0, 0], &[1, 1, 1, 0], &dd),
    ));
    rows.push((
        "D_4000_3100".into(),
        &(&ls(b, "40_31") + &e4(b)) + &e(b, "B_40_31"),
        Origin::majorization(&[4, 0, 0, 0], &[3, 1, 0, 0], &dd),
    ));
    rows.push((
        "D_3100_2200".into(),
        &(&ls(b, "31_22") + &e(b, "E_111")) + &e(b, "B_31_22"),
        Origin::majorization(&[3, 1, 0, 0], &[2, 2, 0, 0], &dd),
    ));
    rows.push((
        "D_2200_2110".into(),
        &b.get("aD_220_211.s") + &b.get("aD_220_211.i"),
        Origin::majorization(&[2, 2, 0, 0], &[2, 1, 1, 0], &dd),
    ));

    // three moments per product
    let tri: [(&str, &str, Poly, &str, [u8; 4], [u8; 4]); 4] = [
        ("2000_1100", "20_11", e(b, "E_001"), "B_20_11", [2, 0, 0, 0], [1, 1, 0, 0]),
        ("3000_2100", "30_21", e3(b), "B_30_21", [3, 0, 0, 0], [2, 1, 0, 0]),
        ("4000_3100", "40_31", e4(b), "B_40_31", [4, 0, 0, 0], [3, 1, 0, 0]),
        ("3100_2200", "31_22", e(b, "E_111"), "B_31_22", [3, 1, 0, 0], [2, 2, 0, 0]),
    ];
    for (sup, lidx, ecomb, bid, major, minor) in tri {
        for a in [Beam::S, Beam::I] {
            let f = a.factor();
            rows.push((
                format!("aT_{sup}.{}", a.tag()),
                &(&l(b, lidx, a).scale_int(6) + &ecomb) + &e(b, bid).scale_int(2),
                Origin::majorization(&major, &minor, &[Psi, f, f]),
            ));
        }
        let expr = if sup == "2000_1100" {
            &ls(b, lidx) + &half(&ecomb + &e(b, bid).scale_int(3))
        } else {
            &(&ls(b, lidx).scale_int(2) + &ecomb) + &e(b, bid).scale_int(3)
        };
        rows.push((format!("T_{sup}"), expr, Origin::majorization(&major, &minor, &[Psi, Ps, Pi])));
    }

    for (id, expr, origin) in rows {
        let local = origin_is_local(&origin);
        b.push(id, Family::AppendixA, if local { Scope::Local } else { Scope::Global }, expr, Some(origin));
    }
}

fn origin_is_local(o: &Origin) -> bool {
    match o {
        Origin::Majorization { averaging, .. } => !averaging.contains(&Factor::Joint),
        _ => false,
    }
}

/// All moment-based criteria in catalog order.
pub fn moment_criteria() -> Vec<CriterionSpec> {
    let mut b = Builder { specs: Vec::new() };
    e_family(&mut b);
    majorization_sums(&mut b);
    b_family(&mut b);
    l_family(&mut b);
    local_triple_family(&mut b);
    d_family(&mut b);
    t_family(&mut b);
    epoly_family(&mut b);
    mc_family(&mut b);
    n_family(&mut b);
    appendix_a(&mut b);
    b.specs
}
