//! The generic assembler against the closed-form constraint rows of each
//! family, written out term by term.

use tpw_core::halfderiv::assemble;
use tpw_core::lattice::{box_points_lex, AdditiveMap, BiadditiveForm, GroupElement, Pairing, Window};
use tpw_core::{AlgebraSpec, Scalar};

fn dense(m: &tpw_core::exactlin::SparseMatrix) -> Vec<Vec<Scalar>> {
    let mut out = vec![vec![Scalar::zero(); m.n_cols()]; m.n_rows()];
    for (r, c, v) in m.entries() {
        out[*r][*c] = v.clone();
    }
    out
}

fn block_rows(g: &AdditiveMap, f: &BiadditiveForm, a: &GroupElement, n: u32, delta: &Scalar) -> Vec<Vec<Scalar>> {
    let pts = box_points_lex(a.rank(), n);
    let pos = |p: &GroupElement| pts.iter().position(|q| q == p).unwrap();
    let c = |x: &GroupElement, y: &GroupElement| f.eval(x, y).unwrap() + g.eval(&(x - y)).unwrap();
    let inv = delta.recip().unwrap();
    let mut rows = Vec::new();
    for x in &pts {
        for y in &pts {
            let s = x + y;
            if s.norm() > n as u64 {
                continue;
            }
            let mut row = vec![Scalar::zero(); pts.len()];
            row[pos(&s)] += &(&inv * c(x, y));
            row[pos(x)] -= &c(&(a + x), y);
            row[pos(y)] -= &c(x, &(a + y));
            rows.push(row);
        }
    }
    rows
}

#[test]
fn block_rows_match_closed_form() {
    let n = 2;
    let w = Window::new(n, 1).unwrap();
    let cases = [
        (AdditiveMap::from_ints(&[-1, 0]), AdditiveMap::from_ints(&[0, 1])),
        (AdditiveMap::from_ints(&[2, -1]), AdditiveMap::from_ints(&[1, 3])),
    ];
    for (g, h) in cases {
        let spec = AlgebraSpec::block(g.clone(), h).unwrap();
        let (_, f, _) = spec.block_data().unwrap();
        for a in [GroupElement::from([0, 0]), GroupElement::from([1, -1]), GroupElement::from([0, 2])] {
            for delta in [Scalar::new(1, 2), Scalar::one(), Scalar::new(-2, 3)] {
                let sys = assemble(&spec, &a, &w, &delta).unwrap();
                assert_eq!(dense(sys.matrix()), block_rows(&g, f, &a, n, &delta), "a = {a}, δ = {delta}");
            }
        }
    }
    let spec = AlgebraSpec::block_b0();
    let (g, f, _) = spec.block_data().unwrap();
    let a = GroupElement::from([1, 0]);
    let sys = assemble(&spec, &a, &w, &Scalar::new(1, 2)).unwrap();
    assert_eq!(dense(sys.matrix()), block_rows(g, f, &a, n, &Scalar::new(1, 2)));
}

#[test]
fn witt_type_rows_match_closed_form() {
    // [e_x, e_y] = (f(y) - f(x)) e_{x+y} is a Block bracket with g = -f, form 0.
    let f = AdditiveMap::from_ints(&[3]);
    let spec = AlgebraSpec::witt_type(f.clone());
    let g = f.scale(&Scalar::from_int(-1));
    let w = Window::new(3, 1).unwrap();
    for a in -2..=2i64 {
        let a = GroupElement::from([a]);
        let sys = assemble(&spec, &a, &w, &Scalar::new(1, 2)).unwrap();
        assert_eq!(dense(sys.matrix()), block_rows(&g, &BiadditiveForm::zero(1), &a, 3, &Scalar::new(1, 2)));
    }
}

#[test]
fn generalized_witt_rows_match_closed_form() {
    let p = Pairing::from_ints(&[&[1, 2], &[0, -1]]).unwrap();
    let spec = AlgebraSpec::generalized_witt(p.clone());
    let n = 2;
    let w = Window::new(n, 1).unwrap();
    let d = 2;
    let pts = box_points_lex(2, n);
    let col = |x: &GroupElement, r: usize, c: usize| pts.iter().position(|q| q == x).unwrap() * d * d + r * d + c;
    let pe = |i: usize, x: &GroupElement| p.basis_at(i, x);
    for a in [GroupElement::from([0, 0]), GroupElement::from([1, 0]), GroupElement::from([-1, 2])] {
        let delta = Scalar::new(1, 2);
        let inv = delta.recip().unwrap();
        let mut rows = Vec::new();
        for x in &pts {
            for y in &pts {
                let s = x + y;
                if s.norm() > n as u64 {
                    continue;
                }
                let (ax, ay) = (&a + x, &a + y);
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            let mut row = vec![Scalar::zero(); pts.len() * d * d];
                            row[col(&s, k, j)] += &(&inv * pe(i, y));
                            row[col(&s, k, i)] -= &(&inv * pe(j, x));
                            for r in 0..d {
                                if k == j {
                                    row[col(x, r, i)] -= &pe(r, y);
                                }
                                if k == i {
                                    row[col(y, r, j)] += &pe(r, x);
                                }
                            }
                            row[col(x, k, i)] += &pe(j, &ax);
                            row[col(y, k, j)] -= &pe(i, &ay);
                            rows.push(row);
                        }
                    }
                }
            }
        }
        let sys = assemble(&spec, &a, &w, &delta).unwrap();
        assert_eq!(dense(sys.matrix()), rows, "a = {a}");
    }
}

#[test]
fn block_solutions_live_on_exceptional_indices() {
    // Away from degree 0, d_a(x) may be nonzero only when g(a) = g(x) = 0,
    // h(a) = 1 and h(x) = -2.
    let spec = AlgebraSpec::block_bq(&Scalar::one()).unwrap();
    let (g, h) = spec.block_gh().unwrap();
    let w = Window::new(3, 1).unwrap();
    let family = tpw_core::halfderiv::solution_family(&spec, &w, 2, &Scalar::new(1, 2)).unwrap();
    let exceptional = |a: &GroupElement, x: &GroupElement| {
        g.eval(a).unwrap().is_zero()
            && g.eval(x).unwrap().is_zero()
            && h.eval(a).unwrap().is_one()
            && h.eval(x).unwrap() == Scalar::from_int(-2)
    };
    let mut seen = 0;
    for (a, comps) in family.iter().filter(|(a, _)| !a.is_zero()) {
        for c in comps {
            for (x, v) in c.table() {
                if v.iter().any(|s| !s.is_zero()) {
                    assert!(exceptional(a, x), "degree {a}, index {x}");
                    seen += 1;
                }
            }
        }
    }
    assert_eq!(seen, 1);
}
