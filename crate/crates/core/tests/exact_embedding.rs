use octagon_core::veech::{eval_word, tau1, tau2};
use octagon_core::{Embedding, ExactMat, QSqrt2};
use proptest::prelude::*;

fn q() -> impl Strategy<Value = QSqrt2> {
    (-50i64..50, 1i64..20, -50i64..50, 1i64..20).prop_map(|(a, b, c, d)| QSqrt2::from_parts(a, b, c, d))
}

proptest! {
    #[test]
    fn embeddings_are_ring_maps(x in q(), y in q()) {
        for e in [Embedding::Phi1, Embedding::Phi2] {
            let (fx, fy) = (x.embed(e), y.embed(e));
            let tol = 1e-9 * (1.0 + fx.abs() * fy.abs() + fx.abs() + fy.abs());
            prop_assert!(((&x * &y).embed(e) - fx * fy).abs() < tol);
            prop_assert!(((&x + &y).embed(e) - (fx + fy)).abs() < tol);
        }
        prop_assert_eq!(x.galois().embed(Embedding::Phi1), x.embed(Embedding::Phi2));
    }

    #[test]
    fn generic_matrix_product_commutes_with_embedding(v in proptest::array::uniform4(q()), w in proptest::array::uniform4(q())) {
        let [a, b, c, d] = v;
        let [e, f, g, h] = w;
        let m = ExactMat::new(a, b, c, d);
        let n = ExactMat::new(e, f, g, h);
        let exact = (&m * &n).embed(Embedding::Phi1);
        let float = &m.embed(Embedding::Phi1) * &n.embed(Embedding::Phi1);
        prop_assert!(exact.max_abs_diff(&float) < 1e-8 * (1.0 + float.frobenius()));
        prop_assert_eq!((&m * &n).det(), &m.det() * &n.det());
    }
}

#[test]
fn periodic_words_are_determinant_one() {
    for w in [tau1(), tau2()] {
        let m = eval_word(&w);
        assert_eq!(m.det(), QSqrt2::int(1, 0));
        assert!(m.trace().embed(Embedding::Phi1) > 2.0);
    }
}
