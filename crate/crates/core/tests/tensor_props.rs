mod common;

use common::*;
use proptest::prelude::*;
use ucal_core::model::{frequency_matrix, gain_factor_matrix, rx_factor_matrix, tx_factor_matrix};
use ucal_core::tensor::{hadamard, khatri_rao, kron_vec, outer};
use ucal_core::{synthesize, Complex64, ComplexMatrix, ComplexTensor4, Dims, Mode};

fn tensor_strategy() -> impl Strategy<Value = ComplexTensor4> {
    (1usize..4, 1usize..4, 1usize..4, 1usize..4, any::<u64>())
        .prop_map(|(n, m, l, t, seed)| random_tensor(&mut rng(seed), Dims::new(n, m, l, t)))
}

proptest! {
    #[test]
    fn fold_inverts_unfold(x in tensor_strategy()) {
        for mode in Mode::ALL {
            let back = ComplexTensor4::fold(&x.unfold(mode), mode, x.dims()).unwrap();
            prop_assert_eq!(&back, &x);
        }
    }

    #[test]
    fn unfold_inverts_fold(x in tensor_strategy()) {
        for mode in Mode::ALL {
            let unfolded = x.unfold(mode);
            let again = ComplexTensor4::fold(&unfolded, mode, x.dims()).unwrap().unfold(mode);
            prop_assert_eq!(again, unfolded);
        }
    }

    #[test]
    fn unfolding_preserves_norm(x in tensor_strategy()) {
        let norm = x.frobenius_norm();
        for mode in Mode::ALL {
            let unfolded = x.unfold(mode).frobenius_norm();
            prop_assert!((unfolded - norm).abs() <= 1e-12 * norm.max(1e-300));
        }
    }

    #[test]
    fn flat_index_is_bijective(n in 1usize..5, m in 1usize..5, l in 1usize..5, t in 1usize..5) {
        let dims = Dims::new(n, m, l, t);
        let mut seen = vec![false; dims.len()];
        for a in 0..n { for b in 0..m { for c in 0..l { for d in 0..t {
            let i = dims.flat(a, b, c, d);
            prop_assert!(!seen[i]);
            seen[i] = true;
            prop_assert_eq!(dims.unflat(i), (a, b, c, d));
        }}}}
    }

    #[test]
    fn frobenius_norm_vanishes_only_at_zero(x in tensor_strategy()) {
        prop_assert!(x.frobenius_norm() > 0.0);
        prop_assert_eq!(ComplexTensor4::zeros(x.dims()).frobenius_norm(), 0.0);
    }
}

/// Enumerates every entry and checks the column layout of each unfolding.
#[test]
fn unfoldings_match_index_enumeration() {
    let dims = Dims::new(2, 3, 4, 2);
    let x = random_tensor(&mut rng(5), dims);
    let (n_, m_, l_, t_) = (dims.n, dims.m, dims.l, dims.t);
    let u1 = x.unfold(Mode::One);
    let u2 = x.unfold(Mode::Two);
    let u3 = x.unfold(Mode::Three);
    let u4 = x.unfold(Mode::Four);
    assert_eq!((u1.rows(), u1.cols()), (n_, m_ * l_ * t_));
    assert_eq!((u2.rows(), u2.cols()), (m_, n_ * l_ * t_));
    assert_eq!((u3.rows(), u3.cols()), (l_, n_ * m_ * t_));
    assert_eq!((u4.rows(), u4.cols()), (t_, n_ * m_ * l_));
    for n in 0..n_ {
        for m in 0..m_ {
            for l in 0..l_ {
                for t in 0..t_ {
                    let v = x[(n, m, l, t)];
                    assert_eq!(u1[(n, (t * l_ + l) * m_ + m)], v);
                    assert_eq!(u2[(m, (n * t_ + t) * l_ + l)], v);
                    assert_eq!(u3[(l, (m * n_ + n) * t_ + t)], v);
                    assert_eq!(u4[(t, (l * m_ + m) * n_ + n)], v);
                }
            }
        }
    }
}

#[test]
fn mode_three_column_zero_is_first_frequency_fibre() {
    let x = ComplexTensor4::from_fn(Dims::new(2, 2, 2, 2), |n, m, l, t| {
        Complex64::new((n + 2 * m + 4 * l + 8 * t) as f64, 0.0)
    });
    let u3 = x.unfold(Mode::Three);
    let column = u3.column(0);
    let fibre: Vec<_> = (0..2).map(|l| x[(0, 0, l, 0)]).collect();
    assert_eq!(column, fibre);
}

#[test]
fn khatri_rao_columns_match_entrywise_products() {
    let mut rng = rng(6);
    let a = ComplexMatrix::new(3, 4, complexes(&mut rng, 12)).unwrap();
    let b = ComplexMatrix::new(2, 4, complexes(&mut rng, 8)).unwrap();
    let kr = khatri_rao(&a, &b).unwrap();
    assert_eq!((kr.rows(), kr.cols()), (6, 4));
    for j in 0..4 {
        for i in 0..3 {
            for k in 0..2 {
                assert_eq!(kr[(i * 2 + k, j)], a[(i, j)] * b[(k, j)]);
            }
        }
        assert_eq!(kr.column(j), kron_vec(&a.column(j), &b.column(j)));
    }
}

#[test]
fn outer_product_entries() {
    let mut rng = rng(7);
    let (a, b, c, d) = (
        complexes(&mut rng, 2),
        complexes(&mut rng, 3),
        complexes(&mut rng, 2),
        complexes(&mut rng, 4),
    );
    let x = outer(&a, &b, &c, &d).unwrap();
    for n in 0..2 {
        for m in 0..3 {
            for l in 0..2 {
                for t in 0..4 {
                    let expected = a[n] * b[m] * c[l] * d[t];
                    assert!((x[(n, m, l, t)] - expected).norm() < 1e-15);
                }
            }
        }
    }
}

#[test]
fn hadamard_matches_entrywise_product() {
    let mut rng = rng(8);
    let dims = Dims::new(2, 2, 3, 2);
    let x = random_tensor(&mut rng, dims);
    let y = random_tensor(&mut rng, dims);
    let z = hadamard(&x, &y).unwrap();
    for i in 0..dims.len() {
        assert_eq!(z.data()[i], x.data()[i] * y.data()[i]);
    }
    assert!(hadamard(&x, &ComplexTensor4::zeros(Dims::new(1, 1, 1, 1))).is_err());
}

fn rel_err(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    relative_diff(a.data(), b.data())
}

/// The four unfoldings of a synthesized tensor factor into the
/// Khatri-Rao products of the derived factor matrices.
#[test]
fn unfolding_identities_hold_on_synthesized_tensors() {
    let mut rng = rng(9);
    for draw in 0..50 {
        let dims = Dims::new(1 + draw % 4, 1 + draw % 6, 1 + draw % 8, 1 + draw % 3);
        let (shared, params) = random_truth(&mut rng, dims, 1, 0.5);
        let p = &params[0];
        let y = synthesize(&shared, p).unwrap();
        let nm = dims.n * dims.m;
        let a_tx = tx_factor_matrix(&p.a_tx, dims.m);
        let a_rx = rx_factor_matrix(&p.a_rx, dims.n);
        let b = frequency_matrix(&shared, &p.c).unwrap();
        let h = gain_factor_matrix(&p.h, nm);
        let kr = |x: &ComplexMatrix, y: &ComplexMatrix| khatri_rao(x, y).unwrap();
        let checks = [
            (
                Mode::One,
                a_tx.matmul(&kr(&kr(&h, &b), &a_rx).transpose()).unwrap(),
            ),
            (
                Mode::Two,
                a_rx.matmul(&kr(&kr(&a_tx, &h), &b).transpose()).unwrap(),
            ),
            (
                Mode::Three,
                b.matmul(&kr(&kr(&a_rx, &a_tx), &h).transpose()).unwrap(),
            ),
            (
                Mode::Four,
                h.matmul(&kr(&kr(&b, &a_rx), &a_tx).transpose()).unwrap(),
            ),
        ];
        for (mode, product) in checks {
            assert!(rel_err(&y.unfold(mode), &product) < 1e-10, "{mode:?}");
        }
    }
}
