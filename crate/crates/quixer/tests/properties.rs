//! Randomized property tests for the structural invariants the simulator
//! and trainer rely on, plus a third-party cross-check of the in-crate
//! Hermitian eigensolver.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use quixer::lcu::LcuCoefficients;
use quixer::qsvt::PolynomialSpec;
use quixer::resources::multicontrolled_gate_count;
use quixer::state::{DenseOperator, StateVector};
use quixer::text::{window_count, Split, TokenStream, Vocabulary};
use quixer::train::cosine_lr;
use quixer::verify::{hermitian_eigenvalues, random_circuit, singular_values};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The window iterator yields exactly the closed-form count, and every
    /// item is a full-length context with an in-bounds target.
    #[test]
    fn window_iterator_matches_closed_form(
        len in 4usize..200,
        window in 2usize..6,
        stride in 1usize..4,
    ) {
        prop_assume!(len > window);
        let vocab_size = 13;
        let ids: Vec<usize> = (0..len).map(|i| i % vocab_size).collect();
        let stream = TokenStream::new(Split::Train, ids, vocab_size).unwrap();
        let items: Vec<_> = stream.windows(window, stride).unwrap().collect();
        prop_assert_eq!(items.len(), window_count(len, window, stride));
        for (context, target) in items {
            prop_assert_eq!(context.len(), window);
            prop_assert!(target < vocab_size);
        }
    }

    /// Every circuit in the gate set is unitary: norms survive application.
    #[test]
    fn circuits_preserve_norm(qubits in 1usize..4, gates in 1usize..12, seed in 0u64..1000) {
        let (circuit, params) = random_circuit(qubits, gates, seed).unwrap();
        let dim = 1usize << qubits;
        let amps: Vec<Complex64> = (0..dim)
            .map(|i| {
                let x = ((seed as usize + i * 37) % 19) as f64 - 9.0;
                let y = ((seed as usize + i * 53) % 17) as f64 - 8.0;
                Complex64::new(x, y)
            })
            .collect();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-6);
        let state = StateVector::from_amplitudes(
            qubits,
            amps.into_iter().map(|a| a / norm).collect(),
        )
        .unwrap();
        let out = circuit.apply(&params, &state).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    /// Mixing coefficients are a complex probability vector in the L1 sense:
    /// squared normalized amplitudes with unit total weight.
    #[test]
    fn mixing_coefficients_have_unit_l1_mass(
        raw in prop::collection::vec(0.05f64..3.0, 1..12),
        phase_seed in 0u64..1000,
    ) {
        let phases: Vec<f64> = (0..raw.len())
            .map(|i| ((phase_seed as usize + i * 71) % 217) as f64 * 0.029 - 3.1)
            .collect();
        let coeffs = LcuCoefficients::new(raw, phases).unwrap();
        let total: f64 = coeffs.effective().unwrap().iter().map(|b| b.norm()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    /// The cosine schedule starts at the peak, ends at the floor, and never
    /// increases along the way.
    #[test]
    fn cosine_schedule_is_monotone(total in 1usize..300, lr_min in 1e-6f64..1e-3, span in 1e-3f64..1.0) {
        let lr_max = lr_min + span;
        prop_assert!((cosine_lr(0, total, lr_max, lr_min).unwrap() - lr_max).abs() < 1e-15);
        prop_assert!((cosine_lr(total, total, lr_max, lr_min).unwrap() - lr_min).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for step in 0..=total {
            let lr = cosine_lr(step, total, lr_max, lr_min).unwrap();
            prop_assert!(lr <= prev + 1e-15);
            prev = lr;
        }
    }

    /// Ladder decompositions grow by exactly two gates per extra control.
    #[test]
    fn control_ladder_is_affine(m in 1u64..64) {
        prop_assert_eq!(
            multicontrolled_gate_count(m + 1),
            multicontrolled_gate_count(m) + 2
        );
        prop_assert_eq!(multicontrolled_gate_count(m), 2 * (m - 1) + 1);
    }

    /// Splitting a polynomial by parity loses nothing: the two halves sum
    /// back to the original at every point.
    #[test]
    fn parity_split_recombines(
        coefficients in prop::collection::vec(-2.0f64..2.0, 2..6),
        x in -1.0f64..1.0,
    ) {
        prop_assume!(coefficients.iter().any(|c| c.abs() > 1e-9));
        let poly = PolynomialSpec::new(coefficients).unwrap();
        let (odd, even) = poly.parity_split();
        for (k, c) in even.coefficients().iter().enumerate() {
            prop_assert!(k % 2 == 0 || *c == 0.0);
        }
        for (k, c) in odd.coefficients().iter().enumerate() {
            prop_assert!(k % 2 == 1 || *c == 0.0);
        }
        let recombined = even.evaluate(x) + odd.evaluate(x);
        prop_assert!((recombined - poly.evaluate(x)).abs() < 1e-12);
    }

    /// Unknown words all collapse onto the unknown token, and known words
    /// round-trip through encode/decode.
    #[test]
    fn vocabulary_round_trips_known_words(corpus_seed in 0u64..500) {
        let words = ["ember", "orbit", "lattice", "quill", "vesper"];
        let text: String = (0..40)
            .map(|i| words[(corpus_seed as usize + i * 7) % 5])
            .collect::<Vec<_>>()
            .join(" ");
        let vocab = Vocabulary::build(&text).unwrap();
        let stream = vocab.encode("orbit quill nonsense", Split::Test, false);
        let decoded = vocab.decode(stream.ids()).unwrap().join(" ");
        prop_assert_eq!(decoded, "orbit quill <unk>".to_string());
    }
}

/// Random Hermitian matrix (A + A^dagger) with entries derived from a seed.
fn seeded_hermitian(dim: usize, seed: u64) -> DenseOperator {
    let mut x = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(0xD1B5);
    let mut next = move || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        (x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let raw: Vec<Complex64> = (0..dim * dim)
        .map(|_| Complex64::new(next(), next()))
        .collect();
    let a = DenseOperator::from_entries(dim, raw).unwrap();
    let mut h = a.dagger();
    h.add_scaled(Complex64::new(1.0, 0.0), &a).unwrap();
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The in-crate Jacobi eigensolver agrees with nalgebra on random
    /// complex Hermitian matrices (register-sized, so power-of-two dims).
    #[test]
    fn jacobi_eigenvalues_match_nalgebra(qubits in 1usize..4, seed in 0u64..10_000) {
        let dim = 1usize << qubits;
        let h = seeded_hermitian(dim, seed);
        let ours = hermitian_eigenvalues(&h).unwrap();
        let theirs = DMatrix::from_fn(dim, dim, |r, c| h.get(r, c)).symmetric_eigen();
        let mut reference: Vec<f64> = theirs.eigenvalues.iter().copied().collect();
        reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ours.iter().zip(reference.iter()) {
            prop_assert!((a - b).abs() < 1e-9, "eigenvalue {a} vs reference {b}");
        }
    }

    /// Singular values via the Gram-matrix route agree with nalgebra's SVD.
    #[test]
    fn singular_values_match_nalgebra(qubits in 1usize..4, seed in 0u64..10_000) {
        let dim = 1usize << qubits;
        let h = seeded_hermitian(dim, seed);
        let ours = singular_values(&h).unwrap();
        let svd = DMatrix::from_fn(dim, dim, |r, c| h.get(r, c)).svd(false, false);
        let mut reference: Vec<f64> = svd.singular_values.iter().copied().collect();
        reference.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (a, b) in ours.iter().zip(reference.iter()) {
            prop_assert!((a - b).abs() < 1e-9, "singular value {a} vs reference {b}");
        }
    }
}
