use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bpd_core::channel::{generate_channel, sample_paths, GainModel, SystemConfig};
use bpd_core::dictionary::{build_dictionary, build_grid, GridIndex};
use bpd_core::estimators::estimate_bpd;
use bpd_core::estimators::greedy::{select_candidate, BilinearMap};
use bpd_core::measurement::{observe, prewhiten, sample_combiners, CombinerKind};
use bpd_core::pattern::{build_pattern_tables, PatternTables};
use bpd_core::CMatrix;

/// Exhaustive scan over (ring, angle) pairs in flat-index order with a
/// strict comparison, so the lowest flat index wins exact ties.
fn oracle(u: &CMatrix, tables: &PatternTables) -> (GridIndex, f64) {
    let mut best: Option<(GridIndex, f64)> = None;
    for ring in 0..tables.num_rings() {
        for angle in 0..tables.num_angles() {
            let mut power = 0.0;
            for m in 0..u.ncols() {
                power += u[(tables.column(angle, ring, m), m)].norm_sqr();
            }
            if best.is_none() || power > best.unwrap().1 {
                best = Some((GridIndex { angle, ring }, power));
            }
        }
    }
    best.unwrap()
}

fn flat(index: GridIndex, tables: &PatternTables) -> usize {
    index.ring * tables.num_angles() + index.angle
}

#[test]
fn first_selection_matches_exhaustive_search() {
    for seed in 0..6u64 {
        let system = SystemConfig::new(64, 16, 100e9, 10e9).unwrap();
        let grid = build_grid(&system, 64, 6, 0.8).unwrap();
        let dict = build_dictionary(&system, &grid);
        let tables = build_pattern_tables(&system, &grid);
        assert!(!tables.is_identity());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let paths = sample_paths(&system, 3, 2.0, 20.0, GainModel::PerPath, &mut rng).unwrap();
        let channel = generate_channel(&system, &paths);
        let ens = sample_combiners(&system, 8, 4, CombinerKind::Rademacher, &mut rng).unwrap();
        let obs = observe(&ens, &channel, 0.1, &mut rng).unwrap();
        let problem = prewhiten(&ens, &obs, &dict).unwrap();

        let u = problem.sensing.ad_mul(&problem.observations);
        let (expected, power) = oracle(&u, &tables);
        let (chosen, chosen_power) = select_candidate(&u, &BilinearMap(&tables), &[]).unwrap();
        assert_eq!(chosen, flat(expected, &tables), "seed {seed}");
        assert_eq!(chosen_power.to_bits(), power.to_bits());

        let report = estimate_bpd(&problem, &tables, 1).unwrap();
        assert_eq!(report.support.carrier, vec![expected]);
    }
}

proptest! {
    #[test]
    fn ties_and_random_correlations_agree(
        values in prop::collection::vec((-3i8..=3, -3i8..=3), 8 * 3 * 4),
    ) {
        // Small integer correlations produce frequent exact ties.
        let num_angles = 8;
        let num_rings = 3;
        let m_count = 4;
        let u = CMatrix::from_fn(num_angles * num_rings, m_count, |i, m| {
            let (re, im) = values[i * m_count + m];
            Complex64::new(re as f64, im as f64)
        });
        let identity = PatternTables::identity(num_angles, num_rings, m_count);
        let (expected, _) = oracle(&u, &identity);
        let (chosen, _) = select_candidate(&u, &BilinearMap(&identity), &[]).unwrap();
        prop_assert_eq!(chosen, flat(expected, &identity));

        // The runner-up once the winner is excluded.
        let expected_excluding = {
            let mut best: Option<(usize, f64)> = None;
            for c in 0..num_angles * num_rings {
                if c == chosen {
                    continue;
                }
                let power: f64 = (0..m_count).map(|m| u[(c, m)].norm_sqr()).sum();
                if best.is_none_or(|(_, p)| power > p) {
                    best = Some((c, power));
                }
            }
            best.unwrap().0
        };
        let (second, _) = select_candidate(&u, &BilinearMap(&identity), &[chosen]).unwrap();
        prop_assert_eq!(second, expected_excluding);
    }
}
