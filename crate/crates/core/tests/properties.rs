use proptest::prelude::*;

use coverfam::amplify::{composite_bijection, is_pairing_bijection, iterate_chain, special_balanced_words, BalancedWordSpec, ChainParams};
use coverfam::bounds::{bound_report, min_parity_distance, parity_distance_check, upper_bounds, CertificateTable};
use coverfam::constructions::{binary_family, concatenate, cyclic_family, pad_zeros, paper_z15_matrix, ternary_family};
use coverfam::product::{family_to_representation, q_lower_bound, q_upper_bound, verify_representation};
use coverfam::search::{exact_max, SearchConfig, SearchMode};
use coverfam::stars::{decompose, random_biregular, verify_forest};
use coverfam::store::CertificateStore;
use coverfam::{diff, family_is_covering, word_covers, Alphabet, CoverTarget, Family, Symbol, Word};

fn family_strategy() -> impl Strategy<Value = Family> {
    (2u32..7, 1usize..8).prop_flat_map(|(s, q)| {
        prop::collection::btree_set(prop::collection::vec(0..s as Symbol, q), 1..7)
            .prop_map(move |rows| Family::new(Alphabet::ModRing(s), q, rows.into_iter().collect()).unwrap())
    })
}

fn covers(f: &Family, t: &CoverTarget) -> bool {
    family_is_covering(f, t).unwrap().passed
}

fn units_of(s: u32) -> Vec<Symbol> {
    (1..s as Symbol).filter(|&u| gcd(u as u32, s) == 1).collect()
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn self_difference_is_zero(s in 2u32..20, entries in prop::collection::vec(0i64..1000, 1..12)) {
        let a = Alphabet::ModRing(s);
        let v = Word::new(a, entries.iter().map(|&x| (x % s as i64) as Symbol).collect()).unwrap();
        let d = diff(&v, &v).unwrap();
        prop_assert!(word_covers(&d, &CoverTarget::from_symbols(a, [0]).unwrap()).unwrap());
        for x in 1..s as Symbol {
            prop_assert!(!word_covers(&d, &CoverTarget::from_symbols(a, [x]).unwrap()).unwrap());
        }
    }

    #[test]
    fn full_cover_implies_every_subtarget(f in family_strategy(), mask in any::<u64>()) {
        let s = f.modulus().unwrap();
        let sub: Vec<Symbol> = (0..s as Symbol).filter(|&x| mask >> x & 1 == 1).collect();
        prop_assume!(!sub.is_empty());
        let t = CoverTarget::from_symbols(Alphabet::ModRing(s), sub).unwrap();
        if covers(&f, &CoverTarget::full(s).unwrap()) {
            prop_assert!(covers(&f, &t));
        }
    }

    #[test]
    fn verdict_is_invariant_under_symmetries(
        f in family_strategy(),
        shift_seed in any::<u64>(),
        unit_pick in any::<usize>(),
        col_seed in any::<u64>(),
    ) {
        let s = f.modulus().unwrap();
        let q = f.q();
        let full = CoverTarget::full(s).unwrap();
        let before = covers(&f, &full);
        let shift: Vec<Symbol> = (0..q).map(|c| ((shift_seed >> (c % 32)) % s as u64) as Symbol).collect();
        let units = units_of(s);
        let u = units[unit_pick % units.len()];
        let mut cols: Vec<usize> = (0..q).collect();
        let mut state = col_seed;
        for i in (1..q).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            cols.swap(i, (state >> 33) as usize % (i + 1));
        }
        let mut rows: Vec<Vec<Symbol>> = f
            .rows()
            .iter()
            .map(|r| cols.iter().map(|&c| ((r[c] + shift[c]) * u).rem_euclid(s as Symbol)).collect())
            .collect();
        rows.reverse();
        let g = Family::new(Alphabet::ModRing(s), q, rows).unwrap();
        prop_assert_eq!(before, covers(&g, &full));
    }

    #[test]
    fn short_words_never_cover(s in 3u32..9, extra in 0usize..3, rows in prop::collection::btree_set(prop::collection::vec(0i64..9, 8), 2..5)) {
        let q = (s as usize - 1).saturating_sub(extra).max(1);
        let rows: std::collections::BTreeSet<Vec<Symbol>> =
            rows.into_iter().map(|r| r[..q].iter().map(|&x| x % s as Symbol).collect()).collect();
        prop_assume!(rows.len() >= 2);
        let f = Family::new(Alphabet::ModRing(s), q, rows.into_iter().collect()).unwrap();
        prop_assert!(!covers(&f, &CoverTarget::full(s).unwrap()));
    }

    #[test]
    fn concatenation_multiplies_and_covers(a in 0usize..4, b in 0usize..4, s in 2u32..8) {
        let pick = |k: usize| -> Family {
            match (s, k) {
                (2, 0) => binary_family(3).unwrap().family,
                (2, 1) => binary_family(2).unwrap().family,
                (3, 0) => ternary_family(4).unwrap().family,
                _ => cyclic_family(s).unwrap().family,
            }
        };
        let (f1, f2) = (pick(a), pick(b));
        let c = concatenate(&f1, &f2).unwrap().family;
        prop_assert_eq!(c.len(), f1.len() * f2.len());
        prop_assert!(covers(&c, &CoverTarget::full(s).unwrap()));
    }

    #[test]
    fn padding_preserves_the_full_verdict(f in family_strategy(), extra in 0usize..4) {
        let s = f.modulus().unwrap();
        let full = CoverTarget::full(s).unwrap();
        let units = CoverTarget::units(s).unwrap();
        let g = pad_zeros(&f, extra).unwrap().family;
        if covers(&f, &full) {
            prop_assert!(covers(&g, &full));
        }
        prop_assert_eq!(covers(&f, &units), covers(&g, &units));
        // A zero column supplies the missing 0 in every difference.
        if extra > 0 {
            prop_assert_eq!(covers(&f, &units), covers(&g, &full));
        }
    }

    #[test]
    fn representations_round_trip(pick in 0usize..6, r_frac in 0.0f64..1.0) {
        let f = match pick {
            0 => binary_family(5).unwrap().family,
            1 => ternary_family(6).unwrap().family,
            2 => cyclic_family(7).unwrap().family,
            3 => cyclic_family(9).unwrap().family,
            4 => paper_z15_matrix().family,
            _ => concatenate(&cyclic_family(3).unwrap().family, &cyclic_family(3).unwrap().family).unwrap().family,
        };
        let r = 1 + ((f.len() - 1) as f64 * r_frac) as usize;
        let rep = family_to_representation(&f, r).unwrap();
        prop_assert!(verify_representation(&rep).passed);
        prop_assert_eq!(rep.q, f.q());
    }

    #[test]
    fn q_bounds_are_ordered(s in 2u32..9, r in 1u64..200) {
        let up = q_upper_bound(s, r, &CertificateTable::new()).unwrap();
        prop_assert!(q_lower_bound(s, r) <= up.value as u64);
    }

    #[test]
    fn stars_are_deterministic_and_valid(seed in 0u64..1000, d1 in 6usize..14) {
        let g = random_biregular(60, d1, 60, seed).unwrap();
        prop_assume!(g.d2() as f64 >= g.log_term());
        let a = decompose(&g, seed, 10);
        let b = decompose(&g, seed, 10);
        match (a, b) {
            (Ok(x), Ok(y)) => {
                prop_assert_eq!(&x, &y);
                prop_assert!(verify_forest(&g, &x, g.guaranteed_min_size()));
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "same inputs gave different outcomes"),
        }
    }

    #[test]
    fn bijections_pair_letters(m in 2u32..7) {
        let two_s = 2 * (1..=6u64).fold(1, |l, k| l / gcd(l as u32, k as u32) as u64 * k) as usize;
        let f = composite_bijection(m, two_s).unwrap();
        prop_assert!(is_pairing_bijection(&f, m));
        for k in 1..=two_s / 2 {
            prop_assert_eq!(f[2 * k] as u32, f[2 * k - 1] as u32 + m);
        }
    }
}

#[test]
fn search_is_monotone_and_supermultiplicative() {
    let exact = |s: u32, q: usize| -> u64 {
        exact_max(&SearchConfig::new(s, q, SearchMode::ExactMax).unwrap())
            .unwrap()
            .claim
            .value()
    };
    for s in 2..=4u32 {
        let qmax = if s == 2 { 6 } else { 5 };
        let values: Vec<u64> = (1..=qmax).map(|q| exact(s, q)).collect();
        for q in 1..qmax {
            assert!(values[q] >= values[q - 1], "R({s},{}) < R({s},{q})", q + 1);
        }
        for q1 in 1..=qmax {
            for q2 in 1..=qmax - q1 {
                assert!(values[q1 + q2 - 1] >= values[q1 - 1] * values[q2 - 1]);
            }
        }
    }
}

#[test]
fn search_ignores_worker_count() {
    for (s, q) in [(2u32, 5usize), (3, 4), (3, 5), (4, 5), (5, 5)] {
        let run = |w: usize| {
            exact_max(&SearchConfig::new(s, q, SearchMode::ExactMax).unwrap().with_workers(w))
                .unwrap()
                .claim
        };
        assert_eq!(run(1), run(4), "s={s} q={q}");
    }
}

#[test]
fn chain_outputs_pass_their_targets() {
    for (s, q, n) in [(3u32, 4usize, 3usize), (5, 4, 5), (5, 8, 4)] {
        let out = iterate_chain(&ChainParams::new(s, q, n, 1)).unwrap();
        assert!(out.family.len() >= 2);
        assert!(covers(&out.family, &out.target));
        let spec = BalancedWordSpec::new(s, q).unwrap();
        let words = special_balanced_words(spec).unwrap();
        let pm = CoverTarget::from_symbols(Alphabet::ModRing(s), [1, -1]).unwrap();
        assert!(covers(&words, &pm));
    }
}

#[test]
fn corpus_respects_bounds_and_parity() {
    let mut corpus = vec![paper_z15_matrix().family];
    for q in 1..=8 {
        corpus.push(binary_family(q).unwrap().family);
    }
    for q in 2..=10 {
        corpus.push(ternary_family(q).unwrap().family);
    }
    for s in 2..=16 {
        corpus.push(cyclic_family(s).unwrap().family);
    }
    corpus.push(concatenate(&cyclic_family(4).unwrap().family, &cyclic_family(4).unwrap().family).unwrap().family);
    for f in &corpus {
        let s = f.modulus().unwrap();
        assert!(covers(f, &CoverTarget::full(s).unwrap()));
        for b in upper_bounds(s, f.q()) {
            assert!(f.len() as u64 <= b.value, "{s},{} size {} > {:?}", f.q(), f.len(), b);
        }
        if s % 2 == 0 {
            assert!(parity_distance_check(f).unwrap());
            if f.len() >= 2 {
                assert!(min_parity_distance(f).unwrap() >= s as usize / 2);
            }
        }
    }
}

#[test]
fn square_reports() {
    let t = CertificateTable::new();
    for s in [4u32, 6, 8, 10] {
        let r = bound_report(s, s as usize, &t).unwrap();
        assert!(r.is_exact());
        assert_eq!(r.lower.value, 2);
    }
    for s in [2u32, 3, 5, 7, 11] {
        let r = bound_report(s, s as usize, &t).unwrap();
        assert!(r.is_exact());
        assert_eq!(r.lower.value, s as u64);
    }
}

#[test]
fn seeded_store_round_trips_and_agrees_with_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.json");
    let store = CertificateStore::seeded(&path).unwrap();
    store.save().unwrap();
    let back = CertificateStore::open(&path).unwrap();
    assert!(back.warnings().is_empty());
    assert_eq!(store.to_json(), back.to_json());
    let table = back.table();
    for e in back.entries() {
        let report = bound_report(e.s, e.q, &table).unwrap();
        if let Some(l) = &e.lower {
            assert!(covers(&l.witness, &CoverTarget::full(e.s).unwrap()));
            assert!(l.value <= report.upper.value);
            assert!(report.lower.value >= l.value);
        }
    }
}
