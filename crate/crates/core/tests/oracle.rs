mod common;

use bwbroker_core::bam::{select_victims, victim_order, Candidate};
use bwbroker_core::{BamModel, Bandwidth};
use common::{engine, engine_arrive, engine_ledger, explore, ops, Oracle, Step};
use proptest::prelude::*;

/// TC0..TC2 at 250/350/400 of 1000 with TC2 ranked highest.
const REFERENCE: [(u32, u64, f64); 3] = [(0, 250, 1.0), (1, 350, 1.0), (2, 400, 1.0)];

#[test]
fn atcs_tc2_overflow_draws_lowest_priority_first() {
    // 50 TC2 requests of 10 units on an idle link: 400 from its own
    // constraint, the remaining 100 from TC0 (scanned before TC1).
    let mut o = Oracle::new(BamModel::Atcs, 1000, &REFERENCE);
    for id in 1..=50 {
        assert!(matches!(o.arrive(id, 2, 10), Step::Accepted { .. }));
    }
    assert_eq!(o.ledger(), vec![(100, 100), (0, 0), (400, 0)]);

    let mut e = engine(BamModel::Atcs, 1000, &REFERENCE);
    for id in 1..=50 {
        engine_arrive(&mut e, id, 2, 10);
    }
    assert_eq!(engine_ledger(&e), o.ledger());
}

#[test]
fn rdm_lowest_priority_borrows_upward_only() {
    let mut o = Oracle::new(BamModel::Rdm, 1000, &REFERENCE);
    for id in 1..=30 {
        o.arrive(id, 0, 10);
    }
    // 250 own, then 50 from TC1 (the lowest donor above it).
    assert_eq!(o.ledger(), vec![(250, 0), (50, 50), (0, 0)]);
    // TC2 cannot borrow under RDM: 40 fills it, the 41st blocks.
    for id in 31..=70 {
        assert!(matches!(o.arrive(id, 2, 10), Step::Accepted { .. }));
    }
    assert_eq!(o.arrive(71, 2, 10), Step::Blocked { available: 0 });
}

#[test]
fn short_sequences_agree_for_every_model() {
    for model in BamModel::ALL {
        let classes = [(0, 2, 1.0), (1, 2, 0.5), (2, 3, 1.0)];
        let x = explore(model, 7, &classes, &ops(3, &[1, 2]), 5);
        assert!(x.steps > 10_000);
        if matches!(model, BamModel::Rdm | BamModel::Atcs) {
            assert!(x.reclaims > 0, "{model} never reclaimed");
        }
        assert_eq!(x.divergence, None);
    }
}

fn brute_force(cands: &[Candidate], needed: u64) -> Vec<usize> {
    common::brute_force_victims(&cands.iter().map(|c| c.amount.kbps()).collect::<Vec<_>>(), needed)
}

proptest! {
    #[test]
    fn victim_selection_matches_brute_force(
        raw in prop::collection::vec((0u32..3, 1u64..6), 0..9),
        needed in 0u64..20,
    ) {
        let mut cands: Vec<Candidate> = raw
            .iter()
            .enumerate()
            .map(|(i, &(priority, amount))| Candidate {
                request: i as u64,
                priority,
                seq: i as u64,
                amount: Bandwidth::from_kbps(amount),
            })
            .collect();
        cands.sort_by(victim_order);
        prop_assert_eq!(
            select_victims(&cands, Bandwidth::from_kbps(needed)),
            brute_force(&cands, needed)
        );
    }

    #[test]
    fn random_walks_agree(
        model in prop::sample::select(BamModel::ALL.to_vec()),
        steps in prop::collection::vec((0usize..3, 1u64..40, any::<bool>()), 1..200),
    ) {
        let classes = [(0, 60, 0.7), (1, 80, 1.0), (2, 60, 0.4)];
        let mut o = Oracle::new(model, 200, &classes);
        let mut e = engine(model, 200, &classes);
        for (id, (class, demand, release)) in (1u64..).zip(steps) {
            let active = o.active();
            if release && !active.is_empty() {
                let victim = active[(demand as usize) % active.len()];
                prop_assert_eq!(common::engine_release(&mut e, victim), o.release(victim));
            } else {
                prop_assert_eq!(engine_arrive(&mut e, id, class, demand), o.arrive(id, class, demand));
            }
            prop_assert_eq!(engine_ledger(&e), o.ledger());
            prop_assert!(e.audit().is_ok());
        }
    }
}
