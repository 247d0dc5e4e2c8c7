use proptest::prelude::*;
use regchain_core::analyzer::{dp_optimal_gain_e3, Polynomial};
use regchain_core::chain::{BlockKind, BlockTree, Side};
use regchain_core::game::{run_episode, run_episode_with, GameConfig, GameRng, Horizon, Model, Strategy as Play};

const DEPTH: usize = 4;

proptest! {
    #[test]
    fn heights_count_extensions_since_last_confirmation(script in prop::collection::vec(0u8..3, 0..=50)) {
        let mut tree = BlockTree::new(1000);
        let (mut legal, mut other) = (0usize, 0usize);
        for o in script {
            match o {
                0 => {
                    tree.extend_branch(Side::Legal, BlockKind::Regulated, 0.0).unwrap();
                    legal += 1;
                }
                k => {
                    let kind = if k == 1 { BlockKind::Dubious } else { BlockKind::Legal };
                    tree.extend_branch(Side::Other, kind, 0.0).unwrap();
                    other += 1;
                }
            }
            let before = tree.confirmed().len();
            let fired = tree.confirm_if_depth_reached(DEPTH);
            prop_assert_eq!(fired.is_some(), legal.max(other) == DEPTH);
            if fired.is_some() {
                prop_assert_eq!(tree.confirmed().len(), before + DEPTH);
                legal = 0;
                other = 0;
            }
            prop_assert_eq!(tree.fork_heights(), (other, legal));
        }
    }

    #[test]
    fn dubious_blocks_never_join_the_legal_branch(n in 0usize..10) {
        let mut tree = BlockTree::new(100);
        for _ in 0..n {
            tree.extend_branch(Side::Legal, BlockKind::Regulated, 0.0).unwrap();
        }
        prop_assert!(tree.extend_branch(Side::Legal, BlockKind::Dubious, 0.0).is_err());
        prop_assert_eq!(tree.fork_heights(), (0, n));
    }
}

fn ir_strategy() -> impl Strategy<Value = Play> {
    prop_oneof![
        Just(Play::LegFrontier),
        Just(Play::DubFrontier),
        (2u32..=5).prop_map(Play::CapitulateWhenBehind),
        (1u32..=5).prop_map(Play::AttackInterior),
    ]
}

fn any_config() -> impl Strategy<Value = GameConfig> {
    let ir = (0.0f64..=1.0, 2usize..30, ir_strategy(), 0.0f64..=1.0, prop::bool::ANY, 0.0f64..2.0, any::<u64>()).prop_map(
        |(a, e, ur, lam, ocf, rho, seed)| GameConfig {
            alpha_r: a,
            depth: Horizon::Finite(e),
            model: if ocf { Model::IrOcf } else { Model::Ir },
            rho: if ocf { rho } else { 0.0 },
            strategy_ur: ur,
            lambda_legal: lam,
            max_epochs: 300,
            seed,
            ..Default::default()
        },
    );
    let sr = (0.0f64..=1.0, 2u32..=5, 0.0f64..=1.0, any::<u64>(), prop::bool::ANY).prop_map(|(a, l, lam, seed, inf)| GameConfig {
        alpha_r: a,
        depth: if inf { Horizon::Infinite } else { Horizon::Finite(20) },
        model: Model::Sr,
        strategy_r: if l == 5 { Play::RDubFrontier } else { Play::Withhold(l) },
        strategy_ur: Play::DubFrontier,
        lambda_legal: lam,
        max_epochs: 300,
        seed,
        ..Default::default()
    });
    prop_oneof![ir, sr]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn episode_accounting(cfg in any_config(), trial in 0u64..1000) {
        let s = run_episode(&cfg, &mut GameRng::for_trial(cfg.seed, trial)).unwrap();
        let l = &s.ledger;
        prop_assume!(l.total_confirmed() > 0);
        prop_assert!((s.g_r + s.g_ur - s.ocf_paid - 1.0).abs() < 1e-12);
        prop_assert!(s.t_f >= s.block_share_r() - 1e-12);
        prop_assert!(l.legal_confirmed <= l.total_confirmed());
        if cfg.model != Model::IrOcf {
            prop_assert!(s.t_f >= s.g_r - 1e-12);
        }
        if cfg.strategy_ur == Play::LegFrontier {
            prop_assert_eq!(s.t_f, 1.0);
        }
        let again = run_episode(&cfg, &mut GameRng::for_trial(cfg.seed, trial)).unwrap();
        prop_assert_eq!(s, again);
    }

    #[test]
    fn confirmation_renews_the_game(cfg in any_config()) {
        let mut ok = true;
        run_episode_with(&cfg, &mut GameRng::for_trial(cfg.seed, 0), |r| {
            if r.confirmed.is_some() {
                ok &= r.state_after.is_fresh();
            }
        })
        .unwrap();
        prop_assert!(ok);
    }

    #[test]
    fn optimal_depth_three_gain_never_below_fair_share(a in 0.01f64..0.99) {
        let g = dp_optimal_gain_e3(a);
        prop_assert!(g >= a - 1e-9);
        let root = 0.3611;
        if a <= root - 1e-3 {
            prop_assert!((g - a).abs() < 1e-9);
        }
        prop_assert!(Polynomial::frontier_bound().eval(root - 0.01) < 0.0);
    }
}
