use criterion::{criterion_group, criterion_main, Criterion};
use regchain_core::licensing::{public_key_from_seed, BlockContent, Regulator, RootRef};
use regchain_core::notarization::{mine_plain, mine_rbitcoin, NonceStream};
use regchain_core::PuzzleTarget;

fn mining(c: &mut Criterion) {
    let target = PuzzleTarget::pow2(248).unwrap();
    let mut seed = 0;
    c.bench_function("mine_plain_p_1_256", |b| {
        b.iter(|| {
            seed += 1;
            mine_plain(b"block", &target, &mut NonceStream::seeded(seed), 1 << 24).unwrap()
        })
    });

    let reg = Regulator::from_seed(1);
    let ann = reg
        .announce_rules(vec!["F0".into()], vec!["A0".into()], vec![vec![b"rules".to_vec()]], RootRef { id: 1, epoch: 0 }, 1000)
        .unwrap();
    let lic = reg.issue_executor_license(&ann, public_key_from_seed(2), ann.rules_digest()).unwrap();
    let block = BlockContent { coinbase: b"coinbase".to_vec(), executor_license: None, transactions: vec![] };
    c.bench_function("mine_regulated_p_1_256", |b| {
        b.iter(|| {
            seed += 1;
            mine_rbitcoin(&block, &lic, &ann, 10, &target, &mut NonceStream::seeded(seed), 1 << 24).unwrap()
        })
    });
    c.bench_function("issue_and_verify_executor_license", |b| {
        b.iter(|| {
            let l = reg.issue_executor_license(&ann, public_key_from_seed(3), ann.rules_digest()).unwrap();
            l.verify(&ann.regulator_key)
        })
    });
}

criterion_group!(benches, mining);
criterion_main!(benches);
