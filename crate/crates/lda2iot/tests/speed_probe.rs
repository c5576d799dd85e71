use lda2iot::crypto::{make_rng, CurveParams};
use lda2iot::par::Mode;
use lda2iot::protocol::Level;
use lda2iot::runtime::{build_world, simulate_honest_batch, WorldConfig};
use std::time::Instant;

#[test]
fn stage_probe() {
    let curve = CurveParams::p256();
    let mut rng = make_rng(Some(9));
    let (sk, _) = lda2iot::crypto::keygen(&curve, &mut rng);
    let start = Instant::now();
    for _ in 0..50 {
        std::hint::black_box(lda2iot::crypto::scalar_mult(sk.value(), &curve.generator, &curve).unwrap());
    }
    println!("scalar_mult: {:?} each", start.elapsed() / 50);
    let cfg = WorldConfig::new(curve.clone(), 42).levels(Level(2), Level(4));
    let start = Instant::now();
    let mut world = build_world(&cfg).unwrap();
    println!("build_world: {:?}", start.elapsed());
    let start = Instant::now();
    let outcome = world.run_one();
    println!("run_one: {:?} result {:?}", start.elapsed(), outcome.result);
    let start = Instant::now();
    let outcomes = simulate_honest_batch(curve, 50, 42, Mode::Sequential);
    assert!(outcomes.iter().all(|o| o.keys_match()));
    println!("50 full trials: {:?} ({:?}/trial)", start.elapsed(), start.elapsed() / 50);
}
