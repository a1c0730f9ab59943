// SPDX-License-Identifier: Apache-2.0

//! Domain-crossing counters: 6-bit Gray-coded frame counters, their
//! extension to full width, the signed virtual buffer occupancy they give,
//! and recentering onto a real elastic buffer.

use bittide_core::buffers::{
    ddc_occupancy, extend, gray_decode, gray_encode, reframe, sample_gray, DomainCounter,
    ExtendedCounter, WrappingCounter,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("value gray");
    for x in 0..8u64 {
        println!("{x} {:06b}", gray_encode(x));
    }

    // A sample taken while the counter ticks reads either the old or the
    // new value, never a mix.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counter = WrappingCounter::new(6)?;
    counter.set(63);
    let mut ext = ExtendedCounter::from_count(6, 62);
    for _ in 0..4 {
        let low = gray_decode(sample_gray(&counter, true, &mut rng));
        ext = extend(ext, low)?;
        println!("sampled {low:2} -> extended {}", ext.extended());
    }

    let mut rx = DomainCounter::new(6)?;
    let mut tx = DomainCounter::new(6)?;
    rx.advance_to(1_000_040)?;
    tx.advance_to(1_000_000)?;
    let occ = ddc_occupancy(rx.extended(), tx.extended());
    println!("received 1000040, forwarded 1000000: occupancy {}", occ.value());

    let r = reframe(occ, 16, 32)?;
    println!(
        "recentered to {} of {} frames, logical latency changes by {}",
        r.buffer.occupancy(),
        r.buffer.depth(),
        r.lambda_delta
    );

    // Two samples more than half the counter range apart cannot be told
    // apart from a wrap, so extension refuses them.
    println!("{:?}", extend(ExtendedCounter::from_count(6, 0), 40));
    Ok(())
}
