//! Closed-form constants of the Cassini field and its explicit gradient collisions.

use truncvx::cassini::{ground_truth, CassiniParams};
use truncvx::gradient_map::known_collision;

fn main() -> truncvx::error::Result<()> {
    for a in [0.5, 1.0, 2.0] {
        let t = ground_truth(CassiniParams::new(a)?);
        println!(
            "a = {a}: min {} at (±{a}, 0), nu_max {}, h_max {}, sql = scl = {}",
            t.min_value, t.nu_max, t.h_max, t.scl
        );
    }
    for c in [0.0, 1.0, 2.0] {
        let k = known_collision(1.0, c)?;
        println!(
            "level {c}: ({:.6}, {:.6}) and ({:.6}, {:.6}) share gradient ({}, {:.6})",
            k.p1.x, k.p1.y, k.p2.x, k.p2.y, k.image[0], k.image[1]
        );
    }
    Ok(())
}
