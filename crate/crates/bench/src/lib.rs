//! Shared fixtures for the benchmarks.

use keelson::world::{ChannelLayout, MooredVessel, PcgParams, Side};
use keelson::ObstacleWorld;

/// The four-section channel with one moored hull per section used by the transit demo.
pub fn channel(seed: u64) -> (ChannelLayout, ObstacleWorld) {
    let pcg = PcgParams {
        n_segments: 4,
        seed,
        width_range: [28.0, 40.0],
        angle_max: 0.45,
        segment_length_range: [70.0, 100.0],
    };
    let layout = ChannelLayout::generate(&pcg).expect("valid parameters");
    let m = |segment, side, along| MooredVessel { segment, side, along, length: 14.0, beam: 5.0, gap: 0.5 };
    let moorings = [m(0, Side::Left, 0.6), m(1, Side::Right, 0.5), m(2, Side::Left, 0.4), m(3, Side::Right, 0.6)];
    let world = layout.to_world_with_moorings(&moorings).expect("moorings fit");
    (layout, world)
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_has_banks_and_hulls() {
        let (layout, world) = super::channel(1);
        assert_eq!(layout.n_sections(), 4);
        assert!(world.obstacles().len() >= 6);
    }
}
