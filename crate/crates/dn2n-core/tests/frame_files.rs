//! File-format properties across many random frames.

use dn2n_core::imaging::{read_dnf, write_dnf, Domain, Image};
use dn2n_core::rng::StreamRng;

#[test]
fn float_frame_round_trip_is_bit_exact_on_100_random_frames() {
    let dir = std::env::temp_dir().join("dn2n-core-roundtrip");
    std::fs::create_dir_all(&dir).unwrap();
    for case in 0..100u64 {
        let mut rng = StreamRng::new(case, "roundtrip-frames", &[]);
        let h = 1 + (rng.next_u64() % 24) as usize;
        let w = 1 + (rng.next_u64() % 24) as usize;
        let pixels: Vec<f64> = (0..h * w)
            .map(|_| {
                // a mix of scales, including subnormal-ish and large values
                let z = rng.next_gaussian();
                let scale = match rng.next_u64() % 4 {
                    0 => 1e-300,
                    1 => 1.0,
                    2 => 255.0,
                    _ => 1e12,
                };
                z * scale
            })
            .collect();
        let im = Image::new(h, w, Domain::Raw255, pixels).unwrap();
        let path = dir.join(format!("f{case}.dnf"));
        write_dnf(&path, &im).unwrap();
        let back = read_dnf(&path, Domain::Raw255).unwrap();
        assert_eq!(im.pixels().len(), back.pixels().len());
        for (a, b) in im.pixels().iter().zip(back.pixels()) {
            assert_eq!(a.to_bits(), b.to_bits(), "case {case}");
        }
    }
}
