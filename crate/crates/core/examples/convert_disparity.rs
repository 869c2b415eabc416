//! Converts a disparity map to metric depth and round-trips it through PFM.
//!
//! ```text
//! cargo run --example convert_disparity
//! ```

use monodist::maps::{read_pfm_as, to_pfm_bytes};
use monodist::{disparity_to_depth, DepthRange, MapKind, ScalarMap};

fn main() -> monodist::Result<()> {
    let (w, h) = (5, 2);
    let values: Vec<f32> = (0..w * h).map(|i| i as f32 / (w * h - 1) as f32).collect();
    let disparity = ScalarMap::new(w, h, MapKind::Disparity, values)?;
    let range = DepthRange::default();
    let depth = disparity_to_depth(&disparity, &range)?;

    println!("range {} .. {} m", range.min_depth(), range.max_depth());
    for row in 0..h {
        for col in 0..w {
            let v = disparity.get(col, row).unwrap();
            let d = depth.get(col, row).unwrap();
            println!("v = {v:.3}  depth = {d:8.3} m");
        }
    }

    let bytes = to_pfm_bytes(&depth);
    let back = read_pfm_as(&bytes[..], MapKind::Depth)?;
    assert_eq!(back, depth);
    println!("PFM: {} bytes, round trip exact", bytes.len());
    Ok(())
}
