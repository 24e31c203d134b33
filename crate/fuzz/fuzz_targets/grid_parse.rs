#![no_main]

use libfuzzer_sys::fuzz_target;

use exbound_cli::scenario::{grid_points, parse_grid};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = parse_grid(text) {
        let points = grid_points(grid);
        assert_eq!(points.len(), grid.2);
        assert!(points.iter().all(|p| p.is_finite()));
        assert!(points.windows(2).all(|w| w[0] <= w[1]));
    }
});
