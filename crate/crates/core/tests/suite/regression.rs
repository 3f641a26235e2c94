//! Frozen outputs of the pyramid run (dt = 1e-3, 30 s). A change here means the
//! numerics moved, not necessarily that they got worse.

use bearing_formation::io::write_edges_csv;
use bearing_formation::presets;
use bearing_formation::sim::simulate;

#[test]
fn pyramid_final_errors() {
    let log = simulate(&presets::pyramid()).unwrap();
    let frozen = [1.3493283819279946e-2, 1.3723218683234792, 1.2759795617405403];
    for (e, want) in log.edges.iter().zip(frozen) {
        let got = *e.err_x.last().unwrap();
        assert!((got - want).abs() <= 1e-9 * want, "edge ({}, {}): {got} vs {want}", e.i, e.j);
    }
    let mut buf = Vec::new();
    write_edges_csv(&log, &mut buf).unwrap();
    assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 1 + 3 * 30_001);
}
