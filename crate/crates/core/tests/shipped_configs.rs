use std::path::Path;

use annealbench_core::harness::{parse_config, FigureKind};

fn load(name: &str) -> annealbench_core::harness::SweepSpec {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    parse_config(&path).unwrap_or_else(|e| panic!("{e}"))
}

#[test]
fn shipped_configs_parse_and_resolve() {
    for (name, figure) in [("fig1.ini", FigureKind::Fig1), ("fig3.ini", FigureKind::Fig3), ("fig5.ini", FigureKind::Fig5)] {
        let spec = load(name);
        assert_eq!(spec.figure, Some(figure), "{name}");
        assert_eq!(spec.fits.len(), 4, "{name}");
        for fit in &spec.fits {
            assert!(spec.fit_for(&fit.schedule).is_some());
            assert!(fit.expect_slope.is_some() && fit.tolerance.is_some(), "{name} {}", fit.schedule);
        }
        spec.model.build().unwrap();
    }
}

#[test]
fn lz_windows_span_a_decade_and_a_half() {
    for fit in &load("fig1.ini").fits {
        assert!(fit.window.decades() >= 1.5, "{}: {}", fit.schedule, fit.window.decades());
        assert_eq!(fit.floor, 1e-15);
    }
}
