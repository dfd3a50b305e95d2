//! Scenario presets, configuration, and the reproducible CSV/SVG runner.
