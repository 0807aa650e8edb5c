//! Scenario files shipped with the binary, addressable as `preset:<name>`.

pub const PRESETS: &[(&str, &str)] = &[
    ("fig2_sb", include_str!("../presets/fig2_sb.toml")),
    ("fig2_cb", include_str!("../presets/fig2_cb.toml")),
    ("fig3_sweep", include_str!("../presets/fig3_sweep.toml")),
    ("fig4_motif", include_str!("../presets/fig4_motif.toml")),
    ("fig4_control", include_str!("../presets/fig4_control.toml")),
    ("fig5_entangle", include_str!("../presets/fig5_entangle.toml")),
    ("fig5_perturbed", include_str!("../presets/fig5_perturbed.toml")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
