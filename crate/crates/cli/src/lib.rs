//! Scenario ingestion and batch execution for the duojaw simulator.
//!
//! A scenario is a TOML file (see [`scenario`]); [`batch::write_outputs`]
//! runs it and writes per-run CSV traces plus a JSON report.

pub mod batch;
pub mod scenario;

use duojaw_core::world::{Catalog, Part};

/// Plain-text table of a catalog, one part per line.
pub fn catalog_listing(catalog: &Catalog) -> String {
    let mut out = format!(
        "{:<22} {:<6} {:<44} {:<8} note\n",
        "id", "kind", "dimensions [mm]", "measured"
    );
    for (id, entry) in &catalog.entries {
        let (kind, dims) = match &entry.part {
            Part::Peg(p) => {
                let head = p
                    .head
                    .map(|h| format!(" head Ø{}x{}", h.diameter_mm, h.length_mm))
                    .unwrap_or_default();
                (
                    "peg",
                    format!(
                        "Ø{} x {}{} chamfer {}",
                        p.shank_diameter_mm, p.length_mm, head, p.tip_chamfer_mm
                    ),
                )
            }
            Part::Bored(b) => {
                let segs: Vec<String> = b
                    .bore_segments
                    .iter()
                    .map(|s| format!("Ø{}x{}", s.diameter_mm, s.depth_mm))
                    .collect();
                let blind = if b.blind { " blind" } else { "" };
                (
                    "bored",
                    format!("{} outer Ø{}{}", segs.join("+"), b.outer_diameter_mm, blind),
                )
            }
        };
        let measured = if entry.measured { "yes" } else { "no" };
        out.push_str(&format!(
            "{:<22} {:<6} {:<44} {:<8} {}\n",
            id.as_str(),
            kind,
            dims,
            measured,
            entry.note
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use duojaw_core::world::ClearanceSpec;

    #[test]
    fn listing_has_one_line_per_part() {
        let c = Catalog::builtin(&ClearanceSpec::default());
        let text = catalog_listing(&c);
        assert_eq!(text.lines().count(), c.entries.len() + 1);
        assert!(text.contains("Ø6.01x11.5"));
    }
}
