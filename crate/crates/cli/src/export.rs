use std::path::Path;

use raman_cnn::viz::{ContributionMap, MapKind};

use crate::error::Result;
use crate::fsio;
use crate::ingest::write_map_csv;
use crate::plot::{line_plot, Series};

pub fn method_name(kind: MapKind) -> &'static str {
    match kind {
        MapKind::GradCam => "gradcam",
        MapKind::FcMap => "fcmap",
    }
}

/// Writes `<stem>.csv` and `<stem>.svg` into `dir`, returning their file
/// names.
pub fn export_map(dir: &Path, stem: &str, grid: &[f64], input: &[f64], map: &ContributionMap) -> Result<Vec<String>> {
    let csv_name = format!("{stem}.csv");
    let svg_name = format!("{stem}.svg");
    write_map_csv(&dir.join(&csv_name), grid, &map.values)?;
    let x_label = if grid.first().is_some_and(|&g| g > 0.0) {
        "Raman shift (1/cm)"
    } else {
        "channel"
    };
    let label = format!("{} (class {})", method_name(map.kind), map.target_class);
    let svg = line_plot(
        &format!("{stem}: {label}"),
        x_label,
        grid,
        &[
            Series {
                label: "input (normalized)",
                color: "black",
                values: input,
            },
            Series {
                label: &label,
                color: if map.kind == MapKind::GradCam { "green" } else { "blue" },
                values: &map.values,
            },
        ],
    );
    fsio::write_atomic(&dir.join(&svg_name), svg.as_bytes())?;
    Ok(vec![csv_name, svg_name])
}
