use crate::error::CliError;
use crate::files;
use clap::Args;
use construal::worlds::{GridWorld, ObstacleRole, PlinkoWorld, World};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Args)]
pub struct RenderArgs {
    #[arg(long)]
    world: PathBuf,
    /// Construal CSV (world_id, object_id, weight, ...).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Which world's rows to use; defaults to the world file name.
    #[arg(long)]
    world_id: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

const CELL: f64 = 32.0;
const LIGHT: (f64, f64, f64) = (247.0, 252.0, 245.0);
const DARK: (f64, f64, f64) = (0.0, 68.0, 27.0);
const UNWEIGHTED: &str = "#9e9e9e";

/// Light-to-dark green for `w` in [0, 1].
pub fn green(w: f64) -> String {
    let t = w.clamp(0.0, 1.0);
    let mix = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(LIGHT.0, DARK.0), mix(LIGHT.1, DARK.1), mix(LIGHT.2, DARK.2))
}

fn read_weights(path: &Path, world_id: &str) -> Result<BTreeMap<String, f64>, CliError> {
    let bytes = files::read(path)?;
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let headers = rdr.headers().map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| CliError::Domain(format!("{}: missing column {name}", path.display())))
    };
    let (wi, oi, vi) = (col("world_id")?, col("object_id")?, col("weight")?);
    let mut out = BTreeMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Domain(format!("{} row {}: {e}", path.display(), row + 2)))?;
        if &rec[wi] != world_id {
            continue;
        }
        let w: f64 = rec[vi]
            .parse()
            .ok()
            .filter(|w: &f64| w.is_finite())
            .ok_or_else(|| CliError::Domain(format!("{} row {}: bad weight {:?}", path.display(), row + 2, &rec[vi])))?;
        out.insert(rec[oi].to_string(), w);
    }
    Ok(out)
}

fn check_ids(world_ids: &[String], weights: &BTreeMap<String, f64>, world_id: &str) -> Result<(), CliError> {
    let expected: Vec<&String> = world_ids.iter().collect();
    let got: Vec<&String> = weights.keys().collect();
    let mut sorted = expected.clone();
    sorted.sort();
    if sorted != got {
        return Err(CliError::Domain(format!(
            "weights for {world_id} name objects {:?} but the world has {:?}",
            got, sorted
        )));
    }
    Ok(())
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    out.push_str(concat!(
        "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" patternTransform=\"rotate(45)\">",
        "<rect width=\"6\" height=\"6\" fill=\"#e0e0e0\"/><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#757575\" stroke-width=\"2\"/>",
        "</pattern></defs>\n"
    ));
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>"##);
}

fn fill_for(id: &str, probe_eligible: bool, weights: Option<&BTreeMap<String, f64>>) -> String {
    if !probe_eligible {
        return "url(#hatch)".into();
    }
    match weights {
        Some(w) => green(w[id]),
        None => UNWEIGHTED.into(),
    }
}

fn render_grid(w: &GridWorld, weights: Option<&BTreeMap<String, f64>>) -> String {
    let (width, height) = (w.width as f64 * CELL, w.height as f64 * CELL);
    let mut s = String::new();
    header(&mut s, width, height);
    for x in 0..=w.width {
        let _ = writeln!(s, r##"<line x1="{0}" y1="0" x2="{0}" y2="{height}" stroke="#e0e0e0"/>"##, x as f64 * CELL);
    }
    for y in 0..=w.height {
        let _ = writeln!(s, r##"<line x1="0" y1="{0}" x2="{width}" y2="{0}" stroke="#e0e0e0"/>"##, y as f64 * CELL);
    }
    for o in &w.objects {
        let fill = fill_for(&o.id, true, weights);
        let _ = writeln!(s, r#"<g id="{}">"#, o.id);
        for c in &o.cells {
            let _ = writeln!(
                s,
                r##"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#424242" stroke-width="0.5"/>"##,
                c.x as f64 * CELL,
                c.y as f64 * CELL
            );
        }
        s.push_str("</g>\n");
    }
    let centre = |c: construal::worlds::Cell| ((c.x as f64 + 0.5) * CELL, (c.y as f64 + 0.5) * CELL);
    let (sx, sy) = centre(w.start);
    let (gx, gy) = centre(w.goal);
    let _ = writeln!(s, r##"<circle cx="{sx}" cy="{sy}" r="{}" fill="#1f77b4"/>"##, CELL * 0.3);
    let _ = writeln!(
        s,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#ff7f0e"/>"##,
        gx - CELL * 0.3,
        gy - CELL * 0.3,
        CELL * 0.6,
        CELL * 0.6
    );
    s.push_str("</svg>\n");
    s
}

fn render_plinko(w: &PlinkoWorld, weights: Option<&BTreeMap<String, f64>>) -> String {
    let mut s = String::new();
    header(&mut s, w.width, w.height);
    let _ = writeln!(s, r##"<line x1="0" y1="{0}" x2="{1}" y2="{0}" stroke="#424242" stroke-width="2"/>"##, w.floor_y, w.width);
    if let Some(n) = w.bucket_count {
        for k in 1..n {
            let x = w.width * k as f64 / n as f64;
            let _ = writeln!(s, r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#9e9e9e"/>"##, w.floor_y, w.height);
        }
    }
    for (k, o) in w.obstacles.iter().enumerate() {
        let points: Vec<String> = o.polygon.iter().map(|p| format!("{},{}", p.x, p.y)).collect();
        let dash = match w.role(k) {
            ObstacleRole::Solid => "",
            _ => r#" stroke-dasharray="4 3""#,
        };
        let _ = writeln!(
            s,
            r##"<polygon id="{}" points="{}" fill="{}" stroke="#424242"{dash}/>"##,
            o.id,
            points.join(" "),
            fill_for(&o.id, o.probe_eligible, weights)
        );
    }
    let _ = writeln!(s, r##"<circle cx="{}" cy="{}" r="{}" fill="#d62728"/>"##, w.ball.x, w.ball.y, w.ball.radius);
    s.push_str("</svg>\n");
    s
}

pub fn run(a: RenderArgs) -> Result<(), CliError> {
    let world = files::load_world(&a.world)?;
    let world_id = a.world_id.clone().unwrap_or_else(|| files::world_id(&a.world));
    let weights = match &a.weights {
        Some(p) => {
            let w = read_weights(p, &world_id)?;
            check_ids(&world.object_ids(), &w, &world_id)?;
            Some(w)
        }
        None => None,
    };
    let svg = match &world {
        World::Grid(g) => render_grid(g, weights.as_ref()),
        World::Plinko(p) => render_plinko(p, weights.as_ref()),
    };
    files::write_atomic(&a.out, svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_endpoints() {
        assert_eq!(green(0.0), "#f7fcf5");
        assert_eq!(green(1.0), "#00441b");
        assert_eq!(green(2.0), green(1.0));
    }
}
