//! SVG and CSV output for two-dimensional scenes and growth logs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::bundle::RegionBundle;
use crate::raster::Raster;
use crate::regions::{IterationRecord, TcPolytope};
use crate::{Error, Result};

const SIZE: f64 = 400.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Counter-clockwise vertices of a bounded two-dimensional polytope, from
/// pairwise row intersections that satisfy every row.
pub fn polygon_vertices(p: &TcPolytope) -> Result<Vec<[f64; 2]>> {
    if p.dim() != 2 {
        return Err(Error::Dimension { expected: 2, found: p.dim() });
    }
    let tol = 1e-9;
    let mut pts: Vec<[f64; 2]> = Vec::new();
    for i in 0..p.num_rows() {
        for j in i + 1..p.num_rows() {
            let (a, b, c, d) = (p.c[(i, 0)], p.c[(i, 1)], p.c[(j, 0)], p.c[(j, 1)]);
            let det = a * d - b * c;
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (p.d[i] * d - b * p.d[j]) / det;
            let y = (a * p.d[j] - c * p.d[i]) / det;
            if p.max_violation(&[x, y]) <= tol && !pts.iter().any(|q| (q[0] - x).abs() + (q[1] - y).abs() < 1e-9) {
                pts.push([x, y]);
            }
        }
    }
    if pts.is_empty() {
        return Ok(pts);
    }
    let n = pts.len() as f64;
    let cx = pts.iter().map(|q| q[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|q| q[1]).sum::<f64>() / n;
    pts.sort_by(|u, v| (u[1] - cy).atan2(u[0] - cx).total_cmp(&(v[1] - cy).atan2(v[0] - cx)));
    Ok(pts)
}

/// Maps tangent coordinates to pixels, `y` pointing down.
struct Frame {
    lower: [f64; 2],
    upper: [f64; 2],
}

impl Frame {
    fn map(&self, s: [f64; 2]) -> (f64, f64) {
        let x = (s[0] - self.lower[0]) / (self.upper[0] - self.lower[0]) * SIZE;
        let y = SIZE - (s[1] - self.lower[1]) / (self.upper[1] - self.lower[1]) * SIZE;
        (x, y)
    }
}

fn svg_open(out: &mut String) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    let _ = writeln!(out, "<rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>");
}

/// Polygon element of a region, or an empty string for an empty region.
pub fn region_polygon(p: &TcPolytope, lower: [f64; 2], upper: [f64; 2], color: &str) -> Result<String> {
    let frame = Frame { lower, upper };
    let verts = polygon_vertices(p)?;
    if verts.is_empty() {
        return Ok(String::new());
    }
    let pts: Vec<String> = verts
        .iter()
        .map(|&v| {
            let (x, y) = frame.map(v);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    Ok(format!(
        "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.35\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
        pts.join(" ")
    ))
}

/// Collision cells in grey with region polygons on top.
pub fn raster_svg(raster: &Raster, regions: &[TcPolytope]) -> Result<String> {
    let frame = Frame { lower: raster.lower, upper: raster.upper };
    let mut out = String::new();
    svg_open(&mut out);
    let h = raster.step();
    for j in 0..raster.resolution {
        let mut i = 0;
        while i < raster.resolution {
            if !raster.is_collision(i, j) {
                i += 1;
                continue;
            }
            let start = i;
            while i < raster.resolution && raster.is_collision(i, j) {
                i += 1;
            }
            let lo = [raster.lower[0] + start as f64 * h[0], raster.lower[1] + (j + 1) as f64 * h[1]];
            let (x, y) = frame.map(lo);
            let w = (i - start) as f64 * SIZE / raster.resolution as f64;
            let _ = writeln!(
                out,
                "<rect x=\"{x:.3}\" y=\"{y:.3}\" width=\"{w:.3}\" height=\"{:.3}\" fill=\"#808080\"/>",
                SIZE / raster.resolution as f64
            );
        }
    }
    for (k, p) in regions.iter().enumerate() {
        let poly = region_polygon(p, raster.lower, raster.upper, PALETTE[k % PALETTE.len()])?;
        if !poly.is_empty() {
            let _ = writeln!(out, "{poly}");
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// One row per logged iteration of every bundle.
pub fn volume_csv(logs: &[&[IterationRecord]]) -> String {
    let mut out = String::from("region,iteration,det_q,certify_secs,grow_secs,ellipsoid_secs,contracted\n");
    for (k, log) in logs.iter().enumerate() {
        for r in *log {
            let _ = writeln!(
                out,
                "{k},{},{:e},{:.6},{:.6},{:.6},{}",
                r.iteration, r.det_q, r.certify_secs, r.grow_secs, r.ellipsoid_secs, r.contracted
            );
        }
    }
    out
}

/// `det Q` against iteration on a log scale, one curve per region.
pub fn volume_svg(logs: &[&[IterationRecord]]) -> String {
    let mut out = String::new();
    svg_open(&mut out);
    let all: Vec<&IterationRecord> = logs.iter().flat_map(|l| l.iter()).filter(|r| r.det_q > 0.0).collect();
    if !all.is_empty() {
        let max_it = all.iter().map(|r| r.iteration).max().unwrap_or(0).max(1) as f64;
        let lo = all.iter().map(|r| r.det_q.log10()).fold(f64::INFINITY, f64::min);
        let hi = all.iter().map(|r| r.det_q.log10()).fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(1e-9);
        for (k, log) in logs.iter().enumerate() {
            let pts: Vec<String> = log
                .iter()
                .filter(|r| r.det_q > 0.0)
                .map(|r| {
                    let x = 20.0 + r.iteration as f64 / max_it * (SIZE - 40.0);
                    let y = SIZE - 20.0 - (r.det_q.log10() - lo) / span * (SIZE - 40.0);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            let _ = writeln!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>",
                pts.join(" "),
                PALETTE[k % PALETTE.len()]
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `volume.csv`, `volume.svg` and, given a raster, `regions.svg`
/// into `dir`. Returns the written paths.
pub fn emit_plots(dir: impl AsRef<Path>, bundles: &[RegionBundle], raster: Option<&Raster>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let logs: Vec<&[IterationRecord]> = bundles.iter().map(|b| b.log.as_slice()).collect();
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        written.push(path);
        Ok(())
    };
    put("volume.csv", volume_csv(&logs))?;
    put("volume.svg", volume_svg(&logs))?;
    if let Some(r) = raster {
        let regions: Vec<TcPolytope> = bundles.iter().map(|b| b.polytope.clone()).collect();
        put("regions.svg", raster_svg(r, &regions)?)?;
    }
    Ok(written)
}
