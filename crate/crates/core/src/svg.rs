//! Plain SVG output for level curves and collision overlays.
//!
//! Drawings use window coordinates with the `y` axis pointing up; the flip is
//! a single group transform so path data keeps the original numbers.

use std::fmt::Write as _;

use crate::contour::LevelCurve;
use crate::field::GridSpec;
use crate::gradient_map::CollisionPair;
use crate::hess_region::RegionMask;

const PALETTE: [&str; 6] = ["#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#2c3e50"];

fn open(grid: &GridSpec) -> String {
    let w = grid.x_max - grid.x_min;
    let h = grid.y_max - grid.y_min;
    let stroke = 0.002 * w.max(h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="800" height="{}">"#,
        grid.x_min,
        -grid.y_max,
        w,
        h,
        (800.0 * h / w).round()
    );
    let _ = writeln!(
        s,
        r#"<g transform="scale(1,-1)" fill="none" stroke-width="{stroke}" stroke-linejoin="round">"#
    );
    s
}

fn close(mut s: String) -> String {
    s.push_str("</g>\n</svg>\n");
    s
}

/// One `<path>` per polyline, tagged with `data-level`.
pub fn level_curves_svg(curves: &[LevelCurve], grid: &GridSpec) -> String {
    let mut s = open(grid);
    for (k, curve) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for line in &curve.polylines {
            if line.points.is_empty() {
                continue;
            }
            let mut d = String::new();
            for (i, p) in line.points.iter().enumerate() {
                let _ = write!(d, "{}{} {} ", if i == 0 { 'M' } else { 'L' }, p.x, p.y);
            }
            if line.closed {
                d.push('Z');
            }
            let _ = writeln!(
                s,
                r#"<path data-level="{}" stroke="{color}" d="{}"/>"#,
                curve.level,
                d.trim_end()
            );
        }
    }
    close(s)
}

/// Mask cells as merged row runs, with collision pairs drawn on top.
pub fn collision_overlay_svg(mask: &RegionMask, collisions: &[CollisionPair]) -> String {
    let grid = &mask.grid;
    let mut s = open(grid);
    let (dx, dy) = (grid.dx(), grid.dy());
    s.push_str("<g fill=\"#d6e9f8\" stroke=\"none\">\n");
    for j in 0..grid.ny {
        let mut i = 0;
        while i < grid.nx {
            if !mask.get(i, j) {
                i += 1;
                continue;
            }
            let start = i;
            while i < grid.nx && mask.get(i, j) {
                i += 1;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
                grid.x_min + start as f64 * dx,
                grid.y_min + j as f64 * dy,
                (i - start) as f64 * dx,
                dy
            );
        }
    }
    s.push_str("</g>\n");
    let r = 1.5 * grid.cell_diagonal();
    for c in collisions {
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#c0392b"/>"##,
            c.p1.x, c.p1.y, c.p2.x, c.p2.y
        );
        for p in [c.p1, c.p2] {
            let _ = writeln!(s, r##"<circle cx="{}" cy="{}" r="{r}" fill="#c0392b"/>"##, p.x, p.y);
        }
    }
    close(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::Quadratic;
    use crate::contour::level_curve;
    use crate::hess_region::sublevel_mask;

    #[test]
    fn paths_carry_levels() {
        let grid = GridSpec::square(2.0, 40).unwrap();
        let curves = vec![
            level_curve(&Quadratic, 1.0, &grid).unwrap(),
            level_curve(&Quadratic, 2.0, &grid).unwrap(),
        ];
        let svg = level_curves_svg(&curves, &grid);
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains(r#"data-level="1""#) && svg.contains(r#"data-level="2""#));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn overlay_merges_runs() {
        let grid = GridSpec::square(1.0, 10).unwrap();
        let mask = sublevel_mask(&Quadratic, &grid, 10.0).unwrap();
        let svg = collision_overlay_svg(&mask, &[]);
        assert_eq!(svg.matches("<rect").count(), 10);
    }
}
