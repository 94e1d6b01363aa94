//! SVG output: scene rendering of one frame and the per-size bar chart.

use std::f64::consts::PI;
use std::fmt::Write;

use reform::characterization::{group_center, SizeStats, SizeTable};
use reform::{AgentPose, Frame};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 40.0;
/// Wedge radius in meters and half-opening angle in radians.
const WEDGE_RADIUS: f64 = 0.3;
const WEDGE_HALF_ANGLE: f64 = PI / 6.0;
type Column = fn(&SizeStats) -> f64;

const PALETTE: [&str; 6] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"];

/// World-to-pixel mapping with y pointing up in world space.
struct View {
    x0: f64,
    y1: f64,
    scale: f64,
}

impl View {
    fn fit(agents: &[AgentPose]) -> View {
        let (mut x0, mut x1, mut y0, mut y1) = (0.0f64, 1.0f64, 0.0f64, 1.0f64);
        if let Some(first) = agents.first() {
            (x0, x1, y0, y1) = (first.x, first.x, first.y, first.y);
            for a in agents {
                x0 = x0.min(a.x);
                x1 = x1.max(a.x);
                y0 = y0.min(a.y);
                y1 = y1.max(a.y);
            }
        }
        let pad = 1.0;
        let span = (x1 - x0).max(y1 - y0) + 2.0 * pad;
        View {
            x0: x0 - pad,
            y1: y1 + pad,
            scale: (WIDTH - 2.0 * MARGIN) / span,
        }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (MARGIN + (x - self.x0) * self.scale, MARGIN + (self.y1 - y) * self.scale)
    }

    fn world_span(&self) -> f64 {
        (WIDTH - 2.0 * MARGIN) / self.scale
    }
}

/// Andrew's monotone chain; returns counter-clockwise hull vertices.
fn convex_hull(mut points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points.dedup();
    if points.len() < 3 {
        return points;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> =
            if pass == 0 { Box::new(points.iter()) } else { Box::new(points.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn axes(svg: &mut String, view: &View) {
    let (left, top, bottom, right) = (MARGIN, MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN);
    let _ = writeln!(
        svg,
        r##"<g class="axes" stroke="#444" stroke-width="1"><line class="axis" x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"/><line class="axis" x1="{left}" y1="{bottom}" x2="{left}" y2="{top}"/></g>"##
    );
    let span = view.world_span();
    let _ = writeln!(
        svg,
        r##"<g font-family="sans-serif" font-size="11" fill="#444"><text x="{left}" y="{}">{:.1}</text><text x="{right}" y="{}" text-anchor="end">{:.1} m</text><text x="4" y="{bottom}">{:.1}</text><text x="4" y="{}">{:.1} m</text></g>"##,
        bottom + 16.0,
        view.x0,
        bottom + 16.0,
        view.x0 + span,
        view.y1 - span,
        top + 4.0,
        view.y1,
    );
}

/// One frame as SVG: agents as wedges opening along their body heading,
/// annotated groups as convex hull outlines with a marker at the centroid.
pub fn render_frame(frame: &Frame) -> String {
    let view = View::fit(&frame.agents);
    let mut svg = format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"##
    );
    svg.push('\n');
    let _ = writeln!(svg, "<title>frame {}</title>", frame.frame_id);
    axes(&mut svg, &view);

    let groups = frame.truth.as_ref().map(|g| g.groups().to_vec()).unwrap_or_default();
    for (k, group) in groups.iter().enumerate() {
        let members: Vec<AgentPose> = group.iter().filter_map(|id| frame.agent(*id).copied()).collect();
        let colour = PALETTE[k % PALETTE.len()];
        let hull = convex_hull(members.iter().map(|a| view.px(a.x, a.y)).collect());
        let mut d = String::new();
        for (i, (x, y)) in hull.iter().enumerate() {
            let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" });
        }
        d.push('Z');
        let _ = writeln!(
            svg,
            r##"<path class="hull" d="{d}" fill="{colour}" fill-opacity="0.12" stroke="{colour}" stroke-width="2"/>"##
        );
        if let Ok((cx, cy)) = group_center(&members) {
            let (px, py) = view.px(cx, cy);
            let _ = writeln!(
                svg,
                r##"<circle class="centroid" cx="{px:.2}" cy="{py:.2}" r="3" fill="{colour}"/>"##
            );
        }
    }

    for agent in &frame.agents {
        let colour = groups
            .iter()
            .position(|g| g.contains(&agent.id))
            .map_or("#888", |k| PALETTE[k % PALETTE.len()]);
        let (cx, cy) = view.px(agent.x, agent.y);
        let r = WEDGE_RADIUS * view.scale;
        let edge = |a: f64| view.px(agent.x + WEDGE_RADIUS * a.cos(), agent.y + WEDGE_RADIUS * a.sin());
        let (x1, y1) = edge(agent.body_theta - WEDGE_HALF_ANGLE);
        let (x2, y2) = edge(agent.body_theta + WEDGE_HALF_ANGLE);
        // y is flipped, so counter-clockwise in the world is sweep flag 0
        let _ = writeln!(
            svg,
            r##"<path class="wedge" data-agent="{}" d="M{cx:.2},{cy:.2} L{x1:.2},{y1:.2} A{r:.2},{r:.2} 0 0 0 {x2:.2},{y2:.2} Z" fill="{colour}" stroke="#222" stroke-width="0.8"/>"##,
            agent.id
        );
        let _ = writeln!(
            svg,
            r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" fill="#222">{}</text>"##,
            cx + 4.0,
            cy - 4.0,
            agent.id
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Side-by-side bar charts of mean symmetry and mean tightness per size.
pub fn size_chart(table: &SizeTable) -> String {
    let (w, h) = (720.0, 320.0);
    let panel_w = (w - 3.0 * MARGIN) / 2.0;
    let plot_h = h - 2.0 * MARGIN;
    let mut svg = format!(r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"##);
    svg.push('\n');
    let panels: [(&str, Column); 2] = [
        ("mean symmetry (deg)", |r| r.mean_symmetry),
        ("mean tightness (m)", |r| r.mean_tightness),
    ];
    for (p, (label, value)) in panels.iter().enumerate() {
        let left = MARGIN + p as f64 * (panel_w + MARGIN);
        let bottom = h - MARGIN;
        let top = table.rows.iter().map(value).fold(0.0f64, f64::max);
        let top = if top > 0.0 { top * 1.1 } else { 1.0 };
        let _ = writeln!(
            svg,
            r##"<g class="panel"><text x="{left}" y="{}" font-family="sans-serif" font-size="12">{label}</text><line class="axis" x1="{left}" y1="{bottom}" x2="{}" y2="{bottom}" stroke="#444"/><line class="axis" x1="{left}" y1="{bottom}" x2="{left}" y2="{MARGIN}" stroke="#444"/>"##,
            MARGIN - 10.0,
            left + panel_w
        );
        let slot = panel_w / table.rows.len().max(1) as f64;
        for (i, row) in table.rows.iter().enumerate() {
            let v = value(row);
            let bar_h = v / top * plot_h;
            let x = left + i as f64 * slot + slot * 0.15;
            let _ = writeln!(
                svg,
                r##"<rect class="bar" x="{x:.2}" y="{:.2}" width="{:.2}" height="{bar_h:.2}" fill="#4a7ab5"><title>size {}: {v:.3}</title></rect><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{}</text>"##,
                bottom - bar_h,
                slot * 0.7,
                row.size,
                x + slot * 0.35,
                bottom + 14.0,
                row.size
            );
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    svg
}
