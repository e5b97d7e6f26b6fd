//! Standalone SVG renderings of the input map, the transformed network and
//! the final grid layout.

use std::fmt::Write as _;

use gridmap::geometry::{BBox, Point, RegionSet};
use gridmap::gridfit::LayoutJson;
use gridmap::network::LinearNetwork;

const WIDTH: f64 = 800.0;
const PAD: f64 = 20.0;

/// Maps map coordinates (y up) to SVG pixels (y down) at a fixed width.
struct Canvas {
    bbox: BBox,
    scale: f64,
    body: String,
}

impl Canvas {
    fn new(bbox: BBox) -> Self {
        let span = bbox.width().max(bbox.height()).max(f64::MIN_POSITIVE);
        Canvas {
            bbox,
            scale: (WIDTH - 2.0 * PAD) / span,
            body: String::new(),
        }
    }

    fn x(&self, p: Point) -> f64 {
        PAD + (p.x - self.bbox.min_x) * self.scale
    }

    fn y(&self, p: Point) -> f64 {
        PAD + (self.bbox.max_y - p.y) * self.scale
    }

    fn points(&self, ring: &[Point]) -> String {
        ring.iter()
            .map(|&p| format!("{:.3},{:.3}", self.x(p), self.y(p)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn polygon(&mut self, class: &str, ring: &[Point]) {
        let pts = self.points(ring);
        let _ = writeln!(self.body, r#"<polygon class="{class}" points="{pts}"/>"#);
    }

    fn line(&mut self, class: &str, a: Point, b: Point) {
        let (x1, y1, x2, y2) = (self.x(a), self.y(a), self.x(b), self.y(b));
        let _ = writeln!(
            self.body,
            r#"<line class="{class}" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#
        );
    }

    fn circle(&mut self, class: &str, p: Point, r: f64) {
        let (cx, cy) = (self.x(p), self.y(p));
        let _ = writeln!(
            self.body,
            r#"<circle class="{class}" cx="{cx:.3}" cy="{cy:.3}" r="{r}"/>"#
        );
    }

    fn label(&mut self, p: Point, text: &str, size: f64) {
        let (x, y) = (self.x(p), self.y(p));
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.3}" y="{y:.3}" font-size="{size:.1}" text-anchor="middle" dominant-baseline="central">{}</text>"#,
            escape(text)
        );
    }

    fn finish(self, style: &str) -> String {
        let height = PAD * 2.0 + self.bbox.height() * self.scale;
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {WIDTH:.0} {height:.3}\">\n\
             <style>{style}</style>\n{}</svg>\n",
            self.body
        )
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Input regions with centroids and the outer boundary.
pub fn render_regions(rs: &RegionSet) -> String {
    let mut c = Canvas::new(rs.bbox());
    for region in rs.regions() {
        c.polygon("region", region.polygon.ring());
    }
    c.polygon("boundary", rs.boundary().ring());
    for &p in rs.centroids() {
        c.circle("centroid", p, 2.5);
    }
    c.finish(
        ".region{fill:#e8eef6;stroke:#6b7b8c;stroke-width:1}\
         .boundary{fill:none;stroke:#1d2a38;stroke-width:2}\
         .centroid{fill:#c0392b}",
    )
}

/// Network edges (one `line.edge` per edge) drawn under the boundary ring.
pub fn render_network(net: &LinearNetwork, extent: Option<BBox>) -> String {
    let positions = net.positions();
    let own = BBox::from_points(&positions).unwrap_or(BBox {
        min_x: 0.0,
        min_y: 0.0,
        max_x: 1.0,
        max_y: 1.0,
    });
    let mut c = Canvas::new(extent.map_or(own, |e| e.union(&own)));
    for e in net.edges() {
        c.line("edge", positions[e.a], positions[e.b]);
    }
    c.polygon("boundary", &net.boundary_ring());
    for &p in &net.centroid_positions() {
        c.circle("centroid", p, 2.5);
    }
    c.finish(
        ".edge{stroke:#7f8c8d;stroke-width:1}\
         .boundary{fill:none;stroke:#1d2a38;stroke-width:2}\
         .centroid{fill:#c0392b}",
    )
}

/// Grid cells as squares labelled with their region ids.
pub fn render_layout(layout: &LayoutJson) -> String {
    let spec = layout.spec();
    let squares: Vec<Vec<Point>> = layout
        .assignment
        .iter()
        .map(|a| spec.square(a.row, a.col).into_ring())
        .collect();
    let bbox = BBox::from_points(squares.iter().flatten()).unwrap_or(BBox {
        min_x: spec.origin.x,
        min_y: spec.origin.y - spec.s,
        max_x: spec.origin.x + spec.s,
        max_y: spec.origin.y,
    });
    let mut c = Canvas::new(bbox);
    let font = (spec.s * c.scale * 0.22).clamp(6.0, 18.0);
    for (a, square) in layout.assignment.iter().zip(&squares) {
        c.polygon("cell", square);
        c.label(spec.center(a.row, a.col), &a.region_id, font);
    }
    c.finish(
        ".cell{fill:#d6e4f0;stroke:#2c3e50;stroke-width:1.5}\
         text{font-family:sans-serif;fill:#2c3e50}",
    )
}
