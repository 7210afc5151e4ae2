//! Static bifurcation diagram as SVG.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::branch::{BranchGraph, EdgeKind, Node, NodeKind};
use crate::conley::IndexProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramStyle {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
}

impl Default for DiagramStyle {
    fn default() -> Self {
        DiagramStyle {
            width: 800.0,
            height: 500.0,
            margin: 60.0,
        }
    }
}

/// V-norm signed by the largest coefficient.
pub fn signed_norm(node: &Node) -> f64 {
    let c = &node.equilibrium.coeffs;
    let lead = c
        .iter()
        .copied()
        .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if lead < 0.0 {
        -node.equilibrium.v_norm
    } else {
        node.equilibrium.v_norm
    }
}

const DASH: &str = " stroke-dasharray=\"6 4\"";

/// λ horizontal, signed V-norm vertical. Solid lines join stable
/// equilibria, dashed lines unstable ones. Identical inputs give identical
/// bytes.
pub fn render_diagram(
    graph: &BranchGraph,
    profile: Option<&IndexProfile>,
    style: &DiagramStyle,
) -> String {
    let (w, h, m) = (style.width, style.height, style.margin);
    let (lo, hi) = graph.window;
    let ymax = graph
        .component()
        .map(|n| n.equilibrium.v_norm)
        .fold(1.0f64, f64::max)
        * 1.1;
    let sx = |l: f64| m + (l - lo) / (hi - lo) * (w - 2.0 * m);
    let sy = |v: f64| h / 2.0 - v / ymax * (h / 2.0 - m);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{} from γ = {:.6}</text>",
        w / 2.0,
        m / 2.0,
        graph.label,
        graph.gamma
    );
    let _ = writeln!(
        out,
        "<rect x=\"{m:.2}\" y=\"{m:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#888\"/>",
        w - 2.0 * m,
        h - 2.0 * m
    );
    let axis_y = h - m;
    for (l, anchor) in [(lo, "start"), (hi, "end")] {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{anchor}\">{l}</text>",
            sx(l),
            axis_y + 28.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">λ</text>",
        w / 2.0,
        h - 8.0
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 {:.2} {:.2})\">±||u|| (max {:.4})</text>",
        m / 3.0,
        h / 2.0,
        m / 3.0,
        h / 2.0,
        ymax / 1.1
    );

    // Trivial line.
    let trivial: Vec<&Node> = graph
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Trivial)
        .collect();
    for pair in trivial.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let stable = a.equilibrium.morse_index == 0 && b.equilibrium.morse_index == 0;
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#555\" stroke-width=\"1.5\"{}/>",
            sx(a.lambda),
            sy(0.0),
            sx(b.lambda),
            sy(0.0),
            if stable { "" } else { DASH }
        );
    }

    // Bifurcation values and, with a profile, the index of each gap.
    for &g in &graph.upsilon {
        let x = sx(g);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#c00\" stroke-width=\"1.5\"/>",
            axis_y,
            axis_y + 8.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#c00\" text-anchor=\"middle\">{g:.4}</text>",
            axis_y + 18.0
        );
    }
    if let Some(p) = profile {
        for gap in &p.gaps {
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#555\" text-anchor=\"middle\">{}</text>",
                sx(0.5 * (gap.lo.max(lo) + gap.hi.min(hi))),
                axis_y - 6.0,
                gap.value
            );
        }
    }

    // Branch curves of the component.
    for e in &graph.edges {
        if e.kind == EdgeKind::Heteroclinic {
            continue;
        }
        let (Some(a), Some(b)) = (graph.node(e.source), e.target.and_then(|t| graph.node(t)))
        else {
            continue;
        };
        if !(a.in_component && b.in_component) {
            continue;
        }
        let stable = a.equilibrium.morse_index == 0 && b.equilibrium.morse_index == 0;
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#1f4e79\" stroke-width=\"2\"{}/>",
            sx(a.lambda),
            sy(signed_norm(a)),
            sx(b.lambda),
            sy(signed_norm(b)),
            if stable { "" } else { DASH }
        );
    }
    for n in graph.component().filter(|n| n.kind == NodeKind::Discovered) {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"#7a7a7a\"/>",
            sx(n.lambda),
            sy(signed_norm(n))
        );
    }
    let _ = writeln!(
        out,
        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#c00\"/>",
        sx(graph.gamma),
        sy(0.0)
    );
    out.push_str("</svg>\n");
    out
}
