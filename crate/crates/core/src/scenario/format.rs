use std::fmt::Write;

use super::{ScenarioEvent, ScenarioScript};

/// Canonical text for a script: no comments, single spaces, numbers in
/// their shortest exact decimal form (`5s`, not `5.000s`).
pub fn format_scenario(script: &ScenarioScript) -> String {
    let mut out = String::new();
    out.push_str("scenario \"");
    for c in script.name.chars() {
        if matches!(c, '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out.push_str("\"\n");
    for e in &script.events {
        let _ = match e.event {
            ScenarioEvent::Eyes { closed } => writeln!(
                out,
                "at {}s eyes {}",
                e.at,
                if closed { "closed" } else { "open" }
            ),
            ScenarioEvent::Alcohol { ppm } => writeln!(out, "at {}s alcohol {}ppm", e.at, ppm),
            ScenarioEvent::Noise(n) => writeln!(
                out,
                "at {}s noise seed {} jitter {} flip {}",
                e.at, n.seed, n.alcohol_jitter, n.eye_flip_prob
            ),
        };
    }
    let _ = writeln!(out, "end {}s", script.end_at);
    out
}
