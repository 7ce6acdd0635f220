use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::simulation::SimulationReport;

const ROW: f64 = 28.0;
const LABEL: f64 = 110.0;
const PLOT: f64 = 600.0;

fn open(width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"monospace\" font-size=\"12\">\n"
    )
}

/// One jittered strip of outcomes per function, functions by increasing
/// collisions. The jitter is seeded, so the file is reproducible.
pub fn strip_plot(report: &SimulationReport) -> String {
    let ranking = report.ranking();
    let height = ROW * ranking.len() as f64 + 20.0;
    let mut out = open(LABEL + PLOT + 10.0, height);
    let range = 2f64.powi(report.spec.token_bits.min(64) as i32);
    let mut rng = ChaCha8Rng::seed_from_u64(report.spec.rng_seed);
    for (row, (f, _)) in ranking.iter().enumerate() {
        let y0 = 10.0 + ROW * row as f64;
        let _ = writeln!(
            out,
            "<text x=\"4\" y=\"{:.1}\">{}</text>",
            y0 + ROW / 2.0 + 4.0,
            f.sql_name()
        );
        let stats = report.stats(*f).expect("ranked function");
        for v in stats.outcomes.iter().flatten() {
            let x = LABEL + PLOT * (*v as f64 / range);
            let y = y0 + 4.0 + rng.gen::<f64>() * (ROW - 8.0);
            let _ = writeln!(
                out,
                "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"1.2\" fill-opacity=\"0.4\"/>"
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Horizontal bars of collision counts, functions by increasing collisions.
pub fn collision_histogram(report: &SimulationReport) -> String {
    let ranking = report.ranking();
    let height = ROW * ranking.len() as f64 + 20.0;
    let mut out = open(LABEL + PLOT + 60.0, height);
    let scale = PLOT / report.population_size.max(1) as f64;
    for (row, (f, c)) in ranking.iter().enumerate() {
        let y = 10.0 + ROW * row as f64;
        let w = *c as f64 * scale;
        let _ = writeln!(
            out,
            "<text x=\"4\" y=\"{:.1}\">{}</text>",
            y + ROW / 2.0 + 4.0,
            f.sql_name()
        );
        let _ = writeln!(
            out,
            "<rect x=\"{LABEL}\" y=\"{:.1}\" width=\"{w:.1}\" height=\"{:.1}\"/>",
            y + 4.0,
            ROW - 8.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\">{c}</text>",
            LABEL + w + 4.0,
            y + ROW / 2.0 + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}
