//! Scores a small set of predictions with RMSE and threshold accuracy and
//! prints the report table.

use monodist::eval::{Matching, DEFAULT_THRESHOLD};
use monodist::{build_report, MatchedPair};

fn main() -> monodist::Result<()> {
    let rows = [
        ("car", 53.9, 53.21),
        ("person", 21.5, 21.35),
        ("bus", 48.7, 48.13),
        ("chair", 3.5, 3.45),
        ("person", 8.0, 8.09),
        ("car", 10.1, 9.83),
        ("person", 8.0, 8.13),
        ("person", 12.0, 11.69),
        ("person", 4.0, 3.88),
    ];
    let matching = Matching {
        pairs: rows
            .iter()
            .map(|&(class, truth, predicted)| MatchedPair::new(class, predicted, truth))
            .collect(),
        ..Matching::default()
    };
    let report = build_report(matching, DEFAULT_THRESHOLD)?;
    print!("{}", report.render_table());
    Ok(())
}
