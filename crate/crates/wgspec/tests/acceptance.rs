//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Select criteria with `cargo test -p wgspec --test acceptance -- A4 A11`.

use wgspec::acceptance::{self, Ctx};

fn main() {
    let only: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with('A')).collect();
    let ctx = Ctx::default();
    let mut failed = Vec::new();
    for c in acceptance::criteria().iter().filter(|c| only.is_empty() || only.iter().any(|o| o == c.id)) {
        let v = acceptance::evaluate(c, &ctx, c.tolerance);
        println!("{}", v.line());
        if !v.pass {
            failed.push(v.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed {}", failed.join(", "));
        std::process::exit(1);
    }
}
