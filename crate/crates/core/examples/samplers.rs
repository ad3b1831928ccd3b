//! The random variates behind the Gibbs samplers: the augmentation variable
//! λ ~ GIG(1/2, 1, χ), table counts with Stirling-number weights, and
//! stick-breaking proportions.

use bayespa::medhdp::{sample_table_count, stick_weights, StickPosterior};
use bayespa::numerics::{log_stirling_table, sample_gig_half, RngStream};

fn main() -> bayespa::Result<()> {
    let mut rng = RngStream::new(1);
    let n = 100_000;
    for chi in [0.25, 1.0, 4.0] {
        let mean: f64 = (0..n)
            .map(|_| sample_gig_half(&mut rng, chi))
            .sum::<bayespa::Result<f64>>()?
            / n as f64;
        // E[λ] = √χ + 1 for GIG(1/2, 1, χ).
        println!("chi = {chi}: mean lambda {mean:.4}, exact {:.4}", chi.sqrt() + 1.0);
    }

    let table = log_stirling_table(3, 64)?;
    let mut scratch = Vec::new();
    let mut counts = [0usize; 3];
    for _ in 0..n {
        counts[sample_table_count(3, 1.0, &table, &mut scratch, &mut rng)? - 1] += 1;
    }
    let freq: Vec<String> = counts.iter().map(|&c| format!("{:.4}", c as f64 / n as f64)).collect();
    println!(
        "tables for 3 customers, weight 1: {} (exact 1/3, 1/2, 1/6)",
        freq.join(" ")
    );

    let sticks = StickPosterior::new(4, 1.0);
    let pibar = sticks.sample(&[5.0, 2.0, 1.0, 0.0], &mut rng)?;
    let (pi, rest) = stick_weights(&pibar);
    println!("stick weights {pi:.3?}, unassigned mass {rest:.3}");
    Ok(())
}
