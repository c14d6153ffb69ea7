//! Learns a style space from several objects and recovers each style in
//! closed form from its own mapping.

use hma::data::{generate_synthetic, Provenance, SyntheticSpec};
use hma::factor::{closed_form_style, degeneracy_rank, StyleDim, StyleSpace, DEFAULT_DEGENERACY_TOL};
use hma::pipeline::{train_model, TrainOptions};

fn main() -> hma::Result<()> {
    let manifest = generate_synthetic(&SyntheticSpec::default())?;
    let trained = train_model(&manifest, &TrainOptions::default(), Provenance::default())?;
    let space = &trained.container.space;
    println!("singular values {:.4?}", space.singular_values());

    for (k, model) in trained.models.iter().enumerate() {
        let s = closed_form_style(space, model)?;
        let (rank, degenerate) = degeneracy_rank(model, DEFAULT_DEGENERACY_TOL);
        println!(
            "{}: |s - s_k| = {:.1e}, rank {rank}, degenerate {degenerate}",
            trained.container.object_ids[k],
            (s - space.style(k)).norm()
        );
    }

    let small = StyleSpace::learn(&trained.models, StyleDim::Truncated(2))?;
    println!("truncated to {} style dimensions", small.style_dim());
    Ok(())
}
