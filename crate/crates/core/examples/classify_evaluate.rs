//! Classifies inferred styles and scores a split.

use hma::classify::{knn_classify, Target};
use hma::data::{generate_synthetic, Provenance, Split, SyntheticSpec};
use hma::pipeline::{evaluate_split, train_model, PredictOptions, TrainOptions};

fn main() -> hma::Result<()> {
    let spec = SyntheticSpec {
        object_count: 6,
        category_count: 3,
        ..SyntheticSpec::default()
    };
    let manifest = generate_synthetic(&spec)?;
    let container = train_model(&manifest, &TrainOptions::default(), Provenance::default())?.container;
    let support = container.support()?;

    let probe = container.space.style(4) * 0.9 + container.space.style(1) * 0.1;
    println!(
        "probe near obj4: instance {}, category {}",
        knn_classify(&support, &probe, 1, Target::Instance)?,
        knn_classify(&support, &probe, 3, Target::Category)?
    );

    let (_, report) = evaluate_split(&container, &manifest, Split::Test, &PredictOptions::default(), 0)?;
    for (name, value) in report.fields() {
        println!("{name:<40} {value}");
    }
    Ok(())
}
