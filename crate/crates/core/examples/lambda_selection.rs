//! Picks the ridge penalty by the zero-one Pconf validation score on a
//! held-out split, using only positive data, then evaluates on labeled data.

use pconf::data::{sample_labeled_dataset, sample_pconf_dataset, TwoGaussianSpec};
use pconf::dataset::{write_labeled_csv, write_pconf_csv};
use pconf::harness::single::{evaluate_files, result_path, train_single, SingleConfig};
use pconf::harness::Method;

fn main() -> pconf::Result<()> {
    let dir = std::env::temp_dir().join("pconf-lambda-selection");
    std::fs::create_dir_all(&dir).map_err(|e| pconf::Error::Io { path: dir.clone(), source: e })?;
    let train = dir.join("train.csv");
    let test = dir.join("test.csv");
    let model = dir.join("model.txt");

    let spec = TwoGaussianSpec::planar([2.5, 2.5], 8);
    write_pconf_csv(&train, &sample_pconf_dataset(&spec, 500)?)?;
    write_labeled_csv(&test, &sample_labeled_dataset(&spec.with_seed(9), 1000, 1000)?)?;

    let mut cfg = SingleConfig::new(Method::Pconf, &train);
    cfg.lambda_grid = vec![1e-4, 1e-2, 1.0, 100.0];
    cfg.model_out = Some(model.clone());
    let (_, result) = train_single(&cfg)?;

    for (lambda, score) in &result.selection {
        println!("lambda {lambda:<8} validation score {score:.4}");
    }
    println!("chose lambda = {}", result.lambda);
    print!("{}", evaluate_files(&model, &test)?.to_record());
    println!("result record at {}", result_path(&model).display());
    Ok(())
}
