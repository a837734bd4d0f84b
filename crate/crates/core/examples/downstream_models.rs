//! The three downstream classifiers on the breast table.

use vfedtrans::dataset::load_breast;
use vfedtrans::downstream::{accuracy, fit, predict, ClassifierConfig, ClassifierKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = load_breast()?;
    let y = ds.labels().expect("breast is labelled");
    let (train, test): (Vec<usize>, Vec<usize>) = (0..ds.rows()).partition(|i| i % 5 != 0);
    let x_train = ds.features().select_rows(&train);
    let x_test = ds.features().select_rows(&test);
    let y_train: Vec<usize> = train.iter().map(|&i| y[i]).collect();
    let y_test: Vec<usize> = test.iter().map(|&i| y[i]).collect();
    for kind in [ClassifierKind::Rf, ClassifierKind::Knn, ClassifierKind::Mlp] {
        let model = fit(&x_train, &y_train, &ClassifierConfig::of(kind), 0)?;
        let acc = accuracy(&predict(&model, &x_test)?, &y_test)?;
        println!("{kind:>4}: {:.2}%", 100.0 * acc);
    }
    Ok(())
}
