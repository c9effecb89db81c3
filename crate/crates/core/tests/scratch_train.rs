use evogrid::cnn::*;
use std::time::Instant;

#[test]
fn training_signal_probe() {
    let ds = synthetic_concept_dataset(32, 4242);
    let (train_set, holdout) = split_dataset(&ds, 8);
    for (lr, lambda) in [(0.02, 1.0), (0.05, 1.0), (0.05, 0.3), (0.1, 0.3)] {
        let config = TrainConfig { epochs: 60, lr, lambda, ..TrainConfig::default() };
        let t0 = Instant::now();
        let (model, stats) = train_full(&train_set, Some((&holdout, 0.90)), &config, 7).unwrap();
        let acc = evaluate_accuracy(&model, &holdout);
        let train_acc = evaluate_accuracy(&model, &train_set);
        println!(
            "lr={lr} lambda={lambda}: epochs={} holdout={acc:.3} train={train_acc:.3} loss(first,last)=({:.2},{:.2}) dt={:.0?}",
            stats.epochs_run, stats.loss_history[0], stats.loss_history[stats.epochs_run-1], t0.elapsed()
        );
    }
}
