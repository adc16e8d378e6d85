//! Scratch calibration harness (not part of the test suite).

use mscr_core::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind = match args.get(1).map(|s| s.as_str()).unwrap_or("two_moons") {
        "rings" => SynthKind::Rings,
        "blobs" => SynthKind::Blobs,
        _ => SynthKind::TwoMoons,
    };
    let n: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(4000);
    let noise: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.05);
    let seed: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(1);
    let runs: usize = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(60);

    let data = synth_2d(kind, n, noise, seed).unwrap();
    let sep = min_class_separation(&data, NormMetric::Linf, 0).unwrap();
    println!(
        "dataset {:?} n={n} noise={noise} seed={seed}: two_r={:.6} eps_min={:.6}",
        data.name(),
        sep.two_r,
        sep.epsilon_min
    );

    let em = sep.epsilon_min;
    let grid: Vec<f64> = vec![0.0, em * 0.5, em, 2.0 * em, 3.0 * em, 5.0 * em, 8.0 * em];
    println!("eps_train grid: {grid:?}");

    let plan = ExperimentPlan {
        dataset: DatasetSource::InMemory(data),
        split: SplitSpec { test_fraction: 0.25, seed: 0, stratified: true },
        norm: NormMetric::Linf,
        eps_train_grid: grid,
        eps_test_grid: vec![0.0],
        include_eps_min: true,
        k_train: 10,
        k_test: 10,
        runs,
        clip_to_unit: false,
        model_specs: vec![ModelSpec::random_forest(), ModelSpec::knn()],
        master_seed: 2024,
    };
    let t0 = std::time::Instant::now();
    let matrix = run_experiment(&plan).unwrap();
    println!("experiment took {:.1}s for {runs} runs", t0.elapsed().as_secs_f64());

    for model in &matrix.model_ids {
        println!("--- {model}");
        println!("{:>10} {:>22} {:>22}", "eps_train", "clean (mean±hw)", "mscr (mean±hw)");
        for cell in matrix.cells_for_model(model) {
            let m = cell.mscr.unwrap();
            println!(
                "{:>10.5} {:>13.5} ±{:>7.5} {:>13.5} ±{:>7.5}",
                cell.eps_train, cell.clean.mean, cell.clean.ci95_half_width, m.mean, m.ci95_half_width
            );
        }
    }

    // paired significance of clean-accuracy gain vs baseline for RF
    let rf = "rf100";
    let baseline: Vec<f64> = matrix.records_for(rf, 0.0).iter().map(|r| r.acc_clean).collect();
    for cell in matrix.cells_for_model(rf) {
        if cell.eps_train == 0.0 {
            continue;
        }
        let cand: Vec<f64> = matrix
            .records_for(rf, cell.eps_train)
            .iter()
            .map(|r| r.acc_clean)
            .collect();
        let diffs: Vec<f64> = cand.iter().zip(&baseline).map(|(a, b)| a - b).collect();
        let mean_d: f64 = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let sig = paired_mean_above_zero(&diffs, 0.95).unwrap();
        let m = cell.mscr.unwrap();
        let mscr_up = m.mean > matrix.cell(rf, 0.0).unwrap().mscr.unwrap().mean;
        println!(
            "RF eps_train={:.5}: clean diff mean={:+.5} sig95={} mscr_up={}",
            cell.eps_train, mean_d, sig, mscr_up
        );
    }
}
