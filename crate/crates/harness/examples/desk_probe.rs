//! Scratch probe for the desk-scale training setup (not part of the test
//! suite): prints per-seed improvement of the trained best-ever policy over
//! the iteration-0 best on a held-out test set.

use ptrnet_ea::pool::RayonPool;
use ptrnet_ea_core::evolution::{fitness, train, NcsConfig, SigmaRule, TaskPool};
use ptrnet_ea_core::ptrnet::{init_params, DecodeMode, NetworkConfig};
use ptrnet_ea_core::tsp::{generate_dataset, Split};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let t_max: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(300);

    let net = NetworkConfig::new(8, 32, 1, DecodeMode::Greedy).unwrap();
    let ncs = NcsConfig {
        population_size: 5,
        max_iterations: t_max,
        epoch_length: 10,
        sigma_init: 0.05,
        batch_size: 32,
        normalize_acceptance: true,
        sigma_rule: SigmaRule::OneFifthStandard,
        time_budget_secs: None,
    };
    let train_set = generate_dataset(20, 2000, 100, Split::Train).unwrap();
    let test_set = generate_dataset(20, 500, 101, Split::Test).unwrap();
    let pool = RayonPool::new(0);

    let mut wins = 0;
    for seed in 0..seeds {
        let t0 = Instant::now();
        let (population, best, record) = train(&ncs, &net, &train_set.instances, seed, &pool).unwrap();
        let train_time = t0.elapsed().as_secs_f64();

        // iteration-0 best: the best initial parent re-derived by seed
        let init_batch = ptrnet_ea_core::evolution::sample_batch(&train_set.instances, seed, 0, ncs.batch_size);
        let mut best_init = None;
        for i in 0..ncs.population_size {
            let p = init_params(&net, ptrnet_ea_core::rng::mix(&[seed, i as u64]));
            let f = fitness(&p, &init_batch, &net).unwrap();
            if best_init.as_ref().map_or(true, |(bf, _)| f < *bf) {
                best_init = Some((f, p));
            }
        }
        let (_, init_best_params) = best_init.unwrap();
        let f_init = fitness(&init_best_params, &test_set.instances, &net).unwrap();
        let f_final = fitness(&best.params, &test_set.instances, &net).unwrap();
        let improvement = (f_init - f_final) / f_init * 100.0;
        if improvement >= 15.0 { wins += 1; }
        println!(
            "seed {seed}: init {f_init:.4} -> final {f_final:.4}  improvement {improvement:.1}%  (train fitness {:.4} -> {:.4}, {} accepts, {train_time:.1}s)",
            record.iterations.first().unwrap().best_fitness,
            best.fitness,
            record.iterations.iter().map(|r| r.accepts).sum::<u32>(),
        );
        let _ = population;
    }
    println!("{wins}/{seeds} seeds reached 15%");
}
