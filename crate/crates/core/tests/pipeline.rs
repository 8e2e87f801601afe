use grand_mimo::channel::{ChannelRealization, NoiseParams};
use grand_mimo::detector::ZfFilter;
use grand_mimo::gf2::BitWord;
use grand_mimo::sim::{emit_csv, parse_csv, run_sweep, ChannelModel, SweepConfig};
use grand_mimo::{grand_decode, Constellation, GrandConfig, Mapping, RlcCode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cfg(channel_model: ChannelModel, grid: Vec<f64>) -> SweepConfig {
    SweepConfig {
        n: 132,
        k: 106,
        m: 64,
        n_r: 200,
        n_b: 2,
        channel_model,
        ebno_grid_db: grid,
        trials_per_point: 1500,
        min_block_errors: 0,
        master_seed: 5,
        ..SweepConfig::default()
    }
}

#[test]
fn hand_assembled_chain_recovers_message() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let code = RlcCode::generate(128, 103, &mut rng).unwrap();
    let qam = Constellation::new(16, Mapping::Gray).unwrap();
    let snr = 2000.0;
    for _ in 0..50 {
        let message = BitWord::random(103, &mut rng).unwrap();
        let x = qam.map_bits(&code.encode(&message).unwrap()).unwrap();
        let ch = ChannelRealization::sample(200, x.len(), &mut rng).unwrap();
        let y = ch
            .transmit(&x, &NoiseParams::new(1.0, snr).unwrap(), &mut rng)
            .unwrap();
        let est = ZfFilter::build(&ch).unwrap().detect(&y, snr).unwrap();
        let received = qam.demap_symbols(est.as_slice()).unwrap();
        let out = grand_decode(&code, &received, &GrandConfig::new(2)).unwrap();
        assert!(out.is_decoded());
        assert_eq!(code.extract_message(&out.codeword).unwrap(), message);
    }
}

#[test]
fn hardening_model_lower_bounds_zf() {
    let grid = vec![-10.0, -9.0];
    let zf = run_sweep(&cfg(ChannelModel::RayleighZf, grid.clone())).unwrap();
    let hard = run_sweep(&cfg(ChannelModel::Hardening, grid)).unwrap();
    for (h, z) in hard.iter().zip(&zf) {
        assert!(
            h.bler <= z.bler,
            "{} dB: {} > {}",
            h.ebno_db,
            h.bler,
            z.bler
        );
    }
}

#[test]
fn queries_fall_as_snr_grows() {
    let pts = run_sweep(&cfg(ChannelModel::RayleighZf, vec![-11.0, -9.0, -7.0])).unwrap();
    for w in pts.windows(2) {
        assert!(w[1].avg_queries < w[0].avg_queries);
    }
}

#[test]
fn csv_roundtrip_preserves_counts() {
    let pts = run_sweep(&SweepConfig {
        trials_per_point: 300,
        ..cfg(ChannelModel::Hardening, vec![-12.0, -11.0])
    })
    .unwrap();
    let mut buf = Vec::new();
    emit_csv(&pts, &mut buf).unwrap();
    let rows = parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(rows.len(), pts.len());
    for (r, p) in rows.iter().zip(&pts) {
        assert_eq!(r.trials, p.trials_run);
        assert_eq!(r.block_errors, p.block_errors);
        assert!((r.bler - p.bler).abs() <= 1e-6 * p.bler.max(1e-300));
        assert!((r.avg_queries - p.avg_queries).abs() <= 1e-6 * p.avg_queries);
    }
}

#[test]
fn early_stopping_counts_trials_in_order() {
    let base = SweepConfig {
        trials_per_point: 4000,
        min_block_errors: 25,
        ..cfg(ChannelModel::RayleighZf, vec![-10.0])
    };
    let stopped = run_sweep(&base).unwrap()[0].clone();
    assert_eq!(stopped.block_errors, 25);
    let full = run_sweep(&SweepConfig {
        trials_per_point: stopped.trials_run,
        min_block_errors: 0,
        ..base
    })
    .unwrap();
    assert_eq!(full[0].block_errors, 25);
    assert_eq!(full[0].avg_queries, stopped.avg_queries);
}
