mod common;

use approx::assert_abs_diff_eq;
use common::{histogram, sp, AxisMarginal};
use entsim::bloch::{born_joint, collapse, BlochVector, Outcome};
use entsim::protocols::*;
use entsim::sampling::{n_of_p, RngStream};
use entsim::verify::{chi_square, comm_stats, setting_grid};

fn records(
    protocol: ProtocolId,
    p: f64,
    x: BlochVector,
    y: BlochVector,
    m: u64,
    seed: u64,
) -> Vec<RoundRecord> {
    simulate_records(&SimulationConfig {
        protocol,
        state: sp(p),
        settings: vec![(x, y)],
        rounds_per_setting: m,
        seed,
        workers: None,
    })
    .unwrap()
}

fn symbol_fraction(rs: &[RoundRecord], symbol: u8) -> f64 {
    rs.iter()
        .filter(|r| r.message == Message::Symbol(symbol))
        .count() as f64
        / rs.len() as f64
}

fn four_sigma(q: f64, m: u64) -> f64 {
    4.0 * (q * (1.0 - q) / m as f64).sqrt() + 1e-9
}

fn xdir() -> BlochVector {
    BlochVector::normalized(0.6, -0.3, 0.5).unwrap()
}

fn ydir() -> BlochVector {
    BlochVector::normalized(-0.2, 0.7, 0.4).unwrap()
}

#[test]
fn one_bit_picks_the_uniform_vector_at_rate_2_1_minus_p() {
    let rs = records(ProtocolId::OneBit, 0.95, xdir(), ydir(), 200_000, 1);
    assert_abs_diff_eq!(symbol_fraction(&rs, 0), 0.1, epsilon = 0.005);
    let rs = records(ProtocolId::OneBit, 1.0, xdir(), ydir(), 10_000, 2);
    assert!(rs.iter().all(|r| r.message == Message::Symbol(1)));
    assert!(rs.iter().all(|r| r.bits_sent == 1.0));
}

#[test]
fn trit_uses_the_third_symbol_at_rate_2p_minus_1() {
    for (p, want) in [(0.5, 0.0), (0.7, 0.4)] {
        let rs = records(ProtocolId::Trit, p, xdir(), ydir(), 200_000, 3);
        assert_abs_diff_eq!(symbol_fraction(&rs, 2), want, epsilon = 0.005);
        assert!(rs
            .iter()
            .all(|r| matches!(r.message, Message::Symbol(s) if s < 3)));
    }
}

#[test]
fn degorre_perfect_correlation_and_flat_marginal() {
    let rs = records(
        ProtocolId::DegorreBit,
        0.5,
        BlochVector::Z,
        BlochVector::Z,
        100_000,
        4,
    );
    assert!(rs.iter().all(|r| r.a == r.b));
    let plus = rs.iter().filter(|r| r.a == Outcome::Plus).count() as f64 / rs.len() as f64;
    assert_abs_diff_eq!(plus, 0.5, epsilon = four_sigma(0.5, 100_000));
}

#[test]
fn qubit_teleport_examples() {
    let m = 200_000;
    let v = xdir();
    let mut rng = RngStream::new(5, 0);
    for _ in 0..m {
        let r = run_protocol4_round(&mut rng, v, v).unwrap();
        assert_eq!(r.b, Outcome::Plus);
        assert_eq!(r.bits_sent, 2.0);
        assert!(r.symbol < 4);
    }
    let (perp, _) = v.orthonormal_frame();
    let plus = (0..m)
        .filter(|_| run_protocol4_round(&mut rng, v, perp).unwrap().b == Outcome::Plus)
        .count();
    assert_abs_diff_eq!(plus as f64 / m as f64, 0.5, epsilon = four_sigma(0.5, m));
    let y = ydir();
    let plus = (0..m)
        .filter(|_| run_protocol4_round(&mut rng, v, y).unwrap().b == Outcome::Plus)
        .count();
    let want = 0.5 * (1.0 + v.dot(y));
    assert_abs_diff_eq!(plus as f64 / m as f64, want, epsilon = four_sigma(want, m));
}

#[test]
fn improved_one_bit_average_cost() {
    let rs = records(ProtocolId::ImprovedOneBit, 0.9, xdir(), ydir(), 400_000, 6);
    let stats = comm_stats(ProtocolId::ImprovedOneBit, &rs).unwrap();
    assert_abs_diff_eq!(stats.mean_bits, n_of_p(sp(0.9)).unwrap(), epsilon = 0.003);
    assert_eq!(stats.worst_bits, 1.0);
    let rs = records(
        ProtocolId::ImprovedOneBit,
        0.999,
        xdir(),
        ydir(),
        100_000,
        7,
    );
    assert!(
        comm_stats(ProtocolId::ImprovedOneBit, &rs)
            .unwrap()
            .mean_bits
            < 0.02
    );
    let rs = records(ProtocolId::ImprovedOneBit, 1.0, xdir(), ydir(), 10_000, 8);
    assert!(rs.iter().all(|r| r.message.is_silent()));
}

#[test]
fn local_content_silent_fraction() {
    for (p, seed) in [(0.6, 9), (0.8, 10), (0.95, 11)] {
        let rs = records(ProtocolId::LocalContent, p, xdir(), ydir(), 200_000, seed);
        let stats = comm_stats(ProtocolId::LocalContent, &rs).unwrap();
        let want = 2.0 * p - 1.0;
        assert_abs_diff_eq!(
            stats.silent_fraction,
            want,
            epsilon = four_sigma(want, 200_000)
        );
        assert!(rs
            .iter()
            .all(|r| r.message.is_silent() || matches!(r.message, Message::Vector(_))));
    }
    let rs = records(ProtocolId::LocalContent, 0.5, xdir(), ydir(), 10_000, 12);
    assert!(rs.iter().all(|r| matches!(r.message, Message::Vector(_))));
}

fn applicable_cases() -> Vec<(ProtocolId, f64)> {
    vec![
        (ProtocolId::OneBit, 0.95),
        (ProtocolId::Trit, 0.5),
        (ProtocolId::Trit, 0.8),
        (ProtocolId::DegorreBit, 0.5),
        (ProtocolId::ClassicalTeleportation, 0.65),
        (ProtocolId::ImprovedOneBit, 0.9),
        (ProtocolId::LocalContent, 0.75),
    ]
}

#[test]
fn joint_distribution_within_four_sigma() {
    let m = 100_000;
    for (protocol, p) in applicable_cases() {
        let out = simulate(&SimulationConfig {
            protocol,
            state: sp(p),
            settings: setting_grid(6),
            rounds_per_setting: m,
            seed: 13,
            workers: None,
        })
        .unwrap();
        for row in &out.table.rows {
            let j = born_joint(sp(p), row.x, row.y).unwrap();
            for a in Outcome::BOTH {
                for b in Outcome::BOTH {
                    let got = row.counts[a.index()][b.index()] as f64 / m as f64;
                    let want = j.get(a, b);
                    assert!(
                        (got - want).abs() <= four_sigma(want, m),
                        "{protocol} p={p} ({a:?},{b:?}): {got} vs {want}"
                    );
                }
            }
        }
    }
}

#[test]
fn marginals_do_not_signal() {
    let m = 100_000;
    let x = xdir();
    let ys = [BlochVector::Z, BlochVector::X, ydir(), -ydir()];
    for (protocol, p) in applicable_cases() {
        let want = born_joint(sp(p), x, BlochVector::Z)
            .unwrap()
            .alice_marginal(Outcome::Plus);
        let out = simulate(&SimulationConfig {
            protocol,
            state: sp(p),
            settings: ys.iter().map(|&y| (x, y)).collect(),
            rounds_per_setting: m,
            seed: 14,
            workers: None,
        })
        .unwrap();
        for row in &out.table.rows {
            let got = row.alice_plus_fraction();
            assert!(
                (got - want).abs() <= four_sigma(want, m),
                "{protocol} p={p}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn shared_vector_follows_rho_x() {
    let m = 200_000;
    let x = xdir();
    for (protocol, p) in applicable_cases() {
        let rs = records(protocol, p, x, ydir(), m, 15);
        let c = collapse(sp(p), x).unwrap();
        for axis in [BlochVector::Z, x, c.v_plus] {
            let marginal = AxisMarginal::rho(&c, axis);
            let h = histogram(rs.iter().map(|r| r.lambda.dot(axis)), 20);
            let chi = chi_square(&h, &marginal.bin_probs(20)).unwrap();
            assert!(
                chi.p_value > 0.001,
                "{protocol} p={p} axis {axis:?}: {chi:?}"
            );
        }
    }
}

#[test]
fn bob_output_is_sign_of_shared_vector() {
    for (protocol, p) in applicable_cases() {
        for r in records(protocol, p, xdir(), ydir(), 2000, 16) {
            assert_eq!(r.b, bob_output(r.y, r.lambda));
        }
    }
}

#[test]
fn inapplicable_states_rejected() {
    assert!(SharedSource::new(ProtocolId::OneBit, sp(0.933)).is_err());
    assert!(SharedSource::new(ProtocolId::OneBit, sp(one_bit_min_p())).is_ok());
    assert!(SharedSource::new(ProtocolId::DegorreBit, sp(0.7)).is_err());
    assert!(SharedSource::new(ProtocolId::ImprovedOneBit, sp(0.8)).is_err());
    assert!(SharedSource::new(ProtocolId::ImprovedOneBit, sp(0.835)).is_ok());
}

#[test]
fn zero_rounds() {
    let out = simulate(&SimulationConfig {
        protocol: ProtocolId::Trit,
        state: sp(0.7),
        settings: setting_grid(3),
        rounds_per_setting: 0,
        seed: 1,
        workers: None,
    })
    .unwrap();
    assert_eq!(out.table.total_rounds(), 0);
    assert_eq!(out.comm.rounds, 0);
    assert!(comm_stats(ProtocolId::Trit, &[]).is_err());
}

#[test]
fn thread_count_does_not_change_results() {
    let base = SimulationConfig {
        protocol: ProtocolId::ImprovedOneBit,
        state: sp(0.9),
        settings: setting_grid(4),
        rounds_per_setting: 50_000,
        seed: 77,
        workers: Some(1),
    };
    let one = simulate(&base).unwrap();
    let four = simulate(&SimulationConfig {
        workers: Some(4),
        ..base.clone()
    })
    .unwrap();
    let global = simulate(&SimulationConfig {
        workers: None,
        ..base.clone()
    })
    .unwrap();
    assert_eq!(one, four);
    assert_eq!(one, global);

    // the serial record path agrees with the tallies
    let rs = simulate_records(&base).unwrap();
    for (i, row) in one.table.rows.iter().enumerate() {
        let mut counts = [[0u64; 2]; 2];
        for r in &rs[i * 50_000..(i + 1) * 50_000] {
            counts[r.a.index()][r.b.index()] += 1;
        }
        assert_eq!(counts, row.counts);
    }
}

#[test]
fn rounds_are_replayable_from_their_index() {
    let cfg = SimulationConfig {
        protocol: ProtocolId::Trit,
        state: sp(0.7),
        settings: setting_grid(3),
        rounds_per_setting: 100,
        seed: 5,
        workers: None,
    };
    let rs = simulate_records(&cfg).unwrap();
    let source = SharedSource::new(cfg.protocol, cfg.state).unwrap();
    let (x, y) = cfg.settings[2];
    let alice = Alice::new(cfg.protocol, cfg.state, x).unwrap();
    let bob = Bob::new(cfg.protocol, y).unwrap();
    let k = cfg.round_index(2, 37);
    assert_eq!(
        play_round(&source, &alice, &bob, cfg.seed, k).unwrap(),
        rs[k as usize]
    );
}
