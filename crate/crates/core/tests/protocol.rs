use ndstc::codebook::{AdsmCodebook, Codebook};
use ndstc::projection::{conventional_basis, OptimizerOptions};
use ndstc::rng::RngStream;
use ndstc::security::*;
use ndstc::transceiver::*;

fn quick() -> OptimizerOptions {
    OptimizerOptions {
        restarts: 4,
        ..Default::default()
    }
}

#[test]
fn keyed_round_trip_is_error_free() {
    for key in 0..20u64 {
        let alice = derive_basis_from_key(SecretSeed(key), 16, 16, 1, 4, &quick()).unwrap();
        let bob = derive_basis_from_key(SecretSeed(key), 16, 16, 1, 4, &quick()).unwrap();
        assert_eq!(alice.matrix(), bob.matrix(), "key {key}");

        let cfg = LinkConfig {
            key,
            optimizer: quick(),
            seed: key,
            ..Default::default()
        };
        let setup = LinkSetup::new(&cfg).unwrap();
        assert_eq!(&setup.e1, bob.matrix());
        let out = simulate_frame(&cfg, &setup, 0.0, &RngStream::new(key, 0)).unwrap();
        assert_eq!(out.bit_errors, 0, "key {key}");
        assert!(out.bits > 0);
    }
}

#[test]
fn distinct_keys_give_distinct_bases() {
    let mut differ = 0;
    for pair in 0..100u64 {
        let a = derive_basis_from_key(SecretSeed(2 * pair), 16, 16, 1, 4, &OptimizerOptions::default()).unwrap();
        let b = derive_basis_from_key(SecretSeed(2 * pair + 1), 16, 16, 1, 4, &OptimizerOptions::default()).unwrap();
        if a.matrix().max_abs_diff(b.matrix()) > 1e-3 {
            differ += 1;
        }
    }
    assert!(differ >= 99, "{differ}/100");
}

#[test]
fn noiseless_frames_recover_every_block() {
    for scheme in [Scheme::Proposed, Scheme::ConventionalAdsm] {
        for (m, t) in [(4, 1), (8, 2)] {
            let cfg = LinkConfig {
                m,
                nb: m,
                t,
                n: 1,
                bits: m.trailing_zeros() + 2,
                scheme,
                channel_mode: ChannelMode::StaticPerFrame,
                optimizer: quick(),
                ..Default::default()
            };
            let setup = LinkSetup::new(&cfg).unwrap();
            for f in 0..3 {
                let out = simulate_frame(&cfg, &setup, 0.0, &RngStream::new(9, f)).unwrap();
                assert_eq!(out.bit_errors, 0, "{scheme:?} M={m} T={t}");
            }
        }
    }
}

#[test]
fn conventional_basis_through_the_generic_path_matches() {
    let cfg = LinkConfig {
        m: 8,
        nb: 8,
        t: 1,
        bits: 5,
        scheme: Scheme::ConventionalAdsm,
        ..Default::default()
    };
    let native = LinkSetup::new(&cfg).unwrap();
    let basis = conventional_basis(8, 8, 1).unwrap();
    let supplied = LinkSetup::with_projection(
        Codebook::Adsm(AdsmCodebook::new(8, 4).unwrap()),
        basis.e1().clone(),
        Preamble::Basis(basis.matrices().to_vec()),
    )
    .unwrap();
    let short = LinkConfig {
        eta: 0.5,
        ..cfg.clone()
    };
    assert_eq!(short.data_blocks().unwrap(), 8);
    for f in 0..20 {
        let rng = RngStream::new(4, f);
        let a = simulate_frame(&short, &native, noise_variance(6.0), &rng).unwrap();
        let b = simulate_frame(&short, &supplied, noise_variance(6.0), &rng).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn ber_does_not_rise_with_snr() {
    let cfg = LinkConfig {
        m: 8,
        nb: 8,
        bits: 5,
        snr_db: vec![0.0, 6.0, 12.0, 18.0],
        optimizer: quick(),
        ..Default::default()
    };
    let res = run_link(&cfg, 40).unwrap();
    for w in res.rows.windows(2) {
        let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        assert!(w[1].ber <= w[0].ber + 2.0 * se, "{:?}", res.rows);
    }
}

#[test]
fn attack_never_beats_the_oracle() {
    let base = LeakageConfig {
        m: 8,
        nb: 8,
        trials: 24,
        alice: quick(),
        attack: AttackConfig {
            restarts: 8,
            ..Default::default()
        },
        ..Default::default()
    };
    let attacked = leakage_probability(&base).unwrap();
    let oracle = leakage_probability(&LeakageConfig {
        attack: AttackConfig {
            oracle: true,
            ..base.attack
        },
        ..base.clone()
    })
    .unwrap();
    assert!((0.0..=1.0).contains(&attacked.leakage));
    assert!(oracle.leakage + 2.0 * (oracle.stderr.powi(2) + attacked.stderr.powi(2)).sqrt() >= attacked.leakage);
    assert_eq!(oracle.leakage, 1.0);
}

#[test]
fn bob_information_grows_with_snr_and_stays_bounded() {
    let cfg = AmiConfig {
        m: 8,
        nb: 8,
        bits: 5,
        trials: 30,
        snr_db: vec![-10.0, 0.0, 10.0, 20.0, 40.0, 60.0],
        alice: quick(),
        ..Default::default()
    };
    let bob = ami_bob(&cfg).unwrap();
    for e in &bob {
        assert!(e.mean.is_finite() && e.stderr.is_finite());
        assert!((0.0..=5.0).contains(&e.mean));
    }
    for w in bob.windows(2) {
        let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        assert!(w[1].mean + 2.0 * se >= w[0].mean, "{bob:?}");
    }
    let reports = secrecy_sweep(&AmiConfig {
        trials: 6,
        attack: AttackConfig {
            n_eve: 2,
            restarts: 4,
            ..Default::default()
        },
        ..cfg
    })
    .unwrap();
    for r in &reports {
        assert!((0.0..=5.0).contains(&r.i_eve));
        assert_eq!(r.c, secrecy_rate(r.i_bob, r.i_eve));
    }
}

#[test]
fn two_time_slots_double_the_block_rate_bound() {
    let cfg = AmiConfig {
        m: 4,
        nb: 4,
        t: 2,
        bits: 4,
        trials: 10,
        snr_db: vec![60.0],
        alice: quick(),
        ..Default::default()
    };
    let bob = ami_bob(&cfg).unwrap();
    assert!((bob[0].mean - 2.0).abs() < 1e-6, "{bob:?}");
}
