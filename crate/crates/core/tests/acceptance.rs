//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::*;
use qca_core::attack::{attack_feasible, eve_gain};
use qca_core::countermeasures::{click_statistics_monitor, coincidence_monitor};
use qca_core::feed_forward::{joint_state, overlap_preservation_check, KrausSet};
use qca_core::linalg::{hermitian_eig, is_unitary, polar_decompose, ComplexMatrix};
use qca_core::report::probe;
use qca_core::states::{
    build_povm, embed_states, outcome_probs_born, outcome_probs_closed_form, povm_elements,
    special_mu, SpecialMu, StateLabel,
};
use qca_core::{
    baseline_stats, clicklog, simulate, simulate_with_log, solve_matching, BaselineStats,
    ChannelModel, MonitorConfig, ReportRecord, Scenario, StrategyParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn w_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

fn within_budget(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

fn usd_identities() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut worst_err = 0.0_f64;
    for w in w_grid() {
        let r = probe(w, w).unwrap();
        let f = |k| r.get_float(k).unwrap();
        worst = worst
            .max((f("p_correct") - (1.0 - w)).abs())
            .max((f("p_inconclusive") - w).abs());
        worst_err = worst_err.max(f("p_error").abs());
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-10 && worst_err <= 1e-12 && within_budget(t, 1.0),
        format!("max dev {worst:.2e}, max p_error {worst_err:.2e}, {t:.2?}"),
    )
}

fn breidbart_identities() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut worst_q = 0.0_f64;
    for w in w_grid() {
        let root = (1.0 - w * w).sqrt();
        // the unrationalized expression, as an independent reference point
        let mu = (1.0 - root) / w;
        let r = probe(w, mu).unwrap();
        let f = |k| r.get_float(k).unwrap();
        worst = worst
            .max((f("p_correct") - w * w / (2.0 * (1.0 - root))).abs())
            .max((f("p_error") - w * w / (2.0 * (1.0 + root))).abs());
        worst_q = worst_q.max(f("p_inconclusive").abs());
        worst = worst.max((special_mu(w, SpecialMu::MinError).unwrap() - mu).abs());
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-10 && worst_q <= 1e-10 && within_budget(t, 1.0),
        format!("max dev {worst:.2e}, max p_inconclusive {worst_q:.2e}, {t:.2?}"),
    )
}

/// μ grid over the valid range `[μ_min_error, 1]`.
fn mu_points(w: f64, n: usize) -> Vec<f64> {
    let lo = special_mu(w, SpecialMu::MinError).unwrap();
    (0..n)
        .map(|i| lo + (1.0 - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn closed_form_vs_born() -> Outcome {
    let start = Instant::now();
    let (mut worst, mut worst_sum) = (0.0_f64, 0.0_f64);
    for w in w_grid() {
        let pair = embed_states(w).unwrap();
        for mu in mu_points(w, 50) {
            let povm = build_povm(w, mu).unwrap();
            let closed = outcome_probs_closed_form(w, mu).unwrap();
            for sent in [StateLabel::U, StateLabel::V] {
                let born = outcome_probs_born(&povm, &pair, sent);
                worst = worst.max(closed.max_abs_diff(&born));
                worst_sum = worst_sum
                    .max((born.p_correct + born.p_error + born.p_inconclusive - 1.0).abs());
            }
            worst_sum = worst_sum
                .max((closed.p_correct + closed.p_error + closed.p_inconclusive - 1.0).abs());
        }
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-10 && worst_sum <= 1e-10 && within_budget(t, 5.0),
        format!("max |closed - born| {worst:.2e}, max |sum - 1| {worst_sum:.2e}, {t:.2?}"),
    )
}

fn lambda_max_calibration() -> Outcome {
    let (mut calibrated, mut raw) = (0.0_f64, 0.0_f64);
    for w in w_grid() {
        let pair = embed_states(w).unwrap();
        for mu in mu_points(w, 50) {
            let povm = build_povm(w, mu).unwrap();
            let sum = &povm.a_u + &povm.a_v;
            let numeric = hermitian_eig(&sum).unwrap().eigenvalues[0];
            calibrated = calibrated
                .max((numeric - 1.0).abs())
                .max((top_eigenvalue_2x2(&sum) - 1.0).abs());

            let [a_u, a_v, _] = povm_elements(&pair, mu, 1.0);
            let sum = &a_u + &a_v;
            let expected = (1.0 - w) * (1.0 + mu).powi(2);
            raw = raw
                .max((hermitian_eig(&sum).unwrap().eigenvalues[0] - expected).abs())
                .max((top_eigenvalue_2x2(&sum) - expected).abs());
        }
    }
    outcome(
        calibrated <= 1e-10 && raw <= 1e-10,
        format!("calibrated max dev {calibrated:.2e}, delta=1 max dev {raw:.2e}"),
    )
}

fn kraus_polar_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut trace, mut per_outcome, mut unitary_fail, mut recon) =
        (0.0_f64, 0.0_f64, 0usize, 0.0_f64);
    for trial in 0..1000 {
        let dim = 2 + trial % 3;
        let outcomes = 2 + trial % 3;
        let elements = random_povm(&mut rng, dim, outcomes);
        let unitaries: Vec<ComplexMatrix> = (0..outcomes)
            .map(|_| random_unitary(&mut rng, dim))
            .collect();
        let labels: Vec<String> = (0..outcomes).map(|i| i.to_string()).collect();
        let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
        let set = KrausSet::from_elements(&labels, &elements, Some(&unitaries)).unwrap();
        trace = trace.max(set.trace_residual());
        for (rec, a) in set.records.iter().zip(&elements) {
            per_outcome = per_outcome.max((&rec.kraus.adjoint() * &rec.kraus).max_abs_diff(a));
            let f = polar_decompose(&rec.kraus).unwrap();
            if !is_unitary(&f.unitary, 1e-9) || !is_unitary(&rec.unitary_factor, 1e-9) {
                unitary_fail += 1;
            }
            recon = recon.max((&f.unitary * &f.psd_root).max_abs_diff(&rec.kraus));
            recon = recon.max(f.psd_root.max_abs_diff(&rec.psd_root));
        }
    }
    outcome(
        trace <= 1e-9 && per_outcome <= 1e-9 && unitary_fail == 0 && recon <= 1e-9,
        format!(
            "sum K'K residual {trace:.2e}, K'K vs A {per_outcome:.2e}, non-unitary factors {unitary_fail}, polar residual {recon:.2e}"
        ),
    )
}

fn overlap_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let trials = 1000;
    let (mut worst, mut control_hits) = (0.0_f64, 0usize);
    for _ in 0..trials {
        let a1 = joint_state(&random_state(&mut rng, 2), &random_state(&mut rng, 2));
        let a2 = joint_state(&random_state(&mut rng, 2), &random_state(&mut rng, 2));
        let u = random_unitary(&mut rng, 4);
        let v = random_unitary(&mut rng, 4);
        let (b1, b2) = (u.mul_vec(&a1), u.mul_vec(&a2));
        worst = worst.max(overlap_preservation_check((&a1, &a2), (&b1, &b2)));
        let c2 = v.mul_vec(&a2);
        if overlap_preservation_check((&a1, &a2), (&b1, &c2)) > 1e-6 {
            control_hits += 1;
        }
    }
    let frac = control_hits as f64 / trials as f64;
    outcome(
        worst <= 1e-10 && frac >= 0.99,
        format!("max residual {worst:.2e}, negative control detected in {control_hits}/{trials}"),
    )
}

fn feasibility_reproduction() -> Outcome {
    let lossless = ChannelModel {
        transmittance: 1.0,
        efficiency: 1.0,
        dark_count_prob: 0.0,
        pulses: 1000,
    };
    let w = 0.5;
    // Bob's baseline with perfect detection: every pulse gives a click.
    let base = BaselineStats {
        gain_gb: 1000.0,
        qber_eb: 0.0,
    };
    let ge = eve_gain(w, w, 1000).unwrap();
    let lossless_ok = !attack_feasible(w, w, &base, 1000).unwrap() && ge < 1000.0;
    let modeled = baseline_stats(
        &lossless,
        special_mu(w, SpecialMu::MinError).unwrap(),
        w,
        0.0,
    )
    .unwrap();
    let modeled_ok = !attack_feasible(w, w, &modeled, 1000).unwrap();

    let lossy = ChannelModel {
        transmittance: 0.1,
        efficiency: 0.2,
        dark_count_prob: 0.0,
        pulses: 1_000_000,
    };
    let b = baseline_stats(&lossy, 0.5, 0.6, 0.0).unwrap();
    let ge_lossy = eve_gain(0.6, 0.5, lossy.pulses).unwrap();
    let lossy_ok = attack_feasible(0.6, 0.5, &b, lossy.pulses).unwrap();
    let n = lossy.pulses as f64;
    outcome(
        lossless_ok && modeled_ok && lossy_ok,
        format!(
            "lossless G_E {ge:.0} vs G_B 1000 (modeled {:.0}); lossy {:.4} vs {:.4} per pulse",
            modeled.gain_gb,
            ge_lossy / n,
            b.gain_gb / n
        ),
    )
}

fn lossy_channel(pulses: u64, dark: f64) -> ChannelModel {
    ChannelModel {
        transmittance: 0.1,
        efficiency: 0.2,
        dark_count_prob: dark,
        pulses,
    }
}

fn matched_scenario(channel: ChannelModel, seed: u64) -> (Scenario, BaselineStats) {
    let (w, mu, eps) = (0.6, 0.5, 0.01);
    let base = baseline_stats(&channel, mu, w, eps).unwrap();
    let strategy = solve_matching(w, mu, &base, &channel, 1.0).unwrap();
    let scenario = Scenario {
        w,
        channel,
        bob_mu: mu,
        intrinsic_error: eps,
        eve: Some(strategy),
        seed,
    };
    (scenario, base)
}

fn matched_statistics() -> Outcome {
    let start = Instant::now();
    let n = 1_000_000u64;
    let mut worst = 0.0_f64;
    for seed in 0..10 {
        let (scenario, base) = matched_scenario(lossy_channel(n, 1e-5), seed);
        let report = simulate(&scenario).unwrap();
        let nf = n as f64;
        let p = base.gain_gb / nf;
        let q = base.qber_eb * base.gain_gb / nf;
        let z_clicks = (report.bob_clicks as f64 - base.gain_gb) / (nf * p * (1.0 - p)).sqrt();
        let z_errors = (report.bob_errors as f64 - q * nf) / (nf * q * (1.0 - q)).sqrt();
        worst = worst.max(z_clicks.abs()).max(z_errors.abs());
    }
    let t = start.elapsed();
    outcome(
        worst <= 4.0 && within_budget(t, 10.0),
        format!("max |z| over 10 seeds {worst:.2}, {t:.2?}"),
    )
}

fn full_key_compromise() -> Outcome {
    let mut fractions = Vec::new();
    for seed in 0..10 {
        let (scenario, _) = matched_scenario(lossy_channel(200_000, 0.0), seed);
        let report = simulate(&scenario).unwrap();
        fractions.push(report.eve_key_knowledge_fraction);
    }
    let all = fractions.iter().all(|&f| f == 1.0);
    let min = fractions.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(all, format!("min knowledge fraction over 10 seeds {min}"))
}

fn short_link(pulses: u64) -> ChannelModel {
    ChannelModel {
        transmittance: 1.0,
        efficiency: 0.5,
        dark_count_prob: 1e-5,
        pulses,
    }
}

fn countermeasure_separation() -> Outcome {
    let cfg = MonitorConfig::default();
    let n = 1_000_000u64;
    let (mut caught, mut rate_fp_attack, mut rate_fp, mut coinc_fp) = (0, 0, 0, 0);
    for seed in 0..10 {
        let (attack, base) = matched_scenario(short_link(n), 100 + seed);
        let expected = base.gain_gb / n as f64;
        let (_, log) = simulate_with_log(&attack).unwrap();
        let rate = click_statistics_monitor(&log, &cfg, expected).unwrap();
        let coincidence = coincidence_monitor(&log, &cfg).unwrap();
        if rate.flagged {
            rate_fp_attack += 1;
        } else if coincidence.flagged {
            caught += 1;
        }

        let honest = Scenario {
            eve: None,
            ..attack
        };
        let (_, log) = simulate_with_log(&honest).unwrap();
        rate_fp += usize::from(
            click_statistics_monitor(&log, &cfg, expected)
                .unwrap()
                .flagged,
        );
        coinc_fp += usize::from(coincidence_monitor(&log, &cfg).unwrap().flagged);
    }
    outcome(
        caught >= 9 && rate_fp <= 1 && coinc_fp <= 1,
        format!(
            "attack caught {caught}/10 (rate flagged {rate_fp_attack}), honest false positives: rate {rate_fp}/10, coincidence {coinc_fp}/10"
        ),
    )
}

fn rendered(scenario: &Scenario) -> (String, Vec<u8>) {
    let (report, log) = simulate_with_log(scenario).unwrap();
    let mut record = ReportRecord::new("simulate");
    record.extend_from("", &report).unwrap();
    let mut bytes = Vec::new();
    clicklog::write_log(&mut bytes, &log).unwrap();
    (record.to_json(), bytes)
}

fn determinism() -> Outcome {
    let (scenario, _) = matched_scenario(lossy_channel(300_000, 1e-5), 42);
    let first = rendered(&scenario);
    let second = rendered(&scenario);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let single = pool.install(|| rendered(&scenario));
    let honest = Scenario {
        eve: None,
        ..scenario
    };
    let honest_same = rendered(&honest) == rendered(&honest);
    let mut strategy = StrategyParams::full_resend(0.5);
    strategy.flip_prob_zeta = 0.1;
    let custom = Scenario {
        eve: Some(strategy),
        ..scenario
    };
    let custom_same = rendered(&custom) == pool.install(|| rendered(&custom));
    outcome(
        first == second && first == single && honest_same && custom_same,
        format!(
            "report {} bytes, click log {} bytes, identical across runs and thread counts",
            first.0.len(),
            first.1.len()
        ),
    )
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 11] = [
        ("USD identities", usd_identities),
        ("Breidbart identities", breidbart_identities),
        ("closed form vs Born", closed_form_vs_born),
        ("lambda_max calibration", lambda_max_calibration),
        ("Kraus/polar suite", kraus_polar_suite),
        ("overlap preservation", overlap_preservation),
        ("feasibility reproduction", feasibility_reproduction),
        ("matched-attack statistics", matched_statistics),
        ("full key compromise", full_key_compromise),
        ("countermeasure separation", countermeasure_separation),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag}: {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.passed);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
