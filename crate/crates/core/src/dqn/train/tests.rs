use super::*;
use crate::dqn::Experience;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 2 inputs -> 1 ReLU unit -> two heads of one output each, with hand-set
/// parameters for pencil-and-paper checks.
fn pencil_net() -> QNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut net = QNetwork::new(2, &[1], 1, &mut rng);
    net.layers[0].w = vec![0.5, -0.25];
    net.layers[0].b = vec![0.1];
    net.layers[1].w = vec![2.0, -3.0]; // q row, then r row
    net.layers[1].b = vec![0.05, -0.07];
    net
}

#[test]
fn forward_matches_hand_computation() {
    let net = pencil_net();
    // h = relu(0.5*1 - 0.25*2 + 0.1) = 0.1; q = 2h + 0.05; r = -3h - 0.07.
    let (q, r) = net.forward(&[1.0, 2.0]).unwrap();
    assert!((q[0] - 0.25).abs() < 1e-15);
    assert!((r[0] + 0.37).abs() < 1e-15);

    // Negative pre-activation clamps to zero.
    let (q, r) = net.forward(&[-1.0, 0.0]).unwrap();
    assert_eq!(q[0], 0.05);
    assert_eq!(r[0], -0.07);
}

#[test]
fn forward_with_zero_weights_returns_biases() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut net = QNetwork::new(6, &[4, 3], 2, &mut rng);
    for l in &mut net.layers {
        l.w.iter_mut().for_each(|w| *w = 0.0);
    }
    net.layers.last_mut().unwrap().b = vec![1.5, -2.5, 0.25, 0.75];
    let (q, r) = net.forward(&[3.0; 6]).unwrap();
    assert_eq!(q, vec![1.5, -2.5]);
    assert_eq!(r, vec![0.25, 0.75]);
}

#[test]
fn forward_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let net = QNetwork::new(10, &[8, 8], 8, &mut rng);
    let x: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
    assert_eq!(net.forward(&x).unwrap(), net.forward(&x).unwrap());
}

#[test]
fn dimension_mismatch_is_an_error() {
    let net = pencil_net();
    assert!(matches!(
        net.forward(&[1.0, 2.0, 3.0]),
        Err(crate::dqn::DqnError::DimMismatch { expected: 2, got: 3 })
    ));
}

fn exp(state: Vec<f64>, action: usize, reward: f64, next: Vec<f64>, terminal: bool) -> Experience {
    Experience { state, action, reward, next_state: next, mask: [true; 8], terminal }
}

#[test]
fn zero_gamma_targets_equal_rewards() {
    let net = pencil_net();
    let target = net.clone();
    let batch = vec![
        exp(vec![1.0, 2.0], 0, 3.25, vec![0.5, 0.5], false),
        exp(vec![0.0, 1.0], 0, -1.5, vec![1.0, 0.0], false),
    ];
    let refs: Vec<&Experience> = batch.iter().collect();
    let ys = compute_targets(&net, &target, &refs, 0.0).unwrap();
    assert_eq!(ys, vec![3.25, -1.5]);
}

#[test]
fn single_transition_target_and_losses_match_pencil_computation() {
    let net = pencil_net();
    // Target net with different parameters.
    let mut target = pencil_net();
    target.layers[1].w = vec![1.0, 0.5];
    target.layers[1].b = vec![0.2, 0.0];

    // Transition: s=(1,2), a=0, r=0.5, s'=(2,0), gamma=0.8, non-terminal.
    // h(s') = relu(0.5*2 + 0.1) = 1.1.
    // online q(s') = 2*1.1 + 0.05 = 2.25 (argmax over the single action).
    // target q(s') = 1*1.1 + 0.2 = 1.3 -> y = 0.5 + 0.8*1.3 = 1.54.
    // online q(s) = 0.25 -> dq = 0.25 - 1.54 = -1.29, |dq|>1: huber = 0.79.
    // online r_hat(s) = -0.37 -> dr = -0.87, huber = 0.5*0.87^2 = 0.378450.
    let batch = vec![exp(vec![1.0, 2.0], 0, 0.5, vec![2.0, 0.0], false)];
    let refs: Vec<&Experience> = batch.iter().collect();
    let ys = compute_targets(&net, &target, &refs, 0.8).unwrap();
    assert!((ys[0] - 1.54).abs() < 1e-12);

    let mut grads = Gradients::zeros_like(&net);
    let loss = loss_and_grads(&net, &refs, &ys, &mut grads).unwrap();
    assert!((loss.q_loss - 0.79).abs() < 1e-12);
    assert!((loss.r_loss - 0.5 * 0.87 * 0.87).abs() < 1e-12);

    // Terminal variant: y = r exactly.
    let batch_t = vec![exp(vec![1.0, 2.0], 0, 0.5, vec![2.0, 0.0], true)];
    let refs_t: Vec<&Experience> = batch_t.iter().collect();
    assert_eq!(compute_targets(&net, &target, &refs_t, 0.8).unwrap(), vec![0.5]);
}

#[test]
fn analytic_gradients_match_finite_differences() {
    for seed in [11, 12] {
        let (worst, checked) = crate::testkit::gradient_check(seed);
        assert!(checked > 50, "only {checked} parameters exercised");
        assert!(worst < 1e-4, "seed {seed}: relative error {worst}");
    }
}

#[test]
fn target_sync_schedule() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut online = QNetwork::new(4, &[5], 2, &mut rng);
    let mut target = online.clone();

    // Drift the online net for 16 updates: target must remain untouched.
    let before = target.flat_params();
    for step in 1..=16u64 {
        online.layers[0].w[0] += 0.01;
        assert_ne!(step % 17, 0);
    }
    assert_eq!(target.flat_params(), before);
    assert_ne!(online.flat_params(), before);

    // 17th update: hard copy, bit-identical.
    sync_target(&online, &mut target);
    assert_eq!(target.flat_params(), online.flat_params());

    // Idempotent.
    let snap = target.flat_params();
    sync_target(&online, &mut target);
    assert_eq!(target.flat_params(), snap);
}

#[test]
fn reward_head_loss_decreases_on_noiseless_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut net = QNetwork::new(3, &[16], 2, &mut rng);
    let target = net.clone();
    let mut opt = Adam::new(1e-3, net.num_params());
    let mut grads = Gradients::zeros_like(&net);

    let data: Vec<Experience> = (0..8)
        .map(|i| {
            let x = i as f64 / 8.0;
            exp(vec![x, 1.0 - x, 0.5], i % 2, (2.0 * x - 0.5).sin(), vec![x, x, x], true)
        })
        .collect();
    let refs: Vec<&Experience> = data.iter().collect();

    let cfg = TrainConfig { gamma: 0.8, lr: 1e-3, ..TrainConfig::default() };
    let mut last = f64::INFINITY;
    for step in 0..100 {
        let loss = train_step(&mut net, &target, &mut opt, &refs, &mut grads, &cfg, step).unwrap();
        assert!(
            loss.r_loss <= last + 1e-9,
            "reward-head loss rose at step {step}: {} -> {}",
            last,
            loss.r_loss
        );
        last = loss.r_loss;
    }
    // Longer run actually fits the noiseless data.
    for step in 100..1500 {
        last = train_step(&mut net, &target, &mut opt, &refs, &mut grads, &cfg, step).unwrap().r_loss;
    }
    assert!(last < 0.01, "reward head failed to fit: {last}");
}

#[test]
fn non_finite_loss_aborts_with_diagnostics() {
    let mut net = pencil_net();
    net.layers[0].w[0] = f64::INFINITY;
    let target = pencil_net();
    let mut opt = Adam::new(1e-3, net.num_params());
    let mut grads = Gradients::zeros_like(&net);
    let batch = vec![exp(vec![1.0, 2.0], 0, 0.5, vec![1.0, 1.0], true)];
    let refs: Vec<&Experience> = batch.iter().collect();
    let cfg = TrainConfig::default();
    let err = train_step(&mut net, &target, &mut opt, &refs, &mut grads, &cfg, 7).unwrap_err();
    assert!(matches!(err, crate::dqn::DqnError::NonFiniteLoss { updates: 7, .. }), "{err}");
}

#[test]
fn toy_mdp_converges_to_bellman_fixed_point() {
    let (_, worst) = crate::testkit::bellman_toy(5_000);
    assert!(worst < 1e-2, "max |Q - Q*| = {worst}");
}
