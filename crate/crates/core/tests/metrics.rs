use fedsim_core::data::{generate_federation, DomainShiftSpec, Federation, View};
use fedsim_core::metrics::{confusion, global_eval, report, ConfusionMatrix};
use fedsim_core::numerics::{MlpConfig, MlpModel};
use fedsim_core::protocol::evaluate_accuracy;
use proptest::prelude::*;

fn pairs(classes: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0..classes, 0..classes), 1..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn metrics_ignore_sample_order(mut ps in pairs(5), seed in any::<u64>()) {
        let split = |ps: &[(usize, usize)]| -> (Vec<usize>, Vec<usize>) { ps.iter().copied().unzip() };
        let (p, t) = split(&ps);
        let before = report(&confusion(&p, &t, 5).unwrap()).unwrap();
        let n = ps.len();
        for i in 0..n {
            let j = (seed.rotate_left(i as u32) as usize) % n;
            ps.swap(i, j);
        }
        let (p, t) = split(&ps);
        prop_assert_eq!(report(&confusion(&p, &t, 5).unwrap()).unwrap(), before);
    }

    #[test]
    fn reports_stay_in_range(ps in pairs(4)) {
        let (p, t): (Vec<usize>, Vec<usize>) = ps.into_iter().unzip();
        let cm = confusion(&p, &t, 4).unwrap();
        prop_assert_eq!(cm.total(), p.len() as u64);
        let r = report(&cm).unwrap();
        for v in [r.accuracy, r.macro_f1, r.weighted_f1].into_iter().chain(r.per_class_f1.iter().copied()) {
            prop_assert!((0.0..=100.0).contains(&v));
        }
        let weighted: f64 = (0..4).map(|c| cm.support(c) as f64 / cm.total() as f64 * r.per_class_f1[c]).sum();
        prop_assert!((weighted - r.weighted_f1).abs() < 1e-9);
    }

    /// Equal support in every class makes the two F1 averages coincide.
    #[test]
    fn balanced_support_equalizes_averages(rows in prop::collection::vec(prop::collection::vec(0u64..20, 3), 3)) {
        let mut rows = rows;
        let target = rows.iter().map(|r| r.iter().sum::<u64>()).max().unwrap().max(1);
        for r in &mut rows {
            let have: u64 = r.iter().sum();
            r[0] += target - have;
        }
        let r = report(&ConfusionMatrix::from_rows(&rows).unwrap()).unwrap();
        prop_assert_eq!(r.macro_f1, r.weighted_f1);
    }
}

fn small_federation() -> Federation {
    generate_federation(&DomainShiftSpec::new(3, 4, 5, 40).with_shift(1.0).with_seed(2)).unwrap()
}

#[test]
fn report_accuracy_matches_client_accuracy() {
    let fed = small_federation();
    let cfg = MlpConfig::new(5, 4).with_hidden(vec![7]).with_seed(9);
    let w = MlpModel::new(cfg.clone()).unwrap().flatten();
    for client in &fed.clients {
        let net = MlpModel::unflatten(&w, cfg.clone()).unwrap();
        let (x, y) = client.view(View::Test).materialize();
        let r = report(&confusion(&net.predict(&x).unwrap(), &y, 4).unwrap()).unwrap();
        assert_eq!(r.accuracy, evaluate_accuracy(&w, &cfg, client, View::Test).unwrap());
    }
}

#[test]
fn single_client_global_eval_is_local_eval() {
    let fed = small_federation();
    let one = Federation::new(vec![fed.clients[1].clone()], 4).unwrap();
    let cfg = MlpConfig::linear(5, 4).with_seed(3);
    let w = MlpModel::new(cfg.clone()).unwrap().flatten();
    let g = global_eval(&w, &cfg, &one).unwrap();
    assert_eq!(g.accuracy, evaluate_accuracy(&w, &cfg, &fed.clients[1], View::Test).unwrap());
}

#[test]
fn duplicated_federation_reports_the_same() {
    let fed = small_federation();
    let doubled = Federation::new(fed.clients.iter().chain(&fed.clients).cloned().collect(), 4).unwrap();
    let cfg = MlpConfig::new(5, 4).with_hidden(vec![3]).with_seed(1);
    let w = MlpModel::new(cfg.clone()).unwrap().flatten();
    assert_eq!(global_eval(&w, &cfg, &fed).unwrap(), global_eval(&w, &cfg, &doubled).unwrap());
}

#[test]
fn zero_model_scores_the_class_zero_share() {
    let fed = generate_federation(&DomainShiftSpec::new(2, 31, 3, 310).with_seed(6)).unwrap();
    let cfg = MlpConfig::new(3, 31).with_hidden(vec![4]);
    let w = MlpModel::zeros(cfg.clone()).unwrap().flatten();
    let (zeros, total) = fed.clients.iter().fold((0, 0), |(z, t), c| {
        let (_, y) = c.view(View::Test).materialize();
        (z + y.iter().filter(|&&l| l == 0).count(), t + y.len())
    });
    let acc = global_eval(&w, &cfg, &fed).unwrap().accuracy;
    assert_eq!(acc, 100.0 * zeros as f64 / total as f64);
    assert!((acc - 100.0 / 31.0).abs() < 1e-9);
}
