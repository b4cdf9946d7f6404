use proptest::prelude::*;
use triage_core::features::FeatureVector;
use triage_core::models::mlp::{MlpParams, Network};

fn instance() -> impl Strategy<Value = (Network, Vec<FeatureVector>, Vec<usize>)> {
    (2usize..6, 1usize..5, 2usize..4, 1usize..4).prop_flat_map(|(inputs, hidden, classes, n)| {
        let weights = prop::collection::vec(-1.0f64..1.0, hidden * inputs + hidden + classes * hidden + classes);
        let xs = prop::collection::vec(prop::collection::vec(0u8..3, inputs), n);
        let ys = prop::collection::vec(0..classes, n);
        (weights, xs, ys).prop_map(move |(w, xs, ys)| {
            let mut p = MlpParams::zeros(inputs, hidden, classes);
            let mut it = w.into_iter();
            for s in p.slices_mut() {
                s.iter_mut().for_each(|v| *v = it.next().unwrap());
            }
            let xs = xs
                .into_iter()
                .map(|x| FeatureVector::new(x.into_iter().map(f64::from).collect()))
                .collect();
            (Network::new(p, 0.0).unwrap(), xs, ys)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn backprop_matches_central_differences((net, xs, ys) in instance()) {
        let (loss, grad) = net.loss_and_gradient(&xs, &ys).unwrap();
        prop_assert!((loss - net.loss(&xs, &ys).unwrap()).abs() < 1e-12);
        let h = 1e-5;
        for block in 0..4 {
            for i in 0..grad.slices()[block].len() {
                let at = |d: f64| {
                    let mut p = net.params.clone();
                    p.slices_mut()[block][i] += d;
                    Network::new(p, 0.0).unwrap().loss(&xs, &ys).unwrap()
                };
                let numeric = (at(h) - at(-h)) / (2.0 * h);
                let a = grad.slices()[block][i];
                let scale = a.abs().max(numeric.abs()).max(1e-7);
                prop_assert!((a - numeric).abs() / scale <= 1e-4, "block {} index {}: {} vs {}", block, i, a, numeric);
            }
        }
    }
}
