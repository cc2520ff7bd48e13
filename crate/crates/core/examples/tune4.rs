// Scratch: grid over noise / epochs / lr for rate >= 0.995 with accuracy >= 0.90.

use percadv_core::*;

fn main() {
    for (noise, epochs, lr) in [
        (0.15, 2, 0.08),
        (0.15, 3, 0.1),
        (0.16, 4, 0.1),
        (0.18, 3, 0.1),
        (0.18, 4, 0.12),
        (0.20, 4, 0.12),
    ] {
        let train = synthetic_digits(3000, noise, 101).unwrap();
        let test = synthetic_digits(1200, noise, 202).unwrap();
        let template = Model::zeroed(Architecture::Convnet, 28, 28, 10).unwrap();
        let tcfg = TrainConfig { learning_rate: lr, epochs, batch_size: 32, seed: 7 };
        let model = sgd_train(&template, &train, &tcfg).unwrap();
        let acc = model.accuracy(&test).unwrap();
        let eligible = attack::eligible_indices(&model, &test).unwrap();
        let fixture = test.subset(&eligible[..200]).unwrap();
        let rep =
            success_rate(&model, &fixture, &AttackConfig::new(AttackMethod::Perceptual)).unwrap();
        // also the mlp trainer example band (3 epochs, lr 0.1)
        let mlp_template = Model::zeroed(Architecture::Mlp, 28, 28, 10).unwrap();
        let mcfg = TrainConfig { learning_rate: 0.1, epochs: 3, batch_size: 32, seed: 7 };
        let mlp = sgd_train(&mlp_template, &train, &mcfg).unwrap();
        let mlp_acc = mlp.accuracy(&test).unwrap();
        println!(
            "noise {noise} epochs {epochs} lr {lr}: conv acc {acc:.3} rate {:.3} fails {} | mlp acc {mlp_acc:.3}",
            rep.rate,
            rep.eligible - rep.attacked
        );
    }
}
