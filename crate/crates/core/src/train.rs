//! Preference-loss training for the featurized reward model.
//!
//! The plain pairwise objective is `-mean log sigmoid(r(chosen) -
//! r(rejected))`. The dual-consistency variant trains on truncated pairs,
//! weighting each record by the confidence of a frozen reference scorer:
//! the reference's score gap is squashed through a sigmoid into a binary
//! distribution, and the record weight is the reciprocal of its Shannon
//! entropy — small gaps (high entropy, typically short prefixes) count
//! less, and records the reference orders against the label are dropped
//! outright. Weights are computed once, before any gradient step.
//!
//! `log sigmoid` is evaluated as `-softplus(-delta)` throughout, so large
//! gaps never overflow.

use alloc::string::ToString;
use alloc::vec::Vec;
use alloc::{format, vec};

use rand::seq::SliceRandom;

use crate::dataset::PartialDataset;
use crate::error::{Error, Result};
use crate::math;
use crate::reward::{FeaturizedReward, RewardModel};
use crate::rng;
use crate::seq::{PartialPair, PreferencePair, TokenSeq};

/// Anything with a prompt and an ordered pair of sequences to compare.
pub trait PreferenceExample {
    fn prompt(&self) -> &TokenSeq;
    fn preferred(&self) -> &TokenSeq;
    fn dispreferred(&self) -> &TokenSeq;
}

impl PreferenceExample for PreferencePair {
    fn prompt(&self) -> &TokenSeq {
        &self.prompt
    }
    fn preferred(&self) -> &TokenSeq {
        &self.chosen
    }
    fn dispreferred(&self) -> &TokenSeq {
        &self.rejected
    }
}

impl PreferenceExample for PartialPair {
    fn prompt(&self) -> &TokenSeq {
        &self.prompt
    }
    fn preferred(&self) -> &TokenSeq {
        &self.chosen_prefix
    }
    fn dispreferred(&self) -> &TokenSeq {
        &self.rejected_prefix
    }
}

/// Parameters of the confidence weighting. Entropies are in nats.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightingConfig {
    /// Floor on the entropy before taking the reciprocal; keeps weights
    /// finite as the reference gap grows.
    pub entropy_floor: f64,
    /// Hard cap on any single weight. When `1/entropy_floor` exceeds the
    /// cap, the cap binds first.
    pub weight_cap: f64,
}

impl Default for WeightingConfig {
    fn default() -> Self {
        WeightingConfig {
            entropy_floor: 1e-3,
            weight_cap: 100.0,
        }
    }
}

impl WeightingConfig {
    pub fn validate(&self) -> Result<()> {
        let ln2 = math::ln(2.0);
        if !(self.entropy_floor > 0.0 && self.entropy_floor <= ln2) {
            return Err(Error::Config(format!(
                "entropy floor must be in (0, ln 2], got {}",
                self.entropy_floor
            )));
        }
        if !(self.weight_cap > 0.0) {
            return Err(Error::Config("weight cap must be > 0".to_string()));
        }
        Ok(())
    }
}

/// Confidence weight of one truncated pair under a frozen reference scorer.
///
/// With `delta = r_ref(prompt, chosen prefix) - r_ref(prompt, rejected
/// prefix)`: records the reference does not strictly prefer (`delta <= 0`)
/// get weight 0; otherwise `p = sigmoid(delta)`, `H = -(p ln p + (1-p)
/// ln(1-p))`, and the weight is `min(1 / max(H, floor), cap)`.
pub fn pair_weight(
    reference: &dyn RewardModel,
    pair: &PartialPair,
    cfg: &WeightingConfig,
) -> Result<f64> {
    cfg.validate()?;
    let delta = reference.score(&pair.prompt, &pair.chosen_prefix)?
        - reference.score(&pair.prompt, &pair.rejected_prefix)?;
    if delta <= 0.0 {
        return Ok(0.0);
    }
    let p = math::sigmoid(delta);
    let entropy = math::binary_entropy(p);
    Ok((1.0 / entropy.max(cfg.entropy_floor)).min(cfg.weight_cap))
}

/// Mean pairwise loss and its gradient in the model's parameters.
///
/// `loss = -mean log sigmoid(r(preferred) - r(dispreferred))`.
pub fn bt_loss<E: PreferenceExample>(
    rm: &FeaturizedReward,
    batch: &[E],
) -> Result<(f64, Vec<f64>)> {
    let weights = vec![1.0; batch.len()];
    weighted_loss_impl(rm, batch, &weights)
}

/// A batch of truncated pairs with strictly positive weights.
///
/// Zero-weight records are excluded on construction; negative weights are
/// rejected.
#[derive(Clone, Debug)]
pub struct WeightedBatch {
    records: Vec<PartialPair>,
}

impl WeightedBatch {
    pub fn new(records: Vec<PartialPair>) -> Result<Self> {
        for rec in &records {
            if !(rec.weight >= 0.0) {
                return Err(Error::Config(format!(
                    "record weight must be non-negative, got {}",
                    rec.weight
                )));
            }
        }
        Ok(WeightedBatch {
            records: records.into_iter().filter(|r| r.weight > 0.0).collect(),
        })
    }

    pub fn records(&self) -> &[PartialPair] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn weight_mass(&self) -> f64 {
        self.records.iter().map(|r| r.weight).sum()
    }
}

/// Weighted pairwise loss, normalized by the total weight of the batch:
/// `loss = -(sum w_i log sigmoid(delta_i)) / sum w_i`. Uniform weights
/// reduce it to [`bt_loss`]; rescaling all weights changes nothing.
pub fn weighted_bt_loss(rm: &FeaturizedReward, batch: &WeightedBatch) -> Result<(f64, Vec<f64>)> {
    let weights: Vec<f64> = batch.records.iter().map(|r| r.weight).collect();
    weighted_loss_impl(rm, &batch.records, &weights)
}

fn weighted_loss_impl<E: PreferenceExample>(
    rm: &FeaturizedReward,
    batch: &[E],
    weights: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Degenerate("empty batch".to_string()));
    }
    let mass: f64 = weights.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::Degenerate(
            "batch weight mass is zero".to_string(),
        ));
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; rm.param_count()];
    for (example, &w) in batch.iter().zip(weights) {
        let (s_pos, g_pos) = rm.score_with_grad(example.prompt(), example.preferred())?;
        let (s_neg, g_neg) = rm.score_with_grad(example.prompt(), example.dispreferred())?;
        let delta = s_pos - s_neg;
        loss += w * math::softplus(-delta);
        // d/dp softplus(-delta) = -sigmoid(-delta) * (g_pos - g_neg)
        let coef = -w * math::sigmoid(-delta);
        for ((slot, gp), gn) in grad.iter_mut().zip(&g_pos).zip(&g_neg) {
            *slot += coef * (gp - gn);
        }
    }
    loss /= mass;
    for slot in &mut grad {
        *slot /= mass;
    }
    Ok((loss, grad))
}

/// Gradient-descent variants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Mini-batch training configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            epochs: 50,
            batch_size: 64,
            seed: 0,
            optimizer: Optimizer::default(),
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) {
            return Err(Error::Config("learning rate must be >= 0".to_string()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".to_string()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// One row of the loss curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStat {
    /// 0 is the pre-training evaluation; epoch `e` is after `e` passes.
    pub epoch: usize,
    pub loss: f64,
    pub weight_mass: f64,
}

struct OptimizerState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl OptimizerState {
    fn new(dim: usize) -> Self {
        OptimizerState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            step: 0,
        }
    }

    fn apply(&mut self, opt: &Optimizer, lr: f64, params: &mut [f64], grad: &[f64]) {
        match *opt {
            Optimizer::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                self.step += 1;
                let bc1 = 1.0 - libm::pow(beta1, self.step as f64);
                let bc2 = 1.0 - libm::pow(beta2, self.step as f64);
                for i in 0..params.len() {
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
                    let m_hat = self.m[i] / bc1;
                    let v_hat = self.v[i] / bc2;
                    params[i] -= lr * m_hat / (math::sqrt(v_hat) + eps);
                }
            }
        }
    }
}

fn gd_loop<E: PreferenceExample + Clone>(
    mut rm: FeaturizedReward,
    examples: &[E],
    weights: &[f64],
    tcfg: &TrainConfig,
) -> Result<(FeaturizedReward, Vec<EpochStat>)> {
    tcfg.validate()?;
    if examples.is_empty() {
        return Err(Error::Degenerate(
            "no trainable records after filtering".to_string(),
        ));
    }
    let mass: f64 = weights.iter().sum();
    let full_loss = |rm: &FeaturizedReward| -> Result<f64> {
        Ok(weighted_loss_impl(rm, examples, weights)?.0)
    };

    let mut curve = Vec::with_capacity(tcfg.epochs + 1);
    curve.push(EpochStat {
        epoch: 0,
        loss: full_loss(&rm)?,
        weight_mass: mass,
    });

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut shuffle_rng = rng::stream(tcfg.seed, "training");
    let mut state = OptimizerState::new(rm.param_count());

    for epoch in 1..=tcfg.epochs {
        if tcfg.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        for batch_ids in order.chunks(tcfg.batch_size) {
            let batch: Vec<E> = batch_ids.iter().map(|&i| examples[i].clone()).collect();
            let batch_w: Vec<f64> = batch_ids.iter().map(|&i| weights[i]).collect();
            let (loss, grad) = weighted_loss_impl(&rm, &batch, &batch_w)?;
            if !loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite batch loss at epoch {epoch}"
                )));
            }
            state.apply(&tcfg.optimizer, tcfg.learning_rate, rm.params_mut(), &grad);
        }
        let loss = full_loss(&rm)?;
        if !loss.is_finite() || rm.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence(format!(
                "training diverged at epoch {epoch} (loss {loss})"
            )));
        }
        curve.push(EpochStat {
            epoch,
            loss,
            weight_mass: mass,
        });
    }
    Ok((rm, curve))
}

/// Train on truncated pairs with reference-model confidence weighting.
///
/// Weights are computed once from the frozen `reference`; zero-weight
/// records (reference disagreements, ties, vacuous prefixes) are dropped
/// before the first gradient step. Fails with a degenerate-data error when
/// nothing survives.
pub fn train(
    rm: FeaturizedReward,
    data: &PartialDataset,
    reference: &dyn RewardModel,
    wcfg: &WeightingConfig,
    tcfg: &TrainConfig,
) -> Result<(FeaturizedReward, Vec<EpochStat>)> {
    wcfg.validate()?;
    let mut kept: Vec<PartialPair> = Vec::new();
    for rec in &data.records {
        let w = pair_weight(reference, rec, wcfg)?;
        if w > 0.0 {
            let mut rec = rec.clone();
            rec.weight = w;
            kept.push(rec);
        }
    }
    if kept.is_empty() {
        return Err(Error::Degenerate(
            "every record received weight zero under the reference model".to_string(),
        ));
    }
    let weights: Vec<f64> = kept.iter().map(|r| r.weight).collect();
    gd_loop(rm, &kept, &weights, tcfg)
}

/// Train with uniform weights (the plain pairwise objective).
///
/// Records whose two sides coincide are skipped: their comparison carries
/// no signal and only flattens the gradient.
pub fn train_unweighted<E: PreferenceExample + Clone>(
    rm: FeaturizedReward,
    examples: &[E],
    tcfg: &TrainConfig,
) -> Result<(FeaturizedReward, Vec<EpochStat>)> {
    let kept: Vec<E> = examples
        .iter()
        .filter(|e| e.preferred() != e.dispreferred())
        .cloned()
        .collect();
    let weights = vec![1.0; kept.len()];
    gd_loop(rm, &kept, &weights, tcfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_tlt, synth_corpus, SynthParams};
    use crate::reward::{LexOracleReward, RewardArch};
    use crate::seq::Vocab;

    fn vocab() -> Vocab {
        Vocab::new(["<eos>", "a", "b", "c"], "<eos>").unwrap()
    }

    /// Reference scorer with a fixed gap between the two sides.
    struct FixedGap(f64);

    impl RewardModel for FixedGap {
        fn score(&self, _p: &TokenSeq, seq: &TokenSeq) -> Result<f64> {
            // chosen prefixes start with "b" (id 2) in these tests
            Ok(if seq.ids().first() == Some(&2) {
                self.0
            } else {
                0.0
            })
        }
    }

    fn partial(v: &Vocab) -> PartialPair {
        let pair = PreferencePair::new(
            v.encode("a").unwrap(),
            v.encode("b c").unwrap(),
            v.encode("c b").unwrap(),
        )
        .unwrap();
        PartialPair::from_pair(&pair, 0, 2).unwrap()
    }

    #[test]
    fn weight_zero_on_ties_and_reversals() {
        let v = vocab();
        let p = partial(&v);
        let cfg = WeightingConfig::default();
        assert_eq!(pair_weight(&FixedGap(0.0), &p, &cfg).unwrap(), 0.0);
        assert_eq!(pair_weight(&FixedGap(-1.0), &p, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn weight_closed_form_at_gap_two() {
        let v = vocab();
        let p = partial(&v);
        let cfg = WeightingConfig::default();
        let w = pair_weight(&FixedGap(2.0), &p, &cfg).unwrap();
        // Independent evaluation with std arithmetic.
        let sig = 1.0 / (1.0 + (-2.0f64).exp());
        let h = -(sig * sig.ln() + (1.0 - sig) * (1.0 - sig).ln());
        assert!((w - 1.0 / h).abs() < 1e-12);
        assert!((w - 2.737).abs() < 1e-3);
        let p_w = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((p_w - 0.8808).abs() < 1e-4);
        assert!((h - 0.3654).abs() < 1e-4);
    }

    #[test]
    fn weight_monotone_and_capped() {
        let v = vocab();
        let p = partial(&v);
        let cfg = WeightingConfig::default();
        let mut last = 0.0;
        for i in 1..=100 {
            let delta = 0.1 * i as f64;
            let w = pair_weight(&FixedGap(delta), &p, &cfg).unwrap();
            assert!(w >= last, "weight dropped at delta {delta}");
            assert!(w <= cfg.weight_cap);
            last = w;
        }
        let tight = WeightingConfig {
            entropy_floor: 0.5,
            weight_cap: 1.5,
        };
        assert_eq!(pair_weight(&FixedGap(50.0), &p, &tight).unwrap(), 1.5);
    }

    #[test]
    fn weighting_config_validation() {
        let v = vocab();
        let p = partial(&v);
        let bad = WeightingConfig {
            entropy_floor: 1.0, // > ln 2
            weight_cap: 10.0,
        };
        assert!(pair_weight(&FixedGap(1.0), &p, &bad).is_err());
        let bad2 = WeightingConfig {
            entropy_floor: 1e-3,
            weight_cap: 0.0,
        };
        assert!(bad2.validate().is_err());
    }

    #[test]
    fn bt_loss_at_zero_parameters() {
        let v = vocab();
        let rm = FeaturizedReward::zeros(&v, RewardArch::Linear, 64).unwrap();
        let pair = PreferencePair::new(
            v.encode("a").unwrap(),
            v.encode("b c").unwrap(),
            v.encode("c a b").unwrap(),
        )
        .unwrap();
        let (loss, grad) = bt_loss(&rm, &[pair.clone()]).unwrap();
        assert!((loss - core::f64::consts::LN_2).abs() < 1e-12);
        // grad = -1/2 (phi_w - phi_l)
        let pw = rm.features(&pair.prompt, &pair.chosen).unwrap();
        let pl = rm.features(&pair.prompt, &pair.rejected).unwrap();
        for i in 0..grad.len() {
            assert!((grad[i] + 0.5 * (pw[i] - pl[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn bt_loss_at_unit_gap() {
        // -ln sigmoid(1) evaluated independently.
        let expected = -(1.0f64 / (1.0 + (-1.0f64).exp())).ln();
        assert!((expected - 0.3132616875182228).abs() < 1e-15);
        assert!((math::softplus(-1.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn weighted_loss_reductions() {
        let v = vocab();
        let mut r = crate::rng::stream(1, "t");
        let rm = FeaturizedReward::random(&v, RewardArch::Linear, 64, 0.3, &mut r).unwrap();
        let pair = PreferencePair::new(
            v.encode("a").unwrap(),
            v.encode("b c").unwrap(),
            v.encode("c b a").unwrap(),
        )
        .unwrap();
        let parts: Vec<PartialPair> = (1..=3)
            .map(|t| PartialPair::from_pair(&pair, 0, t).unwrap())
            .collect();
        let uniform = WeightedBatch::new(parts.clone()).unwrap();
        let (wl, wg) = weighted_bt_loss(&rm, &uniform).unwrap();
        let (bl, bg) = bt_loss(&rm, &parts).unwrap();
        assert!((wl - bl).abs() < 1e-15);
        for (a, b) in wg.iter().zip(&bg) {
            assert!((a - b).abs() < 1e-15);
        }

        let mut doubled = parts.clone();
        for rec in &mut doubled {
            rec.weight = 2.0;
        }
        let (dl, dg) = weighted_bt_loss(&rm, &WeightedBatch::new(doubled).unwrap()).unwrap();
        assert!((dl - wl).abs() < 1e-12);
        for (a, b) in dg.iter().zip(&wg) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_batch_filters_and_rejects() {
        let v = vocab();
        let mut a = partial(&v);
        a.weight = 0.0;
        let mut b = partial(&v);
        b.weight = 2.0;
        let batch = WeightedBatch::new(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(batch.len(), 1);
        let rm = FeaturizedReward::zeros(&v, RewardArch::Linear, 64).unwrap();
        let (loss, _) = weighted_bt_loss(&rm, &batch).unwrap();
        let (single, _) = bt_loss(&rm, &[b]).unwrap();
        assert!((loss - single).abs() < 1e-15);

        let mut neg = partial(&v);
        neg.weight = -1.0;
        assert!(WeightedBatch::new(vec![neg]).is_err());
        let empty = WeightedBatch::new(vec![a]).unwrap();
        assert!(matches!(
            weighted_bt_loss(&rm, &empty),
            Err(Error::Degenerate(_))
        ));
    }

    fn oracle_and_data(n: usize, noise: f64) -> (Vocab, LexOracleReward, PartialDataset) {
        let v = vocab();
        let oracle = LexOracleReward::random(&v, 8, &mut crate::rng::stream(5, "o")).unwrap();
        let mut r = crate::rng::stream(6, "synth");
        let d = synth_corpus(
            &v,
            n,
            &oracle,
            noise,
            SynthParams {
                prompt_len: (1, 3),
                response_len: (4, 8),
            },
            &mut r,
        )
        .unwrap();
        let partial = build_tlt(&d).unwrap();
        (v, oracle, partial)
    }

    #[test]
    fn training_beats_the_uninformed_baseline() {
        let (v, oracle, partial) = oracle_and_data(80, 0.0);
        let rm = FeaturizedReward::zeros(&v, RewardArch::Linear, 8).unwrap();
        let tcfg = TrainConfig {
            epochs: 50,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let (_, curve) = train(
            rm,
            &partial,
            &oracle,
            &WeightingConfig::default(),
            &tcfg,
        )
        .unwrap();
        let final_loss = curve.last().unwrap().loss;
        assert!(
            final_loss < core::f64::consts::LN_2,
            "final loss {final_loss}"
        );
    }

    #[test]
    fn zero_learning_rate_is_a_null_update() {
        let (v, oracle, partial) = oracle_and_data(20, 0.0);
        let rm = FeaturizedReward::zeros(&v, RewardArch::Linear, 8).unwrap();
        let before = rm.params().to_vec();
        let tcfg = TrainConfig {
            epochs: 5,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let (trained, curve) = train(
            rm,
            &partial,
            &oracle,
            &WeightingConfig::default(),
            &tcfg,
        )
        .unwrap();
        assert_eq!(trained.params(), before.as_slice());
        let first = curve[0].loss;
        assert!(curve.iter().all(|s| (s.loss - first).abs() < 1e-15));
    }

    #[test]
    fn reference_keeps_full_length_records_on_its_own_labels() {
        let (_, oracle, partial) = oracle_and_data(50, 0.0);
        let cfg = WeightingConfig::default();
        let mut checked = 0;
        for rec in &partial.records {
            // Both prefixes complete <=> t reached the pair's horizon.
            if rec.chosen_prefix.is_complete() && rec.rejected_prefix.is_complete() {
                // At full length the oracle strictly prefers its own label.
                assert!(pair_weight(&oracle, rec, &cfg).unwrap() > 0.0);
                checked += 1;
            }
        }
        assert_eq!(checked, 50);
    }

    #[test]
    fn degenerate_dataset_is_reported() {
        let v = vocab();
        // A reference that always scores zero drops every record.
        struct Zero;
        impl RewardModel for Zero {
            fn score(&self, _p: &TokenSeq, _s: &TokenSeq) -> Result<f64> {
                Ok(0.0)
            }
        }
        let pair = PreferencePair::new(
            v.encode("a").unwrap(),
            v.encode("b").unwrap(),
            v.encode("c").unwrap(),
        )
        .unwrap();
        let partial = PartialDataset {
            records: vec![PartialPair::from_pair(&pair, 0, 1).unwrap()],
            builder: crate::dataset::Builder::TokenLevel,
            seed: None,
        };
        let rm = FeaturizedReward::zeros(&v, RewardArch::Linear, 8).unwrap();
        assert!(matches!(
            train(
                rm,
                &partial,
                &Zero,
                &WeightingConfig::default(),
                &TrainConfig::default()
            ),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn divergence_guard_fires_on_nan_parameters() {
        let (v, oracle, partial) = oracle_and_data(10, 0.0);
        let mut rm = FeaturizedReward::zeros(&v, RewardArch::Linear, 8).unwrap();
        rm.params_mut()[0] = f64::NAN;
        assert!(matches!(
            train(
                rm,
                &partial,
                &oracle,
                &WeightingConfig::default(),
                &TrainConfig::default()
            ),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            learning_rate: -1.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn full_batch_sgd_is_monotone_on_separable_data() {
        let (v, oracle, partial) = oracle_and_data(40, 0.0);
        let rm = FeaturizedReward::zeros(&v, RewardArch::Linear, 8).unwrap();
        let tcfg = TrainConfig {
            epochs: 30,
            learning_rate: 0.1,
            batch_size: usize::MAX,
            optimizer: Optimizer::Sgd,
            shuffle: false,
            ..TrainConfig::default()
        };
        let (_, curve) = train(
            rm,
            &partial,
            &oracle,
            &WeightingConfig::default(),
            &tcfg,
        )
        .unwrap();
        for pair in curve.windows(2) {
            assert!(
                pair[1].loss <= pair[0].loss,
                "loss rose from {} to {}",
                pair[0].loss,
                pair[1].loss
            );
        }
    }

    #[test]
    fn unweighted_training_skips_vacuous_records() {
        let v = vocab();
        let pair = PreferencePair::new(
            v.encode("a").unwrap(),
            v.encode("b b c").unwrap(),
            v.encode("b b a").unwrap(),
        )
        .unwrap();
        // t = 1, 2 produce identical prefixes; only t = 3 carries signal.
        let parts: Vec<PartialPair> = (1..=3)
            .map(|t| PartialPair::from_pair(&pair, 0, t).unwrap())
            .collect();
        let rm = FeaturizedReward::zeros(&v, RewardArch::Linear, 8).unwrap();
        let tcfg = TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        };
        let (_, curve) = train_unweighted(rm, &parts, &tcfg).unwrap();
        assert!((curve[0].weight_mass - 1.0).abs() < 1e-12);
    }
}
