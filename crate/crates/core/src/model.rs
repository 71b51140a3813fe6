//! Static model features, workload states and pruned variants.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Background load on the host while the DPU runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WorkloadState {
    /// No additional load.
    N,
    /// Compute-intensive CPU load, little memory traffic.
    C,
    /// Memory-bandwidth-intensive load.
    M,
}

impl WorkloadState {
    pub const ALL: [WorkloadState; 3] = [WorkloadState::N, WorkloadState::C, WorkloadState::M];

    pub fn index(self) -> usize {
        match self {
            WorkloadState::N => 0,
            WorkloadState::C => 1,
            WorkloadState::M => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WorkloadState::N => "N",
            WorkloadState::C => "C",
            WorkloadState::M => "M",
        }
    }
}

impl fmt::Display for WorkloadState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WorkloadState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "n" => Ok(WorkloadState::N),
            "C" | "c" => Ok(WorkloadState::C),
            "M" | "m" => Ok(WorkloadState::M),
            other => Err(Error::Parse(format!("unknown workload state `{other}`"))),
        }
    }
}

/// A value indexed by workload state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerWorkload<T> {
    #[serde(rename = "N")]
    pub n: T,
    #[serde(rename = "C")]
    pub c: T,
    #[serde(rename = "M")]
    pub m: T,
}

impl<T: Copy> PerWorkload<T> {
    pub const fn new(n: T, c: T, m: T) -> Self {
        Self { n, c, m }
    }

    pub fn get(&self, w: WorkloadState) -> T {
        match w {
            WorkloadState::N => self.n,
            WorkloadState::C => self.c,
            WorkloadState::M => self.m,
        }
    }

    pub fn values(&self) -> [T; 3] {
        [self.n, self.c, self.m]
    }
}

/// Static features of a (possibly pruned) CNN model.
///
/// Byte counts are per inference of one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    /// Unique variant name, e.g. `ResNet152` or `ResNet152_PR25`.
    pub name: String,
    pub gmac: f64,
    pub ldfm: f64,
    pub ldwb: f64,
    pub stfm: f64,
    pub params: f64,
    /// INT8 top-1 accuracy (or mAP). Metadata only.
    pub accuracy: f64,
    pub pruning_ratio: f64,
    /// Fraction of peak MACs achieved on a single B4096.
    pub base_dpu_efficiency: f64,
}

impl ModelProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidModel {
                model: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        let fields = [
            self.gmac,
            self.ldfm,
            self.ldwb,
            self.stfm,
            self.params,
            self.accuracy,
            self.pruning_ratio,
            self.base_dpu_efficiency,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return bad("non-finite field");
        }
        if self.gmac <= 0.0 {
            return bad("gmac must be positive");
        }
        if self.ldfm < 0.0 || self.ldwb < 0.0 || self.stfm < 0.0 {
            return bad("byte counts must be non-negative");
        }
        if self.data_bytes() <= 0.0 {
            return bad("ldfm + ldwb + stfm must be positive");
        }
        if self.params <= 0.0 {
            return bad("params must be positive");
        }
        if !(0.0..=1.0).contains(&self.base_dpu_efficiency) {
            return bad("base_dpu_efficiency must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.accuracy) {
            return bad("accuracy must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.pruning_ratio) {
            return bad("pruning_ratio must lie in [0, 1)");
        }
        Ok(())
    }

    /// Total DRAM/weight-buffer traffic, `ldfm + ldwb + stfm`.
    pub fn data_bytes(&self) -> f64 {
        self.ldfm + self.ldwb + self.stfm
    }

    /// Feature-map traffic to and from DDR, `ldfm + stfm`.
    pub fn dram_bytes(&self) -> f64 {
        self.ldfm + self.stfm
    }

    /// Name of the unpruned model this variant derives from.
    pub fn base_name(&self) -> &str {
        match self.name.rfind("_PR") {
            Some(i) if self.name[i + 3..].chars().all(|c| c.is_ascii_digit()) => &self.name[..i],
            _ => &self.name,
        }
    }

    pub fn is_pruned(&self) -> bool {
        self.pruning_ratio > 0.0
    }
}

/// Absolute accuracy drop (fraction) applied per pruning ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyDropTable {
    pub pr25: f64,
    pub pr50: f64,
}

impl Default for AccuracyDropTable {
    fn default() -> Self {
        // 0.25 reproduces ResNet152 at 66.64% from 78.48%.
        Self {
            pr25: 0.1184,
            pr50: 0.30,
        }
    }
}

pub const PRUNING_RATIOS: [f64; 3] = [0.0, 0.25, 0.5];

/// Channel-pruned variant of `model`.
///
/// Size features scale linearly by `1 - ratio`; efficiency is unchanged.
pub fn prune_variant(model: &ModelProfile, ratio: f64, drops: &AccuracyDropTable) -> Result<ModelProfile> {
    let drop = if ratio == 0.0 {
        return Ok(model.clone());
    } else if ratio == 0.25 {
        drops.pr25
    } else if ratio == 0.5 {
        drops.pr50
    } else {
        return Err(Error::UnsupportedPruningRatio(ratio));
    };
    let keep = 1.0 - ratio;
    Ok(ModelProfile {
        name: format!("{}_PR{}", model.name, libm::round(ratio * 100.0) as u32),
        gmac: model.gmac * keep,
        ldfm: model.ldfm * keep,
        ldwb: model.ldwb * keep,
        stfm: model.stfm * keep,
        params: model.params * keep,
        accuracy: (model.accuracy - drop).max(0.0),
        pruning_ratio: ratio,
        base_dpu_efficiency: model.base_dpu_efficiency,
    })
}

/// Each base model followed by its 25% and 50% pruned variants.
pub fn with_pruned_variants(bases: &[ModelProfile], drops: &AccuracyDropTable) -> Result<Vec<ModelProfile>> {
    let mut out = Vec::with_capacity(bases.len() * 3);
    for base in bases {
        for ratio in PRUNING_RATIOS {
            out.push(prune_variant(base, ratio, drops)?);
        }
    }
    Ok(out)
}

const MB: f64 = 1.0e6;

// name, GMAC, DRAM<->DPU data (MB), INT8 accuracy, DPU efficiency on B4096_1,
// trainable parameters (millions)
const WEIGHT_SHARE: f64 = 0.5;

const CATALOGUE: [(&str, f64, f64, f64, f64, f64); 11] = [
    ("ResNet18", 1.82, 12.13, 0.6790, 0.719, 11.69),
    ("ResNet50", 4.10, 38.94, 0.7760, 0.590, 25.56),
    ("MobileNetV2", 0.30, 5.74, 0.6823, 0.171, 3.50),
    ("DenseNet121", 2.86, 43.74, 0.6870, 0.269, 7.98),
    ("InceptionV4", 12.3, 89.00, 0.7714, 0.630, 42.68),
    ("RepVGG_A0", 1.52, 11.84, 0.7241, 0.534, 9.11),
    ("ResNeXt50_32x4d", 11.41, 95.85, 0.7621, 0.689, 25.03),
    ("YOLOv5s", 8.26, 159.80, 0.4210, 0.429, 7.23),
    ("RegNetX_400MF", 1.57, 24.33, 0.7015, 0.474, 5.16),
    ("InceptionV3", 5.74, 43.13, 0.7703, 0.635, 23.83),
    ("ResNet152", 11.54, 76.52, 0.7848, 0.620, 60.19),
];

/// The eleven unpruned reference models.
///
/// Half of each model's data volume is attributed to weight-buffer loads; the
/// remaining feature-map traffic is split 55/45 between loads and stores.
pub fn reference_models() -> Vec<ModelProfile> {
    CATALOGUE
        .iter()
        .map(|&(name, gmac, data_mb, accuracy, eff, params_m)| {
            let total = data_mb * MB;
            let params = params_m * 1.0e6;
            let ldwb = WEIGHT_SHARE * total;
            let dram = total - ldwb;
            ModelProfile {
                name: name.to_string(),
                gmac,
                ldfm: 0.55 * dram,
                ldwb,
                stfm: 0.45 * dram,
                params,
                accuracy,
                pruning_ratio: 0.0,
                base_dpu_efficiency: eff,
            }
        })
        .collect()
}

/// The 33-variant corpus model list: each reference model with two pruned variants.
pub fn reference_variants() -> Vec<ModelProfile> {
    with_pruned_variants(&reference_models(), &AccuracyDropTable::default())
        .expect("catalogue pruning ratios are supported")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resnet152() -> ModelProfile {
        reference_models()
            .into_iter()
            .find(|m| m.name == "ResNet152")
            .unwrap()
    }

    #[test]
    fn catalogue_is_valid() {
        let models = reference_models();
        assert_eq!(models.len(), 11);
        for m in &models {
            m.validate().unwrap();
            let total = m.data_bytes() / MB;
            let row = CATALOGUE.iter().find(|r| r.0 == m.name).unwrap();
            assert!((total - row.2).abs() < 1e-9);
        }
        assert_eq!(reference_variants().len(), 33);
    }

    #[test]
    fn prune_zero_is_identity() {
        let m = resnet152();
        assert_eq!(prune_variant(&m, 0.0, &AccuracyDropTable::default()).unwrap(), m);
    }

    #[test]
    fn prune_resnet152_accuracy() {
        let p = prune_variant(&resnet152(), 0.25, &AccuracyDropTable::default()).unwrap();
        assert!((p.accuracy - 0.6664).abs() < 1e-12);
        assert_eq!(p.name, "ResNet152_PR25");
        assert_eq!(p.base_name(), "ResNet152");
    }

    #[test]
    fn prune_scales_linearly() {
        let mut m = resnet152();
        m.gmac = 12.0;
        let p = prune_variant(&m, 0.5, &AccuracyDropTable::default()).unwrap();
        assert_eq!(p.gmac, 6.0);
        assert_eq!(p.params, m.params * 0.5);
        assert_eq!(p.ldfm, m.ldfm * 0.5);
        assert_eq!(p.base_dpu_efficiency, m.base_dpu_efficiency);
    }

    #[test]
    fn prune_rejects_other_ratios() {
        let m = resnet152();
        for r in [0.1, 0.75, -0.25, 1.0] {
            assert_eq!(
                prune_variant(&m, r, &AccuracyDropTable::default()),
                Err(Error::UnsupportedPruningRatio(r))
            );
        }
    }

    #[test]
    fn validation_rejects_bad_profiles() {
        let mut m = resnet152();
        m.gmac = 0.0;
        assert!(m.validate().is_err());
        let mut m = resnet152();
        m.ldfm = 0.0;
        m.ldwb = 0.0;
        m.stfm = 0.0;
        assert!(m.validate().is_err());
        let mut m = resnet152();
        m.base_dpu_efficiency = 1.2;
        assert!(m.validate().is_err());
        let mut m = resnet152();
        m.params = f64::NAN;
        assert!(m.validate().is_err());
    }

    #[test]
    fn workload_parse() {
        for w in WorkloadState::ALL {
            assert_eq!(w.as_str().parse::<WorkloadState>().unwrap(), w);
        }
        assert!("X".parse::<WorkloadState>().is_err());
    }

    #[test]
    fn base_name_of_unpruned() {
        assert_eq!(resnet152().base_name(), "ResNet152");
        let mut m = resnet152();
        m.name = "Odd_PRx".to_string();
        assert_eq!(m.base_name(), "Odd_PRx");
    }
}
