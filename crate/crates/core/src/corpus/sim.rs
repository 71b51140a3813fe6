//! Roofline-style latency and power model of a multi-instance DPU.

use alloc::format;

use serde::{Deserialize, Serialize};

use crate::arch::{validate_configuration, DpuArchitecture, DpuConfiguration};
use crate::error::{Error, Result};
use crate::model::{ModelProfile, PerWorkload, WorkloadState};

/// Mean background telemetry of one workload state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryProfile {
    /// Mean utilization of each CPU core, in `[0, 1]`.
    pub cpu_util: f64,
    /// Mean read bandwidth per memory port, MB/s.
    pub mem_read_mbps: f64,
    /// Mean write bandwidth per memory port, MB/s.
    pub mem_write_mbps: f64,
}

/// Constants of the synthetic measurement model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationParams {
    pub clock_hz: f64,
    /// Shared DDR bandwidth, bytes/s.
    pub max_bandwidth: f64,
    /// Fraction of `max_bandwidth` left to the DPUs in each state.
    pub bw_factor: PerWorkload<f64>,
    /// CPU dispatch cost per inference, seconds.
    pub host_overhead: PerWorkload<f64>,
    /// Exponent of the small-core utilization gain.
    pub efficiency_gamma: f64,
    pub p_static: f64,
    /// Watts per (MAC/cycle) of one fully active instance.
    pub p_per_mac: f64,
    pub p_arm_base: PerWorkload<f64>,
    /// Arm power per inference/s spent dispatching DPU jobs.
    pub p_arm_per_fps: f64,
    pub telemetry: PerWorkload<TelemetryProfile>,
    /// Telemetry noise standard deviation as a fraction of the mean.
    pub telemetry_noise: f64,
    pub rng_seed: u64,
}

impl Default for CalibrationParams {
    fn default() -> Self {
        Self {
            clock_hz: 300.0e6,
            max_bandwidth: 19.2e9,
            bw_factor: PerWorkload::new(1.0, 0.9, 0.5),
            host_overhead: PerWorkload::new(0.2e-3, 1.0e-3, 0.6e-3),
            efficiency_gamma: 0.44,
            p_static: 0.05,
            p_per_mac: 0.003,
            p_arm_base: PerWorkload::new(0.9, 2.6, 1.8),
            p_arm_per_fps: 4.0e-4,
            telemetry: PerWorkload::new(
                TelemetryProfile {
                    cpu_util: 0.05,
                    mem_read_mbps: 120.0,
                    mem_write_mbps: 72.0,
                },
                TelemetryProfile {
                    cpu_util: 0.95,
                    mem_read_mbps: 184.0,
                    mem_write_mbps: 123.0,
                },
                TelemetryProfile {
                    cpu_util: 0.35,
                    mem_read_mbps: 1382.0,
                    mem_write_mbps: 922.0,
                },
            ),
            telemetry_noise: 0.05,
            rng_seed: 2574,
        }
    }
}

impl CalibrationParams {
    /// Returns every violated constraint, not just the first.
    pub fn violations(&self) -> alloc::vec::Vec<Error> {
        let mut out = alloc::vec::Vec::new();
        let mut check = |ok: bool, field: &'static str, reason: &str| {
            if !ok {
                out.push(Error::InvalidCalibration {
                    field,
                    reason: reason.into(),
                });
            }
        };
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        check(pos(self.clock_hz), "clock_hz", "must be positive");
        check(pos(self.max_bandwidth), "max_bandwidth", "must be positive");
        check(
            self.bw_factor.values().iter().all(|&f| f.is_finite() && f > 0.0 && f <= 1.0),
            "bw_factor",
            "each factor must lie in (0, 1]",
        );
        check(
            self.host_overhead.values().iter().all(|&h| nonneg(h)),
            "host_overhead",
            "must be non-negative",
        );
        check(nonneg(self.efficiency_gamma), "efficiency_gamma", "must be non-negative");
        check(nonneg(self.p_static), "p_static", "must be non-negative");
        check(pos(self.p_per_mac), "p_per_mac", "must be positive");
        check(
            self.p_arm_base.values().iter().all(|&p| pos(p)),
            "p_arm_base",
            "must be positive",
        );
        check(nonneg(self.p_arm_per_fps), "p_arm_per_fps", "must be non-negative");
        check(
            self.telemetry.values().iter().all(|t| {
                (0.0..=1.0).contains(&t.cpu_util) && nonneg(t.mem_read_mbps) && nonneg(t.mem_write_mbps)
            }),
            "telemetry",
            "cpu_util must lie in [0, 1] and bandwidths must be non-negative",
        );
        check(nonneg(self.telemetry_noise), "telemetry_noise", "must be non-negative");
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// `max_bandwidth` in MB/s, the unit of the telemetry fields.
    pub fn max_bandwidth_mbps(&self) -> f64 {
        self.max_bandwidth / 1.0e6
    }
}

/// Time components of one simulated inference on one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyBreakdown {
    pub efficiency: f64,
    pub compute_s: f64,
    pub memory_s: f64,
    pub host_s: f64,
    pub latency_s: f64,
}

impl LatencyBreakdown {
    /// Fraction of the latency the MAC array is busy.
    pub fn activity(&self) -> f64 {
        self.compute_s / self.latency_s
    }
}

/// Utilization achieved by `model` on one instance of `arch`.
///
/// Smaller arrays are easier to keep busy: the B4096 utilization is scaled by
/// `(peak(B4096) / peak(arch))^gamma` and capped at 1.
pub fn dpu_efficiency(model: &ModelProfile, arch: DpuArchitecture, gamma: f64) -> f64 {
    let ratio = f64::from(DpuArchitecture::B4096.peak_macs_per_cycle()) / f64::from(arch.peak_macs_per_cycle());
    (model.base_dpu_efficiency * libm::pow(ratio, gamma)).min(1.0)
}

fn check_inputs(model: &ModelProfile, config: &DpuConfiguration) -> Result<()> {
    if !(model.gmac > 0.0) {
        return Err(Error::InvalidModel {
            model: model.name.clone(),
            reason: format!("gmac must be positive, got {}", model.gmac),
        });
    }
    if !(model.dram_bytes() > 0.0) || model.ldfm < 0.0 || model.stfm < 0.0 {
        return Err(Error::InvalidModel {
            model: model.name.clone(),
            reason: "DDR byte counts must be positive".into(),
        });
    }
    if !(model.base_dpu_efficiency > 0.0) {
        return Err(Error::InvalidModel {
            model: model.name.clone(),
            reason: "base_dpu_efficiency must be positive to simulate".into(),
        });
    }
    if !validate_configuration(config) {
        return Err(Error::InvalidConfiguration(*config));
    }
    Ok(())
}

pub fn latency_breakdown(
    model: &ModelProfile,
    config: &DpuConfiguration,
    workload: WorkloadState,
    params: &CalibrationParams,
) -> Result<LatencyBreakdown> {
    check_inputs(model, config)?;
    let efficiency = dpu_efficiency(model, config.arch, params.efficiency_gamma);
    let macs_per_s = f64::from(config.arch.peak_macs_per_cycle()) * params.clock_hz * efficiency;
    let compute_s = model.gmac * 1.0e9 / macs_per_s;
    let per_instance_bw = params.max_bandwidth * params.bw_factor.get(workload) / f64::from(config.instances);
    let memory_s = model.dram_bytes() / per_instance_bw;
    let host_s = params.host_overhead.get(workload);
    Ok(LatencyBreakdown {
        efficiency,
        compute_s,
        memory_s,
        host_s,
        latency_s: compute_s.max(memory_s) + host_s,
    })
}

/// Seconds per inference on each instance.
pub fn simulate_latency(
    model: &ModelProfile,
    config: &DpuConfiguration,
    workload: WorkloadState,
    params: &CalibrationParams,
) -> Result<f64> {
    latency_breakdown(model, config, workload, params).map(|b| b.latency_s)
}

/// FPGA fabric power for `instances` copies of `arch` at the given activity.
pub fn fpga_power(params: &CalibrationParams, arch: DpuArchitecture, instances: u32, activity: f64) -> f64 {
    params.p_static + f64::from(instances) * params.p_per_mac * f64::from(arch.peak_macs_per_cycle()) * activity
}

/// Arm power while dispatching `fps` inferences per second.
pub fn arm_power(params: &CalibrationParams, workload: WorkloadState, fps: f64) -> f64 {
    params.p_arm_base.get(workload) + params.p_arm_per_fps * fps
}

/// Returns `(p_fpga, p_arm)` in watts.
pub fn simulate_power(
    model: &ModelProfile,
    config: &DpuConfiguration,
    workload: WorkloadState,
    params: &CalibrationParams,
) -> Result<(f64, f64)> {
    let b = latency_breakdown(model, config, workload, params)?;
    let fps = f64::from(config.instances) / b.latency_s;
    Ok((
        fpga_power(params, config.arch, config.instances, b.activity()),
        arm_power(params, workload, fps),
    ))
}
