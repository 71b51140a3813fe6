//! DPU architectures and the configuration (action) space.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// One of the eight DPUCZDX8G core sizes available on the target device.
///
/// The numeric part of the name is the number of operations per cycle,
/// i.e. twice the MAC count (`pp * icp * ocp`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DpuArchitecture {
    B512,
    B800,
    B1024,
    B1152,
    B1600,
    B2304,
    B3136,
    B4096,
}

impl DpuArchitecture {
    /// All architectures, smallest first.
    pub const ALL: [DpuArchitecture; 8] = [
        DpuArchitecture::B512,
        DpuArchitecture::B800,
        DpuArchitecture::B1024,
        DpuArchitecture::B1152,
        DpuArchitecture::B1600,
        DpuArchitecture::B2304,
        DpuArchitecture::B3136,
        DpuArchitecture::B4096,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DpuArchitecture::B512 => "B512",
            DpuArchitecture::B800 => "B800",
            DpuArchitecture::B1024 => "B1024",
            DpuArchitecture::B1152 => "B1152",
            DpuArchitecture::B1600 => "B1600",
            DpuArchitecture::B2304 => "B2304",
            DpuArchitecture::B3136 => "B3136",
            DpuArchitecture::B4096 => "B4096",
        }
    }

    /// Pixel parallelism.
    pub fn pp(self) -> u32 {
        match self {
            DpuArchitecture::B512 | DpuArchitecture::B800 | DpuArchitecture::B1152 => 4,
            _ => 8,
        }
    }

    /// Input channel parallelism.
    pub fn icp(self) -> u32 {
        match self {
            DpuArchitecture::B512 | DpuArchitecture::B1024 => 8,
            DpuArchitecture::B800 | DpuArchitecture::B1600 => 10,
            DpuArchitecture::B1152 | DpuArchitecture::B2304 => 12,
            DpuArchitecture::B3136 => 14,
            DpuArchitecture::B4096 => 16,
        }
    }

    /// Output channel parallelism. Equal to ICP for every DPUCZDX8G size.
    pub fn ocp(self) -> u32 {
        self.icp()
    }

    /// Largest number of instances that fit on the device.
    pub fn max_instances(self) -> u32 {
        match self {
            DpuArchitecture::B512 => 8,
            DpuArchitecture::B800 => 7,
            DpuArchitecture::B1024 | DpuArchitecture::B1152 => 6,
            DpuArchitecture::B1600 | DpuArchitecture::B2304 => 4,
            DpuArchitecture::B3136 | DpuArchitecture::B4096 => 3,
        }
    }

    /// Instance counts that appear in the action space.
    pub fn selected_instances(self) -> &'static [u32] {
        match self {
            DpuArchitecture::B512 => &[1, 4, 8],
            DpuArchitecture::B800 => &[1, 4, 7],
            DpuArchitecture::B1024 | DpuArchitecture::B1152 => &[1, 3, 6],
            DpuArchitecture::B1600 | DpuArchitecture::B2304 => &[1, 2, 3, 4],
            DpuArchitecture::B3136 | DpuArchitecture::B4096 => &[1, 2, 3],
        }
    }

    /// Peak MAC operations per cycle of a single instance.
    pub fn peak_macs_per_cycle(self) -> u32 {
        self.pp() * self.icp() * self.ocp()
    }

    /// The number in the architecture's name.
    pub fn ops_per_cycle(self) -> u32 {
        match self {
            DpuArchitecture::B512 => 512,
            DpuArchitecture::B800 => 800,
            DpuArchitecture::B1024 => 1024,
            DpuArchitecture::B1152 => 1152,
            DpuArchitecture::B1600 => 1600,
            DpuArchitecture::B2304 => 2304,
            DpuArchitecture::B3136 => 3136,
            DpuArchitecture::B4096 => 4096,
        }
    }
}

impl fmt::Display for DpuArchitecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DpuArchitecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DpuArchitecture::ALL
            .iter()
            .copied()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Parse(alloc::format!("unknown DPU architecture `{s}`")))
    }
}

/// Peak MAC operations per cycle of one instance of `arch`.
pub fn peak_macs_per_cycle(arch: DpuArchitecture) -> u32 {
    arch.peak_macs_per_cycle()
}

/// An architecture plus an instance count, written `B1600_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DpuConfiguration {
    pub arch: DpuArchitecture,
    pub instances: u32,
}

impl DpuConfiguration {
    pub const fn new(arch: DpuArchitecture, instances: u32) -> Self {
        Self { arch, instances }
    }

    pub fn is_valid(&self) -> bool {
        validate_configuration(self)
    }

    /// Aggregate peak MACs per cycle over all instances.
    pub fn total_peak_macs(&self) -> u64 {
        u64::from(self.arch.peak_macs_per_cycle()) * u64::from(self.instances)
    }

    /// Position in [`action_space`], if this configuration is one of the 26 actions.
    pub fn action_index(&self) -> Option<usize> {
        action_space().iter().position(|c| c == self)
    }
}

impl fmt::Display for DpuConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.arch, self.instances)
    }
}

impl FromStr for DpuConfiguration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (arch, n) = s
            .split_once('_')
            .ok_or_else(|| Error::Parse(alloc::format!("configuration `{s}` is not ARCH_N")))?;
        let arch: DpuArchitecture = arch.parse()?;
        let instances = n
            .parse::<u32>()
            .map_err(|_| Error::Parse(alloc::format!("bad instance count in `{s}`")))?;
        Ok(Self { arch, instances })
    }
}

/// True iff `1 <= instances <= arch.max_instances()`.
pub fn validate_configuration(config: &DpuConfiguration) -> bool {
    config.instances >= 1 && config.instances <= config.arch.max_instances()
}

/// Number of actions available to the agent.
pub const ACTION_COUNT: usize = 26;

const fn build_action_space() -> [DpuConfiguration; ACTION_COUNT] {
    use DpuArchitecture::*;
    const fn c(arch: DpuArchitecture, n: u32) -> DpuConfiguration {
        DpuConfiguration::new(arch, n)
    }
    [
        c(B512, 1),
        c(B512, 4),
        c(B512, 8),
        c(B800, 1),
        c(B800, 4),
        c(B800, 7),
        c(B1024, 1),
        c(B1024, 3),
        c(B1024, 6),
        c(B1152, 1),
        c(B1152, 3),
        c(B1152, 6),
        c(B1600, 1),
        c(B1600, 2),
        c(B1600, 3),
        c(B1600, 4),
        c(B2304, 1),
        c(B2304, 2),
        c(B2304, 3),
        c(B2304, 4),
        c(B3136, 1),
        c(B3136, 2),
        c(B3136, 3),
        c(B4096, 1),
        c(B4096, 2),
        c(B4096, 3),
    ]
}

static ACTION_SPACE: [DpuConfiguration; ACTION_COUNT] = build_action_space();

/// The 26 selectable configurations, architectures smallest first and
/// instance counts ascending. Index `i` is action `i` of the policy head.
pub fn action_space() -> &'static [DpuConfiguration; ACTION_COUNT] {
    &ACTION_SPACE
}

/// Every configuration the device can hold, selected or not.
pub fn all_valid_configurations() -> Vec<DpuConfiguration> {
    DpuArchitecture::ALL
        .iter()
        .flat_map(|&a| (1..=a.max_instances()).map(move |n| DpuConfiguration::new(a, n)))
        .collect()
}
