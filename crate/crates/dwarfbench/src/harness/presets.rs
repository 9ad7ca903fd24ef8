//! Named problem-size series.
//!
//! Desk presets run on an ordinary workstation; full presets match the size
//! ranges used for large-machine studies (10 LU matrix orders from 2048 to
//! 32768, 13 Kmeans object counts from 1638400 to 9830400, 10 key counts
//! from 2M to 50M). Where only the endpoints (and, for LU, a few interior
//! orders) of a full range are externally fixed, the remaining sizes are
//! interpolated and flagged as such in the series metadata.

use crate::kernels::{KernelKind, WorkloadSpec};

#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub kernel: KernelKind,
    pub sizes: &'static [u64],
    /// Sizes not externally fixed; carried into the series metadata.
    pub interpolated: &'static [u64],
    pub description: &'static str,
}

impl Preset {
    pub fn specs(&self, seed: u64) -> Vec<WorkloadSpec> {
        self.sizes
            .iter()
            .map(|&size| match self.kernel {
                KernelKind::Lud => WorkloadSpec::lud(size, seed),
                KernelKind::Kmeans => WorkloadSpec::kmeans(size, seed),
                KernelKind::BpTree => WorkloadSpec::bptree(size, seed),
            })
            .collect()
    }
}

const LUD_DESK: &[u64] = &[64, 128, 256, 512, 768, 1024, 1536, 2048, 3072, 4096];
const KMEANS_DESK: &[u64] = &[
    10_000, 17_000, 28_000, 46_000, 77_000, 130_000, 215_000, 360_000, 600_000, 1_000_000,
];
const BPTREE_DESK: &[u64] = &[
    100_000, 170_000, 280_000, 460_000, 770_000, 1_300_000, 2_150_000, 3_600_000, 6_000_000,
    10_000_000,
];

const LUD_FULL: &[u64] = &[
    2048, 4096, 8192, 12288, 16384, 18432, 20480, 24576, 28672, 32768,
];
const LUD_FULL_INTERPOLATED: &[u64] = &[4096, 8192, 12288, 20480, 24576];

const KMEANS_FULL: &[u64] = &[
    1_638_400, 2_321_067, 3_003_733, 3_686_400, 4_369_067, 5_051_733, 5_734_400, 6_417_067,
    7_099_733, 7_782_400, 8_465_067, 9_147_733, 9_830_400,
];
const KMEANS_FULL_INTERPOLATED: &[u64] = &[
    2_321_067, 3_003_733, 3_686_400, 4_369_067, 5_051_733, 5_734_400, 6_417_067, 7_099_733,
    7_782_400, 8_465_067, 9_147_733,
];

const BPTREE_FULL: &[u64] = &[
    2_000_000, 2_860_000, 4_090_000, 5_850_000, 8_370_000, 11_960_000, 17_110_000, 24_470_000,
    34_990_000, 50_000_000,
];
const BPTREE_FULL_INTERPOLATED: &[u64] = &[
    2_860_000, 4_090_000, 5_850_000, 8_370_000, 11_960_000, 17_110_000, 24_470_000, 34_990_000,
];

const PRESETS: &[Preset] = &[
    Preset {
        name: "lud-desk",
        kernel: KernelKind::Lud,
        sizes: LUD_DESK,
        interpolated: &[],
        description: "LU decomposition, 10 matrix orders from 64 to 4096",
    },
    Preset {
        name: "kmeans-desk",
        kernel: KernelKind::Kmeans,
        sizes: KMEANS_DESK,
        interpolated: &[],
        description: "Kmeans, 10 object counts from 1e4 to 1e6",
    },
    Preset {
        name: "bptree-desk",
        kernel: KernelKind::BpTree,
        sizes: BPTREE_DESK,
        interpolated: &[],
        description: "B+Tree build+search, 10 key counts from 1e5 to 1e7",
    },
    Preset {
        name: "lud-full",
        kernel: KernelKind::Lud,
        sizes: LUD_FULL,
        interpolated: LUD_FULL_INTERPOLATED,
        description: "LU decomposition, 10 matrix orders from 2048 to 32768",
    },
    Preset {
        name: "kmeans-full",
        kernel: KernelKind::Kmeans,
        sizes: KMEANS_FULL,
        interpolated: KMEANS_FULL_INTERPOLATED,
        description: "Kmeans, 13 object counts from 1638400 to 9830400",
    },
    Preset {
        name: "bptree-full",
        kernel: KernelKind::BpTree,
        sizes: BPTREE_FULL,
        interpolated: BPTREE_FULL_INTERPOLATED,
        description: "B+Tree build+search, 10 key counts from 2M to 50M",
    },
];

pub fn all() -> &'static [Preset] {
    PRESETS
}

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
