use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture hyperparameters. The defaults give about 1.32 M trainable
/// parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub input_channels: usize,
    pub stem_channels: usize,
    /// Output channels of each strided encoder stage.
    pub channel_schedule: Vec<usize>,
    /// Residual blocks applied at the bottleneck.
    pub num_residual_blocks: usize,
    pub spp_kernels: Vec<usize>,
    pub upsample_factor_per_stage: usize,
    pub head_channels: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            input_channels: 4,
            stem_channels: 32,
            channel_schedule: vec![32, 64, 128],
            num_residual_blocks: 3,
            spp_kernels: vec![5, 9, 13],
            upsample_factor_per_stage: 2,
            head_channels: 16,
        }
    }
}

impl NetworkConfig {
    pub fn with_input_channels(mut self, c: usize) -> Self {
        self.input_channels = c;
        self
    }

    /// Input height and width must be multiples of this.
    pub fn downsample_factor(&self) -> usize {
        self.upsample_factor_per_stage.pow(self.channel_schedule.len() as u32)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !matches!(self.input_channels, 1 | 3 | 4) {
            return bad(format!("input_channels must be 1, 3 or 4, got {}", self.input_channels));
        }
        if self.channel_schedule.is_empty() {
            return bad("channel_schedule needs at least one stage".into());
        }
        let r = self.upsample_factor_per_stage;
        if r < 2 {
            return bad(format!("upsample_factor_per_stage must be at least 2, got {r}"));
        }
        let r2 = r * r;
        for &c in self.channel_schedule.iter().chain([&self.stem_channels]) {
            if c == 0 || c % r2 != 0 {
                return bad(format!("channel width {c} is not divisible by {r2} as pixel shuffle x{r} requires"));
            }
        }
        if self.head_channels == 0 {
            return bad("head_channels must be positive".into());
        }
        if let Some(k) = self.spp_kernels.iter().find(|&&k| k % 2 == 0) {
            return bad(format!("spp kernel {k} must be odd"));
        }
        Ok(())
    }

    /// Every layer width multiplied by `k` (input channels unchanged).
    pub fn widened(&self, k: usize) -> Self {
        Self {
            stem_channels: self.stem_channels * k,
            channel_schedule: self.channel_schedule.iter().map(|c| c * k).collect(),
            head_channels: self.head_channels * k,
            ..self.clone()
        }
    }
}
