use serde::{Deserialize, Serialize};

use super::HwError;

/// How many row groups of a tile are activated sequentially during one VMM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowGrouping {
    /// `ceil(min(rows, X) / row_parallelism)` sequential row groups per input bit.
    Physical,
    /// One activation of all rows; the bit-streamed latency formula without row serialization.
    Literal,
}

/// Microarchitectural parameters. Defaults describe the scaled-up RRAM
/// system: 5682 tiles of 256x256 1-bit devices, eight 4-bit ADCs per tile,
/// 9 active rows, 40 vector modules with 64 lanes each, 192 MHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HwConfig {
    pub envm: String,
    /// Crossbar rows = columns, in devices.
    pub xbar_size: u32,
    pub n_tiles_total: u64,
    /// Bits stored per device.
    pub device_bits: u32,
    pub row_parallelism: u32,
    pub row_grouping: RowGrouping,
    pub dac_bits: u32,
    /// ADCs per tile (column parallelism).
    pub n_adc_per_tile: u32,
    pub adc_bits: u32,
    pub n_vector_modules: u32,
    /// Digital SIMD lanes per vector module; one module serves one bus group.
    pub lanes_per_vm: u32,
    pub vm_sram_kib: u32,
    pub bus_in_lanes: u32,
    pub bus_in_width: u32,
    pub bus_out_lanes: u32,
    pub bus_out_width: u32,
    /// Tiles sharing one inbound/outbound bus pair and one vector module.
    pub tiles_per_bus_group: u32,
    /// Bits per value carried back from the tiles.
    pub output_bits: u32,
    pub clock_hz: f64,
    /// Cycles from presenting an input bit to one ADC conversion step.
    pub t_tile_cycles: u32,
    pub avg_tile_power_w: f64,
    /// Vector-module memory access energy. Placeholder, not a measured value.
    pub e_mem_access_j_per_bit: f64,
    /// Aggregate SRAM leakage power. Placeholder, not a measured value.
    pub p_sram_leak_w: f64,
    /// Modeling hook: unlimited bus and digital bandwidth (transfer and
    /// digital terms become zero).
    pub ideal_transport: bool,
}

impl Default for HwConfig {
    fn default() -> Self {
        Self {
            envm: "1T-1R RRAM".to_string(),
            xbar_size: 256,
            n_tiles_total: 5682,
            device_bits: 1,
            row_parallelism: 9,
            row_grouping: RowGrouping::Physical,
            dac_bits: 1,
            n_adc_per_tile: 8,
            adc_bits: 4,
            n_vector_modules: 40,
            lanes_per_vm: 64,
            vm_sram_kib: 128,
            bus_in_lanes: 8,
            bus_in_width: 8,
            bus_out_lanes: 8,
            bus_out_width: 32,
            tiles_per_bus_group: 144,
            output_bits: 32,
            clock_hz: 192e6,
            t_tile_cycles: 1,
            avg_tile_power_w: 70e-6,
            e_mem_access_j_per_bit: 0.5e-12,
            p_sram_leak_w: 5e-3,
            ideal_transport: false,
        }
    }
}

impl HwConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HwError> {
        let cfg: HwConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Same configuration with the literal (unserialized rows) VMM latency.
    pub fn literal(mut self) -> Self {
        self.row_grouping = RowGrouping::Literal;
        self
    }

    pub fn validate(&self) -> Result<(), HwError> {
        let counts: [(&'static str, u64); 17] = [
            ("xbar_size", self.xbar_size.into()),
            ("n_tiles_total", self.n_tiles_total),
            ("device_bits", self.device_bits.into()),
            ("row_parallelism", self.row_parallelism.into()),
            ("dac_bits", self.dac_bits.into()),
            ("n_adc_per_tile", self.n_adc_per_tile.into()),
            ("adc_bits", self.adc_bits.into()),
            ("n_vector_modules", self.n_vector_modules.into()),
            ("lanes_per_vm", self.lanes_per_vm.into()),
            ("vm_sram_kib", self.vm_sram_kib.into()),
            ("bus_in_lanes", self.bus_in_lanes.into()),
            ("bus_in_width", self.bus_in_width.into()),
            ("bus_out_lanes", self.bus_out_lanes.into()),
            ("bus_out_width", self.bus_out_width.into()),
            ("tiles_per_bus_group", self.tiles_per_bus_group.into()),
            ("output_bits", self.output_bits.into()),
            ("t_tile_cycles", self.t_tile_cycles.into()),
        ];
        for (field, v) in counts {
            if v == 0 {
                return Err(HwError::Invalid { field, reason: "must be at least 1".into() });
            }
        }
        if self.n_adc_per_tile > self.xbar_size {
            return Err(HwError::Invalid {
                field: "n_adc_per_tile",
                reason: format!("{} exceeds xbar_size {}", self.n_adc_per_tile, self.xbar_size),
            });
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return Err(HwError::Invalid { field: "clock_hz", reason: "must be positive".into() });
        }
        for (field, v) in [
            ("avg_tile_power_w", self.avg_tile_power_w),
            ("e_mem_access_j_per_bit", self.e_mem_access_j_per_bit),
            ("p_sram_leak_w", self.p_sram_leak_w),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(HwError::Invalid { field, reason: "must be non-negative".into() });
            }
        }
        Ok(())
    }

    pub(crate) fn bus_in_bits(&self) -> u64 {
        u64::from(self.bus_in_lanes) * u64::from(self.bus_in_width)
    }

    pub(crate) fn bus_out_bits(&self) -> u64 {
        u64::from(self.bus_out_lanes) * u64::from(self.bus_out_width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_system() {
        let c = HwConfig::default();
        assert_eq!(c.xbar_size, 256);
        assert_eq!(c.n_tiles_total, 5682);
        assert_eq!((c.device_bits, c.n_adc_per_tile, c.adc_bits, c.dac_bits), (1, 8, 4, 1));
        assert_eq!((c.row_parallelism, c.n_vector_modules), (9, 40));
        assert_eq!(c.clock_hz, 192e6);
        assert_eq!(c.avg_tile_power_w, 70e-6);
        c.validate().unwrap();
    }

    #[test]
    fn toml_defaults_and_overrides() {
        let c = HwConfig::from_toml_str("xbar_size = 128\nrow_grouping = \"literal\"\n").unwrap();
        assert_eq!(c.xbar_size, 128);
        assert_eq!(c.row_grouping, RowGrouping::Literal);
        assert_eq!(c.n_tiles_total, 5682);
        let back = HwConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(matches!(HwConfig::from_toml_str("tile_size = 256"), Err(HwError::Syntax(_))));
        assert!(matches!(
            HwConfig::from_toml_str("n_adc_per_tile = 512"),
            Err(HwError::Invalid { field: "n_adc_per_tile", .. })
        ));
        assert!(matches!(HwConfig::from_toml_str("xbar_size = 0"), Err(HwError::Invalid { field: "xbar_size", .. })));
    }
}
