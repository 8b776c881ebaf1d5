//! Hounsfield-unit windowing onto the 8-bit display range.

use crate::CoreError;

/// Linear HU window `[center - width/2, center + width/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowSpec {
    center_hu: f64,
    width_hu: f64,
}

impl WindowSpec {
    /// Lung window used for chest CT triage: center -500 HU, width 1300 HU.
    pub const LUNG: WindowSpec = WindowSpec {
        center_hu: -500.0,
        width_hu: 1300.0,
    };

    pub fn new(center_hu: f64, width_hu: f64) -> Result<Self, CoreError> {
        if !center_hu.is_finite() || !width_hu.is_finite() || width_hu <= 0.0 {
            return Err(CoreError::InvalidWindow {
                center: center_hu,
                width: width_hu,
            });
        }
        Ok(WindowSpec {
            center_hu,
            width_hu,
        })
    }

    pub fn center_hu(&self) -> f64 {
        self.center_hu
    }

    pub fn width_hu(&self) -> f64 {
        self.width_hu
    }

    pub fn lower(&self) -> f64 {
        self.center_hu - self.width_hu / 2.0
    }

    pub fn upper(&self) -> f64 {
        self.center_hu + self.width_hu / 2.0
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec::LUNG
    }
}

/// Maps one HU value to `[0, 255]`: clamp `(hu - lo) / width` to `[0, 1]`,
/// scale by 255 and round half away from zero.
pub fn window_hu(hu: i16, spec: &WindowSpec) -> u8 {
    let offset = f64::from(hu) - spec.lower();
    if offset <= 0.0 {
        return 0;
    }
    if offset >= spec.width_hu {
        return 255;
    }
    // Multiply before dividing: a single correctly rounded division keeps
    // exact .5 ties exact.
    let scaled = offset * 255.0 / spec.width_hu;
    libm::round(scaled) as u8
}

/// How raw voxels become display values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Windowing {
    Hu(WindowSpec),
    /// Voxels already hold display values; they are only clamped to `[0, 255]`.
    Prewindowed,
}

impl Windowing {
    pub fn apply(&self, voxel: i16) -> u8 {
        match self {
            Windowing::Hu(spec) => window_hu(voxel, spec),
            Windowing::Prewindowed => voxel.clamp(0, 255) as u8,
        }
    }
}

impl Default for Windowing {
    fn default() -> Self {
        Windowing::Hu(WindowSpec::LUNG)
    }
}

impl From<WindowSpec> for Windowing {
    fn from(spec: WindowSpec) -> Self {
        Windowing::Hu(spec)
    }
}
