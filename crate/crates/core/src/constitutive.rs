//! Brooks–Corey retention with power-law relative permeability, the Kirchhoff
//! transform in closed form, and the coefficients of the transformed equation.
//!
//! Heads are suction heads (positive when unsaturated) in cm, with the depth
//! coordinate pointing down. Time is in minutes.

use crate::error::{Error, Result};

/// Hydraulic parameters of one homogeneous soil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoilParams {
    theta_r: f64,
    theta_s: f64,
    theta_0: f64,
    k_s: f64,
    h_cap: f64,
    lambda: f64,
    m: f64,
}

/// Coefficients of `A ∂u/∂t − ∇²u − B ∂u/∂z = 0` at one head value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KirchhoffCoefficients {
    /// Time coefficient [min/cm²].
    pub a: f64,
    /// Gravity coefficient [1/cm].
    pub b: f64,
}

impl SoilParams {
    /// Validates and builds a parameter set.
    ///
    /// `m` is the product λβ. It must exceed 1, otherwise the Kirchhoff
    /// integral from the dry limit diverges.
    pub fn new(theta_r: f64, theta_s: f64, theta_0: f64, k_s: f64, h_cap: f64, lambda: f64, m: f64) -> Result<Self> {
        let all = [theta_r, theta_s, theta_0, k_s, h_cap, lambda, m];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("soil", "parameters must be finite"));
        }
        if !(0.0 <= theta_r && theta_r < theta_0 && theta_0 <= theta_s && theta_s < 1.0) {
            return Err(Error::config(
                "soil.theta",
                format!("need 0 <= theta_r < theta_0 <= theta_s < 1, got {theta_r}, {theta_0}, {theta_s}"),
            ));
        }
        if k_s <= 0.0 {
            return Err(Error::config("soil.k_s", "must be positive"));
        }
        if h_cap <= 0.0 {
            return Err(Error::config("soil.h_cap", "must be positive"));
        }
        if lambda <= 0.0 {
            return Err(Error::config("soil.lambda", "must be positive"));
        }
        if m <= 1.0 {
            return Err(Error::config(
                "soil.m",
                format!("lambda*beta = {m} <= 1 makes the Kirchhoff integral divergent"),
            ));
        }
        Ok(SoilParams {
            theta_r,
            theta_s,
            theta_0,
            k_s,
            h_cap,
            lambda,
            m,
        })
    }

    /// Sandy clay, lengths in cm and time in minutes.
    pub fn sandy_clay() -> Self {
        SoilParams::new(0.109, 0.321, 0.121, 0.002, 29.15, 0.168, 2.504).expect("valid preset")
    }

    /// Loam, lengths in cm and time in minutes.
    pub fn loam() -> Self {
        SoilParams::new(0.027, 0.463, 0.040, 0.022, 11.15, 0.220, 2.660).expect("valid preset")
    }

    /// Looks up a preset by name (`sandy_clay`, `loam`; case and separators ignored).
    pub fn by_name(name: &str) -> Option<Self> {
        let key: String = name
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "sandyclay" => Some(Self::sandy_clay()),
            "loam" => Some(Self::loam()),
            _ => None,
        }
    }

    /// Copy with a different initial moisture content.
    pub fn with_initial_moisture(self, theta_0: f64) -> Result<Self> {
        SoilParams::new(
            self.theta_r,
            self.theta_s,
            theta_0,
            self.k_s,
            self.h_cap,
            self.lambda,
            self.m,
        )
    }

    pub fn theta_r(&self) -> f64 {
        self.theta_r
    }
    pub fn theta_s(&self) -> f64 {
        self.theta_s
    }
    pub fn theta_0(&self) -> f64 {
        self.theta_0
    }
    pub fn k_s(&self) -> f64 {
        self.k_s
    }
    pub fn h_cap(&self) -> f64 {
        self.h_cap
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    /// The product λβ.
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn beta(&self) -> f64 {
        self.m / self.lambda
    }

    /// θ_s − θ_r.
    pub fn drainable_porosity(&self) -> f64 {
        self.theta_s - self.theta_r
    }

    /// Effective saturation of the initial moisture content.
    pub fn initial_saturation(&self) -> f64 {
        (self.theta_0 - self.theta_r) / self.drainable_porosity()
    }

    /// Kirchhoff value at the air-entry head, `−h_cap/(m−1)`. Separates the
    /// saturated branch (below) from the unsaturated one (above).
    pub fn kirchhoff_at_air_entry(&self) -> f64 {
        -self.h_cap / (self.m - 1.0)
    }

    /// Effective saturation for a suction head. Saturated at and below `h_cap`.
    pub fn saturation_from_suction(&self, h: f64) -> f64 {
        if h <= self.h_cap {
            1.0
        } else {
            (h / self.h_cap).powf(-self.lambda)
        }
    }

    /// Inverse retention curve `h = h_cap·S^(−1/λ)`.
    pub fn suction_from_saturation(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::Domain(format!("saturation {s} outside (0, 1]")));
        }
        Ok(self.h_cap * (-s.ln() / self.lambda).exp())
    }

    /// `k_r = (h/h_cap)^(−λβ)` above the air-entry head, 1 otherwise.
    pub fn relative_permeability(&self, h: f64) -> f64 {
        if h <= self.h_cap {
            1.0
        } else {
            (h / self.h_cap).powf(-self.m)
        }
    }

    /// Unsaturated hydraulic conductivity `K_s·k_r` [cm/min].
    pub fn conductivity(&self, h: f64) -> f64 {
        self.k_s * self.relative_permeability(h)
    }

    /// `dθ/dh` (non-positive for suction heads); zero on the saturated branch.
    pub fn moisture_capacity(&self, h: f64) -> f64 {
        if h <= self.h_cap {
            0.0
        } else {
            -self.drainable_porosity() * self.lambda / h * (h / self.h_cap).powf(-self.lambda)
        }
    }

    /// Kirchhoff variable `u(h) = ∫_{+∞}^{h} k_r(s) ds` (always negative).
    pub fn kirchhoff(&self, h: f64) -> f64 {
        let u_cap = self.kirchhoff_at_air_entry();
        if h >= self.h_cap {
            u_cap * (h / self.h_cap).powf(1.0 - self.m)
        } else {
            (h - self.h_cap) + u_cap
        }
    }

    /// Suction head for a Kirchhoff value `u < 0`.
    ///
    /// The unsaturated branch is evaluated through logarithms: the dry initial
    /// states sit within ~1e-10 cm of the `u → 0⁻` singularity.
    pub fn kirchhoff_inverse(&self, u: f64) -> Result<f64> {
        if !(u < 0.0) {
            return Err(Error::Domain(format!("Kirchhoff value {u} must be negative")));
        }
        let u_cap = self.kirchhoff_at_air_entry();
        if u >= u_cap {
            let ratio_ln = (u / u_cap).ln();
            Ok(self.h_cap * (-ratio_ln / (self.m - 1.0)).exp())
        } else {
            Ok(u - u_cap + self.h_cap)
        }
    }

    /// Coefficients of the transformed equation:
    /// `A = −(Δθ/K_s)·k_r⁻¹·∂S/∂h` and `B = k_r⁻¹·∂k_r/∂h`.
    ///
    /// Both vanish on the saturated branch, which includes `h = h_cap`.
    pub fn coefficients(&self, h: f64) -> KirchhoffCoefficients {
        if h <= self.h_cap {
            return KirchhoffCoefficients { a: 0.0, b: 0.0 };
        }
        let scale = self.drainable_porosity() * self.lambda / (self.k_s * self.h_cap);
        KirchhoffCoefficients {
            a: scale * (h / self.h_cap).powf(self.m - self.lambda - 1.0),
            b: -self.m / h,
        }
    }

    /// Moisture content `θ_r + S·(θ_s − θ_r)`. Saturations within 1e-9 of
    /// `[0, 1]` are clamped.
    pub fn moisture_content(&self, s: f64) -> Result<f64> {
        const SLACK: f64 = 1e-9;
        if !(-SLACK..=1.0 + SLACK).contains(&s) {
            return Err(Error::Domain(format!("saturation {s} outside [0, 1]")));
        }
        Ok(self.theta_r + s.clamp(0.0, 1.0) * self.drainable_porosity())
    }

    /// Moisture content for a suction head.
    pub fn moisture_from_suction(&self, h: f64) -> f64 {
        self.theta_r + self.saturation_from_suction(h) * self.drainable_porosity()
    }
}
