//! Physical parameters, the constants derived from them, and regime classification.
//!
//! Units are whatever the caller uses; only positivity constraints are enforced.

use crate::{Error, Result};

/// Sign of the squared mass entering the gauge-variant equation.
///
/// `Real` selects the symmetry-breaking setting, where `Q = 2(mc/ħ)² − (nH/2c)²`.
/// `Imaginary` and `Zero` select the blow-up setting, where `Q = (m∗c/ħ)² − (nH/2c)²`
/// with `(m∗)² = −m²` or `0` respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MassKind {
    Real,
    Imaginary,
    Zero,
}

impl MassKind {
    /// The factor applied to `m²` to obtain `(m∗)²`.
    pub fn sign(self) -> f64 {
        match self {
            MassKind::Real => 1.0,
            MassKind::Imaginary => -1.0,
            MassKind::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Spatial dimension.
    pub n: usize,
    /// Speed of light.
    pub c: f64,
    pub hbar: f64,
    /// Hubble constant; negative values describe a contracting background.
    pub hubble: f64,
    pub mass: f64,
    pub mass_kind: MassKind,
    pub lambda: f64,
    /// Power of the gauge-variant nonlinearity.
    pub p: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            n: 1,
            c: 1.0,
            hbar: 1.0,
            hubble: 0.0,
            mass: 1.0,
            mass_kind: MassKind::Real,
            lambda: 1.0,
            p: 3.0,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("dimension n must be at least 1".into()));
        }
        let finite = [self.c, self.hbar, self.hubble, self.mass, self.lambda, self.p];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        if self.c <= 0.0 {
            return Err(Error::InvalidParameter(format!("c must be positive, got {}", self.c)));
        }
        if self.hbar <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "hbar must be positive, got {}",
                self.hbar
            )));
        }
        if self.p <= 1.0 {
            return Err(Error::InvalidParameter(format!("p must exceed 1, got {}", self.p)));
        }
        Ok(())
    }

    /// `(mc/ħ)²`.
    pub fn mass_term(&self) -> f64 {
        let k = self.mass * self.c / self.hbar;
        k * k
    }

    /// `(nH/2c)²`.
    pub fn hubble_term(&self) -> f64 {
        let k = self.n as f64 * self.hubble / (2.0 * self.c);
        k * k
    }

    /// `2√2|m|c²/(nħ)`, the edge of both existence windows.
    pub fn hubble_threshold(&self) -> f64 {
        2.0 * std::f64::consts::SQRT_2 * self.mass.abs() * self.c * self.c
            / (self.n as f64 * self.hbar)
    }

    /// `λ·r₀ = √λ|m|c/ħ`, finite for every `λ ≥ 0`.
    pub fn lambda_r0(&self) -> f64 {
        if self.lambda <= 0.0 {
            0.0
        } else {
            self.lambda.sqrt() * self.mass.abs() * self.c / self.hbar
        }
    }
}

/// Constants the dynamics is parameterised by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    r0: Option<f64>,
    /// Effective mass-squared coefficient of the linear part.
    pub q: f64,
    big_m: Option<f64>,
}

impl DerivedConstants {
    /// Vacuum radius `r₀ = |m|c/(√λ ħ)`; only defined for `λ > 0`.
    pub fn r0(&self) -> Result<f64> {
        self.r0
            .ok_or_else(|| Error::InvalidParameter("r0 requires lambda > 0".into()))
    }

    pub fn r0_opt(&self) -> Option<f64> {
        self.r0
    }

    /// Growth rate `M = √(−Q)`; only defined for `Q ≤ 0`.
    pub fn big_m(&self) -> Result<f64> {
        self.big_m.ok_or_else(|| {
            Error::InvalidParameter(format!("M = sqrt(-Q) requires Q <= 0, got Q = {}", self.q))
        })
    }
}

pub fn derive_constants(params: &PhysicalParams) -> Result<DerivedConstants> {
    params.validate()?;
    let r0 = (params.lambda > 0.0)
        .then(|| params.mass.abs() * params.c / (params.lambda.sqrt() * params.hbar));
    let q = match params.mass_kind {
        MassKind::Real => 2.0 * params.mass_term() - params.hubble_term(),
        kind => kind.sign() * params.mass_term() - params.hubble_term(),
    };
    let big_m = (q <= 0.0).then(|| (-q).sqrt());
    Ok(DerivedConstants { r0, q, big_m })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(x: f64) -> Self {
        if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

/// Which energy structure applies: non-negative or negative Hubble constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HubbleRegime {
    Nonnegative,
    Negative,
}

impl HubbleRegime {
    pub fn of(hubble: f64) -> Self {
        if hubble < 0.0 {
            HubbleRegime::Negative
        } else {
            HubbleRegime::Nonnegative
        }
    }

    pub fn check(self, hubble: f64) -> Result<()> {
        if Self::of(hubble) == self {
            Ok(())
        } else {
            Err(Error::RegimeMismatch(format!("{self:?} requested but H = {hubble}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeReport {
    pub hubble_sign: Sign,
    /// `0 ≤ H < 2√2|m|c²/(nħ)`.
    pub expanding_window: bool,
    /// `−2√2|m|c²/(nħ) < H < 0`.
    pub contracting_window: bool,
    pub mass_kind: MassKind,
    pub q_sign: Sign,
}

/// Classifies which existence window the parameters fall in. The window edges are excluded.
pub fn validate_regime(params: &PhysicalParams) -> RegimeReport {
    let h = params.hubble;
    let edge = params.hubble_threshold();
    let mass_kind = if params.mass == 0.0 {
        MassKind::Zero
    } else {
        params.mass_kind
    };
    let q = match params.mass_kind {
        MassKind::Real => 2.0 * params.mass_term() - params.hubble_term(),
        kind => kind.sign() * params.mass_term() - params.hubble_term(),
    };
    RegimeReport {
        hubble_sign: Sign::of(h),
        expanding_window: h >= 0.0 && h < edge,
        contracting_window: h < 0.0 && h > -edge,
        mass_kind,
        q_sign: Sign::of(q),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(n: usize, hubble: f64) -> PhysicalParams {
        PhysicalParams {
            n,
            hubble,
            ..PhysicalParams::default()
        }
    }

    #[test]
    fn minkowski_unit_constants() {
        let d = derive_constants(&unit(3, 0.0)).unwrap();
        assert_eq!(d.r0().unwrap(), 1.0);
        assert_eq!(d.q, 2.0);
        assert!(d.big_m().is_err());
    }

    #[test]
    fn window_edge_cancels_q() {
        let p = unit(2, std::f64::consts::SQRT_2);
        let d = derive_constants(&p).unwrap();
        assert!(d.q.abs() < 1e-15);
        assert!(!validate_regime(&p).expanding_window);
    }

    #[test]
    fn mixed_units_arithmetic() {
        let p = PhysicalParams {
            n: 3,
            c: 2.0,
            hbar: 1.0,
            mass: 0.5,
            lambda: 4.0,
            hubble: 0.4,
            ..PhysicalParams::default()
        };
        let d = derive_constants(&p).unwrap();
        assert!((d.r0().unwrap() - 0.5).abs() < 1e-15);
        assert!((d.q - 1.91).abs() < 1e-14);
    }

    #[test]
    fn r0_requires_positive_coupling() {
        let p = PhysicalParams {
            lambda: 0.0,
            ..PhysicalParams::default()
        };
        assert!(derive_constants(&p).unwrap().r0().is_err());
    }

    #[test]
    fn imaginary_mass_gives_growth_rate() {
        let p = PhysicalParams {
            mass_kind: MassKind::Imaginary,
            hubble: 0.5,
            ..PhysicalParams::default()
        };
        let d = derive_constants(&p).unwrap();
        assert!((d.q + 1.0625).abs() < 1e-15);
        assert!((d.big_m().unwrap() - 1.0625f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_params() {
        for p in [
            PhysicalParams { c: 0.0, ..Default::default() },
            PhysicalParams { hbar: -1.0, ..Default::default() },
            PhysicalParams { p: 1.0, ..Default::default() },
            PhysicalParams { n: 0, ..Default::default() },
        ] {
            assert!(derive_constants(&p).is_err());
        }
    }

    #[test]
    fn regime_examples() {
        assert!(validate_regime(&unit(3, 0.1)).expanding_window);
        let r = validate_regime(&unit(3, -0.1));
        assert!(r.contracting_window && !r.expanding_window);
        let r = validate_regime(&unit(3, 1.0));
        assert!(!r.expanding_window && !r.contracting_window);
        assert_eq!(validate_regime(&PhysicalParams { mass: 0.0, ..unit(1, 0.0) }).mass_kind, MassKind::Zero);
    }

    #[test]
    fn derivation_is_deterministic() {
        let p = unit(2, 0.3);
        let a = derive_constants(&p).unwrap();
        let b = derive_constants(&p).unwrap();
        assert_eq!(a.q.to_bits(), b.q.to_bits());
        assert_eq!(a.r0().unwrap().to_bits(), b.r0().unwrap().to_bits());
    }

    proptest! {
        #[test]
        fn expanding_window_implies_positive_q(
            n in 1usize..4,
            c in 0.1f64..5.0,
            hbar in 0.1f64..5.0,
            mass in prop_oneof![-5.0f64..-0.01, 0.01f64..5.0],
            frac in 0.0f64..0.999,
        ) {
            let mut p = PhysicalParams { n, c, hbar, mass, ..Default::default() };
            p.hubble = frac * p.hubble_threshold();
            let r = validate_regime(&p);
            prop_assert!(r.expanding_window);
            prop_assert!(!r.contracting_window);
            prop_assert!(derive_constants(&p).unwrap().q > 0.0);
        }

        #[test]
        fn vacuum_radius_identity(
            c in 0.1f64..5.0,
            hbar in 0.1f64..5.0,
            mass in -5.0f64..5.0,
            lambda in 0.01f64..10.0,
        ) {
            let p = PhysicalParams { c, hbar, mass, lambda, ..Default::default() };
            let r0 = derive_constants(&p).unwrap().r0().unwrap();
            let lhs = lambda * r0 * r0;
            let rhs = p.mass_term();
            prop_assert!((lhs - rhs).abs() <= 1e-14 * rhs.max(f64::MIN_POSITIVE));
        }
    }
}
