use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet;

/// A positive weight function with exact derivatives.
pub trait WeightFn: Send + Sync + fmt::Debug {
    fn value(&self, x: f64) -> f64;

    /// Taylor jet `[w(x), w'(x), w''(x)/2, ...]` of length `order + 1`.
    fn jet(&self, x: f64, order: usize) -> Result<Vec<f64>>;

    fn label(&self) -> String;
}

pub type Weight = Arc<dyn WeightFn>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl WeightFn for Constant {
    fn value(&self, _x: f64) -> f64 {
        self.0
    }
    fn jet(&self, _x: f64, order: usize) -> Result<Vec<f64>> {
        Ok(jet::constant(self.0, order))
    }
    fn label(&self) -> String {
        format!("{}", self.0)
    }
}

/// `scale * exp(rate * x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential {
    pub scale: f64,
    pub rate: f64,
}

impl WeightFn for Exponential {
    fn value(&self, x: f64) -> f64 {
        self.scale * (self.rate * x).exp()
    }
    fn jet(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(order + 1);
        let mut c = self.value(x);
        for m in 0..=order {
            if m > 0 {
                c *= self.rate / m as f64;
            }
            out.push(c);
        }
        Ok(out)
    }
    fn label(&self) -> String {
        format!("{}*exp({}x)", self.scale, self.rate)
    }
}

/// Polynomial in monomial form, `coeffs[m]` multiplying `x^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl WeightFn for Polynomial {
    fn value(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
    fn jet(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        // Repeated synthetic division by (y - x): the m-th remainder is coefficient m.
        let mut work = self.coeffs.clone();
        let mut out = vec![0.0; order + 1];
        for slot in out.iter_mut() {
            if work.is_empty() {
                break;
            }
            let mut quot = vec![0.0; work.len() - 1];
            let mut acc = 0.0;
            for i in (0..work.len()).rev() {
                acc = acc * x + work[i];
                if i > 0 {
                    quot[i - 1] = acc;
                }
            }
            *slot = acc;
            work = quot;
        }
        Ok(out)
    }
    fn label(&self) -> String {
        format!("poly{:?}", self.coeffs)
    }
}

type DerivFn = dyn Fn(f64, usize) -> f64 + Send + Sync;

/// A user-supplied weight: `derivative(x, m)` returns `D^m w(x)` for `m <= max_order`.
#[derive(Clone)]
pub struct Custom {
    pub name: String,
    pub max_order: usize,
    pub derivative: Arc<DerivFn>,
}

impl fmt::Debug for Custom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Custom")
            .field("name", &self.name)
            .field("max_order", &self.max_order)
            .finish()
    }
}

impl WeightFn for Custom {
    fn value(&self, x: f64) -> f64 {
        (self.derivative)(x, 0)
    }
    fn jet(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        if order > self.max_order {
            return Err(Error::InsufficientSmoothness {
                what: format!("weight {}", self.name),
                requested: order,
                available: self.max_order,
            });
        }
        let d: Vec<f64> = (0..=order).map(|m| (self.derivative)(x, m)).collect();
        Ok(jet::from_derivatives(&d))
    }
    fn label(&self) -> String {
        self.name.clone()
    }
}

/// `w(center - x)`.
#[derive(Debug, Clone)]
pub struct Reflected {
    pub inner: Weight,
    pub center: f64,
}

impl WeightFn for Reflected {
    fn value(&self, x: f64) -> f64 {
        self.inner.value(self.center - x)
    }
    fn jet(&self, x: f64, order: usize) -> Result<Vec<f64>> {
        Ok(jet::reflect(&self.inner.jet(self.center - x, order)?))
    }
    fn label(&self) -> String {
        format!("reflect({})", self.inner.label())
    }
}

/// Which family a weight system was built from.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Constant,
    Exponential(Vec<f64>),
    PolynomialPerturbation(Vec<f64>),
    Custom,
    Derived(String),
}

impl Preset {
    pub fn tag(&self) -> String {
        match self {
            Preset::Constant => "constant".into(),
            Preset::Exponential(_) => "exponential".into(),
            Preset::PolynomialPerturbation(_) => "polynomial".into(),
            Preset::Custom => "custom".into(),
            Preset::Derived(s) => s.clone(),
        }
    }
}

/// Default rates of the exponential preset, truncated to the order.
pub const DEFAULT_RATES: [f64; 8] = [0.8, -0.6, 1.2, -1.0, 0.5, -0.4, 0.7, -0.9];
/// Default amplitudes of the polynomial-perturbation preset.
pub const DEFAULT_AMPLITUDES: [f64; 8] = [0.5, 1.0, 0.3, 0.8, 0.6, 0.4, 0.9, 0.2];

const POSITIVITY_SAMPLES: usize = 257;

/// The vector `w = (w_1, ..., w_k)` of positive weights on `[a, b]`.
#[derive(Debug, Clone)]
pub struct WeightSystem {
    a: f64,
    b: f64,
    weights: Vec<Weight>,
    preset: Preset,
}

/// Sampled constants that the implied bounds depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightBounds {
    pub min_weight: f64,
    pub max_derivative: f64,
}

impl WeightSystem {
    /// Validates positivity on a sample grid and that `w_i` has `k - i + 1` derivatives.
    pub fn new(a: f64, b: f64, weights: Vec<Weight>, preset: Preset) -> Result<Self> {
        let ws = Self::unchecked(a, b, weights, preset)?;
        let k = ws.order();
        let mid = 0.5 * (a + b);
        for (i, w) in ws.weights.iter().enumerate() {
            w.jet(mid, k - i)?;
        }
        Ok(ws)
    }

    /// Positivity-checked system without the per-index smoothness requirement.
    pub(crate) fn unchecked(a: f64, b: f64, weights: Vec<Weight>, preset: Preset) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        if weights.is_empty() {
            return Err(Error::Config("weight system needs at least one weight".into()));
        }
        for (i, w) in weights.iter().enumerate() {
            for s in 0..POSITIVITY_SAMPLES {
                let x = a + (b - a) * s as f64 / (POSITIVITY_SAMPLES - 1) as f64;
                let v = w.value(x);
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::NonPositiveWeight {
                        index: i + 1,
                        x,
                        value: v,
                    });
                }
            }
        }
        Ok(Self {
            a,
            b,
            weights,
            preset,
        })
    }

    pub fn constant(k: usize, a: f64, b: f64) -> Result<Self> {
        let w: Vec<Weight> = (0..k).map(|_| Arc::new(Constant(1.0)) as Weight).collect();
        Self::new(a, b, w, Preset::Constant)
    }

    /// `w_i(x) = exp(rates[i] * x)`.
    pub fn exponential(rates: &[f64], a: f64, b: f64) -> Result<Self> {
        let w: Vec<Weight> = rates
            .iter()
            .map(|&rate| Arc::new(Exponential { scale: 1.0, rate }) as Weight)
            .collect();
        Self::new(a, b, w, Preset::Exponential(rates.to_vec()))
    }

    /// `w_i(x) = 1 + amplitudes[i] * s^2` with `s = (x - a)/(b - a)`.
    pub fn polynomial_perturbation(amplitudes: &[f64], a: f64, b: f64) -> Result<Self> {
        let l2 = (b - a) * (b - a);
        let w: Vec<Weight> = amplitudes
            .iter()
            .map(|&c| {
                let coeffs = vec![1.0 + c * a * a / l2, -2.0 * c * a / l2, c / l2];
                Arc::new(Polynomial { coeffs }) as Weight
            })
            .collect();
        Self::new(a, b, w, Preset::PolynomialPerturbation(amplitudes.to_vec()))
    }

    pub fn custom(a: f64, b: f64, weights: Vec<Custom>) -> Result<Self> {
        let w = weights.into_iter().map(|c| Arc::new(c) as Weight).collect();
        Self::new(a, b, w, Preset::Custom)
    }

    /// Preset by name with the default parameters.
    pub fn preset(name: &str, k: usize, a: f64, b: f64) -> Result<Self> {
        if k == 0 || k > DEFAULT_RATES.len() {
            return Err(Error::Config(format!("order {k} outside 1..=8")));
        }
        match name {
            "constant" => Self::constant(k, a, b),
            "exponential" => Self::exponential(&DEFAULT_RATES[..k], a, b),
            "polynomial" | "polynomial-perturbation" => {
                Self::polynomial_perturbation(&DEFAULT_AMPLITUDES[..k], a, b)
            }
            other => Err(Error::Config(format!("unknown weight preset '{other}'"))),
        }
    }

    pub fn order(&self) -> usize {
        self.weights.len()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &Weight {
        &self.weights[i]
    }

    pub fn preset_kind(&self) -> &Preset {
        &self.preset
    }

    pub fn tag(&self) -> String {
        self.preset.tag()
    }

    pub fn is_constant_one(&self) -> bool {
        self.preset == Preset::Constant
    }

    /// Weights `(1, w_k, ..., w_1)` generating the dual canonical system.
    pub fn dual_weights(&self) -> WeightSystem {
        let mut w: Vec<Weight> = vec![Arc::new(Constant(1.0))];
        w.extend(self.weights.iter().rev().cloned());
        Self {
            a: self.a,
            b: self.b,
            weights: w,
            preset: Preset::Derived(format!("dual-{}", self.tag())),
        }
    }

    /// The last `len` weights.
    pub fn tail(&self, len: usize) -> WeightSystem {
        Self {
            a: self.a,
            b: self.b,
            weights: self.weights[self.order() - len..].to_vec(),
            preset: Preset::Derived(format!("tail{len}-{}", self.tag())),
        }
    }

    /// Weights `x ↦ w_i(a + b - x)`.
    pub fn reflected(&self) -> WeightSystem {
        let center = self.a + self.b;
        let weights = self
            .weights
            .iter()
            .map(|w| {
                Arc::new(Reflected {
                    inner: w.clone(),
                    center,
                }) as Weight
            })
            .collect();
        Self {
            a: self.a,
            b: self.b,
            weights,
            preset: match &self.preset {
                Preset::Constant => Preset::Constant,
                p => Preset::Derived(format!("reflected-{}", p.tag())),
            },
        }
    }

    /// `min w_i` and `max |D^j w_i|` for `0 <= j <= k - i + 1`, sampled on a grid.
    pub fn bounds(&self) -> Result<WeightBounds> {
        let k = self.order();
        let mut min_weight = f64::INFINITY;
        let mut max_derivative: f64 = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            for s in 0..POSITIVITY_SAMPLES {
                let x = self.a + (self.b - self.a) * s as f64 / (POSITIVITY_SAMPLES - 1) as f64;
                let d = jet::to_derivatives(&w.jet(x, k - i)?);
                min_weight = min_weight.min(d[0]);
                for v in d {
                    max_derivative = max_derivative.max(v.abs());
                }
            }
        }
        Ok(WeightBounds {
            min_weight,
            max_derivative,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_jet_matches_derivatives() {
        let p = Polynomial {
            coeffs: vec![1.0, -2.0, 3.0, 0.5],
        };
        let x = 0.7;
        let d = jet::to_derivatives(&p.jet(x, 4).unwrap());
        let want = [
            1.0 - 2.0 * x + 3.0 * x * x + 0.5 * x * x * x,
            -2.0 + 6.0 * x + 1.5 * x * x,
            6.0 + 3.0 * x,
            3.0,
            0.0,
        ];
        for (g, w) in d.iter().zip(want) {
            assert!((g - w).abs() < 1e-13, "{g} vs {w}");
        }
    }

    #[test]
    fn rejects_nonpositive_weight_with_location() {
        let w: Vec<Weight> = vec![Arc::new(Polynomial {
            coeffs: vec![-0.5, 1.0],
        })];
        match WeightSystem::new(0.0, 1.0, w, Preset::Custom) {
            Err(Error::NonPositiveWeight { index, x, .. }) => {
                assert_eq!(index, 1);
                assert!(x <= 0.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn custom_weight_smoothness_is_enforced() {
        let w = Custom {
            name: "c".into(),
            max_order: 1,
            derivative: Arc::new(|_, m| if m == 0 { 1.0 } else { 0.0 }),
        };
        // k = 2 needs w_1 in C^2.
        let err = WeightSystem::custom(0.0, 1.0, vec![w.clone(), w]).unwrap_err();
        assert!(matches!(err, Error::InsufficientSmoothness { .. }));
    }

    #[test]
    fn reflected_weight_jet() {
        let e: Weight = Arc::new(Exponential {
            scale: 1.0,
            rate: 2.0,
        });
        let r = Reflected {
            inner: e,
            center: 1.0,
        };
        let d = jet::to_derivatives(&r.jet(0.25, 2).unwrap());
        let v = (2.0f64 * 0.75).exp();
        assert!((d[0] - v).abs() < 1e-14);
        assert!((d[1] + 2.0 * v).abs() < 1e-13);
        assert!((d[2] - 4.0 * v).abs() < 1e-12);
    }
}
