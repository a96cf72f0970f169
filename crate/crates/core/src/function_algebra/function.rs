use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibered_space::{ensure_same, FiberedMap, FiniteSpace, WeightedMeasure};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A complex function sampled on every point of a finite space.
///
/// Values are finite and vanish at the space's infinity point.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    space: Arc<FiniteSpace>,
    values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(space: Arc<FiniteSpace>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Config(format!(
                "{} values for {} points",
                values.len(),
                space.len()
            )));
        }
        if let Some(i) = values
            .iter()
            .position(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Argument(format!(
                "non-finite value at `{}`",
                space.id(i)
            )));
        }
        if let Some(inf) = space.infinity() {
            if values[inf] != ZERO {
                return Err(Error::Argument(format!(
                    "function does not vanish at infinity point `{}`",
                    space.id(inf)
                )));
            }
        }
        Ok(Self { space, values })
    }

    pub fn real(space: Arc<FiniteSpace>, values: &[f64]) -> Result<Self> {
        Self::new(
            space,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn zero(space: Arc<FiniteSpace>) -> Self {
        let n = space.len();
        Self {
            space,
            values: vec![ZERO; n],
        }
    }

    /// Constant `c` on finite points; zero at infinity.
    pub fn constant(space: Arc<FiniteSpace>, c: Complex64) -> Self {
        let values = (0..space.len())
            .map(|i| if space.is_infinity(i) { ZERO } else { c })
            .collect();
        Self { space, values }
    }

    /// Indicator of a set of finite points.
    pub fn indicator(space: Arc<FiniteSpace>, points: &[usize]) -> Result<Self> {
        let mut values = vec![ZERO; space.len()];
        for &i in points {
            if i >= space.len() {
                return Err(Error::Argument(format!("point index {i} out of range")));
            }
            values[i] = Complex64::new(1.0, 0.0);
        }
        Self::new(space, values)
    }

    /// Builds a function from raw values, zeroing the infinity entry.
    pub(crate) fn from_raw(space: Arc<FiniteSpace>, mut values: Vec<Complex64>) -> Self {
        if let Some(inf) = space.infinity() {
            values[inf] = ZERO;
        }
        Self { space, values }
    }

    pub(crate) fn from_real_raw(space: Arc<FiniteSpace>, values: &[f64]) -> Self {
        Self::from_raw(
            space,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> Complex64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn imag_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.im).collect()
    }

    fn zip_with(
        &self,
        other: &Self,
        what: &str,
        op: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        ensure_same(&self.space, &other.space, what)?;
        Ok(Self {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sum of functions on different spaces", |a, b| a + b)
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.zip_with(
            other,
            "difference of functions on different spaces",
            |a, b| a - b,
        )
    }

    pub fn times(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "product of functions on different spaces", |a, b| {
            a * b
        })
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            space: self.space.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            space: self.space.clone(),
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Pointwise modulus.
    pub fn abs(&self) -> Self {
        Self {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .map(|v| Complex64::new(v.norm(), 0.0))
                .collect(),
        }
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn to_document(&self, space_ref: &str) -> FunctionDocument {
        FunctionDocument {
            space: Some(space_ref.to_string()),
            values: (0..self.len())
                .map(|i| {
                    (
                        self.space.id(i).to_string(),
                        ValueDoc::Complex([self.values[i].re, self.values[i].im]),
                    )
                })
                .collect(),
        }
    }

    /// Reads a function document on `space`; points absent from the
    /// document take the value zero.
    pub fn from_document(space: Arc<FiniteSpace>, doc: &FunctionDocument) -> Result<Self> {
        let mut values = vec![ZERO; space.len()];
        for (id, v) in &doc.values {
            values[space.index_of(id)?] = v.to_complex();
        }
        Self::new(space, values)
    }
}

impl Serialize for SampledFunction {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        FunctionDocument {
            space: None,
            values: (0..self.len())
                .map(|i| {
                    let v = self.values[i];
                    let doc = if v.im == 0.0 {
                        ValueDoc::Real(v.re)
                    } else {
                        ValueDoc::Complex([v.re, v.im])
                    };
                    (self.space.id(i).to_string(), doc)
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

/// Pulls `f` on the target back to the source: `(p*f)(x) = f(p(x))`.
pub fn pullback(map: &FiberedMap, f: &SampledFunction) -> Result<SampledFunction> {
    ensure_same(
        &f.space,
        map.target(),
        "pullback of a function not on the map target",
    )?;
    let values = map.assignment().iter().map(|&y| f.values[y]).collect();
    Ok(SampledFunction::from_raw(map.source().clone(), values))
}

/// Largest modulus over all points.
pub fn sup_norm(f: &SampledFunction) -> f64 {
    f.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `sum_x f(x) mu(x)`.
pub fn integrate(f: &SampledFunction, mu: &WeightedMeasure) -> Result<Complex64> {
    ensure_same(
        &f.space,
        mu.space(),
        "integrand and measure live on different spaces",
    )?;
    Ok(f.values.iter().zip(mu.weights()).map(|(v, &w)| v * w).sum())
}

/// Restriction to the listed points, in list order, as a function on the
/// fiber subspace (which has no infinity point).
pub fn restrict_to_fiber(f: &SampledFunction, fiber: &[String]) -> Result<SampledFunction> {
    let idx = fiber
        .iter()
        .map(|id| f.space.index_of(id))
        .collect::<Result<Vec<_>>>()?;
    let sub = Arc::new(FiniteSpace::new(fiber.iter().cloned(), None)?);
    let values = idx.iter().map(|&i| f.values[i]).collect();
    SampledFunction::new(sub, values)
}

/// Sup norm and mass-weighted L1 norm of a function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    pub sup_norm: f64,
    pub l1_norm: f64,
}

pub fn norms(f: &SampledFunction, mu: &WeightedMeasure) -> Result<NormReport> {
    let l1 = integrate(&f.abs(), mu)?.re;
    Ok(NormReport {
        sup_norm: sup_norm(f),
        l1_norm: l1,
    })
}

/// JSON value: either a real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueDoc {
    Real(f64),
    Complex([f64; 2]),
}

impl ValueDoc {
    pub fn to_complex(self) -> Complex64 {
        match self {
            ValueDoc::Real(r) => Complex64::new(r, 0.0),
            ValueDoc::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// JSON form of a sampled function: `{"space": ref, "values": {"x": [re, im]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<String>,
    pub values: BTreeMap<String, ValueDoc>,
}
