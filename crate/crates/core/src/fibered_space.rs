//! Finite models of spaces, fiber-finite maps and weighted measures.
//!
//! A [`FiniteSpace`] may carry a designated point at infinity. Every admissible
//! function vanishes there and every measure gives it zero mass, which is the
//! finite shadow of working in `C_0` through the one-point compactification.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for mass comparisons.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// An ordered finite set of opaque point ids.
#[derive(Debug, Clone)]
pub struct FiniteSpace {
    points: Vec<String>,
    index: HashMap<String, usize>,
    infinity: Option<usize>,
    labels: Option<Vec<String>>,
}

impl PartialEq for FiniteSpace {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.infinity == other.infinity
    }
}

impl FiniteSpace {
    pub fn new<S: Into<String>>(
        points: impl IntoIterator<Item = S>,
        infinity: Option<&str>,
    ) -> Result<Self> {
        let points: Vec<String> = points.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if index.insert(p.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate point id `{p}`")));
            }
        }
        let infinity =
            match infinity {
                Some(id) => Some(*index.get(id).ok_or_else(|| {
                    Error::Config(format!("infinity point `{id}` is not a member"))
                })?),
                None => None,
            };
        Ok(Self {
            points,
            index,
            infinity,
            labels: None,
        })
    }

    /// Points named `prefix0, prefix1, ...` with no infinity point.
    pub fn numbered(prefix: &str, n: usize) -> Self {
        Self::new((0..n).map(|i| format!("{prefix}{i}")), None).expect("generated ids are unique")
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::Config("label count differs from point count".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn id(&self, i: usize) -> &str {
        &self.points[i]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn infinity(&self) -> Option<usize> {
        self.infinity
    }

    pub fn is_infinity(&self, i: usize) -> bool {
        self.infinity == Some(i)
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownPoint(id.to_string()))
    }

    /// Indices of all points other than the point at infinity.
    pub fn finite_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.is_infinity(i)).collect()
    }
}

pub(crate) fn same_space(a: &Arc<FiniteSpace>, b: &Arc<FiniteSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn ensure_same(a: &Arc<FiniteSpace>, b: &Arc<FiniteSpace>, what: &str) -> Result<()> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch(what.to_string()))
    }
}

/// A total map between finite spaces; fibers are finite by construction.
#[derive(Debug, Clone)]
pub struct FiberedMap {
    source: Arc<FiniteSpace>,
    target: Arc<FiniteSpace>,
    assignment: Vec<usize>,
}

impl FiberedMap {
    pub fn new(
        source: Arc<FiniteSpace>,
        target: Arc<FiniteSpace>,
        assignment: Vec<usize>,
    ) -> Result<Self> {
        if assignment.len() != source.len() {
            return Err(Error::Config(format!(
                "assignment has {} entries for {} source points",
                assignment.len(),
                source.len()
            )));
        }
        if let Some(&bad) = assignment.iter().find(|&&y| y >= target.len()) {
            return Err(Error::Config(format!("target index {bad} out of range")));
        }
        match (source.infinity(), target.infinity()) {
            (Some(sx), Some(ty)) => {
                if assignment[sx] != ty {
                    return Err(Error::Config("infinity must map to infinity".into()));
                }
                if let Some(x) = (0..source.len()).find(|&x| x != sx && assignment[x] == ty) {
                    return Err(Error::Config(format!(
                        "finite point `{}` maps to the target infinity",
                        source.id(x)
                    )));
                }
            }
            (Some(sx), None) => {
                return Err(Error::Config(format!(
                    "source infinity `{}` needs a target infinity",
                    source.id(sx)
                )))
            }
            _ => {}
        }
        Ok(Self {
            source,
            target,
            assignment,
        })
    }

    /// Builds a map from `(source id, target id)` pairs.
    pub fn from_ids(
        source: Arc<FiniteSpace>,
        target: Arc<FiniteSpace>,
        pairs: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut assignment = vec![usize::MAX; source.len()];
        for (x, y) in pairs {
            assignment[source.index_of(x)?] = target.index_of(y)?;
        }
        if let Some(i) = assignment.iter().position(|&y| y == usize::MAX) {
            return Err(Error::Config(format!(
                "map is not total: `{}` has no image",
                source.id(i)
            )));
        }
        Self::new(source, target, assignment)
    }

    pub fn source(&self) -> &Arc<FiniteSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FiniteSpace> {
        &self.target
    }

    pub fn image_of(&self, x: usize) -> usize {
        self.assignment[x]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Target points hit by some finite source point, in target order.
    pub fn finite_image(&self) -> Vec<usize> {
        let mut hit = vec![false; self.target.len()];
        for x in self.source.finite_indices() {
            hit[self.assignment[x]] = true;
        }
        (0..self.target.len())
            .filter(|&y| hit[y] && !self.target.is_infinity(y))
            .collect()
    }

    /// Source indices over target point `y`, in source order.
    pub fn fiber(&self, y: usize) -> Vec<usize> {
        (0..self.source.len())
            .filter(|&x| self.assignment[x] == y)
            .collect()
    }
}

/// Fibers of `map`, keyed by target index; target points outside the image
/// get an empty fiber.
pub fn fibers_of(map: &FiberedMap) -> BTreeMap<usize, Vec<usize>> {
    let mut out: BTreeMap<usize, Vec<usize>> =
        (0..map.target.len()).map(|y| (y, Vec::new())).collect();
    for (x, &y) in map.assignment.iter().enumerate() {
        out.get_mut(&y).expect("target index in range").push(x);
    }
    out
}

/// Nonnegative point masses on a finite space.
#[derive(Debug, Clone)]
pub struct WeightedMeasure {
    space: Arc<FiniteSpace>,
    weights: Vec<f64>,
}

impl WeightedMeasure {
    pub fn new(space: Arc<FiniteSpace>, weights: Vec<f64>) -> Result<Self> {
        let m = Self::unchecked(space, weights)?;
        if let Some(v) = m.violations().into_iter().next() {
            return Err(Error::Config(v.to_string()));
        }
        Ok(m)
    }

    /// Builds a measure without checking sign or mass at infinity; only the
    /// length is validated. Used for negative fixtures.
    pub fn unchecked(space: Arc<FiniteSpace>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::Config(format!(
                "{} weights for {} points",
                weights.len(),
                space.len()
            )));
        }
        Ok(Self { space, weights })
    }

    pub fn zero(space: Arc<FiniteSpace>) -> Self {
        let n = space.len();
        Self {
            space,
            weights: vec![0.0; n],
        }
    }

    pub fn space(&self) -> &Arc<FiniteSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mass of an index set.
    pub fn mass_of(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&i| self.weights[i]).sum()
    }

    /// Integral of a real nonnegative or signed real density.
    pub fn integrate_real(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, &w) in self.weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                out.push(Violation::NegativeWeight {
                    point: self.space.id(i).to_string(),
                    weight: w,
                });
            }
        }
        if let Some(inf) = self.space.infinity() {
            if self.weights[inf] != 0.0 {
                out.push(Violation::MassAtInfinity {
                    point: self.space.id(inf).to_string(),
                    weight: self.weights[inf],
                });
            }
        }
        out
    }
}

/// Pushes `mu` forward along `map`.
pub fn pushforward_measure(map: &FiberedMap, mu: &WeightedMeasure) -> Result<WeightedMeasure> {
    ensure_same(&mu.space, &map.source, "measure is not on the map source")?;
    let mut weights = vec![0.0; map.target.len()];
    for (x, &w) in mu.weights.iter().enumerate() {
        weights[map.assignment[x]] += w;
    }
    Ok(WeightedMeasure {
        space: map.target.clone(),
        weights,
    })
}

/// A map together with a measure upstairs and its pushforward downstairs.
#[derive(Debug, Clone)]
pub struct FiberedSystem {
    map: FiberedMap,
    upstairs: WeightedMeasure,
    downstairs: WeightedMeasure,
}

impl FiberedSystem {
    /// Builds a system; the downstairs measure is always recomputed.
    pub fn new(map: FiberedMap, upstairs: WeightedMeasure) -> Result<Self> {
        let downstairs = pushforward_measure(&map, &upstairs)?;
        Ok(Self {
            map,
            upstairs,
            downstairs,
        })
    }

    /// Assembles a system from an explicit downstairs measure without
    /// reconciling it. Only [`validate_system`] should be trusted afterwards.
    pub fn from_parts(
        map: FiberedMap,
        upstairs: WeightedMeasure,
        downstairs: WeightedMeasure,
    ) -> Result<Self> {
        ensure_same(&upstairs.space, &map.source, "upstairs measure")?;
        ensure_same(&downstairs.space, &map.target, "downstairs measure")?;
        Ok(Self {
            map,
            upstairs,
            downstairs,
        })
    }

    pub fn map(&self) -> &FiberedMap {
        &self.map
    }

    pub fn source(&self) -> &Arc<FiniteSpace> {
        &self.map.source
    }

    pub fn target(&self) -> &Arc<FiniteSpace> {
        &self.map.target
    }

    pub fn upstairs(&self) -> &WeightedMeasure {
        &self.upstairs
    }

    pub fn downstairs(&self) -> &WeightedMeasure {
        &self.downstairs
    }

    /// Replaces the upstairs measure and recomputes the pushforward.
    pub fn with_measure(&self, upstairs: WeightedMeasure) -> Result<Self> {
        Self::new(self.map.clone(), upstairs)
    }

    pub fn to_document(&self) -> SystemDocument {
        let src = self.source();
        let tgt = self.target();
        let image: Vec<usize> = {
            let mut seen = vec![false; tgt.len()];
            let mut order = Vec::new();
            for &y in self.map.assignment() {
                if !seen[y] {
                    seen[y] = true;
                    order.push(y);
                }
            }
            order
        };
        let target_points =
            if image.len() == tgt.len() && image.iter().enumerate().all(|(i, &y)| i == y) {
                None
            } else {
                Some(tgt.points().to_vec())
            };
        SystemDocument {
            points: src.points().to_vec(),
            infinity: src.infinity().map(|i| src.id(i).to_string()),
            map: (0..src.len())
                .map(|x| {
                    (
                        src.id(x).to_string(),
                        tgt.id(self.map.image_of(x)).to_string(),
                    )
                })
                .collect(),
            weights: (0..src.len())
                .map(|x| (src.id(x).to_string(), self.upstairs.weight(x)))
                .collect(),
            target_points,
        }
    }

    pub fn from_document(doc: &SystemDocument) -> Result<Self> {
        let source = Arc::new(FiniteSpace::new(
            doc.points.clone(),
            doc.infinity.as_deref(),
        )?);
        let target_points: Vec<String> = match &doc.target_points {
            Some(t) => t.clone(),
            None => {
                let mut seen = std::collections::HashSet::new();
                let mut order = Vec::new();
                for p in &doc.points {
                    let y = doc
                        .map
                        .get(p)
                        .ok_or_else(|| Error::Config(format!("point `{p}` has no image")))?;
                    if seen.insert(y.clone()) {
                        order.push(y.clone());
                    }
                }
                order
            }
        };
        let target_inf = match &doc.infinity {
            Some(inf) => Some(
                doc.map
                    .get(inf)
                    .ok_or_else(|| Error::Config(format!("infinity `{inf}` has no image")))?
                    .clone(),
            ),
            None => None,
        };
        let target = Arc::new(FiniteSpace::new(target_points, target_inf.as_deref())?);
        let map = FiberedMap::from_ids(source.clone(), target, &doc.map)?;
        let mut weights = vec![0.0; source.len()];
        for (id, &w) in &doc.weights {
            weights[source.index_of(id)?] = w;
        }
        let mu = WeightedMeasure::new(source, weights)?;
        Self::new(map, mu)
    }
}

/// JSON form of a fibered system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDocument {
    pub points: Vec<String>,
    pub infinity: Option<String>,
    pub map: BTreeMap<String, String>,
    pub weights: BTreeMap<String, f64>,
    /// Explicit target point order; defaults to the image in order of first
    /// appearance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_points: Option<Vec<String>>,
}

/// One violated invariant of a fibered system.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NegativeWeight {
        point: String,
        weight: f64,
    },
    MassAtInfinity {
        point: String,
        weight: f64,
    },
    PushforwardMismatch {
        point: String,
        stored: f64,
        expected: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeWeight { point, weight } => {
                write!(f, "negative or non-finite weight {weight} at `{point}`")
            }
            Violation::MassAtInfinity { point, weight } => {
                write!(f, "mass {weight} at infinity point `{point}`")
            }
            Violation::PushforwardMismatch {
                point,
                stored,
                expected,
            } => write!(
                f,
                "downstairs weight {stored} at `{point}` differs from pushforward {expected}"
            ),
        }
    }
}

/// Lists every violated invariant; empty iff the system is valid.
pub fn validate_system(sys: &FiberedSystem) -> Vec<Violation> {
    let mut out = sys.upstairs.violations();
    out.extend(sys.downstairs.violations());
    let expected =
        pushforward_measure(&sys.map, &sys.upstairs).expect("parts were checked to share spaces");
    let scale = sys.upstairs.total_mass().abs().max(1.0);
    for y in 0..sys.target().len() {
        let stored = sys.downstairs.weight(y);
        let want = expected.weight(y);
        if (stored - want).abs() > MASS_TOLERANCE * scale {
            out.push(Violation::PushforwardMismatch {
                point: sys.target().id(y).to_string(),
                stored,
                expected: want,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(ids: &[&str]) -> Arc<FiniteSpace> {
        Arc::new(FiniteSpace::new(ids.iter().copied(), None).unwrap())
    }

    #[test]
    fn pushforward_adds_fiber_masses() {
        let x = space(&["a", "b"]);
        let y = space(&["y"]);
        let map = FiberedMap::new(x.clone(), y, vec![0, 0]).unwrap();
        let mu = WeightedMeasure::new(x, vec![0.3, 0.7]).unwrap();
        let push = pushforward_measure(&map, &mu).unwrap();
        assert!((push.weight(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pushforward_of_zero_is_zero() {
        let x = space(&["a", "b", "c"]);
        let y = space(&["y1", "y2"]);
        let map = FiberedMap::new(x.clone(), y, vec![0, 1, 1]).unwrap();
        let push = pushforward_measure(&map, &WeightedMeasure::zero(x)).unwrap();
        assert_eq!(push.weights(), &[0.0, 0.0]);
    }

    #[test]
    fn pushforward_hand_sum() {
        let x = space(&["a", "b", "c"]);
        let y = space(&["y1", "y2"]);
        let map = FiberedMap::new(x.clone(), y, vec![0, 1, 1]).unwrap();
        let mu = WeightedMeasure::new(x, vec![1.0, 2.0, 3.0]).unwrap();
        let push = pushforward_measure(&map, &mu).unwrap();
        assert_eq!(push.weights(), &[1.0, 5.0]);
    }

    #[test]
    fn pushforward_rejects_foreign_measure() {
        let x = space(&["a", "b"]);
        let y = space(&["y"]);
        let map = FiberedMap::new(x, y.clone(), vec![0, 0]).unwrap();
        let mu = WeightedMeasure::new(y, vec![1.0]).unwrap();
        assert!(matches!(
            pushforward_measure(&map, &mu),
            Err(Error::SpaceMismatch(_))
        ));
    }

    #[test]
    fn fibers_identity_constant_and_mixed() {
        let x = space(&["a", "b"]);
        let id = FiberedMap::new(x.clone(), x.clone(), vec![0, 1]).unwrap();
        let f = fibers_of(&id);
        assert_eq!(f[&0], vec![0]);
        assert_eq!(f[&1], vec![1]);

        let x3 = space(&["a", "b", "c"]);
        let y = space(&["y"]);
        let c = FiberedMap::new(x3.clone(), y, vec![0, 0, 0]).unwrap();
        assert_eq!(fibers_of(&c)[&0], vec![0, 1, 2]);

        let y2 = space(&["y1", "y2"]);
        let m = FiberedMap::new(x3, y2, vec![0, 1, 0]).unwrap();
        let f = fibers_of(&m);
        assert_eq!(f[&0], vec![0, 2]);
        assert_eq!(f[&1], vec![1]);
    }

    #[test]
    fn infinity_must_map_to_infinity() {
        let x = Arc::new(FiniteSpace::new(["a", "inf"], Some("inf")).unwrap());
        let y = Arc::new(FiniteSpace::new(["y", "oo"], Some("oo")).unwrap());
        assert!(FiberedMap::new(x.clone(), y.clone(), vec![1, 0]).is_err());
        assert!(FiberedMap::new(x.clone(), y.clone(), vec![1, 1]).is_err());
        assert!(FiberedMap::new(x, y, vec![0, 1]).is_ok());
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(FiniteSpace::new(["a", "a"], None).is_err());
        assert!(FiniteSpace::new(["a"], Some("b")).is_err());
    }

    fn small_system() -> FiberedSystem {
        let x = Arc::new(FiniteSpace::new(["a", "b", "inf"], Some("inf")).unwrap());
        let y = Arc::new(FiniteSpace::new(["y", "oo"], Some("oo")).unwrap());
        let map = FiberedMap::new(x.clone(), y, vec![0, 0, 1]).unwrap();
        let mu = WeightedMeasure::new(x, vec![0.25, 0.75, 0.0]).unwrap();
        FiberedSystem::new(map, mu).unwrap()
    }

    #[test]
    fn valid_system_has_empty_report() {
        assert!(validate_system(&small_system()).is_empty());
    }

    #[test]
    fn mass_at_infinity_reported() {
        let sys = small_system();
        let bad = WeightedMeasure::unchecked(sys.source().clone(), vec![0.25, 0.75, 0.1]).unwrap();
        let down = pushforward_measure(sys.map(), &bad).unwrap();
        let broken = FiberedSystem::from_parts(sys.map().clone(), bad, down).unwrap();
        let report = validate_system(&broken);
        assert!(report
            .iter()
            .any(|v| matches!(v, Violation::MassAtInfinity { point, .. } if point == "inf")));
    }

    #[test]
    fn perturbed_downstairs_reported() {
        let sys = small_system();
        let mut w = sys.downstairs().weights().to_vec();
        w[0] += 1e-3;
        let down = WeightedMeasure::unchecked(sys.target().clone(), w).unwrap();
        let broken =
            FiberedSystem::from_parts(sys.map().clone(), sys.upstairs().clone(), down).unwrap();
        let report = validate_system(&broken);
        assert_eq!(report.len(), 1);
        assert!(matches!(&report[0], Violation::PushforwardMismatch { point, .. } if point == "y"));
        assert_eq!(validate_system(&broken), report);
    }

    #[test]
    fn document_round_trip() {
        let sys = small_system();
        let doc = sys.to_document();
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.contains("\"points\"") && json.contains("\"infinity\":\"inf\""));
        let back = FiberedSystem::from_document(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.source().points(), sys.source().points());
        assert_eq!(back.downstairs().weights(), sys.downstairs().weights());
        assert_eq!(back.target().infinity(), Some(1));
    }
}
