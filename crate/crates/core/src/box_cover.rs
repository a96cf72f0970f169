//! Dyadic box covers of compact sets in `R^n / Z^m` with bounded overlap.
//!
//! All geometry is exact: coordinates and widths are rationals, the first
//! `m` axes are circles of period 1.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest dyadic level before the search is abandoned.
pub const MAX_LEVEL: u32 = 40;

pub type Rat = BigRational;

pub fn rat(x: f64) -> Result<Rat> {
    BigRational::from_float(x).ok_or_else(|| Error::Argument(format!("non-finite coordinate {x}")))
}

fn ratio(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

fn pow2(k: u32) -> Rat {
    Rat::from_integer(BigInt::one() << k)
}

fn floor_i64(r: &Rat) -> i64 {
    r.floor()
        .to_integer()
        .to_i64()
        .expect("coordinate in range")
}

fn ceil_i64(r: &Rat) -> i64 {
    r.ceil().to_integer().to_i64().expect("coordinate in range")
}

/// Fractional part in `[0, 1)`.
fn frac(r: &Rat) -> Rat {
    r - r.floor()
}

/// Formats as `p/q`, also for integers.
pub fn rat_string(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn ser_rat<S: Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&rat_string(r))
}

fn ser_rats<S: Serializer>(v: &[Rat], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(rat_string))
}

/// `R^n / Z^m`; the first `m` coordinates are circular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TorusQuotient {
    pub n: usize,
    pub m: usize,
}

impl TorusQuotient {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m > n {
            return Err(Error::Argument(format!(
                "need 0 <= m <= n and n >= 1, got n={n}, m={m}"
            )));
        }
        Ok(Self { n, m })
    }

    pub fn is_circular(&self, axis: usize) -> bool {
        axis < self.m
    }

    /// Maps circular coordinates into `[0, 1)`.
    pub fn normalize(&self, p: &[Rat]) -> Vec<Rat> {
        p.iter()
            .enumerate()
            .map(|(i, x)| {
                if self.is_circular(i) {
                    frac(x)
                } else {
                    x.clone()
                }
            })
            .collect()
    }

    /// Whether coordinate `t` lies in the closed interval `[lo, lo + w]`.
    fn in_closed(&self, axis: usize, t: &Rat, lo: &Rat, w: &Rat) -> bool {
        if self.is_circular(axis) {
            *w >= Rat::one() || frac(&(t - lo)) <= *w
        } else {
            lo <= t && *t <= lo + w
        }
    }

    /// Whether `t` lies in the open interval `(lo, lo + w)`.
    fn in_open(&self, axis: usize, t: &Rat, lo: &Rat, w: &Rat) -> bool {
        if self.is_circular(axis) {
            if *w > Rat::one() {
                return true;
            }
            let d = frac(&(t - lo));
            d > Rat::zero() && d < *w
        } else {
            lo < t && *t < lo + w
        }
    }

    /// Signed offset of `t` from `c`, reduced to `[-1/2, 1/2)` on circles.
    fn offset(&self, axis: usize, t: &Rat, c: &Rat) -> Rat {
        let d = t - c;
        if self.is_circular(axis) {
            let half = ratio(1, 2);
            frac(&(d + &half)) - half
        } else {
            d
        }
    }
}

/// An open box of uniform width; closures are the closed boxes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Box {
    #[serde(serialize_with = "ser_rats")]
    pub center: Vec<Rat>,
    #[serde(serialize_with = "ser_rat")]
    pub width: Rat,
}

impl Box {
    pub fn new(center: Vec<Rat>, width: Rat) -> Result<Self> {
        if !width.is_positive() {
            return Err(Error::Argument("box width must be positive".into()));
        }
        Ok(Self { center, width })
    }

    fn lo(&self, axis: usize) -> Rat {
        &self.center[axis] - &self.width / Rat::from_integer(2.into())
    }

    pub fn contains_closed(&self, space: &TorusQuotient, p: &[Rat]) -> bool {
        (0..space.n).all(|i| space.in_closed(i, &p[i], &self.lo(i), &self.width))
    }

    pub fn contains_open(&self, space: &TorusQuotient, p: &[Rat]) -> bool {
        (0..space.n).all(|i| space.in_open(i, &p[i], &self.lo(i), &self.width))
    }

    /// Whether the closures of `self` and `other` meet.
    pub fn closures_meet(&self, space: &TorusQuotient, other: &Box) -> bool {
        (0..space.n).all(|i| {
            let (a, b) = (self.lo(i), other.lo(i));
            space.in_closed(i, &b, &a, &self.width) || space.in_closed(i, &a, &b, &other.width)
        })
    }
}

impl fmt::Display for Box {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<String> = self.center.iter().map(rat_string).collect();
        write!(
            f,
            "box(center=[{}], width={})",
            c.join(", "),
            rat_string(&self.width)
        )
    }
}

/// A closed axis-parallel box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionBox {
    #[serde(serialize_with = "ser_rats")]
    pub lo: Vec<Rat>,
    #[serde(serialize_with = "ser_rats")]
    pub hi: Vec<Rat>,
}

impl RegionBox {
    pub fn new(lo: Vec<Rat>, hi: Vec<Rat>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Argument(
                "region box needs lo <= hi on every axis".into(),
            ));
        }
        Ok(Self { lo, hi })
    }

    pub fn from_f64(lo: &[f64], hi: &[f64]) -> Result<Self> {
        Self::new(
            lo.iter().map(|&x| rat(x)).collect::<Result<_>>()?,
            hi.iter().map(|&x| rat(x)).collect::<Result<_>>()?,
        )
    }

    fn full_circle(&self, axis: usize) -> bool {
        &self.hi[axis] - &self.lo[axis] >= Rat::one()
    }

    /// The point of this box closest to `c` on `axis`.
    fn clamp_axis(&self, space: &TorusQuotient, axis: usize, c: &Rat) -> Rat {
        let (lo, hi) = (&self.lo[axis], &self.hi[axis]);
        if !space.is_circular(axis) {
            return c.clone().max(lo.clone()).min(hi.clone());
        }
        if self.full_circle(axis) {
            return frac(c);
        }
        let shifted = lo + frac(&(c - lo));
        if shifted <= *hi {
            return frac(&shifted);
        }
        let d_lo = space.offset(axis, lo, c).abs();
        let d_hi = space.offset(axis, hi, c).abs();
        if d_lo <= d_hi {
            frac(lo)
        } else {
            frac(hi)
        }
    }

    fn contains(&self, space: &TorusQuotient, p: &[Rat]) -> bool {
        (0..space.n).all(|i| {
            let w = &self.hi[i] - &self.lo[i];
            space.in_closed(i, &p[i], &self.lo[i], &w)
        })
    }
}

/// A compact set given as a finite union of closed boxes.
#[derive(Debug, Clone, Serialize)]
pub struct CompactRegion {
    pub boxes: Vec<RegionBox>,
}

impl CompactRegion {
    pub fn from_boxes(space: &TorusQuotient, boxes: Vec<RegionBox>) -> Result<Self> {
        if boxes.iter().any(|b| b.lo.len() != space.n) {
            return Err(Error::Argument(
                "region box dimension differs from the space".into(),
            ));
        }
        Ok(Self { boxes })
    }

    /// Point cloud fattened by a closed sup-norm neighborhood of radius `eps`.
    pub fn from_points(space: &TorusQuotient, points: &[Vec<f64>], eps: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(Error::Argument(
                "fattening radius must be nonnegative".into(),
            ));
        }
        let e = rat(eps)?;
        let boxes = points
            .iter()
            .map(|p| {
                let c: Vec<Rat> = p.iter().map(|&x| rat(x)).collect::<Result<_>>()?;
                RegionBox::new(
                    c.iter().map(|x| x - &e).collect(),
                    c.iter().map(|x| x + &e).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_boxes(space, boxes)
    }

    /// The whole torus; requires `n == m`.
    pub fn whole(space: &TorusQuotient) -> Result<Self> {
        if space.n != space.m {
            return Err(Error::Argument(
                "the whole space is compact only when n = m".into(),
            ));
        }
        let b = RegionBox::new(vec![Rat::zero(); space.n], vec![Rat::one(); space.n])?;
        Ok(Self { boxes: vec![b] })
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn contains(&self, space: &TorusQuotient, p: &[Rat]) -> bool {
        self.boxes.iter().any(|b| b.contains(space, p))
    }
}

type RadiusFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// `U_x` is the open box of width `r(x)` centered at `x`.
#[derive(Clone)]
pub struct NeighborhoodFamily {
    rule: Option<Arc<RadiusFn>>,
    constant: f64,
    pub r_min: f64,
}

impl fmt::Debug for NeighborhoodFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NeighborhoodFamily")
            .field(
                "rule",
                &if self.rule.is_some() {
                    "function"
                } else {
                    "constant"
                },
            )
            .field("r_min", &self.r_min)
            .finish()
    }
}

impl NeighborhoodFamily {
    pub fn constant(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Argument(format!("radius must be positive, got {r}")));
        }
        Ok(Self {
            rule: None,
            constant: r,
            r_min: r,
        })
    }

    pub fn from_fn(r_min: f64, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(r_min > 0.0 && r_min.is_finite()) {
            return Err(Error::Argument(format!(
                "r_min must be positive, got {r_min}"
            )));
        }
        Ok(Self {
            rule: Some(Arc::new(f)),
            constant: r_min,
            r_min,
        })
    }

    /// Width of `U_x`, checked against `r_min`.
    pub fn radius(&self, x: &[Rat]) -> Result<Rat> {
        let r = match &self.rule {
            None => self.constant,
            Some(f) => {
                let xf: Vec<f64> = x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
                f(&xf)
            }
        };
        if !(r >= self.r_min) {
            return Err(Error::Precondition(format!(
                "neighborhood width {r} below the stated minimum {}",
                self.r_min
            )));
        }
        rat(r)
    }

    pub fn neighborhood(&self, x: &[Rat]) -> Result<Box> {
        Box::new(x.to_vec(), self.radius(x)?)
    }
}

fn level_half_width(k: u32) -> Rat {
    Rat::one() / (pow2(k) * Rat::from_integer(2.into()))
}

fn level_center(j: i64, k: u32) -> Rat {
    (Rat::from_integer(j.into()) + ratio(1, 2)) / pow2(k)
}

fn check_level(k: u32) -> Result<()> {
    if k > MAX_LEVEL {
        return Err(Error::Resolution(format!(
            "dyadic level {k} exceeds {MAX_LEVEL}"
        )));
    }
    Ok(())
}

/// Level-`k` dyadic boxes (width `2^-k`, centers on the shifted lattice)
/// whose open box meets the window `[lo, hi]`. Circular axes are always
/// enumerated in full.
pub fn dyadic_boxes(
    space: &TorusQuotient,
    k: u32,
    window: &RegionBox,
) -> Result<impl Iterator<Item = Box>> {
    check_level(k)?;
    let scale = pow2(k);
    let ranges: Vec<(i64, i64)> = (0..space.n)
        .map(|i| {
            if space.is_circular(i) {
                (0, (1i64 << k) - 1)
            } else {
                let a = floor_i64(&(&window.lo[i] * &scale));
                let b = ceil_i64(&(&window.hi[i] * &scale)) - 1;
                (a, b.max(a - 1))
            }
        })
        .collect();
    let width = Rat::one() / scale;
    Ok(index_product(&ranges).map(move |idx| Box {
        center: idx.iter().map(|&j| level_center(j, k)).collect(),
        width: width.clone(),
    }))
}

fn index_product(ranges: &[(i64, i64)]) -> impl Iterator<Item = Vec<i64>> {
    let ranges = ranges.to_vec();
    let empty = ranges.iter().any(|(a, b)| b < a);
    let mut cur: Option<Vec<i64>> = if empty {
        None
    } else {
        Some(ranges.iter().map(|r| r.0).collect())
    };
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let mut next = out.clone();
        let mut axis = next.len();
        loop {
            if axis == 0 {
                cur = None;
                break;
            }
            axis -= 1;
            if next[axis] < ranges[axis].1 {
                next[axis] += 1;
                cur = Some(next);
                break;
            }
            next[axis] = ranges[axis].0;
        }
        Some(out)
    })
}

/// Same center, width times exactly 11/10.
pub fn thicken(space: &TorusQuotient, b: &Box) -> Result<Box> {
    let width = &b.width * ratio(11, 10);
    if space.m > 0 && width >= Rat::one() {
        return Err(Error::Resolution(format!(
            "level too coarse: thickened width {} wraps a circular axis",
            rat_string(&width)
        )));
    }
    Box::new(b.center.clone(), width)
}

fn thickened_half(k: u32) -> Rat {
    level_half_width(k) * ratio(11, 10)
}

/// Level-`k` indices of the thickened boxes whose closure meets `K`.
fn meeting_indices(space: &TorusQuotient, region: &CompactRegion, k: u32) -> BTreeSet<Vec<i64>> {
    let scale = pow2(k);
    let h = thickened_half(k);
    let count = 1i64 << k;
    let mut out = BTreeSet::new();
    for rb in &region.boxes {
        let ranges: Vec<Vec<i64>> = (0..space.n)
            .map(|i| {
                let a = ceil_i64(&((&rb.lo[i] - &h) * &scale - ratio(1, 2)));
                let b = floor_i64(&((&rb.hi[i] + &h) * &scale - ratio(1, 2)));
                if !space.is_circular(i) {
                    return (a..=b).collect();
                }
                if b - a + 1 >= count {
                    return (0..count).collect();
                }
                let set: BTreeSet<i64> = (a..=b).map(|j| j.rem_euclid(count)).collect();
                set.into_iter().collect()
            })
            .collect();
        let bounds: Vec<(i64, i64)> = ranges.iter().map(|r| (0, r.len() as i64 - 1)).collect();
        for pos in index_product(&bounds) {
            out.insert(
                pos.iter()
                    .enumerate()
                    .map(|(i, &p)| ranges[i][p as usize])
                    .collect(),
            );
        }
    }
    out
}

fn thickened_box(k: u32, idx: &[i64]) -> Box {
    Box {
        center: idx.iter().map(|&j| level_center(j, k)).collect(),
        width: ratio(11, 10) / pow2(k),
    }
}

/// Thickened level-`k` boxes whose closure meets `K`, in index order.
pub fn select_meeting(space: &TorusQuotient, region: &CompactRegion, k: u32) -> Result<Vec<Box>> {
    check_level(k)?;
    if space.m > 0 && k == 0 {
        thicken(space, &Box::new(vec![Rat::zero(); space.n], Rat::one())?)?;
    }
    Ok(meeting_indices(space, region, k)
        .iter()
        .map(|idx| thickened_box(k, idx))
        .collect())
}

/// `closure(W) ⊆ U_x` with witness `x ∈ K`.
#[derive(Debug, Clone, Serialize)]
pub struct Subordination {
    pub box_index: usize,
    #[serde(serialize_with = "ser_rats")]
    pub witness: Vec<Rat>,
    #[serde(serialize_with = "ser_rat")]
    pub neighborhood_width: Rat,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverResult {
    pub space: TorusQuotient,
    pub boxes: Vec<Box>,
    pub level_indices: Vec<Vec<i64>>,
    pub k_initial: u32,
    pub k_final: u32,
    #[serde(serialize_with = "ser_rat")]
    pub epsilon: Rat,
    pub subordination: Vec<Subordination>,
    pub multiplicity: usize,
    #[serde(serialize_with = "ser_rats")]
    pub multiplicity_witness: Vec<Rat>,
}

/// One CSV row of a cover.
#[derive(Debug, Clone, Serialize)]
pub struct CoverRow {
    pub box_id: usize,
    pub center: Vec<String>,
    pub width: String,
    pub witness: Vec<String>,
    pub overlap_count: usize,
}

impl CoverResult {
    pub fn bound(&self) -> usize {
        1usize << self.space.n
    }

    /// For each box, the number of other boxes whose closure meets it.
    pub fn rows(&self) -> Vec<CoverRow> {
        let neighbors = neighbor_lists(&self.space, &self.boxes);
        self.boxes
            .iter()
            .zip(&self.subordination)
            .enumerate()
            .map(|(i, (b, s))| CoverRow {
                box_id: i,
                center: b.center.iter().map(rat_string).collect(),
                width: rat_string(&b.width),
                witness: s.witness.iter().map(rat_string).collect(),
                overlap_count: neighbors[i].len() - 1,
            })
            .collect()
    }
}

fn witness_for(
    space: &TorusQuotient,
    region: &CompactRegion,
    family: &NeighborhoodFamily,
    w: &Box,
) -> Result<Option<(Vec<Rat>, Rat)>> {
    for rb in &region.boxes {
        let x: Vec<Rat> = (0..space.n)
            .map(|i| rb.clamp_axis(space, i, &w.center[i]))
            .collect();
        if !w.contains_closed(space, &x) {
            continue;
        }
        let r = family.radius(&x)?;
        if closed_inside_open(space, w, &x, &r) {
            return Ok(Some((x, r)));
        }
    }
    Ok(None)
}

/// Whether `closure(w)` lies in the open box of width `r` centered at `x`.
pub fn closed_inside_open(space: &TorusQuotient, w: &Box, x: &[Rat], r: &Rat) -> bool {
    let two = Rat::from_integer(2.into());
    (0..space.n).all(|i| {
        if space.is_circular(i) && *r > Rat::one() {
            return true;
        }
        let d = space.offset(i, &w.center[i], &x[i]).abs();
        d + &w.width / &two < r / &two
    })
}

/// Implements the covering lemma at a uniform dyadic level.
pub fn build_cover(
    space: &TorusQuotient,
    region: &CompactRegion,
    family: &NeighborhoodFamily,
) -> Result<CoverResult> {
    if region.is_empty() {
        return Err(Error::Argument("region must be nonempty".into()));
    }
    if region.boxes.iter().any(|b| b.lo.len() != space.n) {
        return Err(Error::Argument(
            "region dimension differs from the space".into(),
        ));
    }
    // K_eps ⊆ ∪ U_x holds with eps = r_min / 4: each point of K_eps is within
    // sup-distance eps of some x in K, and U_x has half-width >= r_min / 2.
    let epsilon = rat(family.r_min)? / Rat::from_integer(4.into());
    let mut k = if space.m > 0 { 1 } else { 0 };
    while ratio(11, 10) / pow2(k) > epsilon {
        k += 1;
        if k > MAX_LEVEL {
            return Err(Error::Resolution(format!(
                "neighborhood widths too small: level would exceed {MAX_LEVEL}"
            )));
        }
    }
    let k_initial = k;
    loop {
        check_level(k)?;
        let indices: Vec<Vec<i64>> = meeting_indices(space, region, k).into_iter().collect();
        let boxes: Vec<Box> = indices.iter().map(|idx| thickened_box(k, idx)).collect();
        let mut subordination = Vec::with_capacity(boxes.len());
        let mut all = true;
        for (i, w) in boxes.iter().enumerate() {
            match witness_for(space, region, family, w)? {
                Some((x, r)) => subordination.push(Subordination {
                    box_index: i,
                    witness: x,
                    neighborhood_width: r,
                }),
                None => {
                    all = false;
                    break;
                }
            }
        }
        if all {
            let (multiplicity, multiplicity_witness) = exact_multiplicity(space, &boxes);
            return Ok(CoverResult {
                space: *space,
                boxes,
                level_indices: indices,
                k_initial,
                k_final: k,
                epsilon,
                subordination,
                multiplicity,
                multiplicity_witness,
            });
        }
        // divide every box into 2^n sub-boxes: the next level
        k += 1;
    }
}

/// Report of an independent check of a cover.
#[derive(Debug, Clone, Serialize)]
pub struct CoverCheck {
    pub coverage_certified: bool,
    pub subordinated: usize,
    pub total: usize,
    pub thickening_exact: bool,
    pub multiplicity: usize,
    pub within_bound: bool,
    pub samples_checked: usize,
    pub samples_uncovered: usize,
}

impl CoverCheck {
    pub fn passed(&self) -> bool {
        self.coverage_certified
            && self.subordinated == self.total
            && self.thickening_exact
            && self.within_bound
            && self.samples_uncovered == 0
    }
}

/// Re-verifies a cover: exact interval coverage, subordination, the 11/10
/// widths, multiplicity, and a sample grid at resolution `2^-(k+2)`.
pub fn verify_cover(
    region: &CompactRegion,
    family: &NeighborhoodFamily,
    cover: &CoverResult,
    max_samples: usize,
) -> Result<CoverCheck> {
    let space = &cover.space;
    let k = cover.k_final;
    let selected: BTreeSet<&Vec<i64>> = cover.level_indices.iter().collect();
    let scale = pow2(k);
    let count = 1i64 << k;
    // every K-box is covered by the open boxes of its tiling cells
    let mut coverage_certified = true;
    for rb in &region.boxes {
        let ranges: Vec<(i64, i64)> = (0..space.n)
            .map(|i| {
                let a = floor_i64(&(&rb.lo[i] * &scale));
                let b = floor_i64(&(&rb.hi[i] * &scale));
                if space.is_circular(i) && b - a + 1 >= count {
                    (0, count - 1)
                } else {
                    (a, b)
                }
            })
            .collect();
        for idx in index_product(&ranges) {
            let norm: Vec<i64> = idx
                .iter()
                .enumerate()
                .map(|(i, &j)| {
                    if space.is_circular(i) {
                        j.rem_euclid(count)
                    } else {
                        j
                    }
                })
                .collect();
            if !selected.contains(&norm) {
                coverage_certified = false;
            }
        }
    }
    let mut subordinated = 0;
    for s in &cover.subordination {
        let w = &cover.boxes[s.box_index];
        if region.contains(space, &s.witness)
            && w.contains_closed(space, &s.witness)
            && family.radius(&s.witness)? == s.neighborhood_width
            && closed_inside_open(space, w, &s.witness, &s.neighborhood_width)
        {
            subordinated += 1;
        }
    }
    let expected = ratio(11, 10) / pow2(k);
    let thickening_exact = cover.boxes.iter().all(|b| b.width == expected)
        && cover
            .boxes
            .iter()
            .zip(&cover.level_indices)
            .all(|(b, idx)| {
                idx.iter()
                    .enumerate()
                    .all(|(i, &j)| b.center[i] == level_center(j, k))
            });
    let (multiplicity, _) = exact_multiplicity(space, &cover.boxes);

    let step = Rat::one() / pow2(k + 2);
    let mut samples_checked = 0;
    let mut samples_uncovered = 0;
    'outer: for rb in &region.boxes {
        let ranges: Vec<(i64, i64)> = (0..space.n)
            .map(|i| {
                (
                    0,
                    floor_i64(&((&rb.hi[i] - &rb.lo[i]) / &step)).min(4 * count),
                )
            })
            .collect();
        for idx in index_product(&ranges) {
            if samples_checked >= max_samples {
                break 'outer;
            }
            let p: Vec<Rat> = idx
                .iter()
                .enumerate()
                .map(|(i, &t)| &rb.lo[i] + &step * Rat::from_integer(t.into()))
                .collect();
            samples_checked += 1;
            if !cover.boxes.iter().any(|b| b.contains_open(space, &p)) {
                samples_uncovered += 1;
            }
        }
    }
    Ok(CoverCheck {
        coverage_certified,
        subordinated,
        total: cover.boxes.len(),
        thickening_exact,
        multiplicity,
        within_bound: multiplicity <= cover.bound(),
        samples_checked,
        samples_uncovered,
    })
}

/// For each box, the indices of boxes whose closures meet it (itself included).
fn neighbor_lists(space: &TorusQuotient, boxes: &[Box]) -> Vec<Vec<usize>> {
    // prune with floats along one axis, decide exactly
    let axis = if space.m < space.n { space.n - 1 } else { 0 };
    let circular = space.is_circular(axis);
    let max_w = boxes
        .iter()
        .map(|b| b.width.to_f64().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let mut keyed: Vec<(f64, usize)> = Vec::new();
    for (i, b) in boxes.iter().enumerate() {
        let lo = b.lo(axis).to_f64().unwrap_or(0.0);
        if circular {
            let l = lo - lo.floor();
            keyed.extend([(l - 1.0, i), (l, i), (l + 1.0, i)]);
        } else {
            keyed.push((lo, i));
        }
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let margin = max_w + 1e-9;
    let mut out: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); boxes.len()];
    let mut start = 0;
    for a in 0..keyed.len() {
        while keyed[start].0 < keyed[a].0 - margin {
            start += 1;
        }
        let (_, i) = keyed[a];
        for &(_, j) in &keyed[start..=a] {
            if out[i].contains(&j) {
                continue;
            }
            if i == j || boxes[i].closures_meet(space, &boxes[j]) {
                out[i].insert(j);
                out[j].insert(i);
            }
        }
    }
    out.into_iter().map(|s| s.into_iter().collect()).collect()
}

/// Maximum number of closed boxes containing a common point, with a point
/// attaining it.
pub fn exact_multiplicity(space: &TorusQuotient, boxes: &[Box]) -> (usize, Vec<Rat>) {
    if boxes.is_empty() {
        return (0, Vec::new());
    }
    let neighbors = neighbor_lists(space, boxes);
    let mut best = (0usize, Vec::new());
    for (a, anchor) in boxes.iter().enumerate() {
        if neighbors[a].len() <= best.0 {
            continue;
        }
        // a maximal point can be slid down to lower endpoints on every axis
        let cands: Vec<Vec<Rat>> = (0..space.n)
            .map(|i| {
                let set: BTreeSet<Rat> = neighbors[a]
                    .iter()
                    .map(|&j| {
                        let lo = boxes[j].lo(i);
                        if space.is_circular(i) {
                            frac(&lo)
                        } else {
                            lo
                        }
                    })
                    .filter(|t| space.in_closed(i, t, &anchor.lo(i), &anchor.width))
                    .collect();
                set.into_iter().collect()
            })
            .collect();
        let bounds: Vec<(i64, i64)> = cands.iter().map(|c| (0, c.len() as i64 - 1)).collect();
        for pos in index_product(&bounds) {
            let p: Vec<Rat> = pos
                .iter()
                .enumerate()
                .map(|(i, &t)| cands[i][t as usize].clone())
                .collect();
            let c = neighbors[a]
                .iter()
                .filter(|&&j| boxes[j].contains_closed(space, &p))
                .count();
            if c > best.0 {
                best = (c, p);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rat {
        ratio(p, q)
    }

    #[test]
    fn dyadic_counts() {
        let circle = TorusQuotient::new(1, 1).unwrap();
        let w = RegionBox::new(vec![r(0, 1)], vec![r(1, 1)]).unwrap();
        assert_eq!(dyadic_boxes(&circle, 1, &w).unwrap().count(), 2);
        let plane = TorusQuotient::new(2, 0).unwrap();
        let w = RegionBox::new(vec![r(0, 1); 2], vec![r(1, 1); 2]).unwrap();
        let boxes: Vec<Box> = dyadic_boxes(&plane, 2, &w).unwrap().collect();
        assert_eq!(boxes.len(), 16);
        // unthickened neighbors share only boundary
        let (a, b) = (&boxes[0], &boxes[1]);
        assert!(a.closures_meet(&plane, b));
        let mid = vec![r(1, 8), r(1, 4)];
        assert!(a.contains_closed(&plane, &mid) && b.contains_closed(&plane, &mid));
        assert!(!a.contains_open(&plane, &mid) && !b.contains_open(&plane, &mid));
    }

    #[test]
    fn thickening() {
        let line = TorusQuotient::new(1, 0).unwrap();
        let b = Box::new(vec![r(1, 8)], r(1, 4)).unwrap();
        assert_eq!(thicken(&line, &b).unwrap().width, r(11, 40));
        let circle = TorusQuotient::new(1, 1).unwrap();
        let b = Box::new(vec![r(1, 4)], r(1, 2)).unwrap();
        assert_eq!(thicken(&circle, &b).unwrap().width, r(11, 20));
        let b = Box::new(vec![r(1, 2)], r(1, 1)).unwrap();
        assert!(matches!(thicken(&circle, &b), Err(Error::Resolution(_))));
    }

    #[test]
    fn meeting_a_point() {
        let line = TorusQuotient::new(1, 0).unwrap();
        // 1/3 is never within 1/20 of a cell boundary in cell units
        let k = CompactRegion::from_points(&line, &[vec![1.0 / 3.0]], 0.0).unwrap();
        let third = CompactRegion::from_boxes(
            &line,
            vec![RegionBox::new(vec![r(1, 3)], vec![r(1, 3)]).unwrap()],
        )
        .unwrap();
        for level in 1..8 {
            assert_eq!(select_meeting(&line, &third, level).unwrap().len(), 1);
        }
        assert!(!k.is_empty());
        // a point near a boundary is reached by the thickened neighbor
        let near = CompactRegion::from_boxes(
            &line,
            vec![RegionBox::new(vec![r(49, 200)], vec![r(49, 200)]).unwrap()],
        )
        .unwrap();
        assert_eq!(select_meeting(&line, &near, 2).unwrap().len(), 2);
        let empty = CompactRegion::from_boxes(&line, vec![]).unwrap();
        assert!(select_meeting(&line, &empty, 3).unwrap().is_empty());
        let torus = TorusQuotient::new(2, 2).unwrap();
        let whole = CompactRegion::whole(&torus).unwrap();
        assert_eq!(select_meeting(&torus, &whole, 3).unwrap().len(), 64);
    }

    #[test]
    fn multiplicity_examples() {
        let line = TorusQuotient::new(1, 0).unwrap();
        let a = Box::new(vec![r(0, 1)], r(1, 2)).unwrap();
        let b = Box::new(vec![r(2, 1)], r(1, 2)).unwrap();
        assert_eq!(exact_multiplicity(&line, &[a.clone(), b]).0, 1);
        let c = Box::new(vec![r(1, 2)], r(1, 2)).unwrap();
        let (m, w) = exact_multiplicity(&line, &[a, c]);
        assert_eq!((m, w), (2, vec![r(1, 4)]));

        let circle = TorusQuotient::new(1, 1).unwrap();
        let whole = CompactRegion::whole(&circle).unwrap();
        for level in 1..6 {
            let boxes = select_meeting(&circle, &whole, level).unwrap();
            assert_eq!(exact_multiplicity(&circle, &boxes).0, 2);
        }
    }

    #[test]
    fn wraparound_overlap() {
        let circle = TorusQuotient::new(1, 1).unwrap();
        let a = Box::new(vec![r(1, 20)], r(1, 5)).unwrap();
        let b = Box::new(vec![r(19, 20)], r(1, 5)).unwrap();
        assert!(a.closures_meet(&circle, &b));
        assert_eq!(exact_multiplicity(&circle, &[a, b]).0, 2);
    }

    #[test]
    fn cover_of_interval() {
        let line = TorusQuotient::new(1, 0).unwrap();
        let k = CompactRegion::from_boxes(
            &line,
            vec![RegionBox::new(vec![r(0, 1)], vec![r(1, 1)]).unwrap()],
        )
        .unwrap();
        let fam = NeighborhoodFamily::constant(0.3).unwrap();
        let cover = build_cover(&line, &k, &fam).unwrap();
        assert!(cover.multiplicity <= 2);
        let chk = verify_cover(&k, &fam, &cover, 10_000).unwrap();
        assert!(chk.passed(), "{chk:?}");
    }

    #[test]
    fn cover_of_torus() {
        let torus = TorusQuotient::new(2, 2).unwrap();
        let k = CompactRegion::whole(&torus).unwrap();
        let fam = NeighborhoodFamily::constant(0.4).unwrap();
        let cover = build_cover(&torus, &k, &fam).unwrap();
        assert_eq!(cover.multiplicity, 4);
        assert!(verify_cover(&k, &fam, &cover, 10_000).unwrap().passed());
    }

    #[test]
    fn cover_of_point() {
        let line = TorusQuotient::new(1, 0).unwrap();
        let k = CompactRegion::from_boxes(
            &line,
            vec![RegionBox::new(vec![r(1, 3)], vec![r(1, 3)]).unwrap()],
        )
        .unwrap();
        let fam = NeighborhoodFamily::constant(0.5).unwrap();
        let cover = build_cover(&line, &k, &fam).unwrap();
        assert_eq!(cover.boxes.len(), 1);
        assert_eq!(cover.multiplicity, 1);
    }

    #[test]
    fn variable_radius_family() {
        let plane = TorusQuotient::new(2, 1).unwrap();
        let k =
            CompactRegion::from_points(&plane, &[vec![0.1, 0.2], vec![0.7, -0.3]], 0.05).unwrap();
        let fam = NeighborhoodFamily::from_fn(0.2, |x| 0.2 + x[1].abs()).unwrap();
        let cover = build_cover(&plane, &k, &fam).unwrap();
        assert!(cover.multiplicity <= 4);
        assert!(verify_cover(&k, &fam, &cover, 10_000).unwrap().passed());
    }

    #[test]
    fn tiny_radius_is_a_resolution_error() {
        let line = TorusQuotient::new(1, 0).unwrap();
        let k = CompactRegion::from_points(&line, &[vec![0.0]], 0.0).unwrap();
        let fam = NeighborhoodFamily::constant(1e-14).unwrap();
        assert!(matches!(
            build_cover(&line, &k, &fam),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn json_widths_are_rational_strings() {
        let line = TorusQuotient::new(1, 0).unwrap();
        let k = CompactRegion::from_points(&line, &[vec![0.25]], 0.0).unwrap();
        let cover = build_cover(&line, &k, &NeighborhoodFamily::constant(0.5).unwrap()).unwrap();
        let v = serde_json::to_value(&cover).unwrap();
        let w = v["boxes"][0]["width"].as_str().unwrap();
        assert_eq!(w, "11/160");
        assert_eq!(cover.rows().len(), cover.boxes.len());
    }
}
