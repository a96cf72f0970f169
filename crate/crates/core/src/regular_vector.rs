//! Choosing a vector of `span(S)` on which finitely many functionals are
//! all nonzero.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|lambda(v)| <= MARGIN * |lambda| * |v|` counts as zero.
pub const MARGIN: f64 = 1e-12;
/// Extra candidates tried past the root-count bound when the float margin
/// rejects an exactly nonzero value.
const EXTRA_CANDIDATES: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceInstance {
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
    #[serde(rename = "T")]
    pub t_dual: Vec<Vec<f64>>,
}

impl AvoidanceInstance {
    pub fn new(s: Vec<Vec<f64>>, t_dual: Vec<Vec<f64>>) -> Result<Self> {
        let inst = Self { s, t_dual };
        inst.validate()?;
        Ok(inst)
    }

    pub fn dimension(&self) -> usize {
        self.s.first().or(self.t_dual.first()).map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dimension();
        if self.s.is_empty() {
            return Err(Error::Argument("S must be nonempty".into()));
        }
        if self.s.iter().chain(&self.t_dual).any(|v| v.len() != d) {
            return Err(Error::Argument(
                "vectors and covectors must share the dimension".into(),
            ));
        }
        if self
            .s
            .iter()
            .chain(&self.t_dual)
            .flatten()
            .any(|x| !x.is_finite())
        {
            return Err(Error::Argument("entries must be finite".into()));
        }
        Ok(())
    }
}

fn exact(v: &[f64]) -> Vec<BigRational> {
    v.iter()
        .map(|&x| BigRational::from_float(x).expect("validated finite"))
        .collect()
}

fn pairing(l: &[BigRational], v: &[BigRational]) -> BigRational {
    l.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Whether `v` clears every functional with the relative margin.
pub fn passes_margin(t_dual: &[Vec<f64>], v: &[f64]) -> bool {
    let nv = norm(v);
    t_dual.iter().all(|l| {
        let lv: f64 = l.iter().zip(v).map(|(a, b)| a * b).sum();
        lv.abs() > MARGIN * norm(l) * nv
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularVector {
    pub v: Vec<f64>,
    /// The `t` with `v = sum_i t^i s_i`.
    pub t: u64,
    pub min_relative_value: f64,
}

/// `v = sum_i t^i s_i` for the smallest positive integer `t` with every
/// `lambda(v) != 0`.
pub fn find_regular_vector(inst: &AvoidanceInstance) -> Result<RegularVector> {
    inst.validate()?;
    let s: Vec<Vec<BigRational>> = inst.s.iter().map(|v| exact(v)).collect();
    let ls: Vec<Vec<BigRational>> = inst.t_dual.iter().map(|v| exact(v)).collect();
    for (j, l) in ls.iter().enumerate() {
        if s.iter().all(|v| pairing(l, v).is_zero()) {
            return Err(Error::Precondition(format!(
                "functional T[{j}] = {:?} vanishes on all of S",
                inst.t_dual[j]
            )));
        }
    }
    let bound = (inst.s.len() * inst.t_dual.len()) as u64 + 1;
    let d = inst.dimension();
    for t in 1..=bound + EXTRA_CANDIDATES {
        let tt = BigRational::from_integer(BigInt::from(t));
        let mut v = vec![BigRational::zero(); d];
        let mut power = BigRational::from_integer(BigInt::from(1));
        for si in &s {
            for (vk, sk) in v.iter_mut().zip(si) {
                *vk += &power * sk;
            }
            power *= &tt;
        }
        if ls.iter().any(|l| pairing(l, &v).is_zero()) {
            continue;
        }
        let vf: Vec<f64> = v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
        if vf.iter().all(|x| x.is_finite()) && passes_margin(&inst.t_dual, &vf) {
            let nv = norm(&vf);
            let min_relative_value = inst
                .t_dual
                .iter()
                .map(|l| {
                    let lv: f64 = l.iter().zip(&vf).map(|(a, b)| a * b).sum();
                    lv.abs() / (norm(l) * nv)
                })
                .fold(f64::INFINITY, f64::min);
            return Ok(RegularVector {
                v: vf,
                t,
                min_relative_value,
            });
        }
    }
    Err(Error::Resolution(
        "every candidate falls inside the floating-point margin".into(),
    ))
}

/// Scans integer combinations with coefficients in `[-grid, grid]`.
pub fn brute_force_avoidance_oracle(
    inst: &AvoidanceInstance,
    grid: i64,
) -> Result<Option<Vec<f64>>> {
    inst.validate()?;
    let k = inst.s.len();
    if k > 3 {
        return Err(Error::Argument(
            "the oracle handles at most 3 vectors".into(),
        ));
    }
    if grid < 1 {
        return Err(Error::Argument("grid must be at least 1".into()));
    }
    let side = (2 * grid + 1) as usize;
    let d = inst.dimension();
    for code in 0..side.pow(k as u32) {
        let mut c = code;
        let mut v = vec![0.0; d];
        let mut nonzero = false;
        for si in &inst.s {
            let coef = (c % side) as i64 - grid;
            c /= side;
            nonzero |= coef != 0;
            for (vk, sk) in v.iter_mut().zip(si) {
                *vk += coef as f64 * sk;
            }
        }
        if nonzero && passes_margin(&inst.t_dual, &v) {
            return Ok(Some(v));
        }
    }
    Ok(None)
}
