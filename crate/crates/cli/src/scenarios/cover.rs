use fiberwise::box_cover::{
    build_cover, verify_cover, CompactRegion, CoverResult, NeighborhoodFamily, RegionBox,
    TorusQuotient,
};
use fiberwise::corpus::{self, streams};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Deserialize;

use super::unknown_corpus;
use crate::config::{Fixture, ScenarioConfig};
use crate::fixtures::inline;
use crate::report::{Outcome, Table};
use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverParams {
    #[serde(default = "default_samples")]
    max_samples: usize,
}

fn default_samples() -> usize {
    20_000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxDoc {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoverDoc {
    n: usize,
    m: usize,
    radius: f64,
    #[serde(default)]
    boxes: Vec<BoxDoc>,
    #[serde(default)]
    points: Vec<Vec<f64>>,
    #[serde(default)]
    fatten: f64,
}

/// Every width equals `11/10 * 2^-k`, checked in rationals.
fn thickening_exact(cover: &CoverResult) -> bool {
    let scale = BigRational::from_integer(BigInt::from(1u64) << cover.k_final);
    let target = BigRational::new(BigInt::from(11), BigInt::from(10));
    cover.boxes.iter().all(|b| &b.width * &scale == target)
}

fn check_cover(
    out: &mut Outcome,
    label: &str,
    region: &CompactRegion,
    family: &NeighborhoodFamily,
    cover: &CoverResult,
    max_samples: usize,
) -> Result<(), CliError> {
    let check = verify_cover(region, family, cover, max_samples)?;
    let bound = cover.bound();
    out.checks
        .check("multiplicity-bound", cover.multiplicity <= bound, || {
            format!(
                "{label}: multiplicity {} exceeds {bound}",
                cover.multiplicity
            )
        });
    out.checks
        .check("subordination", check.subordinated == check.total, || {
            format!(
                "{label}: {} of {} boxes subordinated",
                check.subordinated, check.total
            )
        });
    out.checks.check(
        "coverage",
        check.coverage_certified && check.samples_uncovered == 0,
        || format!("{label}: {} uncovered samples", check.samples_uncovered),
    );
    out.checks.check(
        "thickening-exact",
        check.thickening_exact && thickening_exact(cover),
        || format!("{label}: a width differs from 11/10 * 2^-{}", cover.k_final),
    );
    Ok(())
}

pub fn cover(config: &ScenarioConfig) -> Result<Outcome, CliError> {
    let p: CoverParams = config.params()?;
    let mut out = Outcome::default();
    match config.fixture()? {
        Fixture::Inline(v) => {
            let doc: CoverDoc = inline(v)?;
            let space = TorusQuotient::new(doc.n, doc.m)?;
            let region = if doc.boxes.is_empty() {
                CompactRegion::from_points(&space, &doc.points, doc.fatten)?
            } else {
                let boxes = doc
                    .boxes
                    .iter()
                    .map(|b| RegionBox::from_f64(&b.lo, &b.hi))
                    .collect::<fiberwise::Result<Vec<_>>>()?;
                CompactRegion::from_boxes(&space, boxes)?
            };
            let family = NeighborhoodFamily::constant(doc.radius)?;
            let cover = build_cover(&space, &region, &family)?;
            check_cover(&mut out, "inline", &region, &family, &cover, p.max_samples)?;
            let mut table = Table::new(
                "cover",
                &["box_id", "center", "width", "witness", "overlap_count"],
            );
            for r in cover.rows() {
                table.push(vec![
                    r.box_id.to_string(),
                    r.center.join(";"),
                    r.width,
                    r.witness.join(";"),
                    r.overlap_count.to_string(),
                ]);
            }
            out.result("boxes", cover.boxes.len());
            out.result("k_initial", cover.k_initial);
            out.result("k_final", cover.k_final);
            out.result("multiplicity", cover.multiplicity);
            out.result("bound", cover.bound());
            out.tables.push(table);
        }
        Fixture::Corpus { kind, count, start } => {
            if kind != "regions" {
                return Err(unknown_corpus(config.scenario, kind));
            }
            out.streams.insert("cover".into(), streams::COVER);
            let mut table = Table::new(
                "covers",
                &[
                    "instance",
                    "n",
                    "m",
                    "boxes",
                    "k_initial",
                    "k_final",
                    "multiplicity",
                    "bound",
                ],
            );
            for i in *start..*start + *count {
                let inst = corpus::cover_instance(config.seed, i)?;
                let cover = build_cover(&inst.space, &inst.region, &inst.family)?;
                check_cover(
                    &mut out,
                    &format!("region-{i}"),
                    &inst.region,
                    &inst.family,
                    &cover,
                    p.max_samples,
                )?;
                table.push(vec![
                    i.to_string(),
                    inst.space.n.to_string(),
                    inst.space.m.to_string(),
                    cover.boxes.len().to_string(),
                    cover.k_initial.to_string(),
                    cover.k_final.to_string(),
                    cover.multiplicity.to_string(),
                    cover.bound().to_string(),
                ]);
            }
            out.result("regions", count);
            out.tables.push(table);
        }
    }
    Ok(out)
}
