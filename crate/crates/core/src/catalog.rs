//! Batch runs over a catalog of `(profile, m, reports)` entries.
//!
//! Catalog files are a JSON array:
//!
//! ```json
//! [{"profile": {"family": "A", "rank": 1, "p": 3, "e": 1, "f": 1},
//!   "m": 1, "reports": ["vanishing", "ext"]}]
//! ```
//!
//! Entries are processed concurrently; the report keeps catalog order and
//! depends only on the catalog and the run configuration.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{
    block_convolution_all_degrees, frattini_rank_oracle, per_z_resvan_oracle, random_fp_matrix,
    wedge_rank_oracle, OracleCaps, OracleReport,
};
use crate::padic::{sample_rng, verify_uniform, UniformConfig, UniformReport};
use crate::rootdata::{top_dimension, GroupProfile, ProfileSpec};
use crate::transition::{
    diagonal_vanishing_with_box, strict_inclusion_check, vanishing_table_with_ladder, ExtTable,
    StrictInclusion, VanishingTable,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Vanishing,
    Ext,
    Diagonal,
    Uniformity,
    Oracles,
}

fn default_reports() -> Vec<ReportKind> {
    vec![ReportKind::Vanishing]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub profile: ProfileSpec,
    pub m: i64,
    #[serde(default = "default_reports")]
    pub reports: Vec<ReportKind>,
}

/// Parses and validates a catalog; errors carry the offending entry and field.
pub fn parse_catalog(text: &str) -> Result<Vec<CatalogEntry>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let entries: Vec<CatalogEntry> = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        Error::Catalog(format!(
            "{} at line {} column {}: {inner}",
            e.path(),
            inner.line(),
            inner.column()
        ))
    })?;
    for (k, entry) in entries.iter().enumerate() {
        let profile = GroupProfile::from_spec(&entry.profile)
            .map_err(|e| Error::Catalog(format!("[{k}].profile: {e}")))?;
        profile
            .check_level(entry.m)
            .map_err(|e| Error::Catalog(format!("[{k}].m: {e}")))?;
    }
    Ok(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    /// Working p-adic precision `N`.
    pub precision: i32,
    pub box_bound: u64,
    pub ladder: usize,
    /// Worker threads; 0 picks the machine default.
    pub jobs: usize,
    /// Samples per uniformity check.
    pub samples: usize,
    /// Largest top dimension for the block-enumeration oracle.
    pub oracle_top_dimension: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            precision: 12,
            box_bound: 4,
            ladder: 3,
            jobs: 0,
            samples: 200,
            oracle_top_dimension: 28,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VanishingReport {
    pub table: VanishingTable,
    /// Nonvanishing exactly in degrees `0..=i₀`.
    pub threshold_sharp: bool,
    pub strict_inclusion: StrictInclusion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiagonalRow {
    pub i: u64,
    pub vanishes: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleSection {
    pub reports: Vec<OracleReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryReport {
    pub profile: ProfileSpec,
    pub m: i64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vanishing: Option<VanishingReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ext: Option<ExtTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<Vec<DiagonalRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniformity: Option<Vec<UniformReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracles: Option<OracleSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogReport {
    pub config: RunConfig,
    pub all_passed: bool,
    pub entries: Vec<EntryReport>,
}

/// Runs every requested report. `Err` means invalid input; failed checks are
/// recorded in the entry reports.
pub fn run_catalog(entries: &[CatalogEntry], cfg: &RunConfig) -> Result<CatalogReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidQuery(format!("thread pool: {e}")))?;
    let reports: Vec<Result<EntryReport>> = pool.install(|| {
        entries
            .par_iter()
            .map(|entry| run_entry(entry, cfg))
            .collect()
    });
    let entries = reports.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CatalogReport {
        config: *cfg,
        all_passed: entries.iter().all(|e| e.passed),
        entries,
    })
}

pub fn run_entry(entry: &CatalogEntry, cfg: &RunConfig) -> Result<EntryReport> {
    let profile = GroupProfile::from_spec(&entry.profile)?.into_shared();
    profile.check_level(entry.m)?;
    let m = entry.m;
    let mut report = EntryReport {
        profile: profile.spec(),
        m,
        passed: true,
        failures: Vec::new(),
        vanishing: None,
        ext: None,
        diagonal: None,
        uniformity: None,
        oracles: None,
    };
    let wants = |k| entry.reports.contains(&k);
    let needs_table = wants(ReportKind::Vanishing) || wants(ReportKind::Ext);
    let table = if needs_table {
        Some(vanishing_table_with_ladder(&profile, m, cfg.ladder)?)
    } else {
        None
    };
    if wants(ReportKind::Vanishing) {
        let table = table.clone().expect("table computed");
        let threshold_sharp = table
            .table
            .iter()
            .all(|row| row.nonvanishing == (row.i <= table.i0));
        if !table.consistent {
            report
                .failures
                .push("vanishing: ladder rungs disagree or a witness dies".into());
        }
        if !threshold_sharp {
            report.failures.push(format!(
                "vanishing: nonvanishing degrees are not exactly 0..={}",
                table.i0
            ));
        }
        let strict_inclusion = strict_inclusion_check(&profile, m, m, m + profile.e() as i64)?;
        if top_dimension(&profile) > 0 && !strict_inclusion.holds {
            report
                .failures
                .push("vanishing: no factor certifies strict inclusion".into());
        }
        report.vanishing = Some(VanishingReport {
            table,
            threshold_sharp,
            strict_inclusion,
        });
    }
    if wants(ReportKind::Ext) {
        let t = table.expect("table computed");
        let ext = ExtTable::from(t.clone());
        if ext
            .table
            .iter()
            .zip(&t.table)
            .any(|(x, v)| x.ext_nonzero != v.nonvanishing)
        {
            report
                .failures
                .push("ext: table differs from the vanishing table".into());
        }
        report.ext = Some(ext);
    }
    if wants(ReportKind::Diagonal) {
        let rows = (0..=top_dimension(&profile) + 1)
            .map(|i| {
                Ok(DiagonalRow {
                    i,
                    vanishes: diagonal_vanishing_with_box(&profile, i, m, cfg.box_bound)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.iter().any(|r| r.vanishes != (r.i > 0)) {
            report.failures.push(
                "diagonal: transition survives in positive degree or dies in degree 0".into(),
            );
        }
        report.diagonal = Some(rows);
    }
    if wants(ReportKind::Uniformity) {
        let reports = uniformity_reports(&profile, m, cfg)?;
        for r in &reports {
            if !r.all_passed() {
                report.failures.push(format!(
                    "uniformity: {} failures for GL_{}",
                    r.failed, r.config.size
                ));
            }
        }
        report.uniformity = Some(reports);
    }
    if wants(ReportKind::Oracles) {
        let section = oracle_section(&profile, m, cfg)?;
        for r in section.reports.iter().filter(|r| !r.agreement) {
            report
                .failures
                .push(format!("oracle {} disagrees on {}", r.oracle, r.instance));
        }
        report.oracles = Some(section);
    }
    report.passed = report.failures.is_empty();
    Ok(report)
}

/// Congruence level `m` over `𝔒` is level `m/e` over `ℤ_p` after restriction
/// of scalars; the sweeps run in `GL_2` and `GL_3` at that level.
fn uniformity_reports(
    profile: &GroupProfile,
    m: i64,
    cfg: &RunConfig,
) -> Result<Vec<UniformReport>> {
    let level = (m / profile.e() as i64) as i32;
    [2usize, 3]
        .iter()
        .map(|&size| {
            verify_uniform(&UniformConfig {
                p: profile.p(),
                size,
                level,
                samples: cfg.samples,
                precision: cfg.precision,
                seed: cfg.seed,
                max_slack: 3,
            })
        })
        .collect()
}

fn oracle_section(profile: &Arc<GroupProfile>, m: i64, cfg: &RunConfig) -> Result<OracleSection> {
    let caps = OracleCaps {
        top_dimension: cfg.oracle_top_dimension,
        box_bound: cfg.box_bound,
        ..OracleCaps::default()
    };
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    match block_convolution_all_degrees(profile, &caps) {
        Ok(r) => reports.extend(r),
        Err(Error::CapExceeded(why)) => skipped.push(format!("block_convolution: {why}")),
        Err(e) => return Err(e),
    }
    let (e, f) = (profile.e(), profile.f());
    let mut deltas: Vec<u64> = profile
        .roots()
        .reduced_positive()
        .iter()
        .map(|r| profile.factor_dim_f(r))
        .collect();
    deltas.push(profile.torus_rank() as u64);
    deltas.sort_unstable();
    deltas.dedup();
    for delta in deltas.into_iter().filter(|&d| d <= 3) {
        for s in m..=m + 2 * e as i64 {
            for gap in 0..=2 * e as i64 {
                reports.push(frattini_rank_oracle(profile.p(), s, s + gap, e, f, delta)?);
            }
        }
    }
    let mut rng = sample_rng(cfg.seed, 100, 0);
    for _ in 0..20 {
        use rand::Rng;
        let (rows, cols) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let rank = rng.gen_range(0..=rows.min(cols));
        let a = rng.gen_range(0..=rows.min(cols));
        let mat = random_fp_matrix(&mut rng, profile.p(), rows, cols, rank);
        reports.push(wedge_rank_oracle(&mat, a, &caps)?);
    }
    let e = e as i64;
    for n_prime in [m + e, m + 2 * e] {
        for i in 0..=top_dimension(profile) + 1 {
            match per_z_resvan_oracle(profile, i, m, m, n_prime, &caps) {
                Ok(r) => reports.push(OracleReport::from(&r)),
                Err(Error::CapExceeded(why)) => {
                    skipped.push(format!("per_z_resvan i = {i}: {why}"))
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(OracleSection { reports, skipped })
}

/// Human-readable one-line-per-entry summary.
pub fn summary_table(report: &CatalogReport) -> String {
    let mut out = String::new();
    for entry in &report.entries {
        let s = &entry.profile;
        let _ = write!(
            out,
            "{}{} p={} e={} f={} m={}",
            s.family, s.rank, s.p, s.e, s.f, entry.m
        );
        if let Some(v) = &entry.vanishing {
            let cells: String = v
                .table
                .table
                .iter()
                .map(|r| if r.nonvanishing { 'T' } else { 'F' })
                .collect();
            let _ = write!(out, "  i0={} d={}  {cells}", v.table.i0, v.table.d);
        }
        let _ = writeln!(out, "  {}", if entry.passed { "ok" } else { "FAILED" });
        for f in &entry.failures {
            let _ = writeln!(out, "    {f}");
        }
    }
    out
}
