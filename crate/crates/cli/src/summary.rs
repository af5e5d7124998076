use std::io::Write;

use anyhow::Result;

pub const SUMMARY_CSV_HEADER: &str =
    "variant,param,v_cycles,total_coarse_iters,err_anorm,matches_exact,least_work";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Exact coarsest-level solve; what the others are compared with.
    Baseline,
    /// A member of the relative-residual τ sweep.
    Sweep,
    /// Any other coarse solver.
    Other,
}

/// One finest-level run in a summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// `problem/theta=…`; flags are computed within a group.
    pub group: String,
    /// Solver label within the group, e.g. `exact`, `relres`, `GR`.
    pub label: String,
    pub kind: RowKind,
    pub param: Option<f64>,
    /// `None` when the run failed or never reached the finest tolerance.
    pub v_cycles: Option<usize>,
    pub total_coarse_iters: Option<usize>,
    pub err_anorm: Option<f64>,
    pub matches_exact: bool,
    pub least_work: bool,
}

impl SummaryRow {
    pub fn variant(&self) -> String {
        format!("{}/{}", self.group, self.label)
    }
}

/// Sets `matches_exact` (same cycle count as the group's baseline) and marks
/// the matching sweep member with the fewest coarse iterations as
/// `least_work`; ties go to the earlier row, i.e. the looser tolerance.
pub fn flag_rows(rows: &mut [SummaryRow]) {
    let mut groups: Vec<String> = rows.iter().map(|r| r.group.clone()).collect();
    groups.dedup();
    for g in groups {
        let baseline = rows
            .iter()
            .find(|r| r.group == g && r.kind == RowKind::Baseline)
            .and_then(|r| r.v_cycles);
        let mut best: Option<(usize, usize)> = None;
        for (i, r) in rows.iter_mut().enumerate().filter(|(_, r)| r.group == g) {
            r.matches_exact = baseline.is_some() && r.v_cycles == baseline;
            r.least_work = false;
            if r.kind == RowKind::Sweep && r.matches_exact {
                let work = r.total_coarse_iters.unwrap_or(usize::MAX);
                if best.is_none_or(|(_, w)| work < w) {
                    best = Some((i, work));
                }
            }
        }
        if let Some((i, _)) = best {
            rows[i].least_work = true;
        }
    }
}

fn opt<T: std::fmt::LowerExp>(v: Option<T>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn write_summary<W: Write>(mut out: W, comments: &[String], rows: &[SummaryRow]) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{SUMMARY_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.variant(),
            opt(r.param),
            r.v_cycles.map(|v| v.to_string()).unwrap_or_default(),
            r.total_coarse_iters
                .map(|v| v.to_string())
                .unwrap_or_default(),
            opt(r.err_anorm),
            r.matches_exact,
            r.least_work
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(
        group: &str,
        kind: RowKind,
        param: Option<f64>,
        cycles: usize,
        work: usize,
    ) -> SummaryRow {
        SummaryRow {
            group: group.into(),
            label: "x".into(),
            kind,
            param,
            v_cycles: Some(cycles),
            total_coarse_iters: Some(work),
            err_anorm: Some(1e-5),
            matches_exact: false,
            least_work: false,
        }
    }

    #[test]
    fn flags_per_group() {
        let mut rows = vec![
            row("a", RowKind::Baseline, None, 2, 0),
            row("a", RowKind::Sweep, Some(0.5), 3, 10),
            row("a", RowKind::Sweep, Some(0.25), 2, 14),
            row("a", RowKind::Sweep, Some(0.125), 2, 14),
            row("a", RowKind::Other, Some(1e-5), 2, 1),
            row("b", RowKind::Baseline, None, 9, 0),
            row("b", RowKind::Sweep, Some(0.5), 10, 50),
        ];
        flag_rows(&mut rows);
        let matches: Vec<bool> = rows.iter().map(|r| r.matches_exact).collect();
        assert_eq!(matches, vec![true, false, true, true, true, true, false]);
        let least: Vec<bool> = rows.iter().map(|r| r.least_work).collect();
        assert_eq!(least, vec![false, false, true, false, false, false, false]);
    }

    fn arb_rows() -> impl Strategy<Value = Vec<SummaryRow>> {
        let kind = prop_oneof![
            Just(RowKind::Baseline),
            Just(RowKind::Sweep),
            Just(RowKind::Other)
        ];
        proptest::collection::vec(
            (0..3usize, kind, proptest::option::of(1..5usize), 0..50usize),
            0..30,
        )
        .prop_map(|spec| {
            let mut rows: Vec<SummaryRow> = spec
                .into_iter()
                .map(|(g, kind, cycles, work)| {
                    let mut r = row(&format!("g{g}"), kind, None, 0, work);
                    r.v_cycles = cycles;
                    r
                })
                .collect();
            rows.sort_by(|a, b| a.group.cmp(&b.group));
            rows
        })
    }

    proptest! {
        #[test]
        fn least_work_is_unique_and_minimal(mut rows in arb_rows()) {
            flag_rows(&mut rows);
            for g in ["g0", "g1", "g2"] {
                let group: Vec<&SummaryRow> = rows.iter().filter(|r| r.group == g).collect();
                let flagged: Vec<&&SummaryRow> = group.iter().filter(|r| r.least_work).collect();
                prop_assert!(flagged.len() <= 1);
                let candidates: Vec<usize> = group
                    .iter()
                    .filter(|r| r.kind == RowKind::Sweep && r.matches_exact)
                    .filter_map(|r| r.total_coarse_iters)
                    .collect();
                prop_assert_eq!(flagged.len(), usize::from(!candidates.is_empty()));
                if let Some(f) = flagged.first() {
                    prop_assert!(f.kind == RowKind::Sweep && f.matches_exact);
                    prop_assert_eq!(f.total_coarse_iters, candidates.iter().min().copied());
                }
                for r in &group {
                    prop_assert!(!r.matches_exact || r.v_cycles.is_some());
                }
            }
        }
    }

    #[test]
    fn csv_layout() {
        let mut r = row("poisson/theta=1e-4", RowKind::Sweep, Some(0.0625), 2, 31);
        r.matches_exact = true;
        r.v_cycles = None;
        let mut buf = Vec::new();
        write_summary(&mut buf, &["levels=4".into()], &[r]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# levels=4\n\
             variant,param,v_cycles,total_coarse_iters,err_anorm,matches_exact,least_work\n\
             poisson/theta=1e-4/x,6.25e-2,,31,1e-5,true,false\n"
        );
    }
}
