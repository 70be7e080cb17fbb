//! Role × label contingency tables and Pearson's chi-square test of
//! independence.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::protorole::{ProtoRole, TaggedSplit};
use crate::special::regularized_gamma;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_names: Vec<String>,
    pub col_names: Vec<String>,
    pub observed: Vec<Vec<u64>>,
    pub row_totals: Vec<u64>,
    pub col_totals: Vec<u64>,
    pub grand_total: u64,
}

impl ContingencyTable {
    pub fn new(row_names: Vec<String>, col_names: Vec<String>, observed: Vec<Vec<u64>>) -> Result<Self> {
        if observed.len() != row_names.len() {
            return Err(Error::InvalidArgument(format!(
                "{} row names for {} rows",
                row_names.len(),
                observed.len()
            )));
        }
        if let Some(row) = observed.iter().find(|r| r.len() != col_names.len()) {
            return Err(Error::InvalidArgument(format!(
                "row of width {} in a table with {} columns",
                row.len(),
                col_names.len()
            )));
        }
        let row_totals: Vec<u64> = observed.iter().map(|r| r.iter().sum()).collect();
        let col_totals: Vec<u64> = (0..col_names.len())
            .map(|j| observed.iter().map(|r| r[j]).sum())
            .collect();
        let grand_total = row_totals.iter().sum();
        Ok(ContingencyTable {
            row_names,
            col_names,
            observed,
            row_totals,
            col_totals,
            grand_total,
        })
    }

    /// Table with generated names `r0..`, `c0..`.
    pub fn from_counts(observed: Vec<Vec<u64>>) -> Result<Self> {
        let cols = observed.first().map_or(0, Vec::len);
        let rows = (0..observed.len()).map(|i| format!("r{i}")).collect();
        let cols = (0..cols).map(|j| format!("c{j}")).collect();
        ContingencyTable::new(rows, cols, observed)
    }

    pub fn n_rows(&self) -> usize {
        self.observed.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_names.len()
    }
}

/// 16 × 2 role-by-label table over matched records, rows in role order.
pub fn build_contingency(tagged: &TaggedSplit) -> Result<ContingencyTable> {
    let mut observed = vec![vec![0u64; 2]; ProtoRole::COUNT];
    for (tag, label) in tagged.iter() {
        if let Some(role) = tag {
            observed[role.index()][label.index()] += 1;
        }
    }
    let non_empty = observed.iter().filter(|r| r.iter().any(|&c| c > 0)).count();
    if non_empty < 2 {
        return Err(Error::TooFewRoles(non_empty));
    }
    ContingencyTable::new(
        ProtoRole::ALL.iter().map(|r| r.name().to_string()).collect(),
        Label::ALL.iter().map(|l| l.as_str().to_string()).collect(),
        observed,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    /// Same shape as the input table; dropped rows/columns hold 0.
    pub expected: Vec<Vec<f64>>,
    pub dropped_rows: Vec<String>,
    pub dropped_cols: Vec<String>,
}

impl ChiSquareResult {
    pub fn is_significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Pearson chi-square test of independence.
///
/// Rows or columns with a zero marginal are dropped before testing and listed
/// in the result; degrees of freedom are computed from what remains.
pub fn chi_square(table: &ContingencyTable) -> Result<ChiSquareResult> {
    if table.grand_total == 0 {
        return Err(Error::DegenerateTable("all cells are zero".into()));
    }
    let kept_rows: Vec<usize> = (0..table.n_rows()).filter(|&i| table.row_totals[i] > 0).collect();
    let kept_cols: Vec<usize> = (0..table.n_cols()).filter(|&j| table.col_totals[j] > 0).collect();
    if kept_rows.len() < 2 || kept_cols.len() < 2 {
        return Err(Error::DegenerateTable(format!(
            "{} non-empty rows and {} non-empty columns; need at least 2 of each",
            kept_rows.len(),
            kept_cols.len()
        )));
    }

    let n = table.grand_total as f64;
    let mut expected = vec![vec![0.0; table.n_cols()]; table.n_rows()];
    let mut statistic = 0.0;
    for &i in &kept_rows {
        for &j in &kept_cols {
            let e = table.row_totals[i] as f64 * table.col_totals[j] as f64 / n;
            let d = table.observed[i][j] as f64 - e;
            statistic += d * d / e;
            expected[i][j] = e;
        }
    }

    let df = ((kept_rows.len() - 1) * (kept_cols.len() - 1)) as u32;
    let p_value = chi_square_sf(statistic, df)?;
    let dropped = |names: &[String], totals: &[u64]| {
        names
            .iter()
            .zip(totals)
            .filter(|(_, &t)| t == 0)
            .map(|(n, _)| n.clone())
            .collect()
    };
    Ok(ChiSquareResult {
        statistic,
        df,
        p_value,
        expected,
        dropped_rows: dropped(&table.row_names, &table.row_totals),
        dropped_cols: dropped(&table.col_names, &table.col_totals),
    })
}

/// Upper tail of the chi-square distribution, `Q(df/2, x/2)`.
pub fn chi_square_sf(x: f64, df: u32) -> Result<f64> {
    check_chi_args(x, df)?;
    Ok(regularized_gamma(df as f64 / 2.0, x / 2.0)?.1)
}

/// Lower tail of the chi-square distribution, `P(df/2, x/2)`.
pub fn chi_square_cdf(x: f64, df: u32) -> Result<f64> {
    check_chi_args(x, df)?;
    Ok(regularized_gamma(df as f64 / 2.0, x / 2.0)?.0)
}

fn check_chi_args(x: f64, df: u32) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite chi-square value {x}")));
    }
    if x < 0.0 {
        return Err(Error::InvalidArgument(format!("negative chi-square value {x}")));
    }
    if df == 0 {
        return Err(Error::InvalidArgument("degrees of freedom must be positive".into()));
    }
    Ok(())
}

/// p-value as shown in human-readable output.
pub fn format_p_value(p: f64) -> String {
    if p < 1e-15 {
        "< 1e-15".to_string()
    } else {
        format!("{p:.4e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protorole::TaggedSplit;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_hand_value() {
        let t = ContingencyTable::from_counts(vec![vec![10, 20], vec![20, 10]]).unwrap();
        let r = chi_square(&t).unwrap();
        // every E is 15; 4 × 25/15
        assert_relative_eq!(r.statistic, 20.0 / 3.0, epsilon = 1e-12);
        assert_eq!(r.df, 1);
        assert!(r.expected.iter().flatten().all(|&e| e == 15.0));
        // Oracle: erfc(sqrt(10/3)) from an independent tail integration,
        // 0.0098232745
        assert_relative_eq!(r.p_value, 0.009_823_274_507_519_2, epsilon = 1e-10);
    }

    #[test]
    fn independent_table_has_zero_statistic() {
        let t = ContingencyTable::from_counts(vec![vec![2, 4], vec![5, 10], vec![1, 2]]).unwrap();
        let r = chi_square(&t).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.df, 2);
    }

    #[test]
    fn zero_rows_are_dropped() {
        let t = ContingencyTable::from_counts(vec![vec![10, 20], vec![0, 0], vec![20, 10]]).unwrap();
        let r = chi_square(&t).unwrap();
        assert_eq!(r.df, 1);
        assert_eq!(r.dropped_rows, vec!["r1".to_string()]);
        assert_relative_eq!(r.statistic, 20.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_tables_error() {
        let zero = ContingencyTable::from_counts(vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert!(matches!(chi_square(&zero), Err(Error::DegenerateTable(_))));
        let one_col = ContingencyTable::from_counts(vec![vec![3, 0], vec![4, 0]]).unwrap();
        assert!(matches!(chi_square(&one_col), Err(Error::DegenerateTable(_))));
        assert!(ContingencyTable::from_counts(vec![vec![1, 2], vec![3]]).is_err());
    }

    #[test]
    fn build_from_tagged() {
        let mut assignments = vec![(Some(ProtoRole::Instigation), Label::Entailed); 10];
        assignments.extend(vec![(Some(ProtoRole::Volition), Label::NotEntailed); 10]);
        assignments.push((None, Label::Entailed));
        let tagged = TaggedSplit::from_assignments("train", assignments);
        let t = build_contingency(&tagged).unwrap();
        assert_eq!(t.n_rows(), 16);
        assert_eq!(t.observed[0], vec![10, 0]);
        assert_eq!(t.observed[1], vec![0, 10]);
        assert!(t.observed[2..].iter().all(|r| r == &vec![0, 0]));
        assert_eq!(t.grand_total, 20);

        let r = chi_square(&t).unwrap();
        assert_eq!(r.df, 1);
        assert_eq!(r.dropped_rows.len(), 14);
    }

    #[test]
    fn build_rejects_empty_or_single_role() {
        let empty = TaggedSplit::from_assignments("train", vec![]);
        assert!(matches!(build_contingency(&empty), Err(Error::TooFewRoles(0))));
        let one = TaggedSplit::from_assignments("train", vec![(Some(ProtoRole::Sentient), Label::Entailed)]);
        assert!(matches!(build_contingency(&one), Err(Error::TooFewRoles(1))));
    }

    #[test]
    fn sf_fixed_points() {
        for df in 1..=40 {
            assert_eq!(chi_square_sf(0.0, df).unwrap(), 1.0);
        }
        assert_relative_eq!(chi_square_sf(2.0, 2).unwrap(), (-1.0f64).exp(), epsilon = 1e-12);
        assert!(chi_square_sf(f64::NAN, 3).is_err());
        assert!(chi_square_sf(1.0, 0).is_err());
        assert!(chi_square_sf(-1.0, 3).is_err());
    }

    #[test]
    fn p_value_display() {
        assert_eq!(format_p_value(0.0), "< 1e-15");
        assert_eq!(format_p_value(1e-16), "< 1e-15");
        assert_eq!(format_p_value(0.5), "5.0000e-1");
    }

    fn small_table() -> impl Strategy<Value = Vec<Vec<u64>>> {
        (2usize..5, 2usize..4).prop_flat_map(|(r, c)| {
            prop::collection::vec(prop::collection::vec(1u64..50, c), r)
        })
    }

    proptest! {
        #[test]
        fn expected_mass_matches_observed(obs in small_table()) {
            let t = ContingencyTable::from_counts(obs).unwrap();
            let r = chi_square(&t).unwrap();
            let e: f64 = r.expected.iter().flatten().sum();
            prop_assert!((e - t.grand_total as f64).abs() <= 1e-9 * t.grand_total as f64);
            prop_assert!(r.statistic >= 0.0);
            prop_assert!((0.0..=1.0).contains(&r.p_value));
            prop_assert_eq!(r.df as usize, (t.n_rows() - 1) * (t.n_cols() - 1));
        }

        #[test]
        fn permutation_invariant(obs in small_table(), rot in 0usize..5, swap_cols in any::<bool>()) {
            let base = chi_square(&ContingencyTable::from_counts(obs.clone()).unwrap()).unwrap();
            let mut permuted = obs;
            let k = rot % permuted.len();
            permuted.rotate_left(k);
            if swap_cols {
                for row in &mut permuted {
                    row.reverse();
                }
            }
            let other = chi_square(&ContingencyTable::from_counts(permuted).unwrap()).unwrap();
            prop_assert!((base.statistic - other.statistic).abs() <= 1e-12 * base.statistic.max(1.0));
        }

        #[test]
        fn scaling_scales_statistic(obs in small_table(), k in 1u64..10) {
            let base = chi_square(&ContingencyTable::from_counts(obs.clone()).unwrap()).unwrap();
            let scaled: Vec<Vec<u64>> = obs.iter().map(|r| r.iter().map(|c| c * k).collect()).collect();
            let other = chi_square(&ContingencyTable::from_counts(scaled).unwrap()).unwrap();
            let want = base.statistic * k as f64;
            prop_assert!((other.statistic - want).abs() <= 1e-10 * want.max(1.0));
        }

        #[test]
        fn tails_are_complementary(x in 0.0f64..100.0, df in 1u32..=30) {
            let s = chi_square_sf(x, df).unwrap();
            let c = chi_square_cdf(x, df).unwrap();
            prop_assert!((s + c - 1.0).abs() <= 1e-10);
        }

        #[test]
        fn df2_closed_form(x in 0.0f64..50.0) {
            let s = chi_square_sf(x, 2).unwrap();
            prop_assert!((s - (-x / 2.0).exp()).abs() <= 1e-12);
        }

        #[test]
        fn sf_is_monotone(x in 0.0f64..80.0, dx in 0.0f64..5.0, df in 1u32..=30) {
            let a = chi_square_sf(x, df).unwrap();
            let b = chi_square_sf(x + dx, df).unwrap();
            prop_assert!(b <= a + 1e-15);
        }
    }
}
