use std::fmt;

use serde::{Deserialize, Serialize};

use super::DcfError;
use crate::data::Group;
use crate::stats::{fisher_exact, two_proportion_z};

/// Which test produced an AR-difference p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArTest {
    /// Pooled-variance two-proportion z-test.
    ZTest,
    /// Fisher exact test, used when any cell of the 2×2 table is below 5.
    Fisher,
}

/// Achievement-rate gap between G1 (g = −1) and G2 (g = +1) in one course.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArDeltaResult {
    pub course_id: String,
    pub ar_g1: f64,
    pub ar_g2: f64,
    /// `ar_g1 − ar_g2`.
    pub ar_delta: f64,
    pub p_value: f64,
    pub significant_fdr: bool,
    pub n_g1: usize,
    pub n_g2: usize,
    pub test: ArTest,
}

/// Computes AR_G1, AR_G2, their difference and a two-sided test of
/// equality. `significant_fdr` is left false; the caller sets it after
/// adjusting across courses.
pub fn ar_delta_test(course_id: &str, responses: &[(bool, Group)]) -> Result<ArDeltaResult, DcfError> {
    let (mut n1, mut k1, mut n2, mut k2) = (0u64, 0u64, 0u64, 0u64);
    for &(x, g) in responses {
        match g {
            Group::Neg => {
                n1 += 1;
                k1 += x as u64;
            }
            Group::Pos => {
                n2 += 1;
                k2 += x as u64;
            }
        }
    }
    if n1 == 0 || n2 == 0 {
        return Err(DcfError::EmptyGroup { course: course_id.to_string() });
    }
    let ar_g1 = k1 as f64 / n1 as f64;
    let ar_g2 = k2 as f64 / n2 as f64;
    let small_cell = [k1, n1 - k1, k2, n2 - k2].iter().any(|c| *c < 5);
    let (p_value, test) = if small_cell {
        (fisher_exact(k1, n1 - k1, k2, n2 - k2), ArTest::Fisher)
    } else {
        (two_proportion_z(k1, n1, k2, n2), ArTest::ZTest)
    };
    Ok(ArDeltaResult {
        course_id: course_id.to_string(),
        ar_g1,
        ar_g2,
        ar_delta: ar_g1 - ar_g2,
        p_value,
        significant_fdr: false,
        n_g1: n1 as usize,
        n_g2: n2 as usize,
        test,
    })
}

/// Relationship between trait gap, AR gap and DCF for one course.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseLabel {
    /// No trait gap, no AR gap.
    I,
    /// Trait gap without an AR gap: differing groups achieve equally.
    II,
    /// AR gap without a trait gap: the AR gap is course functioning.
    III,
    /// Trait gap and AR gap together; DCF may point either way.
    IV,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseLabel::I => "I",
            CaseLabel::II => "II",
            CaseLabel::III => "III",
            CaseLabel::IV => "IV",
        })
    }
}

/// Case label from the two observable gaps.
///
/// The label is fixed by whether the AR gap and the trait gap are
/// significant. DCF significance is reported alongside but does not change
/// the label; in case IV it may take any value.
pub fn case_from_flags(ar_significant: bool, trait_gap_significant: bool) -> CaseLabel {
    match (trait_gap_significant, ar_significant) {
        (false, false) => CaseLabel::I,
        (true, false) => CaseLabel::II,
        (false, true) => CaseLabel::III,
        (true, true) => CaseLabel::IV,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(k1: usize, n1: usize, k2: usize, n2: usize) -> Vec<(bool, Group)> {
        let mut v = Vec::new();
        v.extend((0..n1).map(|i| (i < k1, Group::Neg)));
        v.extend((0..n2).map(|i| (i < k2, Group::Pos)));
        v
    }

    #[test]
    fn equal_rates_give_p_one() {
        let r = ar_delta_test("c", &table(10, 20, 10, 20)).unwrap();
        assert_eq!(r.ar_delta, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert_eq!(r.test, ArTest::ZTest);
    }

    #[test]
    fn empty_group_is_undefined() {
        assert!(matches!(ar_delta_test("c", &table(3, 5, 0, 0)), Err(DcfError::EmptyGroup { .. })));
    }

    #[test]
    fn case_table() {
        assert_eq!(case_from_flags(false, false), CaseLabel::I);
        assert_eq!(case_from_flags(false, true), CaseLabel::II);
        assert_eq!(case_from_flags(true, false), CaseLabel::III);
        assert_eq!(case_from_flags(true, true), CaseLabel::IV);
    }
}
