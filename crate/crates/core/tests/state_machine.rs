mod common;

use common::ops::{check_scenario, scenario};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn operations_conserve_value_and_fail_atomically((ledger, ops) in scenario()) {
        check_scenario(&ledger, &ops)?;
    }
}
