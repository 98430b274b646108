mod common;

use proptest::prelude::*;

macro_rules! seeded {
    ($($name:ident),* $(,)?) => {
        proptest! {
            #![proptest_config(ProptestConfig::with_cases(96))]
            $(
                #[test]
                fn $name(seed in any::<u64>()) {
                    if let Err(e) = common::$name(seed) {
                        return Err(TestCaseError::fail(format!("seed {seed}: {e}")));
                    }
                }
            )*
        }
    };
}

seeded!(
    quiescence,
    defect_parity,
    layer_parity,
    frame_soundness,
    message_causality,
    marching_neighbours,
    window_speed_limit,
    determinism,
    replay,
    xor_fusion,
    cluster_monotone,
    pair_noise_symmetry,
    schedule_agreement,
);
