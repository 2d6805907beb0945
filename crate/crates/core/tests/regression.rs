//! Second moments frozen from a first exact run over `5 <= n <= 2^14`.

use llt_core::construction::{second_moments, var_un};
use serde_json::Value;

fn fixture() -> Value {
    serde_json::from_str(include_str!("fixtures/second_moments.json")).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * b.abs().max(1.0)
}

#[test]
fn small_and_large_blocks_within_frozen_constant() {
    let f = fixture();
    let k = f["k_constant"].as_f64().unwrap();
    let top = f["grid_max"].as_u64().unwrap();
    let mut worst = (0, 0.0);
    for n in 5..=top {
        let m = second_moments(n).unwrap();
        let r = (m.var_zsm + m.var_zla) / (n as f64 / (n as f64).log2().sqrt());
        if r > worst.1 {
            worst = (n, r);
        }
        assert!(m.var_en >= 0.0, "n = {n}");
        assert!(close(m.var_sn_f, m.var_zsm + m.var_yhat + m.var_zla));
    }
    assert_eq!(worst.0, f["k_argmax"].as_u64().unwrap());
    assert!(close(worst.1, k), "fitted {} drifted from {k}", worst.1);
}

#[test]
fn frozen_second_moments() {
    for v in fixture()["values"].as_array().unwrap() {
        let n = v["n"].as_u64().unwrap();
        let m = second_moments(n).unwrap();
        for (key, got) in [
            ("var_un", m.var_un),
            ("var_sn_f", m.var_sn_f),
            ("var_zsm", m.var_zsm),
            ("var_zla", m.var_zla),
            ("var_en", m.var_en),
        ] {
            assert!(close(got, v[key].as_f64().unwrap()), "{key} at n = {n}: {got}");
        }
        assert_eq!(m.var_un, var_un(n).unwrap());
    }
}
