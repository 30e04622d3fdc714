//! End-to-end checks on the profile corpus: log-integral verdicts, taming,
//! and the boundary behaviour of the witness built from each tamed profile.

use nevlab::counterexample::{boundary_log_integral, build_counterexample, profile_verdict, witness_map_config, Route};
use nevlab::profiles::{is_tame, parse_profile, Verdict};
use nevlab::C64;

const CORPUS: [(&str, Verdict); 6] = [
    ("exp(-abs(x)^0.25)", Verdict::Convergent),
    ("exp(-sqrt(abs(x)))", Verdict::Convergent),
    ("exp(-abs(x))", Verdict::Divergent),
    ("exp(-x^2)", Verdict::Divergent),
    ("1/(1+abs(x))", Verdict::Convergent),
    ("min(1, 1/log(e+abs(x)))", Verdict::Convergent),
];

#[test]
fn verdicts_survive_taming() {
    for (src, expected) in CORPUS {
        let m = parse_profile(src).unwrap();
        assert_eq!(profile_verdict(&m), expected, "{src}");
        let route = Route::for_verdict(expected).unwrap();
        let n = route.tame(&m).unwrap();
        assert!(is_tame(&n).is_tame, "{src}: partner not tame");
        assert_eq!(profile_verdict(&n), expected, "{src}: partner changes verdict");
        for x in [0.0, 0.5, 3.0, 40.0, 1e3] {
            let (a, b) = (m.ln_value(x), n.ln_value(x));
            match route {
                Route::Minorant => assert!(b <= a + 1e-9, "{src} at {x}"),
                Route::Majorant => assert!(b >= a - 1e-9, "{src} at {x}"),
            }
        }
    }
}

#[test]
fn boundary_integral_tracks_the_profile() {
    for (src, expected) in [CORPUS[1], CORPUS[2]] {
        let m = parse_profile(src).unwrap();
        let n = Route::for_verdict(expected).unwrap().tame(&m).unwrap();
        let f = build_counterexample(&n, &witness_map_config()).unwrap();
        let b = boundary_log_integral(&f, 10).unwrap();
        assert!(b.partial.windows(2).all(|w| w[1] >= w[0]), "{src}: partials decrease");
        match expected {
            Verdict::Convergent => {
                let inc = &b.increments;
                assert!(inc[inc.len() - 1] < 0.5 * inc[inc.len() / 2], "{src}: increments {inc:?}");
            }
            _ => assert!(b.floor > 0.05, "{src}: octave floor {}", b.floor),
        }
    }
}

#[test]
fn witness_omits_the_cusp_values() {
    let n = Route::Minorant.tame(&parse_profile("exp(-sqrt(abs(x)))").unwrap()).unwrap();
    let f = build_counterexample(&n, &witness_map_config()).unwrap();
    for (x, y) in [(0.0, 1.0), (3.0, 0.2), (-20.0, 5.0), (100.0, 0.01)] {
        let z = C64::new(x, y);
        let (l0, l1) = (f.ln_abs(z).unwrap(), f.ln_abs_minus_one(z).unwrap());
        assert!(l0.is_finite() && l1.is_finite(), "ln|F| = {l0}, ln|F − 1| = {l1} at {z}");
    }
}
