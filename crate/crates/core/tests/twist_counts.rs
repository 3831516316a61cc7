use serrematch_core::counting::{count_projective, schoen_form};
use serrematch_core::ffarith::Prime;
use serrematch_core::modsym::rational_newforms;
use serrematch_core::serre::{match_forms, rigid_bounds, CompatibleSystemData};
use serrematch_core::twist::twist_newform;

/// Twisted coefficients of the matched level-25 form agree with `1 - #X_d(F_p)` mod p.
#[test]
fn twisted_coefficients_follow_counts() {
    let system = CompatibleSystemData::schoen_congruence(1).unwrap();
    let r = match_forms(&system, rigid_bounds(&system.bad).unwrap(), 31).unwrap();
    assert!(r.unique);
    let f = &r.forms[0];
    for d in [2i64, -1] {
        let t = twist_newform(f, d).unwrap();
        assert_eq!(t.level_bound, 25 * (d * d) as u64);
        let x = schoen_form(d).unwrap();
        let mut checked = 0;
        for (&p, &a) in t.prime_coeffs.iter().filter(|(&p, _)| p > 5) {
            let count = count_projective(&x, Prime::new(p).unwrap()).unwrap() as i128;
            assert_eq!((a as i128 - (1 - count)).rem_euclid(p as i128), 0, "d = {d}, p = {p}");
            checked += 1;
        }
        assert!(checked >= 6);
    }
}

/// The other rational forms at (25, 4) are not twists that the d = 1 counts see.
#[test]
fn other_level_25_forms_fail_at_seven() {
    let forms = rational_newforms(25, 4, 7).unwrap().forms;
    let count = count_projective(&schoen_form(1).unwrap(), Prime::new(7).unwrap()).unwrap() as i64;
    let hits: Vec<_> = forms.iter().filter(|f| (f.coeff(7).unwrap() - (1 - count)).rem_euclid(7) == 0).collect();
    assert_eq!(hits.len(), 1);
}
