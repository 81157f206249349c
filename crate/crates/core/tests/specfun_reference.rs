use etp_core::specfun::{
    ln_abs_sph_bessel_j, sph_bessel_j, sph_bessel_j_prime, sph_bessel_j_and_prime_scaled,
};
use num_complex::Complex64;

/// (l, Re z, Im z, Re, Im of j_l(z)e^{-|Im z|}, Re, Im of j_l'(z)e^{-|Im z|}),
/// computed at 40 significant digits.
const TABLE: &[(u32, f64, f64, f64, f64, f64, f64)] = &[
    (0, 0.3, 0.0, 0.9850673555377986, 0.0, -0.09910288804064188, 0.0),
    (0, 0.45, 0.2, 0.7965177624380586, -0.024164161915834363, -0.12178252458932409, -0.05150898177163954),
    (0, 1.0, 0.0, 0.8414709848078965, 0.0, -0.3011686789397568, 0.0),
    (0, 1.0, 2.0, 0.19176957113872023, -0.11833598030588624, -0.10121147454903397, -0.09227052365344961),
    (0, 3.7, -0.4, -0.10931642782095072, 0.05129337577532798, -0.12928767315734085, -0.06726787927550573),
    (0, 10.0, -3.0, -0.036535188440887705, 0.03088902740260246, -0.02691494499629415, -0.03829701710797851),
    (0, 50.0, 0.5, -0.003527621433958194, 0.006135024866149668, 0.013284154180234679, 0.0014029833523335452),
    (0, 150.0, 20.0, -0.0020359486531617292, 0.0026022958420161475, 0.0026133590027643543, 0.002017124926115194),
    (0, 0.0, 60.0, 0.008333333333333333, 0.0, 0.0, -0.008194444444444445),
    (0, 199.0, 1.0, -0.00252050561894252, -0.0010119525173278258, -0.0013230084792053766, 0.0019274629719188423),
    (1, 0.3, 0.0, 0.09910288804064188, 0.0, 0.3243814352668527, 0.0),
    (1, 0.45, 0.2, 0.12178252458932409, 0.05150898177163954, 0.2595781136172442, -0.014453125869425897),
    (1, 1.0, 0.0, 0.3011686789397568, 0.0, 0.23913362692838294, 0.0),
    (1, 1.0, 2.0, 0.10121147454903397, 0.09227052365344961, 0.07746856239634697, -0.07427501012803892),
    (1, 3.7, -0.4, 0.12928767315734085, 0.06726787927550573, -0.17450880889993395, 0.007884534969218586),
    (1, 10.0, -3.0, 0.02691494499629415, 0.03829701710797851, -0.0393656177737135, 0.02238049518115902),
    (1, 50.0, 0.5, -0.013284154180234679, -0.0014029833523335452, -0.0029957472608251865, 0.006185825458511679),
    (1, 150.0, 20.0, -0.0026133590027643543, -0.002017124926115194, -0.001998189146704353, 0.0026241562401700335),
    (1, 0.0, 60.0, 0.0, 0.008194444444444445, 0.008060185185185186, 0.0),
    (1, 199.0, 1.0, 0.0013230084792053766, -0.0019274629719188423, -0.0025337045091192766, -0.0009925147040915723),
    (2, 0.3, 0.0, 0.005961524868620218, 0.0, 0.039487639354439705, 0.0),
    (2, 0.45, 0.2, 0.008891710793163015, 0.009597607846221663, 0.04853562034807433, 0.020079109126272792),
    (2, 1.0, 0.0, 0.06203505201137386, 0.0, 0.11506352290563521, 0.0),
    (2, 1.0, 2.0, -0.02031805802516034, 0.05224452503911525, 0.05070887931719186, 0.036542138999788046),
    (2, 3.7, -0.4, 0.20710499943942556, 0.01381988543383611, -0.035498004189736414, 0.03824789894027891),
    (2, 10.0, -3.0, 0.0407808324401264, -0.0181262290704373, 0.014194201557415916, 0.03991866279744623),
    (2, 50.0, 0.5, 0.0027298101742586826, -0.006211225754692685, -0.013444200050650343, -0.0010287093483478274),
    (2, 150.0, 20.0, 0.0019793093934756647, -0.0026350864392469765, -0.00264534957222764, -0.001960157788068483),
    (2, 0.0, 60.0, -0.00792361111111111, 0.0, 0.0, 0.007798263888888889),
    (2, 199.0, 1.0, 0.0025403039542076546, 0.0009827957974734456, 0.001284638956250617, -0.0019420861772930411),
    (5, 0.3, 0.0, 2.3295825567290273e-07, 0.0, 3.877259151567102e-06, 0.0),
    (5, 0.45, 0.2, -1.1132328709960928e-06, 1.9744249285875405e-06, -2.1179907376597066e-06, 2.2858859879054652e-05),
    (5, 1.0, 0.0, 9.256115861125816e-05, 0.0, 0.0004556488567462037, 0.0),
    (5, 1.0, 2.0, 0.0005087282246659686, -0.000639695653712577, -0.0009054929491162362, -0.0016884271163823499),
    (5, 3.7, -0.4, 0.024568401987736722, -0.010842214621907455, 0.02727632320031439, -0.006658507297859486),
    (5, 10.0, -3.0, -0.022161308123330312, 0.02426302776701484, -0.020345524821775866, -0.019000827250897072),
    (5, 50.0, 0.5, -0.013689262089738249, 0.00035643016234542684, 0.0008103360380410063, 0.006242139741484932),
    (5, 150.0, 20.0, -0.002754182817532766, -0.001748097093458801, -0.0017278835509471455, 0.0027611885964632685),
    (5, 0.0, 60.0, 0.0, 0.006477449363425926, 0.006396882764274692, 0.0),
    (5, 199.0, 1.0, 0.001141979064479761, -0.0019925795889962146, -0.0026183751185342506, -0.0008536681916220146),
    (13, 0.3, 0.0, 7.457441263479275e-22, 0.0, 3.230786344153683e-20, 0.0),
    (13, 0.45, 0.2, 2.529768367458708e-19, -2.8760793527013225e-19, 3.0131980962122017e-18, -9.647782259613819e-18),
    (13, 1.0, 0.0, 4.604637677683787e-15, 0.0, 5.970133221113754e-14, 0.0),
    (13, 1.0, 2.0, -4.337833119896779e-12, 2.292212757447961e-11, 1.0964347115600013e-10, 8.167225684401053e-11),
    (13, 3.7, -0.4, 1.4400513010028499e-08, -6.36047127159593e-08, 7.294651226007836e-08, -2.0704199779313044e-07),
    (13, 10.0, -3.0, -0.0007137598071512625, -0.0004006384556947901, -0.00038269035301132865, -0.0006910011684753006),
    (13, 50.0, 0.5, -1.2872527669073026e-05, 0.006184532936187478, 0.01330807690064226, -0.00022316625158281744),
    (13, 150.0, 20.0, -0.003050233212333868, -0.00020450561993131674, -0.00018667289100102047, 0.0030369509467401625),
    (13, 0.0, 60.0, 0.0, 0.0018173159170069167, 0.0018331450374841167, 0.0),
    (13, 199.0, 1.0, 8.510783982794475e-05, -0.0021676618247217444, -0.0028433872766251284, -4.769837176390218e-05),
    (40, 0.3, 0.0, 1.8803854400487983e-82, 0.0, 2.50711262012588e-80, 0.0),
    (40, 0.45, 0.2, -3.276733193917293e-74, -5.334058483339974e-74, -4.191854611654193e-72, -2.8779488327246774e-72),
    (40, 1.0, 0.0, 1.5382103742442298e-61, 0.0, 6.150987968704764e-60, 0.0),
    (40, 1.0, 2.0, 1.9547712082954865e-48, 5.611832816717049e-49, 2.460710795769821e-47, -2.68407200017186e-47),
    (40, 3.7, -0.4, -2.64522360089256e-39, 5.88132539562122e-39, -3.497132818220209e-38, 5.951602744966785e-38),
    (40, 10.0, -3.0, 7.277237097571396e-23, 2.3821425863475196e-22, -1.3038199919727578e-23, 9.280415299583235e-22),
    (40, 50.0, 0.5, -0.016490020282849318, 0.0002955033750270607, 0.0005906669787606421, 0.00274716678169565),
    (40, 150.0, 20.0, -0.001621718039229413, 4.897406626993495e-05, 4.243895176303598e-05, 0.0015633167983237339),
    (40, 0.0, 60.0, 1.3924549936421505e-08, 0.0, 0.0, -1.6604275666767385e-08),
    (40, 199.0, 1.0, 0.0024820090814720855, -0.0010406483180254546, -0.0013588053204515625, -0.0018209438130430335),
];

#[test]
fn scaled_values_match_high_precision_table() {
    for &(l, x, y, jr, ji, dr, di) in TABLE {
        let z = Complex64::new(x, y);
        let (j, d) = sph_bessel_j_and_prime_scaled(l, z);
        let want_j = Complex64::new(jr, ji);
        let want_d = Complex64::new(dr, di);
        assert!(
            (j - want_j).norm() <= 1e-12 * want_j.norm(),
            "j_{l}({z}) = {j}, expected {want_j}"
        );
        assert!(
            (d - want_d).norm() <= 1e-12 * want_d.norm().max(1e-300),
            "j_{l}'({z}) = {d}, expected {want_d}"
        );
    }
}

#[test]
fn conjugate_symmetry() {
    for &(l, x, y, ..) in TABLE {
        let z = Complex64::new(x, y);
        let a = sph_bessel_j(l, z.conj());
        let b = sph_bessel_j(l, z).conj();
        assert!((a - b).norm() <= 1e-14 * b.norm());
    }
}

#[test]
fn log_modulus_survives_large_imaginary_part() {
    let z = Complex64::new(3.0, 800.0);
    let v = ln_abs_sph_bessel_j(2, z);
    assert!(v.is_finite());
    // |j_l(iy)| ~ e^y / (2y) for large y.
    assert!((v - (800.0 - (1600.0f64).ln())).abs() < 1e-2);
}

#[test]
fn radial_bessel_equation_residual() {
    // u(r) = r j_l(k r) solves u'' + (k^2 - l(l+1)/r^2) u = 0.
    let k = Complex64::new(2.3, 0.7);
    for l in 0..6u32 {
        for i in 1..20 {
            let r = 0.25 * i as f64;
            let kr = k * r;
            let u = r * sph_bessel_j(l, kr);
            let du = sph_bessel_j(l, kr) + kr * sph_bessel_j_prime(l, kr);
            // Second derivative from the first-order system, checked by differencing u'.
            let h = 1e-5;
            let dup = sph_bessel_j(l, k * (r + h)) + k * (r + h) * sph_bessel_j_prime(l, k * (r + h));
            let dum = sph_bessel_j(l, k * (r - h)) + k * (r - h) * sph_bessel_j_prime(l, k * (r - h));
            let d2u = (dup - dum) / (2.0 * h);
            let res = d2u + (k * k - (l * (l + 1)) as f64 / (r * r)) * u;
            let scale = (k * k).norm() * u.norm() + du.norm() + 1.0;
            assert!(res.norm() < 1e-8 * scale, "l = {l}, r = {r}: {res}");
        }
    }
}
