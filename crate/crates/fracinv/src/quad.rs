//! Adaptive Gauss-Kronrod (G7K15) quadrature on finite intervals.
//!
//! Used by the Mittag-Leffler contour evaluation and by test oracles that
//! integrate kernels against closed forms.

/// Positive K15 nodes (the center node first); negative nodes mirror.
const XGK: [f64; 8] = [
    0.0,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.991_455_371_120_812_639_206_854_697_526_329,
];

const WGK: [f64; 8] = [
    0.209_482_141_084_727_828_012_999_174_891_714,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.022_935_322_010_529_224_963_732_008_058_970,
];

/// G7 weights for the nodes at even indices of `XGK`.
const WG: [f64; 4] = [
    0.417_959_183_673_469_387_755_102_040_816_327,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.129_484_966_168_869_693_270_611_432_679_082,
];

/// One G7K15 panel: returns (kronrod value, |gauss - kronrod| estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);

    let fc = f(c);
    let mut kronrod = WGK[0] * fc;
    let mut gauss = WG[0] * fc;

    for j in 1..8 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 0 {
            gauss += WG[j / 2] * pair;
        }
    }

    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive bisection until the summed panel error estimate drops below
/// `abs_tol + rel_tol * |integral|`. Returns (value, error estimate).
pub(crate) fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> (f64, f64) {
    // (lo, hi, value, error), worst panel kept last for cheap pop.
    let (v, e) = gk15(f, a, b);
    let mut panels = vec![(a, b, v, e)];
    let max_panels = 2000;

    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol + rel_tol * total.abs() || panels.len() >= max_panels {
            return (total, err);
        }
        let (worst_idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty panel list");
        let (lo, hi, _, _) = panels.swap_remove(worst_idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval exhausted at f64 resolution.
            let (v, e) = gk15(f, lo, hi);
            panels.push((lo, hi, v, e));
            let total: f64 = panels.iter().map(|p| p.2).sum();
            let err: f64 = panels.iter().map(|p| p.3).sum();
            return (total, err);
        }
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
}
