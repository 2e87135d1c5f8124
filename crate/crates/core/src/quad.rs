//! Adaptive Gauss-Kronrod (7/15) quadrature for smooth vector-valued integrands.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 48;

// Discrepancies below this multiple of `eps * integral |f|` are round-off.
const ROUNDOFF: f64 = 50.0 * f64::EPSILON;

// Returns the Kronrod estimate, the Gauss/Kronrod discrepancy and the
// round-off level of the panel.
fn gk15<const N: usize, F: Fn(f64) -> [f64; N]>(f: &F, a: f64, b: f64) -> ([f64; N], f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = [0.0; N];
    let mut gauss = [0.0; N];
    let mut absolute = [0.0; N];

    let fc = f(center);
    for c in 0..N {
        kronrod[c] = WGK[7] * fc[c];
        gauss[c] = WG[3] * fc[c];
        absolute[c] = WGK[7] * fc[c].abs();
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for c in 0..N {
            let s = f1[c] + f2[c];
            kronrod[c] += WGK[j] * s;
            absolute[c] += WGK[j] * (f1[c].abs() + f2[c].abs());
            if j % 2 == 1 {
                gauss[c] += WG[j / 2] * s;
            }
        }
    }

    let mut err = 0.0_f64;
    let mut floor = 0.0_f64;
    for c in 0..N {
        kronrod[c] *= half;
        gauss[c] *= half;
        err = err.max((kronrod[c] - gauss[c]).abs());
        floor = floor.max(ROUNDOFF * (absolute[c] * half).abs());
    }
    (kronrod, err, floor)
}

fn adapt<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: &F,
    a: f64,
    b: f64,
    whole: [f64; N],
    err: f64,
    floor: f64,
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
) -> [f64; N] {
    let scale = whole.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if err <= abs_tol.max(rel_tol * scale).max(floor) || depth >= MAX_DEPTH {
        return whole;
    }
    let mid = 0.5 * (a + b);
    let (left, el, fl) = gk15(f, a, mid);
    let (right, er, fr) = gk15(f, mid, b);
    let left = adapt(f, a, mid, left, el, fl, 0.5 * abs_tol, rel_tol, depth + 1);
    let right = adapt(f, mid, b, right, er, fr, 0.5 * abs_tol, rel_tol, depth + 1);
    let mut out = [0.0; N];
    for c in 0..N {
        out[c] = left[c] + right[c];
    }
    out
}

/// Integrates `f` over `[a, b]` by recursive bisection until every panel's
/// Gauss/Kronrod discrepancy is below `max(abs_tol_panel, rel_tol * |panel|)`
/// or at the round-off level of the panel.
///
/// The interval is first cut into `panels` equal pieces, which keeps long
/// windows over narrow pulses from being under-sampled on the first pass.
/// `abs_tol` is shared among panels by width and is raised to the round-off
/// level of `integral |f|` when it asks for more.
pub fn integrate<const N: usize, F: Fn(f64) -> [f64; N]>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    abs_tol: f64,
    rel_tol: f64,
) -> [f64; N] {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let first: Vec<(f64, f64, ([f64; N], f64, f64))> = (0..panels)
        .map(|k| {
            let lo = a + width * k as f64;
            let hi = if k + 1 == panels { b } else { lo + width };
            (lo, hi, gk15(&f, lo, hi))
        })
        .collect();
    let roundoff: f64 = first.iter().map(|(_, _, (_, _, floor))| floor).sum();
    let abs_tol = abs_tol.max(roundoff);
    let mut total = [0.0; N];
    for (lo, hi, (est, err, floor)) in first {
        let part = adapt(&f, lo, hi, est, err, floor, abs_tol * (hi - lo) / (b - a), rel_tol, 0);
        for c in 0..N {
            total[c] += part[c];
        }
    }
    total
}
