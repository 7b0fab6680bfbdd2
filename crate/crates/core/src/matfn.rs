//! Dense matrix functions: exponential, principal logarithm, polar factor.

use nalgebra::DMatrix;

type Mat = DMatrix<f64>;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the [13/13] Padé approximant meets double precision.
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &Mat) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a fixed [13/13] Padé
/// approximant.
pub(crate) fn expm(a: &Mat) -> Mat {
    let n = a.nrows();
    let ident = Mat::identity(n, n);
    if a.iter().all(|&x| x == 0.0) {
        return ident;
    }
    let nrm = norm1(a);
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil().max(0.0) as i32 } else { 0 };
    let a = a * 2f64.powi(-s);
    let b = &PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Principal square root by the Denman–Beavers iteration.
fn sqrtm(a: &Mat) -> Option<Mat> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = Mat::identity(n, n);
    for _ in 0..60 {
        let yi = y.clone().try_inverse()?;
        let zi = z.clone().try_inverse()?;
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * y.norm() {
            return Some(y);
        }
    }
    None
}

/// Principal logarithm by inverse scaling and squaring: repeated square
/// roots until `‖X − I‖_F ≤ 1/4`, then the `2·atanh` series of the Cayley
/// transform `(X − I)(X + I)⁻¹`.
pub(crate) fn logm(a: &Mat) -> Option<Mat> {
    let n = a.nrows();
    let ident = Mat::identity(n, n);
    let mut x = a.clone();
    let mut squarings = 0;
    while (&x - &ident).norm() > 0.25 {
        x = sqrtm(&x)?;
        squarings += 1;
        if squarings > 30 {
            return None;
        }
    }
    let z = (&x + &ident).try_inverse().map(|inv| (&x - &ident) * inv)?;
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut acc = z.clone();
    for k in 1..80 {
        term = &term * &z2;
        let contrib = &term / (2 * k + 1) as f64;
        let size = contrib.norm();
        acc += contrib;
        if size <= 1e-18 * acc.norm().max(1e-300) {
            break;
        }
    }
    Some(acc * 2f64.powi(squarings + 1))
}

/// Orthogonal polar factor by the Newton iteration `X ← (X + X⁻ᵀ)/2`.
pub(crate) fn polar(a: &Mat) -> Mat {
    let mut x = a.clone();
    for _ in 0..30 {
        let Some(inv) = x.clone().try_inverse() else {
            break;
        };
        let next = (&x + inv.transpose()) * 0.5;
        let delta = (&next - &x).norm();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_exp(a: &Mat) -> Mat {
        // Reference for small arguments only.
        let n = a.nrows();
        let mut term = Mat::identity(n, n);
        let mut acc = term.clone();
        for k in 1..40 {
            term = &term * a / k as f64;
            acc += &term;
        }
        acc
    }

    #[test]
    fn expm_matches_taylor_for_small_argument() {
        let a = Mat::from_row_slice(3, 3, &[0.1, -0.3, 0.2, 0.05, 0.0, -0.1, 0.4, 0.2, -0.2]);
        assert!((expm(&a) - taylor_exp(&a)).norm() < 1e-14);
    }

    #[test]
    fn expm_scalar_large_argument() {
        let a = Mat::from_row_slice(1, 1, &[12.5]);
        let e = expm(&a)[(0, 0)];
        assert!((e / 12.5f64.exp() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn logm_inverts_expm() {
        let a = Mat::from_row_slice(3, 3, &[0.0, -0.9, 0.4, 0.9, 0.0, -0.6, -0.4, 0.6, 0.0]);
        let l = logm(&expm(&a)).unwrap();
        assert!((l - a).norm() < 1e-13);
    }

    #[test]
    fn polar_restores_orthogonality() {
        let a = Mat::from_row_slice(2, 2, &[1.001, 0.002, -0.001, 0.999]);
        let q = polar(&a);
        let defect = (q.transpose() * &q - Mat::identity(2, 2)).norm();
        assert!(defect < 1e-14);
    }
}
