//! Real polynomials in descending powers of `s`.

use nalgebra::linalg::balancing::balance_parlett_reinsch;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Roots closer than this (relative) are always treated as one repeated root.
const CLUSTER_TOL: f64 = 1e-6;
/// Neighborhood searched for members of a repeated-root cluster.
const CLUSTER_SEARCH: f64 = 1e-2;
/// Multiplier on the eps^(1/k) scatter expected for a k-fold root.
const CLUSTER_SLACK: f64 = 30.0;
/// Imaginary parts below this (relative) are snapped to zero.
const REAL_TOL: f64 = 1e-10;

/// Drops leading zero coefficients. An all-zero polynomial becomes `[0.0]`.
pub fn trim(coeffs: &[f64]) -> Vec<f64> {
    match coeffs.iter().position(|&c| c != 0.0) {
        Some(i) => coeffs[i..].to_vec(),
        None => vec![0.0],
    }
}

pub fn degree(coeffs: &[f64]) -> usize {
    coeffs.len().saturating_sub(1)
}

/// Polynomial product (coefficient convolution).
pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Horner evaluation at a complex point.
pub fn eval(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

fn eval_complex(coeffs: &[Complex64], s: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * s + p;
        p = p * s + c;
    }
    (p, dp)
}

/// Expands `prod (s - r_i)` into real coefficients (imaginary residue dropped).
pub fn from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (i, &c) in acc.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        acc = next;
    }
    acc.into_iter().map(|c| c.re).collect()
}

/// All roots of a real polynomial.
///
/// Zero roots are split off exactly. The rest come from the eigenvalues of the
/// balanced companion matrix, polished with Newton steps; near-coincident roots
/// are merged onto their centroid and conjugate pairs are made exactly
/// symmetric.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let c = trim(coeffs);
    if c.len() <= 1 {
        return Vec::new();
    }
    let zeros_at_origin = c.iter().rev().take_while(|&&x| x == 0.0).count();
    let reduced = &c[..c.len() - zeros_at_origin];
    let mut out = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    let n = degree(reduced);
    match n {
        0 => {}
        1 => out.push(Complex64::new(-reduced[1] / reduced[0], 0.0)),
        2 => out.extend(quadratic(reduced[0], reduced[1], reduced[2])),
        _ => {
            let mut found = companion_eigenvalues(reduced);
            let simple = merge_clusters(&mut found);
            let cplx: Vec<Complex64> = reduced.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            for (r, single) in found.iter_mut().zip(simple) {
                if single {
                    *r = polish(&cplx, *r);
                }
            }
            out.extend(found);
        }
    }
    symmetrize(&mut out);
    out
}

fn quadratic(a: f64, b: f64, c: f64) -> Vec<Complex64> {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return vec![Complex64::new(0.0, 0.0); 2];
        }
        vec![Complex64::new(q / a, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a).abs();
        vec![Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

fn companion_eigenvalues(c: &[f64]) -> Vec<Complex64> {
    let n = degree(c);
    let lead = c[0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[j + 1] / lead;
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    balance_parlett_reinsch(&mut m);
    m.complex_eigenvalues().iter().copied().collect()
}

fn polish(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    let (mut p, _) = eval_complex(coeffs, z);
    for _ in 0..20 {
        let (_, dp) = eval_complex(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let (pc, _) = eval_complex(coeffs, cand);
        if pc.norm() < p.norm() {
            z = cand;
            p = pc;
        } else {
            break;
        }
        if p.norm() == 0.0 {
            break;
        }
    }
    z
}

/// Returns, per root, whether it was left as a simple root.
fn merge_clusters(roots: &mut [Complex64]) -> Vec<bool> {
    // A k-fold root comes back from the eigensolver as k points scattered by
    // roughly eps^(1/k); such groups are replaced by their centroid.
    let n = roots.len();
    let mut assigned = vec![false; n];
    let mut simple = vec![true; n];
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let mut members = vec![i];
        for j in (i + 1)..n {
            if assigned[j] {
                continue;
            }
            let near = members.iter().any(|&k| {
                let scale = roots[k].norm().max(roots[j].norm()).max(f64::MIN_POSITIVE);
                (roots[k] - roots[j]).norm() <= CLUSTER_SEARCH * scale
            });
            if near {
                members.push(j);
            }
        }
        if members.len() == 1 {
            assigned[i] = true;
            continue;
        }
        let k = members.len() as f64;
        let centroid = members.iter().map(|&m| roots[m]).sum::<Complex64>() / k;
        let spread = members
            .iter()
            .map(|&m| (roots[m] - centroid).norm())
            .fold(0.0, f64::max);
        let allowed = CLUSTER_SLACK * f64::EPSILON.powf(1.0 / k) * centroid.norm();
        if spread <= allowed.max(CLUSTER_TOL * centroid.norm()) {
            for &m in &members {
                roots[m] = centroid;
                assigned[m] = true;
                simple[m] = false;
            }
        } else {
            assigned[i] = true;
        }
    }
    simple
}

fn symmetrize(roots: &mut [Complex64]) {
    for r in roots.iter_mut() {
        if r.im.abs() <= REAL_TOL * r.norm() {
            r.im = 0.0;
        }
    }
    let n = roots.len();
    let mut paired = vec![false; n];
    for i in 0..n {
        if paired[i] || roots[i].im <= 0.0 {
            continue;
        }
        let target = roots[i].conj();
        let best = (0..n)
            .filter(|&j| !paired[j] && j != i && roots[j].im < 0.0)
            .min_by(|&a, &b| {
                (roots[a] - target)
                    .norm()
                    .total_cmp(&(roots[b] - target).norm())
            });
        if let Some(j) = best {
            let avg = (roots[i] + roots[j].conj()) * 0.5;
            roots[i] = avg;
            roots[j] = avg.conj();
            paired[i] = true;
            paired[j] = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut r: Vec<Complex64>) -> Vec<f64> {
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        r.into_iter().map(|z| z.re).collect()
    }

    #[test]
    fn convolution() {
        assert_eq!(mul(&[1.0, 1.0], &[1.0, 1.0]), vec![1.0, 2.0, 1.0]);
        assert_eq!(mul(&[2.0], &[3.0, 0.0]), vec![6.0, 0.0]);
    }

    #[test]
    fn trims_leading_zeros() {
        assert_eq!(trim(&[0.0, 0.0, 1.0, 2.0]), vec![1.0, 2.0]);
        assert_eq!(trim(&[0.0, 0.0]), vec![0.0]);
    }

    #[test]
    fn double_root_is_merged_exactly() {
        let r = roots(&[1.0, 2.0, 1.0]);
        assert_eq!(r, vec![Complex64::new(-1.0, 0.0); 2]);
        let r = roots(&mul(&[1.0, 2.0, 1.0], &[1.0, 3.0]));
        let re = sorted_re(r);
        assert!((re[0] + 3.0).abs() < 1e-12);
        assert!((re[1] + 1.0).abs() < 1e-12 && (re[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn higher_multiplicity_is_merged() {
        for k in 3..=5 {
            let p = from_roots(&vec![Complex64::new(-1.0, 0.0); k]);
            for r in roots(&p) {
                assert!((r + 1.0).norm() < 1e-12, "k={k}: {r}");
            }
        }
    }

    #[test]
    fn close_distinct_roots_stay_apart() {
        let p = from_roots(&[Complex64::new(-1.0, 0.0), Complex64::new(-1.01, 0.0), Complex64::new(-5.0, 0.0)]);
        let re = sorted_re(roots(&p));
        assert!((re[1] + 1.01).abs() < 1e-9 && (re[2] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_roots_split_off() {
        let r = roots(&[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(r.iter().filter(|z| z.norm() == 0.0).count(), 2);
    }

    #[test]
    fn complex_pair_is_conjugate() {
        let r = roots(&[1.0, 0.2, 1.0, 0.0, 0.0, 0.0]);
        let upper: Vec<_> = r.iter().filter(|z| z.im > 0.0).collect();
        assert_eq!(upper.len(), 1);
        assert!(r.iter().any(|z| *z == upper[0].conj()));
    }

    #[test]
    fn widely_spread_roots_are_accurate() {
        let want = [-1e-3, -0.1, -7.0, -300.0, -2000.0];
        let p = from_roots(&want.map(|x| Complex64::new(x, 0.0)));
        let re = sorted_re(roots(&p));
        let mut w = want.to_vec();
        w.sort_by(f64::total_cmp);
        for (a, b) in re.iter().zip(w) {
            assert!(((a - b) / b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}
