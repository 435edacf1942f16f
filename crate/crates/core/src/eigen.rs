//! Dense eigenvalues of real nonsymmetric matrices.
//!
//! The matrix is first permuted to block-triangular form along the strongly
//! connected components of its sparsity graph; each irreducible diagonal
//! block is then reduced to upper Hessenberg form by Householder similarity
//! and iterated with Francis double-shift QR and exceptional shifts, after
//! the EISPACK `orthes`/`hqr` pair (eigenvalues only, no eigenvector
//! accumulation).
//!
//! Both steps matter for the round matrices analyzed here. Their buffer
//! shift registers contribute acyclic chains whose zero eigenvalues are
//! badly defective: solved densely they smear into rings of radius around
//! `eps^(1/m)`, while the component split peels them off as exact 1x1
//! blocks. The surviving irreducible cores have many tied moduli on the
//! unit circle, where the exceptional shifts break the periodic orbits the
//! plain shifted iteration falls into.

use nalgebra::DMatrix;

use crate::digraph::Digraph;

/// Total QR iterations allowed, per matrix row (EISPACK uses 30).
const MAX_ITERS_PER_ROW: usize = 50;

/// Eigenvalues of a square real matrix as `(re, im)` pairs, unordered.
/// Returns `None` only if the QR iteration exhausts its budget.
pub(crate) fn eigenvalues(a: &DMatrix<f64>) -> Option<Vec<(f64, f64)>> {
    assert_eq!(a.nrows(), a.ncols(), "eigenvalues of a non-square matrix");
    let n = a.nrows();
    match n {
        0 => return Some(Vec::new()),
        1 => return Some(vec![(a[(0, 0)], 0.0)]),
        _ => {}
    }
    let mut out = Vec::with_capacity(n);
    for component in sparsity_components(a) {
        match component.as_slice() {
            [v] => out.push((a[(*v, *v)], 0.0)),
            nodes => {
                let sub =
                    DMatrix::from_fn(nodes.len(), nodes.len(), |i, j| a[(nodes[i], nodes[j])]);
                let mut h = sub;
                reduce_to_hessenberg(&mut h);
                out.extend(hessenberg_eigenvalues(h)?);
            }
        }
    }
    Some(out)
}

/// Strongly connected components of the sparsity graph (an edge per nonzero
/// off-diagonal entry). The spectrum of the matrix is the multiset union of
/// the spectra of the component-induced submatrices.
fn sparsity_components(a: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] != 0.0 {
                pairs.push((i, j));
            }
        }
    }
    Digraph::from_edge_list(n, &pairs)
        .expect("sparsity pattern is a valid digraph")
        .strongly_connected_components()
}

/// In-place Householder similarity reduction to upper Hessenberg form.
/// Entries below the first subdiagonal are not referenced afterwards.
fn reduce_to_hessenberg(h: &mut DMatrix<f64>) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    let mut ort = vec![0.0; n];
    for m in 1..n - 1 {
        let mut scale = 0.0;
        for i in m..n {
            scale += h[(i, m - 1)].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut sigma = 0.0;
        for i in (m..n).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            sigma += ort[i] * ort[i];
        }
        let mut g = sigma.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        sigma -= ort[m] * g;
        ort[m] -= g;
        // apply (I - u u^T / sigma) from both sides
        for j in m..n {
            let mut f = 0.0;
            for i in (m..n).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= sigma;
            for i in m..n {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..n {
            let mut f = 0.0;
            for j in (m..n).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= sigma;
            for j in m..n {
                h[(i, j)] -= f * ort[j];
            }
        }
        h[(m, m - 1)] = scale * g;
        for i in m + 1..n {
            h[(i, m - 1)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.
fn hessenberg_eigenvalues(mut h: DMatrix<f64>) -> Option<Vec<(f64, f64)>> {
    let nn = h.nrows();
    let mut re = vec![0.0; nn];
    let mut im = vec![0.0; nn];
    let eps = f64::EPSILON;

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }
    if norm == 0.0 {
        return Some(vec![(0.0, 0.0); nn]);
    }

    let mut budget = MAX_ITERS_PER_ROW * nn;
    let mut n = nn as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0usize;

    #[allow(unused_assignments)]
    let (mut p, mut q, mut r, mut s, mut z, mut w, mut x, mut y) = (
        0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64,
    );

    while n >= 0 {
        // locate a negligible subdiagonal entry
        let mut l = n;
        while l > 0 {
            s = h[((l - 1) as usize, (l - 1) as usize)].abs() + h[(l as usize, l as usize)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l as usize, (l - 1) as usize)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // one real eigenvalue isolated
            let nu = n as usize;
            re[nu] = h[(nu, nu)] + exshift;
            im[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // a 2x2 block isolated: real or conjugate pair
            let nu = n as usize;
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            x = h[(nu, nu)] + exshift;
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                re[nu - 1] = x + z;
                re[nu] = if z != 0.0 { x - w / z } else { re[nu - 1] };
                im[nu - 1] = 0.0;
                im[nu] = 0.0;
            } else {
                re[nu - 1] = x + p;
                re[nu] = x + p;
                im[nu - 1] = z;
                im[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // form the implicit double shift
            let nu = n as usize;
            x = h[(nu, nu)];
            y = h[(nu - 1, nu - 1)];
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];

            if iter > 0 && iter.is_multiple_of(10) {
                // exceptional shift: perturb away from a periodic orbit
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }

            iter += 1;
            if budget == 0 {
                return None;
            }
            budget -= 1;

            // find two consecutive small subdiagonal elements
            let mut m = n - 2;
            while m >= l {
                let mu = m as usize;
                z = h[(mu, mu)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(mu + 1, mu)] + h[(mu, mu + 1)];
                q = h[(mu + 1, mu + 1)] - z - r - s;
                r = h[(mu + 2, mu + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(mu, mu - 1)].abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (h[(mu - 1, mu - 1)].abs() + z.abs() + h[(mu + 1, mu + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=n {
                let iu = i as usize;
                h[(iu, iu - 2)] = 0.0;
                if i > m + 2 {
                    h[(iu, iu - 3)] = 0.0;
                }
            }

            // double QR sweep over rows l..=n
            for k in m..n {
                let ku = k as usize;
                let notlast = k != n - 1;
                if k != m {
                    p = h[(ku, ku - 1)];
                    q = h[(ku + 1, ku - 1)];
                    r = if notlast { h[(ku + 2, ku - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h[(ku, ku - 1)] = -s * x;
                } else if l != m {
                    h[(ku, ku - 1)] = -h[(ku, ku - 1)];
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;

                for j in ku..=nu {
                    let mut f = h[(ku, j)] + q * h[(ku + 1, j)];
                    if notlast {
                        f += r * h[(ku + 2, j)];
                        h[(ku + 2, j)] -= f * z;
                    }
                    h[(ku, j)] -= f * x;
                    h[(ku + 1, j)] -= f * y;
                }
                let top = nu.min(ku + 3);
                for i in (l as usize)..=top {
                    let mut f = x * h[(i, ku)] + y * h[(i, ku + 1)];
                    if notlast {
                        f += z * h[(i, ku + 2)];
                        h[(i, ku + 2)] -= f * r;
                    }
                    h[(i, ku)] -= f;
                    h[(i, ku + 1)] -= f * q;
                }
            }
        }
    }
    Some(re.into_iter().zip(im).collect())
}
