use std::sync::Arc;

use hrr_core::calculus::{complex_coords, Domain, FdConfig};
use hrr_core::geometry::{CMatrix, ConnectionChoice, FnMetric, Geometry, HermitianMetricField};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn fubini_study(n: usize) -> FnMetric {
    FnMetric::new(n, Domain::Everywhere, move |x| {
        let z = complex_coords(x);
        let s = 1.0 + z.iter().map(|v| v.norm_sqr()).sum::<f64>();
        CMatrix::from_fn(n, n, |j, k| {
            let delta = if j == k { 1.0 / s } else { 0.0 };
            c(delta, 0.0) - z[j].conj() * z[k] / (s * s)
        })
    })
}

fn hopf(n: usize) -> FnMetric {
    FnMetric::new(n, Domain::Punctured { min_radius: 0.5 }, move |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        CMatrix::from_fn(n, n, |j, k| if j == k { c(1.0 / r2, 0.0) } else { c(0.0, 0.0) })
    })
}

/// Non-Kähler metric on a 2-torus of complex dimension 2 (periodic entries).
fn twisted_torus() -> FnMetric {
    FnMetric::new(2, Domain::Everywhere, |x| {
        let tau = std::f64::consts::TAU;
        let a = 2.0 + (tau * x[0]).sin() * 0.4 + (tau * x[3]).cos() * 0.2;
        let b = 1.5 + (tau * x[1]).cos() * 0.3;
        let off = c(0.3 * (tau * x[2]).sin(), 0.2 * (tau * x[0]).cos());
        CMatrix::from_row_slice(2, 2, &[c(a, 0.0), off, off.conj(), c(b, 0.0)])
    })
}

fn geom(m: FnMetric) -> Geometry {
    Geometry::new(Arc::new(m), FdConfig::precise())
}

fn hopf_point(n: usize, k: usize) -> Vec<f64> {
    // deterministic points with 1 < |z| < 2
    let mut x: Vec<f64> = (0..2 * n)
        .map(|i| ((i * 7 + k * 13) as f64 * 0.61).sin() + 0.1)
        .collect();
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let target = 1.1 + 0.8 * ((k as f64) * 0.37).fract();
    x.iter_mut().for_each(|v| *v *= target / r);
    x
}

fn generic_point(d: usize, k: usize) -> Vec<f64> {
    (0..d).map(|i| 0.7 * ((i * 5 + k * 11) as f64 * 0.83).sin()).collect()
}

#[test]
fn flat_metric_has_no_connection_or_curvature() {
    let g = geom(FnMetric::new(2, Domain::Everywhere, |_| CMatrix::identity(2, 2)));
    let x = [0.1, 0.2, -0.3, 0.4];
    assert!(g.christoffel(&x).unwrap().iter().all(|v| v.abs() < 1e-12));
    let curv = g.curvature(ConnectionChoice::Bismut, &x).unwrap();
    assert!(curv.omega.iter().all(|v| v.abs() < 1e-12));
    assert!(curv.comps.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn cp1_holomorphic_christoffel_matches_closed_form() {
    let g = geom(fubini_study(1));
    for k in 0..5 {
        let x = generic_point(2, k);
        let fo = g.first_order(&x).unwrap();
        let gc = fo.complex_components(&fo.christoffel());
        let z = c(x[0], x[1]);
        let expect = -2.0 * z.conj() / (1.0 + z.norm_sqr());
        assert!((gc[0] - expect).norm() < 1e-8, "{} vs {}", gc[0], expect);
    }
}

#[test]
fn christoffel_complex_components_follow_metric_formulas() {
    for g in [geom(fubini_study(2)), geom(hopf(2)), geom(twisted_torus())] {
        for k in 0..4 {
            let x = if g.domain() == Domain::Everywhere {
                generic_point(4, k)
            } else {
                hopf_point(2, k)
            };
            let fo = g.first_order(&x).unwrap();
            let (res, _) = fo.christoffel_holo_residual();
            assert!(res < 1e-8, "residual {res}");
        }
    }
}

#[test]
fn kahler_metrics_have_no_mixed_christoffels_or_contorsion() {
    let g = geom(fubini_study(2));
    for k in 0..4 {
        let x = generic_point(4, k);
        let fo = g.first_order(&x).unwrap();
        assert!(fo.christoffel_holo_residual().1 < 1e-9);
        assert!(g.contorsion_real(&x).unwrap().iter().all(|v| v.abs() < 1e-9));
        let lc = g.connection(ConnectionChoice::LeviCivita, &x).unwrap();
        let bi = g.connection(ConnectionChoice::Bismut, &x).unwrap();
        assert!(lc.iter().zip(&bi).all(|(a, b)| (a - b).abs() < 1e-9));
    }
}

#[test]
fn hopf_contorsion_matches_hand_formula() {
    // C_{jk l̄} = (z̄_j δ_{kl} − z̄_k δ_{jl}) / (z̄z)²
    let g = geom(hopf(2));
    for k in 0..4 {
        let x = hopf_point(2, k);
        let fo = g.first_order(&x).unwrap();
        let z = complex_coords(&x);
        let r2: f64 = z.iter().map(|v| v.norm_sqr()).sum();
        let n = 2;
        for j in 0..n {
            for kk in 0..n {
                for l in 0..n {
                    let got = fo.dh[(kk * n + j) * n + l] - fo.dh[(j * n + kk) * n + l];
                    let dkl = if kk == l { 1.0 } else { 0.0 };
                    let djl = if j == l { 1.0 } else { 0.0 };
                    let expect = (z[j].conj() * dkl - z[kk].conj() * djl) / (r2 * r2);
                    assert!((got - expect).norm() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn both_contorsion_routes_agree_and_are_antisymmetric() {
    for g in [geom(hopf(2)), geom(hopf(3)), geom(twisted_torus())] {
        let n = g.complex_dim();
        for k in 0..3 {
            let x = if n == 3 || g.domain() != Domain::Everywhere {
                hopf_point(n, k)
            } else {
                generic_point(4, k)
            };
            assert!(g.contorsion_agreement(&x).unwrap() < 1e-8);
            assert!(g.contorsion_antisymmetry(&x).unwrap() < 1e-10);
        }
    }
}

#[test]
fn bismut_and_chern_preserve_metric_and_complex_structure() {
    for g in [geom(hopf(2)), geom(hopf(3)), geom(twisted_torus())] {
        let n = g.complex_dim();
        for k in 0..3 {
            let x = if g.domain() != Domain::Everywhere {
                hopf_point(n, k)
            } else {
                generic_point(2 * n, k)
            };
            for choice in [ConnectionChoice::Bismut, ConnectionChoice::Chern] {
                assert!(g.metric_compatibility(choice, &x).unwrap() < 1e-8, "{choice}");
                assert!(g.complex_structure_compatibility(choice, &x).unwrap() < 1e-8, "{choice}");
            }
            assert!(g.metric_compatibility(ConnectionChoice::LeviCivita, &x).unwrap() < 1e-8);
        }
    }
    let g = geom(hopf(2));
    let lc = g
        .complex_structure_compatibility(ConnectionChoice::LeviCivita, &hopf_point(2, 1))
        .unwrap();
    assert!(lc > 1e-3, "{lc}");
}

#[test]
fn vielbein_reconstructs_metric() {
    let g = geom(twisted_torus());
    let x = generic_point(4, 2);
    let f = g.vielbein(&x).unwrap();
    let rs = hrr_core::geometry::assemble_real(g.metric().as_ref(), &x).unwrap();
    let d = 4;
    for a in 0..d {
        for b in 0..d {
            let id: f64 = (0..d).map(|m| f.e[a * d + m] * f.einv[m * d + b]).sum();
            assert!((id - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
            let gm: f64 = (0..d).map(|aa| f.e[aa * d + a] * f.e[aa * d + b]).sum();
            assert!((gm - rs.g[a * d + b]).abs() < 1e-12);
        }
    }
    let diag = FnMetric::new(1, Domain::Everywhere, |_| CMatrix::from_element(1, 1, c(4.0, 0.0)));
    let e = geom(diag).holomorphic_vielbein(&[0.0, 0.0]).unwrap();
    assert!((e[(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
}

#[test]
fn maurer_cartan_holds_with_torsion() {
    for (g, n) in [(geom(fubini_study(1)), 1), (geom(hopf(2)), 2)] {
        for k in 0..3 {
            let x = if n == 1 { generic_point(2, k) } else { hopf_point(2, k) };
            for choice in ConnectionChoice::ALL {
                let r = g.maurer_cartan_residual(choice, &x).unwrap();
                assert!(r < 1e-8, "{choice}: {r}");
            }
        }
    }
}

#[test]
fn mixed_curvature_blocks() {
    let g = geom(hopf(2));
    let x = hopf_point(2, 3);
    assert!(g.mixed_curvature(ConnectionChoice::Bismut, &x).unwrap() < 1e-6);
    assert!(g.mixed_curvature(ConnectionChoice::Chern, &x).unwrap() < 1e-6);
    assert!(g.mixed_curvature(ConnectionChoice::LeviCivita, &x).unwrap() > 1e-3);
}

#[test]
fn bianchi_identity() {
    let g = geom(hopf(2));
    let x = hopf_point(2, 0);
    for choice in ConnectionChoice::ALL {
        let r = g.bianchi_residual(choice, &x).unwrap();
        assert!(r < 1e-5, "{choice}: {r}");
    }
}

#[test]
fn torsion_pair_symmetry() {
    let g = geom(hopf(2));
    let s = g.riemann_torsion_symmetry_check(&hopf_point(2, 1)).unwrap();
    assert!(s.raw < 1e-5, "{s:?}");
    let g = geom(fubini_study(2));
    let s = g.riemann_torsion_symmetry_check(&generic_point(4, 1)).unwrap();
    assert!(s.raw < 1e-6, "{s:?}");
    // Without closed torsion the exchange defect is −½dC.
    let g = geom(hopf(3));
    let s = g.riemann_torsion_symmetry_check(&hopf_point(3, 1)).unwrap();
    assert!(s.dc > 1e-2, "{s:?}");
    assert!(s.corrected < 1e-5, "{s:?}");
}

#[test]
fn kahler_and_skt_residuals() {
    let g = geom(fubini_study(1));
    assert!(g.d_kahler_form(&[0.3, -0.2]).unwrap().max_abs() < 1e-7);
    let g = geom(hopf(2));
    let x = hopf_point(2, 2);
    assert!(g.d_kahler_form(&x).unwrap().max_abs() > 1e-2);
    assert!(g.skt_residual(&x).unwrap() < 1e-6);
    let g = geom(hopf(3));
    let r3 = g.skt_residual(&hopf_point(3, 2)).unwrap();
    assert!(r3 > 1e-2, "{r3} {}", g.d_kahler_form(&hopf_point(3, 2)).unwrap().max_abs());
}

#[test]
fn det_bundle_curvature_is_half_i_trace_on_kahler() {
    let g = geom(fubini_study(1));
    for k in 0..3 {
        let x = generic_point(2, k);
        let (_, f0) = g.det_bundle(&x).unwrap();
        let hol = g.curvature(ConnectionChoice::LeviCivita, &x).unwrap().holomorphic_block();
        let expect = hol.trace().scale(c(0.0, 0.5));
        assert!(f0.max_diff(&expect) < 1e-6, "{f0:?} vs {expect:?}");
    }
}

#[test]
fn hopf_det_bundle_matches_section_formula() {
    // F₀ ∝ dz_j∧dz̄_j/(z̄z) − (z̄_j dz_j)∧(z_k dz̄_k)/(z̄z)²
    use hrr_core::exterior::complex_basis::{dz, dzbar};
    let g = geom(hopf(2));
    let x = hopf_point(2, 4);
    let (_, f0) = g.det_bundle(&x).unwrap();
    let z = complex_coords(&x);
    let r2: f64 = z.iter().map(|v| v.norm_sqr()).sum();
    let mut a = hrr_core::exterior::PolyForm::zero(4);
    let mut zdz = hrr_core::exterior::PolyForm::zero(4);
    let mut zdzb = hrr_core::exterior::PolyForm::zero(4);
    for (j, zj) in z.iter().enumerate() {
        a += &dz(4, j).wedge(&dzbar(4, j)).unwrap().scale_real(1.0 / r2);
        zdz += &dz(4, j).scale(zj.conj());
        zdzb += &dzbar(4, j).scale(*zj);
    }
    let shape = &a - &zdz.wedge(&zdzb).unwrap().scale_real(1.0 / (r2 * r2));
    // find the proportionality constant from the largest coefficient
    let (idx, _) = shape
        .raw()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .unwrap();
    let ratio = f0.raw()[idx] / shape.raw()[idx];
    assert!(f0.max_diff(&shape.scale(ratio)) < 1e-7);
    assert!(ratio.norm() > 1e-3);
}

#[test]
fn frame_rotation_leaves_curvature_invariants() {
    let base = geom(twisted_torus());
    let rotated = base.clone().with_gauge(Arc::new(|x: &[f64]| {
        let t = 0.7 * x[0] + 0.3 * x[3];
        let (s, co) = t.sin_cos();
        let ph = Complex64::from_polar(1.0, 0.4 * x[1]);
        CMatrix::from_row_slice(2, 2, &[c(co, 0.0) * ph, c(-s, 0.0), c(s, 0.0) * ph, c(co, 0.0)])
    }));
    let x = generic_point(4, 3);
    let r1 = base.curvature(ConnectionChoice::Bismut, &x).unwrap().holomorphic_block();
    let r2 = rotated.curvature(ConnectionChoice::Bismut, &x).unwrap().holomorphic_block();
    let p1 = r1.wedge(&r1).unwrap().trace();
    let p2 = r2.wedge(&r2).unwrap().trace();
    assert!(r1.trace().max_diff(&r2.trace()) < 1e-8);
    assert!(p1.max_diff(&p2) < 1e-8);
}

#[test]
fn metric_trait_object_reports_domain() {
    let m: Arc<dyn HermitianMetricField> = Arc::new(hopf(2));
    assert!(!m.domain().contains(&[0.1, 0.0, 0.0, 0.0]));
}
