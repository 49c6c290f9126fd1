//! Energy current of the equations of variation and numerical certification
//! of its positivity against past-directed timelike one-forms.

use nalgebra::{SMatrix, SVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::fluid3d_kernels::{acoustical_metric_state, four_velocity, lower, m_inner, AcousticalMetric, Vec4};

pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Vec6 = SVector<f64, 6>;

/// `V = (h, u^0, u^1, u^2, u^3, s)` with `h` the log-enthalpy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolutionArray {
    pub h: f64,
    pub u: [f64; 4],
    pub s: f64,
}

/// Free variation `(hdot, udot^0..udot^3, sdot)`.
pub type VariationArray = Vec6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateCoefficients {
    pub c: f64,
    pub q: f64,
    pub u: Vec4,
}

impl SolutionArray {
    pub fn from_spatial(h: f64, spatial: [f64; 3], s: f64) -> Self {
        Self { h, u: four_velocity(spatial).into(), s }
    }

    pub fn u(&self) -> Vec4 {
        Vec4::from(self.u)
    }

    pub fn coefficients(&self, eos: &EquationOfState) -> Result<StateCoefficients> {
        let c = eos.c_of_log(self.h, self.s);
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::Hyperbolicity(format!("c = {c} at h = {}, s = {}", self.h, self.s)));
        }
        Ok(StateCoefficients { c, q: eos.q(self.h, self.s), u: self.u() })
    }
}

/// The current `J^a[Vdot, Vdot]` (all eight terms).
pub fn energy_current(k: &StateCoefficients, f1: f64, f2: f64, vdot: &VariationArray) -> Vec4 {
    let (c2, q, u) = (k.c * k.c, k.q, k.u);
    let hd = vdot[0];
    let ud = Vec4::new(vdot[1], vdot[2], vdot[3], vdot[4]);
    let sd = vdot[5];
    let ud_ud = m_inner(&ud, &ud);
    let u_ud = m_inner(&u, &ud);
    let along_u = f1 * sd * sd - 2.0 * q * sd * hd + hd * hd + c2 * ud_ud + 2.0 * c2 * u_ud * hd + f2 * u_ud * u_ud;
    let along_ud = -2.0 * c2 * q * sd + 2.0 * c2 * hd;
    u * along_u + ud * along_ud
}

/// `xi_a J^a` as a quadratic form in the variation.
pub fn contracted_current(k: &StateCoefficients, xi: &Vec4, f1: f64, f2: f64, vdot: &VariationArray) -> f64 {
    xi.dot(&energy_current(k, f1, f2, vdot))
}

/// Symmetric `M` with `xi_a J^a[Vdot, Vdot] = Vdot^T M Vdot`, by polarization.
pub fn bilinear_form(k: &StateCoefficients, xi: &Vec4, f1: f64, f2: f64) -> Mat6 {
    let q = |v: &Vec6| contracted_current(k, xi, f1, f2, v);
    let e = |i: usize| Vec6::from_fn(|r, _| if r == i { 1.0 } else { 0.0 });
    let diag: [f64; 6] = std::array::from_fn(|i| q(&e(i)));
    let mut m = Mat6::from_diagonal(&Vec6::from(diag));
    for i in 0..6 {
        for j in i + 1..6 {
            let off = 0.5 * (q(&(e(i) + e(j))) - diag[i] - diag[j]);
            m[(i, j)] = off;
            m[(j, i)] = off;
        }
    }
    m
}

pub fn min_eigenvalue(m: &Mat6) -> f64 {
    SymmetricEigen::new(*m).eigenvalues.min()
}

/// Checks the hypotheses `(h^-1)(xi, xi) < 0` and `xi_0 > 0`.
pub fn check_past_timelike(metric: &AcousticalMetric, xi: &Vec4) -> Result<()> {
    let norm = metric.inner_inv(xi, xi);
    if norm < 0.0 && xi[0] > 0.0 {
        Ok(())
    } else {
        Err(Error::NotTimelike(format!("h^-1(xi, xi) = {norm}, xi_0 = {}", xi[0])))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompactSet {
    pub h_range: [f64; 2],
    pub s_range: [f64; 2],
    /// Bound on each spatial velocity component.
    pub u_max: f64,
    /// Bound on the spatial part of `xi`.
    pub xi_spatial_max: f64,
    /// Range of the excess of `xi_0` above the timelike threshold.
    pub xi_margin: [f64; 2],
}

impl Default for CompactSet {
    fn default() -> Self {
        Self { h_range: [-1.0, 1.0], s_range: [0.0, 0.0], u_max: 1.0, xi_spatial_max: 1.0, xi_margin: [0.05, 1.0] }
    }
}

/// One sampled `(state, xi)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StateSample {
    pub state: SolutionArray,
    pub xi: [f64; 4],
}

/// Draws states in `K` and past-directed `h`-timelike one-forms.
///
/// With `(h^-1)^{00} = -1`, `xi` is timelike exactly when
/// `xi_0 > b + sqrt(b^2 + d)` where `b = (h^-1)^{0i} xi_i` and
/// `d = (h^-1)^{ij} xi_i xi_j` (or `xi_0 > 0` if that bound is negative);
/// the sample adds a positive margin.
pub fn sample_pairs(k: &CompactSet, eos: &EquationOfState, count: usize, seed: u64) -> Vec<StateSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let h = rng.gen_range(k.h_range[0]..=k.h_range[1]);
            let s = rng.gen_range(k.s_range[0]..=k.s_range[1]);
            let spatial: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-k.u_max..=k.u_max));
            let state = SolutionArray::from_spatial(h, spatial, s);
            let metric = acoustical_metric_state(eos.c_of_log(h, s), &state.u());
            let xs: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-k.xi_spatial_max..=k.xi_spatial_max));
            let mut b = 0.0;
            let mut d = 0.0;
            for i in 0..3 {
                b += metric.h_inv[(0, i + 1)] * xs[i];
                for j in 0..3 {
                    d += metric.h_inv[(i + 1, j + 1)] * xs[i] * xs[j];
                }
            }
            let xi0 = (b + (b * b + d).max(0.0).sqrt()).max(0.0) + rng.gen_range(k.xi_margin[0]..=k.xi_margin[1]);
            StateSample { state, xi: [xi0, xs[0], xs[1], xs[2]] }
        })
        .collect()
}

/// Margin required of the smallest eigenvalue.
pub const POSITIVITY_MARGIN: f64 = 1e-6;
const MAX_DOUBLINGS: u32 = 60;

/// Smallest `f = 2^k` (`f1 = f2 = f`) making the form positive definite with margin.
pub fn threshold_for(sample: &StateSample, eos: &EquationOfState) -> Result<(f64, f64)> {
    let k = sample.state.coefficients(eos)?;
    let xi = Vec4::from(sample.xi);
    check_past_timelike(&acoustical_metric_state(k.c, &k.u), &xi)?;
    let mut f = 1.0;
    for _ in 0..MAX_DOUBLINGS {
        let lambda = min_eigenvalue(&bilinear_form(&k, &xi, f, f));
        if lambda > POSITIVITY_MARGIN {
            return Ok((f, lambda));
        }
        f *= 2.0;
    }
    Err(Error::SearchExhausted(format!("no f1 = f2 <= 2^{MAX_DOUBLINGS} makes the form positive")))
}

/// `m`-orthonormal basis of the `m`-orthogonal complement of `u`.
pub fn orthonormal_complement(u: &Vec4) -> [Vec4; 3] {
    let mut basis: Vec<Vec4> = Vec::with_capacity(3);
    for axis in 1..4 {
        let mut e = Vec4::zeros();
        e[axis] = 1.0;
        // Project with Pi, then Gram-Schmidt in m.
        let mut v = e + u * m_inner(u, &e);
        for b in &basis {
            v -= b * m_inner(b, &v);
        }
        basis.push(v / m_inner(&v, &v).sqrt());
    }
    [basis[0], basis[1], basis[2]]
}

/// Form of `xi_a J^a` with `f1 = f2 = 0` restricted to `sdot = 0`, `u_k udot^k = 0`,
/// in the coordinates `(hdot, a_1, a_2, a_3)` with `udot = sum a_i e_i`. Since
/// `hdot^2 + udot_k udot^k = |(hdot, a)|^2`, its smallest eigenvalue is the
/// best constant of the reduced inequality.
pub fn reduced_form(k: &StateCoefficients, xi: &Vec4) -> SMatrix<f64, 4, 4> {
    let e = orthonormal_complement(&k.u);
    let lift = |w: &SVector<f64, 4>| -> Vec6 {
        let ud = e[0] * w[1] + e[1] * w[2] + e[2] * w[3];
        Vec6::from_column_slice(&[w[0], ud[0], ud[1], ud[2], ud[3], 0.0])
    };
    let q = |w: &SVector<f64, 4>| contracted_current(k, xi, 0.0, 0.0, &lift(w));
    let unit = |i: usize| SVector::<f64, 4>::from_fn(|r, _| if r == i { 1.0 } else { 0.0 });
    let diag: [f64; 4] = std::array::from_fn(|i| q(&unit(i)));
    let mut m = SMatrix::<f64, 4, 4>::from_diagonal(&SVector::from(diag));
    for i in 0..4 {
        for j in i + 1..4 {
            let off = 0.5 * (q(&(unit(i) + unit(j))) - diag[i] - diag[j]);
            m[(i, j)] = off;
            m[(j, i)] = off;
        }
    }
    m
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub samples: usize,
    /// Smallest common `f1 = f2` found by doubling that works for every sample.
    pub threshold: f64,
    /// Largest per-sample threshold (equals `threshold`).
    pub per_sample_max_threshold: f64,
    /// Minimum over samples of the smallest eigenvalue at `threshold`.
    pub min_eigenvalue: f64,
    /// Minimum over samples of the reduced constant (`f1 = f2 = 0`, restricted variations).
    pub min_reduced_constant: f64,
    pub reduced_all_positive: bool,
    /// Observed range of `xi_k u^k`.
    pub xi_parallel_range: [f64; 2],
    /// Minimum Rayleigh quotient over random unit variations at `threshold`.
    pub min_rayleigh: f64,
    pub passed: bool,
}

/// Certifies positivity on sampled `(state, xi)` pairs: per-sample doubling
/// search, the common threshold, the reduced inequality and random unit
/// variations (`variations` per sample).
pub fn positivity_scan(samples: &[StateSample], eos: &EquationOfState, variations: usize, seed: u64) -> Result<PositivityReport> {
    let per_sample: Vec<(f64, f64, f64, f64)> = samples
        .par_iter()
        .map(|s| {
            let (f, _) = threshold_for(s, eos)?;
            let k = s.state.coefficients(eos)?;
            let xi = Vec4::from(s.xi);
            let reduced = SymmetricEigen::new(reduced_form(&k, &xi)).eigenvalues.min();
            let xi_par = xi.dot(&k.u);
            Ok((f, reduced, xi_par, lower(&k.u)[0]))
        })
        .collect::<Result<_>>()?;
    let threshold = per_sample.iter().map(|r| r.0).fold(1.0, f64::max);
    let min_reduced = per_sample.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let xi_par = per_sample.iter().fold([f64::INFINITY, f64::NEG_INFINITY], |m, r| [m[0].min(r.2), m[1].max(r.2)]);
    let (min_eig, min_rayleigh) = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let k = s.state.coefficients(eos)?;
            let xi = Vec4::from(s.xi);
            let m = bilinear_form(&k, &xi, threshold, threshold);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let mut worst = f64::INFINITY;
            for _ in 0..variations {
                let v = Vec6::from_fn(|_, _| rng.gen_range(-1.0..=1.0));
                let n = v.norm();
                if n > 0.0 {
                    worst = worst.min(contracted_current(&k, &xi, threshold, threshold, &(v / n)));
                }
            }
            Ok((min_eigenvalue(&m), worst))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((f64::INFINITY, f64::INFINITY), |a, b| (a.0.min(b.0), a.1.min(b.1)));
    let reduced_all_positive = min_reduced > 0.0;
    Ok(PositivityReport {
        samples: samples.len(),
        threshold,
        per_sample_max_threshold: threshold,
        min_eigenvalue: min_eig,
        min_reduced_constant: min_reduced,
        reduced_all_positive,
        xi_parallel_range: xi_par,
        min_rayleigh,
        passed: min_eig > POSITIVITY_MARGIN && reduced_all_positive && xi_par[0] > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eos() -> EquationOfState {
        EquationOfState::default_constant()
    }

    fn rest() -> StateCoefficients {
        SolutionArray::from_spatial(0.0, [0.0; 3], 0.0).coefficients(&eos()).unwrap()
    }

    #[test]
    fn constant_state_reduces_to_squares() {
        let k = rest();
        let xi = Vec4::new(1.0, 0.0, 0.0, 0.0);
        let v = Vec6::from_column_slice(&[0.7, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((contracted_current(&k, &xi, 0.0, 0.0, &v) - 0.49).abs() < 1e-15);
    }

    #[test]
    fn entropy_direction_needs_threshold() {
        let k = rest();
        let xi = Vec4::new(1.0, 0.0, 0.0, 0.0);
        let m = bilinear_form(&k, &xi, 0.0, 0.0);
        assert!(min_eigenvalue(&m) <= 0.0);
        let sample = StateSample { state: SolutionArray::from_spatial(0.0, [0.0; 3], 0.0), xi: [1.0, 0.0, 0.0, 0.0] };
        let (f, lambda) = threshold_for(&sample, &eos()).unwrap();
        assert!(f >= 1.0 && lambda > POSITIVITY_MARGIN);
    }

    #[test]
    fn rejects_spacelike_xi() {
        let sample = StateSample { state: SolutionArray::from_spatial(0.0, [0.0; 3], 0.0), xi: [0.1, 1.0, 0.0, 0.0] };
        assert!(matches!(threshold_for(&sample, &eos()), Err(Error::NotTimelike(_))));
        let future = StateSample { xi: [-1.0, 0.0, 0.0, 0.0], ..sample };
        assert!(matches!(threshold_for(&future, &eos()), Err(Error::NotTimelike(_))));
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        let u = four_velocity([0.3, -0.8, 0.5]);
        let e = orthonormal_complement(&u);
        for i in 0..3 {
            assert!(m_inner(&u, &e[i]).abs() < 1e-13);
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                assert!((m_inner(&e[i], &e[j]) - d).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn sampled_xi_are_past_timelike() {
        let e = eos();
        for s in sample_pairs(&CompactSet::default(), &e, 200, 7) {
            let metric = acoustical_metric_state(0.5, &s.state.u());
            check_past_timelike(&metric, &Vec4::from(s.xi)).unwrap();
        }
    }

    #[test]
    fn scan_passes_on_default_set() {
        let e = eos();
        let pairs = sample_pairs(&CompactSet::default(), &e, 100, 1);
        let report = positivity_scan(&pairs, &e, 50, 2).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(report.min_rayleigh > 0.0);
    }

    proptest! {
        #[test]
        fn matrix_reproduces_quadratic_form(
            spatial in prop::array::uniform3(-1.0f64..1.0),
            h in -1.0f64..1.0,
            xi in prop::array::uniform4(-2.0f64..2.0),
            v in prop::array::uniform6(-1.0f64..1.0),
            f in 0.0f64..50.0,
        ) {
            let k = SolutionArray::from_spatial(h, spatial, 0.0).coefficients(&eos()).unwrap();
            let xi = Vec4::from(xi);
            let v = Vec6::from(v);
            let m = bilinear_form(&k, &xi, f, 2.0 * f);
            let direct = contracted_current(&k, &xi, f, 2.0 * f, &v);
            prop_assert!((v.dot(&(m * v)) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
            prop_assert!((m - m.transpose()).amax() == 0.0);
        }

        #[test]
        fn current_is_quadratic(
            spatial in prop::array::uniform3(-1.0f64..1.0),
            v in prop::array::uniform6(-1.0f64..1.0),
            lambda in -3.0f64..3.0,
        ) {
            let k = SolutionArray::from_spatial(0.2, spatial, 0.0).coefficients(&eos()).unwrap();
            let v = Vec6::from(v);
            let j = energy_current(&k, 1.5, 2.5, &v);
            let jl = energy_current(&k, 1.5, 2.5, &(v * lambda));
            prop_assert!((jl - j * (lambda * lambda)).amax() <= 1e-12 * (1.0 + j.amax()) * (1.0 + lambda * lambda));
        }
    }
}
