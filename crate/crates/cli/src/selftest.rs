//! Analytic-oracle and property suites run by `qcoherence selftest`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use qcoherence::linalg::{hermitian_eigenvalues, spectrum_entropy, CVector, C64};
use qcoherence::metric::qjsd_in_base;
use qcoherence::{
    bell_state, closest_incoherent, closest_separable, ghz_state, BasisSpec, BellSign,
    OptimOptions, QuantumState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RANDOM_CASES: usize = 200;

pub struct SuiteResult {
    pub name: &'static str,
    pub checks: usize,
    pub max_deviation: f64,
    pub failures: usize,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            max_deviation: 0.0,
            failures: 0,
        }
    }

    /// Records `deviation` against the allowed `tolerance`.
    fn record(&mut self, deviation: f64, tolerance: f64) {
        self.checks += 1;
        self.max_deviation = self.max_deviation.max(deviation);
        if !(deviation <= tolerance) {
            self.failures += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn h2(p: f64) -> f64 {
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

fn ket(amps: &[f64]) -> QuantumState {
    let v = CVector::from_iterator(amps.len(), amps.iter().map(|&a| C64::new(a, 0.0)));
    let sites = amps.len().trailing_zeros() as usize;
    QuantumState::from_pure(vec![2; sites], &v).expect("normalized amplitudes")
}

fn random_state(rng: &mut ChaCha8Rng) -> QuantumState {
    let sites = rng.random_range(1..=2);
    let d = 1 << sites;
    let rank = rng.random_range(1..=d);
    QuantumState::random_mixed(vec![2; sites], rank, rng)
}

struct Metric {
    base: f64,
}

impl Metric {
    fn divergence(&self, a: &QuantumState, b: &QuantumState) -> f64 {
        qjsd_in_base(a, b, self.base).expect("matching dims")
    }

    fn distance(&self, a: &QuantumState, b: &QuantumState) -> f64 {
        self.divergence(a, b).sqrt()
    }

    fn entropy(&self, a: &QuantumState) -> f64 {
        spectrum_entropy(&hermitian_eigenvalues(a.matrix()), self.base)
    }
}

fn entropy_oracles(m: &Metric) -> SuiteResult {
    let mut s = SuiteResult::new("entropy oracles");
    let cases = [
        (QuantumState::maximally_mixed(vec![2]), 1.0),
        (QuantumState::maximally_mixed(vec![2, 2]), 2.0),
        (QuantumState::diagonal(vec![2], &[0.75, 0.25]).unwrap(), h2(0.75)),
        (bell_state(BellSign::Minus), 0.0),
    ];
    for (state, expected) in cases {
        s.record((m.entropy(&state) - expected).abs(), 1e-12);
    }
    s
}

fn divergence_oracles(m: &Metric) -> SuiteResult {
    let mut s = SuiteResult::new("divergence oracles");
    let zero = ket(&[1.0, 0.0]);
    let one = ket(&[0.0, 1.0]);
    let plus = ket(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
    let dephased = QuantumState::diagonal(vec![2, 2], &[0.5, 0.0, 0.0, 0.5]).unwrap();
    let cases = [
        (m.divergence(&zero, &one), 1.0),
        (m.divergence(&zero, &plus), h2((1.0 + FRAC_1_SQRT_2) / 2.0)),
        (m.divergence(&bell_state(BellSign::Minus), &dephased), h2(0.75) - 0.5),
        (m.divergence(&bell_state(BellSign::Minus), &bell_state(BellSign::Plus)), 1.0),
        (m.divergence(&plus, &plus), 0.0),
    ];
    for (got, expected) in cases {
        s.record((got - expected).abs(), 1e-12);
    }
    s
}

fn bounds(m: &Metric, seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new("bounds");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_CASES {
        let a = random_state(&mut rng);
        let dims = a.dims().to_vec();
        let b = QuantumState::random_mixed(dims.clone(), rng.random_range(1..=a.dim()), &mut rng);
        let d = m.distance(&a, &b);
        s.record((-d).max(d - 1.0).max(0.0), 1e-12);
        // orthogonal pure states attain the upper bound
        let psi = QuantumState::random_pure(dims, &mut rng);
        let spec = psi.spectrum();
        let top = spec.eigenvectors.column(psi.dim() - 1).into_owned();
        let other = spec.eigenvectors.column(0).into_owned();
        let p = QuantumState::from_pure(psi.dims().to_vec(), &top).unwrap();
        let q = QuantumState::from_pure(psi.dims().to_vec(), &other).unwrap();
        s.record((m.distance(&p, &q) - 1.0).abs(), 1e-9);
    }
    s
}

fn triangle(m: &Metric, seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new("triangle and symmetry");
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    for _ in 0..RANDOM_CASES {
        let a = random_state(&mut rng);
        let mut others = (0..2).map(|_| {
            let rank = rng.random_range(1..=a.dim());
            QuantumState::random_mixed(a.dims().to_vec(), rank, &mut rng)
        });
        let (b, c) = (others.next().unwrap(), others.next().unwrap());
        let (ab, bc, ac) = (m.distance(&a, &b), m.distance(&b, &c), m.distance(&a, &c));
        s.record((ac - ab - bc).max(0.0), 1e-9);
        s.record((ab - m.distance(&b, &a)).abs(), 0.0);
    }
    s
}

fn minimizers(seed: u64) -> SuiteResult {
    let mut s = SuiteResult::new("minimizer oracles");
    let opts = OptimOptions {
        seed,
        ..OptimOptions::default()
    };
    let bell_j = h2(0.75) - 0.5;
    let plus = ket(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
    let bell = bell_state(BellSign::Minus);
    let cases = [
        (closest_incoherent(&plus, &BasisSpec::computational(&[2]), &opts), 1e-6),
        (closest_incoherent(&bell, &BasisSpec::computational(&[2, 2]), &opts), 1e-6),
        (closest_separable(&bell, &[vec![0], vec![1]], &opts), 1e-6),
        (closest_separable(&ghz_state(FRAC_PI_4), &[vec![0], vec![1], vec![2]], &opts), 1e-4),
    ];
    for (res, tol) in cases {
        match res {
            Ok(r) => s.record((r.objective - bell_j).abs(), tol),
            Err(_) => s.record(f64::INFINITY, tol),
        }
    }
    s
}

/// Runs every suite; `entropy_base` other than 2 corrupts the metric suites.
pub fn run(seed: u64, entropy_base: f64) -> Vec<SuiteResult> {
    let m = Metric { base: entropy_base };
    vec![
        entropy_oracles(&m),
        divergence_oracles(&m),
        bounds(&m, seed),
        triangle(&m, seed),
        minimizers(seed),
    ]
}
