use borromean::potentials::{Family as CoreFamily, PotentialSpec, TailSpec};
use borromean::threebody::{self, ThreeBodyOptions};
use borromean::twobody::{self, ThresholdOptions};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(borromean_py, BorromeanError, PyException);

fn err(e: borromean::Error) -> PyErr {
    BorromeanError::new_err(e.to_string())
}

/// A radial pair potential.
#[pyclass(frozen, skip_from_py_object, name = "Potential")]
#[derive(Clone)]
struct Potential(PotentialSpec);

#[pymethods]
impl Potential {
    /// Sum of `amplitude * exp(-r^2 / (2 width^2))` over `(amplitude, width)` pairs.
    #[staticmethod]
    fn gaussian_sum(terms: Vec<(f64, f64)>) -> PyResult<Self> {
        let spec = PotentialSpec::GaussianSum { terms };
        spec.validate().map_err(err)?;
        Ok(Potential(spec))
    }

    #[staticmethod]
    fn square_well_barrier(lambda_minus: f64, lambda_plus: f64, rs: f64, rl: f64) -> PyResult<Self> {
        let spec = PotentialSpec::SquareWellBarrier {
            lambda_minus,
            lambda_plus,
            rs,
            rl,
        };
        spec.validate().map_err(err)?;
        Ok(Potential(spec))
    }

    #[staticmethod]
    fn core_well(lambda_plus: f64, lambda_minus: f64, rs: f64, rl: f64) -> PyResult<Self> {
        let spec = PotentialSpec::CoreWell {
            lambda_plus,
            lambda_minus,
            rs,
            rl,
        };
        spec.validate().map_err(err)?;
        Ok(Potential(spec))
    }

    #[staticmethod]
    fn truncated_oscillator(g: f64, cutoff: f64) -> PyResult<Self> {
        let spec = PotentialSpec::TruncatedOscillator {
            g,
            cutoff,
            tail: TailSpec::Zero,
        };
        spec.validate().map_err(err)?;
        Ok(Potential(spec))
    }

    #[staticmethod]
    fn borromean_example() -> Self {
        Potential(PotentialSpec::borromean_example())
    }

    /// Parse the TOML form used by sweep configs.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let spec: PotentialSpec = toml::from_str(text).map_err(|e| BorromeanError::new_err(e.to_string()))?;
        spec.validate().map_err(err)?;
        Ok(Potential(spec))
    }

    fn scaled(&self, factor: f64) -> Self {
        Potential(self.0.clone().scaled(factor))
    }

    fn __call__(&self, r: f64) -> PyResult<f64> {
        borromean::potentials::evaluate(&self.0, r).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Potential({:?})", self.0)
    }
}

/// A strength-parameterized family `lambda_plus V+ + lambda_minus V-`.
#[pyclass(frozen, skip_from_py_object, name = "Family")]
#[derive(Clone)]
struct Family(CoreFamily);

#[pymethods]
impl Family {
    #[staticmethod]
    fn square_well_barrier(rs: f64, rl: f64) -> Self {
        Family(CoreFamily::SquareWellBarrier { rs, rl })
    }

    #[staticmethod]
    fn core_well(rs: f64, rl: f64) -> Self {
        Family(CoreFamily::CoreWell { rs, rl })
    }

    #[staticmethod]
    fn delta_shell(c: f64, d: f64) -> Self {
        Family(CoreFamily::DeltaShell { c, d })
    }

    #[staticmethod]
    #[pyo3(signature = (shape, balanced = true))]
    fn shape(shape: &Potential, balanced: bool) -> Self {
        Family(CoreFamily::Shape {
            shape: shape.0.clone(),
            balanced,
        })
    }

    #[staticmethod]
    fn fig3() -> Self {
        Family(CoreFamily::fig3())
    }

    fn at(&self, lambda_minus: f64, lambda_plus: f64) -> PyResult<Potential> {
        Ok(Potential(self.0.spec(lambda_minus, lambda_plus).map_err(err)?))
    }

    fn __repr__(&self) -> String {
        format!("Family({:?})", self.0)
    }
}

#[pyclass(frozen, get_all, name = "ThresholdPoint")]
struct ThresholdPoint {
    lambda_minus: f64,
    /// `inf` when binding persists up to the ceiling.
    lambda_plus_cr: f64,
    method: String,
    residual: f64,
}

impl From<twobody::ThresholdPoint> for ThresholdPoint {
    fn from(p: twobody::ThresholdPoint) -> Self {
        ThresholdPoint {
            lambda_minus: p.lambda_minus,
            lambda_plus_cr: p.lambda_plus_cr,
            method: p.method.as_str().into(),
            residual: p.residual,
        }
    }
}

#[pymethods]
impl ThresholdPoint {
    fn __repr__(&self) -> String {
        format!(
            "ThresholdPoint(lambda_minus={}, lambda_plus_cr={}, method={}, residual={:e})",
            self.lambda_minus, self.lambda_plus_cr, self.method, self.residual
        )
    }
}

#[pyclass(frozen, get_all, name = "BoundState")]
struct BoundState {
    energy: f64,
    rms_radius: f64,
    node_count: usize,
}

#[pyclass(frozen, get_all, name = "Spectrum3")]
struct Spectrum3 {
    energies: Vec<f64>,
    basis_size: usize,
    rms_radius_ground: f64,
    rms_radii: Vec<f64>,
    converged: bool,
}

#[pymethods]
impl Spectrum3 {
    fn ground(&self) -> f64 {
        self.energies.first().copied().unwrap_or(f64::INFINITY)
    }
}

#[pyclass(frozen, get_all, name = "BorromeanWindow")]
struct BorromeanWindow {
    lambda_minus: f64,
    lambda_plus_cr: f64,
    big_lambda_plus_cr: f64,
    window_open: bool,
    basis_size: usize,
    residual: f64,
}

#[pyfunction]
#[pyo3(signature = (family, lambda_minus, tol = 1e-10))]
fn critical_lambda_plus(family: &Family, lambda_minus: f64, tol: f64) -> PyResult<ThresholdPoint> {
    let opts = ThresholdOptions {
        tol,
        ..ThresholdOptions::default()
    };
    Ok(twobody::critical_lambda_plus(&family.0, lambda_minus, &opts)
        .map_err(err)?
        .into())
}

#[pyfunction]
fn weak_limit_lambda_plus(family: &Family, lambda_minus: f64) -> PyResult<f64> {
    twobody::weak_limit_lambda_plus(&family.0, lambda_minus).map_err(err)
}

#[pyfunction]
fn zero_energy_bound_count(potential: &Potential) -> PyResult<usize> {
    twobody::zero_energy_bound_count(&potential.0).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (potential, max_states = 8))]
fn bound_states(potential: &Potential, max_states: usize) -> PyResult<Vec<BoundState>> {
    Ok(twobody::bound_states(&potential.0, max_states)
        .map_err(err)?
        .into_iter()
        .map(|b| BoundState {
            energy: b.energy,
            rms_radius: b.rms_radius,
            node_count: b.node_count,
        })
        .collect())
}

#[pyfunction]
fn h_of_s(s: f64) -> PyResult<f64> {
    twobody::h_of_s(s).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (potential, basis_budget, seed))]
fn trimer_spectrum(potential: &Potential, basis_budget: usize, seed: u64) -> PyResult<Spectrum3> {
    let s = threebody::trimer_spectrum(&potential.0, basis_budget, seed).map_err(err)?;
    Ok(Spectrum3 {
        energies: s.energies,
        basis_size: s.basis_size,
        rms_radius_ground: s.rms_radius_ground,
        rms_radii: s.rms_radii,
        converged: s.converged,
    })
}

#[pyfunction]
#[pyo3(signature = (family, lambda_minus, budget = 120, seed = 1))]
fn borromean_point(family: &Family, lambda_minus: f64, budget: usize, seed: u64) -> PyResult<BorromeanWindow> {
    let opts = ThreeBodyOptions {
        budget,
        seed,
        ..ThreeBodyOptions::default()
    };
    let w = threebody::borromean_point(&family.0, lambda_minus, &opts).map_err(err)?;
    Ok(BorromeanWindow {
        lambda_minus: w.lambda_minus,
        lambda_plus_cr: w.lambda_plus_cr,
        big_lambda_plus_cr: w.big_lambda_plus_cr,
        window_open: w.window_open,
        basis_size: w.basis_size,
        residual: w.residual,
    })
}

#[pymodule]
fn borromean_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BorromeanError", m.py().get_type::<BorromeanError>())?;
    m.add_class::<Potential>()?;
    m.add_class::<Family>()?;
    m.add_class::<ThresholdPoint>()?;
    m.add_class::<BoundState>()?;
    m.add_class::<Spectrum3>()?;
    m.add_class::<BorromeanWindow>()?;
    m.add_function(wrap_pyfunction!(critical_lambda_plus, m)?)?;
    m.add_function(wrap_pyfunction!(weak_limit_lambda_plus, m)?)?;
    m.add_function(wrap_pyfunction!(zero_energy_bound_count, m)?)?;
    m.add_function(wrap_pyfunction!(bound_states, m)?)?;
    m.add_function(wrap_pyfunction!(h_of_s, m)?)?;
    m.add_function(wrap_pyfunction!(trimer_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(borromean_point, m)?)?;
    Ok(())
}
