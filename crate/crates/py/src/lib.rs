use clap::ValueEnum;
use dl_engine::admissible_ops::DEFAULT_STEP_BUDGET;
use dl_engine::cli_io::{compute_dims, run_verify, CliError, Common, Format, Space, Theorem, VerifyArgs};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: CliError) -> PyErr {
    match e {
        CliError::Invalid(m) => PyValueError::new_err(m),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: ValueEnum>(s: &str) -> PyResult<T> {
    T::from_str(s, true).map_err(PyValueError::new_err)
}

fn common(prime: u32, max_degree: i64) -> Common {
    Common { prime, max_degree, format: Format::Json, cache_dir: None, threads: None, step_budget: DEFAULT_STEP_BUDGET }
}

/// Per-degree dimensions of `space` through `max_degree`.
#[pyfunction]
#[pyo3(signature = (space, prime, max_degree = 40))]
fn dims(py: Python<'_>, space: &str, prime: u32, max_degree: i64) -> PyResult<Vec<u64>> {
    let space: Space = parse(space)?;
    if max_degree < 0 {
        return Err(PyValueError::new_err("max_degree must be >= 0"));
    }
    py.detach(|| compute_dims(space, prime, max_degree, DEFAULT_STEP_BUDGET)).map(|r| r.dims).map_err(to_py)
}

/// Runs one check; returns (theorem, pass, witnesses) per verdict.
#[pyfunction]
#[pyo3(signature = (theorem, prime, max_degree = 40, space = None))]
fn verify(
    py: Python<'_>,
    theorem: &str,
    prime: u32,
    max_degree: i64,
    space: Option<&str>,
) -> PyResult<Vec<(String, bool, Vec<String>)>> {
    let args = VerifyArgs { theorem: parse::<Theorem>(theorem)?, space: space.map(parse).transpose()?, common: common(prime, max_degree) };
    let verdicts = py.detach(|| run_verify(&args)).map_err(to_py)?;
    Ok(verdicts.into_iter().map(|v| (v.theorem, v.pass, v.witnesses)).collect())
}

#[pymodule]
fn dl_engine_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(dims, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
