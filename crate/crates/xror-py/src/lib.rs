use pyo3::prelude::*;

#[pymodule]
fn xror_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
