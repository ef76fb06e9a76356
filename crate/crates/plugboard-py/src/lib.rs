//! Python bindings: constructions, the primitive inventory, the functional
//! layer, both evaluators, and the spike codec. Values cross the boundary
//! as Python ints (u64 at this surface; the engine itself is unbounded).

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use pyo3::exceptions::{PyOverflowError, PyValueError};
use pyo3::prelude::*;

use plugboard::eval;
use plugboard::functionals;
use plugboard::netgraph;
use plugboard::primitives;
use plugboard::program;
use plugboard::spikecodec;
use plugboard::types;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

fn bigs(vs: &[u64]) -> Vec<BigUint> {
    vs.iter().map(|&v| BigUint::from(v)).collect()
}

fn smalls(vs: Vec<BigUint>) -> PyResult<Vec<u64>> {
    vs.into_iter()
        .map(|v| {
            v.to_u64()
                .ok_or_else(|| PyOverflowError::new_err(format!("value {v} exceeds u64")))
        })
        .collect()
}

/// A board-and-link construction with a typed interface shell.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Construction {
    inner: netgraph::Construction,
}

impl Construction {
    fn wrap(inner: netgraph::Construction) -> Construction {
        Construction { inner }
    }
}

#[pymethods]
impl Construction {
    /// Canonical text of the interface type, e.g. `(N;N) -> N`.
    fn interface_type(&self) -> String {
        types::format_type(self.inner.interface_type())
    }

    fn board_count(&self) -> usize {
        self.inner.board_count()
    }

    fn link_count(&self) -> usize {
        self.inner.link_count()
    }

    /// Canonical serialized form (`.pbg` document).
    fn serialize(&self) -> String {
        self.inner.serialize()
    }

    fn to_dot(&self) -> String {
        self.inner.to_dot()
    }

    /// All invariant violations, empty for a valid construction.
    fn validate(&self) -> Vec<String> {
        self.inner.validate().iter().map(|v| v.to_string()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "<Construction {} boards={} links={}>",
            self.interface_type(),
            self.inner.board_count(),
            self.inner.link_count()
        )
    }
}

#[pyfunction]
fn succ() -> Construction {
    Construction::wrap(primitives::prim_succ())
}

#[pyfunction]
fn constant(k: u64) -> PyResult<Construction> {
    Ok(Construction::wrap(
        primitives::prim_const(big(k)).map_err(value_err)?,
    ))
}

#[pyfunction]
fn proj(index: usize, arity: usize) -> PyResult<Construction> {
    Ok(Construction::wrap(
        primitives::prim_proj(index, arity).map_err(value_err)?,
    ))
}

#[pyfunction]
fn add() -> Construction {
    Construction::wrap(primitives::prim_add())
}

#[pyfunction]
fn numeral(k: u64) -> PyResult<Construction> {
    Ok(Construction::wrap(
        primitives::prim_numeral(big(k)).map_err(value_err)?,
    ))
}

#[pyfunction]
fn ackermann() -> Construction {
    Construction::wrap(functionals::build_ackermann())
}

#[pyfunction]
fn compose(f: &Construction, g: &Construction) -> PyResult<Construction> {
    Ok(Construction::wrap(
        functionals::compose_direct(&f.inner, &g.inner).map_err(value_err)?,
    ))
}

#[pyfunction]
fn compose_at(
    f: &Construction,
    plug: usize,
    g: &Construction,
    socket: usize,
) -> PyResult<Construction> {
    Ok(Construction::wrap(
        functionals::compose_at(&f.inner, plug, &g.inner, socket).map_err(value_err)?,
    ))
}

#[pyfunction]
fn product(f: &Construction, g: &Construction) -> PyResult<Construction> {
    Ok(Construction::wrap(
        primitives::product(&f.inner, &g.inner).map_err(value_err)?,
    ))
}

#[pyfunction]
fn apply(f: &Construction, g: &Construction) -> PyResult<Construction> {
    Ok(Construction::wrap(
        functionals::apply(&f.inner, &g.inner).map_err(value_err)?,
    ))
}

/// The composition gadget `((A -> B); (B -> C)) -> (A -> C)` for types
/// given in the type grammar.
#[pyfunction]
fn comp_gadget(a: &str, b: &str, c: &str) -> PyResult<Construction> {
    let parse = |s: &str| types::parse_type(s).map_err(value_err);
    Ok(Construction::wrap(
        functionals::comp_gadget(parse(a)?, parse(b)?, parse(c)?).construction,
    ))
}

/// The original and a fresh structural copy with disjoint board ids.
#[pyfunction]
fn copy(a: &Construction) -> (Construction, Construction) {
    let (orig, dup) = functionals::copy(&a.inner);
    (Construction::wrap(orig), Construction::wrap(dup))
}

/// The iteration gadget applied to `numeral(n)` and `f`, still folded.
#[pyfunction]
fn iterate(n: u64, f: &Construction) -> PyResult<Construction> {
    let count = primitives::prim_numeral(big(n)).map_err(value_err)?;
    Ok(Construction::wrap(
        functionals::iter_graph(&count, &f.inner).map_err(value_err)?,
    ))
}

/// The unfolded n-fold chain of `f`.
#[pyfunction]
fn iter_unfold(n: u64, f: &Construction) -> PyResult<Construction> {
    Ok(Construction::wrap(
        functionals::iter_unfold(n, &f.inner).map_err(value_err)?,
    ))
}

/// The recursion chain for count `k`: `base` then stages `step(1)..step(k-1)`,
/// where `step` is an uncurried `(N;A) -> A` circuit.
#[pyfunction]
fn rec(item: &str, base: &Construction, step: &Construction, k: u64) -> PyResult<Construction> {
    let item = types::parse_type(item).map_err(value_err)?;
    let rec = functionals::recursor(item);
    if step.inner.interface_type() != &rec.uncurried_step_type() {
        return Err(value_err(format!(
            "step must have type {}",
            types::format_type(&rec.uncurried_step_type())
        )));
    }
    let chained = rec
        .elaborate_at(
            &base.inner,
            |j| {
                functionals::bind_input(
                    &step.inner,
                    0,
                    &primitives::prim_numeral(j.into()).expect("j >= 1"),
                )
            },
            k,
        )
        .map_err(value_err)?;
    Ok(Construction::wrap(chained))
}

#[pyfunction]
fn elaborate(c: &Construction) -> PyResult<Construction> {
    Ok(Construction::wrap(
        eval::elaborate(&c.inner)
            .map_err(value_err)?
            .into_construction(),
    ))
}

#[pyfunction]
fn run_fast(c: &Construction, inputs: Vec<u64>) -> PyResult<Vec<u64>> {
    smalls(eval::run_fast_big(&c.inner, &bigs(&inputs)).map_err(value_err)?)
}

/// Token simulation of an elaborated circuit; returns the outputs and the
/// trace lines.
#[pyfunction]
fn run_tokens(c: &Construction, inputs: Vec<u64>) -> PyResult<(Vec<u64>, Vec<String>)> {
    let circuit = eval::elaborate(&c.inner).map_err(value_err)?;
    let (out, trace) = eval::run_tokens(&circuit, &bigs(&inputs)).map_err(value_err)?;
    let lines = trace.render().lines().map(str::to_string).collect();
    Ok((smalls(out)?, lines))
}

#[pyfunction]
fn deserialize(text: &str) -> PyResult<Construction> {
    Ok(Construction::wrap(
        netgraph::Construction::deserialize(text).map_err(value_err)?,
    ))
}

/// Builds a program text and returns its `main` construction.
#[pyfunction]
fn load_program(text: &str) -> PyResult<Construction> {
    let built = program::load_program(text).map_err(value_err)?;
    Ok(Construction::wrap(built.main().map_err(value_err)?.clone()))
}

/// One `name : type` line per definition.
#[pyfunction]
fn check_program(text: &str) -> PyResult<String> {
    Ok(program::load_program(text).map_err(value_err)?.type_report())
}

fn ms_to_time(ms: f64) -> PyResult<spikecodec::TimeMs> {
    if !(0.0..=1.0e12).contains(&ms) {
        return Err(value_err(format!("time {ms} ms out of range")));
    }
    Ok(spikecodec::TimeMs::from_micros((ms * 1000.0).round() as u64))
}

fn cfg(isi_ms: f64, gap_ms: f64) -> PyResult<spikecodec::BurstConfig> {
    spikecodec::BurstConfig::new(ms_to_time(isi_ms)?, ms_to_time(gap_ms)?).map_err(value_err)
}

/// Unary burst encoding: timestamps in milliseconds.
#[pyfunction]
#[pyo3(signature = (values, isi_ms = 2.0, gap_ms = 20.0, t0_ms = 0.0))]
fn encode_spikes(values: Vec<u64>, isi_ms: f64, gap_ms: f64, t0_ms: f64) -> PyResult<Vec<f64>> {
    let train = spikecodec::encode(&bigs(&values), &cfg(isi_ms, gap_ms)?, ms_to_time(t0_ms)?)
        .map_err(value_err)?;
    Ok(train
        .timestamps()
        .iter()
        .map(|t| t.micros() as f64 / 1000.0)
        .collect())
}

#[pyfunction]
#[pyo3(signature = (times_ms, isi_ms = 2.0, gap_ms = 20.0))]
fn decode_spikes(times_ms: Vec<f64>, isi_ms: f64, gap_ms: f64) -> PyResult<Vec<u64>> {
    let mut stamps = Vec::with_capacity(times_ms.len());
    for t in times_ms {
        stamps.push(ms_to_time(t)?);
    }
    let train = spikecodec::SpikeTrain::from_timestamps(stamps).map_err(value_err)?;
    smalls(spikecodec::decode(&train, &cfg(isi_ms, gap_ms)?).map_err(value_err)?)
}

#[pymodule]
fn plugboard_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Construction>()?;
    m.add_function(wrap_pyfunction!(succ, m)?)?;
    m.add_function(wrap_pyfunction!(constant, m)?)?;
    m.add_function(wrap_pyfunction!(proj, m)?)?;
    m.add_function(wrap_pyfunction!(add, m)?)?;
    m.add_function(wrap_pyfunction!(numeral, m)?)?;
    m.add_function(wrap_pyfunction!(ackermann, m)?)?;
    m.add_function(wrap_pyfunction!(compose, m)?)?;
    m.add_function(wrap_pyfunction!(compose_at, m)?)?;
    m.add_function(wrap_pyfunction!(product, m)?)?;
    m.add_function(wrap_pyfunction!(apply, m)?)?;
    m.add_function(wrap_pyfunction!(comp_gadget, m)?)?;
    m.add_function(wrap_pyfunction!(copy, m)?)?;
    m.add_function(wrap_pyfunction!(iterate, m)?)?;
    m.add_function(wrap_pyfunction!(iter_unfold, m)?)?;
    m.add_function(wrap_pyfunction!(rec, m)?)?;
    m.add_function(wrap_pyfunction!(elaborate, m)?)?;
    m.add_function(wrap_pyfunction!(run_fast, m)?)?;
    m.add_function(wrap_pyfunction!(run_tokens, m)?)?;
    m.add_function(wrap_pyfunction!(deserialize, m)?)?;
    m.add_function(wrap_pyfunction!(load_program, m)?)?;
    m.add_function(wrap_pyfunction!(check_program, m)?)?;
    m.add_function(wrap_pyfunction!(encode_spikes, m)?)?;
    m.add_function(wrap_pyfunction!(decode_spikes, m)?)?;
    Ok(())
}
