//! C interface to the haptofem solvers.
//!
//! Handles are opaque and owned by the caller: every `*_new`/constructor has a
//! matching `*_free`. Functions return an [`HfStatus`]; on failure the message
//! is available from [`hf_last_error_message`] on the same thread.
//!
//! Enumerated arguments are passed as `uint32_t` holding one of the
//! [`HfScheme`], [`HfProblem`] or [`HfField`] values.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use haptofem::scheme::InitialProjection;
use haptofem::{CgOptions, Error, FeSpace, ProblemKind, ProblemSetup, SchemeKind, Simulation, TriMesh};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Mesh file could not be parsed or describes an invalid mesh.
    Mesh = 3,
    /// Output buffer length does not match the field size.
    BufferSize = 4,
    /// Linear solver did not converge or produced non-finite values.
    Solver = 5,
    /// A positivity or state precondition of the scheme was violated.
    State = 6,
    Io = 7,
    Panic = 8,
}

#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfScheme {
    UvmSigma = 0,
    Uvms = 1,
}

#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfProblem {
    /// Homogeneous matrix, Gaussian tumour in the centre.
    Test1 = 0,
    /// Heterogeneous matrix.
    Test2 = 1,
    /// All initial data zero.
    Zero = 2,
}

/// Nodal arrays that can be copied out of a simulation.
#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfField {
    U = 0,
    V = 1,
    M = 2,
    /// Only for [`HfScheme::Uvms`].
    S = 3,
    /// Only for [`HfScheme::UvmSigma`]; first component.
    SigmaX = 4,
    /// Only for [`HfScheme::UvmSigma`]; second component.
    SigmaY = 5,
}

/// Opaque triangle mesh.
pub struct HfMesh {
    mesh: Arc<TriMesh>,
}

/// Opaque running simulation.
pub struct HfSimulation {
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> HfStatus {
    match err {
        Error::Step { source, .. } => status_of(source),
        Error::MeshLoad { .. } | Error::InvalidMesh(_) => HfStatus::Mesh,
        Error::NoConvergence { .. } | Error::NonFinite(_) => HfStatus::Solver,
        Error::PositivityBreach { .. } | Error::InvalidState(_) => HfStatus::State,
        Error::Io(_) => HfStatus::Io,
        _ => HfStatus::InvalidArgument,
    }
}

/// Runs `f`, recording the error message and mapping panics.
fn guard(f: impl FnOnce() -> Result<(), (HfStatus, String)>) -> HfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            HfStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (HfStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (HfStatus, String) {
    (HfStatus::NullPointer, format!("{what} is null"))
}

fn bad(msg: String) -> (HfStatus, String) {
    (HfStatus::InvalidArgument, msg)
}

/// Message of the last failed call on this thread, or NULL.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Structured mesh of the unit square with `n` cells per side.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn hf_mesh_unit_square(n: usize, out: *mut *mut HfMesh) -> HfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mesh = TriMesh::unit_square(n).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(HfMesh { mesh: Arc::new(mesh) }));
        Ok(())
    })
}

/// Reads a mesh file (`nv nt`, vertex lines, 0-based triangle lines).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` as for [`hf_mesh_unit_square`].
#[no_mangle]
pub unsafe extern "C" fn hf_mesh_read(path: *const c_char, out: *mut *mut HfMesh) -> HfStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|e| bad(format!("path is not UTF-8: {e}")))?;
        let mesh = TriMesh::read(path).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(HfMesh { mesh: Arc::new(mesh) }));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be NULL or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn hf_mesh_free(mesh: *mut HfMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Vertex count, or 0 for NULL.
///
/// # Safety
/// `mesh` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_mesh_num_vertices(mesh: *const HfMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.num_vertices())
}

/// Triangle count, or 0 for NULL.
///
/// # Safety
/// `mesh` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_mesh_num_triangles(mesh: *const HfMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.num_triangles())
}

/// Copies interleaved `x y` coordinates; `len` must be 2 × vertex count.
///
/// # Safety
/// `mesh` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn hf_mesh_vertices(mesh: *const HfMesh, buf: *mut f64, len: usize) -> HfStatus {
    guard(|| {
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let verts = mesh.mesh.vertices();
        if len != 2 * verts.len() {
            return Err((HfStatus::BufferSize, format!("buffer holds {len} values, need {}", 2 * verts.len())));
        }
        let out = std::slice::from_raw_parts_mut(buf, len);
        for (dst, p) in out.chunks_mut(2).zip(verts) {
            dst.copy_from_slice(p);
        }
        Ok(())
    })
}

/// Writes the mesh to a file in the format read by [`hf_mesh_read`].
///
/// # Safety
/// `mesh` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn hf_mesh_write(mesh: *const HfMesh, path: *const c_char) -> HfStatus {
    guard(|| {
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|e| bad(format!("path is not UTF-8: {e}")))?;
        mesh.mesh.write(path).map_err(lib_err)
    })
}

fn scheme_of(v: u32) -> Result<SchemeKind, (HfStatus, String)> {
    match v {
        x if x == HfScheme::UvmSigma as u32 => Ok(SchemeKind::UvmSigma),
        x if x == HfScheme::Uvms as u32 => Ok(SchemeKind::Uvms),
        x => Err(bad(format!("unknown scheme {x}"))),
    }
}

fn problem_of(v: u32) -> Result<ProblemKind, (HfStatus, String)> {
    match v {
        x if x == HfProblem::Test1 as u32 => Ok(ProblemKind::Test1),
        x if x == HfProblem::Test2 as u32 => Ok(ProblemKind::Test2),
        x if x == HfProblem::Zero as u32 => Ok(ProblemKind::Zero),
        x => Err(bad(format!("unknown problem {x}"))),
    }
}

/// Starts a run at t = 0 with the built-in parameters of `problem`.
///
/// `scheme` is an [`HfScheme`], `problem` an [`HfProblem`]. `tol` is the
/// relative CG residual target; `threads` = 0 assembles sequentially.
/// The mesh handle may be freed afterwards.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hf_simulation_new(
    mesh: *const HfMesh,
    scheme: u32,
    problem: u32,
    mu_u: f64,
    dt: f64,
    tol: f64,
    jacobi: bool,
    threads: usize,
    out: *mut *mut HfSimulation,
) -> HfStatus {
    guard(|| {
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let kind = scheme_of(scheme)?;
        let problem = problem_of(problem)?;
        if !(mu_u.is_finite() && mu_u >= 0.0) {
            return Err(bad(format!("mu_u must be nonnegative, got {mu_u}")));
        }
        let space = Arc::new(FeSpace::new(mesh.mesh.clone()).with_threads(threads).map_err(lib_err)?);
        let setup = ProblemSetup::new(problem, mu_u);
        let cg = CgOptions { jacobi, ..CgOptions::with_tol(tol) };
        let sim = Simulation::new(kind, space, &setup, dt, cg, InitialProjection::Nodal).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(HfSimulation { sim }));
        Ok(())
    })
}

/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_simulation_free(sim: *mut HfSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances `steps` time steps; stops at the first failure.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_simulation_step(sim: *mut HfSimulation, steps: usize) -> HfStatus {
    guard(|| {
        let sim = sim.as_mut().ok_or_else(|| null("sim"))?;
        for _ in 0..steps {
            sim.sim.step().map_err(lib_err)?;
        }
        Ok(())
    })
}

/// Current time, or NaN for NULL.
///
/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_simulation_time(sim: *const HfSimulation) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.sim.time())
}

/// Number of completed steps, or 0 for NULL.
///
/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_simulation_step_index(sim: *const HfSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.sim.step_index())
}

/// Number of mesh vertices of the simulation, or 0 for NULL.
///
/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hf_simulation_num_nodes(sim: *const HfSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.sim.view().u.len())
}

/// Copies the nodal values of `field` (an [`HfField`]); `len` must equal the
/// vertex count.
///
/// # Safety
/// `sim` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn hf_simulation_copy_field(
    sim: *const HfSimulation,
    field: u32,
    buf: *mut f64,
    len: usize,
) -> HfStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let view = sim.sim.view();
        let missing = |name: &str| bad(format!("field {name} is not available for scheme {}", sim.sim.kind()));
        let values: Vec<f64> = match field {
            x if x == HfField::U as u32 => view.u.values().to_vec(),
            x if x == HfField::V as u32 => view.v.values().to_vec(),
            x if x == HfField::M as u32 => view.m.values().to_vec(),
            x if x == HfField::S as u32 => view.s.ok_or_else(|| missing("s"))?.values().to_vec(),
            x if x == HfField::SigmaX as u32 => view.sigma.ok_or_else(|| missing("sigma"))?.component(0).into_values(),
            x if x == HfField::SigmaY as u32 => view.sigma.ok_or_else(|| missing("sigma"))?.component(1).into_values(),
            x => return Err(bad(format!("unknown field {x}"))),
        };
        if len != values.len() {
            return Err((HfStatus::BufferSize, format!("buffer holds {len} values, need {}", values.len())));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&values);
        Ok(())
    })
}

/// Nodal minimum of `field`, written to `out`.
///
/// # Safety
/// `sim` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hf_simulation_field_min(sim: *const HfSimulation, field: u32, out: *mut f64) -> HfStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = s.sim.view().u.len();
        let mut buf = vec![0.0; n];
        match hf_simulation_copy_field(sim, field, buf.as_mut_ptr(), n) {
            HfStatus::Ok => {}
            status => {
                let msg = LAST_ERROR.with(|e| e.borrow().as_ref().map(|c| c.to_string_lossy().into_owned()));
                return Err((status, msg.unwrap_or_default()));
            }
        }
        *out = buf.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(())
    })
}
