use pyo3::prelude::*;
use pyo3::types::PyDict;
use pyo3::wrap_pymodule;

fn with_module(script: &std::ffi::CStr) {
    Python::initialize();
    Python::attach(|py| {
        let module = wrap_pymodule!(fblin_py::fblin_py)(py);
        let globals = PyDict::new(py);
        globals.set_item("fblin", module).unwrap();
        if let Err(e) = py.run(script, Some(&globals), None) {
            e.print(py);
            panic!("python script failed");
        }
    });
}

#[test]
fn grid_and_elliptic_solve() {
    with_module(
        c"
import math
g = fblin.Grid(32, 32)
assert (g.n_r, g.n_theta) == (32, 32)
assert abs(g.area() - math.pi) < 1e-12
q = fblin.solve_dirichlet(g, [1.0] * (32 * 32))
r = g.radii()
err = max(abs(q[j * 32] - (r[j] ** 2 - 1) / 4) for j in range(32))
assert err < 1e-3, err
",
    );
}

#[test]
fn operator_and_projection_values() {
    with_module(
        c"
import math
g = fblin.Grid(64, 64)
d = fblin.projection_defects(g, 3)
assert d['idempotence'] < 1e-8 and d['orthogonality'] < 1e-6 and d['norm_ratio'] <= 1 + 1e-12
assert abs(fblin.normal_form_e1(g) - math.pi) < 2e-3
assert fblin.normal_form_e1(g, eps=0.2) < fblin.normal_form_e1(g, eps=0.1) < math.pi
assert fblin.validate_rotation(g, 0.0)['sign_condition'] == 0.0
try:
    fblin.normal_form_e1(g, eps=0.4)
    raise AssertionError('eps beyond the limit accepted')
except ValueError:
    pass
",
    );
}

#[test]
fn simulation_conserves_curl_invariant() {
    with_module(
        c"
g = fblin.Grid(16, 16)
sim = fblin.Simulation(g, data='random', seed=2)
out = sim.advance(0.1, 0.01, record_every=5)
assert len(out['t']) == 3 and abs(out['t'][-1] - 0.1) < 1e-12
assert max(out['curl_drift']) < 1e-10
assert sim.divergence_defect() < 1e-8
sim.advance(0.1, 0.01)
assert abs(sim.t - 0.2) < 1e-12
w1, w2 = sim.displacement()
assert len(w1) == 256
",
    );
}
