use std::ffi::CString;

use dpnalign::dpnalign as module;
use pyo3::prelude::*;

fn run(code: &str) -> PyResult<()> {
    pyo3::append_to_inittab!(module);
    Python::initialize();
    Python::attach(|py| py.run(&CString::new(code).unwrap(), None, None))
}

#[test]
fn example_through_python() {
    run(r#"
import dpnalign
from fractions import Fraction

net = dpnalign.running_example()
e3 = dpnalign.Trace("e3", [("a", {"x": 4}), ("b", {"y": 1})])
r = dpnalign.conformance(net, e3)
assert r.cost == 1 and not r.timed_out, r
assert [m[2] for m in r.alignment.moves] == ["sync", "sync", "model"], r.alignment.moves
assert r.alignment.cost("levenshtein") == 1

t = dpnalign.Trace("f", [("a", {"x": Fraction(7, 2), "y": -3, "s": "v"})])
assert t.events[0][1] == {"x": Fraction(7, 2), "y": -3, "s": "v"}
assert dpnalign.cluster(net, [e3, t, dpnalign.Trace("e3b", [("a", {"x": 9}), ("b", {"y": 1})])]) == [["e3", "e3b"], ["f"]]

try:
    dpnalign.conformance(net, e3, cost="hamming")
except ValueError:
    pass
else:
    raise AssertionError("bad profile accepted")
"#)
    .unwrap();
}
