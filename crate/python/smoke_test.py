"""Smoke test for the Python bindings.

Imports an installed `survnet` module if there is one; otherwise builds the
extension with cargo and loads it from a temporary directory.
"""
import importlib
import os
import shutil
import subprocess
import sys
import sysconfig
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load():
    try:
        return importlib.import_module("survnet")
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "survnet-python", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    target = os.environ.get("CARGO_TARGET_DIR", os.path.join(ROOT, "target"))
    built = os.path.join(target, "release", "libsurvnet_py.so")
    if sys.platform == "darwin":
        built = built[:-3] + ".dylib"
    tmp = tempfile.mkdtemp()
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    shutil.copy(built, os.path.join(tmp, "survnet" + suffix))
    sys.path.insert(0, tmp)
    return importlib.import_module("survnet")


def main():
    sn = load()

    text = sn.generate_random(8, 3, 20, seed=1)
    assert text.startswith("RCSN 1"), text[:20]

    costs = {}
    for form in ("cutset", "flow", "bilevel"):
        d = sn.solve(text, k=1, formulation=form)
        assert d["certified"] and d["optimal"], d
        costs[form] = d["cost"]
    assert max(costs.values()) - min(costs.values()) < 1e-6, costs

    d = sn.solve(text, k=1)
    ok, residual, witness = sn.check(text, d["selected"], k=1)
    assert ok and witness == [], (ok, residual, witness)
    ok, residual, witness = sn.check(text, d["selected"][1:], k=1)
    assert not ok and len(witness) <= 1

    protected = sn.solve(text, k=1, kprot=1)
    assert protected["cost"] <= d["cost"] + 1e-6

    graph, beta = sn.three_partition_graph("2,11:5,3,4,3,4,3")
    assert beta == 12
    arb = sn.solve_arborescence(graph, objective="worst")
    assert arb["worst_robustness"] == 12, arb

    report = sn.robustness_report(text)
    assert report["delta_crob"] >= 0 and report["delta_cbrob"] >= 0
    gaps = dict(report["r_gap"])
    assert gaps[0.12] <= gaps[0.08]

    try:
        sn.solve(text, k=1, formulation="nope")
    except ValueError:
        pass
    else:
        raise AssertionError("bad formulation accepted")

    print("python smoke test passed:", costs)


if __name__ == "__main__":
    main()
