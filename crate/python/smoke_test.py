"""Smoke test for the hochschild_py extension.

Build it first:

    cargo build --release -p hochschild-python --features extension-module

then run `python3 python/smoke_test.py` from the workspace root.
"""

import json
import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
HERE = Path(__file__).resolve().parent


def install():
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libhochschild_py.so"
        if lib.exists():
            shutil.copyfile(lib, HERE / "hochschild_py.so")
            return
    sys.exit("libhochschild_py.so not found; build the extension first")


install()
sys.path.insert(0, str(HERE))
import hochschild_py as hp  # noqa: E402

m2 = hp.Algebra.builtin("m2")
assert m2.dim == 4 and m2.basis == ["e11", "e12", "e21", "e22"]
reg = m2.regular()
assert hp.cohomology(m2, reg, 0)["cohomology"] == 1
assert hp.cohomology(m2, reg, 1)["cohomology"] == 0
assert hp.complex_property(m2, reg.dual(), 2)

dual = hp.Algebra.from_json(hp.Algebra.builtin("dual-numbers").to_json())
assert hp.cohomology(dual, dual.regular(), 1)["cohomology"] == 1

text = hp.run("repair", builtin="m2", n=1, eps=[1e-2], seed=3, samples=256)
hp.validate(text)
report = json.loads(text)
assert report["schema"] == hp.SCHEMA
assert report["verdict"]["holds"], report["verdict"]["failures"]
result = report["repairs"][0]["result"]
assert result["planted_error"] <= 1e-9

van = json.loads(hp.run_toml('task = "vanishing"\nbuiltin = "dual-numbers"\nseed = 1\n'))
assert van["vanishing"]["approx_vanishes"] is False

try:
    hp.Algebra.builtin("nope")
except hp.HochschildError as e:
    assert "nope" in str(e)
else:
    raise AssertionError("unknown builtin accepted")

print("hochschild_py smoke test passed")
