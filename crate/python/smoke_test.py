"""Smoke test for the risloc_py extension.

Build and run from the repository root:

    cargo build --release -p risloc-py --features extension-module
    python3 python/smoke_test.py

The script looks for the built library under target/release and imports it
directly; a maturin-installed module is used when already importable.
"""

import cmath
import importlib.machinery
import importlib.util
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import risloc_py

        return risloc_py
    except ImportError:
        pass
    for name in ("librisloc_py.so", "librisloc_py.dylib", "risloc_py.dll"):
        path = ROOT / "target" / "release" / name
        if path.exists():
            loader = importlib.machinery.ExtensionFileLoader("risloc_py", str(path))
            spec = importlib.util.spec_from_file_location("risloc_py", path, loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("risloc_py not built; run cargo build --release -p risloc-py --features extension-module")


def main():
    rl = load()
    wavelength = 299_792_458.0 / 60e9

    g = rl.beam_gain(16, 4, 10.0, 10.0, wavelength)
    assert abs(abs(g) - 64) < 1e-9, g
    assert abs(rl.beam_gain(16, 4, 10.0, 25.0, wavelength)) < 64
    a = rl.steering_vector(4, 4, 20.0, wavelength)
    assert len(a) == 16 and all(abs(abs(x) - 1) < 1e-12 for x in a)

    sc = rl.Scenario()
    assert sc.ris_elements == (16, 4)
    assert math.isclose(rl.dbm_to_watts(sc.tx_power_dbm), 0.1)
    sc.noise = False
    cube = sc.simulate(1)
    assert cube.shape == (61, 600, 128), cube.shape
    est = sc.estimate(cube)
    assert est["azimuth_deg"] == 0.0, est
    assert abs(est["distance_m"] - 13.38) < 0.022, est
    assert abs(est["velocity_mps"]) < 0.01, est

    back = rl.Scenario(sc.to_toml())
    assert back.to_toml() == sc.to_toml()

    small = rl.Scenario()
    pts = rl.run_study(small, "tx_power", "20,30", runs=3, seed=7)
    assert [p["value"] for p in pts] == ["20", "30"]
    assert all(p["failures"] == 0 for p in pts)

    try:
        rl.Scenario("[pipeline]\nn_dft = 100\n")
    except ValueError as e:
        assert "n_dft" in str(e)
    else:
        raise AssertionError("undersized transform accepted")

    print("ok:", {k: est[k] for k in ("selected", "azimuth_deg", "distance_m")})
    print("study:", [(p["value"], round(p["position_mae_m"], 5)) for p in pts])
    assert cmath.isfinite(g)


if __name__ == "__main__":
    main()
