"""Smoke test for the soundlab_py extension.

Build first with `cargo build -p soundlab-python --release` (or without
--release), then run `python3 python/smoke_test.py` from the repository root.
"""

import importlib.util
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load_extension():
    names = ["libsoundlab_py.so", "libsoundlab_py.dylib", "soundlab_py.dll"]
    for profile in ("release", "debug"):
        for name in names:
            path = os.path.join(ROOT, "target", profile, name)
            if os.path.exists(path):
                suffix = ".pyd" if name.endswith(".dll") else ".so"
                target = os.path.join(tempfile.mkdtemp(), "soundlab_py" + suffix)
                shutil.copy(path, target)
                spec = importlib.util.spec_from_file_location("soundlab_py", target)
                module = importlib.util.module_from_spec(spec)
                spec.loader.exec_module(module)
                return module
    sys.exit("extension not built; run `cargo build -p soundlab-python` first")


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    sl = load_extension()

    cmp = sl.Game("cmp")
    assert cmp.name == "cmp" and cmp.value() == 0.0 and cmp.utility_range() == 2.0
    assert close(sl.exploitability(cmp, sl.cmp_strategy(1.0, 0.5)), 0.5)
    assert close(sl.exploitability(cmp, sl.cmp_strategy(0.3, 0.7)), 0.0)
    assert close(sl.exploitability(cmp, cmp.strategy({"s1": [1.0, 0.0], "s2": [0.0, 1.0]})), 0.0)

    br, value = sl.best_response(cmp, sl.cmp_strategy(1.0, 1.0))
    assert br.player == 1 and close(value, 1.0)

    playcache = sl.Algorithm.playcache()
    assert close(sl.response_game_brv(cmp, playcache, 2, 1), 1.0)
    rows = sl.certify_soundness(cmp, playcache, 2, 3, 1.0)
    assert [r[0] for r in rows] == [1, 2, 3] and all(r[3] for r in rows)
    orders = sl.tabularize(cmp, playcache, 2)
    assert len(orders) == 2 and orders[0].to_dict() != orders[1].to_dict()
    assert all(close(sl.exploitability(cmp, s), 0.0) for s in orders)

    partial = cmp.strategy({"s1": [0.3, 0.7]})
    assert sl.completion_exploitability(cmp, partial) < 1e-6

    kuhn = sl.Game("kuhn")
    assert close(kuhn.value(), -1.0 / 18.0)
    p1, p2 = sl.cfr(kuhn, 5000)
    assert sl.exploitability(kuhn, p1) < 0.05 and sl.exploitability(kuhn, p2) < 0.05
    assert close(sl.exploitability(kuhn, sl.kuhn_alpha_equilibrium(0.5)), 0.0)
    _, q = sl.mccfr(cmp, 10000, seed=3, bias_targets=["s1"], kickstart=sl.cmp_strategy(0.5, 0.5))
    assert len(q) == 2

    csv = sl.run_experiment("game = cmp\niterations = 100\nseeds = 2\n")
    assert csv.startswith("iteration,seed,curve,exploitability\n")

    try:
        sl.Game("leduc")
    except ValueError as e:
        assert "unknown game" in str(e)
    else:
        raise AssertionError("unknown game accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
