import os
import subprocess
import sys

import numpy as np
import pytest

from cadseg._kernels import BACKEND, pure

try:
    from cadseg._kernels import _compiled as compiled
except ImportError:
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None,
                                    reason="compiled kernels not built")


def _norm_grid(rng, rows, cols):
    vals = rng.integers(0, 5, size=rows * cols) / 4.0
    vals[rng.integers(0, vals.size)] = 0.0
    return np.ascontiguousarray(vals, dtype=np.float64)


@needs_compiled
def test_grow_region_backends_agree():
    rng = np.random.default_rng(101)
    for _ in range(200):
        rows, cols = rng.integers(2, 9, size=2)
        norm = _norm_grid(rng, rows, cols)
        c_thr = float(rng.integers(0, 5)) / 4.0
        r_cap = int(rng.integers(1, rows * cols + 1))
        got_pure = pure.grow_region(norm, int(rows), int(cols), c_thr, r_cap)
        got_fast = compiled.grow_region(norm, int(rows), int(cols), c_thr, r_cap)
        assert list(got_pure) == list(got_fast)


@needs_compiled
def test_anchor_means_backends_agree():
    rng = np.random.default_rng(103)
    for _ in range(100):
        rows, cols = rng.integers(2, 9, size=2)
        norm = np.ascontiguousarray(rng.uniform(size=rows * cols))
        n_off = int(rng.integers(1, 4))
        offs = {(0, 0)} | {(int(r), int(c))
                           for r, c in rng.integers(0, 2, size=(n_off, 2))}
        pairs = sorted(offs)
        offs_r = np.asarray([r for r, _ in pairs], dtype=np.int64)
        offs_c = np.asarray([c for _, c in pairs], dtype=np.int64)
        pure_out = pure.anchor_means(norm, int(rows), int(cols), offs_r, offs_c)
        fast_out = compiled.anchor_means(norm, int(rows), int(cols), offs_r, offs_c)
        for a, b in zip(pure_out, fast_out):
            assert list(a) == list(b)


@needs_compiled
def test_directed_min_distances_backends_agree():
    rng = np.random.default_rng(107)
    for _ in range(100):
        n_src = int(rng.integers(1, 30))
        n_dst = int(rng.integers(1, 30))
        src_r = np.ascontiguousarray(rng.integers(0, 40, n_src))
        src_c = np.ascontiguousarray(rng.integers(0, 40, n_src))
        dst_r = np.ascontiguousarray(rng.integers(0, 40, n_dst))
        dst_c = np.ascontiguousarray(rng.integers(0, 40, n_dst))
        got_pure = pure.directed_min_distances(src_r, src_c, dst_r, dst_c)
        got_fast = compiled.directed_min_distances(src_r, src_c, dst_r, dst_c)
        # same exact-integer squared distances, so sqrt agrees bitwise
        assert list(got_pure) == list(got_fast)


def test_active_backend_is_reported():
    assert BACKEND in ("compiled", "pure")
    forced = os.environ.get("CAD_KERNELS", "") or "auto"
    if forced == "auto":
        assert BACKEND == ("compiled" if compiled is not None else "pure")
    else:
        assert BACKEND == forced


def _probe(env_value):
    env = dict(os.environ, CAD_KERNELS=env_value)
    return subprocess.run(
        [sys.executable, "-c",
         "import cadseg; print(cadseg.KERNEL_BACKEND)"],
        capture_output=True, text=True, env=env)


def test_backend_env_selection():
    picked = _probe("pure")
    assert picked.returncode == 0
    assert picked.stdout.strip() == "pure"

    auto = _probe("auto")
    assert auto.returncode == 0
    assert auto.stdout.strip() == ("compiled" if compiled is not None
                                   else "pure")


@needs_compiled
def test_backend_env_compiled():
    picked = _probe("compiled")
    assert picked.returncode == 0
    assert picked.stdout.strip() == "compiled"


def test_backend_env_rejects_unknown():
    result = _probe("vectorized")
    assert result.returncode != 0
    assert "ImportError" in result.stderr or "CAD_KERNELS" in result.stderr


def test_pure_backend_full_pipeline_matches_default():
    # run a displacement end to end in a pure-backend subprocess and compare
    # its choices against the in-process (default) backend
    script = (
        "import numpy as np\n"
        "from cadseg.grid import GridSpec, PatchGrid\n"
        "from cadseg.llcr import find_largest_low_confidence_region, "
        "best_placement, shape_offsets\n"
        "norm = np.random.default_rng(5).integers(0, 4, size=(6, 6)) / 3.0\n"
        "spec = GridSpec(grid_rows=6, grid_cols=6, image_h=12, image_w=12)\n"
        "grid = PatchGrid(spec=spec, raw=norm, normalized=norm)\n"
        "region = find_largest_low_confidence_region(grid, 0.4, 7)\n"
        "placement = best_placement(grid, shape_offsets(region))\n"
        "print(sorted(region.members), placement.anchor, "
        "round(placement.mean_confidence, 12))\n"
    )
    outputs = {}
    for backend in ("pure", "auto"):
        env = dict(os.environ, CAD_KERNELS=backend)
        proc = subprocess.run([sys.executable, "-c", script],
                              capture_output=True, text=True, env=env)
        assert proc.returncode == 0, proc.stderr
        outputs[backend] = proc.stdout
    assert outputs["pure"] == outputs["auto"]
