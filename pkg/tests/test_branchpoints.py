import numpy as np
import pytest

from btspec import basis as bas
from btspec import branchpoints as bp
from btspec import matrices as mx
from btspec import sweep as sw
from btspec.errors import ConvergenceError


@pytest.fixture(scope="module")
def interval40():
    b = bas.build_interval_basis(40)
    m = mx.assemble_interval(b)
    return m, mx.gradient_matrix(m)


@pytest.fixture(scope="module")
def interval_sweep(interval40):
    m, B = interval40
    s = sw.run_sweep(m, B, 20.0, step=0.05)
    return s


def test_analytic_interval_branch_points():
    g = bp.interval_branch_points_analytic(2)
    assert abs(g[0] - 18.06) < 0.05
    assert abs(g[1] - 229.35) < 1.0


def test_interval_detect_and_refine(interval40, interval_sweep):
    m, B = interval40
    points = bp.find_branch_points(m, B, interval_sweep)
    assert len(points) == 1
    p = points[0]
    assert abs(p.g_star - 18.06) < 0.01
    assert p.order == 2
    assert p.branches == (0, 1)
    # swept value matches the analytic law to 0.1%
    g_analytic = bp.interval_branch_points_analytic(1)[0]
    assert abs(p.g_star - g_analytic) / g_analytic < 1e-3
    # eigenfunctions coalesce: coefficient rows almost parallel at g_star
    assert p.meta["min_principal_angle"] < 1e-2
    assert p.meta["vv_min"] < 1e-2
    assert p.meta["width"] <= 1e-5


def test_interval_below_first_point_is_empty(interval40):
    m, B = interval40
    s = sw.run_sweep(m, B, 3.0, step=0.1)
    assert bp.detect(s) == []


def test_disk_branch_points(disk60):
    m, B = disk60
    s = sw.run_sweep(m, B, 15.0, step=0.05)
    points = bp.find_branch_points(m, B, s)
    got = sorted(p.g_star for p in points)
    refs = [3.76, 9.39, 13.87]
    assert len(got) == 3
    for g, ref in zip(got, refs):
        assert abs(g - ref) < 0.02
    for p in points:
        assert p.order == 2


def test_sphere_below_three_is_empty():
    b = bas.build_sphere_basis(30)
    m = mx.assemble_sphere(b)
    B = mx.gradient_matrix_sphere(m, 0.0, 0.0)
    s = sw.run_sweep(m, B, 3.0, step=0.1)
    assert bp.detect(s) == []


def test_classify_order_counts_cluster(disk60):
    m, B = disk60
    s = sw.run_sweep(m, B, 5.0, step=0.05)
    p = bp.find_branch_points(m, B, s)[0]
    value = p.meta["value"]
    assert bp.classify_order(m, B, p.g_star, value) == 2


def test_crossings_are_not_branch_points(sphere333_sweep):
    sweep, points = sphere333_sweep
    # no detected point near the gbar ~ 9.3 crossing
    for p in points:
        assert abs(p.g_star - 9.3) > 0.3


def test_refine_rejects_transitionless_bracket(interval40, interval_sweep):
    m, B = interval40
    fake = bp.BranchPoint(g_star=5.0, order=2, branches=(0, 1),
                          bracket=(4.0, 6.0), meta={})
    i_lo = int(np.argmin(np.abs(interval_sweep.g_grid - 4.0)))
    with pytest.raises(ConvergenceError):
        bp.refine(m, B, fake, ref_eigs=interval_sweep.eigenvalues[i_lo])


def test_cylinder_tuned_angle_first_point():
    """Gradient angle eta = atan(18.06/3.76) aligns the first disk and
    interval branch points; the merged first point sits near 18.45 (quoted
    as 18.5 at 3 significant digits).  Checked at tolerance +-0.1."""
    eta = np.arctan(18.06 / 3.76)
    b = bas.build_cylinder_basis(150)
    m = mx.assemble_cylinder(b)
    B = mx.gradient_matrix_cylinder(m, eta)
    s = sw.run_sweep(m, B, 19.2, step=0.1)
    points = bp.find_branch_points(m, B, s, max_branch=13)
    assert points, "no branch point detected below 19.2"
    first = min(p.g_star for p in points)
    assert abs(first - 18.5) < 0.1
