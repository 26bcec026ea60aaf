import numpy as np
import pytest

from dobbench import kernels
from dobbench.closedloop import build_closed_loop, initial_state, make_layout, reference_rhs
from dobbench.errors import ConfigError


def random_states(sc, q, rng, n=30, scale=2.0):
    L = make_layout(sc, q)
    return [scale * rng.normal(size=L.size) for _ in range(n)], L


def matrix_rhs(cl, sc, t, s, v):
    p = sc.plant
    return kernels.original_rhs(t, s, v, cl.M, cl.b_r, cl.b_d, cl.b_v, cl.b_dhat, cl.b_fd, cl.c_w, cl.s_bar,
                                sc.r.packed, sc.d.packed, p.f_d.packed, p.nu, p.nz)


@pytest.mark.parametrize("s_bar", [1e6, 0.5])
def test_matrix_form_matches_components(bench, rng, s_bar):
    sc, q = bench.scenario, bench.qfilter
    cl = build_closed_loop(sc, q, s_bar)
    states, _ = random_states(sc, q, rng)
    saw_active = False
    for s in states:
        t, v = rng.uniform(0, 10), rng.uniform(-0.1, 0.1)
        want, wmy, active = reference_rhs(sc, q, t, s, v, s_bar)
        got, gwmy, gactive = matrix_rhs(cl, sc, t, s, v)
        np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-10 * max(1.0, np.abs(want).max()))
        assert gwmy == pytest.approx(wmy, rel=1e-10, abs=1e-10)
        assert bool(gactive) == active
        saw_active |= active
    assert saw_active == (s_bar < 1)


def test_initial_state_matched(bench):
    sc, q = bench.scenario, bench.qfilter
    L = make_layout(sc, q)
    s0 = initial_state(sc, q)
    assert np.all(L.error(s0) == 0)
    assert not s0[L.q].any() and not s0[L.p].any() and not s0[L.z_bar].any()


def test_needs_saturation_level(bench):
    with pytest.raises(ConfigError):
        build_closed_loop(bench.scenario, bench.qfilter, None)


def test_layout_partition(bench):
    L = make_layout(bench.scenario, bench.qfilter)
    covered = np.concatenate([np.arange(L.size)[sl] for sl in (L.x, L.z, L.theta, L.z_bar, L.q, L.p, L.chi_n)])
    np.testing.assert_array_equal(np.sort(covered), np.arange(L.size))
    assert len(set(L.chi_idx)) == L.ne
