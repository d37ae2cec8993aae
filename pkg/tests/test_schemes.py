import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import SEED, drops, handmade_drop
from steersim import oracles
from steersim.channel import Antennas, budget_normalized, seeded_drop
from steersim.errors import DomainError
from steersim.schemes import (
    Fallback,
    Scheme,
    geometry,
    in_scheme,
    is_fixed,
    mf,
    ois,
    steer,
    zf_rx,
    zfbf,
)

ALL = [mf, zf_rx, zfbf, in_scheme, ois, lambda d: is_fixed(d, 0.5)]
drop_keys = st.tuples(st.floats(-5, 35), st.sampled_from([0.1, 1.0, 10.0, 100.0]), st.integers(0, 10**6))


def keyed_drop(key, **kw):
    gamma, xi, k = key
    return seeded_drop(budget_normalized(gamma, xi), SEED, 0, k, **kw)


def shannon(res):
    return sum(math.log2(1 + d / (res.sigma2 + r)) for d, r in zip(res.stream_desired, res.stream_residual))


@given(drop_keys)
def test_every_result_satisfies_shannon_form(key):
    d = keyed_drop(key)
    for fn in ALL:
        res = fn(d)
        assert res.se_bits == pytest.approx(shannon(res), rel=1e-12, abs=1e-15)
        assert res.desired_power >= 0 and res.residual_interference >= 0


def test_mf_against_direct_formula(drop):
    U, s, _ = np.linalg.svd(drop.h0)
    i_vec = math.sqrt(drop.budget.p1e) * drop.h10 @ drop.mbs_precoders[0]
    sinr = drop.budget.p0e * s[0] ** 2 / (1 + abs(np.vdot(U[:, 0], i_vec)) ** 2)
    assert mf(drop).se_bits == pytest.approx(math.log2(1 + sinr), rel=1e-12)


def test_silent_pbs_has_zero_rate():
    d = handmade_drop(np.eye(2), np.ones((2, 2)), p0e=0.0)
    assert mf(d).se_bits == 0.0


@given(drop_keys, st.floats(0.01, 1.0))
def test_steered_interference_decomposition(key, rho):
    d = keyed_drop(key)
    geo = geometry(d)
    s_t = -rho * geo.i_in
    np.testing.assert_allclose(geo.i_vec + s_t, (1 - rho) * geo.i_in + geo.i_quad, atol=1e-9)
    # The steering signal generated through H0 is exactly -rho * i_in.
    np.testing.assert_allclose(d.h0 @ (-rho * math.sqrt(geo.power) * geo.g), s_t, atol=1e-9)


@pytest.mark.parametrize("rho", [0.25, 0.5, 0.75, 1.0])
def test_fixed_steering_matches_vector_assembly(rho):
    for d in drops(60, gamma_db=10.0):
        res, _ = steer(d, rho)
        ref = oracles.assemble_steering(d, rho)
        assert res.se_bits == pytest.approx(ref["se"], rel=1e-9)
        assert res.power_overhead_e == pytest.approx(ref["overhead"].sum(), rel=1e-9)


def test_multi_stream_multi_interference_matches_vector_assembly():
    ant = Antennas(n_t0=4, n_t1=3, n_r0=3)
    for d in drops(40, 15.0, 10.0, ant, n_mbs=2, n_pbs=2):
        R = np.array([[0.3, 0.8], [0.6, 0.1]])
        res, _ = steer(d, R)
        assert res.se_bits == pytest.approx(oracles.assemble_steering(d, R)["se"], rel=1e-9)


def test_ois_cancels_in_phase_component():
    for d in drops(100, 20.0, 10.0):
        a = oracles.assemble_steering(d, 1.0)
        i_norm = math.sqrt(d.mbs_stream_powers[0]) * np.linalg.norm(d.interference_vectors[:, 0])
        assert abs(np.vdot(a["filters"][:, 0], a["coefficients"][0])) <= 1e-9 * i_norm
        res = ois(d)
        if res.feasible:
            assert res.residual_interference <= 1e-18 * i_norm ** 2
            assert res.rho is None


def test_in_neutralizes_and_overhead_matches_least_squares():
    for d in drops(100, 10.0, 1.0):
        ref = oracles.assemble_neutralization(d)
        assert np.max(ref["post_filter"]) <= 1e-15
        y = math.sqrt(d.budget.p1e) * d.interference_vectors[:, 0]
        x = np.linalg.lstsq(d.h0, -y, rcond=None)[0]
        res = in_scheme(d)
        assert res.power_overhead_e == pytest.approx(np.vdot(x, x).real, rel=1e-9)
        if res.feasible:
            assert res.residual_interference <= 1e-15


def test_in_on_wide_pbs_uses_min_norm_solution():
    for d in drops(30, 10.0, 1.0, Antennas(4, 2, 2)):
        ref = oracles.assemble_neutralization(d)
        assert in_scheme(d, "mf").power_overhead_e == pytest.approx(ref["overhead"], rel=1e-9)
        assert np.max(ref["post_filter"]) <= 1e-15


@pytest.mark.parametrize("ant", [Antennas(2, 2, 2), Antennas(4, 2, 2), Antennas(4, 3, 3)])
def test_zero_forcing_schemes_null_interference(ant):
    for d in drops(50, 20.0, 1.0, ant):
        assert zf_rx(d).residual_interference <= 1e-15 * d.budget.p1e
        res = zfbf(d)
        if res.fallback_applied is None:
            assert res.residual_interference <= 1e-15 * d.budget.p1e


def test_zfbf_pays_more_desired_power_than_zf():
    ds = drops(2000, 20.0, 1.0)
    gain_zf = np.mean([zf_rx(d).desired_power for d in ds])
    gain_zfbf = np.mean([zfbf(d).desired_power for d in ds])
    assert gain_zfbf < gain_zf


def test_zfbf_receiver_is_matched_to_effective_channel():
    d = drops(1, 10.0, 1.0, Antennas(3, 2, 2))[0]
    res = zfbf(d)
    y = d.interference_vectors[:, 0]
    Q = np.eye(3) - np.outer(d.h0.conj().T @ y, (d.h0.conj().T @ y).conj()) / np.linalg.norm(d.h0.conj().T @ y) ** 2
    _, s, _ = np.linalg.svd(d.h0 @ Q)
    assert res.desired_power == pytest.approx(d.budget.p0e * s[0] ** 2, rel=1e-9)


def test_infeasible_schemes_fall_back_and_keep_overhead():
    seen = 0
    for d in drops(200, 10.0, 0.1):
        res = in_scheme(d, Fallback.ZF)
        if res.feasible:
            continue
        seen += 1
        assert res.fallback_applied is Fallback.ZF
        assert res.se_bits == zf_rx(d).se_bits
        assert res.power_overhead_e > d.budget.p0e
        assert in_scheme(d, "mf").se_bits == mf(d).se_bits
        assert res.scheme is Scheme.IN
    assert seen > 50


def test_fixed_steering_beyond_rho_max_falls_back():
    for d in drops(200, 0.0, 0.1):
        res = is_fixed(d, 1.0, Fallback.MF)
        raw, ok = steer(d, 1.0)
        assert res.feasible == ok
        if not ok:
            assert res.se_bits == mf(d).se_bits and res.rho == 1.0


@pytest.mark.parametrize("k", [0.5, 3.0, 40.0])
def test_overheads_scale_with_interference_power(k):
    for d in drops(20):
        b = d.budget
        scaled = replace(d, budget=replace(b, p1e=k * b.p1e),
                         mbs_stream_powers=tuple(k * q for q in d.mbs_stream_powers))
        assert in_scheme(scaled).power_overhead_e == pytest.approx(k * in_scheme(d).power_overhead_e, rel=1e-12)
        assert ois(scaled).power_overhead_e == pytest.approx(k * ois(d).power_overhead_e, rel=1e-12)


def test_interference_orthogonal_to_desired_needs_no_steering():
    h0 = np.diag([2.0, 1.0])
    h10 = np.array([[0.0, 0.0], [1.0, 0.0]])  # lands on the weak eigen-mode only
    d = handmade_drop(h0, h10, p0e=1.0, p1e=4.0)
    assert ois(d).power_overhead_e == 0.0
    assert ois(d).se_bits == mf(d).se_bits == pytest.approx(math.log2(1 + 4.0))


def test_zero_interference_channel_degrades_to_mf():
    d = handmade_drop(np.diag([2.0, 1.0]), np.zeros((2, 2)))
    base = mf(d).se_bits
    assert base == pytest.approx(math.log2(5.0))
    for fn in (zf_rx, zfbf, in_scheme, ois):
        res = fn(d)
        assert res.se_bits == pytest.approx(base) and res.residual_interference == 0.0


def test_is_fixed_rejects_bad_factor(drop):
    for rho in (0.0, -0.1, 1.5):
        with pytest.raises(DomainError):
            is_fixed(drop, rho)


def test_fallback_parse():
    assert Fallback.parse("mf") is Fallback.MF
    assert Fallback.parse(Fallback.ZF) is Fallback.ZF
    with pytest.raises(DomainError):
        Fallback.parse("none")


def test_result_dict_round_trip(drop):
    d = in_scheme(drop).as_dict()
    assert d["scheme"] == "IN" and isinstance(d["stream_desired"], list)
