import math

import numpy as np
import pytest

from normpart.space import (INF, CapabilityError, block_lp, linf, lp, orlicz,
                            norm_batch, space)
from normpart.sepmod import (SweepRecord, companion_sandwich, companion_space,
                             external_volume_ratio, loglog_slope,
                             records_to_csv, records_to_json, rows_from_csv,
                             sep_lower_evr, sep_lower_limit_constant,
                             sep_upper_two_norm, sweep, sweep_slopes)

import oracles


def test_external_volume_ratio():
    assert external_volume_ratio(lp(2, 2)) == pytest.approx(1.0)
    assert external_volume_ratio(lp(2, 1)) == pytest.approx(
        math.sqrt(math.pi / 2))
    # the cube's tightest invariant ball has radius sqrt(n)
    assert external_volume_ratio(linf(2)) == pytest.approx(
        math.sqrt(2 * math.pi) / 2)
    with pytest.raises(CapabilityError):
        external_volume_ratio(block_lp(2, [lp(1, 1), lp(2, 2)]))


def test_sep_lower_examples():
    assert sep_lower_evr(lp(2, 2)) == pytest.approx(
        2 * 2 ** 0.25 / math.sqrt(2 * math.pi), rel=1e-9)
    assert sep_lower_evr(lp(2, 1)) == pytest.approx(1.18921, abs=1e-5)
    assert sep_lower_limit_constant() == pytest.approx(
        math.sqrt(2) / (math.e * math.sqrt(math.pi)))


def test_sep_lower_euclidean_ratio_decreases_to_limit():
    limit = sep_lower_limit_constant()
    ratios = [sep_lower_evr(lp(n, 2)) / math.sqrt(n) for n in (8, 16, 32, 64)]
    assert all(r > limit for r in ratios)
    assert ratios == sorted(ratios, reverse=True)


def test_sep_upper_euclidean():
    est = sep_upper_two_norm(lp(2, 2), seed=0)
    assert est.value == pytest.approx(8 / math.pi, rel=1e-9)
    # matches 4 * v_{n-1}/v_n in higher dimension too
    est = sep_upper_two_norm(lp(5, 2), seed=0)
    assert est.value == pytest.approx(
        4 * oracles.euclidean_ball_volume(4) / oracles.euclidean_ball_volume(5),
        rel=1e-9)


def test_sep_upper_cube_self():
    for n in (2, 4, 7):
        est = sep_upper_two_norm(linf(n), seed=1)
        assert est.value == pytest.approx(2.0 * n, rel=1e-9)


def test_sep_upper_crosspolytope_self():
    # max of psi_{l1} over the cross-polytope boundary is at an axis: n/2
    est = sep_upper_two_norm(lp(3, 1), seed=2)
    assert est.value == pytest.approx(4 * 1.5, rel=1e-9)


def test_sep_upper_dominates_lower():
    for d in (lp(2, 2), lp(3, 1), linf(3)):
        lo = sep_lower_evr(d)
        up = sep_upper_two_norm(d, samples=40_000, seed=3)
        assert lo <= up.value + 3 * up.stderr


def test_sep_upper_dimension_mismatch():
    with pytest.raises(Exception):
        sep_upper_two_norm(lp(2, 2), lp(3, 2))


def test_companion_rules():
    assert companion_space(lp(8, 2)).descriptor == lp(8, 2)
    n = 16
    assert companion_space(lp(n, math.log(n))).descriptor == \
        lp(n, math.log(n))
    c = companion_space(linf(42))
    assert c.descriptor.kind == "orlicz_beta"
    assert c.dim == 42 and c.descriptor.beta == pytest.approx(20.5)
    with pytest.raises(CapabilityError):
        companion_space(orlicz(3, 1.0))


def test_companion_sandwich_orlicz():
    # ||.||_inf <= ||.||_Omega <= ||.||_inf / (1 - e^{-beta/m})
    for n in (6, 9):
        y = companion_space(linf(n))
        beta = y.descriptor.beta
        lo, hi = companion_sandwich(linf(n), y, samples=1024, seed=1)
        assert lo >= 1.0 - 1e-9
        assert hi <= 1.0 / (1.0 - math.exp(-beta / n)) + 1e-9


def test_sweep_records_and_slopes():
    recs = sweep(family="lp", p=2.0, dims=(4, 8), samples=20_000, seed=5)
    slopes = sweep_slopes(recs)
    assert set(slopes) == {"sep_lower", "sep_upper", "iq"}
    # every row respects lower <= value <= upper where present
    for r in recs:
        if r.lower is not None:
            assert r.lower <= r.value + 3 * r.stderr + 1e-9
        if r.upper is not None:
            assert r.value - 3 * r.stderr <= r.upper + 1e-9
    # derived seeds differ across dimensions
    seeds = {r.seed for r in recs}
    assert len(seeds) > 1


def test_csv_roundtrip_lossless():
    recs = sweep(family="lp", p=1.0, dims=(3, 5), samples=10_000, seed=7)
    text = records_to_csv(recs)
    rows = rows_from_csv(text)
    assert len(rows) == len(recs)
    for rec, row in zip(recs, rows):
        assert row["value"] == rec.value
        assert row["stderr"] == rec.stderr
        assert row["n"] == rec.n
        assert row["quantity"] == rec.quantity
        assert row["seed"] == rec.seed
    # comment headers are tolerated
    rows2 = rows_from_csv("# seed=7\n" + text)
    assert rows2 == rows


def test_csv_handles_inf_and_beta():
    rec = SweepRecord(descriptor=linf(4), n=4, quantity="x", value=1.0)
    row = rows_from_csv(records_to_csv([rec]))[0]
    assert row["p"] == INF
    rec = SweepRecord(descriptor=orlicz(3, 1.5), n=3, quantity="x", value=2.0)
    row = rows_from_csv(records_to_csv([rec]))[0]
    assert row["beta"] == 1.5


def test_loglog_slope():
    dims = [4, 8, 16, 32]
    assert loglog_slope(dims, [math.sqrt(d) for d in dims]) == \
        pytest.approx(0.5)
    assert loglog_slope(dims, [3.0 * d for d in dims]) == pytest.approx(1.0)


def test_sweep_reproducible():
    a = sweep(family="lp", p=2.0, dims=(4,), samples=15_000, seed=11)
    b = sweep(family="lp", p=2.0, dims=(4,), samples=15_000, seed=11)
    assert records_to_csv(a) == records_to_csv(b)
