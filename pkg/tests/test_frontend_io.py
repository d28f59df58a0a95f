import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sosipm import frontend_io as fio
from sosipm import oracle
from sosipm.errors import ProblemFormatError
from sosipm.ipm import IpmParams, SosProgram, solve_blocks
from sosipm.polyspace import build_basis, evaluate_basis, lambda_adjoint, make_dims
from sosipm.wsos import WsosProgram

from conftest import lower_bound_problem, poly_values

DATA = Path(__file__).parent / "data"


@pytest.mark.parametrize("name", ["univariate_lower_bound", "interval_cubic", "raw_univariate"])
def test_golden_round_trip(name):
    raw = (DATA / f"{name}.json").read_bytes()
    pf = fio.parse_problem(raw)
    assert fio.serialize_problem(pf) == raw
    assert fio.parse_problem(fio.serialize_problem(pf)) == pf


def test_hex_floats_decode_exactly():
    doc = json.loads((DATA / "raw_univariate.json").read_text())
    doc["c"] = [float(x).hex() for x in doc["c"]]
    pf = fio.parse_problem(json.dumps(doc))
    ref = fio.parse_problem((DATA / "raw_univariate.json").read_bytes())
    np.testing.assert_array_equal(pf.c, ref.c)


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=3,
                max_size=3))
def test_raw_payload_round_trips_bitwise(c):
    doc = json.loads((DATA / "raw_univariate.json").read_text())
    doc["c"] = c
    pf = fio.parse_problem(json.dumps(doc))
    back = fio.parse_problem(fio.serialize_problem(pf))
    assert back.c.tobytes() == np.asarray(c, dtype=float).tobytes()


def _raw_doc():
    return json.loads((DATA / "raw_univariate.json").read_text())


def test_rejects_nan_with_position():
    with pytest.raises(ProblemFormatError, match=r"A\[1\]\[2\]"):
        fio.parse_problem((DATA / "malformed.json").read_bytes(), path="malformed.json")


def test_rejects_nan_literal():
    text = (DATA / "raw_univariate.json").read_text().replace("0.5773502691896257", "NaN", 1)
    with pytest.raises(ProblemFormatError):
        fio.parse_problem(text)


def test_rejects_too_many_constraints():
    doc = _raw_doc()
    doc["A"] = doc["A"] + [[1.0, 2.0, 3.0], [0.0, 0.0, 1.0]]
    doc["b"] = doc["b"] + [0.0, 0.0]
    with pytest.raises(ProblemFormatError, match="exceed"):
        fio.parse_problem(json.dumps(doc))


@pytest.mark.parametrize("edit,pattern", [
    (lambda d: d["b"].append(1.0), "b: expected length"),
    (lambda d: d["c"].pop(), "c: expected length"),
    (lambda d: d["A"][1].pop(), r"A\[1\]: row length"),
    (lambda d: d.update(extra=1), "unknown field"),
    (lambda d: d.update(schema="other/9"), "schema"),
    (lambda d: d.update(kind="lp"), "kind"),
    (lambda d: d.pop("c"), "c: required"),
    (lambda d: d["params"].update(delta=True), "boolean"),
    (lambda d: d["params"].update(mu=1.0), "unknown parameter"),
])
def test_rejections(edit, pattern):
    doc = _raw_doc()
    edit(doc)
    with pytest.raises(ProblemFormatError, match=pattern):
        fio.parse_problem(json.dumps(doc))


def test_rejects_bad_json_and_degree_overflow():
    with pytest.raises(ProblemFormatError, match="invalid JSON"):
        fio.parse_problem(b"{not json")
    doc = json.loads((DATA / "univariate_lower_bound.json").read_text())
    doc["frontend"]["poly"]["3"] = 1.0
    with pytest.raises(ProblemFormatError, match="degree 3"):
        fio.parse_problem(json.dumps(doc))


def test_parse_poly_forms():
    assert fio.parse_poly("3,2,1", 1) == {(0,): 3.0, (1,): 2.0, (2,): 1.0}
    assert fio.parse_poly([0, 0, 1], 1, 1) == {(2,): 1.0}
    assert fio.parse_poly({"2,0": 1.0, "0,2": 1.0}, 2) == {(2, 0): 1.0, (0, 2): 1.0}
    with pytest.raises(ProblemFormatError):
        fio.parse_poly([1, 2], 2)
    with pytest.raises(ProblemFormatError):
        fio.parse_poly({"1": 1.0}, 2)
    with pytest.raises(ProblemFormatError):
        fio.parse_poly("1,2,3,4", 1, 1)
    terms = {(2, 0): 1.0, (1, 1): -3.0}
    assert fio.parse_poly(fio.format_poly(terms), 2) == terms


def test_evaluate_poly():
    terms = fio.parse_poly({"2,0": 1.0, "1,1": 2.0, "0,0": -1.0}, 2)
    pts = np.array([[1.0, 2.0], [0.5, -1.0]])
    np.testing.assert_allclose(fio.evaluate_poly(terms, pts), [4.0, -1.75])
    np.testing.assert_allclose(fio.evaluate_poly({(1,): 2.0}, np.array([1.0, 3.0])), [2.0, 6.0])


@pytest.mark.parametrize("U", [2, 3, 7, 28])
def test_complement_of_ones(U):
    A = fio.orthonormal_complement_of_ones(U)
    np.testing.assert_allclose(A @ A.T, np.eye(U - 1), atol=1e-14)
    np.testing.assert_allclose(A @ np.ones(U), 0.0, atol=1e-14)


def test_lower_bound_encoding():
    basis = build_basis(make_dims(1, 2))
    f = poly_values([1, 0, -2, 0, 1], basis.points)
    red = fio.lower_bound_frontend(f, basis)
    p = red.program
    gamma = -0.25
    x = f - gamma
    np.testing.assert_allclose(p.A @ x, p.b, atol=1e-13)
    assert red.gamma(x) == pytest.approx(gamma, abs=1e-13)
    with pytest.raises(ValueError):
        fio.lower_bound_frontend(f[:-1], basis)


@given(seed=st.integers(0, 2**32 - 1), gamma=st.floats(-5, 5))
def test_decoded_bound_is_sound(seed, gamma):
    # any feasible SOS x decodes to a valid lower bound
    rng = np.random.default_rng(seed)
    d = 2
    basis = build_basis(make_dims(1, d))
    V = rng.standard_normal((basis.L, 2))
    x = lambda_adjoint(basis, V @ V.T)
    f = x + gamma
    red = fio.lower_bound_frontend(f, basis)
    assert np.abs(red.program.A @ x - red.program.b).max() <= 1e-10
    g = red.gamma(x)

    def p(t):
        B = evaluate_basis(t, 1, d)
        return np.sum((B @ V) ** 2, axis=1) + gamma

    assert g <= oracle.grid_min(p, (-3.0, 3.0), 10_000) + 1e-9


@pytest.mark.parametrize("coeffs,want", [([5.0], 5.0), ([3, 2, 1], 2.0)])
def test_lower_bound_frontend_solves(coeffs, want):
    red = lower_bound_problem(coeffs, 1)
    sol, _ = solve_blocks(red.program, IpmParams(delta=1e-2))
    assert abs(red.gamma(sol.x) - want) <= sol.gap_bound
    assert red.gamma(sol.x) <= want + 1e-9


def test_quartic_with_two_minima():
    red = lower_bound_problem([1, 0, -2, 0, 1], 2)
    sol, _ = solve_blocks(red.program, IpmParams(delta=1e-2))
    g = red.gamma(sol.x)
    assert abs(g) <= sol.gap_bound
    assert g <= oracle.grid_min(lambda t: poly_values([1, 0, -2, 0, 1], t), (-3, 3), 10_000)


def test_build_program_kinds():
    sos = fio.build_program(fio.parse_problem((DATA / "univariate_lower_bound.json").read_bytes()))
    assert isinstance(sos.program, SosProgram) and sos.reduction is not None
    assert sos.params == {"delta": 0.01}
    ws = fio.build_program(fio.parse_problem((DATA / "interval_cubic.json").read_bytes()))
    assert isinstance(ws.program, WsosProgram)
    assert [w.L for w in ws.program.weights] == [3, 2]
    raw = fio.build_program(fio.parse_problem((DATA / "raw_univariate.json").read_bytes()))
    assert raw.reduction is None
    np.testing.assert_array_equal(raw.program.basis.P,
                                  fio.parse_problem((DATA / "raw_univariate.json")
                                                    .read_bytes()).P)
