import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from psidel import Ball, Box, Ellipse, domain_from_descriptor

DOMAINS = [Ball((0.0, 0.0), 1.0), Ball((0.5,), 2.0), Box((-1, -1), (1, 1)), Box((0, -2), (3, 1)),
           Ellipse(1.5, 1.0), Ellipse(0.5, 2.0, (1.0, -1.0))]

unit = st.floats(-0.95, 0.95)


def _ellipse_distance_oracle(a, b, p):
    f = lambda t: math.hypot(a * math.cos(t) - p[0], b * math.sin(t) - p[1])
    best = min((minimize_scalar(f, bounds=(t0, t0 + math.pi / 2), method="bounded",
                                options={"xatol": 1e-12}) for t0 in np.arange(4) * math.pi / 2),
               key=lambda r: r.fun)
    return best.fun


@given(unit, unit)
@settings(max_examples=80, deadline=None)
def test_ellipse_distance_matches_direct_minimization(u, v):
    a, b = 1.5, 1.0
    p = np.array([u * a, v * b])
    got = float(Ellipse(a, b).boundary_distance(p[None])[0])
    assert got == pytest.approx(_ellipse_distance_oracle(a, b, p), abs=1e-8)


def test_ellipse_distance_on_axes_and_outside():
    e = Ellipse(1.5, 1.0)
    assert e.boundary_distance(np.array([[0.0, 0.0]]))[0] == pytest.approx(1.0)
    assert e.boundary_distance(np.array([[1.0, 0.0]]))[0] == pytest.approx(0.5)
    assert e.boundary_distance_signed(np.array([[3.0, 0.0]]))[0] == pytest.approx(-1.5)


@pytest.mark.parametrize("dom", DOMAINS, ids=lambda d: d.kind + str(d.d))
def test_ray_exit_lands_on_the_boundary(dom, rng):
    lo, hi = map(np.array, dom.bounding_box)
    x = lo + (hi - lo) * rng.random((400, dom.d))
    x = x[dom.contains(x)][:50]
    e = rng.standard_normal((len(x), dom.d))
    e /= np.linalg.norm(e, axis=1, keepdims=True)
    t = dom.ray_exit(x, e)
    y = x + t[:, None] * e
    assert np.all(t > 0)
    assert np.allclose(dom.boundary_distance(y), 0, atol=1e-9)
    assert np.all(dom.contains(x + 0.999 * t[:, None] * e))


@pytest.mark.parametrize("dom", [d for d in DOMAINS if d.d == 2], ids=lambda d: d.kind)
def test_boundary_points_and_inward_normals(dom):
    theta = np.linspace(0.05, 2 * math.pi, 17)
    p = dom.boundary_point(theta)
    assert np.allclose(dom.boundary_distance(p), 0, atol=1e-9)
    n = dom.inward_normal(p)
    assert np.allclose(np.linalg.norm(n, axis=1), 1)
    # a short step along the normal goes inside, at exactly that distance (smooth part)
    assert np.all(dom.contains(p + 1e-3 * n))
    assert np.allclose(dom.boundary_distance(p + 1e-3 * n), 1e-3, rtol=1e-4)


@given(unit, unit)
@settings(max_examples=60, deadline=None)
def test_distance_is_one_lipschitz(u, v):
    dom = Box((-1, -1), (1, 1))
    p, q = np.array([[u, v]]), np.array([[v, -u]])
    gap = abs(dom.boundary_distance(p)[0] - dom.boundary_distance(q)[0])
    assert gap <= np.linalg.norm(p - q) + 1e-12


def test_ball_distance_in_one_dimension():
    b = Ball((0.5,), 2.0)
    assert np.allclose(b.boundary_distance(np.array([0.5, 2.0, -1.0])), [2.0, 0.5, 0.5])


def test_box_corners():
    assert {tuple(c) for c in Box((0, 0), (1, 2)).corners} == {(0, 0), (0, 2), (1, 0), (1, 2)}


@pytest.mark.parametrize("dom", DOMAINS, ids=lambda d: d.kind + str(d.d))
def test_descriptor_round_trip(dom):
    assert domain_from_descriptor(dom.descriptor()) == dom


@pytest.mark.parametrize("desc", [
    {"shape": "torus"}, {"shape": "box", "lo": [0, 0]}, {"shape": "ball", "radius": -1},
    {"shape": "ellipse", "a": 1, "b": 1, "tilt": 0.2}, {"shape": "box", "lo": [1, 0], "hi": [0, 1]},
])
def test_bad_descriptors_are_rejected(desc):
    with pytest.raises(ValueError):
        domain_from_descriptor(desc)
