import math

import numpy as np
import pytest

import kamcrit as kc
from kamcrit.errors import BracketingError, DomainError
from kamcrit.stability import (
    ELLIPTIC,
    HYPERBOLIC,
    INVERSE_HYPERBOLIC,
    PARABOLIC,
    find_destabilization,
)

TWO_PI = 2 * math.pi


def _orbit(m, n, k, family=kc.FAMILY_RATIONAL):
    branch = kc.OrbitBranch(kc.Convergent(m, n), family)
    return branch.orbit_at(k)


# --- monodromy ------------------------------------------------------------------

def test_fixed_point_monodromy_closed_form():
    for k in (0.3, 1.0, 2.5):
        orb = _orbit(0, 1, k)
        mono = kc.monodromy(orb)
        np.testing.assert_allclose(mono.matrix, [[1 - k, 1], [-k, 1]], atol=1e-12)
        assert abs(mono.trace - (2 - k)) < 1e-12


def test_period2_trace_closed_form():
    for k in np.linspace(0.1, 3.9, 12):
        orb = _orbit(1, 2, float(k))
        assert abs(kc.monodromy(orb).trace - (2 - k * k)) < 1e-10


def test_integrable_monodromy_is_shear_power():
    for n, m in ((2, 1), (5, 3)):
        orb = _orbit(m, n, 0.0)
        mono = kc.monodromy(orb)
        np.testing.assert_allclose(mono.matrix, [[1, n], [0, 1]], atol=1e-9)


def test_monodromy_requires_tight_closure():
    orb = _orbit(1, 2, 0.5)
    loose = kc.PeriodicOrbit(points=orb.points, convergent=orb.convergent, K=orb.K,
                             family=orb.family, line=orb.line, closure_error=1e-6)
    with pytest.raises(DomainError):
        kc.monodromy(loose)


def test_trace_invariant_under_cyclic_start():
    orb = _orbit(3, 5, 0.8)
    base = kc.monodromy(orb).trace
    for shift in range(1, 5):
        rolled = kc.PeriodicOrbit(
            points=np.roll(orb.points, -shift, axis=0),
            convergent=orb.convergent, K=orb.K, family=orb.family,
            line=kc.orbits.LINE_NONE, closure_error=orb.closure_error,
        )
        assert abs(kc.monodromy(rolled).trace - base) < 1e-10


def test_det_drift_small_for_deep_orbits():
    for c in kc.fibonacci_convergents(6):
        orb = _orbit(c.m, c.n, 1.0)
        assert kc.monodromy(orb).det_drift <= 1e-9


# --- residue / classification -----------------------------------------------------

def test_residue_closed_forms():
    assert abs(kc.residue(kc.monodromy(_orbit(0, 1, 1.2))) - 1.2 / 4) < 1e-12
    assert abs(kc.residue(kc.monodromy(_orbit(1, 2, 1.2))) - 1.2**2 / 4) < 1e-10
    assert abs(kc.residue(kc.monodromy(_orbit(2, 3, 0.0)))) < 1e-12


def test_residue_accepts_plain_matrix():
    assert kc.residue(np.array([[0.0, 1.0], [-1.0, 1.0]])) == 0.25


def test_classify_elliptic():
    rep = kc.classify(np.array([[0.75, 1.0], [-0.3, 0.75]]), n=1)
    assert rep.classification == ELLIPTIC
    assert rep.lyapunov == 0.0
    assert 0 < rep.residue < 1


def test_classify_inverse_hyperbolic_lyapunov():
    m = np.array([[-2.0, 1.0], [1.0 - (-2.0) * (-0.5), -0.5]])  # trace -2.5, det 1
    rep = kc.classify(m, n=2)
    assert abs(np.linalg.det(m) - 1) < 1e-12
    assert rep.classification == INVERSE_HYPERBOLIC
    expected = 0.5 * math.log((2.5 + math.sqrt(2.5**2 - 4)) / 2)
    assert abs(rep.lyapunov - expected) < 1e-12


def test_classify_parabolic_shear():
    rep = kc.classify(kc.monodromy(_orbit(1, 2, 0.0)))
    assert rep.classification == PARABOLIC
    assert rep.lyapunov == 0.0


def test_classify_hyperbolic_partner():
    orb = kc.alternate_orbit(kc.Convergent(1, 2), 0.5)
    rep = kc.classify(kc.monodromy(orb))
    assert rep.classification == HYPERBOLIC
    assert rep.residue < 0
    assert rep.lyapunov > 0


def test_report_record_fields():
    orb = _orbit(1, 2, 0.5)
    rec = kc.orbit_report(orb).to_record(orb)
    assert set(rec) == {"m", "n", "K", "trace", "residue", "class", "lyapunov"}


# --- destabilization ----------------------------------------------------------------

def test_destabilization_closed_forms():
    k_fp = kc.destabilization_K(kc.Convergent(0, 1), line=kc.LINE_QPI)
    assert abs(k_fp - 4.0) <= 1e-5
    k_12 = kc.destabilization_K(kc.Convergent(1, 2))
    assert abs(k_12 - 2.0) <= 1e-5


def test_destabilization_bracket_validation():
    with pytest.raises(BracketingError):
        kc.destabilization_K(kc.Convergent(1, 2), k_lo=0.2, k_hi=1.0)  # still elliptic at 1.0
    with pytest.raises(BracketingError):
        kc.destabilization_K(kc.Convergent(1, 2), k_lo=3.0, k_hi=3.5)  # not elliptic at 3.0


def test_find_destabilization_walk():
    k_star, info = find_destabilization(kc.Convergent(2, 3))
    assert info["bracket"][0] < k_star < info["bracket"][1]
    assert 0.9716 < k_star < 2.0


def test_destabilization_monotone_small_orders():
    ks = [find_destabilization(c)[0] for c in kc.fibonacci_convergents(4)]
    assert all(b <= a + 1e-9 for a, b in zip(ks, ks[1:]))
