import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_trigpoly(rng, dim, order, shape="spherical", real=False):
    from msn.trigpoly import MultiIndexSet, TrigPoly

    iset = MultiIndexSet(dim, order, shape)
    c = rng.standard_normal(len(iset)) + 1j * rng.standard_normal(len(iset))
    T = TrigPoly(iset, c)
    return T.real_part() if real else T


def kkt_oracle(A, w2, f, refine=3):
    """Dense solve of ``min a^H diag(w2) a`` subject to ``A a = f`` via its KKT system.

    The KKT matrix squares the condition number of the scaled problem, so the
    double-precision solve is followed by iterative refinement with residuals
    formed in extended precision.
    """
    A = np.asarray(A, dtype=complex)
    M, K = A.shape
    kkt = np.zeros((K + M, K + M), dtype=complex)
    kkt[:K, :K] = np.diag(w2)
    kkt[:K, K:] = A.conj().T
    kkt[K:, :K] = A
    rhs = np.concatenate([np.zeros(K), np.asarray(f, dtype=complex)])
    lu = sla.lu_factor(kkt)
    x = sla.lu_solve(lu, rhs).astype(np.clongdouble)
    kkt_ext = kkt.astype(np.clongdouble)
    for _ in range(refine):
        r = rhs.astype(np.clongdouble) - kkt_ext @ x
        x = x + sla.lu_solve(lu, r.astype(complex))
    return x[:K].astype(complex)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
