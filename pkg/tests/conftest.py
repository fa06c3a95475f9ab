import numpy as np
import pytest

from trimpc import Session


@pytest.fixture
def run_checked():
    """Run a protocol and assert the access rule held for the whole trace."""

    def _run(sess: Session, gen, allow_violations: bool = False):
        result = sess.run(gen)
        violations = sess.assert_views_legal()
        if not allow_violations:
            assert violations == [], f"view violations: {violations}"
        return result

    return _run


def bit_out(shares) -> np.ndarray:
    """Decode a single-bit share vector's first row to 0/1 integers."""
    return (shares.e ^ shares.k)[0].astype(np.uint64)


def all_pairs(l: int):
    """Every (a, key) combination of an l-bit ring, as lane arrays."""
    n = 1 << l
    a = np.repeat(np.arange(n, dtype=np.uint64), n)
    k = np.tile(np.arange(n, dtype=np.uint64), n)
    return a, k
