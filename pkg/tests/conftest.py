import numpy as np
import pytest

from tightlag import liegroup as lg
from tightlag import surfaces as sf


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def m0():
    return sf.AntiDiagonalSphere()


@pytest.fixture(scope="session")
def t00():
    return sf.LatitudeTorus(0.0, 0.0)


def curve_torus(rng, n_modes=2, amp=0.25):
    """Random product of two closed curves on S^2 (a Lagrangian torus)."""
    def curve(var):
        terms = []
        for k in range(3):
            e = f"{rng.normal():.6f}"
            for m in range(1, n_modes + 1):
                e += f" + {amp * rng.normal():.6f}*cos({m}*{var}) + {amp * rng.normal():.6f}*sin({m}*{var})"
            terms.append(e)
        # keep well away from the origin so normalisation is smooth
        terms[0] = f"2.5 + {terms[0]}"
        return terms
    return sf.ParametricSurface("torus", curve("s"), curve("t"), name="random-curves")


def random_sphere_map(rng, amp=0.15):
    """p -> (p + small, -R p + small): a perturbed copy of the anti-diagonal class."""
    r = lg.random_rotations(rng, 1)[0]
    def pert(i):
        c = amp * rng.normal(size=3)
        return f"{c[0]:.6f}*p1*p2 + {c[1]:.6f}*p3**2 + {c[2]:.6f}*sin(p1)"
    x = [f"p{i + 1} + {pert(i)}" for i in range(3)]
    y = [" + ".join(f"({-r[i, j]:.12f})*p{j + 1}" for j in range(3)) + f" + {pert(i)}" for i in range(3)]
    return sf.ParametricSurface("sphere", x, y, name="random-sphere")


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
