"""Target-specific machinery for SU(1,1)/U(1) and SU(2,1)/S(U(2)xU(1)).

Coordinate transforms, basis-change conjugations, Ernst-potential
extraction, the Kerr / Kerr-Newman closed forms used as oracles, the
su(2,1) structural test-bed (basis, commutators, solvable-subgroup
parametrization), and the closed-form one-soliton family on the 3x3
target.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import algebra, dressing, seeds
from .algebra import ComplexMatrix, Signature
from .dressing import SolitonConfig, Tolerances
from .errors import ConfigError, DomainError, SingularPointError
from .spectral import DomainPoint

SIG_11 = Signature(1, 1)
SIG_21 = Signature(2, 1)

#: Cayley conjugator mapping the 2x2 indefinite-unitary picture to SL(2,R)
CAYLEY_Q2 = np.array([[1.0, 1.0j], [1.0j, 1.0]], dtype=complex) / math.sqrt(2.0)

#: antidiagonal metric of the alternate 3x3 representation
GAMMA_TILDE = np.array([[0, 0, -1j], [0, 1, 0], [1j, 0, 0]], dtype=complex)


@dataclass(frozen=True)
class ErnstValue11:
    """Real Ernst pair: x the Killing-field norm, y the twist potential."""

    x: float
    y: float


@dataclass(frozen=True)
class ErnstValue21:
    """Complex Ernst pair (E, Phi) with the real parts reported alongside.

    E = x + |Phi|^2 + i y; ``consistency`` is the extraction self-check
    Im(qt_31 / qt_33) + |Phi|^2, reported rather than enforced.
    """

    E: complex
    Phi: complex
    x: float
    y: float
    consistency: float


@dataclass(frozen=True)
class BLParams:
    """Boyer-Lindquist family parameters: mass m, pole height s, charge e."""

    m: float
    s: float
    e: float = 0.0

    def __post_init__(self) -> None:
        if not (self.s > 0):
            raise ConfigError(f"pole height s must be positive, got {self.s}")


def bl_to_weyl(r: float, theta: float, p: BLParams) -> DomainPoint:
    """Oblate-spheroidal to Weyl coordinates:
    rho = sqrt((r-m)^2 + s^2) sin(theta), z = (r-m) cos(theta)."""
    if not (0.0 < theta < math.pi):
        raise DomainError(f"theta must lie strictly between 0 and pi, got {theta}")
    rho = math.sqrt((r - p.m) ** 2 + p.s ** 2) * math.sin(theta)
    return DomainPoint(rho=rho, z=(r - p.m) * math.cos(theta))


# ---------------------------------------------------------------------------
# G_{1,1}: Ernst potential via the Cayley transform
# ---------------------------------------------------------------------------

def cayley2(q: ComplexMatrix) -> ComplexMatrix:
    """Conjugate a 2x2 matrix into the SL(2,R) picture."""
    q = algebra.as_matrix(q, 2)
    return CAYLEY_Q2 @ q @ CAYLEY_Q2.conj().T


def ernst_g11(q: ComplexMatrix) -> ErnstValue11:
    """Extract (x, y) from a dressed 2x2 map: x = 1/q'_22, y = q'_12/q'_22
    in the Cayley picture."""
    qp = cayley2(q)
    if qp[1, 1] == 0:
        raise SingularPointError("Ernst extraction singular: q'_22 = 0")
    return ErnstValue11(x=float((1.0 / qp[1, 1]).real), y=float((qp[0, 1] / qp[1, 1]).real))


def ernst_embed_g11(x: float, y: float) -> ComplexMatrix:
    """Inverse of ernst_g11: embed (x, y) as the 2x2 map (1/x)[[x^2+y^2, y],[y, 1]]
    pulled back through the Cayley transform."""
    if x == 0:
        raise DomainError("x must be nonzero to embed")
    qp = np.array([[x * x + y * y, y], [y, 1.0]], dtype=complex) / x
    return CAYLEY_Q2.conj().T @ qp @ CAYLEY_Q2


def kerr_oracle(m: float, a: float, r: float, theta: float) -> ErnstValue11:
    """Closed-form Kerr potentials in Boyer-Lindquist coordinates."""
    c = math.cos(theta)
    den = r * r + a * a * c * c
    if den == 0:
        raise DomainError("Kerr oracle denominator vanishes")
    return ErnstValue11(x=(r * r - 2.0 * m * r + a * a * c * c) / den,
                        y=2.0 * m * a * c / den)


def kerr_params(m: float, s: float) -> tuple[float, float, complex]:
    """Vector components (alpha, delta) and pole i*s realizing the Kerr
    family with mass m and spin a = sqrt(m^2 + s^2).

    alpha = sqrt((s + sqrt(m^2+s^2))/2), delta = sqrt((-s + sqrt(m^2+s^2))/2);
    then alpha^2 - delta^2 = s, alpha^2 + delta^2 = sqrt(m^2+s^2) and
    alpha*delta = m/2.
    """
    if m < 0 or s <= 0:
        raise ConfigError(f"kerr parameters need m >= 0 and s > 0, got m={m}, s={s}")
    root = math.sqrt(m * m + s * s)
    return math.sqrt(0.5 * (s + root)), math.sqrt(0.5 * (root - s)), 1j * s


def kerr_config(m: float, s: float, tol: Tolerances | None = None) -> SolitonConfig:
    """One-soliton configuration generating the Kerr family from the flat seed."""
    alpha, delta, pole = kerr_params(m, s)
    return SolitonConfig(
        signature=SIG_11,
        poles=(pole,),
        vectors=(np.array([alpha, delta], dtype=complex),),
        seed=seeds.identity_seed(SIG_11),
        tolerances=tol or Tolerances(),
    )


# ---------------------------------------------------------------------------
# G_{2,1}: basis change, Ernst dictionary, Kerr-Newman closed forms
# ---------------------------------------------------------------------------

def basis_change_u3() -> ComplexMatrix:
    """Unitary U with U diag(1,1,-1) U* equal to the antidiagonal metric.

    Columns are eigenvectors of the antidiagonal metric, (1,0,i)/sqrt2 and
    e2 for eigenvalue +1 and (i,0,1)/sqrt2 for -1; the phase of the third
    column is fixed so that the 3x3 extraction restricts to the 2x2 Cayley
    extraction on the embedded block.
    """
    s2 = math.sqrt(2.0)
    return np.array([[1 / s2, 0, 1j / s2],
                     [0, 1, 0],
                     [1j / s2, 0, 1 / s2]], dtype=complex)


_U3 = basis_change_u3()


def to_tilde_rep(q: ComplexMatrix) -> ComplexMatrix:
    """Diagonal-metric picture -> antidiagonal-metric picture."""
    return _U3 @ q @ _U3.conj().T


def from_tilde_rep(qt: ComplexMatrix) -> ComplexMatrix:
    return _U3.conj().T @ qt @ _U3


def ernst_g21(q: ComplexMatrix, normalize: bool = False) -> ErnstValue21:
    """Extract (E, Phi) from a 3x3 map given in the diagonal-metric picture.

    Third-row dictionary in the antidiagonal picture: x = 1 / Re(qt_33),
    Phi = i qt_32 / (sqrt2 qt_33), y = Re(qt_31 / qt_33). The extraction
    uses entry ratios plus the unit-determinant normalization only, so a
    pre-normalized input extracts identically; ``normalize`` applies the
    determinant rescaling first for inputs that need it.
    """
    q = algebra.as_matrix(q, 3)
    if normalize:
        q, _ = dressing.normalize_det(q)
    qt = to_tilde_rep(q)
    if abs(qt[2, 2]) == 0 or qt[2, 2].real == 0:
        raise SingularPointError("Ernst extraction singular: qt_33 ~ 0")
    x = 1.0 / qt[2, 2].real
    phi = 1j * qt[2, 1] / (math.sqrt(2.0) * qt[2, 2])
    ratio = qt[2, 0] / qt[2, 2]
    y = float(ratio.real)
    consistency = float(ratio.imag + abs(phi) ** 2)
    return ErnstValue21(E=x + abs(phi) ** 2 + 1j * y, Phi=complex(phi),
                        x=float(x), y=y, consistency=consistency)


def ptilde_matrix(ernst: complex, phi: complex) -> ComplexMatrix:
    """Closed-form symmetric-space element for given potentials, in the
    antidiagonal picture (x = Re E - |Phi|^2, y = Im E)."""
    x = ernst.real - abs(phi) ** 2
    y = ernst.imag
    if x == 0:
        raise SingularPointError("potential matrix singular: x = 0")
    p2 = abs(phi) ** 2
    s2 = math.sqrt(2.0)
    m = np.empty((3, 3), dtype=complex)
    m[0, 0] = x + 2 * p2 + (y * y + p2 * p2) / x
    m[0, 1] = s2 * phi * (1 + (p2 - 1j * y) / x)
    m[0, 2] = (y + 1j * p2) / x
    m[1, 1] = 1 + 2 * p2 / x
    m[1, 2] = 1j * s2 * np.conj(phi) / x
    m[2, 2] = 1 / x
    m[1, 0] = np.conj(m[0, 1])
    m[2, 0] = np.conj(m[0, 2])
    m[2, 1] = -1j * s2 * phi / x
    return m


def kn_oracle(m: float, e: float, a: float, r: float, theta: float) -> ErnstValue21:
    """Closed-form Kerr-Newman potentials Phi = e/(r - i a cos theta),
    E = 1 - 2m/(r - i a cos theta)."""
    den = r - 1j * a * math.cos(theta)
    if den == 0:
        raise DomainError("Kerr-Newman oracle denominator vanishes")
    ernst = 1.0 - 2.0 * m / den
    phi = e / den
    x = ernst.real - abs(phi) ** 2
    return ErnstValue21(E=complex(ernst), Phi=complex(phi), x=float(x),
                        y=float(ernst.imag), consistency=0.0)


def g21_soliton_family(a_param: float, b_param: float,
                       n1: float, n2: float, n3: float, n4: float,
                       p: BLParams, r: float, theta: float) -> ComplexMatrix:
    """Closed-form one-soliton 3x3 map with the vector bilinears replaced
    by free products: the pair (n1 + i n2, n3 + i n4) stands in for the
    first two components paired against the third, with squared moduli
    n1^2 + n2^2 and n3^2 + n4^2 on the diagonal.
    """
    s = p.s
    big_r = r - p.m
    c = math.cos(theta)
    f = a_param ** 2 * (big_r ** 2 + s * s) - b_param ** 2 * s * s * math.sin(theta) ** 2
    if f == 0:
        raise SingularPointError("family evaluated on its singular locus F = 0")
    ag = n1 + 1j * n2
    bg = n3 + 1j * n4
    aag = n1 * n1 + n2 * n2
    bbg = n3 * n3 + n4 * n4
    w = 1j * a_param * big_r - b_param * s * c
    q = np.empty((3, 3), dtype=complex)
    q[0, 0] = 1 + 8 * aag * s * s / f
    q[0, 1] = 8 * ag * np.conj(bg) * s * s / f
    q[0, 2] = -4 * s * ag * w / f
    q[1, 1] = 1 + 8 * bbg * s * s / f
    q[1, 2] = -4 * s * bg * w / f
    q[2, 2] = 1 + 8 * (aag + bbg) * s * s / f
    q[1, 0] = np.conj(q[0, 1])
    q[2, 0] = np.conj(q[0, 2])
    q[2, 1] = np.conj(q[1, 2])
    return q


def kn_family_params(p: BLParams) -> dict[str, float]:
    """Family parameters identified with the Kerr-Newman triple (m, s, e).

    b_param is kept positive; the matching oracle spin is a = -b_param
    (at e = 0 this reproduces the Kerr oracle's twist sign).
    """
    disc = p.m * p.m + p.s * p.s - p.e * p.e
    if disc <= 0:
        raise ConfigError(f"need m^2 + s^2 - e^2 > 0, got {disc}")
    b = math.sqrt(disc)
    return {"a_param": p.s, "b_param": b, "n1": p.m / 2.0, "n2": 0.0,
            "n3": -p.e / 2.0, "n4": 0.0, "oracle_a": -b}


def embed_g11_in_g21(q2: ComplexMatrix) -> ComplexMatrix:
    """Totally geodesic embedding of the 2x2 target into the 3x3 one:
    the 2x2 block occupies rows/columns (1, 3) around a middle identity."""
    q2 = algebra.as_matrix(q2, 2)
    out = np.eye(3, dtype=complex)
    out[np.ix_([0, 2], [0, 2])] = q2
    return out


# ---------------------------------------------------------------------------
# su(2,1) structural test-bed (antidiagonal-metric representation)
# ---------------------------------------------------------------------------

def _e(i: int, j: int) -> ComplexMatrix:
    m = np.zeros((3, 3), dtype=complex)
    m[i - 1, j - 1] = 1.0
    return m


def su21_basis() -> list[ComplexMatrix]:
    """The eight basis matrices of su(2,1) in the antidiagonal picture;
    each is traceless and satisfies X* Gt + Gt X = 0."""
    return [
        _e(1, 3),
        _e(3, 1),
        _e(1, 1) - _e(3, 3),
        1j * (_e(1, 1) - 2 * _e(2, 2) + _e(3, 3)),
        _e(1, 2) + 1j * _e(2, 3),
        1j * _e(1, 2) + _e(2, 3),
        _e(2, 1) - 1j * _e(3, 2),
        1j * _e(2, 1) - _e(3, 2),
    ]


#: structure constants [X^i, X^j] = sum_k c_k X^k for i < j (1-based keys)
COMMUTATION_TABLE: dict[tuple[int, int], dict[int, float]] = {
    (1, 2): {3: 1}, (1, 3): {1: -2}, (1, 4): {}, (1, 5): {}, (1, 6): {},
    (1, 7): {6: -1}, (1, 8): {5: -1},
    (2, 3): {2: 2}, (2, 4): {}, (2, 5): {8: -1}, (2, 6): {7: -1},
    (2, 7): {}, (2, 8): {},
    (3, 4): {}, (3, 5): {5: 1}, (3, 6): {6: 1}, (3, 7): {7: -1}, (3, 8): {8: -1},
    (4, 5): {6: 3}, (4, 6): {5: -3}, (4, 7): {8: -3}, (4, 8): {7: 3},
    (5, 6): {1: 2}, (5, 7): {3: 1}, (5, 8): {4: 1},
    (6, 7): {4: 1}, (6, 8): {3: -1},
    (7, 8): {2: 2},
}


def commutation_check(atol: float = 1e-13) -> dict[tuple[int, int], bool]:
    """Compare all 28 pairwise brackets of the basis against the stored
    structure constants, entrywise."""
    basis = su21_basis()
    report: dict[tuple[int, int], bool] = {}
    for (i, j), coeffs in COMMUTATION_TABLE.items():
        lhs = basis[i - 1] @ basis[j - 1] - basis[j - 1] @ basis[i - 1]
        rhs = np.zeros((3, 3), dtype=complex)
        for k, ck in coeffs.items():
            rhs += ck * basis[k - 1]
        report[(i, j)] = bool(np.max(np.abs(lhs - rhs)) <= atol)
    return report


def cartan_embed_su21(mu: float, delta: float, eta: float, theta: float) -> ComplexMatrix:
    """Image of the solvable-subgroup element n(delta, eta, theta) a(mu)
    under g -> g g*, in the antidiagonal picture.

    Equals ptilde_matrix(E, Phi) with sqrt2 Phi = eta + i theta and
    E = e^{2 mu} + |Phi|^2 + i delta.
    """
    w = eta + 1j * theta
    n = np.array([[1, w, delta + 0.5j * abs(w) ** 2],
                  [0, 1, 1j * np.conj(w)],
                  [0, 0, 1]], dtype=complex)
    a = np.diag([cmath.exp(mu), 1.0, cmath.exp(-mu)])
    g = n @ a
    return g @ g.conj().T
