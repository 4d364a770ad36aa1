"""Orthogonal function analysis of ternary gates.

Functions on the three-point domain T = {-1, 0, +1} are spanned by the
orthogonal family

    phi_0(x) = 1,    phi_1(x) = x,    phi_2(x) = x^2 - 2/3,

with squared norms 1, 2/3 and 2/9 under the uniform inner product
<f, g> = (1/3) sum_x f(x) g(x). Two-input gates use the products
Phi_ij(x, y) = phi_i(x) phi_j(y) under the uniform inner product over
the 9-point grid; the squared norms multiply. A truth table t then has
the expansion

    t = sum_ij fhat_ij Phi_ij,    fhat_ij = <t, Phi_ij> / ||Phi_ij||^2,

and the coefficient vector fhat exposes the structure of a gate: which
inputs it reads, whether it gates one input by the other, and whether
it uses the squared (UNKNOWN-detecting) terms. Coefficients are stored
as 9-vectors ordered by (i, j) with i outer, index 3*i + j.
"""

from __future__ import annotations

import numpy as np

from . import algebra

#: phi_i evaluated at x = -1, 0, +1; row i is the i-th basis function.
PHI_VALUES = np.array(
    [
        [1.0, 1.0, 1.0],
        [-1.0, 0.0, 1.0],
        [1.0 / 3.0, -2.0 / 3.0, 1.0 / 3.0],
    ]
)

#: Squared norms of phi_0, phi_1, phi_2 under <f, g> = (1/3) sum f g.
PHI_SQ_NORMS = np.array([1.0, 2.0 / 3.0, 2.0 / 9.0])

#: Index pairs in storage order: position 3*i + j holds (i, j).
INDEX_PAIRS = tuple((i, j) for i in range(3) for j in range(3))


def _build_bivariate() -> np.ndarray:
    rows = []
    for i, j in INDEX_PAIRS:
        row = [
            PHI_VALUES[i, a + 1] * PHI_VALUES[j, b + 1]
            for a, b in algebra.GRID_POINTS
        ]
        rows.append(row)
    return np.array(rows)


#: PHI2[3*i + j, g] = Phi_ij evaluated at the g-th grid point.
PHI2 = _build_bivariate()

#: Squared norms of the bivariate family, products of univariate norms.
SQ_NORMS = np.array([PHI_SQ_NORMS[i] * PHI_SQ_NORMS[j] for i, j in INDEX_PAIRS])

#: Matrix of the forward transform: fhat = TRANSFORM @ table.
TRANSFORM = PHI2 / (9.0 * SQ_NORMS[:, None])

#: Total degree of Phi_ij, used to assign coefficients to energy bands.
TOTAL_DEGREE = np.array([i + j for i, j in INDEX_PAIRS])

_BAND_NAMES = ("const", "linear", "quad", "cubic", "quartic")


def _build_monomial_map() -> np.ndarray:
    """Change of basis from monomial coefficients to fhat.

    Uses the exact expansions 1 = Phi_00, x = Phi_10, x^2 = Phi_20 +
    (2/3) Phi_00 together with separability, rather than going through
    truth-table values. Columns follow the monomial order of
    `algebra.monomials`.
    """
    # univariate expansion of 1, x, x^2 in phi_0, phi_1, phi_2
    u = np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [2.0 / 3.0, 0.0, 1.0],
        ]
    )
    # monomial order: a^p b^q with (p, q) as below
    powers = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (2, 1), (1, 2), (2, 2)]
    m = np.zeros((9, 9))
    for col, (p, q) in enumerate(powers):
        for i in range(3):
            for j in range(3):
                m[3 * i + j, col] = u[p, i] * u[q, j]
    return m


#: MONOMIAL_TO_FOURIER @ w gives the fhat vector of p_w directly.
MONOMIAL_TO_FOURIER = _build_monomial_map()


def inner_product(f, g) -> float:
    """Uniform inner product of two grid functions, (1/9) sum f g."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != (9,) or g.shape != (9,):
        raise ValueError("inner_product expects two 9-vectors")
    return float(f @ g) / 9.0


def fourier_transform(table) -> np.ndarray:
    """Coefficients fhat of a real-valued table, in (i outer, j) order."""
    t = np.asarray(table, dtype=float)
    if t.shape != (9,):
        raise ValueError(f"expected a 9-entry table, got shape {t.shape}")
    return TRANSFORM @ t


def inverse_transform(fhat) -> np.ndarray:
    """Table values of a coefficient vector, inverse of the transform."""
    f = np.asarray(fhat, dtype=float)
    if f.shape != (9,):
        raise ValueError(f"expected 9 coefficients, got shape {f.shape}")
    return PHI2.T @ f


def monomial_to_fourier(w) -> np.ndarray:
    """fhat of the polynomial with monomial coefficients w."""
    w = np.asarray(w, dtype=float)
    if w.shape != (9,):
        raise ValueError(f"expected 9 coefficients, got shape {w.shape}")
    return MONOMIAL_TO_FOURIER @ w


def fourier_l1(fhat) -> float:
    """Sum of absolute coefficients, the sparsity surrogate."""
    f = np.asarray(fhat, dtype=float)
    if f.shape != (9,):
        raise ValueError(f"expected 9 coefficients, got shape {f.shape}")
    return float(np.abs(f).sum())


# Index positions by name, for readability below.
_IJ = {f"{i}{j}": 3 * i + j for i, j in INDEX_PAIRS}
_LINEAR_SUPPORT = {_IJ["00"], _IJ["10"], _IJ["01"]}
_BILINEAR_SUPPORT = _LINEAR_SUPPORT | {_IJ["11"]}
_PURE_QUAD = {_IJ["20"], _IJ["02"]}
_HIGHER_MIXED = {_IJ["21"], _IJ["12"], _IJ["22"]}


def spectral_class(fhat, tol: float = 1e-9) -> str:
    """Coarse shape of a spectrum: LINEAR, BILINEAR, QUADRATIC or FULL.

    LINEAR spectra live on {00, 10, 01}; BILINEAR ones additionally use
    the 11 term; QUADRATIC ones bring in 20 or 02 but none of the mixed
    terms above degree 2; everything else is FULL. Coefficients with
    absolute value at most `tol` count as zero, so for learned (not
    exactly discrete) polynomials pass a tolerance that matches the
    noise floor of the training run.
    """
    f = np.asarray(fhat, dtype=float)
    if f.shape != (9,):
        raise ValueError(f"expected 9 coefficients, got shape {f.shape}")
    support = {int(i) for i in np.flatnonzero(np.abs(f) > tol)}
    if support <= _LINEAR_SUPPORT:
        return "LINEAR"
    if support <= _BILINEAR_SUPPORT:
        return "BILINEAR"
    if support & _PURE_QUAD and not (support & _HIGHER_MIXED):
        return "QUADRATIC"
    return "FULL"


def spectral_energy_bands(fhat) -> dict[str, float]:
    """Squared-coefficient energy split by total degree of Phi_ij.

    Bands are const (degree 0), linear (1), quad (2), cubic (3) and
    quartic (4). The five band values are normalized to sum to 1; the
    returned dict also carries the unnormalized total under "total".
    A zero spectrum yields all-zero bands with total 0, which callers
    should treat as a flag rather than a profile.
    """
    f = np.asarray(fhat, dtype=float)
    if f.shape != (9,):
        raise ValueError(f"expected 9 coefficients, got shape {f.shape}")
    energy = f * f
    total = float(energy.sum())
    bands = {name: 0.0 for name in _BAND_NAMES}
    if total > 0.0:
        for deg, name in enumerate(_BAND_NAMES):
            bands[name] = float(energy[TOTAL_DEGREE == deg].sum()) / total
    bands["total"] = total
    return bands
