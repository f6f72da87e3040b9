"""Neo-Hookean hyperelasticity."""

import numpy as np

from ..errors import InvertedElementError


def neo_hookean_stress(F, mu, lam):
    """First Piola-Kirchhoff stress ``P = mu (F - F^-T) + lam ln(J) F^-T``.

    ``F`` may be a single 3x3 matrix or a ``(..., 3, 3)`` batch.
    """
    F = np.asarray(F, dtype=np.float64)
    J = np.linalg.det(F)
    if np.any(~(J > 0)):
        bad = np.flatnonzero(~(np.atleast_1d(J) > 0))
        raise InvertedElementError(f"det F <= 0 for {len(bad)} element(s), first index {int(bad[0])}")
    FinvT = np.swapaxes(np.linalg.inv(F), -1, -2)
    mu = np.asarray(mu, dtype=np.float64)[..., None, None]
    lam = np.asarray(lam, dtype=np.float64)[..., None, None]
    return mu * (F - FinvT) + lam * np.log(J)[..., None, None] * FinvT


def neo_hookean_energy(F, mu, lam):
    """Strain energy density; its gradient w.r.t. ``F`` is :func:`neo_hookean_stress`."""
    F = np.asarray(F, dtype=np.float64)
    J = np.linalg.det(F)
    logJ = np.log(J)
    return 0.5 * mu * (np.sum(F * F, axis=(-1, -2)) - 3.0) - mu * logJ + 0.5 * lam * logJ**2
