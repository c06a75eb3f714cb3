"""Two-sample t-test for comparing repeated experiment scores."""

from __future__ import annotations

import numpy as np
from scipy import special

SIGNIFICANCE_LEVEL = 0.05


def t_test(
    sample_a, sample_b, equal_var: bool = False
) -> tuple[float, float]:
    """Two-tailed two-sample t-test; Welch's by default.

    Returns (t statistic, p value). ``equal_var=True`` switches to the
    pooled-variance Student variant. Identical zero-variance samples return
    (0, 1) by convention.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    na, nb = a.shape[0], b.shape[0]
    if na < 2 or nb < 2:
        raise ValueError("each sample needs at least two observations")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    diff = a.mean() - b.mean()

    if equal_var:
        pooled = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
        denom = np.sqrt(pooled * (1.0 / na + 1.0 / nb))
        df = na + nb - 2
    else:
        sa, sb = va / na, vb / nb
        denom = np.sqrt(sa + sb)
        if sa + sb > 0:
            df = (sa + sb) ** 2 / (sa**2 / (na - 1) + sb**2 / (nb - 1))
        else:
            df = na + nb - 2

    if denom == 0.0:
        if diff == 0.0:
            return 0.0, 1.0
        return float(np.copysign(np.inf, diff)), 0.0

    t = diff / denom
    p = two_tailed_p(t, df)
    return float(t), float(p)


def two_tailed_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for a t distribution with ``df`` degrees of freedom."""
    # survival mass expressed through the regularized incomplete beta function
    x = df / (df + t * t)
    return float(special.betainc(df / 2.0, 0.5, x))
