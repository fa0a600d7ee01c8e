import numpy as np
import pytest
from scipy import stats


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def chi_square_pvalue(observed, expected_probs, min_expected=5.0):
    """Pearson chi-square p-value after pooling cells with small expectation.

    ``expected_probs`` may sum to slightly less than one; the missing mass is
    appended as an extra cell with zero observations.
    """
    observed = np.asarray(observed, dtype=float)
    probs = np.asarray(expected_probs, dtype=float)
    total = observed.sum()
    missing = max(0.0, 1.0 - probs.sum())
    observed = np.append(observed, 0.0)
    probs = np.append(probs, missing)
    order = np.argsort(-probs)
    observed, probs = observed[order], probs[order]
    exp = probs * total
    pooled_o, pooled_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            pooled_o.append(acc_o)
            pooled_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        pooled_o[-1] += acc_o
        pooled_e[-1] += acc_e
    pooled_o, pooled_e = np.array(pooled_o), np.array(pooled_e)
    stat = float(np.sum((pooled_o - pooled_e) ** 2 / pooled_e))
    return float(stats.chi2.sf(stat, len(pooled_o) - 1))


def empirical_counts(samples, support):
    """Counts of each row of ``support`` among the rows of ``samples``."""
    samples = np.asarray(samples)
    support = np.asarray(support)
    if samples.ndim == 1:
        samples = samples[:, None]
        support = support[:, None]
    index = {tuple(row): i for i, row in enumerate(support.tolist())}
    counts = np.zeros(len(support))
    unknown = 0
    for row in samples.tolist():
        i = index.get(tuple(row))
        if i is None:
            unknown += 1
        else:
            counts[i] += 1
    assert unknown == 0, f"{unknown} samples fall outside the enumerated support"
    return counts
