import math

import mpmath
import pytest

ACCEPTANCE_LINES = []


def nb_pmf_mp(n, N, mu, dps=40):
    """Multimode thermal pmf evaluated term by term in high precision."""
    if N == 0:
        return 1.0 if n == 0 else 0.0
    with mpmath.workdps(dps):
        N, mu = mpmath.mpf(N), mpmath.mpf(mu)
        log_p = (mpmath.loggamma(n + mu) - mpmath.loggamma(n + 1) - mpmath.loggamma(mu)
                 - mu * mpmath.log1p(N / mu) - n * mpmath.log1p(mu / N))
        return float(mpmath.exp(log_p))


def brute_joint(N, mu, eta1, eta2, n_max):
    """P(m1, m2) by explicit triple loop over n, m1, m2 (no numpy, no kernels)."""
    table = [[0.0] * (n_max + 1) for _ in range(n_max + 1)]
    for n in range(n_max + 1):
        pn = nb_pmf_mp(n, N, mu, dps=30)
        b1 = [math.comb(n, m) * eta1**m * (1 - eta1) ** (n - m) for m in range(n + 1)]
        b2 = [math.comb(n, m) * eta2**m * (1 - eta2) ** (n - m) for m in range(n + 1)]
        for m1 in range(n + 1):
            for m2 in range(n + 1):
                table[m1][m2] += pn * b1[m1] * b2[m2]
    return table


def posterior_fano(N, mu, eta1, eta2, k):
    """Conditional Fano factors from the negative-binomial posterior.

    Given k idler counts, the undetected remainder n - k of a thermal
    photon number with mu modes is negative binomial with shape mu + k and
    per-mode mean b = (1-eta2) (N/mu) / (1 + eta2 N/mu). Returns
    (photon-domain Fano, detected Fano in the signal arm).
    """
    x = N / mu
    b = (1 - eta2) * x / (1 + eta2 * x)
    mean = k + (mu + k) * b
    var = (mu + k) * b * (1 + b)
    f_n = var / mean
    return f_n, eta1 * f_n + (1 - eta1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def record_acceptance():
    def record(label, passed, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip())
    return record
