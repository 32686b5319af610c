"""Independent reference values for the C++ tests.

Closed forms and scipy quadrature on the Gaussian scenarios, plus a numpy
Monte Carlo for treatment shares. Run from the repository root:

    python3 tests/oracles/generate.py > tests/oracle_values.hpp
"""
import math

import numpy as np
from scipy import integrate, optimize, stats

N = stats.norm

# Bundled Gaussian scenario: U0 ~ N(0, 0.5), U1 ~ N(1, 1), U2 ~ N(-1, 1)
# (variances), baseline 1, contrast 2.
MU = {0: 0.0, 1: 1.0, 2: -1.0}
VAR = {0: 0.5, 1: 1.0, 2: 1.0}


def diff(k, i):
    return MU[k] - MU[i], math.sqrt(VAR[k] + VAR[i])


M10, S10 = diff(1, 0)
M12, S12 = diff(1, 2)
RHO = VAR[1] / (S10 * S12)  # corr(U1 - U0, U1 - U2)


def bvn_cdf(a, b, rho):
    s = math.sqrt(1 - rho * rho)
    f = lambda x: N.cdf((a - rho * x) / s) * N.pdf(x)
    return integrate.quad(f, -40, b, epsabs=1e-15, epsrel=1e-13, limit=200)[0]


def FV(q0, q2):
    return bvn_cdf(N.ppf(q0), N.ppf(q2), RHO)


def mean_v_given(q, rho):
    # E[Phi(X) | Y = Phi^-1(q)] for standard normals with correlation rho
    return N.cdf(rho * N.ppf(q) / math.sqrt(2.0 - rho * rho))


def linear_mte(q):
    m0 = mean_v_given(q, RHO)
    yk = 1 + 0.8 * q + 0.6 * m0
    yj = 2 - 1.2 * q + 0.4 * m0
    return yk, yj, yk - yj


def cond_cdf(y, a, b, c, q, noise_sd):
    # Pr(a + b q + c Phi(X0) + eps <= y | V2 = q)
    x = N.ppf(q)
    s = math.sqrt(1 - RHO * RHO)
    f = lambda t: N.cdf((y - a - b * q - c * N.cdf(t)) / noise_sd) * N.pdf((t - RHO * x) / s) / s
    return integrate.quad(f, RHO * x - 12 * s, RHO * x + 12 * s, epsabs=1e-14, epsrel=1e-13)[0]


def cond_quantile(tau, a, b, c, q, noise_sd):
    return optimize.brentq(lambda y: cond_cdf(y, a, b, c, q, noise_sd) - tau, -10, 10, xtol=1e-14)


def k4_values(q):
    # U3 ~ N(0, 0.8); baseline 1, contrast 3.
    var = dict(VAR)
    var[3] = 0.8
    mu = dict(MU)
    mu[3] = 0.0
    s = {i: math.sqrt(var[1] + var[i]) for i in (0, 2, 3)}
    rho = {i: var[1] / (s[i] * s[3]) for i in (0, 2)}
    m = {i: mean_v_given(q, rho[i]) for i in (0, 2)}
    yk = 1 + 0.8 * q + 0.6 * m[0] - 0.3 * m[2]
    yj = 1.5 - q + 0.5 * m[2]
    return yk, yj, yk - yj


def mean_trivial_baseline(q0, q2):
    # E[V2 1{V0 < q0, V2 < q2}]
    s = math.sqrt(1 - RHO * RHO)
    f = lambda v: v * N.cdf((N.ppf(q0) - RHO * N.ppf(v)) / s)
    return integrate.quad(f, 0, q2, epsabs=1e-15, epsrel=1e-13)[0]


def share_contrast(q0, q2):
    # Pr(D = 2) at an instrument value with thresholds (q0, q2), from the
    # utility model directly: R1 = 0, R0 = -F10^-1(q0), R2 = -F12^-1(q2).
    R0 = -(M10 + S10 * N.ppf(q0))
    R2 = -(M12 + S12 * N.ppf(q2))
    sd = {i: math.sqrt(VAR[i]) for i in VAR}
    f = lambda u: (N.pdf((u - MU[2]) / sd[2]) / sd[2]
                   * (1 - N.cdf((u + 0 - R2 - MU[1]) / sd[1]))
                   * (1 - N.cdf((u + R0 - R2 - MU[0]) / sd[0])))
    return integrate.quad(f, -15, 15, epsabs=1e-15, epsrel=1e-13, limit=200)[0]


def logistic_t_cdf(w):
    # U1 ~ t(5, loc 0.5, scale 1), U0 ~ Logistic(0, 0.6): Pr(U1 - U0 <= w)
    f = lambda u: stats.t.cdf(w + u, 5, loc=0.5, scale=1.0) * stats.logistic.pdf(u, 0, 0.6)
    return integrate.quad(f, -60, 60, epsabs=1e-15, epsrel=1e-13, limit=400)[0]


def shares_mc(n=10_000_000, seed=12345):
    rng = np.random.default_rng(seed)
    z = rng.normal(0, math.sqrt(1.5), size=(n, 2))
    u = np.column_stack([rng.normal(MU[i], math.sqrt(VAR[i]), n) for i in range(3)])
    R = np.column_stack([1.2 * z[:, 0], np.zeros(n), 1.2 * z[:, 1]])
    d = np.argmax(R - u, axis=1)
    p = np.array([(d == t).mean() for t in range(3)])
    return p, np.sqrt(p * (1 - p) / n)


def h_population(z0, z2):
    q0 = N.cdf((0 - 1.2 * z0 - M10) / S10)
    q2 = N.cdf((0 - 1.2 * z2 - M12) / S12)
    return FV(q0, q2)


def emit(name, value):
    if isinstance(value, (list, tuple, np.ndarray)):
        body = ", ".join(repr(float(v)) for v in value)
        print(f"inline constexpr double {name}[] = {{{body}}};")
    else:
        print(f"inline constexpr double {name} = {float(value)!r};")


def main():
    print("#pragma once")
    print("// Generated by tests/oracles/generate.py; do not edit.")
    print()
    print("namespace oracle {")
    print()
    emit("gauss_diff_q975", 2 + N.ppf(0.975) * math.sqrt(2))
    emit("FV_points", [0.5, 0.5, 0.3, 0.8, 0.9, 0.2, 0.05, 0.95])
    emit("FV_values", [FV(0.5, 0.5), FV(0.3, 0.8), FV(0.9, 0.2), FV(0.05, 0.95)])
    emit("logistic_t_w", [-2.0, 0.0, 0.5, 1.5, 4.0])
    emit("logistic_t_cdf", [logistic_t_cdf(w) for w in (-2.0, 0.0, 0.5, 1.5, 4.0)])
    # LS vector at u = (0, 0, 0): (F_{U0-U1}(0), F_{U0-U2}(0), F_{U1-U2}(0)).
    emit("ls_at_zero", [N.cdf((0 - (MU[0] - MU[1])) / math.sqrt(VAR[0] + VAR[1])),
                        N.cdf((0 - (MU[0] - MU[2])) / math.sqrt(VAR[0] + VAR[2])),
                        N.cdf((0 - (MU[1] - MU[2])) / math.sqrt(VAR[1] + VAR[2]))])
    grid = [0.1 * i for i in range(1, 10)]
    vals = [linear_mte(q) for q in grid]
    emit("linear_qstar", grid)
    emit("linear_baseline", [v[0] for v in vals])
    emit("linear_contrast", [v[1] for v in vals])
    emit("linear_mte", [v[2] for v in vals])
    k4 = [k4_values(q) for q in grid]
    emit("k4_baseline", [v[0] for v in k4])
    emit("k4_contrast", [v[1] for v in k4])
    emit("k4_mte", [v[2] for v in k4])
    taus = [0.25, 0.5, 0.75]
    emit("qte_tau", taus)
    emit("qte_baseline_q", [cond_quantile(t, 1.0, 0.8, 0.6, 0.5, 0.5) for t in taus])
    emit("qte_contrast_q", [cond_quantile(t, 2.0, -1.2, 0.4, 0.5, 0.5) for t in taus])
    emit("cdf_baseline_y12_q05", cond_cdf(1.2, 1.0, 0.8, 0.6, 0.5, 0.5))
    emit("cdf_baseline_y12_q03", cond_cdf(1.2, 1.0, 0.8, 0.6, 0.3, 0.5))
    emit("trivial_baseline_q09_05", mean_trivial_baseline(0.9, 0.5))
    emit("contrast_share_q07_04", share_contrast(0.7, 0.4))
    p, se = shares_mc()
    emit("figure1_shares", p)
    emit("figure1_shares_se", se)
    hz = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 0), (0, 1), (1, -1), (1, 0), (1, 1)]
    emit("figure1_h_z", [c for z in hz for c in z])
    emit("figure1_h", [h_population(*z) for z in hz])
    print()
    print("} // namespace oracle")


if __name__ == "__main__":
    main()
