"""Finite-size key rate of the magic-square protocol against the number of rounds."""

from nlgqkd.games import MSG_OMEGA3
from nlgqkd.keyrate import ProtocolParams, SecurityBudget, optimize_finite_rate, robustness_threshold

budget = SecurityBudget.pedagogical(1e-6, eps_com_pe=1e-2, eps_com_ec=1e-2)
print("      n     l_key/n  feasible")
for k in range(6, 16):
    n = 10**k
    params = ProtocolParams.standard(n, 1.0, eps_com_pe=1e-2, xi=1.1)
    r = optimize_finite_rate((1.0, MSG_OMEGA3), params, budget)
    print(f"  1e{k:<4d}  {r.rate:.5f}  {r.feasible}")

t = robustness_threshold((1.0, MSG_OMEGA3), xi=1.0)
print(f"\nasymptotic rate vanishes at depolarizing noise q* = {t.q_star:.5f}")
