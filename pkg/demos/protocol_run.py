"""One honest run of the spot-checking protocol, then a forced-mismatch hash test."""

import numpy as np

from nlgqkd.games import apply_depolarizing, msg_game, msg_honest_strategy, quantum_win_prob
from nlgqkd.protocol import LinearCode, honest_devices, monte_carlo_correctness, run_protocol
from nlgqkd.keyrate import ProtocolParams

game = msg_game()
strat = apply_depolarizing(msg_honest_strategy(), 0.0)
params = ProtocolParams.standard(5000, quantum_win_prob(game, strat), eps_com_pe=1e-2)
rng = np.random.default_rng(1)
dev_a, dev_b = honest_devices(game, strat, rng)
code = LinearCode.random(16, 10, 2, rng)
result = run_protocol(game, dev_a, dev_b, params, ec=code, seed=1, l_key=64)
t = result
print(f"rounds {t.n}, test rounds {int(t.T.sum())}, failed tests {t.pe_failures} (threshold {t.pe_threshold:.1f})")
print(f"parameter estimation passed: {t.F_PE}, error-correction hashes agree: {t.F_EC}")
if t.K_A is not None:
    print(f"final keys ({t.l_key} bits) identical: {bool(np.array_equal(t.K_A, t.K_B))}")

mc = monte_carlo_correctness(64, 8, 20000, seed=2)
print(f"\nforced mismatch, 8-bit hash: {mc.events}/{mc.trials} passes, "
      f"95% CI [{mc.ci_low:.2e}, {mc.ci_high:.2e}], ideal {2**-8:.2e}")
