"""Classical and quantum values of the magic-square and CHSH games, with noise."""

import numpy as np

from nlgqkd.games import (
    apply_depolarizing,
    chsh_game,
    chsh_honest_strategy,
    classical_value,
    classical_value_tripartite,
    msg_game,
    msg_honest_strategy,
    msg_win_prob_closed_form,
    quantum_win_prob,
)

msg, chsh = msg_game(), chsh_game()
print("magic square: classical", classical_value(msg), "tripartite", classical_value_tripartite(msg))
print("CHSH:         classical", classical_value(chsh), "quantum", round(quantum_win_prob(chsh, chsh_honest_strategy()), 6))

print("\n   q    simulated  closed form")
strat = msg_honest_strategy()
for q in np.linspace(0, 0.1, 6):
    w = quantum_win_prob(msg, apply_depolarizing(strat, q))
    print(f"{q:5.2f}  {w:.9f}  {msg_win_prob_closed_form(q):.9f}")
