"""Finite-horizon LQG gains and a noise-free closed-loop rollout.

Solves the backward recursion for the scalar benchmark (all weights 1), rolls
the loop forward without noise, and checks that the realized cost equals the
initial value x0' S0 x0 predicted by the recursion.
"""

import numpy as np

from macloops import (
    CrmConfig,
    LoopConfig,
    NetworkScenario,
    PlantModel,
    SchedulerPolicy,
    riccati_backward,
    run_episode,
)


def main():
    horizon = 10
    sol = riccati_backward(1.0, 1.0, 1.0, 1.0, 1.0, horizon)
    print("backward value matrices and gains (scalar, all weights 1):")
    for k in range(horizon):
        print(f"  k={k:2d}  S={sol.S[k][0, 0]:.6f}  L={sol.L[k][0, 0]:.6f}")
    print(f"  k={horizon:2d}  S={sol.S[horizon][0, 0]:.6f}")

    plant = PlantModel(A=1.0, B=1.0, Rw=0.0, R0=0.0, x0_mean=[1.0])
    loop = LoopConfig(plant=plant, scheduler=SchedulerPolicy.always_transmit(),
                      horizon=2, Q0=1.0, Q1=1.0, Q2=1.0)
    scn = NetworkScenario(loops=(loop,), crm=CrmConfig(persistence=(1.0,)))
    tr = run_episode(scn, seed=0, episode=0)[0]
    sol2 = riccati_backward(1.0, 1.0, 1.0, 1.0, 1.0, 2)
    predicted = float(np.array([1.0]) @ sol2.S[0] @ np.array([1.0]))
    print("\nnoise-free rollout from x0 = 1 over two steps:")
    print(f"  states   {tr.xs.ravel()}")
    print(f"  inputs   {tr.us.ravel()}")
    print(f"  cost     {tr.j:.12f}")
    print(f"  x0'S0x0  {predicted:.12f}")


if __name__ == "__main__":
    main()
