"""(A1) and (M) constants for |xi|^2 + |x| |xi|^q on [-1, 1]^2.

For q = 3 the exponent gap q/p matches the Hoelder regularity of the
weight, (A1) holds and the chain converts its constant into an (M)
constant. For q = 3.5 the gap is too large; the violation shows up in
small balls around the zero of the weight, but only for beta close to 1,
since it decays like beta^3.5 r^(-1/2).
"""

from anisorlicz import (Ball, Box, Constant, ConditionConfig, HolderBump, VariableDoublePhase,
                        a1_implies_m_chain, check_A1, check_M)

square = Box((-1.0, -1.0), (1.0, 1.0))
balls = [Ball((0.0, 0.0), 2.0 ** -j) for j in range(1, 13)]
cfg = ConditionConfig(balls=balls)

for q in (3.0, 3.5):
    Phi = VariableDoublePhase(square, 2, Constant(2.0), Constant(q), HolderBump(1.0, 1.0, (0.0, 0.0)))
    a1 = check_A1(Phi, cfg)
    print(f"q = {q}: (A1) beta = {a1.beta}")
    for b, w in sorted(a1.per_beta_witness.items(), reverse=True):
        print(f"  fails at beta={b}: ball radius {w.ball[1]:g}, lhs {w.lhs:.4g} > rhs {w.rhs:.4g}")
    if q == 3.0:
        chain = a1_implies_m_chain(Phi, a1, cfg)
        direct = check_M(Phi, cfg)
        d = chain.derived
        print(f"  chain: beta' = {d['beta_prime']}, final = {d['final']:.6g}; direct (M) beta = {direct.beta}")
