"""Tabulate which growth conditions hold for f(s) = s^alpha ln^beta(s+1)."""
import itertools

from plap import PowerLog, Verdict, classify

CFS_WORDS = {Verdict.FINITE: "holds", Verdict.INFINITE: "fails", Verdict.UNDECIDED: "undecided"}

p, N = 3.0, 1
print(f"p = {p}, N = {N}")
print(f"{'alpha':>6} {'beta':>5}  J         K         CFS")
for alpha, beta in itertools.product((0.5, 1.0, 1.5, 2.0, 3.0, 5.0), (0.0, 1.0, 3.5)):
    rep = classify(PowerLog(alpha, beta), p, N, evidence=False)
    print(f"{alpha:6.1f} {beta:5.1f}  {rep.j_finite.value:9} {rep.k_finite.value:9} {CFS_WORDS[rep.cfs_holds]}")
