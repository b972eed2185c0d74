"""Let the initial mass grow and compare u_k(0, 1) with the flat solution phi_inf(1)."""
from plap import PowerLog
from plap.experiments import run_k_limit

for spec in (PowerLog(1.5, 1.0), PowerLog(1.0, 0.5)):
    rep = run_k_limit(p=3.0, spec=spec, ks=(1, 16, 256, 4096))
    print(f"f = s^{spec.alpha:g} ln^{spec.beta:g}(s+1): {rep.metric('classification').value} ({rep.verdict.value})")
    for k, u in rep.tables["ladder"][1]:
        print(f"  k = {int(k):5d}  u_k(0, 1) = {u:.5f}")
