"""Several desired streams and several interference terms.

With two MBS streams the two steering factors can be optimized jointly or
one at a time on half the PBS power each; with several PBS streams every
stream pays for its own steering out of its equal power share.
"""
import numpy as np

from steersim import Antennas, budget_normalized, seeded_drop
from steersim.steering import dis_joint_n2, dis_multi_interference, dis_multi_stream

budget = budget_normalized(15.0, 1.0)

joint, indep = [], []
for k in range(300):
    d = seeded_drop(budget, 11, 0, k, n_streams_mbs=2)
    joint.append(dis_joint_n2(d).se_bits)
    indep.append(dis_multi_interference(d).se_bits)
print(f"two interferences: joint {np.mean(joint):.3f} vs independent {np.mean(indep):.3f} b/s/Hz")
print(f"  joint better on {np.mean(np.array(joint) > np.array(indep) + 1e-12):.0%} of drops")

ant = Antennas(n_t0=4, n_t1=2, n_r0=4)
for m in (1, 2, 3):
    se, rho = [], []
    for k in range(300):
        d = seeded_drop(budget, 11, m, k, ant, n_streams_mbs=1, n_streams_pbs=m)
        res = dis_multi_stream(d)
        se.append(res.se_bits)
        rho.append(res.rho)
    print(f"M={m} streams: sum SE {np.mean(se):.3f} b/s/Hz, mean rho* {np.mean(rho):.3f}")
