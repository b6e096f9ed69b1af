#!/usr/bin/env python3
"""Brute-force reference values frozen into the C++ test suites.

Written independently of the library: plain loops, math.log, no numpy
quantile helpers. Re-run to regenerate the constants.
"""
import math


def kl(p, q):
    total = 0.0
    for pc, qc in zip(p, q):
        if pc > 0.0:
            total += pc * math.log(pc / qc)
    return total


def order_statistic_quantile(values, frac):
    xs = sorted(values)
    h = (len(xs) - 1) * frac
    lo = math.floor(h)
    hi = math.ceil(h)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


p = (0.5, 0.5)
q = (0.25, 0.75)
kl_pq = kl(p, q)
kl_qp = kl(q, p)
print(f"kl(p,q)  = {kl_pq:.10f}")
print(f"kl(q,p)  = {kl_qp:.10f}")
print(f"kls(p,q) = {kl_pq + kl_qp:.10f}")
print(f"ED one-of-four-zones = {(kl_pq + kl_qp) / 4:.10f}")
print(f"median(1..100) = {order_statistic_quantile(range(1, 101), 0.5)}")

# 2x2 silhouette configuration: pairs {0,1} and {2,3}, within 1, across 10.
d = [[0, 1, 10, 10], [1, 0, 10, 10], [10, 10, 0, 1], [10, 10, 1, 0]]
lab = [0, 0, 1, 1]
s = []
for i in range(4):
    a = sum(d[i][j] for j in range(4) if j != i and lab[j] == lab[i]) / 1
    b = sum(d[i][j] for j in range(4) if lab[j] != lab[i]) / 2
    s.append((b - a) / max(a, b))
print(f"two tight pairs silhouette = {sum(s) / 4}")
