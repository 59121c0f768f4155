"""
Walkthrough: the weighted comparison interval and its isoperimetric profile.

Builds model spaces for a few (K, N) pairs, checks the closed-form anchors,
inverts the cumulative measure, and demonstrates the scaling law that reduces
every K to the normalized K = N - 1 family.
"""

import math

import numpy as np

from rgap import ModelSpace, normalization

print("=" * 72)
print("Model spaces (I_KN, m_KN)")
print("=" * 72)

for K, N in [(1, 2), (2, 3), (0.5, 2.5)]:
    ms = ModelSpace(K, N)
    print(f"\nK={K}, N={N}:")
    print(f"  diameter          = {ms.diameter:.12f}")
    print(f"  normalization     = {ms.c:.12f}")
    print(f"  density at D/2    = {ms.density(ms.diameter / 2):.12f}")
    print(f"  cumulative at D/2 = {ms.cumulative(ms.diameter / 2):.12f}")

print("\nClosed-form anchors:")
print(f"  c(1,2) - 2      = {normalization(1, 2) - 2:.2e}")
print(f"  c(2,3) - pi/2   = {normalization(2, 3) - math.pi / 2:.2e}")
ms12 = ModelSpace(1, 2)
print(f"  r(1/2) - pi/2   = {ms12.radius_for_volume(0.5) - math.pi / 2:.2e}")
print(f"  I(1/2) - 1/2    = {ms12.iso_profile(0.5) - 0.5:.2e}")

# For K=1, N=2 the profile has the closed form sqrt(v (1 - v)).
v = np.linspace(0.05, 0.95, 7)
gap = np.max(np.abs(ms12.iso_profile(v) - np.sqrt(v * (1 - v))))
print(f"\nprofile vs sqrt(v(1-v)) on K=1,N=2: max gap {gap:.2e}")

print("\nInverse identities (round trips):")
x = np.linspace(0, ms12.diameter, 9)
print("  r(C(x)) - x :", np.max(np.abs(ms12.radius_for_volume(ms12.cumulative(x)) - x)))
print("  C(r(v)) - v :", np.max(np.abs(ms12.cumulative(ms12.radius_for_volume(v)) - v)))

print("\nScaling law: profiles of (K, N) and (N-1, N) agree after metric rescale")
for K, N in [(4.0, 3.0), (0.25, 2.0)]:
    a = math.sqrt(K / (N - 1))
    ms = ModelSpace(K, N)
    ref = ModelSpace(N - 1, N)
    worst = np.max(np.abs(ms.iso_profile(v) / a - ref.iso_profile(v)))
    print(f"  K={K}, N={N}: max profile gap {worst:.2e}")
