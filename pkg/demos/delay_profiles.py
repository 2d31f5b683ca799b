"""How a bank of delay lines is assigned its delay values.

Each bank spreads delays 1..Z over its lines, two lines per value, so
doubling the bank doubles the deepest delay it can realize per output
port.  Surplus lines land on the shortest delays.
"""

from fdlsim import build_profile

for m in (0, 1, 2, 5, 8, 12, 32, 64):
    profile = build_profile(m)
    counts = profile.value_counts()
    spread = " ".join(f"{d}x{c}" for d, c in sorted(counts.items()))
    print(f"m={m:3d}: Z={profile.z:3d} max delay={profile.t_max:3d}  "
          f"delay x lines: {spread if spread else '(empty bank)'}")

print("\nfull assignment for m=8 (two lines per value):")
print(" ", build_profile(8).delays)
