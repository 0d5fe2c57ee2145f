"""Typical sets: band census, mass growth, and local typicality.

The typical set at half-width eps holds the sequences whose information
content lies within eps of the entropy.  For the 60/40 coin the set's
mass grows with length under a fixed per-symbol band, the high-probability
all-heads string is never a member, and the locally typical set (every
window in band) can be empty while the global set is not.
"""

from infoband import (IidModel, Sequence, information_content,
                      locally_typical_set, typical_mass_growth, typical_set)

coin10 = IidModel.coin(0.6, 10)
rep = typical_set(coin10, 0.5, 2048)
print(f"L=10, eps=0.5 nats: {rep.member_count}/{rep.support_size} sequences, "
      f"mass {rep.member_mass:.4f}")
print(f"band [{rep.lower:.3f}, {rep.upper:.3f}] around H = {rep.entropy:.3f}")

mode = Sequence.from_text("H" * 10, coin10.vocabulary)
print(f"all-heads information: {information_content(coin10, mode).total:.3f} "
      "(below the band: most probable, least informative)\n")

print("mass under a 0.05 nats/symbol band, by length:")
for length, mass in typical_mass_growth(lambda L: IidModel.coin(0.6, L),
                                        0.05, [5, 10, 15, 20]).items():
    print(f"  L={length:2d}: {mass:.4f}")

print("\nlocal typicality (order-1 windows) on the L=12 coin:")
coin12 = IidModel.coin(0.6, 12)
for eps in (0.1, 0.25):
    members = locally_typical_set(coin12, 1, eps, 10_000)
    globally = typical_set(coin12, eps * 12, 10_000)
    print(f"  eps={eps}: locally typical {len(members)}, "
          f"globally typical {globally.member_count}")
print("A narrow per-window band empties the local set even though the")
print("global band still holds most of the mass: local typicality is the")
print("strictly stronger condition.")
