"""Regenerates fixtures/toy_interactions.csv (deterministic)."""
import csv
import random
import sys

N_ITEMS = 60
DAY = 86400
T0 = 1_600_000_000


def main(path):
    rng = random.Random(20240611)
    # Zipf-like popularity over items
    weights = [1.0 / (i + 1) ** 0.9 for i in range(N_ITEMS)]
    rows = []
    for u in range(53):
        uid = f"u{u:03d}"
        # three users fall below the interaction threshold
        n = rng.randint(4, 8) if u >= 50 else rng.randint(12, 36)
        kind = u % 3
        t = T0 + rng.randint(0, 30) * DAY
        start = rng.randrange(N_ITEMS)
        seen = []
        for step in range(n):
            if kind == 0:
                item = rng.choices(range(N_ITEMS), weights=weights)[0]
            elif kind == 1:
                item = (start + step) % N_ITEMS
            else:
                block = (u // 3) % 4
                item = block * 15 + rng.randrange(15)
            seen.append(item)
            rating = rng.randint(1, 5)
            t += rng.randint(1, 3) * DAY + rng.randint(0, DAY - 1)
            rows.append((uid, f"i{item:03d}", t, rating))
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["user_id", "item_id", "timestamp", "rating"])
        w.writerows(rows)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "fixtures/toy_interactions.csv")
