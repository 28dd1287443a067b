"""CSV ingestion, the calendar-day axis, and holiday gap filling.

Writes a small price CSV containing a one-week exchange closure, loads it,
and shows how gap filling carries the last close across the missing
business days while ordinary weekends stay absent (the numeric time axis
counts them regardless).
"""

import csv
import math
from datetime import date, timedelta
from pathlib import Path

from lpplslik import series

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)
path = OUT / "05_prices.csv"

rows = []
d = date(2015, 1, 5)
price = 100.0
while len(rows) < 40:
    closed = date(2015, 2, 9) <= d <= date(2015, 2, 13)  # fabricated closure
    if d.weekday() < 5 and not closed:
        price *= 1.003
        rows.append((d, price))
    d += timedelta(days=1)
with open(path, "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["date", "close"])
    w.writerows([(d.isoformat(), f"{p:.4f}") for d, p in rows])
print(f"wrote {len(rows)} rows to {path} (closure 2015-02-09 .. 2015-02-13)")

loaded = series.load_csv(path)
print(f"loaded {len(loaded)} observations; log price range "
      f"{loaded.log_prices.min():.3f} .. {loaded.log_prices.max():.3f}")

filled, gaps = series.fill_gaps(loaded, max_gap_days=10)
print(f"after gap filling: {len(filled)} observations")
for g in gaps:
    print(f"  gap {g.start} .. {g.end}: "
          + ("filled with prior close" if g.filled else "too long, reported only"))
print("gap report as JSON:", series.gaps_to_json(gaps))

# weekends contribute to numeric time but never get observations
fri = date(2015, 1, 9)
mon = date(2015, 1, 12)
print(f"numeric time {fri} -> {mon}: "
      f"{filled.time_of(mon) - filled.time_of(fri):.0f} calendar days "
      f"({len([d for d in filled.dates if fri < d < mon])} observations between)")

win = series.window(filled, date(2015, 1, 19), date(2015, 2, 20))
print(f"window [2015-01-19, 2015-02-20] holds {len(win)} observations, "
      f"origin preserved: {win.origin == filled.origin}")
