"""Writes the synthetic 90-day fixture: prices.csv, news.csv, sentiment.csv.

Deterministic for a given Python 3 `random` implementation; the committed
CSVs are the source of truth, rerun only to regenerate them deliberately.
"""

import csv
import datetime as dt
import math
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
N_DAYS = 90
SOURCES = ["DowJones", "WSJ", "Benzinga"]
MODELS = ["GPT2", "FinBERT"]
POSITIVE = ["rally", "beats estimates", "record high", "upgrade"]
NEGATIVE = ["selloff", "misses estimates", "slump", "downgrade"]
NEUTRAL = ["holds steady", "awaits data", "mixed session", "flat open"]


def trading_days(start, n):
    days, d = [], start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


def main():
    rng = random.Random(20240510)
    days = trading_days(dt.date(2024, 1, 2), N_DAYS)

    closes, rows = [], []
    close = 4800.0
    for i, day in enumerate(days):
        ret = 0.0004 + 0.011 * rng.gauss(0, 1) + 0.004 * math.sin(i / 6.0)
        open_ = round(close * (1 + 0.002 * rng.gauss(0, 1)), 2)
        close = round(close * (1 + ret), 2) if i else close
        high = round(max(open_, close) * (1 + 0.004 * rng.random()), 2)
        low = round(min(open_, close) * (1 - 0.004 * rng.random()), 2)
        volume = rng.randint(2_000_000, 6_000_000)
        rows.append([day.isoformat(), f"{open_:.2f}", f"{high:.2f}", f"{low:.2f}", f"{close:.2f}", f"{close:.2f}", volume])
        closes.append(close)

    with open(HERE / "prices.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["date", "open", "high", "low", "close", "adj_close", "volume"])
        w.writerows(rows)

    news, sentiment = [], []
    for i, day in enumerate(days[:-1]):
        nxt = closes[i + 1] / closes[i] - 1
        for source in SOURCES:
            for _ in range(rng.randint(0, 2)):
                hour = rng.choice([7, 9, 11, 13, 15, 16, 18, 21])
                ts = dt.datetime.combine(day, dt.time(hour, rng.randint(0, 59), 0))
                if rng.random() < 0.08:
                    ts += dt.timedelta(days=(5 - day.weekday()) % 7 or 1)
                truth = 1 if nxt > 0.003 else (-1 if nxt < -0.003 else 0)
                words = {1: POSITIVE, -1: NEGATIVE, 0: NEUTRAL}[truth]
                title = f"Stocks {rng.choice(words)} as traders weigh outlook"
                body = f"Markets {rng.choice(words)} on {day.strftime('%B %d, %Y')}.  Analysts comment.  Copyright 2024 {source}."
                if rng.random() < 0.04:
                    title = "Amundi S&P 500 ETF factsheet"
                stamp = ts.strftime("%Y-%m-%d %H:%M:%S")
                news.append([stamp, source, title, body])
                for model in MODELS:
                    hit = 0.7 if model == "GPT2" else 0.6
                    label = truth if rng.random() < hit else rng.choice([-1, 0, 1])
                    sentiment.append([stamp, source, model, label, f"{rng.uniform(0.34, 1.0):.4f}"])

    with open(HERE / "news.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["timestamp_et", "source", "title", "text"])
        w.writerows(news)
    with open(HERE / "sentiment.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["timestamp_et", "source", "model", "label", "score"])
        w.writerows(sentiment)


if __name__ == "__main__":
    main()
