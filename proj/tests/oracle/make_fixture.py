#!/usr/bin/env python3
"""Writes the small hand-checkable fixture: 3 accounts, EUR + USD, 62 days.

The output is frozen into tests/fixtures/small; rerunning reproduces it
byte-for-byte.
"""
import csv
import datetime as dt
import pathlib
import random
import sys

OUT = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).parent.parent / "fixtures" / "small")
FIRST = dt.date(2015, 12, 1)
LAST = dt.date(2016, 1, 31)
ACCOUNTS = [("A1", "C1", "B1", "EUR", "Alpha main"),
            ("A2", "C1", "B2", "USD", "Alpha dollar"),
            ("A3", "C2", "B1", "EUR", "Beta operations")]


def write(name, header, rows):
    with open(OUT / name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20151201)
    write("countries.csv", ["country_code", "name"], [["PT", "Portugal"], ["ES", "Spain"]])
    write("currencies.csv", ["currency_code", "name"], [["EUR", "Euro"], ["USD", "US Dollar"]])
    write("companies.csv", ["company_id", "name", "country_code"],
          [["C1", "Alpha Holding", "PT"], ["C2", "Beta Trading", "ES"]])
    write("banks.csv", ["bank_id", "name", "country_code"],
          [["B1", "Banco Um", "PT"], ["B2", "Banco Dos", "ES"]])
    write("accounts.csv", ["account_id", "company_id", "bank_id", "currency_code", "label"],
          [list(a) for a in ACCOUNTS])
    write("opening_balances.csv", ["account_id", "as_of_date", "amount", "currency_code"],
          [["A1", "2015-12-01", "1000.00", "EUR"], ["A2", "2015-11-30", "500.00", "USD"]])
    write("exchange_rates.csv", ["currency_code", "rate_date", "rate_to_eur"],
          [["USD", "2015-11-30", "0.912345"], ["USD", "2015-12-04", "0.905550"],
           ["USD", "2015-12-18", "0.921000"], ["USD", "2016-01-05", "0.918765"],
           ["USD", "2016-01-20", "0.899999"]])

    days = (LAST - FIRST).days + 1
    rows = []
    for i in range(40):
        acc = ACCOUNTS[i % 3]
        day = FIRST + dt.timedelta(days=rng.randrange(days))
        cents = rng.randrange(-200000, 300001)
        kind = "FORECAST" if rng.random() < 0.3 else "ACTUAL"
        rows.append([acc[0], day.isoformat(), f"{cents / 100:.2f}", acc[3], kind, f"mv{i:02d}"])
    # Pinned rows: a half-cent conversion, a zero amount, a quoted description.
    rows[1] = ["A2", "2015-12-07", "100.00", "USD", "ACTUAL", "fee refund"]
    rows[5] = ["A2", "2015-12-10", "0.00", "USD", "ACTUAL", "zero adjustment"]
    rows[9] = ["A1", "2015-12-15", "-250.50", "EUR", "FORECAST", "Invoice 12, partial"]

    dirty = [
        (7, list(rows[3])),                                                   # DUPLICATE
        (12, ["A3", "2015-12-20", "abc", "EUR", "ACTUAL", "bad amount"]),    # BAD_AMOUNT
        (18, ["A9", "2015-12-21", "10.00", "EUR", "ACTUAL", "who"]),         # UNKNOWN_ACCOUNT
        (25, ["A2", "2015-12-22", "10.00", "EUR", "ACTUAL", "wrong ccy"]),   # CURRENCY_MISMATCH
        (30, ["A1", "2016-02-15", "10.00", "EUR", "ACTUAL", "too late"]),    # DATE_OUT_OF_RANGE
        (36, ["A3", "2016-01-10", "10.00", "EUR", "PLANNED", "bad kind"]),   # BAD_KIND
    ]
    for pos, row in dirty:
        rows.insert(pos, row)
    write("movements.csv", ["account_id", "value_date", "amount", "currency_code", "kind", "description"], rows)
    with open(OUT / "etl.conf", "w") as fh:
        fh.write("# fixture pipeline configuration\ndata_dir = .\nstore = facts.csv\n")


if __name__ == "__main__":
    main()
