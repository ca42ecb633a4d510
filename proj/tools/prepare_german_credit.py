#!/usr/bin/env python3
"""Convert the Statlog German Credit table into CSV + schema for missboopf.

Input: the 21-column labelled CSV (20 attributes plus `creditability`), as
shipped for example with the scorecardpy package. The target column is
dropped; the 20 attributes are typed as 3 continuous, 4 ordinal (small
integer counts/scales) and 13 nominal. Commas inside level labels are
replaced by semicolons because the schema format separates levels by commas.

usage: prepare_german_credit.py germancredit.csv OUT_PREFIX
"""

import csv
import sys

CONTINUOUS = {"duration_in_month", "credit_amount", "age_in_years"}
ORDINAL = {
    "installment_rate_in_percentage_of_disposable_income",
    "present_residence_since",
    "number_of_existing_credits_at_this_bank",
    "number_of_people_being_liable_to_provide_maintenance_for",
}
DROP = {"creditability"}


def main() -> None:
    src, prefix = sys.argv[1], sys.argv[2]
    with open(src, newline="") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], rows[1:]
    keep = [k for k, name in enumerate(header) if name not in DROP]
    clean = [[r[k].replace(",", ";").strip() for k in keep] for r in body]
    names = [header[k] for k in keep]

    schema_lines = []
    for c, name in enumerate(names):
        values = [r[c] for r in clean]
        if name in CONTINUOUS:
            schema_lines.append(f"{name}:continuous")
        elif name in ORDINAL:
            levels = sorted(set(values), key=int)
            schema_lines.append(f"{name}:ordinal:{','.join(levels)}")
        else:
            levels = sorted(set(values))
            schema_lines.append(f"{name}:nominal:{','.join(levels)}")

    with open(prefix + ".csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(names)
        w.writerows(clean)
    with open(prefix + ".schema", "w") as f:
        f.write("\n".join(schema_lines) + "\n")


if __name__ == "__main__":
    main()
