"""Result tables: long-format rows written as CSV or JSON."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

HEADER = ("sweep_param", "method", "metric", "value", "trials", "seed")
RNG_ALGORITHM = "numpy.PCG64 via SeedSequence.spawn"


def _fmt(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "-inf" if v < 0 else "inf"
        return repr(v)
    return str(v)


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, sweep_param, method, metric, value, trials, seed):
        self.rows.append({"sweep_param": sweep_param, "method": method,
                          "metric": metric, "value": float(value),
                          "trials": int(trials), "seed": int(seed)})

    def value(self, sweep_param, method, metric):
        for r in self.rows:
            if (r["method"] == method and r["metric"] == metric
                    and _same(r["sweep_param"], sweep_param)):
                return r["value"]
        raise KeyError((sweep_param, method, metric))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HEADER)
        for r in self.rows:
            w.writerow([_fmt(r[k]) for k in HEADER])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [{k: (_fmt(r[k]) if isinstance(r[k], float)
                     and not math.isfinite(r[k]) else r[k]) for k in HEADER}
                for r in self.rows]
        return json.dumps({"meta": {"rng": RNG_ALGORITHM, **self.meta},
                           "columns": list(HEADER), "rows": rows},
                          indent=1, sort_keys=True) + "\n"

    def write(self, path, fmt=None):
        fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
        text = self.to_json() if fmt == "json" else self.to_csv()
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _same(a, b):
    if isinstance(a, str) or isinstance(b, str):
        return str(a) == str(b)
    return abs(float(a) - float(b)) < 1e-9
