#!/usr/bin/env python3
"""End-to-end demonstration on a synthetic corpus with a known causal lead.

Generates survey comments whose sentiment leads wage growth by a chosen
number of months, runs the full pipeline with the keyword mock and the
correlation-lexicon baseline, and prints the resulting significance tables.
The planted lead should show up as strong significance at the matching lag.

    python scripts/run_synthetic_experiment.py --lead 2 --months 240
"""

import argparse
import tempfile
from pathlib import Path

from wsi.corpus import MonthKey
from wsi.pipeline import BackendConfig, RunConfig, run
from wsi.report import render_granger_table
from wsi.synthetic import SyntheticSpec, generate_synthetic


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--months", type=int, default=240)
    parser.add_argument("--comments-per-month", type=int, default=200)
    parser.add_argument("--lead", type=int, default=2)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-lag", type=int, default=12)
    parser.add_argument("--workdir", default=None,
                        help="keep artifacts here instead of a temp dir")
    args = parser.parse_args()

    workdir = Path(args.workdir) if args.workdir else Path(tempfile.mkdtemp(prefix="wsi-demo-"))
    print(f"workdir: {workdir}")

    spec = SyntheticSpec(
        months=args.months,
        comments_per_month=args.comments_per_month,
        lead_months=args.lead,
        start=MonthKey(2000, 1),
    )
    generate_synthetic(spec, args.seed, workdir / "data")

    config = RunConfig(
        survey_paths=[str(workdir / "data" / "surveys")],
        wage_path=str(workdir / "data" / "wages.csv"),
        backends=[
            BackendConfig(backend_id="keyword-mock", kind="keyword"),
            BackendConfig(backend_id="lexicon-baseline", kind="lexicon"),
        ],
        max_lag=args.max_lag,
        output_dir=str(workdir / "out"),
        cache_dir=str(workdir / "cache"),
        seed=args.seed,
    )
    result = run(config)

    print(f"\nplanted lead: {args.lead} months; run id {result.bundle.run_id}")
    for (backend, kind), sweep in sorted(result.bundle.sweeps.items()):
        if kind != "standard":
            continue
        print(f"\n== {backend} (standard index) ==")
        print(render_granger_table(sweep, "markdown"))
    for key, info in result.bundle.failures.items():
        print(f"note: {key}: {info['reason']}")
    print(f"artifacts: {result.out_dir}")


if __name__ == "__main__":
    main()
